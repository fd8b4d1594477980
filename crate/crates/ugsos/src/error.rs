use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("size cap exceeded: {what} = {size} (cap {cap})")]
    Size { what: String, size: u128, cap: u128 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degree error: required {required}, available {available}")]
    Degree { required: usize, available: usize },
    #[error("conditioning on an event of pseudo-probability {0:e}")]
    NullEvent(f64),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn size(what: impl Into<String>, size: impl TryInto<u128>, cap: impl TryInto<u128>) -> Self {
        Error::Size {
            what: what.into(),
            size: size.try_into().unwrap_or(u128::MAX),
            cap: cap.try_into().unwrap_or(u128::MAX),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
