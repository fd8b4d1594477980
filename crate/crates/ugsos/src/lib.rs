//! Sum-of-squares relaxations and rounding for affine unique games.

pub mod approx;
pub mod error;
pub mod graph;
pub mod instance;
pub mod johnson;
pub mod json;
pub mod linalg;
pub mod potential;
pub mod rounding;
pub mod sos;
pub mod verify;

pub use error::{Error, Result};
pub use graph::WeightedGraph;
pub use instance::{Assignment, Edge, UgInstance};
