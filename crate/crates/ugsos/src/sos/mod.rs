//! Moment relaxations, their solver, and the pseudodistribution calculus.

mod fourier;
pub mod io;
pub mod monomial;
pub mod poly;
pub mod pseudo;
pub mod relax;
pub mod solver;
pub mod validate;

pub use monomial::{monomials_up_to, Monomial, Var};
pub use poly::Poly;
pub use pseudo::{Distribution, PseudoExpectation, COND_FLOOR};
pub use relax::{build_relaxation, LinearConstraint, SdpProblem};
pub use solver::{solve_sdp, solve_sdp_dense, solve_sdp_with, SdpSolution, SolverOptions};
pub use validate::{validate, ValidationReport};
