//! Numerical kernels shared by the design and analysis modules.

pub mod jfunc;
pub mod lp;
pub mod mixture;
pub mod quadrature;

pub use jfunc::{j_function, j_inverse, JModel};
pub use lp::{lp_solve, LinearProgram, LpOutcome, LpSolution};
pub use mixture::{gaussian_entropy_bits, mixture_entropy, GaussianMixture};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("quadrature did not converge: estimate {estimate}, error estimate {error_estimate} over {intervals} intervals")]
    Quadrature {
        estimate: f64,
        error_estimate: f64,
        intervals: usize,
    },
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex hit the iteration limit ({0})")]
    IterationLimit(usize),
}
