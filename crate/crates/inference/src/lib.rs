//! Gradient-based Bayesian inference core: a reverse-mode expression tape,
//! constraint transforms, distribution families, Gaussian-process
//! primitives, and a No-U-Turn sampler with convergence diagnostics.

pub mod diagnostics;
pub mod dist;
pub mod gp;
pub mod linalg;
pub mod nuts;
pub mod program;
pub mod tape;
pub mod trace;
pub mod transform;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value violates a parameter's domain or a distribution's parameter
    /// constraints.
    #[error("parameter {param}: {msg}")]
    Domain { param: String, msg: String },
    /// A density evaluation produced NaN or +inf.
    #[error("non-finite density involving parameter {param}")]
    NonFinite { param: String },
    /// No finite starting point found within the retry budget.
    #[error("sampler initialization failed for parameter block {param}")]
    Init { param: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Validation(String),
}
