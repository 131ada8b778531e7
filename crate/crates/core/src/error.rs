use thiserror::Error;

/// Errors produced by field sampling, discretization and the solvers.
#[derive(Error, Debug)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({0}, {1}) outside the field window")]
    OutsideWindow(f64, f64),

    #[error("stencil escapes the domain at lattice point ({0}, {1})")]
    Stencil(i64, i64),

    #[error("iteration failed to converge: residual {residual:.3e} after {iters} iterations (tol {tol:.3e})")]
    IterationFailure {
        iters: usize,
        residual: f64,
        tol: f64,
        /// Sup-norm residual history, sampled at the convergence checks.
        history: Vec<f64>,
    },

    #[error("resolution budget exceeded: {0}")]
    Budget(String),

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("precondition not met: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
