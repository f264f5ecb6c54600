use thiserror::Error;

/// Errors raised by the optimization core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("power iteration did not converge after {iterations} iterations (last relative change {residual:e})")]
    PowerIteration { iterations: usize, residual: f64 },
    #[error("singular value decomposition failed")]
    Svd,
    #[error("Frank-Wolfe subsolver hit {iters} iterations with gap {gap:e} > eta {eta:e}")]
    SubsolverMaxIters { iters: usize, gap: f64, eta: f64 },
    #[error("point with nuclear norm {norm} lies outside the ball of radius {radius}")]
    Infeasible { norm: f64, radius: f64 },
    #[error("outer epoch {t}, inner step {k}: {source}")]
    Step {
        t: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, t: usize, k: usize) -> Error {
        Error::Step {
            t,
            k,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
