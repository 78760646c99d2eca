use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid field parameters: {0}")]
    Field(String),
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("size guard exceeded: {what} = {size} > {limit}")]
    Guard { what: &'static str, size: u128, limit: u128 },
    #[error("invalid polynomial: {0}")]
    Poly(String),
    #[error("malformed answer: {0}")]
    Answer(String),
    #[error("invalid strategy: {0}")]
    Strategy(String),
    #[error("invalid measurement: {0}")]
    Measurement(String),
    #[error("non-symmetric state (swap residual {0:.3e})")]
    NonSymmetric(f64),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    /// Innermost error, past any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Attaches a pipeline stage name to errors.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e) })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Fails with [`Error::Guard`] when `size > limit`.
pub(crate) fn guard(what: &'static str, size: u128, limit: u128) -> Result<()> {
    if size > limit {
        Err(Error::Guard { what, size, limit })
    } else {
        Ok(())
    }
}

/// `base^exp` saturating at `u128::MAX`.
pub(crate) fn sat_pow(base: u128, exp: u128) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}
