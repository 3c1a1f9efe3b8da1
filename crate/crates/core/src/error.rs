use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Gram-Schmidt residual norm {norm:e} below 1e-12 at term {index}; the family is numerically dependent")]
    DependentBasis { index: usize, norm: f64 },

    #[error("g(k) vanishes at k = {k} (|g| = {modulus:e})")]
    VanishingSource { k: f64, modulus: f64 },

    #[error("forward solve failed at k = {k}: {reason} (relative residual {residual:e})")]
    ForwardSolve { k: f64, residual: f64, reason: String },

    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("reference field has zero norm")]
    ZeroNorm,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attribute an error to a pipeline stage.
    pub fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage { stage, source: Box::new(e) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
