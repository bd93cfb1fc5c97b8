use thiserror::Error;

/// Errors raised anywhere in the simulation and analytics stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The result would not fit in an `f64`.
    #[error("overflow in {op}: {detail}")]
    Overflow { op: &'static str, detail: String },

    /// A series or iteration did not reach its tolerance.
    #[error("{op} did not converge: {detail}")]
    NonConvergence { op: &'static str, detail: String },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature failed: estimated error {abs_error:e} above tolerance {tolerance:e}")]
    Quadrature { abs_error: f64, tolerance: f64 },

    /// The circulant embedding of a covariance had a significantly negative eigenvalue.
    #[error("circulant embedding failed: eigenvalue {eigenvalue:e} at index {index}")]
    Embedding { index: usize, eigenvalue: f64 },

    /// A central aggregation bin had too few paths to estimate a slope.
    #[error("bin {bin} holds {count} paths, need at least {required}")]
    InsufficientBin { bin: usize, count: usize, required: usize },

    /// Invalid experiment or model configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Failure inside a single Monte-Carlo path.
    #[error("path {path}: {source}")]
    Path {
        path: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn at_path(self, path: usize) -> Self {
        match self {
            e @ Error::Path { .. } => e,
            e => Error::Path {
                path,
                source: Box::new(e),
            },
        }
    }
}
