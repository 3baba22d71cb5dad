use thiserror::Error;

pub type Result<T> = std::result::Result<T, SmError>;

#[derive(Debug, Error)]
pub enum SmError {
    /// Model kind and parameters do not describe a supported stochastic measure,
    /// or an operation was asked of a model that cannot provide it.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Arguments fall outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured resource cap would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not reach tolerance {tolerance:e}: estimated error {estimate:e} after {subdivisions} subdivisions")]
    Accuracy {
        tolerance: f64,
        estimate: f64,
        subdivisions: usize,
    },

    /// Malformed input data (files, vectors of inconsistent length, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SmError {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            SmError::InvalidModel(_) => "invalid_model",
            SmError::Domain(_) => "domain",
            SmError::Resource(_) => "resource",
            SmError::Accuracy { .. } => "accuracy",
            SmError::InvalidInput(_) => "invalid_input",
            SmError::Io(_) => "io",
            SmError::Csv(_) => "csv",
            SmError::Json(_) => "json",
        }
    }
}
