use std::fmt;

/// Errors raised anywhere in the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("panel too short: need at least {needed} weeks, got {got}")]
    PanelTooShort { needed: usize, got: usize },

    #[error("unknown disease series `{0}`")]
    UnknownDisease(String),

    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid epidemiological week label `{0}`")]
    InvalidWeek(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("actual value is zero at position {0}; MAPE is undefined")]
    ZeroActual(usize),

    #[error("MASE denominator is zero")]
    ZeroDenominator,

    #[error("loss differential has zero variance")]
    ZeroVarianceDifferential,

    #[error("missing forecasts: {0}")]
    MissingForecasts(String),

    #[error("missing cause-specific forecasts: {0}")]
    MissingCauseForecasts(String),

    #[error("data-generating process is not stationary (spectral radius {0:.4})")]
    NonStationarySpec(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{context}: {source}")]
    Tagged {
        context: String,
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
    /// Wraps the error with a location such as `disease=d01 horizon=3 model=RF`.
    pub fn tagged(self, context: impl fmt::Display) -> Self {
        Error::Tagged {
            context: context.to_string(),
            source: Box::new(self),
        }
    }

    /// Innermost error with all tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Tagged { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for problems with the input data rather than the configuration.
    pub fn is_data_error(&self) -> bool {
        !matches!(self.root(), Error::InvalidConfig(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
