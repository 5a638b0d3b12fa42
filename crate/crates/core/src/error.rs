use std::fmt;

use thiserror::Error;

/// Pipeline stage reported alongside an error from the wavelength pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Mle,
    Covariance,
    Delta,
    Interval,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Mle => "mle",
            Stage::Covariance => "covariance",
            Stage::Delta => "delta",
            Stage::Interval => "interval",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no detections: every count is zero")]
    NoDetections,

    /// With one layer only the product of absorption and intensity is estimable.
    #[error("not identifiable: a single layer only determines the product p*lambda")]
    NotIdentifiable,

    #[error("score polynomial has no root in (0,1): inflection point y_ip = {y_ip} >= 1")]
    NoInteriorRoot { y_ip: f64 },

    /// All detections sit in the first layer; the likelihood peaks at p = 1.
    #[error("boundary estimate: all detections are in layer 1, likelihood is maximal at p = 1")]
    BoundaryEstimate,

    #[error("root solver failed: {0}")]
    NumericFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular information matrix: {0}")]
    SingularInformation(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::NoDetections => "NO_DETECTIONS",
            Error::NotIdentifiable => "NOT_IDENTIFIABLE",
            Error::NoInteriorRoot { .. } => "NO_INTERIOR_ROOT",
            Error::BoundaryEstimate => "BOUNDARY_ESTIMATE",
            Error::NumericFailure(_) => "NUMERIC_FAILURE",
            Error::Domain(_) => "DOMAIN_ERROR",
            Error::SingularInformation(_) => "SINGULAR_INFORMATION",
            Error::Stage { source, .. } => source.code(),
        }
    }

    /// Stage tag, when the error came out of the wavelength pipeline.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// The error with any stage wrapper removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
