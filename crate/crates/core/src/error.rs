//! Engine-wide error type.

use thiserror::Error;

use crate::jet::JetError;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Jet(#[from] JetError),

    #[error("degenerate metric at {point:?}: |det| = {det:e}")]
    DegenerateMetric { point: Vec<f64>, det: f64 },

    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),

    #[error("invalid parameter {name}={value} for `{geometry}`")]
    InvalidParameter { geometry: String, name: String, value: f64 },

    #[error("geometries incompatible for product: {0}")]
    ProductMismatch(String),

    #[error("base geometry `{label}` fails the Kähler audit: max residual {residual:e} at {point:?}")]
    NonKahlerBase { label: String, residual: f64, point: Vec<f64> },

    #[error("oracle discrepancy {residual:e} exceeds {limit:e} in {what} at {point:?}")]
    OracleMismatch { what: &'static str, residual: f64, limit: f64, point: Vec<f64> },

    #[error("tensor field declared {declared} slot variances for rank {rank}")]
    UndeclaredVariance { rank: usize, declared: usize },

    #[error("jet order {got} too low: {what} needs order {need}")]
    OrderTooLow { what: &'static str, need: usize, got: usize },

    #[error("no adapted frame with the required sign pattern at {point:?}")]
    FrameNotFound { point: Vec<f64> },

    #[error("Hodge eigenbasis check failed: {0}")]
    StarEigenCheck(String),

    #[error("near-singular chart map: |det dφ| = {0:e}")]
    SingularChartMap(f64),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EngineError>;
