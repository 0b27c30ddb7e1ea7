use thiserror::Error;

use crate::flow::Termination;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("point {point:?} lies outside the chart domain")]
    Domain { point: Vec<f64> },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("trajectory truncated at parameter {parameter} ({reason:?})")]
    Truncated { parameter: f64, reason: Termination },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("geodesic classification uncertain: {0}")]
    ClassificationUncertain(String),

    #[error("distance uncertain: best bound {best} in [{lower}, {upper}]")]
    DistanceUncertain { lower: f64, upper: f64, best: f64 },

    #[error("causal verdict uncertain: margin in [{margin_low}, {margin_high}]")]
    CausalUncertain { margin_low: f64, margin_high: f64 },

    #[error("covector is not future null (energy {energy:e})")]
    NotNull { energy: f64 },

    #[error("class comparison undecidable: traces truncated before approach")]
    UndecidableByTruncation,

    #[error("grid resolution error: {0}")]
    Resolution(String),

    #[error("closedness protocol error: {0}")]
    Protocol(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("frame error: {0}")]
    Frame(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GeoError>;
