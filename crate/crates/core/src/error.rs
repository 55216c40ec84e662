use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chart point {point:?} is outside the chart domain: {reason}")]
    ChartDomain { point: Vec<f64>, reason: String },

    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient `{coefficient}` degenerates at t = {t}")]
    DegenerateCoefficient { coefficient: String, t: f64 },

    #[error("coefficient condition `{condition}` violated at t = {t} (value {value})")]
    CoefficientCondition {
        condition: String,
        t: f64,
        value: f64,
    },

    #[error("energy density t = {t} exceeds the validated range t_max = {t_max}")]
    Range { t: f64, t_max: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("singular matrix")]
    Singular,

    #[error("invalid space form: {0}")]
    InvalidModel(String),

    #[error("sampling failed: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;
