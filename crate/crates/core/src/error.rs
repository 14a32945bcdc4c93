use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state is not normalized: norm^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state has no excited population, no photon can be emitted")]
    NoEmission,

    #[error("time step A*dt = {0} outside the validity window (0, 0.05]")]
    StepOutOfWindow(f64),

    #[error("steady-state integration did not converge after {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },

    #[error("negative density {value:e} at theta = {theta}, phi = {phi}")]
    NegativeDensity { value: f64, theta: f64, phi: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cut out of range: {0}")]
    BadCut(String),

    #[error("not enough fringe extrema along the cut ({found} found, {needed} needed)")]
    InsufficientExtrema { found: usize, needed: usize },

    #[error("map has zero total weight")]
    EmptyMap,

    #[error("observation point coincides with a source")]
    PointAtSource,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
