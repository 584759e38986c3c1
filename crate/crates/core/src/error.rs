//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension {0} is outside the supported range")]
    DimensionOutOfRange(usize),

    #[error("spacing {spacing} is too coarse for radius {radius}")]
    SpacingTooCoarse { spacing: f64, radius: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field belongs to a different domain")]
    DomainMismatch,

    #[error("non-finite value produced at node {node}")]
    NonFinite { node: usize },

    #[error("shift {shift} is not below the first eigenvalue bound {lambda1}")]
    IndefiniteShift { shift: f64, lambda1: f64 },

    #[error("one-sided difference quotients diverge at t = {t}")]
    NonLipschitz { t: f64 },

    #[error("eigen iteration stopped after {iterations} steps, best Rayleigh quotient {best}, residual {residual}")]
    EigenNotConverged {
        iterations: usize,
        best: f64,
        residual: f64,
    },

    #[error("linear solve stopped after {iterations} steps with relative residual {residual}")]
    SolveNotConverged { iterations: usize, residual: f64 },

    #[error("Newton pre-solve failed: {0}")]
    NewtonFailed(String),

    #[error("monotonicity violated (epsilon #{eps_index}, step {step}) at node {node} by {magnitude:e}")]
    MonotonicityViolation {
        eps_index: usize,
        step: usize,
        node: usize,
        magnitude: f64,
    },

    #[error("input is unstable (lambda1 = {lambda1}); the inequality hypothesis fails")]
    UnstableInput {
        lambda1: f64,
        report: Box<crate::estimates::EstimateReport>,
    },

    #[error("spacing {spacing} too coarse to excise the origin inside radius {radius}")]
    OriginResolution { spacing: f64, radius: f64 },

    #[error("oscillation {oscillation:e} below tolerance: field is numerically constant")]
    DegenerateFit { oscillation: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown series {0}")]
    UnknownSeries(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Stable machine-readable code written into reports.
    pub fn code(&self) -> &'static str {
        match self {
            LabError::DimensionOutOfRange(_) => "dimension_out_of_range",
            LabError::SpacingTooCoarse { .. } => "spacing_too_coarse",
            LabError::InvalidParameter(_) => "invalid_parameter",
            LabError::DomainMismatch => "domain_mismatch",
            LabError::NonFinite { .. } => "non_finite",
            LabError::IndefiniteShift { .. } => "indefinite_shift",
            LabError::NonLipschitz { .. } => "non_lipschitz",
            LabError::EigenNotConverged { .. } => "eigen_not_converged",
            LabError::SolveNotConverged { .. } => "solve_not_converged",
            LabError::NewtonFailed(_) => "newton_failed",
            LabError::MonotonicityViolation { .. } => "monotonicity_violation",
            LabError::UnstableInput { .. } => "unstable_input",
            LabError::OriginResolution { .. } => "origin_resolution",
            LabError::DegenerateFit { .. } => "degenerate_fit",
            LabError::Parse(_) => "parse",
            LabError::UnknownSeries(_) => "unknown_series",
            LabError::Io(_) => "io",
            LabError::Json(_) => "json",
        }
    }
}
