use crate::integrator::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the solvers can report.
///
/// Variant names double as the stable error names printed by the CLI and
/// mapped to error codes by the C interface.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid action parameters: {0}")]
    InvalidParams(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("adaptive step fell below {min_step:e} at x = {x}")]
    StepUnderflow { x: f64, min_step: f64 },

    #[error("solution escaped |r| > {bound} at x = {x}")]
    Diverged {
        x: f64,
        bound: f64,
        /// The run up to the escape, for solvers working in `x`.
        partial: Option<Box<Trajectory>>,
    },

    #[error("trajectory reaches |x| = {reached}, needs {required}")]
    InsufficientRange { reached: f64, required: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("no sign change of L on [{lo}, {hi}] (L = {l_lo:e}, {l_hi:e})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        l_lo: f64,
        l_hi: f64,
    },

    #[error("seed velocity {v} has L = {l:e} >= 0")]
    SeedNotNegative { v: f64, l: f64 },

    #[error("not a solution: {0}")]
    NotASolution(String),

    #[error("trajectory domain [{x_min}, {x_max}] is not symmetric about 0")]
    AsymmetricDomain { x_min: f64, x_max: f64 },

    #[error("warping profile degenerates at t = {t}: {reason}")]
    ProfileSingular { t: f64, reason: String },

    #[error("r' vanishes at t = {t} before the horizon")]
    MonotonicityLost { t: f64 },

    #[error("C2 join at epsilon failed (mismatch {mismatch:e})")]
    JoinMismatch { mismatch: f64 },

    #[error("|r'| = {rdot:e} below 1e-12 at t = {t}")]
    DerivativeVanishes { t: f64, rdot: f64 },

    #[error("split weights sum to {sum}, expected 1")]
    SplitWeightsInvalid { sum: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, e.g. `"NoSignChange"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::Domain(_) => "Domain",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::Diverged { .. } => "Diverged",
            Error::InsufficientRange { .. } => "InsufficientRange",
            Error::Inconclusive(_) => "Inconclusive",
            Error::NoSignChange { .. } => "NoSignChange",
            Error::SeedNotNegative { .. } => "SeedNotNegative",
            Error::NotASolution(_) => "NotASolution",
            Error::AsymmetricDomain { .. } => "AsymmetricDomain",
            Error::ProfileSingular { .. } => "ProfileSingular",
            Error::MonotonicityLost { .. } => "MonotonicityLost",
            Error::JoinMismatch { .. } => "JoinMismatch",
            Error::DerivativeVanishes { .. } => "DerivativeVanishes",
            Error::SplitWeightsInvalid { .. } => "SplitWeightsInvalid",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::Config(_) | Error::Domain(_) | Error::SplitWeightsInvalid { .. }
        )
    }
}
