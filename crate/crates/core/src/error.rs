use thiserror::Error;

/// Errors raised by the thermal-state computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Downward quench evaluated past the point where b(β)² vanishes.
    #[error("downward quench: beta = {beta} is beyond the admissible limit beta* = {beta_star}")]
    BeyondCrossing { beta: f64, beta_star: f64 },

    #[error("inverse temperature {beta} is below the floor {floor}")]
    BetaFloor { beta: f64, floor: f64 },

    #[error("overflow guard: {0}")]
    Overflow(String),

    #[error("kernel has a continuous spectrum (a1 + a2 <= 2|b|)")]
    ContinuousSpectrum,

    #[error("kernel does not factorize into two single-party problems")]
    NonFactorizable,

    #[error("marginal integral diverges (coefficient {0} <= 0)")]
    DivergentMarginal(f64),

    #[error("caustic: sin Gamma vanishes at t = {t}; nearest caustic time is {nearest}")]
    Caustic { t: f64, nearest: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("non-positive frequency {omega} at t = {t}")]
    NonPositiveFrequency { t: f64, omega: f64 },

    #[error("index {index} exceeds the supported bound {max}")]
    IndexBound { index: usize, max: usize },

    #[error("root not bracketed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Domain,
    Numerical,
}

impl Error {
    /// Short stable tag written into row flags.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::BeyondCrossing { .. } => "beyond_crossing",
            Error::BetaFloor { .. } => "beta_floor",
            Error::Overflow(_) => "overflow",
            Error::ContinuousSpectrum => "continuous_spectrum",
            Error::NonFactorizable => "non_factorizable",
            Error::DivergentMarginal(_) => "divergent_marginal",
            Error::Caustic { .. } => "caustic",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::NonPositiveFrequency { .. } => "non_positive_frequency",
            Error::IndexBound { .. } => "index_bound",
            Error::Bracket { .. } => "bracket",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Io(_) | Error::InvalidParameter(_) => ErrorClass::Config,
            Error::StepUnderflow { .. } | Error::Bracket { .. } | Error::Numerical(_) => ErrorClass::Numerical,
            _ => ErrorClass::Domain,
        }
    }
}
