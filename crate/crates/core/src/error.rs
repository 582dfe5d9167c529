use thiserror::Error;

/// Errors surfaced by the estimation, testing and forecasting pipeline.
#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("non-finite value in series at index {index}")]
    NonFiniteInput { index: usize },

    #[error("volatility recursion overflowed at index {index}")]
    VolatilityOverflow { index: usize },

    #[error("simulated return exceeded representable range at index {index} (partial path of length {index})")]
    SimulationOverflow { index: usize },

    #[error("a0(eta) = 0 encountered; log/inverse undefined (beta = 0 with one-sided alpha)")]
    DegenerateA0,

    #[error("no sign change when bracketing the root for alpha_plus")]
    NoBracket,

    #[error("optimizer failed to converge after {restarts} starts (best projected-gradient norm {pg_norm:.3e})")]
    NoConvergence { restarts: usize, pg_norm: f64 },

    #[error("matrix {name} is numerically singular (condition number {cond:.3e}); null direction {null_dir:?}")]
    SingularMatrix {
        name: &'static str,
        cond: f64,
        null_dir: Vec<f64>,
    },

    #[error("design matrix is rank deficient; null direction {null_dir:?}")]
    RankDeficientDesign { null_dir: Vec<f64> },

    #[error("kernel density estimate at b_tau is below {min:.1e}; covariance unstable")]
    UnstableDensity { min: f64 },

    #[error("zero spread in sample; bandwidth undefined")]
    ZeroSpread,

    #[error("moment E|eta|^{r} undefined for {dist} (requires nu > r)")]
    UndefinedMoment { r: f64, dist: String },

    #[error("sample too short: need at least {need}, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("forecast run had {gaps} fit failures out of {origins} origins (> 5% gaps)")]
    TooManyGaps { gaps: usize, origins: usize },

    #[error("{failed} of {total} replications failed (> 2%); aborting study")]
    TooManyFailures { failed: usize, total: usize },

    #[error("sigma_u is zero; stationarity statistic undefined")]
    ZeroSigmaU,

    #[error("nonpositive variance estimate for test statistic")]
    NonPositiveVariance,

    #[error("csv ingestion: {0}")]
    Csv(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
