use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("input is rational within the stated precision (finite expansion of length {0})")]
    NonGeneric(usize),
    #[error("enumeration cap exceeded: q = {q} > cap {cap}")]
    EnumerationCapExceeded { q: u64, cap: u64 },
    #[error("quotient {0} is not available (finite quotient list without a periodic tail)")]
    QuotientsExhausted(usize),
    #[error("denominator q_{index} exceeds the integer budget of {budget_bits} bits")]
    DepthOverflow { index: usize, budget_bits: u64 },
    #[error("step count {requested} exceeds the configured budget {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("restricted operator on [{x1}, {x2}] is singular at this energy")]
    Singular { x1: i64, x2: i64 },
    #[error("not an eigenfunction on the interval: relative residual {residual:e} at site {site}")]
    NotAnEigenfunctionLocally { site: i64, residual: f64 },
    #[error("interpolation nodes {0} and {1} have coinciding cosines")]
    DegenerateNodes(usize, usize),
    #[error("scale n = {n} too small: {reason}")]
    ScaleTooSmall { n: usize, reason: String },
    #[error("site {site} needed but the eigenfunction is known only on [{lo}, {hi}]")]
    RangeExceeded { site: i64, lo: i64, hi: i64 },
    #[error("site {k} lies within {distance} < {required} of the resonant lattice")]
    SiteTooResonant { k: i64, distance: f64, required: f64 },
    #[error("degenerate denominator in contraction ratio at j = {0}")]
    DegenerateDenominator(String),
    #[error("insufficient profiles: {0}")]
    InsufficientProfiles(String),
    #[error("no temperate direction: minimized sup {sup:e} exceeds cap {cap:e}")]
    NoTemperateDirection { sup: f64, cap: f64 },
    #[error("fit window too small: {0} points")]
    WindowTooSmall(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
