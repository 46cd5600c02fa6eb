use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Numerical failure modes are first-class variants: callers are expected to
/// match on them (the harness turns them into sweep row statuses) rather
/// than fish through strings.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {name} = {value} outside its valid range")]
    InvalidParam { name: &'static str, value: f64 },

    #[error("grid size {grid} is not a power of two")]
    GridNotPowerOfTwo { grid: usize },

    #[error("signal support of {len} samples does not fit a grid of {grid} bins")]
    SignalTooLongForGrid { len: usize, grid: usize },

    #[error("requested window of {len} samples exceeds the grid period {grid}")]
    WindowExceedsGrid { len: usize, grid: usize },

    #[error("no arc width in the halving schedule keeps the residual within budget")]
    NoFeasibleDelta,

    #[error("transfer evaluated at a pole of the kernel family (|z + alpha| = {dist:e})")]
    PoleAtZ { dist: f64 },

    #[error("kernel taps did not stabilize below grid cap {cap} (gamma = {gamma}); \
             the family is too heavy-tailed for time-domain truncation at this gamma")]
    GridCapExceeded { gamma: f64, cap: usize },

    #[error("gap-masked synthesis needs a conjugation-symmetric arc (center 0 or pi), \
             got center {center}")]
    AsymmetricMask { center: f64 },

    #[error("kernel taps overflowed the float range (gamma = {gamma})")]
    NonFiniteTaps { gamma: f64 },

    #[error("pattern holds {available} usable samples at or below the anchor, {needed} requested")]
    InsufficientObservations { needed: usize, available: usize },

    #[error("compressed index {k} outside the materialized enumeration range")]
    RangeNotMaterialized { k: i64 },

    #[error("even exponent {exponent} leaves the one-sided lattice; \
             enable reflection or use an odd exponent")]
    EvenPowerNeedsReflection { exponent: u32 },

    #[error("target {t} is an observed position; targets must be disjoint from the pattern")]
    TargetObserved { t: i64 },

    #[error("target {t} is not reachable under this pattern case")]
    TargetOutOfCase { t: i64 },

    #[error("pattern is finite in both directions and admits no prediction case")]
    PatternNotPredictive,

    #[error("component frequency {omega} falls inside the configured gap arc")]
    FrequencyInGap { omega: f64 },

    #[error("empty {what}")]
    Empty { what: &'static str },

    #[error("malformed record at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
