use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ragged input: row {row} has {got} cells, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },

    #[error("duplicate variable name: {0}")]
    DuplicateName(String),

    #[error("dataset must have at least one variable and one observation")]
    EmptyDataset,

    #[error("cell {row},{col}: cannot parse {value:?} as a number (and it is not the missing token)")]
    BadCell { row: usize, col: usize, value: String },

    #[error("cell {row},{col}: non-finite value {value:?} rejected")]
    NonFinite { row: usize, col: usize, value: String },

    #[error("unknown variable: {0}")]
    UnknownVariable(String),

    #[error("variable index {0} out of range")]
    IndexOutOfRange(usize),

    #[error("quantization needs 1 <= levels <= sample size (levels {levels}, n {n})")]
    BadLevelCount { levels: usize, n: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("level product {0} * {1} overflows the symbol alphabet")]
    LevelOverflow(usize, usize),

    #[error("empty input")]
    EmptyInput,

    #[error("joint table probabilities sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("invalid variable ordering for chain rule")]
    BadPermutation,

    #[error("subsample schedule needs 0 < f1 < f3 <= 1 (got f1={f1}, f3={f3})")]
    BadScheduleFractions { f1: f64, f3: f64 },

    #[error("subsample schedule needs t1 >= 2 (got {0})")]
    BadTrialCount(usize),

    #[error("sample of {n} too small for schedule (smallest subsample {smallest} < {needed} required levels)")]
    SampleTooSmall { n: usize, smallest: usize, needed: usize },

    #[error("degenerate fit: need at least 2 distinct abscissae")]
    DegenerateFit,

    #[error("no quantization level satisfies the shuffle criterion at b=2; lower b_max or increase N")]
    CalibrationFailed,

    #[error("calibration needs at least {min} probes (got {got})")]
    BelowMinimumProbes { got: usize, min: usize },

    #[error("b_max must be at least 2")]
    BadBMax,

    #[error("missing extrapolation for level {0}")]
    MissingLevel(usize),

    #[error("level {b} exceeds the calibrated cap {cap}")]
    LevelAboveCap { b: usize, cap: usize },

    #[error("occupancy guard: smallest subsample {smallest} cannot fill {cells} joint cells")]
    OccupancyGuard { smallest: usize, cells: usize },

    #[error("zero variance in correlation input")]
    ZeroVariance,

    #[error("Pearson correlation of {0} has divergent Gaussian information")]
    Divergent(f64),

    #[error("pair of a variable with itself is undefined")]
    SelfPair,

    #[error("joint sample of {got} below the minimum of {min}")]
    InsufficientJoint { got: usize, min: usize },

    #[error("triplet budget exceeded: group yields {count} triplets, budget {budget}")]
    TripletBudget { count: usize, budget: usize },

    #[error("baseline is empty")]
    EmptyBaseline,

    #[error("invalid group file line {line}: {reason}")]
    BadGroupFile { line: usize, reason: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
