use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("period mismatch: {a} vs {b}")]
    PeriodMismatch { a: f64, b: f64 },
    #[error("bandwidth {bandwidth} exceeds cap {cap}")]
    BandwidthExceeded { bandwidth: i64, cap: i64 },
    #[error("constant-order matrix is not diagonal")]
    NotDiagonal,
    #[error("order {requested} requested but only {available} perturbation terms given")]
    OrderUnavailable { requested: usize, available: usize },
    #[error("vanishing denominator at entry ({k},{l}), frequency {m}")]
    DegenerateDenominator { k: usize, l: usize, m: i64 },
    #[error("pair ({k},{l}) does not lie in one multiplicity class")]
    PairNotDegenerate { k: usize, l: usize },
    #[error("index set is not a multiple class")]
    NotMultiple,
    #[error("index set is not a multiplicity class")]
    NotAClass,
    #[error("first-order modulation has a constant Fourier part")]
    ConstantModulationPresent,
    #[error("constant-order system is degenerate: {0}")]
    DegenerateConstantSystem(String),
    #[error("modulation series do not share the period")]
    SeriesPeriodMismatch,
    #[error("material parameter 1 + eps*{which} is not positive at t = {t}")]
    NonPositiveMaterialParameter { which: String, t: f64 },
    #[error("frequency ratio {ratio} lies within tolerance of {p}/{q}")]
    DegeneracyCheckFailed { ratio: f64, p: i64, q: i64 },
    #[error("step count {0} is too small or odd (need even and >= 64)")]
    StepCountTooSmall(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
