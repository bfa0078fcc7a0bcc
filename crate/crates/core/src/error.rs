use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {0} is not in the open unit interval")]
    NotInUnitInterval(String),
    #[error("precision exhausted: only {certified} of {requested} digits can be certified")]
    PrecisionExhausted { certified: usize, requested: usize },
    #[error("continued fraction too short: need a denominator above {needed}, have depth {depth}")]
    InsufficientDepth { needed: String, depth: usize },
    #[error("no index satisfies the threshold {0}")]
    EmptyResult(f64),
    #[error("roof description has non-finite variation")]
    NonfiniteVariation,
    #[error("jump is zero; use the smooth pathway")]
    ZeroJump,
    #[error("roof is not positive: certified infimum {0}")]
    NonPositiveRoof(f64),
    #[error("frequency is rational; flows need an irrational rotation")]
    RationalFrequency,
    #[error("hitting count would exceed the cap {0}")]
    HorizonOverflow(u64),
    #[error("flow point height {height} outside [0, {roof}) by more than the clamp slack")]
    OutsideFiber { height: f64, roof: f64 },
    #[error("arc length {length} is not below 1/(6 q'_n) = {limit}")]
    ArcTooWide { length: f64, limit: f64 },
    #[error("epsilon {eps} exceeds the admissible cap {cap}")]
    EpsilonTooLarge { eps: f64, cap: f64 },
    #[error("scale index {0} unavailable: {1}")]
    ScaleUnavailable(usize, String),
    #[error("no subcase guard matched: {0}")]
    CaseFallthrough(String),
    #[error("jump must be zero for the Fourier solve (got {0})")]
    NonzeroJump(f64),
    #[error("mean must be zero for the Fourier solve (got {0})")]
    NonzeroMean(f64),
    #[error("small divisor at harmonic {k} below certification threshold ({divisor:e})")]
    SmallDivisorUnderflow { k: u32, divisor: f64 },
    #[error("roof has a smooth part that is not exactly representable")]
    NotExactlyRepresentable,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
