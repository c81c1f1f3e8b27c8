use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,
    #[error("population must be positive")]
    NonPositivePopulation,
    #[error("dates must increase by exactly one day (break at index {index})")]
    NonContiguousDates { index: usize },
    #[error("invalid case count {value} at index {index}")]
    InvalidCaseCount { index: usize, value: f64 },
    #[error("MF must be ≥ 1 (got {0})")]
    MfBelowOne(f64),
    #[error("MF schedule needs a horizon of at least 2 days (got {0})")]
    HorizonTooShort(usize),
    #[error("length mismatch for {what}: {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("per-capita cases exceed population; check MF/population (c = {c} at index {index})")]
    CasesExceedPopulation { index: usize, c: f64 },
    #[error("gamma must lie in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("cumulative cases decreased at index {0}")]
    CumulativeDecreased(usize),
    #[error("region {0} has no positive case count")]
    NoOutbreak(String),
    #[error("unknown covariate column {0}")]
    UnknownCovariate(String),
    #[error("empty panel")]
    EmptyPanel,
    #[error("region {0} has fewer than 2 observations")]
    RegionTooShort(String),
    #[error("duplicate observation for region {region} on day {day}")]
    DuplicateObservation { region: String, day: i32 },
    #[error("non-finite value in panel column {0}")]
    NonFinite(&'static str),
    #[error("rank deficient design, collinear columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("zero residual degrees of freedom")]
    NoDegreesOfFreedom,
    #[error("invalid threshold grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;
