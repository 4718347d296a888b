use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration has no colors")]
    EmptyConfiguration,
    #[error("configuration has zero nodes")]
    ZeroNodes,
    #[error("count at index {0} is negative")]
    NegativeCount(usize),
    #[error("node count overflows 64 bits")]
    CountOverflow,
    #[error("color {color} is out of range for k={k}")]
    ColorOutOfRange { color: u32, k: usize },
    #[error("maximum is not unique; the decomposition needs a single majority color")]
    TiedMaximum,
    #[error("color {0} is not a majority color")]
    NotMajority(u32),
    #[error("colors {0:?} are not pairwise distinct")]
    NotDistinct([u32; 3]),
    #[error("k={k} exceeds the enumeration cap of {cap}")]
    KTooLarge { k: usize, cap: usize },
    #[error("{count} sample multisets exceed the enumeration cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },
    #[error("{count} states exceed the chain cap of {cap}")]
    ChainCap { count: u128, cap: u128 },
    #[error("rule is not evaluable on two colors")]
    NotTwoColor,
    #[error("h must be at least 1")]
    InvalidH,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rule table parse error on line {line}: {msg}")]
    RuleParse { line: usize, msg: String },
    #[error("no exact pick distribution available for this dynamics")]
    NoExactDistribution,
    #[error("adversary hook violated its budget: moved {moved} > {budget} or changed n")]
    AdversaryBudget { moved: u64, budget: u64 },
    #[error("absorption unreachable from state {0}")]
    UnreachableAbsorption(usize),
    #[error("linear system is singular")]
    Singular,
    #[error("state {0:?} is not in the chain")]
    UnknownState(Vec<u64>),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("CSV error: {0}")]
    Csv(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
