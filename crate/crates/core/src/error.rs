use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("table of {cells} cells exceeds cap of {cap}")]
    TableTooLarge { cells: f64, cap: f64 },
    #[error("conditioning space of {size} configurations exceeds cap of {cap}")]
    ConditioningSpaceTooLarge { size: f64, cap: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable index {0} out of range")]
    VariableOutOfRange(usize),
    #[error("value {value} out of domain for variable `{var}` (cardinality {cardinality})")]
    ValueOutOfDomain { var: String, value: usize, cardinality: usize },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("variable sets overlap: {0}")]
    Overlap(String),
    #[error("distribution is not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("conditioning event has zero probability and no smoothing is active")]
    ZeroSupport,
    #[error("class value {0} has no observations and smoothing is disabled")]
    EmptyClass(usize),
    #[error("invalid class subset: {0}")]
    InvalidClassSubset(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("arc reversal would create a cycle: {0}")]
    WouldCreateCycle(String),
    #[error("network contains a cycle")]
    Cycle,
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("posterior undefined: every class has zero joint probability")]
    UndefinedPosterior,
    #[error("no class variable in {0}")]
    NoClassVariable(String),
    #[error("counts for family {0:?} are not available from pairwise statistics")]
    FamilyUnavailable(Vec<usize>),
    #[error("oracle supports {min}..={max} variables, got {got}")]
    OracleSize { got: usize, min: usize, max: usize },
    #[error("unsupported model file version {0}")]
    Version(u32),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors raised by a size cap, checked before any allocation.
    pub fn is_size_cap(&self) -> bool {
        matches!(
            self,
            Error::TableTooLarge { .. } | Error::ConditioningSpaceTooLarge { .. } | Error::OracleSize { .. }
        )
    }
}
