use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("value nesting exceeds the maximum depth of {0}")]
    DepthExceeded(usize),
    #[error("tensor shape extent is not a non-negative integer")]
    InvalidShape,
    #[error("tensor data length {data} does not match shape product {expected}")]
    ShapeDataMismatch { expected: u64, data: usize },
    #[error("tensor carries neither data nor stats")]
    MissingStats,
    #[error("unsupported value: {0}")]
    UnsupportedValue(&'static str),
    #[error("malformed input: {0}")]
    Malformed(&'static str),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("recipe step {step} references step {target}, which is not an earlier step")]
    BadStepRef { step: usize, target: usize },
    #[error("seed corpus is empty")]
    EmptyCorpus,
    #[error("fingerprints were computed against different catalogs")]
    MixedCatalog,
    #[error("unknown property template `{0}`")]
    UnknownTemplate(String),
    #[error("invalid catalog configuration: {0}")]
    InvalidConfig(String),
    #[error("execution history is empty")]
    EmptyHistory,
    #[error("no valid record in history")]
    NoValidRecord,
    #[error("unknown category id {0}")]
    UnknownCategory(usize),
}
