use thiserror::Error;

/// Every failure the toolkit can report.
///
/// Row and segment indices are 1-based, matching how a person reads a CSV
/// file or a corpus line.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,
    #[error("duplicate column name `{0}`")]
    DuplicateColumnName(String),
    #[error("column name must be non-empty (column {0})")]
    EmptyColumnName(usize),
    #[error("row {0} has the wrong number of cells")]
    RaggedRow(usize),
    #[error("missing cell at row {row}, column `{column}`")]
    MissingCell { row: usize, column: String },
    #[error("cell `{value}` in column `{column}` is not a finite number")]
    UnparseableNumeric { column: String, value: String },
    #[error("value `{value}` in column `{column}` contains a reserved token")]
    ReservedTokenInValue { column: String, value: String },
    #[error("column name `{0}` contains a reserved token")]
    ReservedTokenInName(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column index {0} out of range")]
    InvalidColumn(usize),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("json error: {0}")]
    Json(String),

    #[error("table has fewer than two rows; every dependency holds vacuously")]
    DegenerateTable,
    #[error("invalid discovery parameters: {0}")]
    InvalidParameter(String),
    #[error("functional dependency has overlapping sides: {0}")]
    OverlappingLhsRhs(String),

    #[error("too many columns for exhaustive search: {0} (max {1})")]
    TooManyColumns(usize, usize),

    #[error("malformed segment {0}")]
    MalformedSegment(usize),
    #[error("attribute `{0}` appears more than once")]
    DuplicateAttribute(String),
    #[error("attribute `{0}` is missing")]
    MissingAttribute(String),
    #[error("value for numeric attribute `{0}` does not parse")]
    NumericParseFailure(String),

    #[error("model is not fitted")]
    NotFitted,
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("table is empty")]
    EmptyTable,
    #[error("too few rows: {0}")]
    TooFewRows(String),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Stable machine-readable name for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::DuplicateColumnName(_) => "DuplicateColumnName",
            Error::EmptyColumnName(_) => "EmptyColumnName",
            Error::RaggedRow(_) => "RaggedRow",
            Error::MissingCell { .. } => "MissingCell",
            Error::UnparseableNumeric { .. } => "UnparseableNumeric",
            Error::ReservedTokenInValue { .. } => "ReservedTokenInValue",
            Error::ReservedTokenInName(_) => "ReservedTokenInName",
            Error::UnknownColumn(_) => "UnknownColumn",
            Error::InvalidColumn(_) => "InvalidColumn",
            Error::InvalidPermutation(_) => "InvalidPermutation",
            Error::Csv(_) => "Csv",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::DegenerateTable => "DegenerateTable",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::OverlappingLhsRhs(_) => "OverlappingLhsRhs",
            Error::TooManyColumns(..) => "TooManyColumns",
            Error::MalformedSegment(_) => "MalformedSegment",
            Error::DuplicateAttribute(_) => "DuplicateAttribute",
            Error::MissingAttribute(_) => "MissingAttribute",
            Error::NumericParseFailure(_) => "NumericParseFailure",
            Error::NotFitted => "NotFitted",
            Error::InsufficientData(_) => "InsufficientData",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::InvalidRule(_) => "InvalidRule",
            Error::KindMismatch(_) => "KindMismatch",
            Error::EmptyTable => "EmptyTable",
            Error::TooFewRows(_) => "TooFewRows",
            Error::InvalidSpec(_) => "InvalidSpec",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
