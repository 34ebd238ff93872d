use crate::model::RowId;
use crate::value::ErrorCode;

/// Rejected engine operations. Rejections never change the workbook.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("table `{0}` already exists")]
    DuplicateTable(String),
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("a table needs at least one level")]
    NoLevels,
    #[error("level name `{0}` is used twice")]
    DuplicateLevel(String),
    #[error("invalid name `{0}`: names must be non-empty and may not contain `]`")]
    InvalidName(String),
    #[error("field `{table}.{field}` already exists")]
    DuplicateField { table: String, field: String },
    #[error("unknown field `{table}.{field}`")]
    UnknownField { table: String, field: String },
    #[error("level {level} is out of range for `{table}` (depth {depth})")]
    LevelOutOfRange {
        table: String,
        level: usize,
        depth: usize,
    },
    #[error("no row {row} in `{table}`")]
    UnknownRow { table: String, row: RowId },
    #[error("a row at level {level} of `{table}` needs a parent at level {expected}")]
    ParentLevel {
        table: String,
        level: usize,
        expected: String,
    },
    #[error("index {index} is past the end of {len} siblings")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("level {level} of `{table}` is borrowed; its rows are managed by the borrow")]
    BorrowedLevel { table: String, level: usize },
    #[error("`{table}.{field}` is a {kind} field; its cells are not writable")]
    MachineOwned {
        table: String,
        field: String,
        kind: &'static str,
    },
    #[error("`{table}.{field}` belongs to level {field_level}, row {row} is at level {row_level}")]
    LevelMismatch {
        table: String,
        field: String,
        row: RowId,
        field_level: usize,
        row_level: usize,
    },
    #[error("error values cannot be entered; got {0}")]
    ErrorLiteral(ErrorCode),
    #[error("`{table}.{field}` is not a formula field")]
    NotFormula { table: String, field: String },
    #[error("invalid borrow into `{table}.{field}`: {reason}")]
    InvalidBorrow {
        table: String,
        field: String,
        reason: String,
    },
    #[error("borrowing `{source_table}` into `{target}` would create a borrow cycle")]
    BorrowCycle { target: String, source_table: String },
    #[error("invalid link from `{table}.{field}`: {reason}")]
    InvalidLink {
        table: String,
        field: String,
        reason: String,
    },
    #[error("cannot import into `{table}`: {reason}")]
    Import { table: String, reason: String },
}

impl EngineError {
    /// The cell error code the rejection corresponds to.
    pub fn code(&self) -> ErrorCode {
        match self {
            EngineError::ErrorLiteral(_)
            | EngineError::MachineOwned { .. }
            | EngineError::NotFormula { .. } => ErrorCode::Type,
            _ => ErrorCode::Ref,
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
