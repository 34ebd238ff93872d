//! The workbook document: tables, levels, fields, the row tree and cells.

mod table;
mod workbook;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use table::{Field, FieldId, FieldKind, Formula, RowNode, Table};
pub use workbook::{CellStatus, FieldDef, FieldSpec, Workbook};

/// Stable row identity. Ids are never reused within a workbook and survive
/// save and load.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct RowId(pub u64);

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TableId(pub usize);

/// A field of a specific table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldKey {
    pub table: TableId,
    pub field: FieldId,
}

impl FieldKey {
    pub fn new(table: TableId, field: FieldId) -> Self {
        FieldKey { table, field }
    }
}

/// One cell, by ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub table: TableId,
    pub row: RowId,
    pub field: FieldId,
}

impl CellKey {
    pub fn new(table: TableId, row: RowId, field: FieldId) -> Self {
        CellKey { table, row, field }
    }

    pub fn field_key(&self) -> FieldKey {
        FieldKey::new(self.table, self.field)
    }
}

/// One cell, by names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellAddress {
    pub table: String,
    pub row: RowId,
    pub field: String,
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}!{}@{}",
            crate::formula::quote_name(&self.table),
            crate::formula::quote_name(&self.field),
            self.row
        )
    }
}
