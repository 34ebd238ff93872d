//! Change log of applied mutations, drained by the service to build
//! client patches.

use serde::Serialize;

use crate::model::RowId;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "change", rename_all = "snake_case")]
pub enum Change {
    TableAdded {
        table: String,
        levels: Vec<String>,
    },
    FieldAdded {
        table: String,
        field: String,
    },
    FormulaChanged {
        table: String,
        field: String,
        formula: String,
    },
    LinkDeclared {
        table: String,
        field: String,
        foreign_table: String,
        foreign_field: String,
    },
    RowInserted {
        table: String,
        row: RowId,
        parent: Option<RowId>,
        index: usize,
    },
    /// The row and its whole subtree are gone.
    RowDeleted {
        table: String,
        row: RowId,
    },
    ChildrenReordered {
        table: String,
        parent: Option<RowId>,
        children: Vec<RowId>,
    },
    CellChanged {
        table: String,
        row: RowId,
        field: String,
        value: Value,
    },
}
