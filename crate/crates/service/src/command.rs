//! Edit commands accepted by `POST /api/edit`.

use std::collections::BTreeMap;

use fieldsheet_core::{EngineError, ErrorCode, FieldDef, RowId, Value, Workbook};
use serde::{Deserialize, Serialize};

use crate::view::FieldRef;

/// One mutation, tagged by `op`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    SetCell {
        table: String,
        row: RowId,
        field: String,
        /// Number, string, boolean or null (clears the cell).
        value: serde_json::Value,
    },
    InsertRow {
        table: String,
        #[serde(default)]
        parent: Option<RowId>,
        #[serde(default)]
        index: Option<usize>,
        /// Initial values for data fields of the new row's level.
        #[serde(default)]
        cells: BTreeMap<String, serde_json::Value>,
    },
    DeleteRow {
        table: String,
        row: RowId,
    },
    AddField {
        table: String,
        name: String,
        level: usize,
        #[serde(default)]
        formula: Option<String>,
        #[serde(default)]
        format: Option<String>,
    },
    SetFormula {
        table: String,
        field: String,
        formula: String,
    },
    DeclareBorrow {
        table: String,
        name: String,
        level: usize,
        source: FieldRef,
    },
    DeclareLink {
        table: String,
        field: String,
        foreign: FieldRef,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditCommand {
    /// The version the client last saw; a mismatch is rejected as stale.
    pub expected_version: u64,
    /// Client-chosen id, echoed in the resulting patch.
    #[serde(default)]
    pub id: Option<String>,
    #[serde(flatten)]
    pub edit: Edit,
}

/// A command the engine refused. Nothing was changed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct Rejection {
    pub code: ErrorCode,
    pub message: String,
}

impl From<EngineError> for Rejection {
    fn from(e: EngineError) -> Self {
        Rejection {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

fn input_value(json: &serde_json::Value) -> Result<Value, Rejection> {
    Value::from_json(json).map_err(|message| Rejection {
        code: ErrorCode::Type,
        message,
    })
}

/// Applies `edit` to `wb` without recalculating. A rejected edit leaves
/// the workbook untouched.
pub fn apply(wb: &mut Workbook, edit: &Edit) -> Result<(), Rejection> {
    match edit {
        Edit::SetCell {
            table,
            row,
            field,
            value,
        } => {
            wb.set_cell(table, *row, field, input_value(value)?)?;
        }
        Edit::InsertRow {
            table,
            parent,
            index,
            cells,
        } => {
            let t = wb
                .table(table)
                .ok_or_else(|| EngineError::UnknownTable(table.clone()))?;
            let level = match parent {
                None => 0,
                Some(p) => {
                    t.row(*p)
                        .ok_or_else(|| EngineError::UnknownRow {
                            table: table.clone(),
                            row: *p,
                        })?
                        .level()
                        + 1
                }
            };
            let mut values = Vec::new();
            for (name, json) in cells {
                let f = t.field_named(name).ok_or_else(|| EngineError::UnknownField {
                    table: table.clone(),
                    field: name.clone(),
                })?;
                if !f.is_data() {
                    return Err(EngineError::MachineOwned {
                        table: table.clone(),
                        field: name.clone(),
                        kind: f.kind().name(),
                    }
                    .into());
                }
                if f.level() != level {
                    return Err(Rejection {
                        code: ErrorCode::Ref,
                        message: format!(
                            "`{table}.{name}` belongs to level {}, the new row is at level {level}",
                            f.level()
                        ),
                    });
                }
                let v = input_value(json)?;
                if let Value::Error(code) = v {
                    return Err(EngineError::ErrorLiteral(code).into());
                }
                values.push((name, v));
            }
            let row = wb.insert_row(table, *parent, *index)?;
            for (name, v) in values {
                wb.set_cell(table, row, name, v)
                    .expect("validated before insertion");
            }
        }
        Edit::DeleteRow { table, row } => {
            wb.delete_row(table, *row)?;
        }
        Edit::AddField {
            table,
            name,
            level,
            formula,
            format,
        } => {
            let mut def = match formula {
                Some(text) => FieldDef::formula(name, *level, text),
                None => FieldDef::data(name, *level),
            };
            if let Some(format) = format {
                def = def.with_format(format.parse().map_err(|e| Rejection {
                    code: ErrorCode::Type,
                    message: format!("{e}"),
                })?);
            }
            wb.add_field(table, def)?;
        }
        Edit::SetFormula {
            table,
            field,
            formula,
        } => wb.set_formula(table, field, formula)?,
        Edit::DeclareBorrow {
            table,
            name,
            level,
            source,
        } => {
            wb.add_field(
                table,
                FieldDef::borrowed(name, *level, &source.table, &source.field),
            )?;
        }
        Edit::DeclareLink {
            table,
            field,
            foreign,
        } => wb.declare_link(table, field, &foreign.table, &foreign.field)?,
    }
    Ok(())
}
