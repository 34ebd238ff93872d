//! A workbook under edit: versioning, patches and persistence.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use fieldsheet_core::io::{load_path, save_path, DocumentError};
use fieldsheet_core::{Change, CellAddress, RowId, Workbook};
use serde::{Deserialize, Serialize};

use crate::command::{apply, EditCommand, Rejection};
use crate::view::{links_of, CellView, FieldRef, FieldView};

/// A structural change, in application order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "change", rename_all = "snake_case")]
pub enum StructuralChange {
    TableAdded {
        table: String,
        levels: Vec<String>,
    },
    FieldAdded {
        table: String,
        field: FieldView,
    },
    FormulaChanged {
        table: String,
        field: String,
        formula: String,
    },
    LinkDeclared {
        table: String,
        field: String,
        foreign: FieldRef,
    },
    /// An empty row; its non-empty values follow in the cell diff.
    RowInserted {
        table: String,
        row: RowId,
        parent: Option<RowId>,
        index: usize,
    },
    /// The row and its subtree.
    RowDeleted {
        table: String,
        row: RowId,
    },
    ChildrenReordered {
        table: String,
        parent: Option<RowId>,
        children: Vec<RowId>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPatch {
    pub table: String,
    pub row: RowId,
    pub field: String,
    #[serde(flatten)]
    pub cell: CellView,
}

/// Everything one applied command changed. Structural changes apply first,
/// in order; then every cell in `cells` takes its new value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePatch {
    pub version: u64,
    #[serde(default)]
    pub command_id: Option<String>,
    pub structure: Vec<StructuralChange>,
    pub cells: Vec<CellPatch>,
    /// Links whose valid-value list changed, keyed by `Table!Field` of
    /// the link-local field.
    #[serde(default)]
    pub valid_values: BTreeMap<String, Vec<serde_json::Value>>,
}

#[derive(Debug, thiserror::Error)]
pub enum EditError {
    #[error("stale version {expected}; current version is {current}")]
    Stale { expected: u64, current: u64 },
    #[error(transparent)]
    Rejected(#[from] Rejection),
    #[error("edit applied but saving failed: {0}")]
    Save(#[source] DocumentError),
}

pub struct Session {
    wb: Workbook,
    path: Option<PathBuf>,
    version: u64,
    unmatched: HashSet<CellAddress>,
    valid: BTreeMap<String, Vec<serde_json::Value>>,
}

fn link_key(table: &str, field: &str) -> String {
    format!("{table}!{field}")
}

fn unmatched_cells(wb: &Workbook) -> HashSet<CellAddress> {
    let mut out = HashSet::new();
    for link in wb.relations().links() {
        let t = wb.table_by_id(link.local.table);
        let f = t.field(link.local.field);
        for row in t.rows_at_level(f.level()) {
            if wb.is_unmatched(t.name(), row, f.name()) {
                out.insert(CellAddress {
                    table: t.name().to_owned(),
                    row,
                    field: f.name().to_owned(),
                });
            }
        }
    }
    out
}

fn valid_lists(wb: &Workbook) -> BTreeMap<String, Vec<serde_json::Value>> {
    wb.tables()
        .iter()
        .flat_map(|t| {
            links_of(wb, t)
                .into_iter()
                .map(|l| (link_key(t.name(), &l.field), l.valid_values))
        })
        .collect()
}

impl Session {
    /// Serves `wb`; with a path, every applied edit is saved there.
    pub fn new(mut wb: Workbook, path: Option<PathBuf>) -> Self {
        wb.recalculate();
        wb.enable_journal();
        wb.take_changes();
        Session {
            unmatched: unmatched_cells(&wb),
            valid: valid_lists(&wb),
            wb,
            path,
            version: 0,
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, DocumentError> {
        let path = path.as_ref();
        let loaded = load_path(path)?;
        Ok(Session::new(loaded.workbook, Some(path.to_owned())))
    }

    pub fn workbook(&self) -> &Workbook {
        &self.wb
    }

    /// Number of edits applied since the session opened.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Applies one command, recalculates, saves and returns the patch.
    pub fn apply(&mut self, command: &EditCommand) -> Result<ChangePatch, EditError> {
        if command.expected_version != self.version {
            return Err(EditError::Stale {
                expected: command.expected_version,
                current: self.version,
            });
        }
        if let Err(rejection) = apply(&mut self.wb, &command.edit) {
            self.wb.take_changes();
            return Err(rejection.into());
        }
        self.wb.recalculate();
        self.version += 1;
        let changes = self.wb.take_changes();
        let patch = self.patch(changes, command.id.clone());
        if let Some(path) = &self.path {
            save_path(&self.wb, path).map_err(EditError::Save)?;
        }
        Ok(patch)
    }

    fn patch(&mut self, changes: Vec<Change>, command_id: Option<String>) -> ChangePatch {
        let wb = &self.wb;
        let mut structure = Vec::new();
        let mut touched: Vec<CellAddress> = Vec::new();
        let mut seen = HashSet::new();
        for change in changes {
            let s = match change {
                Change::CellChanged {
                    table, row, field, ..
                } => {
                    let address = CellAddress { table, row, field };
                    if seen.insert(address.clone()) {
                        touched.push(address);
                    }
                    continue;
                }
                Change::TableAdded { table, levels } => StructuralChange::TableAdded { table, levels },
                Change::FieldAdded { table, field } => {
                    let def = wb
                        .table(&table)
                        .and_then(|t| t.field_named(&field))
                        .map(FieldView::of)
                        .expect("added field exists");
                    StructuralChange::FieldAdded { table, field: def }
                }
                Change::FormulaChanged {
                    table,
                    field,
                    formula,
                } => StructuralChange::FormulaChanged {
                    table,
                    field,
                    formula,
                },
                Change::LinkDeclared {
                    table,
                    field,
                    foreign_table,
                    foreign_field,
                } => StructuralChange::LinkDeclared {
                    table,
                    field,
                    foreign: FieldRef {
                        table: foreign_table,
                        field: foreign_field,
                    },
                },
                Change::RowInserted {
                    table,
                    row,
                    parent,
                    index,
                } => StructuralChange::RowInserted {
                    table,
                    row,
                    parent,
                    index,
                },
                Change::RowDeleted { table, row } => StructuralChange::RowDeleted { table, row },
                Change::ChildrenReordered {
                    table,
                    parent,
                    children,
                } => StructuralChange::ChildrenReordered {
                    table,
                    parent,
                    children,
                },
            };
            structure.push(s);
        }

        let unmatched = unmatched_cells(wb);
        let flipped: BTreeSet<&CellAddress> =
            unmatched.symmetric_difference(&self.unmatched).collect();
        for address in flipped {
            if seen.insert(address.clone()) {
                touched.push(address.clone());
            }
        }
        let cells = touched
            .into_iter()
            .filter_map(|a| {
                let t = wb.table(&a.table)?;
                t.row(a.row)?;
                let f = t.field_id(&a.field)?;
                Some(CellPatch {
                    cell: CellView::of(wb, t, a.row, f),
                    table: a.table,
                    row: a.row,
                    field: a.field,
                })
            })
            .collect();

        let valid = valid_lists(wb);
        let valid_values = valid
            .iter()
            .filter(|(k, v)| self.valid.get(*k) != Some(*v))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        self.valid = valid;
        self.unmatched = unmatched;
        ChangePatch {
            version: self.version,
            command_id,
            structure,
            cells,
            valid_values,
        }
    }
}
