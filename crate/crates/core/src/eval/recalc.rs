use std::collections::{HashMap, HashSet};

use crate::model::{CellAddress, CellKey, FieldId, FieldKey, RowId, TableId, Workbook};
use crate::relations::{self, RowDiff};
use crate::value::{ErrorCode, Value};

use super::graph::{DependencyGraph, EdgeKind};

/// Edits recorded since the last recalculation.
#[derive(Debug, Clone, Default)]
pub(crate) struct Pending {
    pub(crate) full: bool,
    pub(crate) events: Vec<PendingEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PendingEvent {
    CellChanged {
        table: TableId,
        row: RowId,
        field: FieldId,
    },
    RowInserted {
        table: TableId,
        row: RowId,
    },
    /// A subtree rooted at `level` under `parent` is gone.
    RowsRemoved {
        table: TableId,
        parent: Option<RowId>,
        level: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellChange {
    pub key: CellKey,
    pub address: CellAddress,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalcResult {
    /// Formula cells whose value changed, in evaluation order.
    pub changed: Vec<CellChange>,
    pub evaluated_count: usize,
    /// Rows the borrow sync added or removed before evaluation.
    pub sync: RowDiff,
}

#[derive(Debug)]
enum Dirty {
    All,
    Rows(HashSet<RowId>),
}

#[derive(Debug, Default)]
struct DirtySet(HashMap<FieldKey, Dirty>);

impl DirtySet {
    fn mark_all(&mut self, field: FieldKey) {
        self.0.insert(field, Dirty::All);
    }

    fn mark(&mut self, field: FieldKey, row: RowId) {
        match self.0.entry(field).or_insert_with(|| Dirty::Rows(HashSet::new())) {
            Dirty::All => {}
            Dirty::Rows(rows) => {
                rows.insert(row);
            }
        }
    }
}

fn is_formula(wb: &Workbook, field: FieldKey) -> bool {
    wb.table_by_id(field.table).field(field.field).is_formula()
}

/// Marks the formula cells that read `field` at `row`.
fn propagate(wb: &Workbook, graph: &DependencyGraph, dirty: &mut DirtySet, field: FieldKey, row: RowId) {
    let table = wb.table_by_id(field.table);
    for &(dependent, kind) in graph.dependents(field) {
        if !is_formula(wb, dependent) {
            continue;
        }
        match kind {
            EdgeKind::Local => {
                let level = table.field(dependent.field).level();
                for r in table.related_at(row, level) {
                    dirty.mark(dependent, r);
                }
            }
            EdgeKind::Cross => dirty.mark_all(dependent),
            EdgeKind::Borrow => {}
        }
    }
}

fn expand(wb: &Workbook, graph: &DependencyGraph, dirty: &mut DirtySet, event: PendingEvent) {
    match event {
        PendingEvent::CellChanged { table, row, field } => {
            if wb.table_by_id(table).row(row).is_some() {
                propagate(wb, graph, dirty, FieldKey::new(table, field), row);
            }
        }
        PendingEvent::RowInserted { table, row } => {
            let t = wb.table_by_id(table);
            let Some(node) = t.row(row) else { return };
            for fid in t.field_ids_at_level(node.level()) {
                let key = FieldKey::new(table, fid);
                if t.field(fid).is_formula() {
                    dirty.mark(key, row);
                }
                propagate(wb, graph, dirty, key, row);
            }
        }
        PendingEvent::RowsRemoved {
            table,
            parent,
            level,
        } => {
            let t = wb.table_by_id(table);
            for (fi, f) in t.fields().iter().enumerate() {
                if f.level() < level {
                    continue;
                }
                for &(dependent, kind) in graph.dependents(FieldKey::new(table, FieldId(fi))) {
                    if !is_formula(wb, dependent) {
                        continue;
                    }
                    match kind {
                        EdgeKind::Local => {
                            let dep_level = t.field(dependent.field).level();
                            if dep_level >= level {
                                continue;
                            }
                            if let Some(anchor) = parent.and_then(|p| t.ancestor_at(p, dep_level)) {
                                dirty.mark(dependent, anchor);
                            }
                        }
                        EdgeKind::Cross => dirty.mark_all(dependent),
                        EdgeKind::Borrow => {}
                    }
                }
            }
        }
    }
}

/// Syncs borrows, then evaluates dirty formula cells field by field in
/// dependency order, each at most once. Fields on a dependency cycle are
/// set to `#CYCLE` without evaluation.
pub(crate) fn recalculate(wb: &mut Workbook, all: bool) -> CalcResult {
    let mut result = CalcResult::default();
    loop {
        let diff = relations::sync_borrows(wb);
        if diff.is_empty() {
            break;
        }
        result.sync.extend(diff);
    }
    let graph = match wb.graph.take() {
        Some(g) => g,
        None => DependencyGraph::build(wb),
    };
    let pending = std::mem::take(&mut wb.pending);
    let mut dirty = DirtySet::default();
    if all || pending.full {
        for &field in graph.order() {
            if is_formula(wb, field) {
                dirty.mark_all(field);
            }
        }
    } else {
        for event in pending.events {
            expand(wb, &graph, &mut dirty, event);
        }
    }

    for &field in graph.order() {
        let Some(marked) = dirty.0.remove(&field) else {
            continue;
        };
        if !is_formula(wb, field) {
            continue;
        }
        let table = wb.table_by_id(field.table);
        let mut rows = table.rows_at_level(table.field(field.field).level());
        if let Dirty::Rows(set) = &marked {
            rows.retain(|r| set.contains(r));
        }
        let cyclic = graph.is_cyclic(field);
        for row in rows {
            let key = CellKey::new(field.table, row, field.field);
            let new = if cyclic {
                Value::Error(ErrorCode::Cycle)
            } else {
                result.evaluated_count += 1;
                super::evaluate_cell(wb, key)
            };
            let old = wb.value(key).clone();
            if old == new {
                continue;
            }
            wb.store_value(key, new.clone());
            propagate(wb, &graph, &mut dirty, field, row);
            result.changed.push(CellChange {
                key,
                address: wb.address(key),
                old,
                new,
            });
        }
    }
    wb.graph = Some(graph);
    result
}
