//! Borrows and links between tables.
//!
//! A borrow makes a level of one table mirror the distinct values of a
//! field in another table. Its rows are machine-managed: [`sync_borrows`]
//! inserts rows for values that appear in the source and deletes rows whose
//! value disappeared, keeping the ids (and sibling data) of rows that
//! persist. Nested borrows constrain each other: the rows under a borrowed
//! parent are the values that occur together with the parent's value.
//!
//! A link states that a data field's values are keys into a foreign field.
//! Both kinds of relation narrow cross-table references (see `scope`).

use std::collections::{HashMap, HashSet};

use crate::error::{EngineError, Result};
use crate::model::{CellKey, FieldKey, RowId, TableId, Workbook};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BorrowSpec {
    pub target: FieldKey,
    pub source: FieldKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkSpec {
    pub local: FieldKey,
    pub foreign: FieldKey,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationSet {
    borrows: Vec<BorrowSpec>,
    links: Vec<LinkSpec>,
}

impl RelationSet {
    pub fn borrows(&self) -> &[BorrowSpec] {
        &self.borrows
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub(crate) fn add_borrow(&mut self, target: FieldKey, source: FieldKey) {
        self.borrows.push(BorrowSpec { target, source });
    }

    pub(crate) fn add_link(&mut self, local: FieldKey, foreign: FieldKey) {
        self.links.push(LinkSpec { local, foreign });
    }

    /// Borrows into `table`, ordered by target level.
    pub fn borrows_into(&self, wb: &Workbook, table: TableId) -> Vec<BorrowSpec> {
        let t = wb.table_by_id(table);
        let mut specs: Vec<BorrowSpec> = self
            .borrows
            .iter()
            .filter(|b| b.target.table == table)
            .copied()
            .collect();
        specs.sort_by_key(|b| t.field(b.target.field).level());
        specs
    }

    /// The table `table` borrows from, if any.
    pub fn borrow_source_table(&self, table: TableId) -> Option<TableId> {
        self.borrows
            .iter()
            .find(|b| b.target.table == table)
            .map(|b| b.source.table)
    }

    pub fn links_from(&self, table: TableId) -> impl Iterator<Item = &LinkSpec> {
        self.links.iter().filter(move |l| l.local.table == table)
    }
}

/// Rows inserted and deleted by a sync. Deleted ids include whole subtrees.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RowDiff {
    pub inserted: Vec<(TableId, RowId)>,
    pub deleted: Vec<(TableId, RowId)>,
}

impl RowDiff {
    pub fn is_empty(&self) -> bool {
        self.inserted.is_empty() && self.deleted.is_empty()
    }

    pub(crate) fn extend(&mut self, other: RowDiff) {
        self.inserted.extend(other.inserted);
        self.deleted.extend(other.deleted);
    }
}

pub(crate) fn validate_borrow(
    wb: &Workbook,
    target_table: TableId,
    target_field: &str,
    level: usize,
    source_table: &str,
    source_field: &str,
) -> Result<FieldKey> {
    let t = wb.table_by_id(target_table);
    let invalid = |reason: String| EngineError::InvalidBorrow {
        table: t.name().to_owned(),
        field: target_field.to_owned(),
        reason,
    };
    let source = wb.resolve_field(source_table, source_field)?;
    let src_field = wb.table_by_id(source.table).field(source.field);
    if src_field.is_formula() {
        return Err(invalid(format!(
            "source `{source_table}.{source_field}` is a formula field; only data and borrowed fields can be borrowed"
        )));
    }
    if t.is_borrowed_level(level) {
        return Err(invalid(format!("level {level} is already borrowed")));
    }
    if let Some(missing) = (0..level).find(|&l| !t.is_borrowed_level(l)) {
        return Err(invalid(format!(
            "borrowed levels must start at the top; level {missing} is not borrowed"
        )));
    }
    if let Some(existing) = wb.relations.borrow_source_table(target_table) {
        if existing != source.table {
            return Err(invalid(format!(
                "this table already borrows from `{}`",
                wb.table_by_id(existing).name()
            )));
        }
    }
    // The source must not (transitively) borrow from the target.
    let mut cursor = Some(source.table);
    while let Some(tid) = cursor {
        if tid == target_table {
            return Err(EngineError::BorrowCycle {
                target: t.name().to_owned(),
                source_table: source_table.to_owned(),
            });
        }
        cursor = wb.relations.borrow_source_table(tid);
    }
    Ok(source)
}

pub(crate) fn validate_link(
    wb: &Workbook,
    table: &str,
    field: &str,
    foreign_table: &str,
    foreign_field: &str,
) -> Result<(FieldKey, FieldKey)> {
    let local = wb.resolve_field(table, field)?;
    let foreign = wb.resolve_field(foreign_table, foreign_field)?;
    let invalid = |reason: &str| EngineError::InvalidLink {
        table: table.to_owned(),
        field: field.to_owned(),
        reason: reason.to_owned(),
    };
    if !wb.table_by_id(local.table).field(local.field).is_data() {
        return Err(invalid("the local field must be a data field"));
    }
    if local == foreign {
        return Err(invalid("a field cannot link to itself"));
    }
    if wb
        .relations
        .links
        .iter()
        .any(|l| l.local == local && l.foreign == foreign)
    {
        return Err(invalid("this link already exists"));
    }
    Ok((local, foreign))
}

/// Distinct non-empty values of `field`, in document order.
pub fn distinct_values(wb: &Workbook, field: FieldKey) -> Vec<Value> {
    let t = wb.table_by_id(field.table);
    let level = t.field(field.field).level();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in t.rows_at_level(level) {
        let v = t.value(row, field.field);
        if !v.is_empty() && seen.insert(v.clone()) {
            out.push(v.clone());
        }
    }
    out
}

/// The values a link's local field may take: the foreign field's distinct
/// non-empty values in document order.
pub fn valid_values(wb: &Workbook, link: &LinkSpec) -> Vec<Value> {
    distinct_values(wb, link.foreign)
}

/// A link-local cell whose non-empty value is missing from some linked
/// foreign field.
pub(crate) fn is_unmatched(wb: &Workbook, key: CellKey) -> bool {
    let value = wb.value(key);
    if value.is_empty() {
        return false;
    }
    wb.relations
        .links
        .iter()
        .filter(|l| l.local == key.field_key())
        .any(|l| !valid_values(wb, l).contains(value))
}

/// Reads `field` for `row` from the row itself or its ancestor at the
/// field's level.
fn value_via_ancestor(wb: &Workbook, table: TableId, row: RowId, field: FieldKey) -> Value {
    let t = wb.table_by_id(table);
    let level = t.field(field.field).level();
    t.ancestor_at(row, level)
        .map(|a| t.value(a, field.field).clone())
        .unwrap_or_default()
}

/// Required rows of one borrowed level under one parent, in first
/// appearance order.
#[derive(Debug, Default)]
struct Required {
    values: Vec<Value>,
    children: Vec<Required>,
    index: HashMap<Value, usize>,
}

impl Required {
    fn child(&mut self, value: &Value) -> &mut Required {
        let idx = match self.index.get(value) {
            Some(&i) => i,
            None => {
                self.values.push(value.clone());
                self.children.push(Required::default());
                self.index.insert(value.clone(), self.values.len() - 1);
                self.values.len() - 1
            }
        };
        &mut self.children[idx]
    }
}

/// The distinct constrained projection of the source table for every
/// borrowed level of `table`.
fn required_tree(wb: &Workbook, borrows: &[BorrowSpec]) -> Required {
    let mut root = Required::default();
    let Some(first) = borrows.first() else {
        return root;
    };
    let source = wb.table_by_id(first.source.table);
    let mut projection_level = 0;
    for depth in 0..borrows.len() {
        let src_level = source.field(borrows[depth].source.field).level();
        projection_level = projection_level.max(src_level);
        for row in source.rows_at_level(projection_level) {
            let path: Vec<Value> = borrows[..=depth]
                .iter()
                .map(|b| value_via_ancestor(wb, b.source.table, row, b.source))
                .collect();
            if path.iter().any(Value::is_empty) {
                continue;
            }
            let mut node = &mut root;
            for v in &path {
                node = node.child(v);
            }
        }
    }
    root
}

fn reconcile(
    wb: &mut Workbook,
    table: TableId,
    borrows: &[BorrowSpec],
    parent: Option<RowId>,
    depth: usize,
    required: &Required,
    diff: &mut RowDiff,
) {
    let field = borrows[depth].target.field;
    let children = wb.table_by_id(table).children_of(parent).to_vec();
    let mut kept: HashMap<Value, RowId> = HashMap::new();
    for child in children {
        let v = wb.table_by_id(table).value(child, field).clone();
        if required.index.contains_key(&v) && !kept.contains_key(&v) {
            kept.insert(v, child);
        } else {
            let removed = wb.raw_remove_subtree(table, child);
            diff.deleted.extend(removed.into_iter().map(|r| (table, r)));
        }
    }
    let kept_order: Vec<RowId> = required
        .values
        .iter()
        .filter_map(|v| kept.get(v).copied())
        .collect();
    wb.raw_reorder_children(table, parent, kept_order);

    let mut ids = Vec::with_capacity(required.values.len());
    for (index, v) in required.values.iter().enumerate() {
        let id = match kept.get(v) {
            Some(&id) => id,
            None => {
                let id = wb.raw_insert_row(table, parent, index, None);
                wb.store_value(CellKey::new(table, id, field), v.clone());
                diff.inserted.push((table, id));
                id
            }
        };
        ids.push(id);
    }
    if depth + 1 < borrows.len() {
        for (id, req) in ids.into_iter().zip(&required.children) {
            reconcile(wb, table, borrows, Some(id), depth + 1, req, diff);
        }
    }
}

/// Brings every borrowed table in line with its source. Tables are synced
/// in borrow order, so a borrowed table that is itself a source is
/// up to date before its dependents are synced.
pub fn sync_borrows(wb: &mut Workbook) -> RowDiff {
    let mut diff = RowDiff::default();
    for table in borrow_order(wb) {
        let borrows = wb.relations.borrows_into(wb, table);
        let required = required_tree(wb, &borrows);
        let mut table_diff = RowDiff::default();
        reconcile(wb, table, &borrows, None, 0, &required, &mut table_diff);
        diff.extend(table_diff);
    }
    diff
}

/// Tables with borrows, sources before the tables that borrow from them.
fn borrow_order(wb: &Workbook) -> Vec<TableId> {
    let mut order = Vec::new();
    let mut placed = HashSet::new();
    let targets: Vec<TableId> = {
        let mut seen = HashSet::new();
        wb.relations
            .borrows
            .iter()
            .map(|b| b.target.table)
            .filter(|t| seen.insert(*t))
            .collect()
    };
    fn visit(
        wb: &Workbook,
        t: TableId,
        placed: &mut HashSet<TableId>,
        order: &mut Vec<TableId>,
    ) {
        if placed.contains(&t) {
            return;
        }
        placed.insert(t);
        if let Some(src) = wb.relations.borrow_source_table(t) {
            visit(wb, src, placed, order);
            order.push(t);
        }
    }
    for t in targets {
        visit(wb, t, &mut placed, &mut order);
    }
    order
}
