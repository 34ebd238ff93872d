//! Reference resolution: the set of cells a field name denotes from the
//! vantage of one origin cell.
//!
//! Within a table, a deeper field means the descendants of the origin row,
//! the same level means the origin row, and a shallower field means its
//! ancestor. Across tables, every row at the target field's level is a
//! candidate, narrowed by the join constraints that borrows and links
//! establish between the two tables.

use crate::formula::Reference;
use crate::model::{CellAddress, CellKey, FieldId, FieldKey, RowId, TableId, Workbook};
use crate::value::{ErrorCode, Value};

/// Cells of one field, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    pub table: TableId,
    pub field: FieldId,
    pub origin: CellKey,
    pub rows: Vec<RowId>,
}

impl CellSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = CellKey> + '_ {
        self.rows
            .iter()
            .map(|&r| CellKey::new(self.table, r, self.field))
    }

    pub fn values<'a>(&'a self, wb: &'a Workbook) -> impl Iterator<Item = &'a Value> + 'a {
        let t = wb.table_by_id(self.table);
        self.rows.iter().map(move |&r| t.value(r, self.field))
    }

    pub fn addresses(&self, wb: &Workbook) -> Vec<CellAddress> {
        self.keys().map(|k| wb.address(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintSource {
    Borrow,
    Link,
}

/// Keep foreign rows whose `foreign` value equals the origin's `local` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JoinConstraint {
    pub local: FieldKey,
    pub foreign: FieldKey,
    pub source: ConstraintSource,
}

/// Constraints narrowing references from `origin` into `target`: one per
/// borrowed field of `origin` sourced from `target` (by level), then one
/// per link from `origin` to `target` (by declaration).
pub fn join_constraints(wb: &Workbook, origin: TableId, target: TableId) -> Vec<JoinConstraint> {
    let relations = wb.relations();
    let borrows = relations
        .borrows_into(wb, origin)
        .into_iter()
        .filter(|b| b.source.table == target)
        .map(|b| JoinConstraint {
            local: b.target,
            foreign: b.source,
            source: ConstraintSource::Borrow,
        });
    let links = relations
        .links_from(origin)
        .filter(|l| l.foreign.table == target)
        .map(|l| JoinConstraint {
            local: l.local,
            foreign: l.foreign,
            source: ConstraintSource::Link,
        });
    borrows.chain(links).collect()
}

/// Same-table reference to `field` from `origin`.
pub fn resolve_local(wb: &Workbook, field: FieldId, origin: CellKey) -> CellSet {
    let t = wb.table_by_id(origin.table);
    let level = t.field(field).level();
    CellSet {
        table: origin.table,
        field,
        origin,
        rows: t.related_at(origin.row, level),
    }
}

/// Cross-table reference using the relations declared in `wb`.
pub fn resolve_cross(wb: &Workbook, target: FieldKey, origin: CellKey) -> CellSet {
    let constraints = join_constraints(wb, origin.table, target.table);
    resolve_cross_with(wb, target, origin, &constraints)
}

/// Cross-table reference narrowed by an explicit constraint list.
///
/// A constraint whose local field sits below the origin row has no single
/// local value and is skipped. A foreign field below the candidate row
/// matches when any related descendant carries the value.
pub fn resolve_cross_with(
    wb: &Workbook,
    target: FieldKey,
    origin: CellKey,
    constraints: &[JoinConstraint],
) -> CellSet {
    let local_table = wb.table_by_id(origin.table);
    let foreign_table = wb.table_by_id(target.table);
    let level = foreign_table.field(target.field).level();
    let mut rows = foreign_table.rows_at_level(level);
    for c in constraints {
        let local_level = local_table.field(c.local.field).level();
        let Some(anchor) = local_table.ancestor_at(origin.row, local_level) else {
            continue;
        };
        let wanted = local_table.value(anchor, c.local.field);
        if wanted.is_empty() {
            rows.clear();
            break;
        }
        let foreign_level = foreign_table.field(c.foreign.field).level();
        rows.retain(|&row| {
            foreign_table
                .related_at(row, foreign_level)
                .into_iter()
                .any(|r| foreign_table.value(r, c.foreign.field) == wanted)
        });
    }
    CellSet {
        table: target.table,
        field: target.field,
        origin,
        rows,
    }
}

/// Resolves a parsed reference. Unknown tables or fields are `#REF`. A
/// qualified reference naming the origin's own table resolves locally.
pub fn resolve(wb: &Workbook, origin: CellKey, reference: &Reference) -> Result<CellSet, ErrorCode> {
    match reference {
        Reference::Local(name) => {
            let field = wb
                .table_by_id(origin.table)
                .field_id(name)
                .ok_or(ErrorCode::Ref)?;
            Ok(resolve_local(wb, field, origin))
        }
        Reference::Cross { table, field } => {
            let tid = wb.table_id(table).ok_or(ErrorCode::Ref)?;
            let fid = wb.table_by_id(tid).field_id(field).ok_or(ErrorCode::Ref)?;
            if tid == origin.table {
                Ok(resolve_local(wb, fid, origin))
            } else {
                Ok(resolve_cross(wb, FieldKey::new(tid, fid), origin))
            }
        }
    }
}

/// Name-level entry point: resolves `reference` from the cell at `origin`.
pub fn resolve_at(
    wb: &Workbook,
    origin: &CellAddress,
    reference: &Reference,
) -> Result<CellSet, ErrorCode> {
    let key = wb.cell_key(origin).map_err(|_| ErrorCode::Ref)?;
    resolve(wb, key, reference)
}
