use std::collections::HashMap;

use crate::error::{EngineError, Result};
use crate::eval::{self, CalcResult, DependencyGraph, Pending, PendingEvent};
use crate::format::DisplayFormat;
use crate::journal::Change;
use crate::relations::{self, RelationSet, RowDiff};
use crate::value::{ErrorCode, Value};

use super::table::{Field, FieldId, FieldKind, Formula, RowNode, Table};
use super::{CellAddress, CellKey, FieldKey, RowId, TableId};

/// What a new field holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldSpec {
    Data,
    Formula(String),
    Borrowed { table: String, field: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub level: usize,
    pub spec: FieldSpec,
    pub format: Option<DisplayFormat>,
}

impl FieldDef {
    pub fn data(name: impl Into<String>, level: usize) -> Self {
        FieldDef {
            name: name.into(),
            level,
            spec: FieldSpec::Data,
            format: None,
        }
    }

    pub fn formula(name: impl Into<String>, level: usize, text: impl Into<String>) -> Self {
        FieldDef {
            name: name.into(),
            level,
            spec: FieldSpec::Formula(text.into()),
            format: None,
        }
    }

    pub fn borrowed(
        name: impl Into<String>,
        level: usize,
        table: impl Into<String>,
        field: impl Into<String>,
    ) -> Self {
        FieldDef {
            name: name.into(),
            level,
            spec: FieldSpec::Borrowed {
                table: table.into(),
                field: field.into(),
            },
            format: None,
        }
    }

    pub fn with_format(mut self, format: DisplayFormat) -> Self {
        self.format = Some(format);
        self
    }
}

/// Outcome of an accepted `set_cell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Accepted,
    /// Stored, but the value is missing from a linked foreign key set.
    Unmatched,
}

/// A workbook of hierarchical tables.
///
/// Mutations leave formula cells pending until [`Workbook::recalculate`]
/// runs; `get_cell` reports values as of the last recalculation.
#[derive(Debug, Clone)]
pub struct Workbook {
    name: String,
    pub(crate) tables: Vec<Table>,
    table_index: HashMap<String, TableId>,
    pub(crate) relations: RelationSet,
    version: u64,
    next_row: u64,
    pub(crate) pending: Pending,
    pub(crate) graph: Option<DependencyGraph>,
    journal: Option<Vec<Change>>,
}

impl Default for Workbook {
    fn default() -> Self {
        Workbook::new("workbook")
    }
}

pub(crate) fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(']') {
        return Err(EngineError::InvalidName(name.to_owned()));
    }
    Ok(())
}

impl Workbook {
    pub fn new(name: impl Into<String>) -> Self {
        Workbook {
            name: name.into(),
            tables: Vec::new(),
            table_index: HashMap::new(),
            relations: RelationSet::default(),
            version: 0,
            next_row: 1,
            pending: Pending::default(),
            graph: None,
            journal: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn table_id(&self, name: &str) -> Option<TableId> {
        self.table_index.get(name).copied()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.table_id(name).map(|id| &self.tables[id.0])
    }

    pub fn table_by_id(&self, id: TableId) -> &Table {
        &self.tables[id.0]
    }

    pub fn relations(&self) -> &RelationSet {
        &self.relations
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    pub(crate) fn reset_version(&mut self) {
        self.version = 0;
    }

    pub(crate) fn next_row_id(&self) -> u64 {
        self.next_row
    }

    pub(crate) fn reserve_row_ids_above(&mut self, id: RowId) {
        self.next_row = self.next_row.max(id.0 + 1);
    }

    /// Starts recording applied changes for [`Workbook::take_changes`].
    pub fn enable_journal(&mut self) {
        self.journal.get_or_insert_with(Vec::new);
    }

    pub fn take_changes(&mut self) -> Vec<Change> {
        self.journal.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub(crate) fn record(&mut self, change: impl FnOnce() -> Change) {
        if let Some(journal) = &mut self.journal {
            journal.push(change());
        }
    }

    /// True while edits are waiting for recalculation.
    pub fn has_pending(&self) -> bool {
        self.pending.full || !self.pending.events.is_empty()
    }

    pub(crate) fn resolve_table(&self, name: &str) -> Result<TableId> {
        self.table_id(name)
            .ok_or_else(|| EngineError::UnknownTable(name.to_owned()))
    }

    pub(crate) fn resolve_field(&self, table: &str, field: &str) -> Result<FieldKey> {
        let tid = self.resolve_table(table)?;
        let fid = self.tables[tid.0]
            .field_id(field)
            .ok_or_else(|| EngineError::UnknownField {
                table: table.to_owned(),
                field: field.to_owned(),
            })?;
        Ok(FieldKey::new(tid, fid))
    }

    fn resolve_row(&self, tid: TableId, row: RowId) -> Result<&RowNode> {
        let table = &self.tables[tid.0];
        table.row(row).ok_or_else(|| EngineError::UnknownRow {
            table: table.name.clone(),
            row,
        })
    }

    pub fn address(&self, key: CellKey) -> CellAddress {
        let table = &self.tables[key.table.0];
        CellAddress {
            table: table.name.clone(),
            row: key.row,
            field: table.field(key.field).name.clone(),
        }
    }

    /// Resolves a named address, checking that the row exists and the field
    /// belongs to the row's level.
    pub fn cell_key(&self, address: &CellAddress) -> Result<CellKey> {
        let fk = self.resolve_field(&address.table, &address.field)?;
        let row = self.resolve_row(fk.table, address.row)?;
        let field = self.tables[fk.table.0].field(fk.field);
        if field.level != row.level {
            return Err(EngineError::LevelMismatch {
                table: address.table.clone(),
                field: address.field.clone(),
                row: address.row,
                field_level: field.level,
                row_level: row.level,
            });
        }
        Ok(CellKey::new(fk.table, address.row, fk.field))
    }

    // ---- structure -------------------------------------------------------

    pub fn add_table<S: AsRef<str>>(&mut self, name: &str, levels: &[S]) -> Result<TableId> {
        validate_name(name)?;
        if self.table_index.contains_key(name) {
            return Err(EngineError::DuplicateTable(name.to_owned()));
        }
        if levels.is_empty() {
            return Err(EngineError::NoLevels);
        }
        let mut names: Vec<String> = Vec::with_capacity(levels.len());
        for level in levels {
            let level = level.as_ref();
            validate_name(level)?;
            if names.iter().any(|n| n == level) {
                return Err(EngineError::DuplicateLevel(level.to_owned()));
            }
            names.push(level.to_owned());
        }
        let id = TableId(self.tables.len());
        self.tables.push(Table::new(name.to_owned(), names.clone()));
        self.table_index.insert(name.to_owned(), id);
        // Formulas naming this table may resolve now.
        self.invalidate_structure();
        self.bump_version();
        self.record(|| Change::TableAdded {
            table: name.to_owned(),
            levels: names,
        });
        Ok(id)
    }

    /// Adds a field. Formula text that fails to parse is stored anyway and
    /// every cell of the field evaluates to `#PARSE`. A borrowed field
    /// registers the borrow and synthesizes its rows immediately.
    pub fn add_field(&mut self, table: &str, def: FieldDef) -> Result<FieldId> {
        let tid = self.resolve_table(table)?;
        validate_name(&def.name)?;
        let t = &self.tables[tid.0];
        if t.field_index.contains_key(&def.name) {
            return Err(EngineError::DuplicateField {
                table: table.to_owned(),
                field: def.name,
            });
        }
        if def.level >= t.depth() {
            return Err(EngineError::LevelOutOfRange {
                table: table.to_owned(),
                level: def.level,
                depth: t.depth(),
            });
        }
        let mut borrow_source = None;
        let kind = match def.spec {
            FieldSpec::Data => FieldKind::Data,
            FieldSpec::Formula(text) => FieldKind::Formula(Formula::new(text)),
            FieldSpec::Borrowed {
                table: src_table,
                field: src_field,
            } => {
                let source = relations::validate_borrow(
                    self, tid, &def.name, def.level, &src_table, &src_field,
                )?;
                borrow_source = Some(source);
                FieldKind::Borrowed {
                    table: src_table,
                    field: src_field,
                }
            }
        };
        let fid = self.push_field(
            tid,
            Field {
                name: def.name.clone(),
                level: def.level,
                kind,
                format: def.format,
            },
        );
        if let Some(source) = borrow_source {
            self.relations.add_borrow(FieldKey::new(tid, fid), source);
        }
        self.invalidate_structure();
        self.bump_version();
        self.record(|| Change::FieldAdded {
            table: table.to_owned(),
            field: def.name,
        });
        if borrow_source.is_some() {
            relations::sync_borrows(self);
        }
        Ok(fid)
    }

    pub(crate) fn push_field(&mut self, tid: TableId, field: Field) -> FieldId {
        let t = &mut self.tables[tid.0];
        let fid = FieldId(t.fields.len());
        let level = field.level;
        t.field_index.insert(field.name.clone(), fid);
        t.fields.push(field);
        for row in t.rows.values_mut().filter(|r| r.level == level) {
            row.cells.insert(fid, Value::Empty);
        }
        fid
    }

    /// Replaces the formula of a formula field.
    pub fn set_formula(&mut self, table: &str, field: &str, text: &str) -> Result<()> {
        let fk = self.resolve_field(table, field)?;
        let f = &mut self.tables[fk.table.0].fields[fk.field.0];
        let FieldKind::Formula(formula) = &mut f.kind else {
            return Err(EngineError::NotFormula {
                table: table.to_owned(),
                field: field.to_owned(),
            });
        };
        *formula = Formula::new(text);
        self.invalidate_structure();
        self.bump_version();
        self.record(|| Change::FormulaChanged {
            table: table.to_owned(),
            field: field.to_owned(),
            formula: text.to_owned(),
        });
        Ok(())
    }

    pub fn set_format(
        &mut self,
        table: &str,
        field: &str,
        format: Option<DisplayFormat>,
    ) -> Result<()> {
        let fk = self.resolve_field(table, field)?;
        self.tables[fk.table.0].fields[fk.field.0].format = format;
        self.bump_version();
        Ok(())
    }

    /// Declares that `table.field` must match `foreign_table.foreign_field`,
    /// scoping every reference from `table` into `foreign_table`.
    pub fn declare_link(
        &mut self,
        table: &str,
        field: &str,
        foreign_table: &str,
        foreign_field: &str,
    ) -> Result<()> {
        let (local, foreign) =
            relations::validate_link(self, table, field, foreign_table, foreign_field)?;
        self.relations.add_link(local, foreign);
        self.invalidate_structure();
        self.bump_version();
        self.record(|| Change::LinkDeclared {
            table: table.to_owned(),
            field: field.to_owned(),
            foreign_table: foreign_table.to_owned(),
            foreign_field: foreign_field.to_owned(),
        });
        Ok(())
    }

    /// Formulas, links or fields changed: rebuild the dependency graph and
    /// recompute everything on the next pass.
    pub(crate) fn invalidate_structure(&mut self) {
        self.graph = None;
        self.pending.full = true;
    }

    // ---- rows ------------------------------------------------------------

    /// Inserts an empty row under `parent` (`None` for the top level) at
    /// `index` among its siblings (default: last).
    pub fn insert_row(
        &mut self,
        table: &str,
        parent: Option<RowId>,
        index: Option<usize>,
    ) -> Result<RowId> {
        let tid = self.resolve_table(table)?;
        let level = match parent {
            None => 0,
            Some(p) => self.resolve_row(tid, p)?.level + 1,
        };
        let t = &self.tables[tid.0];
        if level >= t.depth() {
            return Err(EngineError::ParentLevel {
                table: table.to_owned(),
                level,
                expected: "a level above the deepest".to_owned(),
            });
        }
        if t.is_borrowed_level(level) {
            return Err(EngineError::BorrowedLevel {
                table: table.to_owned(),
                level,
            });
        }
        let siblings = t.children_of(parent).len();
        let index = index.unwrap_or(siblings);
        if index > siblings {
            return Err(EngineError::IndexOutOfRange {
                index,
                len: siblings,
            });
        }
        let id = self.raw_insert_row(tid, parent, index, None);
        self.bump_version();
        Ok(id)
    }

    /// Inserts a row without validation. Callers guarantee the parent exists
    /// and `index` is in range.
    pub(crate) fn raw_insert_row(
        &mut self,
        tid: TableId,
        parent: Option<RowId>,
        index: usize,
        id: Option<RowId>,
    ) -> RowId {
        let id = id.unwrap_or(RowId(self.next_row));
        self.reserve_row_ids_above(id);
        let t = &mut self.tables[tid.0];
        let level = parent.map_or(0, |p| t.rows[&p].level + 1);
        let cells = t
            .field_ids_at_level(level)
            .map(|f| (f, Value::Empty))
            .collect();
        t.rows.insert(
            id,
            RowNode {
                id,
                level,
                parent,
                children: Vec::new(),
                cells,
            },
        );
        match parent {
            None => t.roots.insert(index, id),
            Some(p) => t.rows.get_mut(&p).expect("parent").children.insert(index, id),
        }
        self.pending.events.push(PendingEvent::RowInserted { table: tid, row: id });
        let name = self.tables[tid.0].name.clone();
        self.record(|| Change::RowInserted {
            table: name,
            row: id,
            parent,
            index,
        });
        id
    }

    /// Deletes a row and its subtree; returns the number of rows removed.
    pub fn delete_row(&mut self, table: &str, row: RowId) -> Result<usize> {
        let tid = self.resolve_table(table)?;
        let level = self.resolve_row(tid, row)?.level;
        if self.tables[tid.0].is_borrowed_level(level) {
            return Err(EngineError::BorrowedLevel {
                table: table.to_owned(),
                level,
            });
        }
        let removed = self.raw_remove_subtree(tid, row).len();
        self.bump_version();
        Ok(removed)
    }

    pub(crate) fn raw_remove_subtree(&mut self, tid: TableId, row: RowId) -> Vec<RowId> {
        let t = &mut self.tables[tid.0];
        let Some(node) = t.rows.get(&row) else {
            return Vec::new();
        };
        let (parent, level) = (node.parent, node.level);
        let removed = t.subtree(row);
        match parent {
            None => t.roots.retain(|&r| r != row),
            Some(p) => {
                if let Some(p) = t.rows.get_mut(&p) {
                    p.children.retain(|&r| r != row);
                }
            }
        }
        for id in &removed {
            t.rows.remove(id);
        }
        self.pending.events.push(PendingEvent::RowsRemoved {
            table: tid,
            parent,
            level,
        });
        let name = t.name.clone();
        self.record(|| Change::RowDeleted { table: name, row });
        removed
    }

    pub(crate) fn raw_reorder_children(
        &mut self,
        tid: TableId,
        parent: Option<RowId>,
        order: Vec<RowId>,
    ) {
        let t = &mut self.tables[tid.0];
        let slot = match parent {
            None => &mut t.roots,
            Some(p) => &mut t.rows.get_mut(&p).expect("parent").children,
        };
        if *slot == order {
            return;
        }
        *slot = order.clone();
        // Document order feeds aggregation order and first-error selection.
        self.pending.full = true;
        let name = t.name.clone();
        self.record(|| Change::ChildrenReordered {
            table: name,
            parent,
            children: order,
        });
    }

    // ---- cells -----------------------------------------------------------

    /// Writes a literal into a data cell. Formula and borrowed cells are
    /// machine-owned and reject writes.
    pub fn set_cell(
        &mut self,
        table: &str,
        row: RowId,
        field: &str,
        value: Value,
    ) -> Result<CellStatus> {
        let key = self.cell_key(&CellAddress {
            table: table.to_owned(),
            row,
            field: field.to_owned(),
        })?;
        let f = self.tables[key.table.0].field(key.field);
        if !f.is_data() {
            return Err(EngineError::MachineOwned {
                table: table.to_owned(),
                field: field.to_owned(),
                kind: f.kind.name(),
            });
        }
        if let Value::Error(code) = value {
            return Err(EngineError::ErrorLiteral(code));
        }
        if self.store_value(key, value) {
            self.pending.events.push(PendingEvent::CellChanged {
                table: key.table,
                row: key.row,
                field: key.field,
            });
        }
        self.bump_version();
        Ok(if relations::is_unmatched(self, key) {
            CellStatus::Unmatched
        } else {
            CellStatus::Accepted
        })
    }

    /// Stores a value; returns whether it differed from the old one.
    pub(crate) fn store_value(&mut self, key: CellKey, value: Value) -> bool {
        let t = &mut self.tables[key.table.0];
        let Some(slot) = t.rows.get_mut(&key.row).and_then(|r| r.cells.get_mut(&key.field))
        else {
            return false;
        };
        if *slot == value {
            return false;
        }
        *slot = value.clone();
        if self.journal.is_some() {
            let address = self.address(key);
            self.record(|| Change::CellChanged {
                table: address.table,
                row: address.row,
                field: address.field,
                value,
            });
        }
        true
    }

    /// The cell's value: stored for data and borrowed fields, last computed
    /// for formula fields. A bad address yields `#REF`.
    pub fn get_cell(&self, table: &str, row: RowId, field: &str) -> Value {
        let address = CellAddress {
            table: table.to_owned(),
            row,
            field: field.to_owned(),
        };
        match self.cell_key(&address) {
            Ok(key) => self.value(key).clone(),
            Err(_) => Value::Error(ErrorCode::Ref),
        }
    }

    pub fn value(&self, key: CellKey) -> &Value {
        self.tables[key.table.0].value(key.row, key.field)
    }

    /// Whether a link-local cell holds a value absent from its foreign key set.
    pub fn is_unmatched(&self, table: &str, row: RowId, field: &str) -> bool {
        let address = CellAddress {
            table: table.to_owned(),
            row,
            field: field.to_owned(),
        };
        self.cell_key(&address)
            .is_ok_and(|key| relations::is_unmatched(self, key))
    }

    // ---- recalculation ---------------------------------------------------

    /// Synchronizes borrows, then re-evaluates only the formula cells
    /// affected by edits since the last pass.
    pub fn recalculate(&mut self) -> CalcResult {
        eval::recalculate(self, false)
    }

    /// Synchronizes borrows, then re-evaluates every formula cell.
    pub fn recalculate_all(&mut self) -> CalcResult {
        eval::recalculate(self, true)
    }

    pub fn sync_borrows(&mut self) -> RowDiff {
        relations::sync_borrows(self)
    }

    pub fn dependency_graph(&mut self) -> &DependencyGraph {
        if self.graph.is_none() {
            self.graph = Some(DependencyGraph::build(self));
        }
        self.graph.as_ref().expect("graph built")
    }

    /// Tree integrity of every table.
    pub fn check_integrity(&self) -> Result<(), String> {
        self.tables.iter().try_for_each(Table::check_integrity)
    }
}
