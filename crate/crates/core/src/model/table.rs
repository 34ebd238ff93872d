use std::collections::{BTreeMap, HashMap};

use crate::format::DisplayFormat;
use crate::formula::{self, Expr, ParseError};
use crate::value::Value;

use super::RowId;

/// Index of a field within its table. Fields are never removed, so ids are
/// stable for the life of the workbook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldId(pub usize);

/// A formula as entered plus its parse result. A formula that fails to
/// parse is kept; every cell of its field evaluates to `#PARSE`.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    source: String,
    parsed: Result<Expr, ParseError>,
}

impl Formula {
    pub fn new(source: impl Into<String>) -> Self {
        let source = source.into();
        let parsed = formula::parse(&source);
        Formula { source, parsed }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> Result<&Expr, &ParseError> {
        self.parsed.as_ref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Data,
    Formula(Formula),
    /// Values pulled from `table.field`; rows at this level are synthesized.
    Borrowed { table: String, field: String },
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Data => "data",
            FieldKind::Formula(_) => "formula",
            FieldKind::Borrowed { .. } => "borrowed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub(crate) name: String,
    pub(crate) level: usize,
    pub(crate) kind: FieldKind,
    pub(crate) format: Option<DisplayFormat>,
}

impl Field {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn format(&self) -> Option<&DisplayFormat> {
        self.format.as_ref()
    }

    pub fn is_data(&self) -> bool {
        matches!(self.kind, FieldKind::Data)
    }

    pub fn is_formula(&self) -> bool {
        matches!(self.kind, FieldKind::Formula(_))
    }

    pub fn is_borrowed(&self) -> bool {
        matches!(self.kind, FieldKind::Borrowed { .. })
    }

    pub fn formula(&self) -> Option<&Formula> {
        match &self.kind {
            FieldKind::Formula(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowNode {
    pub(crate) id: RowId,
    pub(crate) level: usize,
    pub(crate) parent: Option<RowId>,
    pub(crate) children: Vec<RowId>,
    /// One entry per field bound to this row's level.
    pub(crate) cells: BTreeMap<FieldId, Value>,
}

impl RowNode {
    pub fn id(&self) -> RowId {
        self.id
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent(&self) -> Option<RowId> {
        self.parent
    }

    pub fn children(&self) -> &[RowId] {
        &self.children
    }

    pub fn cells(&self) -> impl Iterator<Item = (FieldId, &Value)> {
        self.cells.iter().map(|(k, v)| (*k, v))
    }
}

static EMPTY: Value = Value::Empty;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub(crate) name: String,
    pub(crate) levels: Vec<String>,
    pub(crate) fields: Vec<Field>,
    pub(crate) field_index: HashMap<String, FieldId>,
    pub(crate) rows: HashMap<RowId, RowNode>,
    pub(crate) roots: Vec<RowId>,
}

impl Table {
    pub(crate) fn new(name: String, levels: Vec<String>) -> Self {
        Table {
            name,
            levels,
            fields: Vec::new(),
            field_index: HashMap::new(),
            rows: HashMap::new(),
            roots: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn field_id(&self, name: &str) -> Option<FieldId> {
        self.field_index.get(name).copied()
    }

    pub fn field(&self, id: FieldId) -> &Field {
        &self.fields[id.0]
    }

    pub fn field_named(&self, name: &str) -> Option<&Field> {
        self.field_id(name).map(|id| self.field(id))
    }

    pub fn field_ids_at_level(&self, level: usize) -> impl Iterator<Item = FieldId> + '_ {
        self.fields
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.level == level)
            .map(|(i, _)| FieldId(i))
    }

    /// The borrowed field of `level`, if that level is machine-managed.
    pub fn borrowed_field_at(&self, level: usize) -> Option<FieldId> {
        self.fields
            .iter()
            .position(|f| f.level == level && f.is_borrowed())
            .map(FieldId)
    }

    pub fn is_borrowed_level(&self, level: usize) -> bool {
        self.borrowed_field_at(level).is_some()
    }

    pub fn has_borrowed_levels(&self) -> bool {
        self.fields.iter().any(Field::is_borrowed)
    }

    pub fn row(&self, id: RowId) -> Option<&RowNode> {
        self.rows.get(&id)
    }

    pub fn roots(&self) -> &[RowId] {
        &self.roots
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn children_of(&self, parent: Option<RowId>) -> &[RowId] {
        match parent {
            None => &self.roots,
            Some(p) => self.rows.get(&p).map_or(&[], |r| &r.children),
        }
    }

    /// Stored value, or `Empty` for an absent row or cell.
    pub fn value(&self, row: RowId, field: FieldId) -> &Value {
        self.rows
            .get(&row)
            .and_then(|r| r.cells.get(&field))
            .unwrap_or(&EMPTY)
    }

    /// All rows, depth-first pre-order.
    pub fn document_order(&self) -> Vec<RowId> {
        let mut out = Vec::with_capacity(self.rows.len());
        let mut stack: Vec<RowId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some(row) = self.rows.get(&id) {
                stack.extend(row.children.iter().rev().copied());
            }
        }
        out
    }

    /// Rows of one level in document order.
    pub fn rows_at_level(&self, level: usize) -> Vec<RowId> {
        let mut out = Vec::new();
        for &root in &self.roots {
            self.collect_at_level(root, level, &mut out);
        }
        out
    }

    fn collect_at_level(&self, id: RowId, level: usize, out: &mut Vec<RowId>) {
        let Some(row) = self.rows.get(&id) else {
            return;
        };
        if row.level == level {
            out.push(id);
        } else if row.level < level {
            for &child in &row.children {
                self.collect_at_level(child, level, out);
            }
        }
    }

    /// The row itself or its ancestor at `level`; `None` when `level` is
    /// deeper than the row.
    pub fn ancestor_at(&self, row: RowId, level: usize) -> Option<RowId> {
        let mut node = self.rows.get(&row)?;
        if level > node.level {
            return None;
        }
        while node.level > level {
            node = self.rows.get(&node.parent?)?;
        }
        Some(node.id)
    }

    /// Descendants of `row` at `level`, document order.
    pub fn descendants_at(&self, row: RowId, level: usize) -> Vec<RowId> {
        let mut out = Vec::new();
        if let Some(node) = self.rows.get(&row) {
            if level > node.level {
                for &child in &node.children {
                    self.collect_at_level(child, level, &mut out);
                }
            }
        }
        out
    }

    /// Rows at `level` that share a branch with `row`: its ancestor (or
    /// itself) when `level` is not deeper, otherwise its descendants.
    pub fn related_at(&self, row: RowId, level: usize) -> Vec<RowId> {
        match self.rows.get(&row) {
            Some(node) if level <= node.level => self.ancestor_at(row, level).into_iter().collect(),
            Some(_) => self.descendants_at(row, level),
            None => Vec::new(),
        }
    }

    /// Subtree of `row` including itself, document order.
    pub fn subtree(&self, row: RowId) -> Vec<RowId> {
        let mut out = Vec::new();
        let mut stack = vec![row];
        while let Some(id) = stack.pop() {
            if let Some(node) = self.rows.get(&id) {
                out.push(id);
                stack.extend(node.children.iter().rev().copied());
            }
        }
        out
    }

    /// Checks parent/child consistency and cell locality; returns a
    /// description of the first violation.
    pub fn check_integrity(&self) -> Result<(), String> {
        let mut seen = 0usize;
        let mut stack: Vec<(RowId, Option<RowId>, usize)> =
            self.roots.iter().map(|&r| (r, None, 0)).collect();
        while let Some((id, parent, level)) = stack.pop() {
            let row = self
                .rows
                .get(&id)
                .ok_or_else(|| format!("{}: dangling child {id}", self.name))?;
            if row.parent != parent {
                return Err(format!("{}: row {id} has wrong parent pointer", self.name));
            }
            if row.level != level {
                return Err(format!("{}: row {id} at wrong level", self.name));
            }
            let expected: Vec<FieldId> = self.field_ids_at_level(level).collect();
            let actual: Vec<FieldId> = row.cells.keys().copied().collect();
            if expected != actual {
                return Err(format!("{}: row {id} holds cells of another level", self.name));
            }
            if level + 1 > self.depth() {
                return Err(format!("{}: row {id} below the deepest level", self.name));
            }
            seen += 1;
            if seen > self.rows.len() {
                return Err(format!("{}: row {id} reachable twice", self.name));
            }
            stack.extend(row.children.iter().map(|&c| (c, Some(id), level + 1)));
        }
        if seen != self.rows.len() {
            return Err(format!("{}: {} unreachable rows", self.name, self.rows.len() - seen));
        }
        Ok(())
    }
}
