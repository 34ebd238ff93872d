//! Workbook documents.
//!
//! A document is pretty-printed JSON with sorted keys, two-space indent,
//! LF line endings and a trailing newline. Only data cells and the
//! borrowed values of borrowed rows are stored; formula cells are
//! recomputed on load.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::model::{FieldDef, FieldKind, FieldSpec, RowId, Table, TableId, Workbook};
use crate::relations::RowDiff;
use crate::value::Value;

pub const FORMAT_MARKER: &str = "fieldsheet/1";

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported document version `{0}` (expected `{FORMAT_MARKER}`)")]
    UnknownVersion(String),
    #[error("invalid document: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<EngineError> for DocumentError {
    fn from(e: EngineError) -> Self {
        DocumentError::Invariant(e.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: String,
    name: String,
    next_row_id: u64,
    tables: Vec<TableDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDoc {
    name: String,
    levels: Vec<String>,
    fields: Vec<FieldDoc>,
    #[serde(default)]
    links: Vec<LinkDoc>,
    #[serde(default)]
    rows: Vec<RowDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDoc {
    name: String,
    level: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<FieldRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldRef {
    table: String,
    field: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    field: String,
    foreign: FieldRef,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    id: u64,
    #[serde(default)]
    cells: BTreeMap<String, Value>,
    #[serde(default)]
    children: Vec<RowDoc>,
}

/// Canonical document text for `wb`.
pub fn save(wb: &Workbook) -> String {
    let doc = Document {
        version: FORMAT_MARKER.to_owned(),
        name: wb.name().to_owned(),
        next_row_id: wb.next_row_id(),
        tables: wb
            .tables()
            .iter()
            .map(|t| table_doc(wb, t))
            .collect(),
    };
    // Round-tripping through `serde_json::Value` sorts object keys.
    let value = serde_json::to_value(&doc).expect("document serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("document serializes");
    text.push('\n');
    text
}

/// Writes the canonical document; returns the byte count.
pub fn save_path(wb: &Workbook, path: impl AsRef<Path>) -> Result<usize, DocumentError> {
    let text = save(wb);
    fs::write(path, &text)?;
    Ok(text.len())
}

fn table_doc(wb: &Workbook, t: &Table) -> TableDoc {
    let tid = wb.table_id(t.name()).expect("own table");
    let fields = t
        .fields()
        .iter()
        .map(|f| {
            let (formula, source) = match f.kind() {
                FieldKind::Data => (None, None),
                FieldKind::Formula(formula) => (Some(formula.source().to_owned()), None),
                FieldKind::Borrowed { table, field } => (
                    None,
                    Some(FieldRef {
                        table: table.clone(),
                        field: field.clone(),
                    }),
                ),
            };
            FieldDoc {
                name: f.name().to_owned(),
                level: f.level(),
                kind: f.kind().name().to_owned(),
                formula,
                source,
                format: f.format().map(ToString::to_string),
            }
        })
        .collect();
    let links = wb
        .relations()
        .links_from(tid)
        .map(|l| {
            let foreign = wb.table_by_id(l.foreign.table);
            LinkDoc {
                field: t.field(l.local.field).name().to_owned(),
                foreign: FieldRef {
                    table: foreign.name().to_owned(),
                    field: foreign.field(l.foreign.field).name().to_owned(),
                },
            }
        })
        .collect();
    TableDoc {
        name: t.name().to_owned(),
        levels: t.levels().to_vec(),
        fields,
        links,
        rows: t.roots().iter().map(|&r| row_doc(t, r)).collect(),
    }
}

fn row_doc(t: &Table, id: RowId) -> RowDoc {
    let node = t.row(id).expect("row in tree");
    let cells = node
        .cells()
        .filter(|(fid, v)| !v.is_empty() && !t.field(*fid).is_formula())
        .map(|(fid, v)| (t.field(fid).name().to_owned(), v.clone()))
        .collect();
    RowDoc {
        id: id.0,
        cells,
        children: node.children().iter().map(|&c| row_doc(t, c)).collect(),
    }
}

/// A loaded workbook and the repairs the borrow sync made to it.
#[derive(Debug)]
pub struct Loaded {
    pub workbook: Workbook,
    pub sync: RowDiff,
}

/// Parses a document, registers its relations, reconciles borrowed rows
/// with their sources and computes every formula.
pub fn load(text: &str) -> Result<Loaded, DocumentError> {
    let json: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DocumentError::Malformed {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    match json.get("version").and_then(|v| v.as_str()) {
        Some(FORMAT_MARKER) => {}
        Some(other) => return Err(DocumentError::UnknownVersion(other.to_owned())),
        None => return Err(DocumentError::Invariant("missing `version` marker".into())),
    }
    let doc: Document =
        serde_json::from_value(json).map_err(|e| DocumentError::Invariant(e.to_string()))?;
    build(doc)
}

pub fn load_path(path: impl AsRef<Path>) -> Result<Loaded, DocumentError> {
    load(&fs::read_to_string(path)?)
}

fn build(doc: Document) -> Result<Loaded, DocumentError> {
    let mut wb = Workbook::new(doc.name);
    for t in &doc.tables {
        wb.add_table(&t.name, &t.levels)?;
    }
    add_fields(&mut wb, &doc.tables)?;
    for t in &doc.tables {
        for link in &t.links {
            wb.declare_link(&t.name, &link.field, &link.foreign.table, &link.foreign.field)?;
        }
    }
    let mut seen = HashSet::new();
    for (ti, t) in doc.tables.iter().enumerate() {
        for (index, row) in t.rows.iter().enumerate() {
            add_row(&mut wb, TableId(ti), None, index, row, &mut seen)?;
        }
    }
    if let Some(max) = seen.iter().max() {
        if doc.next_row_id <= *max {
            return Err(DocumentError::Invariant(format!(
                "`next_row_id` {} is not above the largest row id {max}",
                doc.next_row_id
            )));
        }
    }
    wb.reserve_row_ids_above(RowId(doc.next_row_id.saturating_sub(1)));
    wb.check_integrity().map_err(DocumentError::Invariant)?;
    let sync = wb.sync_borrows();
    wb.recalculate_all();
    wb.reset_version();
    Ok(Loaded { workbook: wb, sync })
}

/// Adds fields table by table in declaration order. A borrowed field waits
/// until its source field exists, so tables may appear in any order.
fn add_fields(wb: &mut Workbook, tables: &[TableDoc]) -> Result<(), DocumentError> {
    let mut next = vec![0usize; tables.len()];
    loop {
        let mut progressed = false;
        let mut done = true;
        for (ti, t) in tables.iter().enumerate() {
            while let Some(f) = t.fields.get(next[ti]) {
                if let Some(src) = &f.source {
                    let ready = wb
                        .table(&src.table)
                        .is_some_and(|st| st.field_id(&src.field).is_some());
                    if !ready && tables.iter().any(|o| o.name == src.table && o.fields.iter().any(|of| of.name == src.field)) {
                        break;
                    }
                }
                wb.add_field(&t.name, field_def(&t.name, f)?)?;
                next[ti] += 1;
                progressed = true;
            }
            if next[ti] < t.fields.len() {
                done = false;
            }
        }
        if done {
            return Ok(());
        }
        if !progressed {
            return Err(DocumentError::Invariant(
                "borrowed fields depend on each other in a cycle".into(),
            ));
        }
    }
}

fn field_def(table: &str, f: &FieldDoc) -> Result<FieldDef, DocumentError> {
    let named = |what: &str| {
        DocumentError::Invariant(format!("field `{table}.{}`: {what}", f.name))
    };
    let spec = match (f.kind.as_str(), &f.formula, &f.source) {
        ("data", None, None) => FieldSpec::Data,
        ("formula", Some(text), None) => FieldSpec::Formula(text.clone()),
        ("borrowed", None, Some(src)) => FieldSpec::Borrowed {
            table: src.table.clone(),
            field: src.field.clone(),
        },
        ("data" | "formula" | "borrowed", _, _) => {
            return Err(named("`formula` belongs to formula fields and `source` to borrowed fields"))
        }
        (other, _, _) => return Err(named(&format!("unknown kind `{other}`"))),
    };
    let format = match &f.format {
        Some(s) => Some(s.parse().map_err(|e| named(&format!("{e}")))?),
        None => None,
    };
    Ok(FieldDef {
        name: f.name.clone(),
        level: f.level,
        spec,
        format,
    })
}

fn add_row(
    wb: &mut Workbook,
    tid: TableId,
    parent: Option<RowId>,
    index: usize,
    row: &RowDoc,
    seen: &mut HashSet<u64>,
) -> Result<(), DocumentError> {
    let table = wb.table_by_id(tid);
    let name = table.name().to_owned();
    let level = match parent {
        None => 0,
        Some(p) => table.row(p).expect("parent added").level() + 1,
    };
    if level >= table.depth() {
        return Err(DocumentError::Invariant(format!(
            "row {} of `{name}` is below the deepest level",
            row.id
        )));
    }
    if !seen.insert(row.id) {
        return Err(DocumentError::Invariant(format!("row id {} is used twice", row.id)));
    }
    let mut cells = Vec::with_capacity(row.cells.len());
    for (field, value) in &row.cells {
        let fid = table.field_id(field).ok_or_else(|| {
            DocumentError::Invariant(format!("row {} of `{name}`: unknown field `{field}`", row.id))
        })?;
        let f = table.field(fid);
        if f.level() != level {
            return Err(DocumentError::Invariant(format!(
                "row {} of `{name}`: field `{field}` belongs to level {}",
                row.id,
                f.level()
            )));
        }
        if f.is_formula() {
            return Err(DocumentError::Invariant(format!(
                "row {} of `{name}`: formula cell `{field}` is stored",
                row.id
            )));
        }
        if let Value::Error(code) = value {
            return Err(DocumentError::Invariant(format!(
                "row {} of `{name}`: error value {code} is stored in `{field}`",
                row.id
            )));
        }
        cells.push((fid, value.clone()));
    }
    let id = wb.raw_insert_row(tid, parent, index, Some(RowId(row.id)));
    for (fid, value) in cells {
        wb.store_value(crate::model::CellKey::new(tid, id, fid), value);
    }
    for (i, child) in row.children.iter().enumerate() {
        add_row(wb, tid, Some(id), i, child, seen)?;
    }
    Ok(())
}
