//! JSON views of tables and cells, shared by responses and patches.

use std::collections::BTreeMap;

use fieldsheet_core::format::render_with;
use fieldsheet_core::relations::valid_values;
use fieldsheet_core::{Field, FieldId, FieldKind, RowId, Table, Value, Workbook};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldRef {
    pub table: String,
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldView {
    pub name: String,
    pub level: usize,
    /// `data`, `formula` or `borrowed`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FieldRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

impl FieldView {
    pub fn of(field: &Field) -> Self {
        let (kind, formula, source) = match field.kind() {
            FieldKind::Data => ("data", None, None),
            FieldKind::Formula(f) => ("formula", Some(f.source().to_owned()), None),
            FieldKind::Borrowed { table, field } => (
                "borrowed",
                None,
                Some(FieldRef {
                    table: table.clone(),
                    field: field.clone(),
                }),
            ),
        };
        FieldView {
            name: field.name().to_owned(),
            level: field.level(),
            kind: kind.to_owned(),
            formula,
            source,
            format: field.format().map(|f| f.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkView {
    pub field: String,
    pub foreign: FieldRef,
    /// The values a link cell may take: the foreign field's distinct values.
    pub valid_values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    /// Raw value: number, string, boolean, null, or `{"error": code}`.
    pub value: serde_json::Value,
    /// The value rendered through the field's display format.
    pub display: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unmatched: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl CellView {
    pub fn of(wb: &Workbook, table: &Table, row: RowId, field: FieldId) -> Self {
        let f = table.field(field);
        let value = table.value(row, field);
        CellView {
            value: value.to_json(),
            display: render_with(f.format(), value),
            error: value.error_code().map(|c| c.as_str().to_owned()),
            unmatched: wb.is_unmatched(table.name(), row, f.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowView {
    pub id: RowId,
    pub cells: BTreeMap<String, CellView>,
    pub children: Vec<RowView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableView {
    pub name: String,
    pub levels: Vec<String>,
    pub fields: Vec<FieldView>,
    pub links: Vec<LinkView>,
    pub rows: Vec<RowView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkbookView {
    pub version: u64,
    pub name: String,
    pub tables: Vec<TableView>,
}

fn row_view(wb: &Workbook, t: &Table, id: RowId) -> RowView {
    let node = t.row(id).expect("row");
    RowView {
        id,
        cells: node
            .cells()
            .map(|(f, _)| (t.field(f).name().to_owned(), CellView::of(wb, t, id, f)))
            .collect(),
        children: node.children().iter().map(|&c| row_view(wb, t, c)).collect(),
    }
}

/// Links declared from `table`, with their valid-value lists.
pub fn links_of(wb: &Workbook, table: &Table) -> Vec<LinkView> {
    let tid = wb.table_id(table.name()).expect("own table");
    wb.relations()
        .links()
        .iter()
        .filter(|l| l.local.table == tid)
        .map(|l| {
            let foreign = wb.table_by_id(l.foreign.table);
            LinkView {
                field: table.field(l.local.field).name().to_owned(),
                foreign: FieldRef {
                    table: foreign.name().to_owned(),
                    field: foreign.field(l.foreign.field).name().to_owned(),
                },
                valid_values: valid_values(wb, l).iter().map(Value::to_json).collect(),
            }
        })
        .collect()
}

pub fn table_view(wb: &Workbook, t: &Table) -> TableView {
    TableView {
        name: t.name().to_owned(),
        levels: t.levels().to_vec(),
        fields: t.fields().iter().map(FieldView::of).collect(),
        links: links_of(wb, t),
        rows: t.roots().iter().map(|&r| row_view(wb, t, r)).collect(),
    }
}

pub fn workbook_view(wb: &Workbook, version: u64) -> WorkbookView {
    WorkbookView {
        version,
        name: wb.name().to_owned(),
        tables: wb.tables().iter().map(|t| table_view(wb, t)).collect(),
    }
}
