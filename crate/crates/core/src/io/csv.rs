//! CSV import and export (RFC 4180, UTF-8, LF).

use std::collections::HashSet;

use crate::error::{EngineError, Result};
use crate::format::render_with;
use crate::model::{CellAddress, CellStatus, FieldId, RowId, Workbook};
use crate::value::Value;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub records: usize,
    /// Rows created, at any level.
    pub inserted: usize,
    /// Link-local cells whose value is not among the foreign keys.
    pub unmatched: Vec<CellAddress>,
}

/// Imports records into `table`, grouping them into the row tree.
///
/// At each level above the deepest, a record joins the first child of the
/// current parent whose mapped values equal the record's, creating one if
/// none does. At the deepest level each existing row absorbs at most one
/// record per import, so repeated records stay distinct rows and a second
/// import of the same file inserts nothing.
pub fn import_csv(wb: &mut Workbook, table: &str, source: &str) -> Result<ImportReport> {
    let fail = |reason: String| EngineError::Import {
        table: table.to_owned(),
        reason,
    };
    let tid = wb.resolve_table(table)?;
    let t = wb.table_by_id(tid);
    if t.has_borrowed_levels() {
        return Err(fail("the table has borrowed levels".into()));
    }
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| fail(format!("unreadable header: {e}")))?
        .clone();
    let mut columns: Vec<FieldId> = Vec::with_capacity(header.len());
    for name in header.iter() {
        let fid = t
            .field_id(name)
            .ok_or_else(|| fail(format!("unknown column `{name}`")))?;
        if !t.field(fid).is_data() {
            return Err(fail(format!(
                "column `{name}` maps to a {} field",
                t.field(fid).kind().name()
            )));
        }
        if columns.contains(&fid) {
            return Err(fail(format!("column `{name}` appears twice")));
        }
        columns.push(fid);
    }
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| fail(format!("{e}")))?;
        let values: Vec<Value> = record.iter().map(Value::parse_literal).collect();
        records.push(values);
    }

    let depth = t.depth();
    let by_level: Vec<Vec<(usize, FieldId)>> = (0..depth)
        .map(|level| {
            columns
                .iter()
                .enumerate()
                .filter(|(_, f)| t.field(**f).level() == level)
                .map(|(i, f)| (i, *f))
                .collect()
        })
        .collect();

    let mut report = ImportReport {
        records: records.len(),
        ..ImportReport::default()
    };
    let mut claimed: HashSet<RowId> = HashSet::new();
    for record in &records {
        let mut parent = None;
        for (level, fields) in by_level.iter().enumerate() {
            let leaf = level + 1 == depth;
            let t = wb.table_by_id(tid);
            let found = t.children_of(parent).iter().copied().find(|&row| {
                (!leaf || !claimed.contains(&row))
                    && fields.iter().all(|&(i, f)| *t.value(row, f) == record[i])
            });
            let row = match found {
                Some(row) => row,
                None => {
                    report.inserted += 1;
                    wb.insert_row(table, parent, None)?
                }
            };
            if leaf {
                claimed.insert(row);
            }
            for &(i, f) in fields {
                let name = wb.table_by_id(tid).field(f).name().to_owned();
                if wb.set_cell(table, row, &name, record[i].clone())? == CellStatus::Unmatched {
                    report.unmatched.push(CellAddress {
                        table: table.to_owned(),
                        row,
                        field: name,
                    });
                }
            }
            parent = Some(row);
        }
    }
    Ok(report)
}

/// One record per row at `level` (default: the deepest), with the fields of
/// that level and every level above it, outermost first. Values are
/// rendered through their display formats; text that would import as a
/// number, boolean or blank is quoted.
pub fn export_csv(wb: &Workbook, table: &str, level: Option<usize>) -> Result<String> {
    let tid = wb.resolve_table(table)?;
    let t = wb.table_by_id(tid);
    let level = level.unwrap_or(t.depth() - 1);
    if level >= t.depth() {
        return Err(EngineError::LevelOutOfRange {
            table: table.to_owned(),
            level,
            depth: t.depth(),
        });
    }
    let fields: Vec<FieldId> = (0..=level)
        .flat_map(|l| t.field_ids_at_level(l))
        .collect();
    let mut writer = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<&str> = fields.iter().map(|&f| t.field(f).name()).collect();
    writer.write_record(&header).expect("in-memory write");
    for row in t.rows_at_level(level) {
        let record: Vec<String> = fields
            .iter()
            .map(|&f| {
                let field = t.field(f);
                let owner = t.ancestor_at(row, field.level()).expect("ancestor");
                export_cell(field.format(), t.value(owner, f))
            })
            .collect();
        writer.write_record(&record).expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    Ok(String::from_utf8(bytes).expect("UTF-8 input"))
}

/// Text that would read back as another value is written in quoted form.
fn export_cell(format: Option<&crate::format::DisplayFormat>, value: &Value) -> String {
    match value {
        Value::Text(s) if Value::parse_literal(s) != *value => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        _ => render_with(format, value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FieldDef;

    fn sales() -> Workbook {
        let mut wb = Workbook::new("t");
        wb.add_table("Sales", &["Year", "Month", "Sale"]).unwrap();
        wb.add_field("Sales", FieldDef::data("Year", 0)).unwrap();
        wb.add_field("Sales", FieldDef::data("Month", 1)).unwrap();
        wb.add_field("Sales", FieldDef::data("Sales Code", 2)).unwrap();
        wb.add_field("Sales", FieldDef::data("Total", 2)).unwrap();
        wb
    }

    const JANUARY: &str = "Year,Month,Sales Code,Total\n2009,January,Goldfish,9445.04\n2009,January,Rodents,4497.39\n";

    #[test]
    fn groups_records_into_the_tree() {
        let mut wb = sales();
        let report = import_csv(&mut wb, "Sales", JANUARY).unwrap();
        assert_eq!(report.records, 2);
        assert_eq!(report.inserted, 4);
        let t = wb.table("Sales").unwrap();
        assert_eq!(t.rows_at_level(0).len(), 1);
        assert_eq!(t.rows_at_level(1).len(), 1);
        assert_eq!(t.rows_at_level(2).len(), 2);
        let again = import_csv(&mut wb, "Sales", JANUARY).unwrap();
        assert_eq!(again.inserted, 0);
        assert_eq!(export_csv(&wb, "Sales", None).unwrap(), JANUARY);
    }

    #[test]
    fn header_only_and_bad_headers() {
        let mut wb = sales();
        assert_eq!(import_csv(&mut wb, "Sales", "Year,Total\n").unwrap().inserted, 0);
        assert!(matches!(
            import_csv(&mut wb, "Sales", "Year,Nope\n1,2\n"),
            Err(EngineError::Import { .. })
        ));
        assert!(matches!(
            import_csv(&mut wb, "Sales", "Year,Total\n1\n"),
            Err(EngineError::Import { .. })
        ));
        assert_eq!(wb.table("Sales").unwrap().row_count(), 0);
        assert_eq!(export_csv(&wb, "Sales", None).unwrap(), "Year,Month,Sales Code,Total\n");
    }

    #[test]
    fn quoting_round_trips() {
        let mut wb = sales();
        let text = "Year,Month,Sales Code,Total\n2009,\"Jan, early\",\"say \"\"hi\"\"\",1\n";
        import_csv(&mut wb, "Sales", text).unwrap();
        assert_eq!(export_csv(&wb, "Sales", None).unwrap(), text);
        assert_eq!(export_csv(&wb, "Sales", Some(0)).unwrap(), "Year\n2009\n");
    }
}
