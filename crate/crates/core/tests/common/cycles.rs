//! Workbooks with formula cycles.

use fieldsheet_core::{FieldDef, Value, Workbook};

/// One table with a two-field cycle, a field reading the cycle and an
/// unrelated field.
pub fn two_field() -> Workbook {
    let mut wb = Workbook::new("two");
    wb.add_table("T", &["G", "R"]).unwrap();
    wb.add_field("T", FieldDef::data("n", 1)).unwrap();
    wb.add_field("T", FieldDef::formula("a", 1, "=b+1")).unwrap();
    wb.add_field("T", FieldDef::formula("b", 1, "=a*2")).unwrap();
    wb.add_field("T", FieldDef::formula("s", 0, "=SUM(n)")).unwrap();
    wb.add_field("T", FieldDef::formula("d", 1, "=n*10")).unwrap();
    for _ in 0..2 {
        let g = wb.insert_row("T", None, None).unwrap();
        for i in 1..=3 {
            let r = wb.insert_row("T", Some(g), None).unwrap();
            wb.set_cell("T", r, "n", Value::from(i)).unwrap();
        }
    }
    wb.recalculate();
    wb
}

/// Three tables whose totals read each other in a ring, each with an
/// unrelated field alongside.
pub fn three_table() -> Workbook {
    let mut wb = Workbook::new("three");
    for (name, next) in [("A", "B"), ("B", "C"), ("C", "A")] {
        wb.add_table(name, &["Row"]).unwrap();
        wb.add_field(name, FieldDef::data("v", 0)).unwrap();
        wb.add_field(name, FieldDef::formula("t", 0, format!("=SUM({next}!t) + v"))).unwrap();
        wb.add_field(name, FieldDef::formula("u", 0, "=v*v")).unwrap();
        for i in 1..=2 {
            let r = wb.insert_row(name, None, None).unwrap();
            wb.set_cell(name, r, "v", Value::from(i)).unwrap();
        }
    }
    wb.add_table("D", &["Row"]).unwrap();
    wb.add_field("D", FieldDef::formula("w", 0, "=SUM(A!v)")).unwrap();
    wb.insert_row("D", None, None).unwrap();
    wb.recalculate();
    wb
}
