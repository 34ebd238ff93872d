//! Fixture workbooks and independent oracles shared by the integration
//! tests.

#![allow(dead_code)]

pub mod cycles;
pub mod random;

use std::collections::HashMap;
use std::path::PathBuf;

use fieldsheet_core::{
    CellAddress, DisplayFormat, FieldDef, FieldKind, RowId, Table, Value, Workbook,
};

pub const GOLDFISH: &str = "Goldfish";
pub const RODENTS: &str = "Rodents";
pub const FROGS: &str = "Wide mouthed frogs";

/// (year, month, sales code, total). The 2009 rows are the pet shop's
/// published sales, grouped so every printed monthly total is the sum of
/// its sales; 2010 and 2011 are invented, with no frogs sold in 2011.
pub const SALES: &[(i64, &str, &str, &str)] = &[
    (2009, "January", GOLDFISH, "9445.04"),
    (2009, "January", RODENTS, "4497.39"),
    (2009, "February", GOLDFISH, "530.79"),
    (2009, "February", RODENTS, "9152.93"),
    (2009, "February", FROGS, "3556.43"),
    (2009, "March", GOLDFISH, "2190.53"),
    (2009, "March", RODENTS, "4321.37"),
    (2009, "March", FROGS, "9724.86"),
    (2009, "April", GOLDFISH, "2155.37"),
    (2009, "April", RODENTS, "7569.59"),
    (2009, "April", FROGS, "5523.38"),
    (2009, "May", GOLDFISH, "988.73"),
    (2009, "May", RODENTS, "6513.58"),
    (2009, "June", GOLDFISH, "1848.78"),
    (2009, "June", RODENTS, "6416.97"),
    (2009, "July", GOLDFISH, "9306.08"),
    (2009, "July", RODENTS, "3483.43"),
    (2009, "July", FROGS, "6200.95"),
    (2009, "August", GOLDFISH, "446.73"),
    (2009, "August", RODENTS, "11186.05"),
    (2010, "January", RODENTS, "5120.00"),
    (2010, "January", FROGS, "2210.50"),
    (2010, "February", GOLDFISH, "1402.25"),
    (2010, "February", RODENTS, "3310.10"),
    (2010, "March", FROGS, "4100.00"),
    (2010, "March", GOLDFISH, "820.40"),
    (2011, "January", GOLDFISH, "2045.60"),
    (2011, "January", RODENTS, "7788.12"),
    (2011, "February", RODENTS, "1999.99"),
];

/// Printed monthly totals whose addends are all visible in the 2009 rows.
pub const MONTHLY_TOTALS_2009: &[(&str, &str)] = &[
    ("January", "13942.43"),
    ("March", "16236.76"),
    ("April", "15248.34"),
    ("May", "7502.31"),
    ("June", "8265.75"),
    ("July", "18990.46"),
    ("August", "11632.78"),
];

/// (animal, price, VAT rate).
///
/// Hand check against the printed invoices, Net = Quantity × Price and
/// VAT = Net × rate:
/// Goldfish ×1 → 1 + 0.1 = 1.10 and ×2 → 2 + 0.2 = 2.20, so price 1, 10%.
/// Rodents ×4 → 12 + 1.2 = 13.20 and ×5 → 15 + 1.5 = 16.50, so price 3, 10%.
/// Frog ×3 → 15 + 3 = 18.00, so price 5, 20%.
/// Invoice 10001: 1.10 + 13.20 = 14.30.
/// Invoice 10002: 18.00 + 2.20 + 16.50 = 36.70.
pub const ANIMALS: &[(&str, &str, &str)] = &[
    ("Goldfish", "1", "0.1"),
    ("Rodents", "3", "0.1"),
    ("Wide mouthed frog", "5", "0.2"),
];

/// (invoice no, customer, lines of (item, quantity)).
pub const INVOICES: &[(i64, &str, &[(&str, i64)])] = &[
    (10001, "Ted Hawkins", &[("Goldfish", 1), ("Rodents", 4)]),
    (
        10002,
        "Andrew Lemon",
        &[("Wide mouthed frog", 3), ("Goldfish", 2), ("Rodents", 5)],
    ),
];

pub fn num(s: &str) -> Value {
    Value::parse_literal(s)
}

fn currency() -> DisplayFormat {
    "currency-2dp".parse().unwrap()
}

/// The Sales table with Monthly and Yearly totals, plus the Sales Summary
/// borrowing Sales Code and Year.
pub fn pet_shop() -> Workbook {
    let mut wb = Workbook::new("Pet shop");
    wb.add_table("Sales", &["Year", "Month", "Sale"]).unwrap();
    wb.add_field("Sales", FieldDef::data("Year", 0)).unwrap();
    wb.add_field("Sales", FieldDef::formula("Yearly Total", 0, "=SUM(Total)").with_format(currency()))
        .unwrap();
    wb.add_field("Sales", FieldDef::data("Month", 1)).unwrap();
    wb.add_field("Sales", FieldDef::formula("Monthly Total", 1, "=SUM(Total)").with_format(currency()))
        .unwrap();
    wb.add_field("Sales", FieldDef::data("Sales Code", 2)).unwrap();
    wb.add_field("Sales", FieldDef::data("Total", 2).with_format(currency()))
        .unwrap();
    for &(year, month, code, total) in SALES {
        add_sale(&mut wb, year, month, code, total);
    }
    wb.add_table("Sales Summary", &["Code", "Year"]).unwrap();
    wb.add_field("Sales Summary", FieldDef::borrowed("Sales Code", 0, "Sales", "Sales Code"))
        .unwrap();
    wb.add_field("Sales Summary", FieldDef::borrowed("Year", 1, "Sales", "Year"))
        .unwrap();
    wb.add_field(
        "Sales Summary",
        FieldDef::formula("Total", 1, "=SUM(Sales!Total)").with_format(currency()),
    )
    .unwrap();
    wb.recalculate();
    wb
}

/// Appends a sale, creating its year and month rows as needed.
pub fn add_sale(wb: &mut Workbook, year: i64, month: &str, code: &str, total: &str) -> RowId {
    let y = match find_child(wb, "Sales", None, "Year", &Value::from(year)) {
        Some(r) => r,
        None => {
            let r = wb.insert_row("Sales", None, None).unwrap();
            wb.set_cell("Sales", r, "Year", Value::from(year)).unwrap();
            r
        }
    };
    let m = match find_child(wb, "Sales", Some(y), "Month", &Value::text(month)) {
        Some(r) => r,
        None => {
            let r = wb.insert_row("Sales", Some(y), None).unwrap();
            wb.set_cell("Sales", r, "Month", Value::text(month)).unwrap();
            r
        }
    };
    let s = wb.insert_row("Sales", Some(m), None).unwrap();
    wb.set_cell("Sales", s, "Sales Code", Value::text(code)).unwrap();
    wb.set_cell("Sales", s, "Total", num(total)).unwrap();
    s
}

pub fn find_child(
    wb: &Workbook,
    table: &str,
    parent: Option<RowId>,
    field: &str,
    value: &Value,
) -> Option<RowId> {
    let t = wb.table(table)?;
    let f = t.field_id(field)?;
    t.children_of(parent)
        .iter()
        .copied()
        .find(|&r| t.value(r, f) == value)
}

pub fn month_row(wb: &Workbook, year: i64, month: &str) -> RowId {
    let y = find_child(wb, "Sales", None, "Year", &Value::from(year)).unwrap();
    find_child(wb, "Sales", Some(y), "Month", &Value::text(month)).unwrap()
}

/// Animals and Invoices, with Invoices.Item linked to Animals.Animal.
pub fn invoices() -> Workbook {
    let mut wb = Workbook::new("Invoices");
    wb.add_table("Animals", &["Animal"]).unwrap();
    wb.add_field("Animals", FieldDef::data("Animal", 0)).unwrap();
    wb.add_field("Animals", FieldDef::data("Price", 0).with_format(currency()))
        .unwrap();
    wb.add_field(
        "Animals",
        FieldDef::data("VAT Rate", 0).with_format("percent-0dp".parse().unwrap()),
    )
    .unwrap();
    for &(animal, price, rate) in ANIMALS {
        let r = wb.insert_row("Animals", None, None).unwrap();
        wb.set_cell("Animals", r, "Animal", Value::text(animal)).unwrap();
        wb.set_cell("Animals", r, "Price", num(price)).unwrap();
        wb.set_cell("Animals", r, "VAT Rate", num(rate)).unwrap();
    }
    wb.add_table("Invoices", &["Invoice", "Item"]).unwrap();
    wb.add_field("Invoices", FieldDef::data("Invoice No", 0)).unwrap();
    wb.add_field("Invoices", FieldDef::data("Customer", 0)).unwrap();
    wb.add_field(
        "Invoices",
        FieldDef::formula("Total", 0, "=SUM([Net + VAT])").with_format(currency()),
    )
    .unwrap();
    wb.add_field("Invoices", FieldDef::data("Item", 1)).unwrap();
    wb.add_field("Invoices", FieldDef::data("Quantity", 1)).unwrap();
    wb.add_field("Invoices", FieldDef::formula("Net", 1, "=Quantity*Animals!Price"))
        .unwrap();
    wb.add_field("Invoices", FieldDef::formula("VAT", 1, "=Net*Animals![VAT Rate]"))
        .unwrap();
    wb.add_field(
        "Invoices",
        FieldDef::formula("Net + VAT", 1, "=Net+VAT").with_format(currency()),
    )
    .unwrap();
    wb.declare_link("Invoices", "Item", "Animals", "Animal").unwrap();
    for &(no, customer, lines) in INVOICES {
        let inv = wb.insert_row("Invoices", None, None).unwrap();
        wb.set_cell("Invoices", inv, "Invoice No", Value::from(no)).unwrap();
        wb.set_cell("Invoices", inv, "Customer", Value::text(customer)).unwrap();
        for &(item, qty) in lines {
            let line = wb.insert_row("Invoices", Some(inv), None).unwrap();
            wb.set_cell("Invoices", line, "Item", Value::text(item)).unwrap();
            wb.set_cell("Invoices", line, "Quantity", Value::from(qty)).unwrap();
        }
    }
    wb.recalculate();
    wb
}

pub fn invoice_row(wb: &Workbook, no: i64) -> RowId {
    find_child(wb, "Invoices", None, "Invoice No", &Value::from(no)).unwrap()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data")
}

/// Every cell of every table, keyed by address.
pub fn snapshot(wb: &Workbook) -> HashMap<CellAddress, Value> {
    let mut out = HashMap::new();
    for t in wb.tables() {
        for row in t.document_order() {
            for (fid, v) in t.row(row).unwrap().cells() {
                out.insert(
                    CellAddress {
                        table: t.name().to_owned(),
                        row,
                        field: t.field(fid).name().to_owned(),
                    },
                    v.clone(),
                );
            }
        }
    }
    out
}

/// The row tree of a table as nested (id, children) pairs.
pub fn shape(t: &Table) -> Vec<(RowId, Option<RowId>, usize)> {
    t.document_order()
        .into_iter()
        .map(|r| {
            let node = t.row(r).unwrap();
            (r, node.parent(), node.level())
        })
        .collect()
}

/// Walks parent pointers; independent of the table's own ancestry helpers.
pub fn ancestor_by_walk(t: &Table, row: RowId, level: usize) -> Option<RowId> {
    let mut cur = row;
    loop {
        let node = t.row(cur)?;
        if node.level() == level {
            return Some(cur);
        }
        if node.level() < level {
            return None;
        }
        cur = node.parent()?;
    }
}

/// Every row at `level`, by scanning all rows and sorting by document
/// position computed from a separate recursive walk.
pub fn rows_at_level_naive(t: &Table, level: usize) -> Vec<RowId> {
    fn walk(t: &Table, ids: &[RowId], out: &mut Vec<RowId>) {
        for &id in ids {
            out.push(id);
            walk(t, t.row(id).unwrap().children(), out);
        }
    }
    let mut all = Vec::new();
    walk(t, t.roots(), &mut all);
    all.into_iter()
        .filter(|&r| t.row(r).unwrap().level() == level)
        .collect()
}

/// The distinct constrained projection a borrowed table must mirror, as
/// value tuples in the borrowed table's document order. Children of a
/// prefix are the distinct next values among source rows carrying that
/// prefix, in first appearance order.
pub fn borrow_oracle(wb: &Workbook, table: &str) -> Vec<Vec<Value>> {
    let t = wb.table(table).unwrap();
    let mut specs: Vec<(usize, String, String)> = t
        .fields()
        .iter()
        .filter_map(|f| match f.kind() {
            FieldKind::Borrowed { table, field } => Some((f.level(), table.clone(), field.clone())),
            _ => None,
        })
        .collect();
    specs.sort();
    if specs.is_empty() {
        return Vec::new();
    }
    let source = wb.table(&specs[0].1).unwrap();
    let fields: Vec<_> = specs
        .iter()
        .map(|(_, _, f)| source.field_id(f).unwrap())
        .collect();
    let tuple_of = |row: RowId, len: usize| -> Option<Vec<Value>> {
        let mut out = Vec::new();
        for &f in &fields[..len] {
            let owner = ancestor_by_walk(source, row, source.field(f).level())?;
            let v = source.value(owner, f).clone();
            if v.is_empty() {
                return None;
            }
            out.push(v);
        }
        Some(out)
    };
    fn expand(
        prefix: Vec<Value>,
        fields_len: usize,
        candidates: &dyn Fn(usize) -> Vec<Vec<Value>>,
        out: &mut Vec<Vec<Value>>,
    ) {
        if prefix.len() == fields_len {
            return;
        }
        let mut next: Vec<Value> = Vec::new();
        for tuple in candidates(prefix.len() + 1) {
            if tuple[..prefix.len()] == prefix[..] && !next.contains(&tuple[prefix.len()]) {
                next.push(tuple[prefix.len()].clone());
            }
        }
        for v in next {
            let mut child = prefix.clone();
            child.push(v);
            out.push(child.clone());
            expand(child, fields_len, candidates, out);
        }
    }
    let candidates = |len: usize| -> Vec<Vec<Value>> {
        let level = fields[..len]
            .iter()
            .map(|&f| source.field(f).level())
            .max()
            .unwrap();
        rows_at_level_naive(source, level)
            .into_iter()
            .filter_map(|r| tuple_of(r, len))
            .collect()
    };
    let mut out = Vec::new();
    expand(Vec::new(), fields.len(), &candidates, &mut out);
    out
}

/// The borrowed values along each borrowed row's ancestry, in document
/// order.
pub fn borrowed_tuples(wb: &Workbook, table: &str) -> Vec<Vec<Value>> {
    let t = wb.table(table).unwrap();
    let mut borrowed: Vec<(usize, fieldsheet_core::FieldId)> = t
        .fields()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.is_borrowed())
        .map(|(i, f)| (f.level(), fieldsheet_core::FieldId(i)))
        .collect();
    borrowed.sort();
    t.document_order()
        .into_iter()
        .filter(|&r| t.row(r).unwrap().level() < borrowed.len())
        .map(|r| {
            let level = t.row(r).unwrap().level();
            borrowed[..=level]
                .iter()
                .map(|&(l, f)| t.value(ancestor_by_walk(t, r, l).unwrap(), f).clone())
                .collect()
        })
        .collect()
}

/// S-expression form of a parsed formula, written independently of the
/// formula printer.
pub fn sexp(expr: &fieldsheet_core::formula::Expr) -> String {
    use fieldsheet_core::formula::{Expr, Reference, UnaryOp};
    match expr {
        Expr::Number(n) => n.normalize().to_string(),
        Expr::Text(s) => format!("(text {s:?})"),
        Expr::Bool(true) => "TRUE".into(),
        Expr::Bool(false) => "FALSE".into(),
        Expr::Ref(Reference::Local(f)) => format!("(local {f:?})"),
        Expr::Ref(Reference::Cross { table, field }) => format!("(cross {table:?} {field:?})"),
        Expr::Unary(UnaryOp::Neg, inner) => format!("(neg {})", sexp(inner)),
        Expr::Binary(op, l, r) => format!("({} {} {})", op.symbol(), sexp(l), sexp(r)),
        Expr::Call(f, args) => {
            let mut out = format!("({}", f.name());
            for a in args {
                out.push(' ');
                out.push_str(&sexp(a));
            }
            out.push(')');
            out
        }
    }
}

fn grammar_section(heading: &str) -> Vec<(String, String)> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/formula-grammar.md");
    let text = std::fs::read_to_string(&path).unwrap();
    let section = text.split(heading).nth(1).expect("grammar section");
    let section = section.split("\n## ").next().unwrap();
    section
        .lines()
        .filter(|l| l.starts_with("| `"))
        .map(|l| {
            let cells: Vec<&str> = l.trim_matches('|').split(" | ").map(str::trim).collect();
            let strip = |c: &str| c.trim_matches('`').to_owned();
            (strip(cells[0]), strip(cells[1]))
        })
        .collect()
}

/// Rows of the corpus table in `docs/formula-grammar.md`, as (formula,
/// expected S-expression) pairs.
pub fn grammar_corpus() -> Vec<(String, String)> {
    grammar_section("## Corpus")
}

/// Rows of the rejected table in `docs/formula-grammar.md`, as (formula,
/// reason) pairs.
pub fn grammar_rejected() -> Vec<(String, String)> {
    grammar_section("## Rejected")
}

/// Rows a reference denotes from `origin`, by filtering every row of the
/// target level with the scope predicates applied directly.
pub fn scope_oracle(
    wb: &Workbook,
    origin_table: &str,
    origin_row: RowId,
    target_table: &str,
    target_field: &str,
) -> Vec<RowId> {
    let o = wb.table(origin_table).unwrap();
    let x = wb.table(target_table).unwrap();
    let level = x.field_named(target_field).unwrap().level();
    let origin_level = o.row(origin_row).unwrap().level();
    let candidates = rows_at_level_naive(x, level);
    if origin_table == target_table {
        return candidates
            .into_iter()
            .filter(|&c| {
                if level <= origin_level {
                    ancestor_by_walk(o, origin_row, level) == Some(c)
                } else {
                    ancestor_by_walk(o, c, origin_level) == Some(origin_row)
                }
            })
            .collect();
    }
    let mut pairs: Vec<(usize, String, String)> = o
        .fields()
        .iter()
        .filter_map(|f| match f.kind() {
            FieldKind::Borrowed { table, field } if table == target_table => {
                Some((f.level(), f.name().to_owned(), field.clone()))
            }
            _ => None,
        })
        .collect();
    pairs.sort();
    let mut pairs: Vec<(String, String)> = pairs.into_iter().map(|(_, l, f)| (l, f)).collect();
    for link in wb.relations().links() {
        let lt = wb.table_by_id(link.local.table);
        let ft = wb.table_by_id(link.foreign.table);
        if lt.name() == origin_table && ft.name() == target_table {
            pairs.push((
                lt.field(link.local.field).name().to_owned(),
                ft.field(link.foreign.field).name().to_owned(),
            ));
        }
    }
    candidates
        .into_iter()
        .filter(|&c| {
            pairs.iter().all(|(local, foreign)| {
                let lf = o.field_id(local).unwrap();
                let l_level = o.field(lf).level();
                if l_level > origin_level {
                    return true;
                }
                let wanted = o.value(ancestor_by_walk(o, origin_row, l_level).unwrap(), lf);
                if wanted.is_empty() {
                    return false;
                }
                let ff = x.field_id(foreign).unwrap();
                let f_level = x.field(ff).level();
                if f_level <= level {
                    x.value(ancestor_by_walk(x, c, f_level).unwrap(), ff) == wanted
                } else {
                    rows_at_level_naive(x, f_level)
                        .into_iter()
                        .filter(|&d| ancestor_by_walk(x, d, level) == Some(c))
                        .any(|d| x.value(d, ff) == wanted)
                }
            })
        })
        .collect()
}
