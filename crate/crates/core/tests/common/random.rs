//! Random workbooks, edit scripts and formula trees.

use proptest::prelude::*;

use fieldsheet_core::formula::{BinaryOp, Expr, Function, Reference};
use fieldsheet_core::{FieldDef, Number, RowId, Value, Workbook};

// ---- edit scripts ---------------------------------------------------------

/// Shape of a three-table workbook: `A` holds data, `B` borrows `A`'s keys,
/// `C` holds documents whose lines link to `B`.
#[derive(Debug, Clone)]
pub struct Schema {
    pub a_depth: usize,
    /// Template pick for each of `A`'s formula fields (one per level).
    pub a_formulas: Vec<u8>,
    pub b_second_level: bool,
    pub b_formula: u8,
    pub c_formulas: (u8, u8),
}

#[derive(Debug, Clone)]
pub enum Edit {
    Insert { table: u8, parent: u16 },
    Delete { table: u8, row: u16 },
    Set { table: u8, row: u16, field: u8, value: u8 },
    Formula { table: u8, field: u8, template: u8 },
}

pub fn schema() -> impl Strategy<Value = Schema> {
    (1usize..=4)
        .prop_flat_map(|depth| {
            (
                Just(depth),
                proptest::collection::vec(any::<u8>(), depth),
                any::<bool>(),
                any::<u8>(),
                (any::<u8>(), any::<u8>()),
            )
        })
        .prop_map(|(a_depth, a_formulas, b_second_level, b_formula, c_formulas)| Schema {
            a_depth,
            a_formulas,
            b_second_level,
            b_formula,
            c_formulas,
        })
}

pub fn edit() -> impl Strategy<Value = Edit> {
    prop_oneof![
        4 => (0u8..2, any::<u16>()).prop_map(|(table, parent)| Edit::Insert { table, parent }),
        1 => (0u8..2, any::<u16>()).prop_map(|(table, row)| Edit::Delete { table, row }),
        6 => (0u8..2, any::<u16>(), any::<u8>(), any::<u8>())
            .prop_map(|(table, row, field, value)| Edit::Set { table, row, field, value }),
        1 => (0u8..3, any::<u8>(), any::<u8>())
            .prop_map(|(table, field, template)| Edit::Formula { table, field, template }),
    ]
}

pub fn script() -> impl Strategy<Value = (Schema, Vec<Edit>)> {
    (schema(), proptest::collection::vec(edit(), 1..30))
}

const KEYS: [&str; 3] = ["x", "y", "z"];
pub const MAX_ROWS: usize = 60;

fn pick_value(key: bool, pick: u8) -> Value {
    if key {
        return match pick % 5 {
            0 => Value::Empty,
            i => Value::text(KEYS[(i as usize - 1) % 3]),
        };
    }
    match pick % 12 {
        0 => Value::Empty,
        1 => Value::text("x"),
        2 => Value::Boolean(true),
        3 => Value::parse_literal("2.5"),
        4 => Value::parse_literal("-1.25"),
        i => Value::from(i as i64 - 6),
    }
}

/// Formula templates for `A`'s field at `level`.
fn a_templates(depth: usize, level: usize) -> Vec<String> {
    let mut t = vec![
        format!("=n{level}*2+1"),
        format!("=IF(n{level} > 1, n{level}, -1)"),
        "=COUNT(k)".to_owned(),
        format!("=n{level} - n0 / 2"),
    ];
    for deeper in level + 1..depth {
        t.push(format!("=SUM(n{deeper})"));
        t.push(format!("=MAX(n{deeper}) - MIN(f{deeper})"));
        t.push(format!("=AVG(f{deeper})"));
    }
    for above in 0..level {
        t.push(format!("=f{above} + n{level}"));
    }
    t.push(format!("=f{level} + 1"));
    t.push("=SUM(C!q)".to_owned());
    t.push(format!("=ROUND(n{level} / 3, 1)"));
    t
}

fn b_templates(depth: usize) -> Vec<String> {
    vec![
        format!("=SUM(A!n{})", depth - 1),
        "=COUNT(A!k)".to_owned(),
        format!("=SUM(A!f{})", depth - 1),
        "=k".to_owned(),
    ]
}

fn c_templates() -> Vec<String> {
    vec![
        "=q*B!t".to_owned(),
        "=q + B!t".to_owned(),
        "=IF(q > 2, q, 0)".to_owned(),
        "=SUM(cost)".to_owned(),
        "=COUNT(item) + SUM(q)".to_owned(),
    ]
}

fn pick<T: Clone>(items: &[T], i: u8) -> T {
    items[i as usize % items.len()].clone()
}

pub fn build(schema: &Schema) -> Workbook {
    let mut wb = Workbook::new("random");
    let depth = schema.a_depth;
    let levels: Vec<String> = (0..depth).map(|l| format!("L{l}")).collect();
    wb.add_table("A", &levels).unwrap();
    for l in 0..depth {
        wb.add_field("A", FieldDef::data(format!("n{l}"), l)).unwrap();
    }
    wb.add_field("A", FieldDef::data("k", depth - 1)).unwrap();
    for (l, &p) in schema.a_formulas.iter().enumerate() {
        let text = pick(&a_templates(depth, l), p);
        wb.add_field("A", FieldDef::formula(format!("f{l}"), l, text)).unwrap();
    }

    let b_levels: &[&str] = if schema.b_second_level { &["K", "N"] } else { &["K"] };
    wb.add_table("B", b_levels).unwrap();
    wb.add_field("B", FieldDef::borrowed("k", 0, "A", "k")).unwrap();
    if schema.b_second_level {
        wb.add_field("B", FieldDef::borrowed("n0", 1, "A", "n0")).unwrap();
    }
    wb.add_field("B", FieldDef::formula("t", 0, pick(&b_templates(depth), schema.b_formula)))
        .unwrap();

    wb.add_table("C", &["Doc", "Line"]).unwrap();
    wb.add_field("C", FieldDef::data("who", 0)).unwrap();
    wb.add_field("C", FieldDef::data("item", 1)).unwrap();
    wb.add_field("C", FieldDef::data("q", 1)).unwrap();
    let cost = pick(&c_templates()[..3], schema.c_formulas.0);
    wb.add_field("C", FieldDef::formula("cost", 1, cost)).unwrap();
    let total = pick(&c_templates()[3..], schema.c_formulas.1);
    wb.add_field("C", FieldDef::formula("total", 0, total)).unwrap();
    wb.declare_link("C", "item", "B", "k").unwrap();
    wb.recalculate();
    wb
}

/// Applies one edit; edits that do not fit the current workbook are
/// skipped. Returns whether anything was attempted.
pub fn apply(wb: &mut Workbook, edit: &Edit) -> bool {
    let table_name = |t: u8| if t % 2 == 0 { "A" } else { "C" };
    match *edit {
        Edit::Insert { table, parent } => {
            let name = table_name(table);
            let t = wb.table(name).unwrap();
            if t.row_count() >= MAX_ROWS {
                return false;
            }
            let candidates: Vec<Option<RowId>> = std::iter::once(None)
                .chain(
                    t.document_order()
                        .into_iter()
                        .filter(|&r| t.row(r).unwrap().level() + 1 < t.depth())
                        .map(Some),
                )
                .collect();
            let parent = candidates[parent as usize % candidates.len()];
            let siblings = t.children_of(parent).len();
            let index = parent.map_or(siblings, |p| p.0 as usize % (siblings + 1));
            wb.insert_row(name, parent, Some(index)).unwrap();
            true
        }
        Edit::Delete { table, row } => {
            let name = table_name(table);
            let rows = wb.table(name).unwrap().document_order();
            if rows.is_empty() {
                return false;
            }
            wb.delete_row(name, rows[row as usize % rows.len()]).unwrap();
            true
        }
        Edit::Set {
            table,
            row,
            field,
            value,
        } => {
            let name = table_name(table);
            let t = wb.table(name).unwrap();
            let rows = t.document_order();
            if rows.is_empty() {
                return false;
            }
            let r = rows[row as usize % rows.len()];
            let level = t.row(r).unwrap().level();
            let fields: Vec<String> = t
                .fields()
                .iter()
                .filter(|f| f.level() == level && f.is_data())
                .map(|f| f.name().to_owned())
                .collect();
            if fields.is_empty() {
                return false;
            }
            let f = pick(&fields, field);
            let key = f == "k" || f == "item";
            wb.set_cell(name, r, &f, pick_value(key, value)).unwrap();
            true
        }
        Edit::Formula {
            table,
            field,
            template,
        } => {
            match table {
                0 => {
                    let depth = wb.table("A").unwrap().depth();
                    let level = field as usize % depth;
                    let text = pick(&a_templates(depth, level), template);
                    wb.set_formula("A", &format!("f{level}"), &text).unwrap();
                }
                1 => {
                    let depth = wb.table("A").unwrap().depth();
                    wb.set_formula("B", "t", &pick(&b_templates(depth), template)).unwrap();
                }
                _ => {
                    if field % 2 == 0 {
                        wb.set_formula("C", "cost", &pick(&c_templates()[..3], template)).unwrap();
                    } else {
                        wb.set_formula("C", "total", &pick(&c_templates()[3..], template))
                            .unwrap();
                    }
                }
            }
            true
        }
    }
}

// ---- scope triples --------------------------------------------------------

/// A workbook with two data tables `T` and `U` and a table `V` borrowing
/// from `T`, with optional links, plus an origin cell and a reference.
#[derive(Debug, Clone)]
pub struct ScopeCase {
    pub t_depth: usize,
    pub u_depth: usize,
    pub t_rows: Vec<(u16, u8, u8)>,
    pub u_rows: Vec<(u16, u8, u8)>,
    pub link_u_to_t: Option<(u8, u8)>,
    pub link_t_to_u: Option<(u8, u8)>,
    pub v_borrows: (u8, u8),
    pub origin_table: u8,
    pub origin_row: u16,
    pub origin_field: u8,
    pub target_table: u8,
    pub target_field: u8,
}

pub fn scope_case() -> impl Strategy<Value = ScopeCase> {
    let rows = || proptest::collection::vec((any::<u16>(), any::<u8>(), any::<u8>()), 0..50);
    (
        (1usize..=4, 1usize..=3, rows(), rows()),
        (
            proptest::option::of((any::<u8>(), any::<u8>())),
            proptest::option::of((any::<u8>(), any::<u8>())),
            (any::<u8>(), any::<u8>()),
        ),
        (0u8..3, any::<u16>(), any::<u8>(), 0u8..3, any::<u8>()),
    )
        .prop_map(
            |(
                (t_depth, u_depth, t_rows, u_rows),
                (link_u_to_t, link_t_to_u, v_borrows),
                (origin_table, origin_row, origin_field, target_table, target_field),
            )| ScopeCase {
                t_depth,
                u_depth,
                t_rows,
                u_rows,
                link_u_to_t,
                link_t_to_u,
                v_borrows,
                origin_table,
                origin_row,
                origin_field,
                target_table,
                target_field,
            },
        )
}

fn small_value(pick: u8) -> Value {
    match pick % 5 {
        0 => Value::Empty,
        1 => Value::text("x"),
        i => Value::from(i as i64),
    }
}

fn grow(wb: &mut Workbook, table: &str, prefix: &str, rows: &[(u16, u8, u8)]) {
    for &(parent, a, b) in rows {
        let t = wb.table(table).unwrap();
        let candidates: Vec<Option<RowId>> = std::iter::once(None)
            .chain(
                t.document_order()
                    .into_iter()
                    .filter(|&r| t.row(r).unwrap().level() + 1 < t.depth())
                    .map(Some),
            )
            .collect();
        let parent = candidates[parent as usize % candidates.len()];
        let row = wb.insert_row(table, parent, None).unwrap();
        let level = wb.table(table).unwrap().row(row).unwrap().level();
        wb.set_cell(table, row, &format!("{prefix}{level}"), small_value(a)).unwrap();
        wb.set_cell(table, row, &format!("{prefix}{level}x"), small_value(b)).unwrap();
    }
}

pub const SCOPE_TABLES: [&str; 3] = ["T", "U", "V"];

pub fn build_scope(case: &ScopeCase) -> Workbook {
    let mut wb = Workbook::new("scope");
    for (name, prefix, depth) in [("T", "a", case.t_depth), ("U", "b", case.u_depth)] {
        let levels: Vec<String> = (0..depth).map(|l| format!("{name}{l}")).collect();
        wb.add_table(name, &levels).unwrap();
        for l in 0..depth {
            wb.add_field(name, FieldDef::data(format!("{prefix}{l}"), l)).unwrap();
            wb.add_field(name, FieldDef::data(format!("{prefix}{l}x"), l)).unwrap();
        }
    }
    grow(&mut wb, "T", "a", &case.t_rows);
    grow(&mut wb, "U", "b", &case.u_rows);
    if let Some((local, foreign)) = case.link_u_to_t {
        let local = format!("b{}", local as usize % case.u_depth);
        let foreign = format!("a{}", foreign as usize % case.t_depth);
        wb.declare_link("U", &local, "T", &foreign).unwrap();
    }
    if let Some((local, foreign)) = case.link_t_to_u {
        let local = format!("a{}x", local as usize % case.t_depth);
        let foreign = format!("b{}x", foreign as usize % case.u_depth);
        wb.declare_link("T", &local, "U", &foreign).unwrap();
    }
    wb.add_table("V", &["V0", "V1", "V2"]).unwrap();
    let first = format!("a{}", case.v_borrows.0 as usize % case.t_depth);
    let second = format!("a{}x", case.v_borrows.1 as usize % case.t_depth);
    wb.add_field("V", FieldDef::borrowed("c0", 0, "T", &first)).unwrap();
    wb.add_field("V", FieldDef::borrowed("c1", 1, "T", &second)).unwrap();
    wb.add_field("V", FieldDef::data("c2", 2)).unwrap();
    let parents = wb.table("V").unwrap().rows_at_level(1);
    for (i, p) in parents.into_iter().enumerate() {
        let row = wb.insert_row("V", Some(p), None).unwrap();
        wb.set_cell("V", row, "c2", Value::from(i as i64 % 3)).unwrap();
    }
    wb.recalculate();
    wb
}

// ---- formula trees --------------------------------------------------------

fn name() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z_][A-Za-z0-9_]{0,8}",
        "[A-Za-z][A-Za-z0-9 +.!()-]{0,10}[A-Za-z0-9)]",
        Just("A1".to_owned()),
        Just("r2c3".to_owned()),
        Just("TRUE".to_owned()),
        Just("Sum".to_owned()),
        Just("Net + VAT".to_owned()),
        Just("VAT Rate".to_owned()),
    ]
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u64..1_000_000, 0u32..4).prop_map(|(m, scale)| Expr::Number(Number::new(m as i64, scale))),
        "[a-zA-Z0-9 ,\"!\\[\\]]{0,8}".prop_map(Expr::Text),
        any::<bool>().prop_map(Expr::Bool),
        name().prop_map(|n| Expr::Ref(Reference::Local(n))),
        (name(), name()).prop_map(|(t, f)| Expr::Ref(Reference::Cross { table: t, field: f })),
    ]
}

pub fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (proptest::sample::select(BinaryOp::ALL.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (
                proptest::sample::select(Function::ALL.to_vec()),
                proptest::collection::vec(inner, 1..4)
            )
                .prop_map(|(f, mut args)| {
                    let (min, max) = f.arity();
                    while args.len() < min {
                        args.push(Expr::Number(Number::ONE));
                    }
                    if let Some(max) = max {
                        args.truncate(max);
                    }
                    Expr::call(f, args)
                }),
        ]
    })
}

// ---- checks ---------------------------------------------------------------

fn formula_cell_count(wb: &Workbook) -> usize {
    wb.tables()
        .iter()
        .map(|t| {
            t.fields()
                .iter()
                .filter(|f| f.is_formula())
                .map(|f| t.rows_at_level(f.level()).len())
                .sum::<usize>()
        })
        .sum()
}

/// Runs an edit script, recalculating incrementally after every edit and
/// comparing every cell with a fresh load of the saved workbook.
pub fn run_script(schema: &Schema, edits: &[Edit]) -> Result<(), String> {
    use fieldsheet_core::io::{load, save};
    let mut wb = build(schema);
    for (step, e) in edits.iter().enumerate() {
        let before = super::snapshot(&wb);
        let version = wb.version();
        if !apply(&mut wb, e) {
            continue;
        }
        if wb.version() <= version {
            return Err(format!("step {step}: version did not advance after {e:?}"));
        }
        let result = wb.recalculate();
        if result.evaluated_count > formula_cell_count(&wb) {
            return Err(format!(
                "step {step}: evaluated {} cells, only {} formula cells",
                result.evaluated_count,
                formula_cell_count(&wb)
            ));
        }
        wb.check_integrity().map_err(|m| format!("step {step}: {m}"))?;
        let after = super::snapshot(&wb);
        let fresh = load(&save(&wb)).map_err(|err| format!("step {step}: {err}"))?.workbook;
        let expected = super::snapshot(&fresh);
        if after != expected {
            let mut diffs: Vec<String> = expected
                .iter()
                .filter(|(k, v)| after.get(*k) != Some(*v))
                .map(|(k, v)| format!("{k}: incremental {:?}, full {v:?}", after.get(k)))
                .collect();
            diffs.extend(
                after
                    .keys()
                    .filter(|k| !expected.contains_key(*k))
                    .map(|k| format!("{k}: only in incremental")),
            );
            diffs.sort();
            return Err(format!("step {step} after {e:?}: {}", diffs.join("; ")));
        }
        for c in &result.changed {
            if before.get(&c.address) == after.get(&c.address) && before.contains_key(&c.address) {
                return Err(format!("step {step}: {} reported changed but is equal", c.address));
            }
        }
        for (k, v) in &after {
            let is_formula = wb
                .table(&k.table)
                .and_then(|t| t.field_named(&k.field))
                .is_some_and(|f| f.is_formula());
            if is_formula && before.get(k).is_some_and(|old| old != v)
                && !result.changed.iter().any(|c| &c.address == k)
            {
                return Err(format!("step {step}: {k} changed but was not reported"));
            }
        }
        if super::borrowed_tuples(&wb, "B") != super::borrow_oracle(&wb, "B") {
            return Err(format!("step {step}: borrowed rows differ from the projection"));
        }
        if !wb.sync_borrows().is_empty() {
            return Err(format!("step {step}: second sync was not empty"));
        }
    }
    Ok(())
}

/// Checks one scope triple against the naive oracle. Returns `Ok(false)`
/// when the case has no origin row.
pub fn check_scope(case: &ScopeCase) -> Result<bool, String> {
    use fieldsheet_core::{formula::Reference, scope, CellKey};
    let wb = build_scope(case);
    let origin_name = SCOPE_TABLES[case.origin_table as usize % 3];
    let target_name = SCOPE_TABLES[case.target_table as usize % 3];
    let o = wb.table(origin_name).unwrap();
    let rows = o.document_order();
    if rows.is_empty() {
        return Ok(false);
    }
    let row = rows[case.origin_row as usize % rows.len()];
    let level = o.row(row).unwrap().level();
    let fields: Vec<_> = o.field_ids_at_level(level).collect();
    if fields.is_empty() {
        return Ok(false);
    }
    let origin = CellKey::new(
        wb.table_id(origin_name).unwrap(),
        row,
        fields[case.origin_field as usize % fields.len()],
    );
    let x = wb.table(target_name).unwrap();
    let target = x.fields()[case.target_field as usize % x.fields().len()].name().to_owned();
    let reference = if origin_name == target_name && case.target_field % 2 == 0 {
        Reference::local(&target)
    } else {
        Reference::cross(target_name, &target)
    };
    let got = scope::resolve(&wb, origin, &reference).map_err(|e| format!("{e:?}"))?;
    let again = scope::resolve(&wb, origin, &reference).map_err(|e| format!("{e:?}"))?;
    if got.rows != again.rows {
        return Err("resolution is not deterministic".into());
    }
    let expected = super::scope_oracle(&wb, origin_name, row, target_name, &target);
    if got.rows != expected {
        return Err(format!(
            "{origin_name} row {row} -> {reference}: got {:?}, oracle {:?}",
            got.rows, expected
        ));
    }
    Ok(true)
}
