//! `field=value` arguments and row selection.

use fieldsheet_core::{FieldId, RowId, Table, Value};

use crate::Failure;

/// `field=value`, with the value read as user input.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub field: String,
    pub value: Value,
}

/// Accepts `Sales Code=Goldfish` and `[Sales Code]=Goldfish`.
pub fn field_name(raw: &str) -> String {
    let raw = raw.trim();
    match raw.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        Some(inner) => inner.to_owned(),
        None => raw.to_owned(),
    }
}

pub fn parse_assignment(raw: &str) -> Result<Assignment, Failure> {
    let (field, value) = raw
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("expected field=value, got `{raw}`")))?;
    Ok(Assignment {
        field: field_name(field),
        value: Value::parse_literal(value),
    })
}

pub fn lookup(t: &Table, name: &str) -> Result<FieldId, Failure> {
    t.field_id(name)
        .ok_or_else(|| Failure::usage(format!("no field `{name}` in `{}`", t.name())))
}

/// Rows at `level` matching every selector. A selector on a shallower
/// level compares the row's ancestor; one on a deeper level matches when
/// any descendant carries the value. Formula fields cannot be selectors.
pub fn select(t: &Table, selectors: &[Assignment], level: usize) -> Result<Vec<RowId>, Failure> {
    let mut resolved = Vec::new();
    for s in selectors {
        let f = lookup(t, &s.field)?;
        if t.field(f).is_formula() {
            return Err(Failure::usage(format!(
                "`{}` is a formula field and cannot be used in --where",
                s.field
            )));
        }
        resolved.push((f, t.field(f).level(), &s.value));
    }
    Ok(t.rows_at_level(level)
        .into_iter()
        .filter(|&row| {
            resolved.iter().all(|&(f, l, v)| {
                if l <= level {
                    t.ancestor_at(row, l).is_some_and(|a| t.value(a, f) == v)
                } else {
                    t.descendants_at(row, l).into_iter().any(|d| t.value(d, f) == v)
                }
            })
        })
        .collect())
}

fn describe(selectors: &[Assignment]) -> String {
    if selectors.is_empty() {
        return "any row".to_owned();
    }
    selectors
        .iter()
        .map(|s| format!("{}={}", s.field, s.value.render()))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Exactly one row, unless `all`.
pub fn select_rows(
    t: &Table,
    selectors: &[Assignment],
    level: usize,
    all: bool,
) -> Result<Vec<RowId>, Failure> {
    let rows = select(t, selectors, level)?;
    match rows.len() {
        0 => Err(Failure::data(
            "#NOMATCH",
            format!("no row of `{}` at level {level} matches {}", t.name(), describe(selectors)),
        )),
        1 => Ok(rows),
        _ if all => Ok(rows),
        n => Err(Failure::data(
            "#MULTI",
            format!(
                "{n} rows of `{}` match {}; narrow the selection or pass --all",
                t.name(),
                describe(selectors)
            ),
        )),
    }
}
