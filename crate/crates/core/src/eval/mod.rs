//! Formula evaluation and incremental recalculation.
//!
//! A reference passed straight to an aggregate contributes its whole cell
//! set. Anywhere else it must denote exactly one cell: no cells is
//! `#NOMATCH`, several is `#MULTI`. Errors propagate left to right, and
//! within a cell set in document order.
//!
//! Empty counts as zero in arithmetic and is skipped by aggregates.

mod graph;
mod recalc;

use std::cmp::Ordering;

use rust_decimal::prelude::*;

use crate::formula::{BinaryOp, Expr, Function, UnaryOp};
use crate::model::{CellAddress, CellKey, Workbook};
use crate::scope;
use crate::value::{ErrorCode, Number, Value};

pub use graph::{DependencyGraph, EdgeKind};
pub use recalc::{CalcResult, CellChange};
pub(crate) use recalc::{recalculate, Pending, PendingEvent};

type Eval<T> = Result<T, ErrorCode>;

/// Decimal places kept from a power with a fractional exponent.
const FRACTIONAL_POWER_DP: u32 = 20;

/// Evaluates `expr` as if it were the formula of the cell at `origin`.
pub fn evaluate(wb: &Workbook, expr: &Expr, origin: CellKey) -> Value {
    match (Evaluator { wb, origin }).scalar(expr) {
        Ok(v) => v,
        Err(code) => Value::Error(code),
    }
}

/// [`evaluate`] from a named address; a bad address is `#REF`.
pub fn evaluate_at(wb: &Workbook, expr: &Expr, origin: &CellAddress) -> Value {
    match wb.cell_key(origin) {
        Ok(key) => evaluate(wb, expr, key),
        Err(_) => Value::Error(ErrorCode::Ref),
    }
}

/// Evaluates the formula of a formula cell.
pub(crate) fn evaluate_cell(wb: &Workbook, key: CellKey) -> Value {
    let field = wb.table_by_id(key.table).field(key.field);
    match field.formula().map(|f| f.expr()) {
        Some(Ok(expr)) => evaluate(wb, expr, key),
        Some(Err(_)) => Value::Error(ErrorCode::Parse),
        None => wb.value(key).clone(),
    }
}

struct Evaluator<'a> {
    wb: &'a Workbook,
    origin: CellKey,
}

fn check(v: Value) -> Eval<Value> {
    match v {
        Value::Error(code) => Err(code),
        v => Ok(v),
    }
}

fn to_number(v: &Value) -> Eval<Number> {
    match v {
        Value::Number(n) => Ok(*n),
        Value::Empty => Ok(Number::ZERO),
        Value::Error(code) => Err(*code),
        Value::Text(_) | Value::Boolean(_) => Err(ErrorCode::Type),
    }
}

impl Evaluator<'_> {
    fn scalar(&self, expr: &Expr) -> Eval<Value> {
        match expr {
            Expr::Number(n) => Ok(Value::Number(*n)),
            Expr::Text(s) => Ok(Value::Text(s.clone())),
            Expr::Bool(b) => Ok(Value::Boolean(*b)),
            Expr::Ref(r) => {
                let set = scope::resolve(self.wb, self.origin, r)?;
                match set.len() {
                    0 => Err(ErrorCode::NoMatch),
                    1 => check(self.wb.value(set.keys().next().expect("one cell")).clone()),
                    _ => Err(ErrorCode::Multi),
                }
            }
            Expr::Unary(UnaryOp::Neg, inner) => {
                let n = to_number(&self.scalar(inner)?)?;
                Ok(Value::Number(-n))
            }
            Expr::Binary(op, lhs, rhs) => {
                if op.is_comparison() {
                    let l = self.scalar(lhs)?;
                    compare(*op, &l, &self.scalar(rhs)?)
                } else {
                    let l = to_number(&self.scalar(lhs)?)?;
                    arithmetic(*op, l, to_number(&self.scalar(rhs)?)?)
                }
            }
            Expr::Call(Function::If, args) => match self.scalar(&args[0])? {
                Value::Boolean(true) => self.scalar(&args[1]),
                Value::Boolean(false) | Value::Empty => self.scalar(&args[2]),
                _ => Err(ErrorCode::Type),
            },
            Expr::Call(Function::Round, args) => {
                let x = to_number(&self.scalar(&args[0])?)?;
                let digits = to_number(&self.scalar(&args[1])?)?;
                round(x, digits)
            }
            Expr::Call(f, args) => self.aggregate(*f, args),
        }
    }

    /// Values an aggregate argument contributes.
    fn collect(&self, arg: &Expr, out: &mut Vec<Value>) -> Eval<()> {
        match arg {
            Expr::Ref(r) => {
                let set = scope::resolve(self.wb, self.origin, r)?;
                for v in set.values(self.wb) {
                    out.push(check(v.clone())?);
                }
            }
            other => out.push(self.scalar(other)?),
        }
        Ok(())
    }

    fn aggregate(&self, f: Function, args: &[Expr]) -> Eval<Value> {
        let mut values = Vec::new();
        for arg in args {
            self.collect(arg, &mut values)?;
        }
        values.retain(|v| !v.is_empty());
        if f == Function::Count {
            return Ok(Value::Number(Number::from(values.len())));
        }
        let numbers = values
            .iter()
            .map(to_number)
            .collect::<Eval<Vec<Number>>>()?;
        match f {
            Function::Sum => sum(&numbers).map(Value::Number),
            Function::Avg => {
                if numbers.is_empty() {
                    return Err(ErrorCode::Div0);
                }
                let total = sum(&numbers)?;
                total
                    .checked_div(Number::from(numbers.len()))
                    .map(Value::Number)
                    .ok_or(ErrorCode::Type)
            }
            Function::Min => Ok(numbers.into_iter().min().map_or(Value::Empty, Value::Number)),
            Function::Max => Ok(numbers.into_iter().max().map_or(Value::Empty, Value::Number)),
            Function::Count | Function::If | Function::Round => unreachable!("handled above"),
        }
    }
}

fn sum(numbers: &[Number]) -> Eval<Number> {
    numbers
        .iter()
        .try_fold(Number::ZERO, |acc, n| acc.checked_add(*n))
        .ok_or(ErrorCode::Type)
}

fn arithmetic(op: BinaryOp, l: Number, r: Number) -> Eval<Value> {
    let result = match op {
        BinaryOp::Add => l.checked_add(r),
        BinaryOp::Sub => l.checked_sub(r),
        BinaryOp::Mul => l.checked_mul(r),
        BinaryOp::Div => {
            if r.is_zero() {
                return Err(ErrorCode::Div0);
            }
            l.checked_div(r)
        }
        BinaryOp::Pow => return power(l, r),
        _ => unreachable!("comparison operator"),
    };
    result.map(Value::Number).ok_or(ErrorCode::Type)
}

fn power(base: Number, exp: Number) -> Eval<Value> {
    if base.is_zero() && exp.is_sign_negative() && !exp.is_zero() {
        return Err(ErrorCode::Div0);
    }
    let result = if exp.fract().is_zero() {
        match exp.to_i64() {
            Some(e) => base.checked_powi(e),
            None => None,
        }
    } else if base.is_sign_negative() && !base.is_zero() {
        return Err(ErrorCode::Type);
    } else if base.is_zero() {
        Some(Number::ZERO)
    } else {
        // The series expansion leaves noise in the last digits.
        base.checked_powd(exp)
            .map(|n| n.round_dp_with_strategy(FRACTIONAL_POWER_DP, RoundingStrategy::MidpointNearestEven))
    };
    result.map(Value::Number).ok_or(ErrorCode::Type)
}

fn round(x: Number, digits: Number) -> Eval<Value> {
    let digits = digits.trunc().to_i64().ok_or(ErrorCode::Type)?;
    let strategy = RoundingStrategy::MidpointNearestEven;
    if digits >= 0 {
        let dp = u32::try_from(digits.min(28)).expect("small");
        return Ok(Value::Number(x.round_dp_with_strategy(dp, strategy)));
    }
    if digits < -28 {
        return Ok(Value::Number(Number::ZERO));
    }
    let scale = Number::TEN
        .checked_powi(-digits)
        .ok_or(ErrorCode::Type)?;
    let shifted = x.checked_div(scale).ok_or(ErrorCode::Type)?;
    shifted
        .round_dp_with_strategy(0, strategy)
        .checked_mul(scale)
        .map(Value::Number)
        .ok_or(ErrorCode::Type)
}

fn compare(op: BinaryOp, l: &Value, r: &Value) -> Eval<Value> {
    let ordering = match (l, r) {
        (Value::Empty, Value::Empty) => Ordering::Equal,
        (Value::Number(a), Value::Number(b)) => a.cmp(b),
        (Value::Number(a), Value::Empty) => a.cmp(&Number::ZERO),
        (Value::Empty, Value::Number(b)) => Number::ZERO.cmp(b),
        (Value::Text(a), Value::Text(b)) => a.as_str().cmp(b.as_str()),
        (Value::Text(a), Value::Empty) => a.as_str().cmp(""),
        (Value::Empty, Value::Text(b)) => "".cmp(b.as_str()),
        (Value::Boolean(a), Value::Boolean(b)) => a.cmp(b),
        (Value::Boolean(a), Value::Empty) => a.cmp(&false),
        (Value::Empty, Value::Boolean(b)) => false.cmp(b),
        _ => return Err(ErrorCode::Type),
    };
    let result = match op {
        BinaryOp::Eq => ordering == Ordering::Equal,
        BinaryOp::Ne => ordering != Ordering::Equal,
        BinaryOp::Lt => ordering == Ordering::Less,
        BinaryOp::Le => ordering != Ordering::Greater,
        BinaryOp::Gt => ordering == Ordering::Greater,
        BinaryOp::Ge => ordering != Ordering::Less,
        _ => unreachable!("arithmetic operator"),
    };
    Ok(Value::Boolean(result))
}
