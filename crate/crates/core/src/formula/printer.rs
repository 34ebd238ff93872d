use super::ast::{BinaryOp, Expr, UnaryOp};
use super::lexer::{is_identifier, is_positional};
use crate::value::render_number;

const CMP: u8 = 1;
const ADD: u8 = 2;
const MUL: u8 = 3;
const UNARY: u8 = 4;
const POW: u8 = 5;
const ATOM: u8 = 6;

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Unary(..) => UNARY,
        Expr::Binary(op, ..) => match op {
            BinaryOp::Add | BinaryOp::Sub => ADD,
            BinaryOp::Mul | BinaryOp::Div => MUL,
            BinaryOp::Pow => POW,
            _ => CMP,
        },
        // Negative literals cannot be written directly.
        Expr::Number(n) if n.is_sign_negative() && !n.is_zero() => UNARY,
        _ => ATOM,
    }
}

/// Writes `name` bare when the lexer would read it back as the same
/// identifier, bracketed otherwise.
pub(crate) fn quote_name(name: &str) -> String {
    let bare = is_identifier(name)
        && !is_positional(name)
        && !name.eq_ignore_ascii_case("TRUE")
        && !name.eq_ignore_ascii_case("FALSE");
    if bare {
        name.to_owned()
    } else {
        format!("[{name}]")
    }
}

pub(crate) fn write_expr(expr: &Expr, out: &mut String) {
    match expr {
        Expr::Number(n) => out.push_str(&render_number(*n)),
        Expr::Text(s) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\""));
            out.push('"');
        }
        Expr::Bool(true) => out.push_str("TRUE"),
        Expr::Bool(false) => out.push_str("FALSE"),
        Expr::Ref(r) => out.push_str(&r.to_string()),
        Expr::Unary(UnaryOp::Neg, inner) => {
            out.push('-');
            write_child(inner, UNARY, out);
        }
        Expr::Binary(op, lhs, rhs) => {
            let (left_min, right_min) = match precedence(expr) {
                CMP => (ADD, ADD),
                POW => (ATOM, UNARY),
                p => (p, p + 1),
            };
            write_child(lhs, left_min, out);
            out.push_str(op.symbol());
            write_child(rhs, right_min, out);
        }
        Expr::Call(function, args) => {
            out.push_str(function.name());
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_expr(arg, out);
            }
            out.push(')');
        }
    }
}

fn write_child(child: &Expr, min: u8, out: &mut String) {
    if precedence(child) < min {
        out.push('(');
        write_expr(child, out);
        out.push(')');
    } else {
        write_expr(child, out);
    }
}
