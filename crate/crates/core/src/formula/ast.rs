use std::fmt;

use crate::value::Number;

/// A field reference as written in a formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Reference {
    /// `Total`, `[Monthly Total]`: a field of the formula's own table.
    Local(String),
    /// `Sales!Total`, `Sales![Sales Code]`
    Cross { table: String, field: String },
}

impl Reference {
    pub fn local(field: impl Into<String>) -> Self {
        Reference::Local(field.into())
    }

    pub fn cross(table: impl Into<String>, field: impl Into<String>) -> Self {
        Reference::Cross {
            table: table.into(),
            field: field.into(),
        }
    }

    pub fn field(&self) -> &str {
        match self {
            Reference::Local(field) | Reference::Cross { field, .. } => field,
        }
    }

    pub fn table(&self) -> Option<&str> {
        match self {
            Reference::Local(_) => None,
            Reference::Cross { table, .. } => Some(table),
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::Local(field) => f.write_str(&super::printer::quote_name(field)),
            Reference::Cross { table, field } => write!(
                f,
                "{}!{}",
                super::printer::quote_name(table),
                super::printer::quote_name(field)
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 11] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Pow,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }
}

/// Built-in functions. Names are matched case-insensitively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sum,
    Count,
    Avg,
    Min,
    Max,
    If,
    Round,
}

impl Function {
    pub const ALL: [Function; 7] = [
        Function::Sum,
        Function::Count,
        Function::Avg,
        Function::Min,
        Function::Max,
        Function::If,
        Function::Round,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sum => "SUM",
            Function::Count => "COUNT",
            Function::Avg => "AVG",
            Function::Min => "MIN",
            Function::Max => "MAX",
            Function::If => "IF",
            Function::Round => "ROUND",
        }
    }

    pub fn from_name(name: &str) -> Option<Function> {
        Function::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }

    /// Aggregates consume whole cell sets when handed a bare reference.
    pub fn is_aggregate(self) -> bool {
        matches!(
            self,
            Function::Sum | Function::Count | Function::Avg | Function::Min | Function::Max
        )
    }

    /// Accepted argument counts as `(min, max)`.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            Function::If => (3, Some(3)),
            Function::Round => (2, Some(2)),
            _ => (1, None),
        }
    }
}

/// Parsed formula.
///
/// Number literals are never negative: `-3` parses as `Unary(Neg, 3)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Number(Number),
    Text(String),
    Bool(bool),
    Ref(Reference),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Function, Vec<Expr>),
}

impl Expr {
    pub fn local(field: impl Into<String>) -> Expr {
        Expr::Ref(Reference::local(field))
    }

    pub fn cross(table: impl Into<String>, field: impl Into<String>) -> Expr {
        Expr::Ref(Reference::cross(table, field))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn neg(inner: Expr) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(inner))
    }

    pub fn call(function: Function, args: Vec<Expr>) -> Expr {
        Expr::Call(function, args)
    }

    pub fn number(n: impl Into<Number>) -> Expr {
        Expr::Number(n.into())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print(self))
    }
}
