//! Cell payloads.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Numeric payload. Exact decimal arithmetic with 28 significant digits.
pub type Number = Decimal;

/// Error codes a cell can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    Parse,
    Ref,
    Type,
    Div0,
    Cycle,
    NoMatch,
    Multi,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 7] = [
        ErrorCode::Parse,
        ErrorCode::Ref,
        ErrorCode::Type,
        ErrorCode::Div0,
        ErrorCode::Cycle,
        ErrorCode::NoMatch,
        ErrorCode::Multi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Parse => "#PARSE",
            ErrorCode::Ref => "#REF",
            ErrorCode::Type => "#TYPE",
            ErrorCode::Div0 => "#DIV0",
            ErrorCode::Cycle => "#CYCLE",
            ErrorCode::NoMatch => "#NOMATCH",
            ErrorCode::Multi => "#MULTI",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ErrorCode::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or(())
    }
}

/// A cell value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub enum Value {
    Number(Number),
    Text(String),
    Boolean(bool),
    #[default]
    Empty,
    Error(ErrorCode),
}

impl Value {
    pub fn number(n: impl Into<Number>) -> Self {
        Value::Number(n.into())
    }

    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Value::Empty)
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        match self {
            Value::Error(code) => Some(*code),
            _ => None,
        }
    }

    /// Interprets user-entered text: blank is `Empty`, `TRUE`/`FALSE` are
    /// booleans, decimal literals are numbers, a double-quoted string is
    /// forced text, and anything else is text verbatim.
    pub fn parse_literal(s: &str) -> Value {
        if s.is_empty() {
            return Value::Empty;
        }
        if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
            return Value::Text(s[1..s.len() - 1].replace("\"\"", "\""));
        }
        if s.eq_ignore_ascii_case("true") {
            return Value::Boolean(true);
        }
        if s.eq_ignore_ascii_case("false") {
            return Value::Boolean(false);
        }
        if looks_numeric(s) {
            if let Some(n) = parse_decimal(s) {
                return Value::Number(n);
            }
        }
        Value::Text(s.to_owned())
    }

    /// Canonical, locale-free rendering used by the CLI and CSV export of
    /// unformatted fields.
    pub fn render(&self) -> String {
        match self {
            Value::Number(n) => render_number(*n),
            Value::Text(s) => s.clone(),
            Value::Boolean(true) => "TRUE".to_owned(),
            Value::Boolean(false) => "FALSE".to_owned(),
            Value::Empty => String::new(),
            Value::Error(code) => code.as_str().to_owned(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Number(n) => serde_json::Value::Number(
                serde_json::Number::from_str(&render_number(*n))
                    .expect("canonical decimal is a valid JSON number"),
            ),
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Boolean(b) => serde_json::Value::Bool(*b),
            Value::Empty => serde_json::Value::Null,
            Value::Error(code) => serde_json::json!({ "error": code.as_str() }),
        }
    }

    pub fn from_json(json: &serde_json::Value) -> Result<Value, String> {
        match json {
            serde_json::Value::Null => Ok(Value::Empty),
            serde_json::Value::Bool(b) => Ok(Value::Boolean(*b)),
            serde_json::Value::String(s) => Ok(Value::Text(s.clone())),
            serde_json::Value::Number(n) => {
                let text = n.to_string();
                parse_decimal(&text)
                    .map(Value::Number)
                    .ok_or_else(|| format!("number {text} is out of range"))
            }
            serde_json::Value::Object(map) if map.len() == 1 => match map.get("error") {
                Some(serde_json::Value::String(code)) => code
                    .parse()
                    .map(Value::Error)
                    .map_err(|_| format!("unknown error code {code}")),
                _ => Err("expected {\"error\": code}".to_owned()),
            },
            other => Err(format!("not a cell value: {other}")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Boolean(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<Number> for Value {
    fn from(n: Number) -> Self {
        Value::Number(n)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Number(n.into())
    }
}

impl From<ErrorCode> for Value {
    fn from(code: ErrorCode) -> Self {
        Value::Error(code)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = serde_json::Value::deserialize(deserializer)?;
        Value::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// Shortest plain-digit rendering: no exponent, no trailing zeros, no `-0`.
pub fn render_number(n: Number) -> String {
    if n.is_zero() {
        return "0".to_owned();
    }
    n.normalize().to_string()
}

/// Parses plain or scientific decimal text.
pub fn parse_decimal(s: &str) -> Option<Number> {
    Decimal::from_str_exact(s)
        .ok()
        .or_else(|| Decimal::from_scientific(s).ok())
}

fn looks_numeric(s: &str) -> bool {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let mut seen_digit = false;
    let mut chars = body.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            seen_digit = true;
            chars.next();
        } else {
            break;
        }
    }
    if chars.peek() == Some(&'.') {
        chars.next();
        while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
            seen_digit = true;
            chars.next();
        }
    }
    if !seen_digit {
        return false;
    }
    if matches!(chars.peek(), Some('e' | 'E')) {
        chars.next();
        if matches!(chars.peek(), Some('+' | '-')) {
            chars.next();
        }
        let mut exp_digit = false;
        while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
            exp_digit = true;
            chars.next();
        }
        if !exp_digit {
            return false;
        }
    }
    chars.next().is_none()
}
