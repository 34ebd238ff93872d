//! Per-field display formats. Formats only affect rendering; stored numbers
//! keep full precision.

use std::fmt;
use std::str::FromStr;

use rust_decimal::RoundingStrategy;

use crate::value::{render_number, Number, Value};

const DEFAULT_CURRENCY: &str = "£";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DisplayFormat {
    /// `currency-2dp` or `currency(€)-2dp`: symbol, thousands separators.
    Currency { symbol: String, decimals: u32 },
    /// `fixed-3dp`
    Fixed { decimals: u32 },
    /// `percent-1dp`: value × 100 followed by `%`.
    Percent { decimals: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown display format `{0}` (expected currency-Ndp, currency(SYM)-Ndp, fixed-Ndp or percent-Ndp)")]
pub struct FormatParseError(pub String);

impl DisplayFormat {
    pub fn render(&self, value: &Value) -> String {
        let Value::Number(n) = value else {
            return value.render();
        };
        match self {
            DisplayFormat::Currency { symbol, decimals } => {
                let rounded = round_half_even(*n, *decimals);
                let sign = if rounded.is_sign_negative() && !rounded.is_zero() {
                    "-"
                } else {
                    ""
                };
                let digits = fixed_digits(rounded.abs(), *decimals);
                format!("{sign}{symbol}{}", group_thousands(&digits))
            }
            DisplayFormat::Fixed { decimals } => {
                let rounded = round_half_even(*n, *decimals);
                let sign = if rounded.is_sign_negative() && !rounded.is_zero() {
                    "-"
                } else {
                    ""
                };
                format!("{sign}{}", fixed_digits(rounded.abs(), *decimals))
            }
            DisplayFormat::Percent { decimals } => {
                let Some(scaled) = n.checked_mul(Number::ONE_HUNDRED) else {
                    return render_number(*n);
                };
                let rounded = round_half_even(scaled, *decimals);
                let sign = if rounded.is_sign_negative() && !rounded.is_zero() {
                    "-"
                } else {
                    ""
                };
                format!("{sign}{}%", fixed_digits(rounded.abs(), *decimals))
            }
        }
    }
}

/// Renders `value` with `format` when one is set, canonically otherwise.
pub fn render_with(format: Option<&DisplayFormat>, value: &Value) -> String {
    match format {
        Some(f) => f.render(value),
        None => value.render(),
    }
}

fn round_half_even(n: Number, decimals: u32) -> Number {
    n.round_dp_with_strategy(decimals, RoundingStrategy::MidpointNearestEven)
}

fn fixed_digits(n: Number, decimals: u32) -> String {
    let mut n = n;
    n.rescale(decimals);
    n.to_string()
}

fn group_thousands(digits: &str) -> String {
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let mut out = String::with_capacity(digits.len() + int.len() / 3);
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if let Some(frac) = frac {
        out.push('.');
        out.push_str(frac);
    }
    out
}

impl fmt::Display for DisplayFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisplayFormat::Currency { symbol, decimals } if symbol == DEFAULT_CURRENCY => {
                write!(f, "currency-{decimals}dp")
            }
            DisplayFormat::Currency { symbol, decimals } => {
                write!(f, "currency({symbol})-{decimals}dp")
            }
            DisplayFormat::Fixed { decimals } => write!(f, "fixed-{decimals}dp"),
            DisplayFormat::Percent { decimals } => write!(f, "percent-{decimals}dp"),
        }
    }
}

impl FromStr for DisplayFormat {
    type Err = FormatParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FormatParseError(s.to_owned());
        let (head, places) = s.rsplit_once('-').ok_or_else(err)?;
        let decimals: u32 = places
            .strip_suffix("dp")
            .and_then(|d| d.parse().ok())
            .filter(|d| *d <= 20)
            .ok_or_else(err)?;
        match head {
            "currency" => Ok(DisplayFormat::Currency {
                symbol: DEFAULT_CURRENCY.to_owned(),
                decimals,
            }),
            "fixed" => Ok(DisplayFormat::Fixed { decimals }),
            "percent" => Ok(DisplayFormat::Percent { decimals }),
            _ => {
                let symbol = head
                    .strip_prefix("currency(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .filter(|sym| !sym.is_empty() && !sym.contains([')', '(']))
                    .ok_or_else(err)?;
                Ok(DisplayFormat::Currency {
                    symbol: symbol.to_owned(),
                    decimals,
                })
            }
        }
    }
}
