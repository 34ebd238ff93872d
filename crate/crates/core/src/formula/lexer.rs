use crate::value::{parse_decimal, Number};

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Number(Number),
    Str(String),
    /// Bare identifier.
    Ident(String),
    /// `[name with spaces]`
    Bracketed(String),
    Bang,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Str(_) => "string".to_owned(),
            TokenKind::Ident(name) => format!("`{name}`"),
            TokenKind::Bracketed(name) => format!("`[{name}]`"),
            TokenKind::Bang => "`!`".to_owned(),
            TokenKind::LParen => "`(`".to_owned(),
            TokenKind::RParen => "`)`".to_owned(),
            TokenKind::Comma => "`,`".to_owned(),
            TokenKind::Plus => "`+`".to_owned(),
            TokenKind::Minus => "`-`".to_owned(),
            TokenKind::Star => "`*`".to_owned(),
            TokenKind::Slash => "`/`".to_owned(),
            TokenKind::Caret => "`^`".to_owned(),
            TokenKind::Eq => "`=`".to_owned(),
            TokenKind::Ne => "`<>`".to_owned(),
            TokenKind::Lt => "`<`".to_owned(),
            TokenKind::Le => "`<=`".to_owned(),
            TokenKind::Gt => "`>`".to_owned(),
            TokenKind::Ge => "`>=`".to_owned(),
            TokenKind::Eof => "end of formula".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    /// Character offset into the formula text.
    pub pos: usize,
}

/// True for names a bare identifier may not spell: `A1`-style and
/// `R1C1`-style cell addresses.
pub(crate) fn is_positional(name: &str) -> bool {
    let bytes = name.as_bytes();
    let letters = bytes.iter().take_while(|b| b.is_ascii_alphabetic()).count();
    let digits_after = bytes.len() - letters;
    if (1..=3).contains(&letters)
        && digits_after > 0
        && bytes[letters..].iter().all(u8::is_ascii_digit)
    {
        return true;
    }
    // R1C1
    if bytes.len() >= 4 && bytes[0].eq_ignore_ascii_case(&b'R') {
        let row_digits = bytes[1..].iter().take_while(|b| b.is_ascii_digit()).count();
        let rest = &bytes[1 + row_digits..];
        if row_digits > 0
            && rest.len() > 1
            && rest[0].eq_ignore_ascii_case(&b'C')
            && rest[1..].iter().all(u8::is_ascii_digit)
        {
            return true;
        }
    }
    false
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn tokenize(text: &str, offset: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let err = |pos: usize, message: String| ParseError {
        position: pos + offset,
        message,
    };

    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let kind = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            '!' => TokenKind::Bang,
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '^' => TokenKind::Caret,
            '=' => TokenKind::Eq,
            '<' => match chars.get(i + 1) {
                Some('=') => {
                    i += 1;
                    TokenKind::Le
                }
                Some('>') => {
                    i += 1;
                    TokenKind::Ne
                }
                _ => TokenKind::Lt,
            },
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    i += 1;
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                }
            }
            ':' => {
                return Err(err(
                    i,
                    "`:` ranges are not supported; reference fields by name".to_owned(),
                ))
            }
            ';' => {
                return Err(err(
                    i,
                    "`;` is not an argument separator; use `,`".to_owned(),
                ))
            }
            '$' => {
                return Err(err(
                    i,
                    "`$` absolute cell references are not supported".to_owned(),
                ))
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(start, "unterminated string".to_owned())),
                        Some('"') if chars.get(i + 1) == Some(&'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some('"') => break,
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                TokenKind::Str(s)
            }
            '[' => {
                let mut name = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(start, "unterminated `[` name".to_owned())),
                        Some(']') => break,
                        Some(&ch) => {
                            name.push(ch);
                            i += 1;
                        }
                    }
                }
                if name.is_empty() {
                    return Err(err(start, "empty `[]` name".to_owned()));
                }
                TokenKind::Bracketed(name)
            }
            c if c.is_ascii_digit() => {
                while chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                    i += 1;
                }
                if chars.get(i + 1) == Some(&'.') {
                    i += 1;
                    if !chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                        return Err(err(i + 1, "expected digits after `.`".to_owned()));
                    }
                    while chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                        i += 1;
                    }
                }
                if matches!(chars.get(i + 1), Some('e' | 'E')) {
                    let mut j = i + 2;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(char::is_ascii_digit) {
                        while chars.get(j + 1).is_some_and(char::is_ascii_digit) {
                            j += 1;
                        }
                        i = j;
                    }
                }
                if chars
                    .get(i + 1)
                    .is_some_and(|c| c.is_ascii_alphabetic() || *c == '_')
                {
                    return Err(err(
                        start,
                        "names may not start with a digit; use `[...]`".to_owned(),
                    ));
                }
                let literal: String = chars[start..=i].iter().collect();
                let n = parse_decimal(&literal)
                    .ok_or_else(|| err(start, format!("number `{literal}` is out of range")))?;
                TokenKind::Number(n)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while chars
                    .get(i + 1)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    i += 1;
                }
                let name: String = chars[start..=i].iter().collect();
                if is_positional(&name) {
                    return Err(err(
                        start,
                        format!(
                            "positional reference `{name}` is not supported; reference fields by name (write `[{name}]` for a field with that name)"
                        ),
                    ));
                }
                TokenKind::Ident(name)
            }
            other => return Err(err(i, format!("unexpected character `{other}`"))),
        };
        tokens.push(Token {
            kind,
            pos: start + offset,
        });
        i += 1;
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        pos: chars.len() + offset,
    });
    Ok(tokens)
}
