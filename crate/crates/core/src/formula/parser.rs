use super::ast::{BinaryOp, Expr, Function, Reference};
use super::lexer::{Token, TokenKind};
use super::ParseError;

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_kind_at(&self, ahead: usize) -> &TokenKind {
        let idx = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let tok = self.peek();
        ParseError {
            position: tok.pos,
            message: format!("expected {expected}, found {}", tok.kind.describe()),
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            Err(self.unexpected(what))
        }
    }

    pub(crate) fn parse_formula(&mut self) -> Result<Expr, ParseError> {
        if self.peek().kind == TokenKind::Eof {
            return Err(self.unexpected("an expression"));
        }
        let expr = self.comparison()?;
        if self.peek().kind != TokenKind::Eof {
            return Err(self.unexpected("an operator or end of formula"));
        }
        Ok(expr)
    }

    fn comparison_op(&self) -> Option<BinaryOp> {
        Some(match self.peek().kind {
            TokenKind::Eq => BinaryOp::Eq,
            TokenKind::Ne => BinaryOp::Ne,
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::Le => BinaryOp::Le,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::Ge => BinaryOp::Ge,
            _ => return None,
        })
    }

    // Comparisons do not associate: `a<b<c` is rejected.
    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else {
            return Ok(lhs);
        };
        self.advance();
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            let tok = self.peek();
            return Err(ParseError {
                position: tok.pos,
                message: "comparisons do not chain; add parentheses".to_owned(),
            });
        }
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().kind == TokenKind::Minus {
            self.advance();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    // `^` binds tighter than unary minus and associates to the right; its
    // exponent may itself carry a sign (`2^-1`).
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().kind == TokenKind::Caret {
            self.advance();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn name_token(&mut self) -> Result<String, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Ident(name) | TokenKind::Bracketed(name) => {
                self.advance();
                Ok(name)
            }
            _ => Err(self.unexpected("a field name")),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Number(n) => {
                self.advance();
                Ok(Expr::Number(n))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(Expr::Text(s))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.comparison()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.advance();
                match self.peek().kind {
                    TokenKind::Bang => {
                        self.advance();
                        let field = self.name_token()?;
                        Ok(Expr::cross(name, field))
                    }
                    TokenKind::LParen => self.call(name, tok.pos),
                    _ if name.eq_ignore_ascii_case("TRUE") => Ok(Expr::Bool(true)),
                    _ if name.eq_ignore_ascii_case("FALSE") => Ok(Expr::Bool(false)),
                    _ => Ok(Expr::Ref(Reference::Local(name))),
                }
            }
            TokenKind::Bracketed(name) => {
                self.advance();
                if self.peek().kind == TokenKind::Bang {
                    self.advance();
                    let field = self.name_token()?;
                    Ok(Expr::cross(name, field))
                } else {
                    Ok(Expr::Ref(Reference::Local(name)))
                }
            }
            _ => Err(self.unexpected("a value, field name or `(`")),
        }
    }

    fn call(&mut self, name: String, pos: usize) -> Result<Expr, ParseError> {
        let function = Function::from_name(&name).ok_or_else(|| ParseError {
            position: pos,
            message: format!(
                "unknown function `{name}` (supported: SUM, COUNT, AVG, MIN, MAX, IF, ROUND)"
            ),
        })?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            loop {
                args.push(self.comparison()?);
                match self.peek_kind_at(0) {
                    TokenKind::Comma => {
                        self.advance();
                    }
                    TokenKind::RParen => break,
                    _ => return Err(self.unexpected("`,` or `)`")),
                }
            }
        }
        self.expect(TokenKind::RParen, "`)`")?;
        let (min, max) = function.arity();
        if args.len() < min || max.is_some_and(|m| args.len() > m) {
            let wanted = match max {
                Some(m) if m == min => format!("{min}"),
                Some(m) => format!("{min} to {m}"),
                None => format!("at least {min}"),
            };
            return Err(ParseError {
                position: pos,
                message: format!(
                    "{} takes {wanted} argument(s), got {}",
                    function.name(),
                    args.len()
                ),
            });
        }
        Ok(Expr::Call(function, args))
    }
}
