//! Recursive-descent parser for coordinate expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' number | '-' unary | power   (literal not followed by '^')
//! power   := atom ('^' unary)?          right associative
//! atom    := number | name | name '(' sum ')' | '(' sum ')'
//! ```

use std::f64::consts::PI;

use super::{Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let start = lx.pos;
            let Some(c) = lx.peek() else {
                out.push((start, Tok::End));
                return Ok(out);
            };
            let tok = if c.is_ascii_digit() || c == '.' {
                lx.number()?
            } else if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = lx.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        s.push(c);
                        lx.pos += c.len_utf8();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            } else {
                lx.pos += c.len_utf8();
                match c {
                    '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => {
                        return Err(Error::Syntax {
                            offset: start,
                            message: format!("unexpected character `{c}`"),
                        })
                    }
                }
            };
            out.push((start, tok));
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<Tok> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        self.pos = i;
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn offset(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Tok::Op(op @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.product()?;
            lhs = if op == '+' {
                Expr::add(lhs, rhs)
            } else {
                Expr::sub(lhs, rhs)
            };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Op(op @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::mul(lhs, rhs)
            } else {
                Expr::div(lhs, rhs)
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            // A bare literal folds into a negative constant unless it is a power base.
            if let Tok::Num(v) = *self.peek() {
                if self.toks.get(self.at + 1).map(|t| &t.1) != Some(&Tok::Op('^')) {
                    self.bump();
                    return Ok(Expr::Const(-v));
                }
            }
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(i) = self.names.iter().position(|n| *n == name) {
                    return Ok(Expr::Var(i));
                }
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.error(format!("expected `(` after `{name}`"));
                    }
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return Ok(Expr::call(f, arg));
                }
                if name == "pi" {
                    return Ok(Expr::Const(PI));
                }
                Err(Error::UnknownIdentifier { name, offset })
            }
            Tok::End => self.error("unexpected end of input"),
            Tok::Op(c) => self.error(format!("unexpected operator `{c}`")),
            Tok::RParen => self.error("unexpected `)`"),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.error("expected `)`")
        }
    }
}

/// Parse `text` as a scalar expression in the named coordinates.
///
/// Besides the coordinate names, identifiers may be one of the functions
/// `sin cos tan exp log sqrt` or the constant `pi`.
pub fn parse(text: &str, coord_names: &[String]) -> Result<Expr> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        names: coord_names,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn names() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    #[test]
    fn sum_of_product_and_sine() {
        let e = parse("x1*x1 + sin(x2)", &names()).unwrap();
        let want = Expr::add(
            Expr::mul(Expr::Var(0), Expr::Var(0)),
            Expr::call(Func::Sin, Expr::Var(1)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn stereographic_factor() {
        let e = parse("2/(1 + x1^2 + x2^2)", &names()).unwrap();
        let sq = |i| Expr::pow(Expr::Var(i), Expr::Const(2.0));
        let want = Expr::div(
            Expr::Const(2.0),
            Expr::add(Expr::add(Expr::Const(1.0), sq(0)), sq(1)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn malformed_input_reports_offset() {
        match parse("x1 + * x2", &names()) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(parse("(x1", &names()), Err(Error::Syntax { .. })));
        assert!(matches!(parse("", &names()), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1 x2", &names()), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1 # 2", &names()), Err(Error::Syntax { offset: 3, .. })));
    }

    #[test]
    fn unknown_identifier() {
        match parse("x1 + y", &names()) {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "y");
                assert_eq!(offset, 5);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let n = names();
        // unary minus binds looser than ^
        assert_eq!(
            parse("-x1^2", &n).unwrap(),
            Expr::neg(Expr::pow(Expr::Var(0), Expr::Const(2.0)))
        );
        // ^ is right associative
        assert_eq!(
            parse("x1^x2^2", &n).unwrap(),
            Expr::pow(Expr::Var(0), Expr::pow(Expr::Var(1), Expr::Const(2.0)))
        );
        // - and / are left associative
        assert_eq!(
            parse("x1 - x2 - 1", &n).unwrap(),
            Expr::sub(Expr::sub(Expr::Var(0), Expr::Var(1)), Expr::Const(1.0))
        );
        assert_eq!(parse("2.5e-3", &n).unwrap(), Expr::Const(2.5e-3));
        assert_eq!(
            parse("x1^-1", &n).unwrap(),
            Expr::Pow(Arc::new(Expr::Var(0)), Arc::new(Expr::Const(-1.0)))
        );
        assert_eq!(parse("-2^2", &n).unwrap().eval(&[]).unwrap(), -4.0);
        assert_eq!(parse("-(2)", &n).unwrap(), Expr::neg(Expr::Const(2.0)));
    }
}
