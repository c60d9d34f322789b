//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ('-'|'+') factor | base ('^' exponent)?
//! base   := number | identifier | '(' expr ')' | func '(' expr ')'
//! exponent := integer | '-' integer | '(' ['-'] integer ['/' integer] ')'
//! ```

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::expr::{Expr, Func, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

/// Parse `text`, accepting only identifiers listed in `allowed` (plus the
/// function names `sqrt`, `sin`, `cos`, `exp`, `log`).
pub fn parse_expr(text: &str, allowed: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        allowed,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    allowed: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(self.term()?.neg());
            } else {
                break;
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.factor()?);
            } else if self.eat(b'/') {
                factors.push(Expr::recip(self.factor()?));
            } else {
                break;
            }
        }
        Ok(Expr::mul(factors))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(self.factor()?.neg());
        }
        if self.eat(b'+') {
            return self.factor();
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let e = self.exponent()?;
            return Ok(Expr::pow(base, e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Q, ParseError> {
        if self.eat(b'(') {
            let neg = self.eat(b'-');
            let n = self.integer()?;
            let d = if self.eat(b'/') {
                let d = self.integer()?;
                if d.is_zero() {
                    return Err(self.err("zero denominator in exponent"));
                }
                d
            } else {
                BigInt::one()
            };
            self.expect(b')')?;
            let v = Q::new(n, d);
            return Ok(if neg { -v } else { v });
        }
        let neg = self.eat(b'-');
        let n = self.integer()?;
        let v = Q::from_integer(n);
        Ok(if neg { -v } else { v })
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse::<BigInt>().unwrap())
    }

    fn number(&mut self) -> Result<Q, ParseError> {
        let int = self.integer()?;
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let frac = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            if frac.is_empty() {
                return Ok(Q::from_integer(int));
            }
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            let f: BigInt = frac.parse().unwrap();
            return Ok(Q::new(int * &scale + f, scale));
        }
        Ok(Q::from_integer(int))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(Expr::num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if (name == "sqrt" || Func::from_name(name).is_some()) && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(match Func::from_name(name) {
                        Some(f) => Expr::func(f, arg),
                        None => Expr::sqrt(arg),
                    });
                }
                if self.allowed.contains(&name) {
                    Ok(Expr::sym(name))
                } else {
                    Err(ParseError::UnknownIdentifier {
                        offset: start,
                        name: name.to_string(),
                    })
                }
            }
            Some(c) => Err(self.err(&format!("unexpected character `{}`", c as char))),
        }
    }
}
