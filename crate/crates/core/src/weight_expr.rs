//! Expressions for lattice-periodic weights.
//!
//! Variables are the lattice phases `u = 2πs` and `v = 2πt`, where
//! `(x,y) = s(1,0) + t(a,b)`; any expression in them is lattice-periodic.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | number | 'u' | 'v' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := 'cos' | 'sin' | 'exp'
//! ```
//!
//! A leading `-` negates a number or any factor.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    U,
    V,
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::U => u,
            Expr::V => v,
            Expr::Add(a, b) => a.eval(u, v) + b.eval(u, v),
            Expr::Mul(a, b) => a.eval(u, v) * b.eval(u, v),
            Expr::Cos(a) => a.eval(u, v).cos(),
            Expr::Sin(a) => a.eval(u, v).sin(),
            Expr::Exp(a) => a.eval(u, v).exp(),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Expr {
            pos: self.pos,
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let mut rhs = self.term()?;
            if op == b'-' {
                rhs = Expr::Mul(Box::new(Expr::Num(-1.0)), Box::new(rhs));
            }
            lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'-') if !matches!(self.src.get(self.pos + 1), Some(c) if *c == b'.' || c.is_ascii_digit()) => {
                self.pos += 1;
                Ok(Expr::Mul(Box::new(Expr::Num(-1.0)), Box::new(self.factor()?)))
            }
            Some(c) if c == b'-' || c == b'.' || c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                let wrap: fn(Box<Expr>) -> Expr = match word {
                    "u" => return Ok(Expr::U),
                    "v" => return Ok(Expr::V),
                    "pi" => return Ok(Expr::Num(PI)),
                    "cos" => Expr::Cos,
                    "sin" => Expr::Sin,
                    "exp" => Expr::Exp,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier '{word}'")));
                    }
                };
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(wrap(Box::new(arg)))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        if self.src[self.pos] == b'-' {
            self.pos += 1;
        }
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if before == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::Expr {
            pos: start,
            msg: format!("invalid number '{text}'"),
        })
    }
}
