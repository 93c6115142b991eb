//! Expressions in `x` for user-supplied functions.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := unary ("^" factor)?
//! unary  := "-"? atom
//! atom   := number | "x" | fn "(" expr ")" | "(" expr ")"
//! fn     := log | exp | sin | cos | abs | sqrt
//! ```

use std::collections::BTreeSet;
use std::fmt;

use frachardy::sequences::AnalyticFunction;
use frachardy::{FracError, Result as FracResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sin,
    Cos,
    Abs,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Log, Func::Exp, Func::Sin, Func::Cos, Func::Abs, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {}", fmt_set(.expected))]
    Syntax { offset: usize, found: String, expected: BTreeSet<&'static str> },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("invalid number '{text}' at byte {offset}")]
    Number { offset: usize, text: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } | ParseError::Number { offset, .. } => *offset,
        }
    }
}

fn fmt_set(s: &BTreeSet<&'static str>) -> String {
    s.iter().map(|t| format!("'{t}'")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(u8),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Sym(c) => format!("'{}'", *c as char),
            Tok::End => "end of input".into(),
        }
    }
}

const ATOM_START: [&str; 5] = ["number", "x", "function", "(", "-"];

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    tok: Tok,
    tok_at: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, ParseError> {
        let mut p = Parser { src: text.as_bytes(), pos: 0, tok: Tok::End, tok_at: 0, depth: 0 };
        p.bump()?;
        Ok(p)
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_at = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            let digits = |p: &mut Self| {
                let s = p.pos;
                while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                    p.pos += 1;
                }
                p.pos - s
            };
            let mut n = digits(self);
            if self.src.get(self.pos) == Some(&b'.') {
                self.pos += 1;
                n += digits(self);
            }
            if n > 0 && matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                if digits(self) == 0 {
                    self.pos = save;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            let v: f64 = text.parse().ok().filter(|v: &f64| v.is_finite() && n > 0).ok_or_else(|| ParseError::Number { offset: start, text: text.into() })?;
            self.tok = Tok::Num(v);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii").into());
        } else if b"+-*/^()".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c);
        } else {
            let ch = std::str::from_utf8(&self.src[self.pos..]).ok().and_then(|s| s.chars().next()).unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: self.pos,
                found: format!("character '{ch}'"),
                expected: ATOM_START.into_iter().chain(["+", "*", "/", "^", ")"]).collect(),
            });
        }
        Ok(())
    }

    fn fail<T>(&self, expected: &[&'static str]) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.tok_at, found: self.tok.describe(), expected: expected.iter().copied().collect() })
    }

    /// Tokens that may follow a complete factor at the current nesting depth.
    fn continuation(&self) -> Vec<&'static str> {
        let mut v = vec!["+", "-", "*", "/", "^"];
        v.push(if self.depth > 0 { ")" } else { "end of input" });
        v
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'+') => BinOp::Add,
                Tok::Sym(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'*') => BinOp::Mul,
                Tok::Sym(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.tok == Tok::Sym(b'^') {
            self.bump()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.factor()?)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym(b'-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.atom(&["number", "x", "function", "("])?)));
        }
        self.atom(&ATOM_START)
    }

    fn atom(&mut self, expected: &[&'static str]) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                let at = self.tok_at;
                if name == "x" {
                    self.bump()?;
                    return Ok(Expr::X);
                }
                let f = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier { offset: at, name })?;
                self.bump()?;
                if self.tok != Tok::Sym(b'(') {
                    return self.fail(&["("]);
                }
                let inner = self.group()?;
                Ok(Expr::Call(f, Box::new(inner)))
            }
            Tok::Sym(b'(') => self.group(),
            _ => self.fail(expected),
        }
    }

    /// `"(" expr ")"` with the current token at the opening parenthesis.
    fn group(&mut self) -> Result<Expr, ParseError> {
        self.bump()?;
        self.depth += 1;
        let e = self.expr()?;
        if self.tok != Tok::Sym(b')') {
            return self.fail(&self.continuation());
        }
        self.depth -= 1;
        self.bump()?;
        Ok(e)
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.fail(&p.continuation());
    }
    Ok(e)
}

impl Expr {
    pub fn eval(&self, x: f64) -> FracResult<f64> {
        let err = |msg: String| FracError::Eval { x, msg };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return Err(err(format!("division by zero in {self}"))),
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let a = e.eval(x)?;
                match f {
                    Func::Log if a <= 0.0 => return Err(err(format!("log of non-positive value {a}"))),
                    Func::Log => a.ln(),
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Abs => a.abs(),
                    Func::Sqrt if a < 0.0 => return Err(err(format!("sqrt of negative value {a}"))),
                    Func::Sqrt => a.sqrt(),
                }
            }
        };
        if !v.is_finite() {
            return Err(err(format!("{self} is not finite")));
        }
        Ok(v)
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Bin(BinOp::Pow, ..) => 3,
            Expr::Neg(_) => 4,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let wrap = self.prec() < ctx;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v:?}")?,
            Expr::X => f.write_str("x")?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write(f, 5)?;
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.write(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Bin(op, a, b) => {
                let (sym, l, r) = match op {
                    BinOp::Add => ("+", 1, 2),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 4, 3),
                };
                a.write(f, l)?;
                write!(f, " {sym} ")?;
                b.write(f, r)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Minimal-parenthesis form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

pub fn parse_function_expr(text: &str) -> Result<AnalyticFunction<f64>, ParseError> {
    let e = parse(text)?;
    Ok(AnalyticFunction::from_x(e.to_string(), move |x| e.eval(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse_function_expr("x").unwrap().eval(0.25).unwrap(), 0.25);
        assert_eq!(parse_function_expr("2^3^2").unwrap().eval(0.5).unwrap(), 512.0);
        let l = parse_function_expr("log(1/x)").unwrap();
        assert!((l.eval((-2.0f64).exp()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unary_minus_binds_to_atom() {
        assert_eq!(parse("-x^2").unwrap().eval(3.0).unwrap(), 9.0);
        assert_eq!(parse("-(x^2)").unwrap().eval(3.0).unwrap(), -9.0);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse("x + * 2").unwrap_err();
        assert_eq!(e.offset(), 4);
        let e = parse("foo(x)").unwrap_err();
        assert!(matches!(e, ParseError::UnknownIdentifier { offset: 0, .. }));
        assert!(parse("log(0*x)").unwrap().eval(0.5).is_err());
    }
}
