//! A small arithmetic grammar for parameter constraints and derived
//! quantities:
//!
//! ```text
//! comparison := sum [("<" | ">" | "<=" | ">=" | "!=" | "≤" | "≥" | "≠") sum]
//! sum        := product (("+" | "-") product)*
//! product    := unary (("*" | "/") unary)*
//! unary      := "-" unary | power
//! power      := atom ["^" unary]
//! atom       := number | name | name "(" sum ")" | "(" sum ")" | "|" sum "|"
//! ```
//!
//! Functions are `abs`, `sqrt` and `ln`. Names may contain any alphabetic
//! character, so `λ` is a valid name.

use std::fmt;

use rug::Rational;

use crate::error::{Error, Result};
use crate::mpreal::{parse_rational, pow, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Ln,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Ne => "!=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Name(String),
    Op(char),
    Cmp(CmpOp),
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            _ if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                out.push(Tok::Num(chars[start..i].iter().collect()));
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Name(chars[start..i].iter().collect()));
            }
            '<' | '>' | '!' => {
                let eq = next == Some('=');
                let op = match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('>', false) => CmpOp::Gt,
                    ('<', true) => CmpOp::Le,
                    ('>', true) => CmpOp::Ge,
                    ('!', true) => CmpOp::Ne,
                    _ => return Err(Error::Parse(format!("stray `{c}` in `{text}`"))),
                };
                out.push(Tok::Cmp(op));
                i += if eq { 2 } else { 1 };
            }
            '≤' => {
                out.push(Tok::Cmp(CmpOp::Le));
                i += 1;
            }
            '≥' => {
                out.push(Tok::Cmp(CmpOp::Ge));
                i += 1;
            }
            '≠' => {
                out.push(Tok::Cmp(CmpOp::Ne));
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | '|' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '−' => {
                out.push(Tok::Op('-'));
                i += 1;
            }
            _ => return Err(Error::Parse(format!("unexpected `{c}` in `{text}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    text: &'a str,
    /// Depth of open `|` bars; inside bars a `|` closes rather than opens,
    /// so absolute values nest only through parentheses.
    bars: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at token {} in `{}`", self.pos, self.text))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.product()?;
        loop {
            if self.eat_op('+') {
                e = Expr::Add(Box::new(e), Box::new(self.product()?));
            } else if self.eat_op('-') {
                e = Expr::Sub(Box::new(e), Box::new(self.product()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat_op('*') {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat_op('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                Ok(Expr::Num(parse_rational(&s)?))
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.eat_op('(') {
                    let func = match name.as_str() {
                        "abs" => Func::Abs,
                        "sqrt" => Func::Sqrt,
                        "ln" => Func::Ln,
                        _ => return Err(self.err(&format!("unknown function `{name}`"))),
                    };
                    let arg = self.sum()?;
                    if !self.eat_op(')') {
                        return Err(self.err("expected `)`"));
                    }
                    Ok(Expr::Call(func, Box::new(arg)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let saved = std::mem::replace(&mut self.bars, 0);
                let e = self.sum()?;
                self.bars = saved;
                if !self.eat_op(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(Tok::Op('|')) if self.bars == 0 => {
                self.pos += 1;
                self.bars += 1;
                let e = self.sum()?;
                self.bars -= 1;
                if !self.eat_op('|') {
                    return Err(self.err("expected closing `|`"));
                }
                Ok(Expr::Call(Func::Abs, Box::new(e)))
            }
            _ => Err(self.err("expected a value")),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        text,
        bars: 0,
    };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

pub fn parse_comparison(text: &str) -> Result<Comparison> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        text,
        bars: 0,
    };
    let lhs = p.sum()?;
    let op = match p.peek() {
        Some(Tok::Cmp(op)) => *op,
        _ => return Err(p.err("expected a comparison")),
    };
    p.pos += 1;
    let rhs = p.sum()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(Comparison { lhs, op, rhs })
}

/// Evaluates `e` with names resolved by `env`, at `bits`.
pub fn eval(e: &Expr, env: &dyn Fn(&str) -> Option<Scalar>, bits: u32) -> Result<Scalar> {
    let go = |x: &Expr| eval(x, env, bits);
    Ok(match e {
        Expr::Num(r) => Scalar::from_rational(r, bits),
        Expr::Var(name) => env(name).ok_or_else(|| Error::Unknown(name.clone()))?,
        Expr::Neg(x) => -go(x)?,
        Expr::Add(a, b) => go(a)? + go(b)?,
        Expr::Sub(a, b) => go(a)? - go(b)?,
        Expr::Mul(a, b) => go(a)? * go(b)?,
        Expr::Div(a, b) => {
            let d = go(b)?;
            if d.is_zero() {
                return Err(Error::Domain("division by zero".into()));
            }
            go(a)? / d
        }
        Expr::Pow(a, b) => {
            let base = go(a)?;
            match b.as_ref() {
                Expr::Num(r) if *r.denom() == 1 => match r.numer().to_i64() {
                    Some(k) if !(base.is_zero() && k < 0) => base.powi(k),
                    _ => return Err(Error::Domain("bad integer power".into())),
                },
                _ => pow(&base, &go(b)?)?,
            }
        }
        Expr::Call(Func::Abs, x) => go(x)?.abs(),
        Expr::Call(Func::Sqrt, x) => go(x)?.sqrt()?,
        Expr::Call(Func::Ln, x) => go(x)?.ln()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(name: &str) -> Option<Scalar> {
        match name {
            "a" => Some(Scalar::from_i64(3, 128)),
            "b" => Some(Scalar::from_i64(-2, 128)),
            "λ" => Some(Scalar::from_ratio(1, 4, 128)),
            _ => None,
        }
    }

    fn value(text: &str) -> f64 {
        eval(&parse_expr(text).unwrap(), &env, 128)
            .unwrap()
            .to_f64()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(value("1 + 2 * 3"), 7.0);
        assert_eq!(value("2 ^ 3 ^ 2"), 512.0);
        assert_eq!(value("-a^2"), -9.0);
        assert_eq!(value("a - b - 1"), 4.0);
        assert_eq!(value("12 / a / 2"), 2.0);
        assert_eq!(value("2^-1"), 0.5);
    }

    #[test]
    fn bars_functions_and_unicode_names() {
        assert_eq!(value("|b|"), 2.0);
        assert_eq!(value("|a*b| + |b|"), 8.0);
        assert_eq!(value("abs(b) * sqrt(4)"), 4.0);
        assert_eq!(value("λ * 4"), 1.0);
        assert!((value("a^0.5") - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn comparisons_parse() {
        let c = parse_comparison("|λ| < 1").unwrap();
        assert_eq!(c.op, CmpOp::Lt);
        assert_eq!(parse_comparison("a*b != c*q").unwrap().op, CmpOp::Ne);
        assert_eq!(parse_comparison("a ≠ q").unwrap().op, CmpOp::Ne);
        assert_eq!(parse_comparison("a - b >= 0").unwrap().op, CmpOp::Ge);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(parse_expr("1 +").is_err());
        assert!(parse_expr("(1").is_err());
        assert!(parse_expr("foo(1)").is_err());
        assert!(parse_comparison("a + 1").is_err());
        assert!(parse_expr("1 $ 2").is_err());
        assert!(matches!(
            eval(&parse_expr("zz").unwrap(), &env, 64),
            Err(Error::Unknown(_))
        ));
    }
}
