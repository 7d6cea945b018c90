//! Arithmetic expressions in the variables `x1..xn`, `t` and `z`.
//!
//! These trees carry the right-hand side ψ(x, t, z) and the boundary data
//! g(x, t) from configuration into the solver, and they are differentiated
//! symbolically when problems are manufactured from an exact solution, so
//! manufactured-solution errors come from the discretization alone.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' integer)?
//! base   := number | variable | function '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! with functions `exp` and `abs`, and integer (possibly negative) powers.

use crate::error::ExprError;
use std::fmt;

/// A variable reference. Spatial indices are 0-based internally
/// (`X(0)` is `x1` in the surface syntax).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    T,
    Z,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::T => write!(f, "t"),
            Var::Z => write!(f, "z"),
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Abs(Box<Expr>),
}

/// Evaluation point: spatial coordinates plus time and the solution value.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint<'a> {
    pub x: &'a [f64],
    pub t: f64,
    pub z: f64,
}

impl<'a> EvalPoint<'a> {
    pub fn space_time(x: &'a [f64], t: f64) -> Self {
        EvalPoint { x, t, z: 0.0 }
    }
}

const MAX_X: usize = 8;

// ---------------------------------------------------------------- tokenizer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
            toks: Vec::new(),
        };
        while lx.pos < lx.src.len() {
            let c = lx.src[lx.pos];
            let start = lx.pos;
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    lx.pos += 1;
                }
                b'+' => lx.push(Tok::Plus, start),
                b'-' => lx.push(Tok::Minus, start),
                b'*' => lx.push(Tok::Star, start),
                b'/' => lx.push(Tok::Slash, start),
                b'^' => lx.push(Tok::Caret, start),
                b'(' => lx.push(Tok::LParen, start),
                b')' => lx.push(Tok::RParen, start),
                b'0'..=b'9' | b'.' => lx.number(start)?,
                b'a'..=b'z' | b'A'..=b'Z' => lx.ident(start),
                other => {
                    return Err(ExprError::Syntax {
                        offset: start,
                        message: format!("unexpected character `{}`", other as char),
                    })
                }
            }
        }
        Ok(lx.toks)
    }

    fn push(&mut self, t: Tok, at: usize) {
        self.toks.push((t, at));
        self.pos += 1;
    }

    fn number(&mut self, start: usize) -> Result<(), ExprError> {
        let mut end = self.pos;
        let mut seen_dot = false;
        while end < self.src.len() {
            match self.src[end] {
                b'0'..=b'9' => end += 1,
                b'.' if !seen_dot => {
                    seen_dot = true;
                    end += 1;
                }
                b'e' | b'E' => {
                    // exponent part: e[+-]?digits
                    let mut p = end + 1;
                    if p < self.src.len() && (self.src[p] == b'+' || self.src[p] == b'-') {
                        p += 1;
                    }
                    if p < self.src.len() && self.src[p].is_ascii_digit() {
                        while p < self.src.len() && self.src[p].is_ascii_digit() {
                            p += 1;
                        }
                        end = p;
                    }
                    break;
                }
                _ => break,
            }
        }
        let text = std::str::from_utf8(&self.src[start..end]).unwrap();
        let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.toks.push((Tok::Num(v), start));
        self.pos = end;
        Ok(())
    }

    fn ident(&mut self, start: usize) {
        let mut end = self.pos;
        while end < self.src.len()
            && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
        {
            end += 1;
        }
        let text = std::str::from_utf8(&self.src[start..end]).unwrap().to_string();
        self.toks.push((Tok::Ident(text), start));
        self.pos = end;
    }
}

// ------------------------------------------------------------------- parser

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    src_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|&(_, o)| o)
            .unwrap_or(self.src_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        let off = self.offset();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(ExprError::Syntax {
                offset: off,
                message: format!("expected {what}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let off = self.offset();
            let mut negative = false;
            if let Some(Tok::Minus) = self.peek() {
                self.bump();
                negative = true;
            }
            match self.bump() {
                Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                    let e = v as i32;
                    Ok(Expr::Pow(Box::new(base), if negative { -e } else { e }))
                }
                _ => Err(ExprError::Syntax {
                    offset: off,
                    message: "expected integer exponent after `^`".to_string(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let off = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Minus) => {
                // fold a leading minus directly into a numeric literal so
                // printed negative constants reparse to the same tree
                if let Some(Tok::Num(v)) = self.peek() {
                    let v = *v;
                    self.bump();
                    return Ok(Expr::Num(-v));
                }
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::Var(Var::T)),
                "z" => Ok(Expr::Var(Var::Z)),
                "exp" | "abs" => {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "closing `)`")?;
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(Box::new(arg)),
                        _ => Expr::Abs(Box::new(arg)),
                    })
                }
                _ => {
                    if let Some(rest) = name.strip_prefix('x') {
                        if let Ok(i) = rest.parse::<usize>() {
                            if (1..=MAX_X).contains(&i) {
                                return Ok(Expr::Var(Var::X(i - 1)));
                            }
                        }
                    }
                    Err(ExprError::UnknownIdentifier { name, offset: off })
                }
            },
            _ => Err(ExprError::Syntax {
                offset: off,
                message: "expected number, variable, function, `(` or `-`".to_string(),
            }),
        }
    }
}

/// Parses an expression, reporting syntax errors with byte offsets and
/// unknown identifiers by name.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let toks = Lexer::run(src)?;
    let src_len = src.len();
    let mut p = Parser {
        toks,
        pos: 0,
        src_len,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ExprError::Syntax {
            offset: p.offset(),
            message: "trailing input".to_string(),
        });
    }
    Ok(e)
}

// --------------------------------------------------------- smart constructors

/// Constructors with light constant folding, used when trees are built
/// programmatically (differentiation, manufactured right-hand sides).
/// Folds only fire when they preserve the value on finite inputs.
pub mod ops {
    use super::Expr;

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) if (x + y).is_finite() => Expr::Num(x + y),
            (Expr::Num(z), _) if *z == 0.0 => b,
            (_, Expr::Num(z)) if *z == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) if (x - y).is_finite() => Expr::Num(x - y),
            (_, Expr::Num(z)) if *z == 0.0 => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) if (x * y).is_finite() => Expr::Num(x * y),
            (Expr::Num(z), _) | (_, Expr::Num(z)) if *z == 0.0 => Expr::Num(0.0),
            (Expr::Num(o), _) if *o == 1.0 => b,
            (_, Expr::Num(o)) if *o == 1.0 => a,
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) if *y != 0.0 && (x / y).is_finite() => Expr::Num(x / y),
            (Expr::Num(z), Expr::Num(y)) if *z == 0.0 && *y != 0.0 => Expr::Num(0.0),
            (_, Expr::Num(o)) if *o == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            _ => Expr::Neg(Box::new(a)),
        }
    }

    pub fn pow(a: Expr, e: i32) -> Expr {
        match (&a, e) {
            (_, 0) => Expr::Num(1.0),
            (_, 1) => a,
            (Expr::Num(v), _) if v.powi(e).is_finite() => Expr::Num(v.powi(e)),
            _ => Expr::Pow(Box::new(a), e),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Box::new(a))
    }

    pub fn abs(a: Expr) -> Expr {
        Expr::Abs(Box::new(a))
    }
}

// ------------------------------------------------------------------ methods

impl Expr {
    /// Evaluates at a point. Total on finite inputs except division by an
    /// exact zero, which reports the offending subexpression.
    pub fn eval(&self, p: &EvalPoint) -> Result<f64, ExprError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(Var::X(i)) => {
                p.x.get(*i).copied().ok_or(ExprError::ArityMismatch {
                    needed: i + 1,
                    have: p.x.len(),
                })
            }
            Expr::Var(Var::T) => Ok(p.t),
            Expr::Var(Var::Z) => Ok(p.z),
            Expr::Neg(a) => Ok(-a.eval(p)?),
            Expr::Add(a, b) => Ok(a.eval(p)? + b.eval(p)?),
            Expr::Sub(a, b) => Ok(a.eval(p)? - b.eval(p)?),
            Expr::Mul(a, b) => Ok(a.eval(p)? * b.eval(p)?),
            Expr::Div(a, b) => {
                let d = b.eval(p)?;
                if d == 0.0 {
                    return Err(ExprError::DivisionByZero {
                        expr: b.to_string(),
                    });
                }
                Ok(a.eval(p)? / d)
            }
            Expr::Pow(a, e) => Ok(a.eval(p)?.powi(*e)),
            Expr::Exp(a) => Ok(a.eval(p)?.exp()),
            Expr::Abs(a) => Ok(a.eval(p)?.abs()),
        }
    }

    /// Symbolic derivative with respect to `v`. `abs` is rejected unless its
    /// argument does not depend on `v`.
    pub fn differentiate(&self, v: Var) -> Result<Expr, ExprError> {
        use ops::*;
        Ok(match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.differentiate(v)?),
            Expr::Add(a, b) => add(a.differentiate(v)?, b.differentiate(v)?),
            Expr::Sub(a, b) => sub(a.differentiate(v)?, b.differentiate(v)?),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(v)?, (**b).clone()),
                mul((**a).clone(), b.differentiate(v)?),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.differentiate(v)?, (**b).clone()),
                    mul((**a).clone(), b.differentiate(v)?),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Pow(a, e) => mul(
                mul(num(*e as f64), pow((**a).clone(), e - 1)),
                a.differentiate(v)?,
            ),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.differentiate(v)?),
            Expr::Abs(a) => {
                let da = a.differentiate(v)?;
                if da == Expr::Num(0.0) {
                    num(0.0)
                } else {
                    return Err(ExprError::NotDifferentiable {
                        expr: self.to_string(),
                    });
                }
            }
        })
    }

    /// Whether the expression depends on the given variable.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Abs(a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    /// Largest spatial index used, as a count (`x3` gives 3); `None` when no
    /// spatial variable appears.
    pub fn max_x_index(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(Var::X(i)) => Some(i + 1),
            Expr::Var(_) => None,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Abs(a) => a.max_x_index(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_x_index(), b.max_x_index()) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    (p, q) => p.or(q),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Exp(_) | Expr::Abs(_) => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let need_parens = prec < min_prec;
        if need_parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Var(v) => write!(f, "{v}")?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                // a bare numeric literal would fuse with the minus sign on
                // reparse, so force parentheses around it
                if matches!(**a, Expr::Num(_)) {
                    write!(f, "(")?;
                    a.write(f, 0)?;
                    write!(f, ")")?;
                } else {
                    a.write(f, 3)?;
                }
            }
            Expr::Add(a, b) => {
                a.write(f, 1)?;
                write!(f, " + ")?;
                b.write(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.write(f, 1)?;
                write!(f, " - ")?;
                b.write(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.write(f, 2)?;
                write!(f, "*")?;
                b.write(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.write(f, 2)?;
                write!(f, "/")?;
                b.write(f, 3)?;
            }
            Expr::Pow(a, e) => {
                a.write(f, 5)?;
                write!(f, "^{e}")?;
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.write(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Abs(a) => {
                write!(f, "abs(")?;
                a.write(f, 0)?;
                write!(f, ")")?;
            }
        }
        if need_parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}
