//! Arithmetic expressions over `x1..xm` defining real-vector self-maps.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?              right associative
//! atom    := number | 'x' digits | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `min`, `max`, `pow` (two arguments) and `abs`, `sqrt`, `exp`,
//! `sin`, `cos` (one argument). `pow(a, b)` and `a ^ b` parse to the same node.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{invalid, Result};
use crate::rng::SplitMix;

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
    Min,
    Max,
    Abs,
    Sqrt,
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; `x1` is `Var(0)`.
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Canonical, fully parenthesized form. Re-parsing it yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("parse error at byte {position}: expected {expected}")]
    Parse { position: usize, expected: String },
    #[error("unknown identifier '{name}' at byte {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("variable x{index} at byte {position} exceeds dimension {dimension}")]
    VariableOutOfRange { position: usize, index: usize, dimension: usize },
}

impl ExprError {
    pub fn position(&self) -> usize {
        match self {
            ExprError::Parse { position, .. }
            | ExprError::UnknownIdentifier { position, .. }
            | ExprError::VariableOutOfRange { position, .. } => *position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainFault {
    DivisionByZero,
    SqrtOfNegative,
    NonFinite,
    DimensionMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[error("map component {component} failed: {fault:?}")]
pub struct EvalError {
    pub component: usize,
    pub fault: DomainFault,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(u8),
    End,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let value = text[start..i]
                .parse::<f64>()
                .map_err(|_| ExprError::Parse { position: start, expected: "a number".into() })?;
            out.push((start, Tok::Num(value)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if b"+-*/^(),".contains(&c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ExprError::Parse { position: i, expected: "an operator, operand or parenthesis".into() });
        }
    }
    out.push((b.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    dimension: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn eat(&mut self, sym: u8) -> bool {
        if *self.peek() == Tok::Sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: u8) -> Result<(), ExprError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(ExprError::Parse { position: self.offset(), expected: format!("'{}'", sym as char) })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Tok::Sym(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                self.identifier(at, &name)
            }
            _ => Err(ExprError::Parse { position: at, expected: "a number, variable, function call or '('".into() }),
        }
    }

    fn identifier(&mut self, at: usize, name: &str) -> Result<Expr, ExprError> {
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.dimension {
                    return Err(ExprError::VariableOutOfRange { position: at, index, dimension: self.dimension });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        let is_pow = name == "pow";
        let func = Func::lookup(name);
        if func.is_none() && !is_pow {
            return Err(ExprError::UnknownIdentifier { position: at, name: name.to_string() });
        }
        self.expect(b'(')?;
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        let arity = func.map_or(2, Func::arity);
        if args.len() != arity {
            return Err(ExprError::Parse { position: at, expected: format!("{arity} argument(s) for {name}") });
        }
        Ok(match func {
            Some(f) => Expr::Call(f, args),
            None => {
                let mut it = args.into_iter();
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                Expr::Binary(BinOp::Pow, Box::new(a), Box::new(b))
            }
        })
    }
}

/// Parses `text` as an expression over `x1..x{dimension}`.
pub fn parse_expr(text: &str, dimension: usize) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, dimension };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ExprError::Parse { position: p.offset(), expected: "an operator or end of input".into() });
    }
    Ok(e)
}

fn finite(v: f64) -> Result<f64, DomainFault> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainFault::NonFinite)
    }
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> Result<f64, DomainFault> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or(DomainFault::DimensionMismatch)?,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return Err(DomainFault::DivisionByZero),
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(x)?;
                match func {
                    Func::Min => a.min(args[1].eval(x)?),
                    Func::Max => a.max(args[1].eval(x)?),
                    Func::Abs => a.abs(),
                    Func::Sqrt if a < 0.0 => return Err(DomainFault::SqrtOfNegative),
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
        };
        finite(v)
    }
}

/// Self-map of `R^m` given by one expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    components: Vec<Expr>,
    sources: Vec<String>,
}

impl RealMap {
    /// Parses one expression per component; the dimension is the component
    /// count.
    pub fn parse<S: AsRef<str>>(components: &[S]) -> Result<Self> {
        let m = components.len();
        if m == 0 {
            return Err(invalid("map has no components"));
        }
        let parsed = components
            .iter()
            .enumerate()
            .map(|(c, s)| parse_expr(s.as_ref(), m).map_err(|source| crate::Error::MapParse { component: c, source }))
            .collect::<Result<Vec<_>>>()?;
        Ok(RealMap { components: parsed, sources: components.iter().map(|s| s.as_ref().to_string()).collect() })
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Expression strings as supplied.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        if point.len() != self.dimension() {
            return Err(EvalError { component: 0, fault: DomainFault::DimensionMismatch });
        }
        self.components
            .iter()
            .enumerate()
            .map(|(component, e)| e.eval(point).map_err(|fault| EvalError { component, fault }))
            .collect()
    }
}

pub fn eval_map(map: &RealMap, point: &[f64]) -> Result<Vec<f64>, EvalError> {
    map.eval(point)
}

/// Axis-aligned box `lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Bounds { lo, hi };
        b.check()?;
        Ok(b)
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Bounds::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn check(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(invalid("box bounds must be non-empty with matching dimensions"));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(invalid("box bounds must be finite with lo <= hi"));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn sample(&self, rng: &mut SplitMix) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| rng.uniform(a, b)).collect()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, &a), &b) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(a, b);
        }
    }
}

/// Largest sampled ratio `|f(x) - f(y)| / |x - y|` (Euclidean) over seeded
/// pairs in the box. This is a lower bound on the Lipschitz constant.
pub fn lipschitz_probe(map: &RealMap, bounds: &Bounds, samples: usize, seed: u64) -> Result<f64> {
    bounds.check()?;
    if bounds.dimension() != map.dimension() {
        return Err(invalid("box dimension does not match the map"));
    }
    if samples < 2 {
        return Err(invalid("lipschitz_probe needs at least 2 samples"));
    }
    let mut best: f64 = 0.0;
    for s in 0..samples as u64 {
        let mut rng = SplitMix::stream(seed, s);
        let x = bounds.sample(&mut rng);
        let y = bounds.sample(&mut rng);
        let d = crate::space::Norm::L2.distance(&x, &y);
        if d == 0.0 {
            continue;
        }
        let (fx, fy) = (map.eval(&x)?, map.eval(&y)?);
        best = best.max(crate::space::Norm::L2.distance(&fx, &fy) / d);
    }
    Ok(best)
}
