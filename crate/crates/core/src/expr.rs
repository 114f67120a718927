//! Expression language for objective and constraint functions.
//!
//! Concrete syntax: infix `+ - *`, integer / `p/q` / decimal literals,
//! variables `x1..xn`, and the functions `abs`, `max`, `min`, `sin`, `cos`,
//! `pow`. Smooth atoms (`sin`, `cos`, `pow`) only accept affine arguments.

use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::{self, format_rational, Rational, Vector};

/// `coeffs·x + offset`. Missing trailing coefficients are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub coeffs: Vector,
    pub offset: Rational,
}

impl AffineForm {
    pub fn constant(c: Rational) -> Self {
        Self {
            coeffs: Vec::new(),
            offset: c,
        }
    }

    pub fn var(index: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); index + 1];
        coeffs[index] = Rational::one();
        Self {
            coeffs,
            offset: Rational::zero(),
        }
    }

    /// Coefficient vector padded (or checked) to length `n`.
    pub fn gradient(&self, n: usize) -> Vector {
        let mut g = rational::zeros(n);
        for (i, c) in self.coeffs.iter().enumerate().take(n) {
            g[i] = c.clone();
        }
        g
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.offset.clone(), |acc, (c, xi)| acc + c * xi)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(x)
            .fold(rational::to_f64(&self.offset), |acc, (c, xi)| {
                acc + rational::to_f64(c) * xi
            })
    }

    fn plus(&self, other: &AffineForm) -> AffineForm {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                let b = other.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                a + b
            })
            .collect();
        AffineForm {
            coeffs,
            offset: &self.offset + &other.offset,
        }
    }

    fn times(&self, s: &Rational) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            offset: &self.offset * s,
        }
    }

    fn max_var(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }
}

impl AffineForm {
    fn terms(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count() + usize::from(!self.offset.is_zero())
    }

    fn leading_negative(&self) -> bool {
        self.coeffs
            .iter()
            .find(|c| !c.is_zero())
            .unwrap_or(&self.offset)
            .is_negative()
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        let mut sign = |f: &mut fmt::Formatter<'_>, neg: bool| -> fmt::Result {
            let r = match (wrote, neg) {
                (false, false) => Ok(()),
                (false, true) => write!(f, "-"),
                (true, false) => write!(f, " + "),
                (true, true) => write!(f, " - "),
            };
            wrote = true;
            r
        };
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            sign(f, c.is_negative())?;
            let a = c.abs();
            if a.is_one() {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "{}*x{}", format_rational(&a), i + 1)?;
            }
        }
        if self.terms() == 0 || !self.offset.is_zero() {
            sign(f, self.offset.is_negative())?;
            write!(f, "{}", format_rational(&self.offset.abs()))?;
        }
        Ok(())
    }
}

/// Expression tree. Variables are zero-based internally (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Rational),
    Var(usize),
    Affine(AffineForm),
    Sin(AffineForm),
    Cos(AffineForm),
    Pow(AffineForm, u32),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Smul(Rational, Box<Expr>),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
}

/// Value of an expression at a point, with a flag telling whether it is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointValue {
    pub value: Rational,
    pub exact: bool,
}

impl Expr {
    pub fn constant(c: Rational) -> Self {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn abs(e: Expr) -> Self {
        Expr::Abs(Box::new(e))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::add(a, Expr::neg(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn smul(c: Rational, e: Expr) -> Self {
        Expr::Smul(c, Box::new(e))
    }

    /// Parses the concrete syntax.
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        Parser::new(src)?.parse_all()
    }

    /// The affine form of this expression, if it is affine.
    pub fn as_affine(&self) -> Option<AffineForm> {
        match self {
            Expr::Const(c) => Some(AffineForm::constant(c.clone())),
            Expr::Var(i) => Some(AffineForm::var(*i)),
            Expr::Affine(a) => Some(a.clone()),
            Expr::Neg(e) => e.as_affine().map(|a| a.times(&-Rational::one())),
            Expr::Add(a, b) => Some(a.as_affine()?.plus(&b.as_affine()?)),
            Expr::Smul(c, e) => e.as_affine().map(|a| a.times(c)),
            Expr::Mul(a, b) => match (a.as_ref(), b.as_ref()) {
                (Expr::Const(c), e) | (e, Expr::Const(c)) => e.as_affine().map(|a| a.times(c)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Highest zero-based variable index that occurs, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Affine(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Neg(e) | Expr::Abs(e) | Expr::Smul(_, e) => e.max_var(),
            Expr::Add(a, b) | Expr::Mul(a, b) => a.max_var().max(b.max_var()),
            Expr::Max(es) | Expr::Min(es) => es.iter().filter_map(Expr::max_var).max(),
        }
    }

    /// Exact value when every smooth atom is evaluated at a symbolically known
    /// point; otherwise a double-precision value flagged `exact = false`.
    pub fn eval_value(&self, x: &[Rational]) -> PointValue {
        match self {
            Expr::Const(c) => exact(c.clone()),
            Expr::Var(i) => exact(x[*i].clone()),
            Expr::Affine(a) => exact(a.eval(x)),
            Expr::Sin(a) => {
                let arg = a.eval(x);
                if arg.is_zero() {
                    exact(Rational::zero())
                } else {
                    inexact(rational::to_f64(&arg).sin())
                }
            }
            Expr::Cos(a) => {
                let arg = a.eval(x);
                if arg.is_zero() {
                    exact(Rational::one())
                } else {
                    inexact(rational::to_f64(&arg).cos())
                }
            }
            Expr::Pow(a, k) => exact(num_traits::pow(a.eval(x), *k as usize)),
            Expr::Neg(e) => {
                let v = e.eval_value(x);
                PointValue {
                    value: -v.value,
                    exact: v.exact,
                }
            }
            Expr::Abs(e) => {
                let v = e.eval_value(x);
                PointValue {
                    value: v.value.abs(),
                    exact: v.exact,
                }
            }
            Expr::Add(a, b) => combine(a.eval_value(x), b.eval_value(x), |p, q| p + q),
            Expr::Mul(a, b) => combine(a.eval_value(x), b.eval_value(x), |p, q| p * q),
            Expr::Smul(c, e) => {
                let v = e.eval_value(x);
                PointValue {
                    value: c * v.value,
                    exact: v.exact,
                }
            }
            Expr::Max(es) => fold_extreme(es, x, true),
            Expr::Min(es) => fold_extreme(es, x, false),
        }
    }

    /// Floating-point evaluation used by the sampling oracles.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => rational::to_f64(c),
            Expr::Var(i) => x[*i],
            Expr::Affine(a) => a.eval_f64(x),
            Expr::Sin(a) => a.eval_f64(x).sin(),
            Expr::Cos(a) => a.eval_f64(x).cos(),
            Expr::Pow(a, k) => a.eval_f64(x).powi(*k as i32),
            Expr::Neg(e) => -e.eval_f64(x),
            Expr::Abs(e) => e.eval_f64(x).abs(),
            Expr::Add(a, b) => a.eval_f64(x) + b.eval_f64(x),
            Expr::Mul(a, b) => a.eval_f64(x) * b.eval_f64(x),
            Expr::Smul(c, e) => rational::to_f64(c) * e.eval_f64(x),
            Expr::Max(es) => es.iter().map(|e| e.eval_f64(x)).fold(f64::NEG_INFINITY, f64::max),
            Expr::Min(es) => es.iter().map(|e| e.eval_f64(x)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Node count, used to bound random expression generation in tests.
    pub fn size(&self) -> usize {
        match self {
            Expr::Neg(e) | Expr::Abs(e) | Expr::Smul(_, e) => 1 + e.size(),
            Expr::Add(a, b) | Expr::Mul(a, b) => 1 + a.size() + b.size(),
            Expr::Max(es) | Expr::Min(es) => 1 + es.iter().map(Expr::size).sum::<usize>(),
            _ => 1,
        }
    }
}

fn exact(value: Rational) -> PointValue {
    PointValue { value, exact: true }
}

fn inexact(x: f64) -> PointValue {
    PointValue {
        value: rational::from_f64(x).unwrap_or_else(Rational::zero),
        exact: false,
    }
}

fn combine(a: PointValue, b: PointValue, f: impl Fn(Rational, Rational) -> Rational) -> PointValue {
    PointValue {
        exact: a.exact && b.exact,
        value: f(a.value, b.value),
    }
}

fn fold_extreme(es: &[Expr], x: &[Rational], take_max: bool) -> PointValue {
    let mut vals = es.iter().map(|e| e.eval_value(x));
    let first = vals.next().expect("max/min lists are nonempty");
    vals.fold(first, |acc, v| {
        let exact = acc.exact && v.exact;
        let pick = if take_max {
            v.value > acc.value
        } else {
            v.value < acc.value
        };
        PointValue {
            value: if pick { v.value } else { acc.value },
            exact,
        }
    })
}

fn write_list(f: &mut fmt::Formatter<'_>, name: &str, es: &[Expr]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, e) in es.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{e}")?;
    }
    write!(f, ")")
}

/// Binding strength: 0 for sums, 1 for products and negations, 2 for atoms.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) => 0,
        Expr::Affine(a) if a.terms() > 1 || a.leading_negative() => 0,
        Expr::Neg(_) | Expr::Mul(..) | Expr::Smul(..) => 1,
        Expr::Affine(a) if a.coeffs.iter().any(|c| !c.is_zero() && !c.abs().is_one()) => 1,
        Expr::Const(c) if c.is_negative() => 1,
        _ => 2,
    }
}

struct Wrap<'a>(&'a Expr, u8);

impl fmt::Display for Wrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if prec(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", format_rational(c)),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Affine(a) => write!(f, "{a}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Pow(a, k) => write!(f, "pow({a}, {k})"),
            Expr::Neg(e) => write!(f, "-{}", Wrap(e, 2)),
            Expr::Abs(e) => write!(f, "abs({e})"),
            Expr::Add(a, b) => match b.as_ref() {
                Expr::Neg(c) => write!(f, "{a} - {}", Wrap(c, 1)),
                _ => write!(f, "{a} + {}", Wrap(b, 1)),
            },
            Expr::Mul(a, b) => write!(f, "{}*{}", Wrap(a, 1), Wrap(b, 2)),
            Expr::Smul(c, e) => write!(f, "{}*{}", format_rational(c), Wrap(e, 2)),
            Expr::Max(es) => write_list(f, "max", es),
            Expr::Min(es) => write_list(f, "min", es),
        }
    }
}

/// Syntax error with a 1-based column into the expression text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn err<T>(column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        column,
        message: message.into(),
    })
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, col));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            // `p/q` literal: the slash must be followed by digits.
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let mut literal = text.clone();
            if j < chars.len() && chars[j] == '/' && !text.contains('.') {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_whitespace() {
                    k += 1;
                }
                let dstart = k;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                if k > dstart {
                    let den: String = chars[dstart..k].iter().collect();
                    literal = format!("{text}/{den}");
                    i = k;
                }
            }
            let value = rational::parse_rational(&literal)
                .map_err(|_| ParseError {
                    column: col,
                    message: format!("invalid number `{literal}`"),
                })?;
            out.push((Tok::Num(value), col));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        return err(col, format!("unexpected character `{c}`"));
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Self {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            err(self.col(), format!("expected {what}"))
        }
    }

    fn parse_all(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        match self.peek() {
            Tok::End => Ok(e),
            Tok::Slash => err(
                self.col(),
                "division is only allowed inside rational literals such as 1/2",
            ),
            _ => err(self.col(), "unexpected trailing input"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::add(lhs, rhs);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.unary()?;
            lhs = match (lhs, rhs) {
                (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
                (Expr::Const(c), e) | (e, Expr::Const(c)) => Expr::smul(c, e),
                (a, b) => Expr::mul(a, b),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(match self.unary()? {
                    Expr::Const(c) => Expr::Const(-c),
                    e => Expr::neg(e),
                })
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn affine_arg(&mut self, fname: &str) -> Result<AffineForm, ParseError> {
        let col = self.col();
        let e = self.expr()?;
        e.as_affine().ok_or(ParseError {
            column: col,
            message: format!("argument of {fname} must be affine"),
        })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let col = self.col();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, col),
            Tok::End => err(col, "unexpected end of expression"),
            t => err(col, format!("unexpected token {t:?}")),
        }
    }

    fn ident(&mut self, name: String, col: usize) -> Result<Expr, ParseError> {
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                let k: usize = digits.parse().map_err(|_| ParseError {
                    column: col,
                    message: format!("bad variable `{name}`"),
                })?;
                if k == 0 {
                    return err(col, "variables are numbered from x1");
                }
                return Ok(Expr::Var(k - 1));
            }
        }
        match name.as_str() {
            "abs" | "max" | "min" | "sin" | "cos" | "pow" => {}
            _ => return err(col, format!("unknown identifier `{name}`")),
        }
        self.expect(Tok::LParen, "`(` after function name")?;
        let e = match name.as_str() {
            "abs" => Expr::abs(self.expr()?),
            "sin" => Expr::Sin(self.affine_arg("sin")?),
            "cos" => Expr::Cos(self.affine_arg("cos")?),
            "pow" => {
                let a = self.affine_arg("pow")?;
                self.expect(Tok::Comma, "`,` in pow(affine, k)")?;
                let kcol = self.col();
                let k = match self.bump() {
                    Tok::Num(v) if v.is_integer() && v.is_positive() => v.to_integer().to_u32(),
                    _ => None,
                };
                let k = k.ok_or(ParseError {
                    column: kcol,
                    message: "pow exponent must be a positive integer".into(),
                })?;
                Expr::Pow(a, k)
            }
            _ => {
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                if name == "max" {
                    Expr::Max(args)
                } else {
                    Expr::Min(args)
                }
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(e)
    }
}
