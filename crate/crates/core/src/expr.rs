//! A small closed grammar of complex-valued functions of one real variable `x`.
//!
//! Supported: numeric and imaginary literals (`2`, `0.375i`, `i`), `pi`, `x`,
//! `+ - * /`, powers with constant exponents (`x^2`, `x^(1.25)`), `exp`, `sin`,
//! `cos`, `sqrt` and indicator intervals `ind(a, b)`.
//!
//! Expressions are kept as an AST so that symbolic derivatives, indicator
//! breakpoints, and exact rational polynomial coefficients stay available.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at column {column}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(C64),
    X,
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, C64),
    Exp(Expr),
    Sin(Expr),
    Cos(Expr),
    Indicator(f64, f64),
}

/// Shared, immutable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => {
                if c.im == 0.0 {
                    write!(f, "{:?}", c.re)
                } else if c.re == 0.0 {
                    write!(f, "{:?}i", c.im)
                } else {
                    write!(f, "({:?}{:+?}i)", c.re, c.im)
                }
            }
            Node::X => write!(f, "x"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, c) => write!(f, "({a}^{})", Expr::constant(*c)),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Indicator(a, b) => write!(f, "ind({a:?}, {b:?})"),
        }
    }
}

impl Expr {
    fn node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    pub fn constant(c: impl Into<C64>) -> Self {
        Self::node(Node::Const(c.into()))
    }

    pub fn real(v: f64) -> Self {
        Self::constant(C64::new(v, 0.0))
    }

    pub fn x() -> Self {
        Self::node(Node::X)
    }

    pub fn zero() -> Self {
        Self::real(0.0)
    }

    pub fn indicator(a: f64, b: f64) -> Self {
        Self::node(Node::Indicator(a.min(b), a.max(b)))
    }

    /// `x^p` for a constant (possibly complex) exponent.
    pub fn power_of_x(p: impl Into<C64>) -> Self {
        Self::x().pow(p)
    }

    pub fn exp(self) -> Self {
        match self.const_value() {
            Some(c) => Self::constant(c.exp()),
            None => Self::node(Node::Exp(self)),
        }
    }

    pub fn sin(self) -> Self {
        Self::node(Node::Sin(self))
    }

    pub fn cos(self) -> Self {
        Self::node(Node::Cos(self))
    }

    pub fn pow(self, p: impl Into<C64>) -> Self {
        let p = p.into();
        if p == C64::new(0.0, 0.0) {
            return Self::real(1.0);
        }
        if p == C64::new(1.0, 0.0) {
            return self;
        }
        if self.is_zero() {
            return Self::zero();
        }
        Self::node(Node::Pow(self, p))
    }

    pub fn scale(self, c: impl Into<C64>) -> Self {
        Self::constant(c) * self
    }

    fn const_value(&self) -> Option<C64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.const_value() == Some(C64::new(0.0, 0.0))
    }

    fn is_one(&self) -> bool {
        self.const_value() == Some(C64::new(1.0, 0.0))
    }

    /// True when the expression does not depend on `x`.
    pub fn is_constant(&self) -> bool {
        match &*self.0 {
            Node::Const(_) => true,
            Node::X | Node::Indicator(..) => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                a.is_constant()
            }
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::X => C64::new(x, 0.0),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Neg(a) => -a.eval(x),
            Node::Pow(a, p) => complex_pow(a.eval(x), *p),
            Node::Exp(a) => a.eval(x).exp(),
            Node::Sin(a) => a.eval(x).sin(),
            Node::Cos(a) => a.eval(x).cos(),
            Node::Indicator(lo, hi) => {
                if x >= *lo && x <= *hi {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
        }
    }

    /// Symbolic derivative with respect to `x`. Indicators differentiate to 0
    /// (derivative taken almost everywhere).
    pub fn derivative(&self) -> Expr {
        match &*self.0 {
            Node::Const(_) | Node::Indicator(..) => Expr::zero(),
            Node::X => Expr::real(1.0),
            Node::Add(a, b) => a.derivative() + b.derivative(),
            Node::Sub(a, b) => a.derivative() - b.derivative(),
            Node::Mul(a, b) => a.derivative() * b.clone() + a.clone() * b.derivative(),
            Node::Div(a, b) => {
                if b.is_constant() {
                    a.derivative() / b.clone()
                } else {
                    (a.derivative() * b.clone() - a.clone() * b.derivative())
                        / b.clone().pow(2.0)
                }
            }
            Node::Neg(a) => -a.derivative(),
            Node::Pow(a, p) => {
                Expr::constant(*p) * a.clone().pow(*p - 1.0) * a.derivative()
            }
            Node::Exp(a) => self.clone() * a.derivative(),
            Node::Sin(a) => a.clone().cos() * a.derivative(),
            Node::Cos(a) => -(a.clone().sin() * a.derivative()),
        }
    }

    pub fn second_derivative(&self) -> Expr {
        self.derivative().derivative()
    }

    /// Pointwise complex conjugate for real `x`.
    pub fn conj(&self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::constant(c.conj()),
            Node::X | Node::Indicator(..) => self.clone(),
            Node::Add(a, b) => a.conj() + b.conj(),
            Node::Sub(a, b) => a.conj() - b.conj(),
            Node::Mul(a, b) => a.conj() * b.conj(),
            Node::Div(a, b) => a.conj() / b.conj(),
            Node::Neg(a) => -a.conj(),
            // principal branch: conj(z^p) = conj(z)^conj(p) away from the cut
            Node::Pow(a, p) => a.conj().pow(p.conj()),
            Node::Exp(a) => a.conj().exp(),
            Node::Sin(a) => a.conj().sin(),
            Node::Cos(a) => a.conj().cos(),
        }
    }

    /// Sorted, deduplicated discontinuity locations (indicator edges).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breaks(&mut out);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    fn collect_breaks(&self, out: &mut Vec<f64>) {
        match &*self.0 {
            Node::Const(_) | Node::X => {}
            Node::Indicator(a, b) => {
                out.push(*a);
                out.push(*b);
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_breaks(out);
                b.collect_breaks(out);
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                a.collect_breaks(out)
            }
        }
    }

    /// Exact polynomial form, if the expression is a polynomial in `x` whose
    /// literals are finite binary floats (every such float is a rational).
    pub fn to_rational_poly(&self) -> Option<RationalPoly> {
        match &*self.0 {
            Node::Const(c) => Some(RationalPoly::constant(ExactComplex::from_c64(*c)?)),
            Node::X => Some(RationalPoly::x()),
            Node::Add(a, b) => Some(a.to_rational_poly()?.add(&b.to_rational_poly()?)),
            Node::Sub(a, b) => Some(a.to_rational_poly()?.sub(&b.to_rational_poly()?)),
            Node::Mul(a, b) => Some(a.to_rational_poly()?.mul(&b.to_rational_poly()?)),
            Node::Div(a, b) => {
                let d = b.to_rational_poly()?;
                if d.degree() != 0 {
                    return None;
                }
                let c = d.coeffs.first()?.clone();
                if c.is_zero() {
                    return None;
                }
                Some(a.to_rational_poly()?.scale(&c.inv()))
            }
            Node::Neg(a) => Some(a.to_rational_poly()?.neg()),
            Node::Pow(a, p) => {
                if p.im != 0.0 || p.re < 0.0 || p.re.fract() != 0.0 || p.re > 64.0 {
                    return None;
                }
                let base = a.to_rational_poly()?;
                let mut acc = RationalPoly::constant(ExactComplex::one());
                for _ in 0..(p.re as usize) {
                    acc = acc.mul(&base);
                }
                Some(acc)
            }
            Node::Exp(_) | Node::Sin(_) | Node::Cos(_) | Node::Indicator(..) => None,
        }
    }

    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        Parser::new(text).parse_all()
    }
}

fn complex_pow(z: C64, p: C64) -> C64 {
    if p.im == 0.0 && p.re.fract() == 0.0 && p.re.abs() <= 64.0 {
        return z.powi(p.re as i32);
    }
    if z == C64::new(0.0, 0.0) {
        return if p.re > 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(f64::INFINITY, 0.0)
        };
    }
    (p * z.ln()).exp()
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.const_value(), rhs.const_value()) {
            return Expr::constant(a + b);
        }
        Expr::node(Node::Add(self, rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return -rhs;
        }
        if let (Some(a), Some(b)) = (self.const_value(), rhs.const_value()) {
            return Expr::constant(a - b);
        }
        Expr::node(Node::Sub(self, rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.is_one() {
            return rhs;
        }
        if rhs.is_one() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.const_value(), rhs.const_value()) {
            return Expr::constant(a * b);
        }
        Expr::node(Node::Mul(self, rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        if rhs.is_one() {
            return self;
        }
        Expr::node(Node::Div(self, rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.const_value() {
            Some(c) => Expr::constant(-c),
            None => Expr::node(Node::Neg(self)),
        }
    }
}

// ---------------------------------------------------------------------------
// parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_col: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0, tok: Tok::End, tok_col: 1 }
    }

    fn err<T>(&self, col: usize, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { column: col, message: msg.into() })
    }

    fn advance(&mut self) -> Result<(), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_col = self.src[..self.pos].chars().count() + 1;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos] as char;
        if c.is_ascii_digit() || c == '.' {
            let start = self.pos;
            while self.pos < bytes.len()
                && ((bytes[self.pos] as char).is_ascii_digit() || bytes[self.pos] == b'.')
            {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let save = self.pos;
                self.pos += 1;
                if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                    self.pos += 1;
                }
                if self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_digit() {
                    while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_digit() {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let text = &self.src[start..self.pos];
            let value: f64 = match text.parse() {
                Ok(v) => v,
                Err(_) => return self.err(self.tok_col, format!("malformed number '{text}'")),
            };
            let imaginary = self.pos < bytes.len()
                && bytes[self.pos] == b'i'
                && !(self.pos + 1 < bytes.len() && (bytes[self.pos + 1] as char).is_ascii_alphanumeric());
            if imaginary {
                self.pos += 1;
                self.tok = Tok::Imag(value);
            } else {
                self.tok = Tok::Num(value);
            }
            return Ok(());
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_alphanumeric() {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
            return Ok(());
        }
        if "+-*/^(),".contains(c) {
            self.pos += 1;
            self.tok = Tok::Op(c);
            return Ok(());
        }
        self.err(self.tok_col, format!("unexpected character '{c}'"))
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        self.advance()?;
        if self.tok == Tok::End {
            return self.err(1, "empty expression");
        }
        let e = self.expr()?;
        if self.tok != Tok::End {
            return self.err(self.tok_col, "unexpected trailing input");
        }
        Ok(e)
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.tok == Tok::Op(op) {
            self.advance()
        } else {
            self.err(self.tok_col, format!("expected '{op}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.advance()?;
                    lhs = raw(Node::Add(lhs, self.term()?));
                }
                Tok::Op('-') => {
                    self.advance()?;
                    lhs = raw(Node::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.advance()?;
                    lhs = raw(Node::Mul(lhs, self.unary()?));
                }
                Tok::Op('/') => {
                    self.advance()?;
                    lhs = raw(Node::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.tok {
            Tok::Op('-') => {
                self.advance()?;
                Ok(raw(Node::Neg(self.unary()?)))
            }
            Tok::Op('+') => {
                self.advance()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.advance()?;
            let col = self.tok_col;
            let exponent = self.unary()?;
            if !exponent.is_constant() {
                return self.err(col, "exponent must be constant");
            }
            let p = exponent.eval(0.0);
            if !p.re.is_finite() || !p.im.is_finite() {
                return self.err(col, "exponent is not finite");
            }
            return Ok(raw(Node::Pow(base, p)));
        }
        Ok(base)
    }

    fn constant_arg(&mut self) -> Result<f64, ExprError> {
        let col = self.tok_col;
        let e = self.expr()?;
        if !e.is_constant() {
            return self.err(col, "indicator bound must be constant");
        }
        let v = e.eval(0.0);
        if v.im != 0.0 || !v.re.is_finite() {
            return self.err(col, "indicator bound must be a finite real number");
        }
        Ok(v.re)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let col = self.tok_col;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::real(v))
            }
            Tok::Imag(v) => {
                self.advance()?;
                Ok(Expr::constant(C64::new(0.0, v)))
            }
            Tok::Op('(') => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.advance()?;
                match name.as_str() {
                    "x" => Ok(Expr::x()),
                    "i" => Ok(Expr::constant(C64::new(0.0, 1.0))),
                    "pi" => Ok(Expr::real(std::f64::consts::PI)),
                    "exp" | "sin" | "cos" | "sqrt" => {
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(raw(match name.as_str() {
                            "exp" => Node::Exp(arg),
                            "sin" => Node::Sin(arg),
                            "cos" => Node::Cos(arg),
                            _ => Node::Pow(arg, C64::new(0.5, 0.0)),
                        }))
                    }
                    "ind" => {
                        self.expect('(')?;
                        let a = self.constant_arg()?;
                        self.expect(',')?;
                        let b = self.constant_arg()?;
                        self.expect(')')?;
                        if a >= b {
                            return self.err(col, "indicator needs a < b");
                        }
                        Ok(Expr::indicator(a, b))
                    }
                    other => self.err(col, format!("unknown identifier '{other}'")),
                }
            }
            Tok::End => self.err(col, "unexpected end of expression"),
            Tok::Op(c) => self.err(col, format!("unexpected '{c}'")),
        }
    }
}

fn raw(n: Node) -> Expr {
    Expr::node(n)
}

// ---------------------------------------------------------------------------
// exact arithmetic

/// Complex number with arbitrary-precision rational parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        ExactComplex { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::new(BigRational::one(), BigRational::zero())
    }

    pub fn from_c64(c: C64) -> Option<Self> {
        Some(Self::new(BigRational::from_float(c.re)?, BigRational::from_float(c.im)?))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(BigRational::new(BigInt::from(num), BigInt::from(den)), BigRational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Self {
        let d = self.norm_sqr();
        Self::new(&self.re / &d, -&self.im / &d)
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// Polynomial with exact complex rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    pub coeffs: Vec<ExactComplex>,
}

impl RationalPoly {
    pub fn constant(c: ExactComplex) -> Self {
        RationalPoly { coeffs: vec![c] }.trimmed()
    }

    pub fn x() -> Self {
        RationalPoly { coeffs: vec![ExactComplex::zero(), ExactComplex::one()] }
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(ExactComplex::zero());
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = ExactComplex::zero();
        let coeffs = (0..n)
            .map(|k| self.coeffs.get(k).unwrap_or(&z).add(o.coeffs.get(k).unwrap_or(&z)))
            .collect();
        RationalPoly { coeffs }.trimmed()
    }

    pub fn neg(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|c| ExactComplex::zero().sub(c)).collect();
        RationalPoly { coeffs }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut coeffs = vec![ExactComplex::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        RationalPoly { coeffs }.trimmed()
    }

    pub fn scale(&self, c: &ExactComplex) -> Self {
        RationalPoly { coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect() }.trimmed()
    }

    pub fn conj(&self) -> Self {
        RationalPoly { coeffs: self.coeffs.iter().map(|a| a.conj()).collect() }
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return RationalPoly::constant(ExactComplex::zero());
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| c.mul(&ExactComplex::from_ratio(k as i64 + 1, 1)))
            .collect();
        RationalPoly { coeffs }.trimmed()
    }

    pub fn eval(&self, x: &BigRational) -> ExactComplex {
        let mut acc = ExactComplex::zero();
        let xc = ExactComplex::new(x.clone(), BigRational::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&xc).add(c);
        }
        acc
    }

    /// Exact integral over `[0, b]`.
    pub fn integrate(&self, b: &BigRational) -> ExactComplex {
        let mut acc = ExactComplex::zero();
        let mut bpow = b.clone();
        for (k, c) in self.coeffs.iter().enumerate() {
            let factor = &bpow / BigRational::from_integer(BigInt::from(k as i64 + 1));
            acc = acc.add(&c.mul(&ExactComplex::new(factor, BigRational::zero())));
            bpow = &bpow * b;
        }
        acc
    }

    /// `∫₀ᵇ |p'(x)|² dx`, exact.
    pub fn dirichlet_energy(&self, b: &BigRational) -> BigRational {
        let d = self.derivative();
        d.conj().mul(&d).integrate(b).re
    }
}
