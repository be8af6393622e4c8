//! Scalar expressions over `x` and `y` used for analytic loads, Dirichlet data
//! and manufactured solutions.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'y' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp' | 'ln' | 'sqrt'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. Expressions can be differentiated symbolically.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn num(v: f64) -> Expr {
        Num(v)
    }

    pub fn x() -> Expr {
        Var(Var::X)
    }

    pub fn y() -> Expr {
        Var(Var::Y)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Num(v) => *v,
            Var(Var::X) => x,
            Var(Var::Y) => y,
            Neg(a) => -a.eval(x, y),
            Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Pow(a, b) => {
                let base = a.eval(x, y);
                match b.as_ref() {
                    Num(n) if n.fract() == 0.0 && n.abs() < 64.0 => base.powi(*n as i32),
                    _ => base.powf(b.eval(x, y)),
                }
            }
            Call(f, a) => f.apply(a.eval(x, y)),
        }
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Num(v) => Some(*v),
            _ => None,
        }
    }

    fn depends_on_vars(&self) -> bool {
        match self {
            Num(_) => false,
            Var(_) => true,
            Neg(a) | Call(_, a) => a.depends_on_vars(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.depends_on_vars() || b.depends_on_vars()
            }
        }
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, v: Var) -> Expr {
        match self {
            Num(_) => Num(0.0),
            Var(w) => Num(if *w == v { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(v)),
            Add(a, b) => add(a.derivative(v), b.derivative(v)),
            Sub(a, b) => sub(a.derivative(v), b.derivative(v)),
            Mul(a, b) => add(
                mul(a.derivative(v), (**b).clone()),
                mul((**a).clone(), b.derivative(v)),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(v), (**b).clone()),
                    mul((**a).clone(), b.derivative(v)),
                ),
                pow((**b).clone(), Num(2.0)),
            ),
            Pow(a, b) => {
                if !b.depends_on_vars() {
                    // d(a^n) = n a^(n-1) a'
                    let n = (**b).clone();
                    let nm1 = sub(n.clone(), Num(1.0));
                    mul(mul(n, pow((**a).clone(), nm1)), a.derivative(v))
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.derivative(v), call(Func::Ln, (**a).clone())),
                            div(mul((**b).clone(), a.derivative(v)), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let inner = a.derivative(v);
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => call(Func::Exp, (**a).clone()),
                    Func::Ln => div(Num(1.0), (**a).clone()),
                    Func::Sqrt => div(Num(0.5), call(Func::Sqrt, (**a).clone())),
                };
                mul(outer, inner)
            }
        }
    }
}

// Smart constructors with constant folding.

pub fn neg(a: Expr) -> Expr {
    match a {
        Num(v) => Num(-v),
        Neg(inner) => *inner,
        a => Neg(Box::new(a)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) if y != 0.0 => Num(x / y),
        (Some(x), _) if x == 0.0 => Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Num(x.powf(y)),
        (_, Some(y)) if y == 0.0 => Num(1.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    match a.as_num() {
        Some(v) => Num(f.apply(v)),
        None => Call(f, Box::new(a)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            Var(Var::X) => f.write_str("x"),
            Var(Var::Y) => f.write_str("y"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Expression { column: self.pos + 1, msg: msg.to_string() }
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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                let func = match ident {
                    "x" => return Ok(Var(Var::X)),
                    "y" => return Ok(Var(Var::Y)),
                    "pi" => return Ok(Num(std::f64::consts::PI)),
                    "e" => return Ok(Num(std::f64::consts::E)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "ln" => Func::Ln,
                    "sqrt" => Func::Sqrt,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier `{ident}`")));
                    }
                };
                if !self.eat(b'(') {
                    return Err(self.error(&format!("expected `(` after `{ident}`")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(Call(func, Box::new(arg)))
            }
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src;
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
        let text = std::str::from_utf8(&bytes[start..i]).expect("ascii");
        let v: f64 = text.parse().map_err(|_| self.error(&format!("bad number `{text}`")))?;
        self.pos = i;
        Ok(Num(v))
    }
}

/// A vector field `(u₁(x, y), u₂(x, y))` with precomputed symbolic first and
/// second derivatives.
#[derive(Debug, Clone)]
pub struct VectorExpr {
    pub components: [Expr; 2],
    /// `grad[i][j] = ∂u_i/∂x_j`.
    grad: [[Expr; 2]; 2],
    /// `hess[i][j][k] = ∂²u_i/∂x_j∂x_k`.
    hess: [[[Expr; 2]; 2]; 2],
}

const VARS: [Var; 2] = [Var::X, Var::Y];

impl VectorExpr {
    pub fn new(u1: Expr, u2: Expr) -> Self {
        let components = [u1, u2];
        let grad: [[Expr; 2]; 2] =
            std::array::from_fn(|i| std::array::from_fn(|j| components[i].derivative(VARS[j])));
        let hess = std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| grad[i][j].derivative(VARS[k])))
        });
        Self { components, grad, hess }
    }

    pub fn parse(u1: &str, u2: &str) -> Result<Self> {
        Ok(Self::new(Expr::parse(u1)?, Expr::parse(u2)?))
    }

    pub fn value(&self, p: [f64; 2]) -> [f64; 2] {
        [self.components[0].eval(p[0], p[1]), self.components[1].eval(p[0], p[1])]
    }

    pub fn gradient(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.grad[i][j].eval(p[0], p[1])))
    }

    pub fn hessian(&self, p: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| self.hess[i][j][k].eval(p[0], p[1])))
        })
    }
}
