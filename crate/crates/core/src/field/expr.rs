//! Expression trees over `z`, `conj(z)`, `x`, `y` with exact Wirtinger
//! derivatives.
//!
//! Trees are immutable DAGs (`Arc` shared). Constructors fold constants and
//! drop additive zeros and multiplicative ones; no other rewriting happens.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    ZBar,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Complex64),
    Var(Var),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Conj(Expr),
    Exp(Expr),
    Powi(Expr, i32),
    Abs2(Expr),
    /// Principal square root.
    Sqrt(Expr),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(c: Complex64) -> Self {
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn real(v: f64) -> Self {
        Self::constant(Complex64::new(v, 0.0))
    }

    pub fn var(v: Var) -> Self {
        Expr(Arc::new(Node::Var(v)))
    }

    pub fn x() -> Self {
        Self::var(Var::X)
    }

    pub fn y() -> Self {
        Self::var(Var::Y)
    }

    pub fn z() -> Self {
        Self::var(Var::Z)
    }

    pub fn zbar() -> Self {
        Self::var(Var::ZBar)
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_const() == Some(ZERO)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(ONE)
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a + b),
            _ if self.is_zero() => rhs.clone(),
            _ if rhs.is_zero() => self.clone(),
            _ => Expr(Arc::new(Node::Add(self.clone(), rhs.clone()))),
        }
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a - b),
            _ if rhs.is_zero() => self.clone(),
            _ if self.is_zero() => rhs.neg(),
            _ => Expr(Arc::new(Node::Sub(self.clone(), rhs.clone()))),
        }
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a * b),
            _ if self.is_zero() || rhs.is_zero() => Self::constant(ZERO),
            _ if self.is_one() => rhs.clone(),
            _ if rhs.is_one() => self.clone(),
            _ => Expr(Arc::new(Node::Mul(self.clone(), rhs.clone()))),
        }
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a / b),
            _ if self.is_zero() => Self::constant(ZERO),
            _ if rhs.is_one() => self.clone(),
            _ => Expr(Arc::new(Node::Div(self.clone(), rhs.clone()))),
        }
    }

    pub fn neg(&self) -> Expr {
        match self.as_const() {
            Some(a) => Self::constant(-a),
            None => Expr(Arc::new(Node::Neg(self.clone()))),
        }
    }

    pub fn conj(&self) -> Expr {
        match &*self.0 {
            Node::Const(a) => Self::constant(a.conj()),
            Node::Var(Var::Z) => Self::zbar(),
            Node::Var(Var::ZBar) => Self::z(),
            Node::Var(Var::X) | Node::Var(Var::Y) => self.clone(),
            Node::Conj(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Conj(self.clone()))),
        }
    }

    pub fn exp(&self) -> Expr {
        match self.as_const() {
            Some(a) => Self::constant(a.exp()),
            None => Expr(Arc::new(Node::Exp(self.clone()))),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        match (self.as_const(), n) {
            (_, 0) => Self::constant(ONE),
            (_, 1) => self.clone(),
            (Some(a), n) => Self::constant(a.powi(n)),
            _ => Expr(Arc::new(Node::Powi(self.clone(), n))),
        }
    }

    /// `|f|^2 = f * conj(f)`.
    pub fn abs2(&self) -> Expr {
        match self.as_const() {
            Some(a) => Self::constant(Complex64::new(a.norm_sqr(), 0.0)),
            None => Expr(Arc::new(Node::Abs2(self.clone()))),
        }
    }

    pub fn sqrt(&self) -> Expr {
        match self.as_const() {
            Some(a) => Self::constant(a.sqrt()),
            None => Expr(Arc::new(Node::Sqrt(self.clone()))),
        }
    }

    /// Real part, `(f + conj f) / 2`.
    pub fn re(&self) -> Expr {
        self.add(&self.conj()).mul(&Expr::real(0.5))
    }

    /// Imaginary part, `(f - conj f) / 2i`.
    pub fn im(&self) -> Expr {
        self.sub(&self.conj()).mul(&Expr::constant(Complex64::new(0.0, -0.5)))
    }

    /// Direct recursive evaluation at `z`. Bulk evaluation should go through a
    /// compiled [`Tape`].
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(v) => eval_var(*v, z),
            Node::Add(a, b) => a.eval(z) + b.eval(z),
            Node::Sub(a, b) => a.eval(z) - b.eval(z),
            Node::Mul(a, b) => a.eval(z) * b.eval(z),
            Node::Div(a, b) => a.eval(z) / b.eval(z),
            Node::Neg(a) => -a.eval(z),
            Node::Conj(a) => a.eval(z).conj(),
            Node::Exp(a) => a.eval(z).exp(),
            Node::Powi(a, n) => a.eval(z).powi(*n),
            Node::Abs2(a) => Complex64::new(a.eval(z).norm_sqr(), 0.0),
            Node::Sqrt(a) => a.eval(z).sqrt(),
        }
    }

    /// Exact first Wirtinger derivatives `(f_z, f_zbar)`.
    pub fn wirtinger(&self) -> (Expr, Expr) {
        let mut memo = BTreeMap::new();
        self.wirtinger_memo(&mut memo)
    }

    fn wirtinger_memo(&self, memo: &mut BTreeMap<usize, (Expr, Expr)>) -> (Expr, Expr) {
        if let Some(d) = memo.get(&self.ptr()) {
            return d.clone();
        }
        let half = Expr::real(0.5);
        let d = match &*self.0 {
            Node::Const(_) => (Expr::real(0.0), Expr::real(0.0)),
            Node::Var(Var::Z) => (Expr::real(1.0), Expr::real(0.0)),
            Node::Var(Var::ZBar) => (Expr::real(0.0), Expr::real(1.0)),
            Node::Var(Var::X) => (half.clone(), half),
            Node::Var(Var::Y) => (Expr::constant(Complex64::new(0.0, -0.5)), Expr::constant(Complex64::new(0.0, 0.5))),
            Node::Add(a, b) => {
                let (az, azb) = a.wirtinger_memo(memo);
                let (bz, bzb) = b.wirtinger_memo(memo);
                (az.add(&bz), azb.add(&bzb))
            }
            Node::Sub(a, b) => {
                let (az, azb) = a.wirtinger_memo(memo);
                let (bz, bzb) = b.wirtinger_memo(memo);
                (az.sub(&bz), azb.sub(&bzb))
            }
            Node::Mul(a, b) => {
                let (az, azb) = a.wirtinger_memo(memo);
                let (bz, bzb) = b.wirtinger_memo(memo);
                (az.mul(b).add(&a.mul(&bz)), azb.mul(b).add(&a.mul(&bzb)))
            }
            Node::Div(a, b) => {
                let (az, azb) = a.wirtinger_memo(memo);
                let (bz, bzb) = b.wirtinger_memo(memo);
                let b2 = b.powi(2);
                (
                    az.mul(b).sub(&a.mul(&bz)).div(&b2),
                    azb.mul(b).sub(&a.mul(&bzb)).div(&b2),
                )
            }
            Node::Neg(a) => {
                let (az, azb) = a.wirtinger_memo(memo);
                (az.neg(), azb.neg())
            }
            Node::Conj(a) => {
                let (az, azb) = a.wirtinger_memo(memo);
                (azb.conj(), az.conj())
            }
            Node::Exp(a) => {
                let (az, azb) = a.wirtinger_memo(memo);
                (self.mul(&az), self.mul(&azb))
            }
            Node::Powi(a, n) => {
                let (az, azb) = a.wirtinger_memo(memo);
                let outer = Expr::real(*n as f64).mul(&a.powi(n - 1));
                (outer.clone().mul(&az), outer.mul(&azb))
            }
            Node::Abs2(a) => {
                let (az, azb) = a.wirtinger_memo(memo);
                let ac = a.conj();
                (
                    az.clone().mul(&ac).add(&a.mul(&azb.conj())),
                    azb.mul(&ac).add(&a.mul(&az.conj())),
                )
            }
            Node::Sqrt(a) => {
                let (az, azb) = a.wirtinger_memo(memo);
                let denom = Expr::real(2.0).mul(self);
                (az.div(&denom), azb.div(&denom))
            }
        };
        memo.insert(self.ptr(), d.clone());
        d
    }

    /// Composition `f(m(z))`: every occurrence of `z` is replaced by `m`,
    /// `conj(z)` by `conj(m)`, and `x`, `y` by the real and imaginary parts of `m`.
    pub fn compose(&self, map: &Expr) -> Expr {
        let subs = Substitution {
            z: map.clone(),
            zbar: map.conj(),
            x: map.re(),
            y: map.im(),
        };
        let mut memo = BTreeMap::new();
        self.compose_memo(&subs, &mut memo)
    }

    fn compose_memo(&self, s: &Substitution, memo: &mut BTreeMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.ptr()) {
            return e.clone();
        }
        let out = match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(Var::Z) => s.z.clone(),
            Node::Var(Var::ZBar) => s.zbar.clone(),
            Node::Var(Var::X) => s.x.clone(),
            Node::Var(Var::Y) => s.y.clone(),
            Node::Add(a, b) => a.compose_memo(s, memo).add(&b.compose_memo(s, memo)),
            Node::Sub(a, b) => a.compose_memo(s, memo).sub(&b.compose_memo(s, memo)),
            Node::Mul(a, b) => a.compose_memo(s, memo).mul(&b.compose_memo(s, memo)),
            Node::Div(a, b) => a.compose_memo(s, memo).div(&b.compose_memo(s, memo)),
            Node::Neg(a) => a.compose_memo(s, memo).neg(),
            Node::Conj(a) => a.compose_memo(s, memo).conj(),
            Node::Exp(a) => a.compose_memo(s, memo).exp(),
            Node::Powi(a, n) => a.compose_memo(s, memo).powi(*n),
            Node::Abs2(a) => a.compose_memo(s, memo).abs2(),
            Node::Sqrt(a) => a.compose_memo(s, memo).sqrt(),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        Tape::compile(self).len()
    }
}

struct Substitution {
    z: Expr,
    zbar: Expr,
    x: Expr,
    y: Expr,
}

fn eval_var(v: Var, z: Complex64) -> Complex64 {
    match v {
        Var::X => Complex64::new(z.re, 0.0),
        Var::Y => Complex64::new(z.im, 0.0),
        Var::Z => z,
        Var::ZBar => z.conj(),
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Node::Const(c) => write!(f, "({}{:+}i)", c.re, c.im),
            Node::Var(Var::X) => f.write_str("x"),
            Node::Var(Var::Y) => f.write_str("y"),
            Node::Var(Var::Z) => f.write_str("z"),
            Node::Var(Var::ZBar) => f.write_str("zbar"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::Conj(a) => write!(f, "conj({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Powi(a, n) => write!(f, "{a}^{n}"),
            Node::Abs2(a) => write!(f, "|{a}|^2"),
            Node::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

macro_rules! expr_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$m(self, rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$m(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$m(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$m(self, &rhs)
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                Expr::$m(&self, &Expr::real(rhs))
            }
        }
        impl $tr<f64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                Expr::$m(self, &Expr::real(rhs))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$m(&Expr::real(self), &rhs)
            }
        }
        impl $tr<&Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$m(&Expr::real(self), rhs)
            }
        }
        impl $tr<Complex64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Complex64) -> Expr {
                Expr::$m(&self, &Expr::constant(rhs))
            }
        }
        impl $tr<Complex64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Complex64) -> Expr {
                Expr::$m(self, &Expr::constant(rhs))
            }
        }
    };
}

expr_binop!(Add, add);
expr_binop!(Sub, sub);
expr_binop!(Mul, mul);
expr_binop!(Div, div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(Complex64),
    Var(Var),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Conj(u32),
    Exp(u32),
    Powi(u32, i32),
    Abs2(u32),
    Sqrt(u32),
}

/// A DAG flattened into a straight-line program; shared subtrees are
/// evaluated once per point.
#[derive(Debug, Clone)]
pub struct Tape {
    code: Vec<Instr>,
}

impl Tape {
    pub fn compile(expr: &Expr) -> Self {
        let mut code = Vec::new();
        let mut slots = BTreeMap::new();
        emit(expr, &mut code, &mut slots);
        Tape { code }
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// Evaluates at `z` using `scratch` as the register file.
    pub fn eval_with(&self, z: Complex64, scratch: &mut Vec<Complex64>) -> Complex64 {
        scratch.clear();
        for ins in &self.code {
            let r = |k: &u32| scratch[*k as usize];
            let v = match ins {
                Instr::Const(c) => *c,
                Instr::Var(v) => eval_var(*v, z),
                Instr::Add(a, b) => r(a) + r(b),
                Instr::Sub(a, b) => r(a) - r(b),
                Instr::Mul(a, b) => r(a) * r(b),
                Instr::Div(a, b) => r(a) / r(b),
                Instr::Neg(a) => -r(a),
                Instr::Conj(a) => r(a).conj(),
                Instr::Exp(a) => r(a).exp(),
                Instr::Powi(a, n) => r(a).powi(*n),
                Instr::Abs2(a) => Complex64::new(r(a).norm_sqr(), 0.0),
                Instr::Sqrt(a) => r(a).sqrt(),
            };
            scratch.push(v);
        }
        scratch.last().copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut scratch = Vec::with_capacity(self.code.len());
        self.eval_with(z, &mut scratch)
    }
}

fn emit(e: &Expr, code: &mut Vec<Instr>, slots: &mut BTreeMap<usize, u32>) -> u32 {
    if let Some(&s) = slots.get(&e.ptr()) {
        return s;
    }
    let ins = match e.node() {
        Node::Const(c) => Instr::Const(*c),
        Node::Var(v) => Instr::Var(*v),
        Node::Add(a, b) => Instr::Add(emit(a, code, slots), emit(b, code, slots)),
        Node::Sub(a, b) => Instr::Sub(emit(a, code, slots), emit(b, code, slots)),
        Node::Mul(a, b) => Instr::Mul(emit(a, code, slots), emit(b, code, slots)),
        Node::Div(a, b) => Instr::Div(emit(a, code, slots), emit(b, code, slots)),
        Node::Neg(a) => Instr::Neg(emit(a, code, slots)),
        Node::Conj(a) => Instr::Conj(emit(a, code, slots)),
        Node::Exp(a) => Instr::Exp(emit(a, code, slots)),
        Node::Powi(a, n) => Instr::Powi(emit(a, code, slots), *n),
        Node::Abs2(a) => Instr::Abs2(emit(a, code, slots)),
        Node::Sqrt(a) => Instr::Sqrt(emit(a, code, slots)),
    };
    let slot = code.len() as u32;
    code.push(ins);
    slots.insert(e.ptr(), slot);
    slot
}
