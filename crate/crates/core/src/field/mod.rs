//! Pointwise-evaluable complex fields on planar domains.
//!
//! A [`ComplexField`] is either an exact expression tree or a uniform grid of
//! samples. Arithmetic between two expressions stays symbolic; as soon as a
//! grid is involved the result is a grid (the left operand's layout wins,
//! the other operand is evaluated or bilinearly resampled at its nodes).

mod domain;
mod expr;
mod grid;
pub mod quadrature;

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

pub use domain::{Domain, ImageDomain, Point, Rect};
pub use expr::{Expr, Node, Tape, Var};
pub use grid::Grid;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Backend {
    Expr { expr: Expr, tape: Arc<Tape> },
    Grid(Grid),
}

#[derive(Debug, Clone)]
pub struct ComplexField {
    backend: Backend,
    domain: Domain,
}

impl ComplexField {
    pub fn expr(expr: Expr, domain: Domain) -> Self {
        let tape = Arc::new(Tape::compile(&expr));
        Self { backend: Backend::Expr { expr, tape }, domain }
    }

    pub fn grid(grid: Grid, domain: Domain) -> Self {
        Self { backend: Backend::Grid(grid), domain }
    }

    pub fn constant(c: Complex64, domain: Domain) -> Self {
        Self::expr(Expr::constant(c), domain)
    }

    pub fn real(v: f64, domain: Domain) -> Self {
        Self::constant(Complex64::new(v, 0.0), domain)
    }

    pub fn zero(domain: Domain) -> Self {
        Self::real(0.0, domain)
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn with_domain(&self, domain: Domain) -> Self {
        Self { backend: self.backend.clone(), domain }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match &self.backend {
            Backend::Expr { expr, .. } => Some(expr),
            Backend::Grid(_) => None,
        }
    }

    pub fn as_grid(&self) -> Option<&Grid> {
        match &self.backend {
            Backend::Grid(g) => Some(g),
            Backend::Expr { .. } => None,
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.backend, Backend::Grid(_))
    }

    /// Constant value when the field is a constant expression.
    pub fn as_const(&self) -> Option<Complex64> {
        self.as_expr().and_then(Expr::as_const)
    }

    /// Value at `p`, which must lie in the field's domain.
    pub fn eval(&self, p: Point) -> Result<Complex64> {
        if !self.domain.contains_tol(p, self.domain.eval_tolerance()) {
            return Err(Error::PointOutsideDomain(p));
        }
        self.try_eval_unchecked(p).ok_or(Error::PointOutsideDomain(p))
    }

    /// Value at `p` without the domain check; grids clamp onto their rectangle.
    pub fn eval_unchecked(&self, p: Point) -> Complex64 {
        match &self.backend {
            Backend::Expr { tape, .. } => tape.eval(p.z()),
            Backend::Grid(g) => g.interpolate_clamped(p),
        }
    }

    /// Like [`eval_unchecked`](Self::eval_unchecked) but grids report points
    /// outside their rectangle as `None`.
    pub fn try_eval_unchecked(&self, p: Point) -> Option<Complex64> {
        match &self.backend {
            Backend::Expr { tape, .. } => Some(tape.eval(p.z())),
            Backend::Grid(g) => g.interpolate(p),
        }
    }

    /// Bulk evaluation (unchecked). Order of the output follows `points`.
    pub fn eval_many(&self, points: &[Point]) -> Vec<Complex64> {
        let chunk = |pts: &[Point]| -> Vec<Complex64> {
            match &self.backend {
                Backend::Expr { tape, .. } => {
                    let mut scratch = Vec::with_capacity(tape.len());
                    pts.iter().map(|p| tape.eval_with(p.z(), &mut scratch)).collect()
                }
                Backend::Grid(g) => pts.iter().map(|p| g.interpolate_clamped(*p)).collect(),
            }
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if points.len() > 4096 {
                let parts: Vec<Vec<Complex64>> = points.par_chunks(2048).map(chunk).collect();
                return parts.concat();
            }
        }
        chunk(points)
    }

    /// First Wirtinger derivatives `(f_z, f_zbar)`: exact for expressions,
    /// finite differences for grids.
    pub fn wirtinger(&self) -> Result<(ComplexField, ComplexField)> {
        match &self.backend {
            Backend::Expr { expr, .. } => {
                let (fz, fzb) = expr.wirtinger();
                Ok((Self::expr(fz, self.domain.clone()), Self::expr(fzb, self.domain.clone())))
            }
            Backend::Grid(g) => {
                let (fz, fzb) = g.wirtinger()?;
                Ok((Self::grid(fz, self.domain.clone()), Self::grid(fzb, self.domain.clone())))
            }
        }
    }

    /// Real partial derivatives `(f_x, f_y)` from the Wirtinger pair.
    pub fn partials(&self) -> Result<(ComplexField, ComplexField)> {
        let (fz, fzb) = self.wirtinger()?;
        let i = Complex64::new(0.0, 1.0);
        let fx = &fz + &fzb;
        let fy = (&fz - &fzb).scale(i);
        Ok((fx, fy))
    }

    /// Samples onto the `n x n` node grid of `rect`, keeping the domain.
    pub fn to_grid(&self, rect: Rect, n: usize) -> Result<ComplexField> {
        if n < 2 {
            return Err(Error::ResolutionTooSmall { got: n, min: 2 });
        }
        let probe = Grid::from_fn(rect, n, |_| Complex64::new(0.0, 0.0))?;
        let mut points = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push(probe.node(i, j));
            }
        }
        let values = self.eval_many(&points);
        Ok(Self::grid(Grid::new(rect, n, values)?, self.domain.clone()))
    }

    /// Uniform `n x n` samples on `rect`; the result lives on `rect`.
    pub fn sample_grid(&self, rect: Rect, n: usize) -> Result<ComplexField> {
        let inner = self.domain.bbox();
        let slack = self.domain.eval_tolerance();
        if rect.x0 < inner.x0 - slack || rect.x1 > inner.x1 + slack || rect.y0 < inner.y0 - slack || rect.y1 > inner.y1 + slack {
            return Err(Error::InvalidDomain("sampling rectangle exceeds the field's bounding box"));
        }
        Ok(self.to_grid(rect, n)?.with_domain(Domain::Rectangle(rect)))
    }

    /// Composition `self(map(p))`, living on the map's domain.
    ///
    /// Expression with expression stays symbolic. Otherwise the result is a
    /// grid: on the map's layout when the map is a grid, else on an `n x n`
    /// node grid over the map's bounding box with `n` taken from `self`.
    pub fn compose(&self, map: &ComplexField) -> ComplexField {
        match (&self.backend, &map.backend) {
            (Backend::Expr { expr: f, .. }, Backend::Expr { expr: m, .. }) => Self::expr(f.compose(m), map.domain.clone()),
            (_, Backend::Grid(mg)) => {
                let images: Vec<Point> = mg.values().iter().map(|w| Point::from_z(*w)).collect();
                let values = self.eval_many(&images);
                Self::grid(Grid::new(mg.rect(), mg.n(), values).expect("layout"), map.domain.clone())
            }
            (Backend::Grid(g), Backend::Expr { .. }) => {
                let mg = map.to_grid(map.domain.bbox(), g.n()).expect("layout");
                self.compose(&mg)
            }
        }
    }

    fn unary(&self, fe: impl Fn(&Expr) -> Expr, fg: impl Fn(Complex64) -> Complex64) -> ComplexField {
        match &self.backend {
            Backend::Expr { expr, .. } => Self::expr(fe(expr), self.domain.clone()),
            Backend::Grid(g) => Self::grid(g.map(fg), self.domain.clone()),
        }
    }

    pub fn conj(&self) -> ComplexField {
        self.unary(Expr::conj, |v| v.conj())
    }

    pub fn exp(&self) -> ComplexField {
        self.unary(Expr::exp, |v| v.exp())
    }

    pub fn sqrt(&self) -> ComplexField {
        self.unary(Expr::sqrt, |v| v.sqrt())
    }

    pub fn abs2(&self) -> ComplexField {
        self.unary(Expr::abs2, |v| Complex64::new(v.norm_sqr(), 0.0))
    }

    pub fn powi(&self, n: i32) -> ComplexField {
        self.unary(|e| e.powi(n), |v| v.powi(n))
    }

    pub fn re(&self) -> ComplexField {
        self.unary(Expr::re, |v| Complex64::new(v.re, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        self.unary(|e| e.mul(&Expr::constant(c)), |v| v * c)
    }

    pub fn offset(&self, c: Complex64) -> ComplexField {
        self.unary(|e| e.add(&Expr::constant(c)), |v| v + c)
    }

    fn binary(
        &self,
        rhs: &ComplexField,
        fe: impl Fn(&Expr, &Expr) -> Expr,
        fg: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> ComplexField {
        let domain = self.domain.clone();
        match (&self.backend, &rhs.backend) {
            (Backend::Expr { expr: a, .. }, Backend::Expr { expr: b, .. }) => Self::expr(fe(a, b), domain),
            (Backend::Grid(a), Backend::Grid(b)) if a.same_layout(b) => Self::grid(a.zip(b, fg), domain),
            (Backend::Grid(a), _) => {
                let b = rhs.to_grid(a.rect(), a.n()).expect("layout");
                Self::grid(a.zip(b.as_grid().expect("grid"), fg), domain)
            }
            (Backend::Expr { .. }, Backend::Grid(b)) => {
                let a = self.to_grid(b.rect(), b.n()).expect("layout");
                Self::grid(a.as_grid().expect("grid").zip(b, fg), domain)
            }
        }
    }

    /// Values at the domain's sample points (see [`Domain::sample_points`]).
    pub fn sampled(&self, n: usize) -> Vec<Complex64> {
        self.eval_many(&self.domain.sample_points(n))
    }

    /// `max |f|` over the domain's sample points.
    pub fn max_abs(&self, n: usize) -> f64 {
        self.sampled(n).iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `max |f|` over the interior sample points (default margin).
    pub fn max_abs_interior(&self, n: usize) -> f64 {
        let pts = self.domain.interior_sample_points(n);
        self.eval_many(&pts).iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Sup norm used by identity checks: all sample points for expression
    /// fields, interior ones for grid fields (whose boundary derivatives are
    /// only first order).
    pub fn max_abs_checked(&self, n: usize) -> f64 {
        if self.is_grid() {
            self.max_abs_interior(n)
        } else {
            self.max_abs(n)
        }
    }

    /// `max |Im f|` over the domain's sample points.
    pub fn max_imag(&self, n: usize) -> f64 {
        self.sampled(n).iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }
}

macro_rules! field_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl core::ops::$tr<&ComplexField> for &ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: &ComplexField) -> ComplexField {
                self.binary(rhs, |a, b| a $op b, |a, b| a $op b)
            }
        }
        impl core::ops::$tr<ComplexField> for ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: ComplexField) -> ComplexField {
                (&self).binary(&rhs, |a, b| a $op b, |a, b| a $op b)
            }
        }
        impl core::ops::$tr<&ComplexField> for ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: &ComplexField) -> ComplexField {
                (&self).binary(rhs, |a, b| a $op b, |a, b| a $op b)
            }
        }
        impl core::ops::$tr<ComplexField> for &ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: ComplexField) -> ComplexField {
                self.binary(&rhs, |a, b| a $op b, |a, b| a $op b)
            }
        }
        impl core::ops::$tr<f64> for &ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: f64) -> ComplexField {
                self.unary(|a| a $op rhs, |a| a $op rhs)
            }
        }
        impl core::ops::$tr<f64> for ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: f64) -> ComplexField {
                (&self).unary(|a| a $op rhs, |a| a $op rhs)
            }
        }
        impl core::ops::$tr<Complex64> for &ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: Complex64) -> ComplexField {
                self.unary(|a| a $op rhs, |a| a $op rhs)
            }
        }
        impl core::ops::$tr<Complex64> for ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: Complex64) -> ComplexField {
                (&self).unary(|a| a $op rhs, |a| a $op rhs)
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);
field_binop!(Mul, mul, *);
field_binop!(Div, div, /);

impl core::ops::Neg for &ComplexField {
    type Output = ComplexField;
    fn neg(self) -> ComplexField {
        self.unary(|a| -a, |a| -a)
    }
}

impl core::ops::Neg for ComplexField {
    type Output = ComplexField;
    fn neg(self) -> ComplexField {
        -&self
    }
}

/// `max |a - b|` over the sample points of `a`'s domain.
pub fn max_abs_diff(a: &ComplexField, b: &ComplexField, n: usize) -> f64 {
    let pts = a.domain().sample_points(n);
    let va = a.eval_many(&pts);
    let vb = b.eval_many(&pts);
    va.iter().zip(vb.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}
