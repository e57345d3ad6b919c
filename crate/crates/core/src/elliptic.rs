//! The real first-order system
//!
//! ```text
//! -v_y + a11 u_x + a12 u_y + a13 u + a14 v = f1
//!  v_x + a21 u_x + a22 u_y + a23 u + a24 v = f2
//! ```
//!
//! with real coefficients, its ellipticity check, and manufactured forcings.

use crate::error::{Error, Result};
use crate::field::{ComplexField, Domain};
use crate::{CHECK_RESOLUTION, EPS_ELLIPTIC};

/// Tolerance on `|Im|` for fields that must be real.
pub const REALITY_TOL: f64 = 1e-12;

/// The eight coefficients; `a11, a12, a21, a22` form the principal part.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a11: ComplexField,
    pub a12: ComplexField,
    pub a21: ComplexField,
    pub a22: ComplexField,
    pub a13: ComplexField,
    pub a14: ComplexField,
    pub a23: ComplexField,
    pub a24: ComplexField,
}

impl Coefficients {
    /// Principal part only; lower-order coefficients are zero.
    pub fn principal(a11: ComplexField, a12: ComplexField, a21: ComplexField, a22: ComplexField) -> Self {
        let zero = ComplexField::zero(a11.domain().clone());
        Self { a11, a12, a21, a22, a13: zero.clone(), a14: zero.clone(), a23: zero.clone(), a24: zero }
    }

    /// Constant principal part on `domain`, zero lower order.
    pub fn constant(a11: f64, a12: f64, a21: f64, a22: f64, domain: &Domain) -> Self {
        let c = |v| ComplexField::real(v, domain.clone());
        Self::principal(c(a11), c(a12), c(a21), c(a22))
    }

    /// The Cauchy–Riemann system `u_x - v_y = 0, v_x + u_y = 0`.
    pub fn cauchy_riemann(domain: &Domain) -> Self {
        Self::constant(1.0, 0.0, 0.0, 1.0, domain)
    }

    pub fn with_lower(mut self, a13: ComplexField, a14: ComplexField, a23: ComplexField, a24: ComplexField) -> Self {
        self.a13 = a13;
        self.a14 = a14;
        self.a23 = a23;
        self.a24 = a24;
        self
    }

    /// `(name, field)` pairs in a fixed order.
    pub fn named(&self) -> [(&'static str, &ComplexField); 8] {
        [
            ("a11", &self.a11),
            ("a12", &self.a12),
            ("a13", &self.a13),
            ("a14", &self.a14),
            ("a21", &self.a21),
            ("a22", &self.a22),
            ("a23", &self.a23),
            ("a24", &self.a24),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RealEllipticSystem {
    pub coeffs: Coefficients,
    pub f1: ComplexField,
    pub f2: ComplexField,
    domain: Domain,
}

impl RealEllipticSystem {
    /// Builds the system after checking that every coefficient and forcing
    /// is real at the sample points of `domain`.
    pub fn new(coeffs: Coefficients, f1: ComplexField, f2: ComplexField, domain: Domain) -> Result<Self> {
        let pts = domain.sample_points(CHECK_RESOLUTION);
        let check = |name: &'static str, f: &ComplexField| -> Result<()> {
            let max_imag = f.eval_many(&pts).iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
            if max_imag > REALITY_TOL || max_imag.is_nan() {
                return Err(Error::NotReal { name, max_imag });
            }
            Ok(())
        };
        for (name, f) in coeffs.named() {
            check(name, f)?;
        }
        check("f1", &f1)?;
        check("f2", &f2)?;
        Ok(Self { coeffs, f1, f2, domain })
    }

    /// Homogeneous system (zero forcings).
    pub fn homogeneous(coeffs: Coefficients, domain: Domain) -> Result<Self> {
        let zero = ComplexField::zero(domain.clone());
        Self::new(coeffs, zero.clone(), zero, domain)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Every coefficient and forcing sampled on the `n x n` node grid of the
    /// domain's bounding box.
    pub fn on_grid(&self, n: usize) -> Result<Self> {
        let rect = self.domain.bbox();
        let g = |f: &ComplexField| f.to_grid(rect, n);
        let c = &self.coeffs;
        let coeffs = Coefficients {
            a11: g(&c.a11)?,
            a12: g(&c.a12)?,
            a21: g(&c.a21)?,
            a22: g(&c.a22)?,
            a13: g(&c.a13)?,
            a14: g(&c.a14)?,
            a23: g(&c.a23)?,
            a24: g(&c.a24)?,
        };
        Self::new(coeffs, g(&self.f1)?, g(&self.f2)?, self.domain.clone())
    }

    /// Left-hand sides minus forcings for a candidate pair `(u, v)`.
    pub fn residual(&self, u: &ComplexField, v: &ComplexField) -> Result<(ComplexField, ComplexField)> {
        let (f1, f2) = manufacture_forcing(&self.coeffs, u, v)?;
        Ok((f1 - &self.f1, f2 - &self.f2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityReport {
    pub min_a11: f64,
    pub min_discriminant: f64,
    pub pass: bool,
}

/// Minima of `a11` and `a11 a22 - (a12 + a21)^2 / 4` over the `n x n` sample.
pub fn validate_ellipticity(sys: &RealEllipticSystem, n: usize) -> Result<EllipticityReport> {
    if n < 4 {
        return Err(Error::ResolutionTooSmall { got: n, min: 4 });
    }
    let c = &sys.coeffs;
    let pts = sys.domain.sample_points(n);
    let a11 = c.a11.eval_many(&pts);
    let a22 = c.a22.eval_many(&pts);
    let a12 = c.a12.eval_many(&pts);
    let a21 = c.a21.eval_many(&pts);
    let mut min_a11 = f64::INFINITY;
    let mut min_disc = f64::INFINITY;
    for k in 0..pts.len() {
        let s = a12[k].re + a21[k].re;
        min_a11 = min_a11.min(a11[k].re);
        min_disc = min_disc.min(a11[k].re * a22[k].re - 0.25 * s * s);
    }
    let pass = min_a11 > EPS_ELLIPTIC && min_disc > EPS_ELLIPTIC;
    Ok(EllipticityReport { min_a11, min_discriminant: min_disc, pass })
}

/// Forcings for which `(u, v)` solves the system exactly.
pub fn manufacture_forcing(c: &Coefficients, u: &ComplexField, v: &ComplexField) -> Result<(ComplexField, ComplexField)> {
    let (ux, uy) = u.partials()?;
    let (vx, vy) = v.partials()?;
    let f1 = -&vy + &c.a11 * &ux + &c.a12 * &uy + &c.a13 * u + &c.a14 * v;
    let f2 = vx + &c.a21 * &ux + &c.a22 * &uy + &c.a23 * u + &c.a24 * v;
    Ok((f1, f2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Expr, Point};
    use num_complex::Complex64;

    fn square() -> Domain {
        Domain::unit_square()
    }

    fn field(e: Expr) -> ComplexField {
        ComplexField::expr(e, square())
    }

    fn sup(f: &ComplexField) -> f64 {
        f.max_abs(16)
    }

    #[test]
    fn cauchy_riemann_is_elliptic() {
        let sys = RealEllipticSystem::homogeneous(Coefficients::cauchy_riemann(&square()), square()).unwrap();
        let r = validate_ellipticity(&sys, 16).unwrap();
        assert_eq!((r.min_a11, r.min_discriminant, r.pass), (1.0, 1.0, true));
    }

    #[test]
    fn anisotropic_discriminant() {
        let sys = RealEllipticSystem::homogeneous(Coefficients::constant(1.0, 0.0, 0.0, 4.0, &square()), square()).unwrap();
        let r = validate_ellipticity(&sys, 8).unwrap();
        assert_eq!(r.min_discriminant, 4.0);
        assert!(r.pass);
    }

    #[test]
    fn degenerate_discriminant_fails() {
        let sys = RealEllipticSystem::homogeneous(Coefficients::constant(1.0, 1.0, 1.0, 1.0, &square()), square()).unwrap();
        let r = validate_ellipticity(&sys, 8).unwrap();
        assert_eq!(r.min_discriminant, 0.0);
        assert!(!r.pass);
    }

    #[test]
    fn complex_coefficient_rejected() {
        let mut c = Coefficients::cauchy_riemann(&square());
        c.a13 = field(Expr::z());
        let err = RealEllipticSystem::homogeneous(c, square()).unwrap_err();
        assert!(matches!(err, Error::NotReal { name: "a13", .. }));
    }

    #[test]
    fn harmonic_pair_needs_no_forcing() {
        let c = Coefficients::cauchy_riemann(&square());
        let u = field(Expr::x().powi(2) - Expr::y().powi(2));
        let v = field(Expr::x() * Expr::y() * 2.0);
        let (f1, f2) = manufacture_forcing(&c, &u, &v).unwrap();
        assert!(sup(&f1) < 1e-15 && sup(&f2) < 1e-15);
    }

    #[test]
    fn linear_substitutions() {
        let c = Coefficients::cauchy_riemann(&square());
        let (f1, f2) = manufacture_forcing(&c, &field(Expr::x()), &ComplexField::zero(square())).unwrap();
        let p = Point::new(0.3, 0.6);
        assert_eq!(f1.eval(p).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(f2.eval(p).unwrap(), Complex64::new(0.0, 0.0));

        let c = Coefficients::constant(1.0, 0.0, 0.0, 4.0, &square());
        let (f1, f2) = manufacture_forcing(&c, &field(Expr::y()), &field(Expr::x())).unwrap();
        assert_eq!(f1.eval(p).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(f2.eval(p).unwrap(), Complex64::new(5.0, 0.0));
    }

    #[test]
    fn manufactured_closure() {
        let c = Coefficients::principal(
            field(Expr::real(2.0) + Expr::x()),
            field(Expr::y() * 0.3),
            field(Expr::real(0.1)),
            field(Expr::real(1.0) + Expr::x() * Expr::y()),
        )
        .with_lower(field(Expr::x()), field(Expr::real(-1.0)), field(Expr::y().powi(2)), field(Expr::real(0.5)));
        let u = field((Expr::x() * 0.7).exp() * Expr::y());
        let v = field(Expr::x().powi(3) - Expr::y());
        let (f1, f2) = manufacture_forcing(&c, &u, &v).unwrap();
        let sys = RealEllipticSystem::new(c, f1, f2, square()).unwrap();
        let (r1, r2) = sys.residual(&u, &v).unwrap();
        assert!(sup(&r1) <= 1e-12 && sup(&r2) <= 1e-12);
    }
}
