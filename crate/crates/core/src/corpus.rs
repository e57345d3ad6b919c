//! Test corpora: manufactured systems, random BV data, gauges and affine maps.
//!
//! Random draws come from [`CorpusRng`] in a fixed order, so a seed pins the
//! whole corpus.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::elliptic::{manufacture_forcing, Coefficients, RealEllipticSystem};
use crate::error::Result;
use crate::field::{ComplexField, Domain, Expr, Rect};
use crate::pipeline::BVData;
use crate::rng::CorpusRng;
use crate::symmetry::{Diffeomorphism, Gauge};

/// A system with an exact solution `(u, v)`; the forcing is manufactured.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub system: RealEllipticSystem,
    pub u: ComplexField,
    pub v: ComplexField,
}

impl ManufacturedCase {
    fn build(name: &'static str, coeffs: Coefficients, u: Expr, v: Expr, domain: &Domain) -> Result<Self> {
        let u = ComplexField::expr(u, domain.clone());
        let v = ComplexField::expr(v, domain.clone());
        let (f1, f2) = manufacture_forcing(&coeffs, &u, &v)?;
        let system = RealEllipticSystem::new(coeffs, f1, f2, domain.clone())?;
        Ok(Self { name, system, u, v })
    }

    /// The same case with every coefficient, forcing and solution sampled on
    /// the `n x n` node grid of the domain's bounding box.
    pub fn on_grid(&self, n: usize) -> Result<Self> {
        let rect = self.system.domain().bbox();
        let g = |f: &ComplexField| f.to_grid(rect, n);
        let system = self.system.on_grid(n)?;
        Ok(Self { name: self.name, system, u: g(&self.u)?, v: g(&self.v)? })
    }
}

/// The square `[-1/2, 1/2]^2` used by the manufactured corpus.
pub fn manufactured_domain() -> Domain {
    Domain::Rectangle(Rect { x0: -0.5, x1: 0.5, y0: -0.5, y1: 0.5 })
}

/// Five systems: Cauchy–Riemann, constant anisotropic, variable `alpha`
/// (nonzero obstruction), variable `beta`, and variable lower-order terms.
pub fn manufactured_systems() -> Result<Vec<ManufacturedCase>> {
    let d = manufactured_domain();
    let f = |e: Expr| ComplexField::expr(e, d.clone());
    let (x, y) = (Expr::x(), Expr::y());
    let real = Expr::real;
    Ok(vec![
        ManufacturedCase::build(
            "cauchy-riemann",
            Coefficients::cauchy_riemann(&d),
            x.powi(2) - y.powi(2) + x.clone(),
            (x.clone() * y.clone()) * 2.0 + (y.clone() * 0.5).exp(),
            &d,
        )?,
        ManufacturedCase::build(
            "anisotropic",
            Coefficients::constant(2.0, 0.5, -0.3, 1.5, &d).with_lower(f(real(0.2)), f(real(-0.1)), f(real(0.3)), f(real(0.4))),
            (x.clone() + y.clone() * 0.5).exp(),
            x.clone() * y.powi(2) - y.clone(),
            &d,
        )?,
        ManufacturedCase::build(
            "variable-alpha",
            Coefficients::principal(
                f(real(1.5) + x.clone() * 0.5),
                f(y.clone() * 0.3),
                f((x.clone() * y.clone()).exp() * 0.1),
                f(real(1.0) + y.powi(2)),
            )
            .with_lower(f(x.clone()), f(real(-0.4)), f(y.clone() * x.clone()), f(real(0.5))),
            (x.clone() * 0.7).exp() * y.clone(),
            x.powi(3) - y.clone() * x.clone(),
            &d,
        )?,
        ManufacturedCase::build(
            "variable-beta",
            Coefficients::principal(
                f(real(1.0)),
                f(x.clone() * y.clone() * 0.3),
                f(x.clone() * 0.2),
                f(real(1.2) + x.clone() * 0.2),
            ),
            x.clone() * y.clone() + y.powi(3),
            (x.clone() - y.clone()).exp(),
            &d,
        )?,
        ManufacturedCase::build(
            "lower-order",
            Coefficients::constant(1.0, 0.0, 0.0, 1.0, &d).with_lower(
                f(x.clone()),
                f(y.powi(2)),
                f(x.clone().exp() * 0.2),
                f(real(-0.5)),
            ),
            (x.clone() * y.clone()).exp(),
            x.powi(2) + y.clone(),
            &d,
        )?,
    ])
}

/// Smooth expression fields for derivative and quadrature checks.
pub fn smooth_fields() -> Vec<(&'static str, Expr)> {
    let z = Expr::z();
    vec![
        ("z2zbar", z.powi(2) * z.conj()),
        ("exp", (z.clone() * 0.5 + z.conj() * Complex64::new(0.0, 0.3)).exp()),
        ("gaussian", (-z.abs2()).exp()),
        ("rational", (z.abs2() + 1.0).powi(-1) * z.clone()),
        ("sqrt", (z.abs2() + 2.0).sqrt()),
    ]
}

/// Expression BV data on `domain` with `sup |mu| <= 0.6` over a domain of
/// radius at most `radius` around the origin.
pub fn random_bv(rng: &mut CorpusRng, domain: &Domain, radius: f64) -> Result<BVData> {
    let z = Expr::z();
    let zb = Expr::zbar();
    let m0 = rng.disk(0.3);
    let m1 = rng.disk(0.3 / radius.max(1.0));
    let mu = z.clone() * m1 + Expr::constant(m0);
    let a = zb.clone() * rng.disk(1.0) + Expr::constant(rng.disk(1.0));
    let b = z.clone() * zb.clone() * rng.disk(1.0) + z.clone() * rng.disk(1.0) + Expr::constant(rng.disk(1.0));
    let f = (z * rng.disk(0.5)).exp() * rng.annulus(0.5, 1.5);
    let field = |e: Expr| ComplexField::expr(e, domain.clone());
    BVData::new(field(mu), field(a), field(b), field(f), domain.clone())
}

/// Constant data `(mu0, 0, B0, 0)` with `|mu0| <= max_mu`.
pub fn random_constant_bv(rng: &mut CorpusRng, domain: &Domain, max_mu: f64) -> Result<(Complex64, Complex64, BVData)> {
    let mu0 = rng.disk(max_mu);
    let b0 = rng.disk(2.0);
    let zero = Complex64::new(0.0, 0.0);
    Ok((mu0, b0, BVData::constant(mu0, zero, b0, zero, domain.clone())?))
}

/// `phi = exp(p)` with `p` a random low-degree polynomial in `z, conj(z)`.
pub fn random_gauge(rng: &mut CorpusRng, domain: &Domain) -> Result<Gauge> {
    let z = Expr::z();
    let zb = Expr::zbar();
    let p = Expr::constant(rng.disk(1.0)) + z.clone() * rng.disk(0.5) + zb.clone() * rng.disk(0.5) + z * zb * rng.disk(0.3);
    Gauge::new(ComplexField::expr(p.exp(), domain.clone()))
}

/// Affine `z -> a z + b conj(z) + c` with `|a - 1|, |b| <= 0.3`, on `source`.
pub fn random_affine(rng: &mut CorpusRng, source: &Domain) -> Result<Diffeomorphism> {
    let a = Complex64::new(1.0, 0.0) + rng.disk(0.3);
    let b = rng.disk(0.3);
    let c = rng.disk(0.2);
    Diffeomorphism::affine(a, b, c, source.clone())
}
