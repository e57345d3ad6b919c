//! Gauge action `w -> phi w` and diffeomorphism pullback on BV data.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Domain, Expr, Point, Rect};
use crate::pipeline::BVData;
use crate::{CHECK_RESOLUTION, EPS_GAUGE};

/// Guard on `|K|` in the pullback; the theory keeps it away from zero.
pub const K_GUARD: f64 = 1e-14;
/// Tolerance for `Phi(Psi(w)) = w` on attached inverses.
pub const INVERSE_TOL: f64 = 1e-10;

/// A nowhere-vanishing multiplier with its Wirtinger derivatives.
#[derive(Debug, Clone)]
pub struct Gauge {
    pub phi: ComplexField,
    pub phi_z: ComplexField,
    pub phi_zbar: ComplexField,
}

impl Gauge {
    /// Derivatives are taken from the field itself.
    pub fn new(phi: ComplexField) -> Result<Self> {
        let (phi_z, phi_zbar) = phi.wirtinger()?;
        Self::with_derivatives(phi, phi_z, phi_zbar)
    }

    pub fn with_derivatives(phi: ComplexField, phi_z: ComplexField, phi_zbar: ComplexField) -> Result<Self> {
        let g = Self { phi, phi_z, phi_zbar };
        g.check_modulus(g.phi.domain())?;
        Ok(g)
    }

    pub fn constant(c: Complex64, domain: Domain) -> Result<Self> {
        Self::new(ComplexField::constant(c, domain))
    }

    pub fn identity(domain: Domain) -> Self {
        let one = ComplexField::real(1.0, domain.clone());
        let zero = ComplexField::zero(domain);
        Self { phi: one, phi_z: zero.clone(), phi_zbar: zero }
    }

    /// `min |phi|` over the sample points of `domain`.
    pub fn min_modulus(&self, domain: &Domain) -> f64 {
        let pts = domain.sample_points(CHECK_RESOLUTION);
        self.phi.eval_many(&pts).iter().fold(f64::INFINITY, |m, v| m.min(v.norm()))
    }

    fn check_modulus(&self, domain: &Domain) -> Result<()> {
        let min_modulus = self.min_modulus(domain);
        if !(min_modulus >= EPS_GAUGE) {
            return Err(Error::GaugeVanishes { min_modulus });
        }
        Ok(())
    }

    /// The product gauge `self * first`, i.e. apply `first`, then `self`.
    pub fn after(&self, first: &Gauge) -> Gauge {
        Gauge {
            phi: &self.phi * &first.phi,
            phi_z: &self.phi_z * &first.phi + &self.phi * &first.phi_z,
            phi_zbar: &self.phi_zbar * &first.phi + &self.phi * &first.phi_zbar,
        }
    }
}

/// `mu' = mu`, `A' = A - phi_zbar/phi + mu phi_z/phi`, `B' = B phi/conj(phi)`,
/// `F' = phi F`.
pub fn apply_gauge(bv: &BVData, g: &Gauge) -> Result<BVData> {
    g.check_modulus(bv.domain())?;
    let a = &bv.a - &g.phi_zbar / &g.phi + &bv.mu * &g.phi_z / &g.phi;
    let b = &bv.b * &g.phi / g.phi.conj();
    let f = &g.phi * &bv.f;
    Ok(BVData::new_unchecked(bv.mu.clone(), a, b, f, bv.domain().clone()))
}

/// A map with explicit derivatives.
#[derive(Debug, Clone)]
pub struct MapData {
    pub map: ComplexField,
    pub map_z: ComplexField,
    pub map_zbar: ComplexField,
}

impl MapData {
    pub fn new(map: ComplexField) -> Result<Self> {
        let (map_z, map_zbar) = map.wirtinger()?;
        Ok(Self { map, map_z, map_zbar })
    }

    pub fn jacobian(&self) -> ComplexField {
        self.map_z.abs2() - self.map_zbar.abs2()
    }

    /// `self o inner` by the chain rule.
    fn after(&self, inner: &MapData) -> MapData {
        let fz = self.map_z.compose(&inner.map);
        let fzb = self.map_zbar.compose(&inner.map);
        MapData {
            map: self.map.compose(&inner.map),
            map_z: &fz * &inner.map_z + &fzb * inner.map_zbar.conj(),
            map_zbar: &fz * &inner.map_zbar + &fzb * inner.map_z.conj(),
        }
    }

    fn on(&self, domain: &Domain) -> MapData {
        MapData {
            map: self.map.with_domain(domain.clone()),
            map_z: self.map_z.with_domain(domain.clone()),
            map_zbar: self.map_zbar.with_domain(domain.clone()),
        }
    }
}

/// An orientation-preserving diffeomorphism `source -> target`.
#[derive(Debug, Clone)]
pub struct Diffeomorphism {
    pub forward: MapData,
    pub inverse: Option<MapData>,
    pub source: Domain,
    pub target: Domain,
    /// Sampled `max |Phi(Psi(w)) - w|` when an inverse is attached.
    pub inverse_error: Option<f64>,
}

impl Diffeomorphism {
    /// Validates `J > 0` on `source` and, when given, `Phi(Psi(w)) = w` on
    /// `target` to [`INVERSE_TOL`].
    pub fn new(forward: MapData, inverse: Option<MapData>, source: Domain, target: Domain) -> Result<Self> {
        let d = Self::with_inverse_tolerance(forward, inverse, source, target, INVERSE_TOL)?;
        Ok(d)
    }

    /// As [`new`](Self::new) with a caller-chosen inverse tolerance, for maps
    /// known only to discretization accuracy.
    pub fn with_inverse_tolerance(
        forward: MapData,
        inverse: Option<MapData>,
        source: Domain,
        target: Domain,
        tol: f64,
    ) -> Result<Self> {
        let forward = forward.on(&source);
        let inverse = inverse.map(|m| m.on(&target));
        let min_jacobian = forward.jacobian().sampled(CHECK_RESOLUTION).iter().fold(f64::INFINITY, |m, v| m.min(v.re));
        if !(min_jacobian > 0.0) {
            return Err(Error::JacobianNonpositive { min_jacobian });
        }
        let inverse_error = match &inverse {
            Some(inv) => {
                let pts = target.interior_sample_points(CHECK_RESOLUTION);
                let pts = if pts.is_empty() { target.sample_points(CHECK_RESOLUTION) } else { pts };
                let back: alloc::vec::Vec<Point> = inv.map.eval_many(&pts).into_iter().map(Point::from_z).collect();
                let there = forward.map.eval_many(&back);
                let err = pts.iter().zip(there).fold(0.0f64, |m, (p, w)| m.max((w - p.z()).norm()));
                if !(err <= tol) {
                    return Err(Error::InverseMismatch { max_error: err });
                }
                Some(err)
            }
            None => None,
        };
        Ok(Self { forward, inverse, source, target, inverse_error })
    }

    pub fn identity(domain: Domain) -> Self {
        let id = MapData {
            map: ComplexField::expr(Expr::z(), domain.clone()),
            map_z: ComplexField::real(1.0, domain.clone()),
            map_zbar: ComplexField::zero(domain.clone()),
        };
        Self { forward: id.clone(), inverse: Some(id), source: domain.clone(), target: domain, inverse_error: Some(0.0) }
    }

    /// `z -> a z + b conj(z) + c` restricted to `source`; the target is the
    /// exact image domain.
    pub fn affine(a: Complex64, b: Complex64, c: Complex64, source: Domain) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) {
            return Err(Error::JacobianNonpositive { min_jacobian: det });
        }
        let fwd = affine_expr(a, b, c);
        // z = (conj(a)(w - c) - b conj(w - c)) / (|a|^2 - |b|^2)
        let ia = a.conj() / det;
        let ib = -b / det;
        let ic = -(ia * c + ib * c.conj());
        let inv = affine_expr(ia, ib, ic);
        let bbox = affine_image_bbox(a, b, c, &source);
        let target = Domain::image(
            source.clone(),
            ComplexField::expr(fwd.clone(), source.clone()),
            ComplexField::expr(inv.clone(), source.clone()),
            bbox,
        )?;
        let forward = MapData {
            map: ComplexField::expr(fwd, source.clone()),
            map_z: ComplexField::constant(a, source.clone()),
            map_zbar: ComplexField::constant(b, source.clone()),
        };
        let inverse = MapData {
            map: ComplexField::expr(inv, target.clone()),
            map_z: ComplexField::constant(ia, target.clone()),
            map_zbar: ComplexField::constant(ib, target.clone()),
        };
        Self::new(forward, Some(inverse), source, target)
    }

    /// The affine map `w -> ...` whose restriction to `target` inverts onto
    /// a preimage domain: returns `Phi: Phi^{-1}(target) -> target`.
    pub fn affine_onto(a: Complex64, b: Complex64, c: Complex64, target: Domain) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) {
            return Err(Error::JacobianNonpositive { min_jacobian: det });
        }
        let ia = a.conj() / det;
        let ib = -b / det;
        let ic = -(ia * c + ib * c.conj());
        Self::affine(ia, ib, ic, target)?.inverted()
    }

    /// Swaps the roles of map and inverse.
    pub fn inverted(&self) -> Result<Self> {
        let inv = self.inverse.clone().ok_or(Error::MissingInverse)?;
        Self::new(inv, Some(self.forward.clone()), self.target.clone(), self.source.clone())
    }

    pub fn jacobian(&self) -> ComplexField {
        self.forward.jacobian()
    }

    /// `self o inner`: first `inner`, then `self`.
    pub fn after(&self, inner: &Diffeomorphism) -> Result<Self> {
        let forward = self.forward.after(&inner.forward).on(&inner.source);
        let inverse = match (&inner.inverse, &self.inverse) {
            (Some(i1), Some(i2)) => Some(i1.after(i2).on(&self.target)),
            _ => None,
        };
        Self::new(forward, inverse, inner.source.clone(), self.target.clone())
    }
}

fn affine_expr(a: Complex64, b: Complex64, c: Complex64) -> Expr {
    Expr::z() * a + Expr::zbar() * b + Expr::constant(c)
}

fn affine_image_bbox(a: Complex64, b: Complex64, c: Complex64, source: &Domain) -> Option<Rect> {
    let map = |z: Complex64| a * z + b * z.conj() + c;
    match source {
        Domain::Disk { center, radius } => {
            let w = map(center.z());
            let hx = radius * (a + b.conj()).norm();
            let hy = radius * (a - b.conj()).norm();
            Rect::new(w.re - hx, w.re + hx, w.im - hy, w.im + hy).ok()
        }
        Domain::Rectangle(r) => {
            let corners = [(r.x0, r.y0), (r.x1, r.y0), (r.x0, r.y1), (r.x1, r.y1)].map(|(x, y)| map(Complex64::new(x, y)));
            let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for w in corners {
                x0 = x0.min(w.re);
                x1 = x1.max(w.re);
                y0 = y0.min(w.im);
                y1 = y1.max(w.im);
            }
            Rect::new(x0, x1, y0, y1).ok()
        }
        Domain::Image(_) => None,
    }
}

/// Pointwise ingredients of a pullback.
#[derive(Debug, Clone)]
pub struct PullbackParts {
    /// `mu o Phi`.
    pub mu_phi: ComplexField,
    /// `K = Phi_z + (mu o Phi) conj(Phi_zbar)`.
    pub k: ComplexField,
    pub jacobian: ComplexField,
    /// `Phi_zbar + (mu o Phi) conj(Phi_z)`.
    pub numerator: ComplexField,
}

pub fn pullback_parts(bv: &BVData, d: &Diffeomorphism) -> Result<PullbackParts> {
    let m = &d.forward;
    let jacobian = m.jacobian();
    let min_jacobian = jacobian.sampled(CHECK_RESOLUTION).iter().fold(f64::INFINITY, |a, v| a.min(v.re));
    if !(min_jacobian > 0.0) {
        return Err(Error::JacobianNonpositive { min_jacobian });
    }
    check_image_inside(bv, d)?;
    let mu_phi = bv.mu.compose(&m.map);
    let k = &m.map_z + &mu_phi * m.map_zbar.conj();
    let numerator = &m.map_zbar + &mu_phi * m.map_z.conj();
    let min_k = k.sampled(CHECK_RESOLUTION).iter().fold(f64::INFINITY, |a, v| a.min(v.norm()));
    if !(min_k >= K_GUARD) {
        return Err(Error::KVanishes { min_k });
    }
    Ok(PullbackParts { mu_phi, k, jacobian, numerator })
}

fn check_image_inside(bv: &BVData, d: &Diffeomorphism) -> Result<()> {
    let dom = bv.domain();
    let tol = 1e-6 * dom.bbox().width().max(dom.bbox().height());
    let images = d.forward.map.sampled(CHECK_RESOLUTION / 2);
    if images.iter().all(|w| dom.contains_tol(Point::from_z(*w), tol)) {
        Ok(())
    } else {
        Err(Error::InvalidDomain("map image leaves the domain of the data"))
    }
}

/// Pullback of `bv` (on the target) to the source of `d`.
pub fn pullback(bv: &BVData, d: &Diffeomorphism) -> Result<BVData> {
    let p = pullback_parts(bv, d)?;
    let m = &d.forward.map;
    let scale = &p.jacobian / &p.k;
    let mu = &p.numerator / &p.k;
    let a = &scale * bv.a.compose(m);
    let b = &scale * bv.b.compose(m);
    let f = &scale * bv.f.compose(m);
    BVData::new(mu, a, b, f, d.source.clone())
}

/// `(1 - |mu*|^2) - (1 - |mu o Phi|^2) J / |K|^2`.
pub fn conformal_residual(bv: &BVData, d: &Diffeomorphism) -> Result<ComplexField> {
    let p = pullback_parts(bv, d)?;
    let mu_star = &p.numerator / &p.k;
    Ok(-mu_star.abs2() + 1.0 - (-p.mu_phi.abs2() + 1.0) * &p.jacobian / p.k.abs2())
}

/// `|K|^2 - |Phi_zbar + (mu o Phi) conj(Phi_z)|^2 - (1 - |mu o Phi|^2) J`.
pub fn closure_residual(bv: &BVData, d: &Diffeomorphism) -> Result<ComplexField> {
    let p = pullback_parts(bv, d)?;
    Ok(p.k.abs2() - p.numerator.abs2() - (-p.mu_phi.abs2() + 1.0) * &p.jacobian)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::max_abs_diff;
    use crate::rng::CorpusRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk() -> Domain {
        Domain::unit_disk()
    }

    fn sample_bv(domain: Domain) -> BVData {
        let e = |x: Expr| ComplexField::expr(x, domain.clone());
        BVData::new(
            e(Expr::z() * 0.2 + Expr::constant(c(0.1, -0.05))),
            e(Expr::zbar() * Expr::z() + Expr::real(0.3)),
            e(Expr::z().exp() * c(0.5, 0.2)),
            e(Expr::x() - Expr::zbar().powi(2)),
            domain,
        )
        .unwrap()
    }

    fn at(f: &ComplexField, x: f64, y: f64) -> Complex64 {
        f.eval(Point::new(x, y)).unwrap()
    }

    #[test]
    fn constant_real_gauge_scales_forcing() {
        let bv = sample_bv(disk());
        let out = apply_gauge(&bv, &Gauge::constant(c(2.5, 0.0), disk()).unwrap()).unwrap();
        assert!(max_abs_diff(&out.a, &bv.a, 16) < 1e-15);
        assert!(max_abs_diff(&out.b, &bv.b, 16) < 1e-15);
        assert!(max_abs_diff(&out.f, &(&bv.f * 2.5), 16) < 1e-15);
    }

    #[test]
    fn constant_phase_gauge() {
        let th: f64 = 0.7;
        let bv = sample_bv(disk());
        let out = apply_gauge(&bv, &Gauge::constant(Complex64::from_polar(1.0, th), disk()).unwrap()).unwrap();
        assert!(max_abs_diff(&out.b, &(&bv.b * Complex64::from_polar(1.0, 2.0 * th)), 16) < 1e-15);
        assert!(max_abs_diff(&out.a, &bv.a, 16) < 1e-15);
        assert!(max_abs_diff(&out.f, &(&bv.f * Complex64::from_polar(1.0, th)), 16) < 1e-15);
    }

    #[test]
    fn exponential_gauge_with_zero_mu() {
        let d = disk();
        let e = |x: Expr| ComplexField::expr(x, d.clone());
        let bv = BVData::new(ComplexField::zero(d.clone()), e(Expr::x()), e(Expr::real(0.5) + Expr::z()), e(Expr::y()), d.clone()).unwrap();
        let out = apply_gauge(&bv, &Gauge::new(e(Expr::z().exp())).unwrap()).unwrap();
        assert!(max_abs_diff(&out.a, &bv.a, 16) < 1e-15);
        let rot = e((Expr::z() - Expr::zbar()).exp());
        assert!(max_abs_diff(&out.b, &(&bv.b * &rot), 16) < 1e-14);
    }

    #[test]
    fn vanishing_gauge_rejected() {
        // vanishes along a column of sample points
        let err = Gauge::new(ComplexField::expr(Expr::x() - Expr::real(1.0 / 48.0), disk())).unwrap_err();
        assert!(matches!(err, Error::GaugeVanishes { .. }));
    }

    #[test]
    fn shear_pullback_of_flat_data() {
        let cc = c(0.3, 0.2);
        let d = Diffeomorphism::affine(c(1.0, 0.0), cc, c(0.0, 0.0), disk()).unwrap();
        let e = |x: Expr| ComplexField::expr(x, d.target.clone());
        let bv = BVData::new(ComplexField::zero(d.target.clone()), ComplexField::zero(d.target.clone()), e(Expr::z() + Expr::real(2.0)), ComplexField::zero(d.target.clone()), d.target.clone()).unwrap();
        let p = pullback_parts(&bv, &d).unwrap();
        assert!(max_abs_diff(&p.k, &ComplexField::real(1.0, disk()), 16) < 1e-15);
        let out = pullback(&bv, &d).unwrap();
        assert!(max_abs_diff(&out.mu, &ComplexField::constant(cc, disk()), 16) < 1e-15);
        let expect = bv.b.compose(&d.forward.map) * (1.0 - cc.norm_sqr());
        assert!(max_abs_diff(&out.b, &expect, 16) < 1e-14);
        assert!(conformal_residual(&bv, &d).unwrap().max_abs(16) < 1e-15);
    }

    #[test]
    fn identity_pullback_is_trivial() {
        let bv = sample_bv(disk());
        let out = pullback(&bv, &Diffeomorphism::identity(disk())).unwrap();
        for ((_, x), (_, y)) in out.fields().iter().zip(bv.fields().iter()) {
            assert!(max_abs_diff(x, y, 16) < 1e-15);
        }
        assert!(conformal_residual(&bv, &Diffeomorphism::identity(disk())).unwrap().max_abs(16) < 1e-15);
    }

    #[test]
    fn biholomorphic_pullback() {
        // Phi = exp(z) on the unit disk, inverse not needed for the pullback
        let src = disk();
        let map = MapData::new(ComplexField::expr(Expr::z().exp(), src.clone())).unwrap();
        let target = Domain::rectangle(-3.0, 3.0, -3.0, 3.0).unwrap();
        let d = Diffeomorphism::new(map, None, src.clone(), target.clone()).unwrap();
        let e = |x: Expr| ComplexField::expr(x, target.clone());
        let bv = BVData::new(ComplexField::zero(target.clone()), e(Expr::x()), e(Expr::z() * Expr::zbar()), e(Expr::real(1.0)), target.clone()).unwrap();
        let out = pullback(&bv, &d).unwrap();
        assert!(out.mu.max_abs(16) < 1e-15);
        let expect = d.forward.map_z.conj() * bv.b.compose(&d.forward.map);
        assert!(max_abs_diff(&out.b, &expect, 16) < 1e-14);
    }

    #[test]
    fn affine_inverse_and_bbox() {
        let d = Diffeomorphism::affine(c(1.2, 0.3), c(0.4, -0.1), c(0.5, 0.5), disk()).unwrap();
        assert!(d.inverse_error.unwrap() < 1e-14);
        let z = c(0.3, -0.4);
        let w = at(&d.forward.map, z.re, z.im);
        let back = d.inverse.as_ref().unwrap().map.eval(Point::from_z(w)).unwrap();
        assert!((back - z).norm() < 1e-15);
        let bbox = d.target.bbox();
        let mut hit = [false; 4];
        for p in disk().boundary_samples(20000) {
            let w = d.forward.map.eval_unchecked(p);
            assert!(w.re >= bbox.x0 - 1e-12 && w.re <= bbox.x1 + 1e-12 && w.im >= bbox.y0 - 1e-12 && w.im <= bbox.y1 + 1e-12);
            hit[0] |= (w.re - bbox.x0).abs() < 1e-6;
            hit[1] |= (w.re - bbox.x1).abs() < 1e-6;
            hit[2] |= (w.im - bbox.y0).abs() < 1e-6;
            hit[3] |= (w.im - bbox.y1).abs() < 1e-6;
        }
        assert!(hit.iter().all(|h| *h));
    }

    #[test]
    fn reversing_map_rejected() {
        let err = Diffeomorphism::affine(c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.0), disk()).unwrap_err();
        assert!(matches!(err, Error::JacobianNonpositive { .. }));
    }

    #[test]
    fn gauge_composition_is_an_action() {
        let bv = sample_bv(disk());
        let e = |x: Expr| ComplexField::expr(x, disk());
        let g1 = Gauge::new(e((Expr::z() * 0.5 + Expr::zbar() * c(0.0, 0.3)).exp())).unwrap();
        let g2 = Gauge::new(e(Expr::real(2.0) + Expr::x() * 0.5)).unwrap();
        let step = apply_gauge(&apply_gauge(&bv, &g1).unwrap(), &g2).unwrap();
        let once = apply_gauge(&bv, &g2.after(&g1)).unwrap();
        for ((_, x), (_, y)) in step.fields().iter().zip(once.fields().iter()) {
            assert!(max_abs_diff(x, y, 16) <= 1e-12);
        }
    }

    #[test]
    fn random_constant_conformal_and_closure() {
        let mut rng = CorpusRng::new(3);
        for _ in 0..100 {
            let mu0 = rng.disk(0.9);
            let a = c(1.0, 0.0) + rng.disk(0.4);
            let b = rng.disk(0.5);
            let d = Diffeomorphism::affine(a, b, rng.disk(1.0), disk()).unwrap();
            let bv = BVData::constant(mu0, c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), d.target.clone()).unwrap();
            assert!(conformal_residual(&bv, &d).unwrap().max_abs(8) <= 1e-12);
            assert!(closure_residual(&bv, &d).unwrap().max_abs(8) <= 1e-12);
        }
    }

    #[test]
    fn pullback_functoriality() {
        let d1 = Diffeomorphism::affine(c(1.1, 0.2), c(0.2, 0.1), c(0.1, 0.0), disk()).unwrap();
        let d2 = Diffeomorphism::affine(c(0.9, -0.3), c(-0.1, 0.25), c(0.0, 0.4), d1.target.clone()).unwrap();
        let bv = sample_bv(Domain::rectangle(-2.5, 2.5, -2.5, 2.5).unwrap()).with_domain(d2.target.clone());
        let composite = pullback(&bv, &d2.after(&d1).unwrap()).unwrap();
        let staged = pullback(&pullback(&bv, &d2).unwrap(), &d1).unwrap();
        for ((_, x), (_, y)) in composite.fields().iter().zip(staged.fields().iter()) {
            assert!(max_abs_diff(x, y, 16) <= 1e-10);
        }
    }
}
