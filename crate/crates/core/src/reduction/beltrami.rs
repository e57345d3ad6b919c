//! Solutions of the Beltrami equation `Phi_zbar = mu Phi_z`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{ComplexField, Domain, Grid, Point, Rect};
use crate::symmetry::{Diffeomorphism, MapData};
use crate::{CHECK_RESOLUTION, EPS_MU};

/// `Phi(z) = z + mu0 conj(z)` on `source`, with its exact affine inverse.
pub fn uniformize_constant(mu0: Complex64, source: Domain) -> Result<Diffeomorphism> {
    let max_mu = mu0.norm();
    if !(max_mu <= 1.0 - EPS_MU) {
        return Err(Error::MuNearUnitCircle { max_mu, eps: EPS_MU });
    }
    if mu0 == Complex64::new(0.0, 0.0) {
        return Ok(Diffeomorphism::identity(source));
    }
    Diffeomorphism::affine(Complex64::new(1.0, 0.0), mu0, Complex64::new(0.0, 0.0), source)
}

/// `max |Phi_zbar - mu Phi_z|` over the source's sample points (interior ones
/// for grid-backed maps).
pub fn beltrami_residual(phi: &Diffeomorphism, mu: &ComplexField) -> f64 {
    let m = &phi.forward;
    let r = &m.map_zbar - &mu.compose(&identity_on(&phi.source)) * &m.map_z;
    r.with_domain(phi.source.clone()).max_abs_checked(CHECK_RESOLUTION)
}

fn identity_on(domain: &Domain) -> ComplexField {
    ComplexField::expr(crate::field::Expr::z(), domain.clone())
}

/// Largest `sup |mu|` accepted by [`uniformize_numeric`].
pub const NUMERIC_MU_LIMIT: f64 = 0.5;
/// Width of the cutoff ramp as a fraction of each side of the rectangle.
pub const TAPER_FRACTION: f64 = 0.15;

#[derive(Debug, Clone)]
pub struct NumericUniformizer {
    pub map: Diffeomorphism,
    pub iterations: usize,
    /// Sup norm of the last fixed-point update.
    pub increment: f64,
    /// Finite-difference Beltrami residual against the tapered coefficient on
    /// interior sample points.
    pub residual: f64,
    /// Same residual against the original coefficient, on the region where
    /// the cutoff equals one.
    pub core_residual: f64,
    pub converged: bool,
}

fn smootherstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Cutoff equal to one away from the edges of `r`, vanishing on them.
fn taper(r: &Rect, p: Point) -> f64 {
    let wx = TAPER_FRACTION * r.width();
    let wy = TAPER_FRACTION * r.height();
    let dx = (p.x - r.x0).min(r.x1 - p.x);
    let dy = (p.y - r.y0).min(r.y1 - p.y);
    smootherstep(dx / wx) * smootherstep(dy / wy)
}

/// Periodic samples on an `n x n` lattice of period `(lx, ly)`.
struct Periodic {
    r: Rect,
    n: usize,
    values: Vec<Complex64>,
}

impl Periodic {
    fn eval(&self, p: Point) -> Complex64 {
        let n = self.n as f64;
        let u = (p.x - self.r.x0) / self.r.width() * n;
        let v = (p.y - self.r.y0) / self.r.height() * n;
        let (fu, fv) = (u.floor(), v.floor());
        let (tu, tv) = (u - fu, v - fv);
        let wrap = |k: f64| (k as i64).rem_euclid(self.n as i64) as usize;
        let (i0, j0) = (wrap(fu), wrap(fv));
        let (i1, j1) = ((i0 + 1) % self.n, (j0 + 1) % self.n);
        let at = |i: usize, j: usize| self.values[j * self.n + i];
        at(i0, j0) * ((1.0 - tu) * (1.0 - tv)) + at(i1, j0) * (tu * (1.0 - tv)) + at(i0, j1) * ((1.0 - tu) * tv) + at(i1, j1) * (tu * tv)
    }
}

/// Fourier multipliers on the lattice: `xi = 2 pi (kx/lx + i ky/ly)`.
fn wavenumbers(r: &Rect, n: usize) -> Vec<Complex64> {
    let mut xi = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let kx = 2.0 * core::f64::consts::PI * fft::frequency(i, n) / r.width();
            let ky = 2.0 * core::f64::consts::PI * fft::frequency(j, n) / r.height();
            xi.push(Complex64::new(kx, ky));
        }
    }
    xi
}

fn apply_multiplier(values: &[Complex64], n: usize, mult: impl Fn(Complex64) -> Complex64, xi: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    fft::forward_2d(&mut buf, n);
    for (b, k) in buf.iter_mut().zip(xi) {
        *b = if k.norm_sqr() == 0.0 { Complex64::new(0.0, 0.0) } else { *b * mult(*k) };
    }
    fft::inverse_2d(&mut buf, n);
    buf
}

/// EXPERIMENTAL. Iterative solution of the Beltrami equation on the bounding
/// rectangle of `mu`'s domain.
///
/// `mu` is multiplied by a smooth cutoff vanishing on the rectangle's edges
/// and sampled on a periodic `n x n` lattice (`n` a power of two). With `S`
/// the periodic Beurling transform (multiplier `conj(xi)/xi`) the iteration
/// is `h <- mu (1 + S h)`; the map is `Phi = z + m conj(z) + T(h - m)` with
/// `m` the mean of `h` and `T` the periodic Cauchy transform (multiplier
/// `2/(i xi)`). Derivatives of the returned map are finite differences; the
/// inverse is found by Newton's method on a grid over the image.
pub fn uniformize_numeric(mu: &ComplexField, n: usize, max_iter: usize, tol: f64) -> Result<NumericUniformizer> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::ResolutionTooSmall { got: n, min: 16 });
    }
    let domain = mu.domain().clone();
    let r = domain.bbox();
    let sup_mu = mu.max_abs(CHECK_RESOLUTION);
    if !(sup_mu <= NUMERIC_MU_LIMIT) {
        return Err(Error::MuTooLarge { sup_mu, limit: NUMERIC_MU_LIMIT });
    }
    let hx = r.width() / n as f64;
    let hy = r.height() / n as f64;
    let nodes: Vec<Point> = (0..n).flat_map(|j| (0..n).map(move |i| Point::new(r.x0 + i as f64 * hx, r.y0 + j as f64 * hy))).collect();
    let mu_t: Vec<Complex64> = mu.eval_many(&nodes).iter().zip(&nodes).map(|(m, p)| m * taper(&r, *p)).collect();
    let xi = wavenumbers(&r, n);
    let beurling = |k: Complex64| k.conj() / k;

    let mut h = mu_t.clone();
    let mut increment = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let sh = apply_multiplier(&h, n, beurling, &xi);
        let next: Vec<Complex64> = mu_t.iter().zip(&sh).map(|(m, s)| m * (s + 1.0)).collect();
        increment = next.iter().zip(&h).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
        h = next;
        iterations += 1;
        if increment < 1e-3 * tol {
            break;
        }
    }

    let mean = h.iter().sum::<Complex64>() / (n * n) as f64;
    let centered: Vec<Complex64> = h.iter().map(|v| v - mean).collect();
    let periodic = apply_multiplier(&centered, n, |k| Complex64::new(2.0, 0.0) / (Complex64::new(0.0, 1.0) * k), &xi);
    let dz = apply_multiplier(&h, n, beurling, &xi);
    let p_part = Periodic { r, n, values: periodic };
    let pz = Periodic { r, n, values: dz.iter().map(|v| v + 1.0).collect() };
    let pzb = Periodic { r, n, values: h.clone() };
    let phi_at = |p: Point| p.z() + mean * p.z().conj() + p_part.eval(p);

    let forward_grid = Grid::from_fn(r, n + 1, phi_at)?;
    let forward = MapData::new(ComplexField::grid(forward_grid.clone(), domain.clone()))?;

    // image bounding box from the boundary nodes, then Newton per node
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for w in forward_grid.values() {
        x0 = x0.min(w.re);
        x1 = x1.max(w.re);
        y0 = y0.min(w.im);
        y1 = y1.max(w.im);
    }
    let image_rect = Rect::new(x0, x1, y0, y1)?;
    let det0 = 1.0 - mean.norm_sqr();
    let invert = |w: Point| -> Complex64 {
        let wz = w.z();
        let mut z = (wz - mean * wz.conj()) / det0;
        for _ in 0..50 {
            let p = Point::from_z(z);
            let res = phi_at(p) - wz;
            if res.norm() < 1e-14 * (1.0 + wz.norm()) {
                break;
            }
            let a = pz.eval(p);
            let b = pzb.eval(p);
            let det = a.norm_sqr() - b.norm_sqr();
            z -= (a.conj() * res - b * res.conj()) / det;
        }
        z
    };
    let inverse_grid = Grid::from_fn(image_rect, n + 1, invert)?;
    let target = Domain::image(
        domain.clone(),
        forward.map.clone(),
        ComplexField::grid(inverse_grid.clone(), Domain::Rectangle(image_rect)),
        Some(image_rect),
    )?;
    let inverse = MapData::new(ComplexField::grid(inverse_grid, target.clone()))?;
    let tol_inverse = 10.0 * (hx * hx + hy * hy);
    let map = Diffeomorphism::with_inverse_tolerance(forward, Some(inverse), domain.clone(), target, tol_inverse)?;

    let tapered = ComplexField::grid(
        Grid::from_fn(r, n + 1, |p| mu.eval_unchecked(p) * taper(&r, p))?,
        domain.clone(),
    );
    let residual = beltrami_residual(&map, &tapered);
    let core: Vec<Point> = domain.interior_sample_points(CHECK_RESOLUTION).into_iter().filter(|p| taper(&r, *p) == 1.0).collect();
    let diff = &map.forward.map_zbar - &(mu * &map.forward.map_z);
    let core_residual = diff.eval_many(&core).iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let converged = core_residual <= tol && residual <= tol;
    Ok(NumericUniformizer { map, iterations, increment, residual, core_residual, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Expr;
    use crate::rng::CorpusRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_coefficient_gives_identity() {
        let d = uniformize_constant(c(0.0, 0.0), Domain::unit_disk()).unwrap();
        let p = Point::new(0.3, -0.2);
        assert_eq!(d.forward.map.eval(p).unwrap(), p.z());
    }

    #[test]
    fn one_third() {
        let d = uniformize_constant(c(1.0 / 3.0, 0.0), Domain::unit_disk()).unwrap();
        assert!((d.forward.map.eval(Point::new(1.0, 0.0)).unwrap() - c(4.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((d.forward.map.eval(Point::new(0.0, 1.0)).unwrap() - c(0.0, 2.0 / 3.0)).norm() < 1e-15);
        let mu = ComplexField::real(1.0 / 3.0, Domain::unit_disk());
        assert_eq!(beltrami_residual(&d, &mu), 0.0);
        let inv = d.inverse.as_ref().unwrap();
        let mut rng = CorpusRng::new(5);
        for _ in 0..100 {
            let z = rng.disk(1.0);
            let w = d.forward.map.eval_unchecked(Point::from_z(z));
            assert!((inv.map.eval_unchecked(Point::from_z(w)) - z).norm() <= 1e-15);
        }
    }

    #[test]
    fn conjugate_identity_for_affine_inverse() {
        let mu0 = c(0.2, -0.35);
        let d = uniformize_constant(mu0, Domain::unit_disk()).unwrap();
        let inv = d.inverse.as_ref().unwrap();
        let r = &inv.map_zbar + &(inv.map_z.conj() * mu0);
        assert!(r.max_abs(16) <= 1e-15);
    }

    #[test]
    fn unit_modulus_rejected() {
        assert!(matches!(uniformize_constant(c(0.6, 0.8), Domain::unit_disk()), Err(Error::MuNearUnitCircle { .. })));
    }

    fn rect() -> Domain {
        Domain::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap()
    }

    #[test]
    fn numeric_zero_is_identity() {
        let u = uniformize_numeric(&ComplexField::zero(rect()), 32, 20, 1e-8).unwrap();
        assert!(u.residual == 0.0 && u.core_residual == 0.0);
        let p = Point::new(0.25, 0.5);
        assert!((u.map.forward.map.eval(p).unwrap() - p.z()).norm() < 1e-14);
    }

    #[test]
    fn numeric_constant_quarter() {
        let u = uniformize_numeric(&ComplexField::real(0.25, rect()), 128, 60, 1e-2).unwrap();
        assert!(u.core_residual <= 1e-2 && u.residual <= 1e-2, "{} {}", u.core_residual, u.residual);
        assert!(u.converged);
    }

    #[test]
    fn numeric_gaussian_refines() {
        let mu = ComplexField::expr((-Expr::z().abs2()).exp() * 0.25, rect());
        let coarse = uniformize_numeric(&mu, 128, 60, 5e-2).unwrap();
        let fine = uniformize_numeric(&mu, 256, 60, 5e-2).unwrap();
        assert!(fine.residual <= 5e-2 && fine.residual < coarse.residual, "{} {}", coarse.residual, fine.residual);
    }

    #[test]
    fn numeric_rejects_large_mu() {
        assert!(matches!(uniformize_numeric(&ComplexField::real(0.6, rect()), 32, 5, 1e-3), Err(Error::MuTooLarge { .. })));
    }
}
