//! The Cauchy transform `(T a)(z) = -(1/pi) int a(zeta) / (zeta - z)` on a
//! bounded domain, by masked midpoint quadrature.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::quadrature::{pairwise_sum, MIN_RESOLUTION};
use crate::field::{ComplexField, Domain, Grid, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyValue {
    pub value: Complex64,
    /// `|T_N - T_2N|`.
    pub error_estimate: f64,
}

/// `Q(u, v)` with `d2Q/du dv = u / (u^2 + v^2)`, continuous through the origin.
fn corner(u: f64, v: f64) -> f64 {
    let r2 = u * u + v * v;
    let log = if v != 0.0 { v * r2.ln() } else { 0.0 };
    let angle = if u != 0.0 { u * (v / u).atan() } else { 0.0 };
    0.5 * log - v + angle
}

/// Exact `int du dv / (u + i v)` over `[u0, u1] x [v0, v1]`.
pub(crate) fn cell_integral(u0: f64, u1: f64, v0: f64, v1: f64) -> Complex64 {
    let re = corner(u1, v1) - corner(u1, v0) - corner(u0, v1) + corner(u0, v0);
    let im = corner(v1, u1) - corner(v1, u0) - corner(v0, u1) + corner(v0, u0);
    Complex64::new(re, -im)
}

/// Sum over cells with centers in `domain`; the density is frozen at each
/// center and the kernel integrated exactly over the cell.
fn product_sum(a: &ComplexField, domain: &Domain, z: Point, n: usize) -> Complex64 {
    let r = domain.bbox();
    let (xs, ys) = r.cell_centers(n);
    let hx = r.width() / n as f64;
    let hy = r.height() / n as f64;
    let mut pts = Vec::with_capacity(n * n);
    for &y in &ys {
        for &x in &xs {
            let p = Point::new(x, y);
            if domain.contains(p) {
                pts.push(p);
            }
        }
    }
    let values = a.eval_many(&pts);
    let terms: Vec<Complex64> = values
        .iter()
        .zip(&pts)
        .map(|(v, p)| {
            let (u, w) = (p.x - z.x, p.y - z.y);
            v * cell_integral(u - hx / 2.0, u + hx / 2.0, w - hy / 2.0, w + hy / 2.0)
        })
        .collect();
    pairwise_sum(&terms) * (-1.0 / PI)
}

/// Pointwise transform at an interior point `z` with `n x n` cells.
pub fn cauchy_transform(a: &ComplexField, domain: &Domain, z: Point, n: usize) -> Result<CauchyValue> {
    if n < MIN_RESOLUTION {
        return Err(Error::ResolutionTooSmall { got: n, min: MIN_RESOLUTION });
    }
    if !z.is_finite() || !domain.contains_with_margin(z, domain.eval_tolerance()) {
        return Err(Error::ZOnBoundary);
    }
    let value = product_sum(a, domain, z, n);
    let refined = product_sum(a, domain, z, 2 * n);
    Ok(CauchyValue { value, error_estimate: (value - refined).norm() })
}

/// Transform at every cell center of the `n x n` decomposition of the
/// bounding box, as a grid on [`Rect::center_rect`](crate::field::Rect::center_rect).
///
/// Same rule as [`cauchy_transform`], evaluated as a zero-padded FFT
/// convolution, so the two agree at cell centers.
pub fn cauchy_transform_grid(a: &ComplexField, domain: &Domain, n: usize) -> Result<Grid> {
    if n < MIN_RESOLUTION {
        return Err(Error::ResolutionTooSmall { got: n, min: MIN_RESOLUTION });
    }
    let r = domain.bbox();
    let hx = r.width() / n as f64;
    let hy = r.height() / n as f64;
    let size = (2 * n).next_power_of_two();
    let (xs, ys) = r.cell_centers(n);
    let mut pts = Vec::new();
    let mut slots = Vec::new();
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            let p = Point::new(x, y);
            if domain.contains(p) {
                pts.push(p);
                slots.push(j * size + i);
            }
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut density = vec![zero; size * size];
    for (v, s) in a.eval_many(&pts).into_iter().zip(slots) {
        density[s] = v;
    }
    let mut kernel = vec![zero; size * size];
    // T(p) = sum_q K(p - q) a(q), K(m) = -(1/pi) int over the cell at q of 1/(zeta - p)
    let m = n as isize - 1;
    for my in -m..=m {
        for mx in -m..=m {
            let (u, v) = (-mx as f64 * hx, -my as f64 * hy);
            let ix = mx.rem_euclid(size as isize) as usize;
            let iy = my.rem_euclid(size as isize) as usize;
            kernel[iy * size + ix] = cell_integral(u - hx / 2.0, u + hx / 2.0, v - hy / 2.0, v + hy / 2.0) * (-1.0 / PI);
        }
    }
    fft::forward_2d(&mut density, size);
    fft::forward_2d(&mut kernel, size);
    for (d, k) in density.iter_mut().zip(&kernel) {
        *d *= k;
    }
    fft::inverse_2d(&mut density, size);
    let values = (0..n).flat_map(|j| density[j * size..j * size + n].to_vec()).collect();
    Grid::new(r.center_rect(n), n, values)
}

/// [`cauchy_transform_grid`] wrapped as a field on `domain`.
pub fn cauchy_field(a: &ComplexField, domain: &Domain, n: usize) -> Result<ComplexField> {
    Ok(ComplexField::grid(cauchy_transform_grid(a, domain, n)?, domain.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Expr;
    use crate::rng::CorpusRng;

    fn disk() -> Domain {
        Domain::unit_disk()
    }

    #[test]
    fn transform_of_one_is_conj_z() {
        let one = ComplexField::real(1.0, disk());
        let t = cauchy_transform(&one, &disk(), Point::new(0.3, 0.0), 256).unwrap();
        assert!((t.value - Complex64::new(0.3, 0.0)).norm() / 0.3 <= 2e-2, "{:?}", t);
        // symmetric mask around the origin at either parity
        for n in [255, 256] {
            let t0 = cauchy_transform(&one, &disk(), Point::new(0.0, 0.0), n).unwrap();
            assert!(t0.value.norm() < 1e-12, "{t0:?}");
        }
        let zero = ComplexField::zero(disk());
        assert_eq!(cauchy_transform(&zero, &disk(), Point::new(0.1, 0.5), 64).unwrap().value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cell_integral_matches_fine_midpoint() {
        assert!(cell_integral(-0.5, 0.5, -0.25, 0.25).norm() < 1e-15);
        let (u0, u1, v0, v1) = (0.3, 0.5, -0.1, 0.2);
        let m = 400;
        let (du, dv) = ((u1 - u0) / m as f64, (v1 - v0) / m as f64);
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..m {
            for i in 0..m {
                sum += 1.0 / Complex64::new(u0 + (i as f64 + 0.5) * du, v0 + (j as f64 + 0.5) * dv);
            }
        }
        let exact = cell_integral(u0, u1, v0, v1);
        assert!((sum * du * dv - exact).norm() < 1e-6, "{exact}");
        // a cell touching the singularity is still finite
        let touching = cell_integral(0.0, 0.1, 0.0, 0.1);
        assert!(touching.is_finite() && touching.norm() > 0.0);
    }

    #[test]
    fn random_interior_points() {
        let one = ComplexField::real(1.0, disk());
        let mut rng = CorpusRng::new(11);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let z = rng.annulus(0.2, 0.8);
            let t = cauchy_transform(&one, &disk(), Point::from_z(z), 256).unwrap();
            worst = worst.max((t.value - z.conj()).norm() / z.norm());
        }
        assert!(worst <= 1e-2, "{worst}");
    }

    #[test]
    fn boundary_points_rejected() {
        let one = ComplexField::real(1.0, disk());
        assert_eq!(cauchy_transform(&one, &disk(), Point::new(1.0, 0.0), 64), Err(Error::ZOnBoundary));
        assert_eq!(cauchy_transform(&one, &disk(), Point::new(2.0, 0.0), 64), Err(Error::ZOnBoundary));
    }

    #[test]
    fn grid_agrees_with_pointwise_at_centers() {
        let a = ComplexField::expr(Expr::zbar() * Expr::z() + Expr::x(), disk());
        let n = 32;
        let g = cauchy_transform_grid(&a, &disk(), n).unwrap();
        for (i, j) in [(10, 12), (16, 16), (20, 5)] {
            let p = g.node(i, j);
            let v = product_sum(&a, &disk(), p, n);
            assert!((g.at(i, j) - v).norm() < 1e-12, "{} vs {}", g.at(i, j), v);
        }
    }

    #[test]
    fn dbar_of_transform_recovers_density() {
        let a = ComplexField::expr(Expr::zbar() + Expr::real(0.5), disk());
        let interior: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| {
                let t = cauchy_field(&a, &disk(), n).unwrap();
                let (_, tzb) = t.wirtinger().unwrap();
                (&tzb - &a).max_abs_interior(24)
            })
            .collect();
        assert!(interior[2] < interior[0], "{interior:?}");
        assert!(interior[2] < 5e-2, "{interior:?}");
    }
}
