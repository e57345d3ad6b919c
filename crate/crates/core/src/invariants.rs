//! The invariant density `Theta = |B|^2 / (1 - |mu|^2)`, its integral (the
//! mass), the zero locus of `B`, and two algebraic checks.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::quadrature::{midpoint_nodes, pairwise_sum, MIN_RESOLUTION};
use crate::field::{ComplexField, Domain, Point};
use crate::pipeline::BVData;
use crate::rng::CorpusRng;
use crate::symmetry::{apply_gauge, Gauge};
use crate::{CHECK_RESOLUTION, EPS_MU};

/// Default relative threshold for the zero detector.
pub const ZERO_TOL_REL: f64 = 1e-6;
/// `sup |B|` below which `B` counts as identically zero.
pub const ZERO_DEGENERACY: f64 = 1e-14;
pub const MIN_ZERO_RESOLUTION: usize = 16;

/// Density field. Fails if `1 - |mu|^2 < EPS_MU` at a sample point.
pub fn theta_density(bv: &BVData) -> Result<ComplexField> {
    let gap = -bv.mu.abs2() + 1.0;
    let min_gap = gap.sampled(CHECK_RESOLUTION).iter().fold(f64::INFINITY, |m, v| m.min(v.re));
    if !(min_gap >= EPS_MU) {
        let max_mu = (1.0 - min_gap).max(0.0).sqrt();
        return Err(Error::MuNearUnitCircle { max_mu, eps: EPS_MU });
    }
    Ok(bv.b.abs2() / gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub value: f64,
    pub resolution: usize,
    pub refined_value: f64,
    pub error_estimate: f64,
    /// Set when `1 - |mu|^2 < EPS_MU` at some quadrature node; those nodes are
    /// left out of the sums.
    pub blowup_flag: bool,
}

fn truncated_mass(bv: &BVData, domain: &Domain, n: usize) -> (f64, bool) {
    let (nodes, area) = midpoint_nodes(domain, n);
    let mu = bv.mu.eval_many(&nodes);
    let b = bv.b.eval_many(&nodes);
    let mut blowup = false;
    let terms: Vec<Complex64> = mu
        .iter()
        .zip(&b)
        .map(|(m, b)| {
            let gap = 1.0 - m.norm_sqr();
            if gap < EPS_MU {
                blowup = true;
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(b.norm_sqr() / gap, 0.0)
            }
        })
        .collect();
    (pairwise_sum(&terms).re * area, blowup)
}

impl MassReport {
    /// `|refined - other.refined|`.
    pub fn gap(&self, other: &MassReport) -> f64 {
        (self.refined_value - other.refined_value).abs()
    }

    /// Whether two masses agree within their combined error estimates.
    ///
    /// The refined values are compared: the boundary error of the masked rule
    /// is not monotone in `n`, so the coarse values can differ by more than
    /// `|value - refined|` while the refined ones settle.
    pub fn agrees_with(&self, other: &MassReport) -> bool {
        self.gap(other) <= self.error_estimate + other.error_estimate
    }
}

/// Integral of the density over the data's domain at `n` and `2n` cells.
pub fn mass(bv: &BVData, n: usize) -> Result<MassReport> {
    mass_on(bv, bv.domain(), n)
}

/// As [`mass`] over another (typically smaller) domain.
pub fn mass_on(bv: &BVData, domain: &Domain, n: usize) -> Result<MassReport> {
    if n < MIN_RESOLUTION {
        return Err(Error::ResolutionTooSmall { got: n, min: MIN_RESOLUTION });
    }
    let (value, b1) = truncated_mass(bv, domain, n);
    let (refined_value, b2) = truncated_mass(bv, domain, 2 * n);
    Ok(MassReport { value, resolution: n, refined_value, error_estimate: (value - refined_value).abs(), blowup_flag: b1 || b2 })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZeroSet {
    IdenticallyZero,
    Isolated { count: usize, locations: Vec<Point> },
}

impl ZeroSet {
    pub fn count(&self) -> Option<usize> {
        match self {
            ZeroSet::IdenticallyZero => None,
            ZeroSet::Isolated { count, .. } => Some(*count),
        }
    }
}

fn dist_to_segment(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.re * d.re + a.im * d.im) / len2).clamp(0.0, 1.0);
    (a + d * t).norm()
}

fn dist_to_triangle(p: [Complex64; 3]) -> f64 {
    let cross = |u: Complex64, v: Complex64| u.re * v.im - u.im * v.re;
    let area = cross(p[1] - p[0], p[2] - p[0]);
    let s = [cross(p[0], p[1]), cross(p[1], p[2]), cross(p[2], p[0])];
    if area != 0.0 && (s.iter().all(|v| *v >= 0.0) || s.iter().all(|v| *v <= 0.0)) {
        return 0.0;
    }
    dist_to_segment(p[0], p[1]).min(dist_to_segment(p[1], p[2])).min(dist_to_segment(p[2], p[0]))
}

/// Distance from the origin to the convex hull of four values.
fn dist_to_hull(v: [Complex64; 4]) -> f64 {
    [[0, 1, 2], [0, 2, 3], [0, 1, 3], [1, 2, 3]]
        .iter()
        .map(|t| dist_to_triangle([v[t[0]], v[t[1]], v[t[2]]]))
        .fold(f64::INFINITY, f64::min)
}

/// Approximate zeros of `b` on `domain`.
///
/// Among the `n x n` cells of the bounding box whose centers lie in the
/// domain, a cell is flagged when `|b(center)| < tol_rel * sup|b|` or when
/// the convex hull of its four corner values comes within that threshold of
/// the origin. Flagged cells are grouped into 4-connected components; each
/// component is one zero located at the centroid of its cell centers.
pub fn zero_count(b: &ComplexField, domain: &Domain, n: usize, tol_rel: f64) -> Result<ZeroSet> {
    if n < MIN_ZERO_RESOLUTION {
        return Err(Error::ResolutionTooSmall { got: n, min: MIN_ZERO_RESOLUTION });
    }
    let r = domain.bbox();
    let (hx, hy) = (r.width() / n as f64, r.height() / n as f64);
    let corner_pts: Vec<Point> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| Point::new(r.x0 + i as f64 * hx, r.y0 + j as f64 * hy)))
        .collect();
    let corners = b.eval_many(&corner_pts);
    let (xs, ys) = r.cell_centers(n);
    let mut inside = vec![false; n * n];
    let mut center_pts = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let p = Point::new(xs[i], ys[j]);
            if domain.contains(p) {
                inside[j * n + i] = true;
                center_pts.push(p);
            }
        }
    }
    let centers = b.eval_many(&center_pts);
    let corner = |i: usize, j: usize| corners[j * (n + 1) + i];
    let mut sup = centers.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    for j in 0..n {
        for i in 0..n {
            if inside[j * n + i] {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    sup = sup.max(corner(i + di, j + dj).norm());
                }
            }
        }
    }
    if sup < ZERO_DEGENERACY {
        return Ok(ZeroSet::IdenticallyZero);
    }
    let thr = tol_rel * sup;
    let mut flagged = vec![false; n * n];
    let mut k = 0;
    for j in 0..n {
        for i in 0..n {
            if !inside[j * n + i] {
                continue;
            }
            let hull = [corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)];
            flagged[j * n + i] = centers[k].norm() < thr || dist_to_hull(hull) <= thr;
            k += 1;
        }
    }
    let mut seen = vec![false; n * n];
    let mut locations = Vec::new();
    for start in 0..n * n {
        if !flagged[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let (mut sx, mut sy, mut m) = (0.0, 0.0, 0usize);
        while let Some(c) = stack.pop() {
            let (i, j) = (c % n, c / n);
            sx += xs[i];
            sy += ys[j];
            m += 1;
            let mut push = |ni: usize, nj: usize| {
                let id = nj * n + ni;
                if flagged[id] && !seen[id] {
                    seen[id] = true;
                    stack.push(id);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < n {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < n {
                push(i, j + 1);
            }
        }
        locations.push(Point::new(sx / m as f64, sy / m as f64));
    }
    Ok(ZeroSet::Isolated { count: locations.len(), locations })
}

/// `|r H(1 - (1 - s) r) - H(s)|`.
pub fn uniqueness_residual(h: impl Fn(f64) -> f64, s: f64, r: f64) -> f64 {
    (r * h(1.0 - (1.0 - s) * r) - h(s)).abs()
}

/// The density profile `H(s) = 1/(1 - s)`.
pub fn conformal_profile(s: f64) -> f64 {
    1.0 / (1.0 - s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessCheck {
    /// Max residual of the functional equation for `H(s) = 1/(1 - s)`.
    pub max_residual: f64,
    /// Residual of `H = 1` at `s = 1/2`, `r = 2`.
    pub witness: f64,
    pub samples: usize,
}

/// Draws `s` in `[0, 1)` and `r` in `(0, 1/(1 - s)]` and evaluates the
/// functional equation for the admissible profile and a constant one.
pub fn check_density_uniqueness(sample_count: usize, rng: &mut CorpusRng) -> UniquenessCheck {
    let mut max_residual = 0.0f64;
    for _ in 0..sample_count.max(1) {
        let s = rng.unit();
        let r = (1.0 - rng.unit()) / (1.0 - s);
        max_residual = max_residual.max(uniqueness_residual(conformal_profile, s, r));
    }
    let witness = uniqueness_residual(|_| 1.0, 0.5, 2.0);
    UniquenessCheck { max_residual, witness, samples: sample_count.max(1) }
}

/// Ratio of `int |F'|^2` to `int |F|^2` after the constant gauge `r`.
pub fn f_noninvariance_ratio(bv: &BVData, r: f64, n: usize) -> Result<f64> {
    if bv.f.max_abs(CHECK_RESOLUTION) == 0.0 {
        return Err(Error::FIdenticallyZero);
    }
    let g = Gauge::constant(Complex64::new(r, 0.0), bv.domain().clone())?;
    let out = apply_gauge(bv, &g)?;
    let before = crate::field::quadrature::midpoint(bv.domain(), &bv.f.abs2(), n)?.re;
    let after = crate::field::quadrature::midpoint(bv.domain(), &out.f.abs2(), n)?.re;
    Ok(after / before)
}
