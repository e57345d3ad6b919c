//! Reduction of BV data to Vekua normal form: uniformize `mu`, pull back by
//! the inverse, then remove `A` with an exponential of its Cauchy transform.

pub mod beltrami;
pub mod cauchy;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{max_abs_diff, ComplexField, Domain};
use crate::pipeline::BVData;
use crate::symmetry::{apply_gauge, pullback, Diffeomorphism, Gauge, MapData};
use crate::CHECK_RESOLUTION;

pub use beltrami::{beltrami_residual, uniformize_constant, uniformize_numeric, NumericUniformizer};
pub use cauchy::{cauchy_field, cauchy_transform, cauchy_transform_grid, CauchyValue};

/// Beltrami residual accepted from an exactly known uniformizer.
pub const UNIFORMIZER_TOL: f64 = 1e-8;
/// `max |mu|` below which data count as already flat.
pub const FLAT_MU_TOL: f64 = 1e-12;
/// Allowed variation of `mu` on the constant path.
pub const CONSTANT_MU_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VekuaReduction {
    /// Data on `Phi(Omega)` with `mu = 0`.
    pub bv: BVData,
    /// Beltrami residual of the uniformizer against the input `mu`.
    pub beltrami_residual: f64,
    /// `max |mu'|` from the generic pullback formula.
    pub mu_residual: f64,
    /// Largest difference between the Vekua coefficients and the generic
    /// pullback coefficients.
    pub discrepancy: f64,
}

/// Pulls `bv` (on the source of `phi`) back by `Psi = phi^{-1}`.
///
/// Since `phi` solves `Phi_zbar = mu Phi_z`, the pulled-back `mu` vanishes
/// and every coefficient is multiplied by `conj(Psi_zeta)`.
pub fn reduce_to_vekua(bv: &BVData, phi: &Diffeomorphism) -> Result<VekuaReduction> {
    reduce_to_vekua_with_tolerance(bv, phi, UNIFORMIZER_TOL)
}

/// As [`reduce_to_vekua`] with a caller-chosen residual gate; numerically
/// computed uniformizers pass `f64::INFINITY` and read the report instead.
pub fn reduce_to_vekua_with_tolerance(bv: &BVData, phi: &Diffeomorphism, tol: f64) -> Result<VekuaReduction> {
    let residual = beltrami_residual(phi, &bv.mu.with_domain(phi.source.clone()));
    if !(residual <= tol) {
        return Err(Error::NotAUniformizer { residual });
    }
    let psi = phi.inverted()?;
    let factor = psi.forward.map_z.conj();
    let m = &psi.forward.map;
    let target = psi.source.clone();
    let a = &factor * bv.a.compose(m);
    let b = &factor * bv.b.compose(m);
    let f = &factor * bv.f.compose(m);
    let generic = pullback(&bv.with_domain(phi.source.clone()), &psi)?;
    let mu_residual = generic.mu.max_abs_checked(CHECK_RESOLUTION);
    let reduced = BVData::new_unchecked(ComplexField::zero(target.clone()), a, b, f, target);
    let discrepancy = [(&reduced.a, &generic.a), (&reduced.b, &generic.b), (&reduced.f, &generic.f)]
        .iter()
        .map(|(x, y)| checked_diff(x, y))
        .fold(0.0, f64::max);
    Ok(VekuaReduction { bv: reduced, beltrami_residual: residual, mu_residual, discrepancy })
}

fn checked_diff(x: &ComplexField, y: &ComplexField) -> f64 {
    if x.is_grid() || y.is_grid() {
        (x - y).max_abs_interior(CHECK_RESOLUTION)
    } else {
        max_abs_diff(x, y, CHECK_RESOLUTION)
    }
}

#[derive(Debug, Clone)]
pub struct GaugeElimination {
    pub gauge: Gauge,
    pub bv: BVData,
    /// `max |A'|` over interior sample points.
    pub a_residual: f64,
}

/// `phi = exp(T A)` removes `A` from flat data (`mu = 0`).
pub fn gauge_away_a(bv: &BVData, n: usize) -> Result<GaugeElimination> {
    let max_mu = bv.mu.max_abs(CHECK_RESOLUTION);
    if !(max_mu <= FLAT_MU_TOL) {
        return Err(Error::MuNotZero { max_mu });
    }
    let g = cauchy_field(&bv.a, bv.domain(), n)?;
    let (g_z, g_zbar) = g.wirtinger()?;
    let phi = g.exp();
    let gauge = Gauge::with_derivatives(phi.clone(), &phi * &g_z, &phi * &g_zbar)?;
    let out = apply_gauge(bv, &gauge)?;
    let a_residual = out.a.max_abs_interior(CHECK_RESOLUTION);
    Ok(GaugeElimination { gauge, bv: out, a_residual })
}

/// `g o Phi` with its Wirtinger derivatives by the chain rule:
/// `(g o Phi)_z = (g_zeta o Phi) Phi_z + (g_zetabar o Phi) conj(Phi_zbar)` and
/// `(g o Phi)_zbar = (g_zeta o Phi) Phi_zbar + (g_zetabar o Phi) conj(Phi_z)`.
pub fn compose_with_derivatives(g: &ComplexField, map: &MapData) -> Result<(ComplexField, ComplexField, ComplexField)> {
    let (g_z, g_zbar) = g.wirtinger()?;
    let gz = g_z.compose(&map.map);
    let gzb = g_zbar.compose(&map.map);
    let value = g.compose(&map.map);
    let dz = &gz * &map.map_z + &gzb * map.map_zbar.conj();
    let dzbar = &gz * &map.map_zbar + &gzb * map.map_z.conj();
    Ok((value, dz, dzbar))
}

/// `(d_zbar - mu d_z)(g o Phi) - (1 - |mu|^2) conj(Phi_z) (g_zetabar o Phi)`,
/// which vanishes when `Phi` solves the Beltrami equation for `mu`.
pub fn twisted_to_flat_residual(g: &ComplexField, map: &MapData, mu: &ComplexField) -> Result<ComplexField> {
    let (dz, dzbar) = g.compose(&map.map).wirtinger()?;
    let (_, g_zbar) = g.wirtinger()?;
    let lhs = &dzbar - mu * &dz;
    let rhs = (-mu.abs2() + 1.0) * map.map_z.conj() * g_zbar.compose(&map.map);
    Ok(lhs - rhs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UniformizerPath {
    /// Closed-form affine solution for constant `mu`.
    Constant,
    /// The experimental iterative solver (rectangles only).
    Numeric { max_iter: usize, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFormResiduals {
    /// Beltrami residual of the uniformizer.
    pub beltrami: f64,
    /// `max |mu'|` of the normal form.
    pub mu: f64,
    /// `max |A'|` over interior sample points of the normal form.
    pub a: f64,
}

#[derive(Debug, Clone)]
pub struct NormalFormResult {
    pub phi: Diffeomorphism,
    pub gauge: Gauge,
    /// The intermediate Vekua data on `Phi(Omega)`, before the gauge step.
    pub vekua: BVData,
    pub bv_normal: BVData,
    pub residuals: NormalFormResiduals,
}

/// Constant value of `mu`, or `MuNotConstant`.
pub fn constant_mu(mu: &ComplexField) -> Result<Complex64> {
    if let Some(c) = mu.as_const() {
        return Ok(c);
    }
    let values = mu.sampled(CHECK_RESOLUTION);
    let first = values.first().copied().unwrap_or_default();
    let deviation = values.iter().fold(0.0f64, |m, v| m.max((v - first).norm()));
    if deviation > CONSTANT_MU_TOL {
        return Err(Error::MuNotConstant { deviation });
    }
    Ok(first)
}

/// Uniformize `mu`, reduce to Vekua form, then gauge away `A` with the single
/// integrating factor `phi = exp((T A') o Phi)` built on the original domain.
pub fn normal_form(bv: &BVData, path: UniformizerPath, n: usize) -> Result<NormalFormResult> {
    let domain = bv.domain().clone();
    let (phi, gate) = match path {
        UniformizerPath::Constant => (uniformize_constant(constant_mu(&bv.mu)?, domain.clone())?, UNIFORMIZER_TOL),
        UniformizerPath::Numeric { max_iter, tol } => {
            let u = uniformize_numeric(&bv.mu, n.next_power_of_two(), max_iter, tol)?;
            (u.map, f64::INFINITY)
        }
    };
    let stage = reduce_to_vekua_with_tolerance(bv, &phi, gate)?;
    let vekua = stage.bv;

    let flat_a = vekua.a.max_abs(CHECK_RESOLUTION) == 0.0;
    let gauge = if flat_a {
        Gauge::identity(domain.clone())
    } else {
        let g = cauchy_field(&vekua.a, vekua.domain(), n)?;
        let (log_phi, dz, dzbar) = compose_with_derivatives(&g, &phi.forward)?;
        let e = log_phi.exp();
        Gauge::with_derivatives(e.clone(), &e * &dz, &e * &dzbar)?
    };
    let gauged = apply_gauge(bv, &gauge)?;
    let normal = reduce_to_vekua_with_tolerance(&gauged, &phi, gate)?;
    let residuals = NormalFormResiduals {
        beltrami: stage.beltrami_residual,
        mu: normal.mu_residual.max(normal.bv.mu.max_abs(CHECK_RESOLUTION)),
        a: if flat_a { normal.bv.a.max_abs_checked(CHECK_RESOLUTION) } else { normal.bv.a.max_abs_interior(CHECK_RESOLUTION) },
    };
    Ok(NormalFormResult { phi, gauge, vekua, bv_normal: normal.bv, residuals })
}

/// The domain `Phi(Omega)` carrying the normal form.
pub fn normal_domain(r: &NormalFormResult) -> &Domain {
    &r.phi.target
}
