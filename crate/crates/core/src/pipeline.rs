//! Staged derivation of the Beltrami–Vekua data `(mu, A, B, F)` from a real
//! elliptic system. Every intermediate stage is returned so its identities
//! can be checked on their own.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::elliptic::{validate_ellipticity, RealEllipticSystem};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Domain};
use crate::{CHECK_RESOLUTION, EPS_ELLIPTIC, EPS_MU};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Ratios of the principal part, the root `lambda` of `s^2 + beta s + alpha`
/// in the upper half plane, and its Cayley image `mu`.
#[derive(Debug, Clone)]
pub struct StructureData {
    pub alpha: ComplexField,
    pub beta: ComplexField,
    pub delta: ComplexField,
    pub lambda: ComplexField,
    pub mu: ComplexField,
}

/// The moving-generator defect `G = G1 + G2 i` with its ingredients.
#[derive(Debug, Clone)]
pub struct Obstruction {
    pub p: ComplexField,
    pub q: ComplexField,
    pub g1: ComplexField,
    pub g2: ComplexField,
}

/// Coefficients after `U = a22 u`, `V = v - a12 u` and the row operations.
#[derive(Debug, Clone)]
pub struct CanonicalSystem {
    pub a: ComplexField,
    pub b: ComplexField,
    pub c: ComplexField,
    pub d: ComplexField,
    pub f: ComplexField,
    pub g: ComplexField,
    pub btilde: ComplexField,
    pub dtilde: ComplexField,
}

/// Real coordinates of `A = A0 + A1 i`, `B = B0 + B1 i`, `F = F0 + F1 i`.
#[derive(Debug, Clone)]
pub struct FiberVekuaCoeffs {
    pub a0: ComplexField,
    pub a1: ComplexField,
    pub b0: ComplexField,
    pub b1: ComplexField,
    pub f0: ComplexField,
    pub f1: ComplexField,
}

/// Image of the fiber coefficients under `i -> lambda`.
#[derive(Debug, Clone)]
pub struct SpectralVekua {
    pub a: ComplexField,
    pub b: ComplexField,
    pub f: ComplexField,
}

/// Data of `w_zbar - mu w_z + A w + B conj(w) = F` on a domain.
#[derive(Debug, Clone)]
pub struct BVData {
    pub mu: ComplexField,
    pub a: ComplexField,
    pub b: ComplexField,
    pub f: ComplexField,
    domain: Domain,
}

impl BVData {
    /// Checks `sup |mu| <= 1 - EPS_MU` on the sample points of `domain`.
    pub fn new(mu: ComplexField, a: ComplexField, b: ComplexField, f: ComplexField, domain: Domain) -> Result<Self> {
        let max_mu = mu.with_domain(domain.clone()).max_abs(CHECK_RESOLUTION);
        if !(max_mu <= 1.0 - EPS_MU) {
            return Err(Error::MuNearUnitCircle { max_mu, eps: EPS_MU });
        }
        Ok(Self::new_unchecked(mu, a, b, f, domain))
    }

    pub fn new_unchecked(mu: ComplexField, a: ComplexField, b: ComplexField, f: ComplexField, domain: Domain) -> Self {
        Self {
            mu: mu.with_domain(domain.clone()),
            a: a.with_domain(domain.clone()),
            b: b.with_domain(domain.clone()),
            f: f.with_domain(domain.clone()),
            domain,
        }
    }

    /// Constant data on `domain`.
    pub fn constant(mu: Complex64, a: Complex64, b: Complex64, f: Complex64, domain: Domain) -> Result<Self> {
        let c = |v| ComplexField::constant(v, domain.clone());
        Self::new(c(mu), c(a), c(b), c(f), domain)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Same data regarded on another domain (no resampling).
    pub fn with_domain(&self, domain: Domain) -> Self {
        Self::new_unchecked(self.mu.clone(), self.a.clone(), self.b.clone(), self.f.clone(), domain)
    }

    pub fn fields(&self) -> [(&'static str, &ComplexField); 4] {
        [("mu", &self.mu), ("A", &self.a), ("B", &self.b), ("F", &self.f)]
    }
}

/// Step 1. Fails when the sampled discriminant drops to `EPS_ELLIPTIC`.
pub fn structure_data(sys: &RealEllipticSystem) -> Result<StructureData> {
    let report = validate_ellipticity(sys, CHECK_RESOLUTION)?;
    let c = &sys.coeffs;
    let alpha = &c.a22 / &c.a11;
    let beta = -(&c.a12 + &c.a21) / &c.a11;
    let delta = &alpha * 4.0 - &beta * &beta;
    let min_delta = delta.sampled(CHECK_RESOLUTION).iter().fold(f64::INFINITY, |m, v| m.min(v.re));
    if !report.pass || !(min_delta > EPS_ELLIPTIC) {
        return Err(Error::EllipticityViolation { min_a11: report.min_a11, min_discriminant: report.min_discriminant });
    }
    let lambda = (-&beta + delta.sqrt() * I) * 0.5;
    let mu = (&lambda - I) / (&lambda + I);
    Ok(StructureData { alpha, beta, delta, lambda, mu })
}

/// Step 2. `P = alpha_x - alpha beta_y`, `Q = beta_x + alpha_y - beta beta_y`.
pub fn obstruction(sd: &StructureData) -> Result<Obstruction> {
    let (ax, ay) = sd.alpha.partials()?;
    let (bx, by) = sd.beta.partials()?;
    let p = &ax - &sd.alpha * &by;
    let q = &bx + &ay - &sd.beta * &by;
    let g1 = (&sd.beta * &p - &sd.alpha * &q * 2.0) / &sd.delta;
    let g2 = (&p * 2.0 - &sd.beta * &q) / &sd.delta;
    Ok(Obstruction { p, q, g1, g2 })
}

/// Steps 3 and 4.
pub fn canonical_form(sys: &RealEllipticSystem, sd: &StructureData, ob: &Obstruction) -> Result<CanonicalSystem> {
    let k = &sys.coeffs;
    let (a12x, a12y) = k.a12.partials()?;
    let (a22x, a22y) = k.a22.partials()?;
    let first_row = &k.a13 + &k.a12 * &k.a14 - &a12y;
    let a = &first_row / &k.a11 - &a22x / &k.a22;
    let b = &sd.alpha * &k.a14;
    let c = (&k.a23 + &k.a12 * &k.a24 + &a12x - &a22y) / &k.a22 - (&k.a12 + &k.a21) / (&k.a11 * &k.a22) * &first_row;
    let d = &k.a24 + &sd.beta * &k.a14;
    let f = &sd.alpha * &sys.f1;
    let g = &sys.f2 + &sd.beta * &sys.f1;
    let btilde = &b - &ob.g1;
    let dtilde = &d - &ob.g2;
    Ok(CanonicalSystem { a, b, c, d, f, g, btilde, dtilde })
}

/// Step 5: the solution of the four real matching equations.
pub fn fiber_vekua(cs: &CanonicalSystem, sd: &StructureData) -> FiberVekuaCoeffs {
    let (alpha, beta, delta) = (&sd.alpha, &sd.beta, &sd.delta);
    let sigma = &cs.a - &cs.dtilde;
    let tau = alpha * &cs.c - &cs.btilde;
    let skew = &tau * 2.0 - beta * &sigma;
    let a1 = &skew / (delta * 2.0);
    let a0 = (&cs.a + &cs.dtilde) * 0.25 + beta * &skew / (delta * 4.0);
    let b0 = &sigma * 0.25 - beta * &skew / (delta * 4.0);
    let b1 = (&cs.c * delta - &skew) / (delta * 2.0);
    FiberVekuaCoeffs { a0, a1, b0, b1, f0: &cs.f * 0.5, f1: &cs.g * 0.5 }
}

/// Step 6.
pub fn spectral_vekua(fv: &FiberVekuaCoeffs, sd: &StructureData) -> SpectralVekua {
    let l = &sd.lambda;
    SpectralVekua { a: &fv.a0 + &fv.a1 * l, b: &fv.b0 + &fv.b1 * l, f: &fv.f0 + &fv.f1 * l }
}

/// Step 7: multiply through by `1 - mu`.
pub fn bv_form(sv: &SpectralVekua, sd: &StructureData, domain: &Domain) -> Result<BVData> {
    let factor = -&sd.mu + 1.0;
    BVData::new(sd.mu.clone(), &factor * &sv.a, &factor * &sv.b, &factor * &sv.f, domain.clone())
}

/// All stages of the derivation.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub structure: StructureData,
    pub obstruction: Obstruction,
    pub canonical: CanonicalSystem,
    pub fiber: FiberVekuaCoeffs,
    pub spectral: SpectralVekua,
    pub bv: BVData,
}

pub fn derive(sys: &RealEllipticSystem) -> Result<Derivation> {
    let structure = structure_data(sys)?;
    let obstruction = obstruction(&structure)?;
    let canonical = canonical_form(sys, &structure, &obstruction)?;
    let fiber = fiber_vekua(&canonical, &structure);
    let spectral = spectral_vekua(&fiber, &structure);
    let bv = bv_form(&spectral, &structure, sys.domain())?;
    Ok(Derivation { structure, obstruction, canonical, fiber, spectral, bv })
}

pub fn derive_bv(sys: &RealEllipticSystem) -> Result<BVData> {
    Ok(derive(sys)?.bv)
}

/// `w_zbar - mu w_z + A w + B conj(w) - F`.
pub fn bv_residual(bv: &BVData, w: &ComplexField) -> Result<ComplexField> {
    let (wz, wzb) = w.wirtinger()?;
    Ok(wzb - &bv.mu * &wz + &bv.a * w + &bv.b * w.conj() - &bv.f)
}

/// The spectral unknown `w = U + lambda V` with `U = a22 u`, `V = v - a12 u`.
pub fn spectral_unknown(sys: &RealEllipticSystem, sd: &StructureData, u: &ComplexField, v: &ComplexField) -> ComplexField {
    let big_u = &sys.coeffs.a22 * u;
    let big_v = v - &sys.coeffs.a12 * u;
    big_u + &sd.lambda * &big_v
}

/// Named residual fields of every pointwise identity of the derivation.
pub fn identity_fields(d: &Derivation) -> Result<Vec<(&'static str, ComplexField)>> {
    let s = &d.structure;
    let l = &s.lambda;
    let root = l * l + &s.beta * l + &s.alpha;
    let one_minus_il = -(l * I) + 1.0;
    let cayley_1 = (l * I + 1.0) / &one_minus_il + &s.mu;
    let cayley_2 = (one_minus_il.powi(-1) * 2.0) - (-&s.mu + 1.0);
    let (lx, ly) = l.partials()?;
    let transport = lx + l * &ly - (&d.obstruction.g1 + &d.obstruction.g2 * l);
    let c = &d.canonical;
    let f = &d.fiber;
    let m1 = &f.a0 + &f.b0 - &c.a * 0.5;
    let m2 = -(&s.alpha * &f.a1) - &s.beta * &f.b0 + &s.alpha * &f.b1 - &c.btilde * 0.5;
    let m3 = &f.a1 + &f.b1 - &c.c * 0.5;
    let m4 = &f.a0 - &s.beta * &f.a1 - &f.b0 - &c.dtilde * 0.5;
    let sum = &d.spectral.a + &d.spectral.b - (&c.a + &c.c * l) * 0.5;
    Ok(alloc::vec![
        ("lambda_root", root),
        ("cayley_mu", cayley_1),
        ("cayley_one_minus_mu", cayley_2),
        ("transport", transport),
        ("matching_u_real", m1),
        ("matching_v_real", m2),
        ("matching_u_i", m3),
        ("matching_v_i", m4),
        ("spectral_sum", sum),
    ])
}

/// Sup norms of [`identity_fields`] plus the sign checks `min Im lambda`
/// (reported as `max(0, -min Im lambda)`) and `max(0, max|mu| - 1)`.
pub fn identity_residuals(d: &Derivation, n: usize) -> Result<Vec<(&'static str, f64)>> {
    let mut out: Vec<(&'static str, f64)> = identity_fields(d)?.iter().map(|(name, f)| (*name, f.max_abs_checked(n))).collect();
    let min_im = d.structure.lambda.sampled(n).iter().fold(f64::INFINITY, |m, v| m.min(v.im));
    out.push(("lambda_upper_half_plane", (-min_im).max(0.0)));
    out.push(("mu_in_disk", (d.structure.mu.max_abs(n) - 1.0).max(0.0)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::Coefficients;
    use crate::field::{Expr, Point};
    use crate::rng::CorpusRng;

    fn square() -> Domain {
        Domain::unit_square()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn at(f: &ComplexField, x: f64, y: f64) -> Complex64 {
        f.eval(Point::new(x, y)).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn constant_system(a11: f64, a12: f64, a21: f64, a22: f64) -> RealEllipticSystem {
        RealEllipticSystem::homogeneous(Coefficients::constant(a11, a12, a21, a22, &square()), square()).unwrap()
    }

    fn field(e: Expr) -> ComplexField {
        ComplexField::expr(e, square())
    }

    #[test]
    fn cauchy_riemann_structure() {
        let sd = structure_data(&constant_system(1.0, 0.0, 0.0, 1.0)).unwrap();
        for (f, v) in [(&sd.alpha, 1.0), (&sd.beta, 0.0), (&sd.delta, 4.0)] {
            assert_eq!(at(f, 0.5, 0.5), c(v, 0.0));
        }
        assert!(close(at(&sd.lambda, 0.5, 0.5), c(0.0, 1.0), 1e-15));
        assert!(at(&sd.mu, 0.5, 0.5).norm() < 1e-15);
    }

    #[test]
    fn anisotropic_structure() {
        let sd = structure_data(&constant_system(1.0, 0.0, 0.0, 4.0)).unwrap();
        assert_eq!(at(&sd.alpha, 0.2, 0.2), c(4.0, 0.0));
        assert!(close(at(&sd.lambda, 0.2, 0.2), c(0.0, 2.0), 1e-15));
        assert!(close(at(&sd.mu, 0.2, 0.2), c(1.0 / 3.0, 0.0), 1e-15));
    }

    #[test]
    fn degenerate_structure_is_rejected() {
        let err = structure_data(&constant_system(1.0, -1.0, -1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::EllipticityViolation { .. }));
    }

    #[test]
    fn rigid_obstruction_vanishes() {
        let sd = structure_data(&constant_system(2.0, 0.3, -0.1, 1.5)).unwrap();
        let ob = obstruction(&sd).unwrap();
        assert_eq!(ob.g1.max_abs(16), 0.0);
        assert_eq!(ob.g2.max_abs(16), 0.0);
    }

    #[test]
    fn obstruction_linear_alpha() {
        let coeffs = Coefficients::principal(
            ComplexField::real(1.0, square()),
            ComplexField::zero(square()),
            ComplexField::zero(square()),
            field(Expr::real(1.0) + Expr::x() * 0.5),
        );
        let sd = structure_data(&RealEllipticSystem::homogeneous(coeffs, square()).unwrap()).unwrap();
        let ob = obstruction(&sd).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.9), (0.8, 0.3)] {
            assert!(close(at(&ob.p, x, y), c(0.5, 0.0), 1e-15));
            assert!(at(&ob.q, x, y).norm() < 1e-15);
            assert!(at(&ob.g1, x, y).norm() < 1e-15);
            assert!(close(at(&ob.g2, x, y), c(1.0 / (4.0 + 2.0 * x), 0.0), 1e-15));
        }
    }

    #[test]
    fn obstruction_matches_finite_difference_transport() {
        // alpha = 1, beta = y/2: a11 = 1, a22 = 1, a12 + a21 = -y/2
        let coeffs = Coefficients::principal(
            ComplexField::real(1.0, square()),
            field(Expr::y() * -0.25),
            field(Expr::y() * -0.25),
            ComplexField::real(1.0, square()),
        );
        let sd = structure_data(&RealEllipticSystem::homogeneous(coeffs, square()).unwrap()).unwrap();
        let ob = obstruction(&sd).unwrap();
        assert!(close(at(&ob.p, 0.3, 0.4), c(-0.5, 0.0), 1e-15));
        let lg = sd.lambda.sample_grid(square().bbox(), 129).unwrap();
        let (lx, ly) = lg.partials().unwrap();
        let t_fd = &lx + &lg * &ly;
        let exact = &ob.g1 + &ob.g2 * &sd.lambda;
        let err = crate::field::max_abs_diff(&t_fd.with_domain(square()), &exact, 16);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn canonical_cauchy_riemann_with_forcing() {
        let f1 = field(Expr::x() * Expr::y());
        let f2 = field((Expr::x() * 0.5).exp());
        let sys = RealEllipticSystem::new(Coefficients::cauchy_riemann(&square()), f1.clone(), f2.clone(), square()).unwrap();
        let d = derive(&sys).unwrap();
        let cs = &d.canonical;
        for z in [&cs.a, &cs.b, &cs.c, &cs.d] {
            assert_eq!(z.max_abs(16), 0.0);
        }
        assert!(crate::field::max_abs_diff(&cs.f, &f1, 16) < 1e-15);
        assert!(crate::field::max_abs_diff(&cs.g, &f2, 16) < 1e-15);
    }

    #[test]
    fn canonical_constant_principal_with_a14() {
        let coeffs = Coefficients::constant(1.0, 0.0, 0.0, 4.0, &square()).with_lower(
            ComplexField::zero(square()),
            ComplexField::real(1.0, square()),
            ComplexField::zero(square()),
            ComplexField::zero(square()),
        );
        let f1 = field(Expr::x());
        let sys = RealEllipticSystem::new(coeffs, f1.clone(), ComplexField::zero(square()), square()).unwrap();
        let d = derive(&sys).unwrap();
        let cs = &d.canonical;
        assert_eq!(at(&cs.b, 0.5, 0.5), c(4.0, 0.0));
        assert_eq!(at(&cs.d, 0.5, 0.5), c(0.0, 0.0));
        assert_eq!(cs.a.max_abs(8), 0.0);
        assert_eq!(cs.c.max_abs(8), 0.0);
        assert_eq!(at(&cs.f, 0.25, 0.5), c(1.0, 0.0));
    }

    #[test]
    fn canonical_variable_a22() {
        let coeffs = Coefficients::principal(
            ComplexField::real(1.0, square()),
            ComplexField::zero(square()),
            ComplexField::zero(square()),
            field(Expr::real(1.0) + Expr::x() * 0.5),
        );
        let d = derive(&RealEllipticSystem::homogeneous(coeffs, square()).unwrap()).unwrap();
        for x in [0.0, 0.4, 1.0] {
            assert!(close(at(&d.canonical.a, x, 0.5), c(-1.0 / (2.0 + x), 0.0), 1e-15));
        }
    }

    fn constant_canonical(a: f64, bt: f64, cc: f64, dt: f64, alpha: f64, beta: f64) -> (CanonicalSystem, StructureData) {
        let k = |v| ComplexField::real(v, square());
        let cs = CanonicalSystem {
            a: k(a),
            b: k(bt),
            c: k(cc),
            d: k(dt),
            f: k(0.0),
            g: k(0.0),
            btilde: k(bt),
            dtilde: k(dt),
        };
        let sys = constant_system(1.0, -beta / 2.0, -beta / 2.0, alpha);
        (cs, structure_data(&sys).unwrap())
    }

    fn matching_residuals(cs: &CanonicalSystem, sd: &StructureData, fv: &FiberVekuaCoeffs) -> [f64; 4] {
        let p = Point::new(0.5, 0.5);
        let v = |f: &ComplexField| f.eval(p).unwrap().re;
        let (al, be) = (v(&sd.alpha), v(&sd.beta));
        let (a0, a1, b0, b1) = (v(&fv.a0), v(&fv.a1), v(&fv.b0), v(&fv.b1));
        [
            a0 + b0 - v(&cs.a) / 2.0,
            -al * a1 - be * b0 + al * b1 - v(&cs.btilde) / 2.0,
            a1 + b1 - v(&cs.c) / 2.0,
            a0 - be * a1 - b0 - v(&cs.dtilde) / 2.0,
        ]
    }

    #[test]
    fn fiber_hand_example() {
        let (cs, sd) = constant_canonical(0.0, 4.0, 0.0, 0.0, 4.0, 0.0);
        let fv = fiber_vekua(&cs, &sd);
        let p = Point::new(0.5, 0.5);
        assert!(close(fv.a1.eval(p).unwrap(), c(-0.25, 0.0), 1e-15));
        assert!(fv.a0.eval(p).unwrap().norm() < 1e-15);
        assert!(fv.b0.eval(p).unwrap().norm() < 1e-15);
        assert!(close(fv.b1.eval(p).unwrap(), c(0.25, 0.0), 1e-15));
        assert!(matching_residuals(&cs, &sd, &fv).iter().all(|r| r.abs() < 1e-15));
        let sv = spectral_vekua(&fv, &sd);
        assert!((&sv.a + &sv.b).max_abs(8) < 1e-15);
    }

    #[test]
    fn fiber_zero_data() {
        let (cs, sd) = constant_canonical(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let fv = fiber_vekua(&cs, &sd);
        for f in [&fv.a0, &fv.a1, &fv.b0, &fv.b1] {
            assert_eq!(f.max_abs(8), 0.0);
        }
        let sv = spectral_vekua(&fv, &sd);
        assert_eq!(sv.a.max_abs(8), 0.0);
        assert_eq!(sv.b.max_abs(8), 0.0);
    }

    #[test]
    fn fiber_random_constants_match() {
        let mut rng = CorpusRng::new(7);
        for _ in 0..50 {
            let v: [f64; 4] = core::array::from_fn(|_| rng.uniform(-3.0, 3.0));
            let (cs, sd) = constant_canonical(v[0], v[1], v[2], v[3], 2.0, 1.0);
            let fv = fiber_vekua(&cs, &sd);
            assert!(matching_residuals(&cs, &sd, &fv).iter().all(|r| r.abs() <= 1e-12));
        }
    }

    #[test]
    fn cauchy_riemann_spectral_collapse() {
        let (cs, sd) = constant_canonical(0.7, -0.2, 1.1, 0.4, 1.0, 0.0);
        let fv = fiber_vekua(&cs, &sd);
        let sv = spectral_vekua(&fv, &sd);
        let p = Point::new(0.5, 0.5);
        let g = |f: &ComplexField| f.eval(p).unwrap();
        assert!(close(g(&sv.a), g(&fv.a0) + g(&fv.a1) * I, 1e-15));
        assert!(close(g(&sv.b), g(&fv.b0) + g(&fv.b1) * I, 1e-15));
    }

    #[test]
    fn cauchy_riemann_gives_zero_data() {
        let bv = derive_bv(&constant_system(1.0, 0.0, 0.0, 1.0)).unwrap();
        for (_, f) in bv.fields() {
            assert!(f.max_abs(16) < 1e-15);
        }
    }

    #[test]
    fn constant_principal_forcing() {
        let (a11, a12, a21, a22) = (1.5, 0.2, -0.6, 2.0);
        let f1 = field(Expr::x());
        let f2 = field(Expr::y() * 2.0);
        let sys = RealEllipticSystem::new(Coefficients::constant(a11, a12, a21, a22, &square()), f1, f2, square()).unwrap();
        let bv = derive_bv(&sys).unwrap();
        let alpha = a22 / a11;
        let beta = -(a12 + a21) / a11;
        let lam = c(-beta, (4.0 * alpha - beta * beta).sqrt()) * 0.5;
        let mu0 = (lam - I) / (lam + I);
        for &(x, y) in &[(0.2, 0.3), (0.9, 0.1)] {
            let expect = (1.0 - mu0) * (alpha * x + lam * (2.0 * y + beta * x)) * 0.5;
            assert!(close(at(&bv.f, x, y), expect, 1e-14));
            assert!(close(at(&bv.mu, x, y), mu0, 1e-15));
            assert!(at(&bv.a, x, y).norm() < 1e-15);
            assert!(at(&bv.b, x, y).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_factor_when_mu_vanishes() {
        let coeffs = Coefficients::cauchy_riemann(&square()).with_lower(
            field(Expr::x()),
            ComplexField::real(0.3, square()),
            ComplexField::zero(square()),
            field(Expr::y()),
        );
        let d = derive(&RealEllipticSystem::homogeneous(coeffs, square()).unwrap()).unwrap();
        assert!(crate::field::max_abs_diff(&d.bv.a, &d.spectral.a, 16) < 1e-15);
        assert!(crate::field::max_abs_diff(&d.bv.b, &d.spectral.b, 16) < 1e-15);
    }

    #[test]
    fn staged_anisotropic_chain() {
        let coeffs = Coefficients::constant(1.0, 0.0, 0.0, 4.0, &square()).with_lower(
            ComplexField::zero(square()),
            ComplexField::real(1.0, square()),
            ComplexField::zero(square()),
            ComplexField::zero(square()),
        );
        let bv = derive_bv(&RealEllipticSystem::homogeneous(coeffs, square()).unwrap()).unwrap();
        assert!(close(at(&bv.mu, 0.5, 0.5), c(1.0 / 3.0, 0.0), 1e-15));
        assert!(close(at(&bv.a, 0.5, 0.5), c(0.0, -1.0 / 3.0), 1e-15));
        assert!(close(at(&bv.b, 0.5, 0.5), c(0.0, 1.0 / 3.0), 1e-15));
    }

    #[test]
    fn residual_examples() {
        let zero = BVData::constant(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), square()).unwrap();
        let r = bv_residual(&zero, &field(Expr::z().powi(2))).unwrap();
        assert_eq!(r.max_abs(16), 0.0);
        let t = c(0.7, -0.2);
        let bt = BVData::constant(c(0.0, 0.0), c(0.0, 0.0), t, c(0.0, 0.0), square()).unwrap();
        let r = bv_residual(&bt, &ComplexField::real(1.0, square())).unwrap();
        assert_eq!(at(&r, 0.1, 0.1), t);
    }

    #[test]
    fn bv_data_rejects_unit_mu() {
        let err = BVData::constant(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), square()).unwrap_err();
        assert!(matches!(err, Error::MuNearUnitCircle { .. }));
    }

    #[test]
    fn manufactured_end_to_end() {
        let coeffs = Coefficients::principal(
            field(Expr::real(1.5) + Expr::x() * 0.5),
            field(Expr::y() * 0.3),
            field((Expr::x() * Expr::y()).exp() * 0.1),
            field(Expr::real(1.0) + Expr::y().powi(2)),
        )
        .with_lower(field(Expr::x()), field(Expr::real(-0.4)), field(Expr::y() * Expr::x()), field(Expr::real(0.5)));
        let u = field((Expr::x() * 0.7).exp() * Expr::y());
        let v = field(Expr::x().powi(3) - Expr::y() * Expr::x());
        let (f1, f2) = crate::elliptic::manufacture_forcing(&coeffs, &u, &v).unwrap();
        let sys = RealEllipticSystem::new(coeffs, f1, f2, square()).unwrap();
        let d = derive(&sys).unwrap();
        assert!(d.obstruction.g2.max_abs(16) > 1e-3);
        let w = spectral_unknown(&sys, &d.structure, &u, &v);
        let r = bv_residual(&d.bv, &w).unwrap();
        assert!(r.max_abs(24) <= 1e-10, "{}", r.max_abs(24));
        for (name, res) in identity_residuals(&d, 24).unwrap() {
            assert!(res <= 1e-12, "{name}: {res}");
        }
    }
}
