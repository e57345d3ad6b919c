//! The acceptance criteria, each a list of named checks with pinned
//! tolerances. Random corpora are drawn from `CorpusRng::new(seed + id)`.

use anyhow::Result;
use bvlab_core::corpus::{manufactured_systems, random_affine, random_bv, random_constant_bv, random_gauge};
use bvlab_core::invariants::{check_density_uniqueness, f_noninvariance_ratio, mass, mass_on, theta_density, zero_count, ZERO_TOL_REL};
use bvlab_core::pipeline::{bv_residual, derive, identity_residuals, spectral_unknown, BVData};
use bvlab_core::reduction::{
    cauchy_field, cauchy_transform, gauge_away_a, normal_domain, normal_form, reduce_to_vekua, uniformize_constant,
    UniformizerPath,
};
use bvlab_core::rng::CorpusRng;
use bvlab_core::symmetry::{apply_gauge, closure_residual, conformal_residual, pullback};
use bvlab_core::{Complex64, ComplexField, Domain, Expr, Point, CHECK_RESOLUTION};
use core::f64::consts::PI;

use crate::report::{Check, Limit};
use crate::suites::{rate_checks, GAUGE_A_TOL, IDENTITY_TOL, MASS_REL_TOL, NORMAL_MU_TOL, RESIDUAL_TOL};

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "mass family"),
    (2, "equal-mass pair"),
    (3, "constant data mass"),
    (4, "gauge invariance"),
    (5, "diffeomorphism covariance"),
    (6, "closure and conformal identities"),
    (7, "pipeline identity suite"),
    (8, "manufactured solutions"),
    (9, "reduction"),
    (10, "cauchy transform"),
    (11, "uniqueness functional equation"),
    (12, "forcing non-invariance"),
];

/// Grid sizes for the second-order convergence studies.
pub const CONVERGENCE_SIZES: [usize; 4] = [32, 64, 128, 256];

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// `PASS 3 constant data mass` or `FAIL ...` with the failing checks.
    pub fn line(&self) -> String {
        if self.passed() {
            format!("PASS {:>2} {} ({} checks)", self.id, self.title, self.checks.len())
        } else {
            let failed: Vec<String> = self.checks.iter().filter(|c| !c.pass).map(|c| c.to_string()).collect();
            format!("FAIL {:>2} {}: {}", self.id, self.title, failed.join("; "))
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn disk() -> Domain {
    Domain::unit_disk()
}

fn worst(name: &str, values: impl IntoIterator<Item = f64>, tol: f64) -> Check {
    Check::at_most(name, values.into_iter().fold(0.0, f64::max), tol)
}

fn rel(value: f64, exact: f64) -> f64 {
    (value - exact).abs() / exact
}

pub fn run(id: u8, seed: u64) -> Result<Criterion> {
    let title = CRITERIA.iter().find(|(k, _)| *k == id).map(|(_, t)| *t).unwrap_or("unknown");
    let mut rng = CorpusRng::new(seed.wrapping_add(id as u64));
    let checks = match id {
        1 => mass_family()?,
        2 => equal_mass_pair()?,
        3 => constant_mass(&mut rng)?,
        4 => gauge_invariance(&mut rng)?,
        5 => covariance(&mut rng)?,
        6 => closure_and_conformal(&mut rng)?,
        7 => pipeline_identities()?,
        8 => manufactured()?,
        9 => reduction(&mut rng)?,
        10 => cauchy(&mut rng)?,
        11 => uniqueness(&mut rng),
        12 => f_scaling(&mut rng)?,
        _ => anyhow::bail!("no criterion {id}"),
    };
    Ok(Criterion { id, title, checks })
}

fn mass_family() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for t in [0.5, 1.0, 1.5] {
        let bv = BVData::constant(c(0.0), c(0.0), c(t), c(0.0), disk())?;
        let coarse = mass(&bv, 256)?;
        let fine = mass(&bv, 512)?;
        out.push(Check::at_most(format!("t = {t}: relative error"), rel(fine.value, PI * t * t), MASS_REL_TOL));
        out.push(Check::new(format!("t = {t}: estimate decreases"), fine.error_estimate, Limit::Below(coarse.error_estimate)));
    }
    Ok(out)
}

fn equal_mass_pair() -> Result<Vec<Check>> {
    let flat = BVData::constant(c(0.0), c(0.0), c(core::f64::consts::FRAC_1_SQRT_2), c(0.0), disk())?;
    let z = ComplexField::expr(Expr::z(), disk());
    let linear = BVData::new(ComplexField::zero(disk()), ComplexField::zero(disk()), z, ComplexField::zero(disk()), disk())?;
    let m1 = mass(&flat, 512)?;
    let m2 = mass(&linear, 512)?;
    let z1 = zero_count(&flat.b, &disk(), 512, ZERO_TOL_REL)?.count();
    let z2 = zero_count(&linear.b, &disk(), 512, ZERO_TOL_REL)?.count();
    Ok(vec![
        Check::at_most("constant B: relative error", rel(m1.value, PI / 2.0), MASS_REL_TOL),
        Check::at_most("B = z: relative error", rel(m2.value, PI / 2.0), MASS_REL_TOL),
        Check::new("constant B: zero count", z1.map_or(f64::NAN, |k| k as f64), Limit::Equals(0.0)),
        Check::new("B = z: zero count", z2.map_or(f64::NAN, |k| k as f64), Limit::Equals(1.0)),
    ])
}

fn constant_mass(rng: &mut CorpusRng) -> Result<Vec<Check>> {
    let mut errors = Vec::new();
    for _ in 0..20 {
        let (mu0, b0, bv) = random_constant_bv(rng, &disk(), 0.9)?;
        let m = mass(&bv, 512)?;
        errors.push(rel(m.value, PI * b0.norm_sqr() / (1.0 - mu0.norm_sqr())));
    }
    Ok(vec![worst("max relative error over 20 draws", errors, MASS_REL_TOL)])
}

fn gauge_invariance(rng: &mut CorpusRng) -> Result<Vec<Check>> {
    let (mut theta, mut modulus) = (Vec::new(), Vec::new());
    for _ in 0..50 {
        let bv = random_bv(rng, &disk(), 1.0)?;
        let g = random_gauge(rng, &disk())?;
        let out = apply_gauge(&bv, &g)?;
        theta.push((theta_density(&out)? - theta_density(&bv)?).max_abs(CHECK_RESOLUTION));
        modulus.push((out.b.abs2().sqrt() - bv.b.abs2().sqrt()).max_abs(CHECK_RESOLUTION));
    }
    Ok(vec![worst("max |theta' - theta|", theta, IDENTITY_TOL), worst("max ||B'| - |B||", modulus, IDENTITY_TOL)])
}

fn covariance(rng: &mut CorpusRng) -> Result<Vec<Check>> {
    let mut residuals = Vec::new();
    let mut out = Vec::new();
    for k in 0..20 {
        let phi = random_affine(rng, &disk())?;
        let bv = random_bv(rng, &phi.target, 1.6)?;
        let pulled = pullback(&bv, &phi)?;
        let lhs = theta_density(&pulled)?;
        let rhs = phi.jacobian() * theta_density(&bv)?.compose(&phi.forward.map);
        residuals.push((lhs - rhs).max_abs(CHECK_RESOLUTION));
        if k < 5 {
            let before = mass_on(&bv, &phi.target, 256)?;
            let after = mass(&pulled, 256)?;
            out.push(Check::at_most(format!("draw {k}: mass gap"), before.gap(&after), before.error_estimate + after.error_estimate));
        }
    }
    out.insert(0, worst("max |theta* - J theta o Phi|", residuals, RESIDUAL_TOL));
    Ok(out)
}

fn closure_and_conformal(rng: &mut CorpusRng) -> Result<Vec<Check>> {
    let (mut closure, mut conformal) = (Vec::new(), Vec::new());
    for _ in 0..100 {
        let phi = random_affine(rng, &disk())?;
        let (_, _, bv) = random_constant_bv(rng, &phi.target, 0.9)?;
        closure.push(closure_residual(&bv, &phi)?.max_abs(CHECK_RESOLUTION));
        conformal.push(conformal_residual(&bv, &phi)?.max_abs(CHECK_RESOLUTION));
    }
    Ok(vec![worst("closure", closure, IDENTITY_TOL), worst("conformal", conformal, IDENTITY_TOL)])
}

fn pipeline_identities() -> Result<Vec<Check>> {
    let cases = manufactured_systems()?;
    let mut names: Vec<&'static str> = Vec::new();
    let mut maxima: Vec<f64> = Vec::new();
    for case in &cases {
        for (name, r) in identity_residuals(&derive(&case.system)?, CHECK_RESOLUTION)? {
            match names.iter().position(|n| *n == name) {
                Some(k) => maxima[k] = maxima[k].max(r),
                None => {
                    names.push(name);
                    maxima.push(r);
                }
            }
        }
    }
    let mut out: Vec<Check> = names.iter().zip(&maxima).map(|(n, r)| Check::at_most(*n, *r, IDENTITY_TOL)).collect();
    for case in &cases {
        let mut transport = Vec::new();
        for &n in &CONVERGENCE_SIZES {
            let d = derive(&case.system.on_grid(n)?)?;
            transport.push(identity_residuals(&d, CHECK_RESOLUTION)?.iter().find(|(k, _)| *k == "transport").map_or(f64::NAN, |r| r.1));
        }
        out.extend(rate_checks(&format!("{} grid transport", case.name), &CONVERGENCE_SIZES, &transport));
    }
    Ok(out)
}

fn manufactured() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for case in manufactured_systems()? {
        let d = derive(&case.system)?;
        let w = spectral_unknown(&case.system, &d.structure, &case.u, &case.v);
        out.push(Check::at_most(format!("{} expression residual", case.name), bv_residual(&d.bv, &w)?.max_abs(CHECK_RESOLUTION), RESIDUAL_TOL));
        let mut errors = Vec::new();
        for &n in &CONVERGENCE_SIZES {
            let g = case.on_grid(n)?;
            let d = derive(&g.system)?;
            let w = spectral_unknown(&g.system, &d.structure, &g.u, &g.v);
            errors.push(bv_residual(&d.bv, &w)?.max_abs_interior(CHECK_RESOLUTION));
        }
        out.extend(rate_checks(&format!("{} grid residual", case.name), &CONVERGENCE_SIZES, &errors));
    }
    Ok(out)
}

fn reduction(rng: &mut CorpusRng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut beltrami = Vec::new();
    let mut mu_after = Vec::new();
    for k in 0..10 {
        let mu0 = if k == 0 { c(1.0 / 3.0) } else { rng.disk(0.9) };
        let phi = uniformize_constant(mu0, disk())?;
        beltrami.push((&phi.forward.map_zbar - &(phi.forward.map_z.clone() * mu0)).max_abs(CHECK_RESOLUTION));
        let base = random_bv(rng, &disk(), 1.0)?;
        let bv = BVData::new_unchecked(ComplexField::constant(mu0, disk()), base.a, base.b, base.f, disk());
        mu_after.push(reduce_to_vekua(&bv, &phi)?.mu_residual);
    }
    out.push(Check::new("uniformizer Beltrami residual", beltrami.iter().cloned().fold(0.0, f64::max), Limit::Equals(0.0)));
    out.push(worst("max |mu'| after reduction", mu_after, NORMAL_MU_TOL));

    let z = ComplexField::expr(Expr::z(), disk());
    let flat = BVData::new(ComplexField::zero(disk()), z.conj(), z.clone(), ComplexField::zero(disk()), disk())?;
    let coarse = gauge_away_a(&flat, 256)?.a_residual;
    let fine = gauge_away_a(&flat, 512)?.a_residual;
    out.push(Check::at_most("max interior |A'| at n = 256", coarse, GAUGE_A_TOL));
    out.push(Check::new("max interior |A'| at n = 512", fine, Limit::Below(coarse)));

    let bv = BVData::constant(c(1.0 / 3.0), c(1.0), c(1.0), c(0.0), disk())?;
    let r = normal_form(&bv, UniformizerPath::Constant, 256)?;
    out.push(Check::at_most("normal form max |mu'|", r.residuals.mu, NORMAL_MU_TOL));
    out.push(Check::at_most("normal form max interior |A'|", r.residuals.a, GAUGE_A_TOL));
    let before = mass(&bv, 256)?;
    let after = mass_on(&r.bv_normal, normal_domain(&r), 256)?;
    out.push(Check::at_most("normal form mass gap", before.gap(&after), before.error_estimate + after.error_estimate));
    Ok(out)
}

fn cauchy(rng: &mut CorpusRng) -> Result<Vec<Check>> {
    let one = ComplexField::real(1.0, disk());
    let mut errors = Vec::new();
    for _ in 0..50 {
        let z = rng.annulus(0.2, 0.8);
        let t = cauchy_transform(&one, &disk(), Point::from_z(z), 256)?;
        errors.push((t.value - z.conj()).norm() / z.norm());
    }
    let mut out = vec![worst("T1 vs conj(z): max relative error", errors, 2e-2)];
    let a = ComplexField::expr(Expr::z() * Expr::zbar() + Expr::z().exp(), disk());
    let mut dbar = Vec::new();
    for n in [64, 128, 256] {
        let (_, tzb) = cauchy_field(&a, &disk(), n)?.wirtinger()?;
        dbar.push((&tzb - &a).max_abs_interior(CHECK_RESOLUTION));
    }
    out.push(Check::new("dbar(TA) - A at n = 128", dbar[1], Limit::Below(dbar[0])));
    out.push(Check::new("dbar(TA) - A at n = 256", dbar[2], Limit::Below(dbar[1])));
    Ok(out)
}

fn uniqueness(rng: &mut CorpusRng) -> Vec<Check> {
    let u = check_density_uniqueness(1000, rng);
    vec![
        Check::at_most("H = 1/(1 - s) residual", u.max_residual, IDENTITY_TOL),
        Check::new("constant H witness at s = 1/2", u.witness, Limit::AtLeast(0.5)),
    ]
}

fn f_scaling(rng: &mut CorpusRng) -> Result<Vec<Check>> {
    let bv = random_bv(rng, &disk(), 1.0)?;
    let mut out = Vec::new();
    for r in [1.0 / 3.0, 2.0, 10.0] {
        let ratio = f_noninvariance_ratio(&bv, r, 128)?;
        out.push(Check::at_most(format!("r = {r}: |ratio - r^2|"), (ratio - r * r).abs(), RESIDUAL_TOL));
    }
    Ok(out)
}
