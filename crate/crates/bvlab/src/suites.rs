//! One function per command: run the computation, collect checks, build a
//! [`Report`].

use anyhow::{Context, Result};
use bvlab_core::corpus::ManufacturedCase;
use bvlab_core::elliptic::validate_ellipticity;
use bvlab_core::invariants::{
    check_density_uniqueness, f_noninvariance_ratio, mass, mass_on, theta_density, zero_count, MassReport, ZeroSet,
};
use bvlab_core::pipeline::{bv_residual, derive, identity_residuals, spectral_unknown, BVData};
use bvlab_core::reduction::{cauchy_transform, cauchy_transform_grid, normal_domain, normal_form, NormalFormResult, UniformizerPath};
use bvlab_core::rng::CorpusRng;
use bvlab_core::symmetry::{apply_gauge, closure_residual, conformal_residual, pullback, Diffeomorphism, Gauge};
use bvlab_core::{Complex64, ComplexField, Domain, Point, CHECK_RESOLUTION};
use serde_json::{json, Value};

use crate::json::{bv_to_json, complex_to_json, grid_to_json, map_to_json, SystemInput};
use crate::report::{Check, Limit, Report, Table};

/// Pointwise identities of the derivation and the BV form.
pub const IDENTITY_TOL: f64 = 1e-12;
/// End-to-end manufactured residual and diffeomorphism covariance.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Accepted range of `log2(e(N) / e(2N))` for second-order quantities.
pub const RATE_RANGE: (f64, f64) = (1.7, 2.3);
/// Relative tolerance of closed-form mass comparisons.
pub const MASS_REL_TOL: f64 = 2e-2;
/// Interior `|A'|` bound after the gauge step at 256 cells.
pub const GAUGE_A_TOL: f64 = 5e-2;
/// Largest sampled `|mu'|` after reduction on the constant path.
pub const NORMAL_MU_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Check inputs as given, with exact-derivative tolerances.
    Strict,
    /// Sample inputs on grids and judge derivative-bearing identities by
    /// their refinement rate.
    Grid,
}

pub fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// One rate check per consecutive pair; all-tiny sequences are accepted
/// outright since their ratios are rounding noise.
pub fn rate_checks(name: &str, sizes: &[usize], errors: &[f64]) -> Vec<Check> {
    if errors.iter().all(|e| *e <= IDENTITY_TOL) {
        return vec![Check::at_most(format!("{name}: max error"), errors.iter().cloned().fold(0.0, f64::max), IDENTITY_TOL)];
    }
    rates(errors)
        .into_iter()
        .zip(sizes.windows(2))
        .map(|(r, w)| Check::new(format!("{name}: rate {}->{}", w[0], w[1]), r, Limit::Between(RATE_RANGE.0, RATE_RANGE.1)))
        .collect()
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn mass_json(m: &MassReport) -> Value {
    json!({
        "value": m.value,
        "resolution": m.resolution,
        "refined_value": m.refined_value,
        "error_estimate": m.error_estimate,
        "blowup_flag": m.blowup_flag,
    })
}

/// The input as a manufactured case; it must carry a solution.
pub fn manufactured_case(input: &SystemInput) -> Result<ManufacturedCase> {
    let (u, v) = input.solution.clone().context("a solution {\"u\", \"v\"} is required")?;
    Ok(ManufacturedCase { name: "input", system: input.system.clone(), u, v })
}

/// Stage identities of the derivation. With the grid profile the system is
/// sampled at `n + 1` and `2n + 1` nodes.
pub fn derive_report(input: &SystemInput, n: usize, profile: Profile) -> Result<(Report, BVData)> {
    let mut report = Report::new("derive");
    report.param("n", n).param("profile", serde_json::to_value(profile)?);
    let ell = validate_ellipticity(&input.system, CHECK_RESOLUTION).context("stage ellipticity")?;
    report.result("ellipticity", json!({"min_a11": ell.min_a11, "min_discriminant": ell.min_discriminant}));
    report.check(Check::holds("ellipticity", ell.pass));
    match profile {
        Profile::Strict => {
            let d = derive(&input.system).context("stage derive")?;
            for (name, r) in identity_residuals(&d, CHECK_RESOLUTION)? {
                report.check(Check::at_most(name, r, IDENTITY_TOL));
            }
            if let Some((u, v)) = &input.solution {
                let w = spectral_unknown(&input.system, &d.structure, u, v);
                let r = bv_residual(&d.bv, &w)?.max_abs_checked(CHECK_RESOLUTION);
                report.check(Check::at_most("end_to_end", r, RESIDUAL_TOL));
            }
            Ok((report, d.bv))
        }
        Profile::Grid => {
            let sizes = [n + 1, 2 * n + 1];
            let mut transport = Vec::new();
            let mut end_to_end = Vec::new();
            let mut out = None;
            for &m in &sizes {
                let system = input.system.on_grid(m)?;
                let d = derive(&system).context("stage derive")?;
                for (name, r) in identity_residuals(&d, CHECK_RESOLUTION)? {
                    if name == "transport" {
                        transport.push(r);
                    } else {
                        report.check(Check::at_most(format!("{name} (n = {m})"), r, IDENTITY_TOL));
                    }
                }
                if input.solution.is_some() {
                    let case = manufactured_case(input)?.on_grid(m)?;
                    let w = spectral_unknown(&case.system, &d.structure, &case.u, &case.v);
                    end_to_end.push(bv_residual(&d.bv, &w)?.max_abs_interior(CHECK_RESOLUTION));
                }
                out.get_or_insert(d.bv);
            }
            report.extend(rate_checks("transport", &sizes, &transport));
            if !end_to_end.is_empty() {
                report.extend(rate_checks("end_to_end", &sizes, &end_to_end));
            }
            Ok((report, out.expect("at least one size")))
        }
    }
}

fn domain_area(d: &Domain) -> Option<f64> {
    match d {
        Domain::Disk { radius, .. } => Some(core::f64::consts::PI * radius * radius),
        Domain::Rectangle(r) => Some(r.width() * r.height()),
        Domain::Image(_) => None,
    }
}

/// `area |B|^2 / (1 - |mu|^2)` for constant `mu` and `B` on a disk or
/// rectangle.
pub fn closed_form_mass(bv: &BVData) -> Option<f64> {
    let mu = bv.mu.as_const()?;
    let b = bv.b.as_const()?;
    Some(domain_area(bv.domain())? * b.norm_sqr() / (1.0 - mu.norm_sqr()))
}

fn scaled(bv: &BVData, t: f64) -> BVData {
    BVData::new_unchecked(bv.mu.clone(), bv.a.clone(), bv.b.scale(Complex64::new(t, 0.0)), bv.f.clone(), bv.domain().clone())
}

/// Mass of `(mu, A, tB, F)` for each `t`, with a `t,mass,estimate,error`
/// table; `error` is filled when a closed form is known.
pub fn mass_report(bv: &BVData, n: usize, ts: &[f64]) -> Result<Report> {
    let mut report = Report::new("mass");
    report.param("n", n).param("t", ts.to_vec());
    let mut table = Table::new("mass", &["t", "mass", "estimate", "error"]);
    let mut rows = Vec::new();
    for &t in ts {
        let data = scaled(bv, t);
        let m = mass(&data, n).context("stage mass")?;
        let exact = closed_form_mass(&data);
        let error = exact.map(|e| (m.value - e).abs());
        table.push(&[Some(t), Some(m.value), Some(m.error_estimate), error]);
        if let Some(e) = exact {
            report.check(Check::at_most(format!("relative error at t = {t}"), (m.value - e).abs() / e.max(f64::MIN_POSITIVE), MASS_REL_TOL));
        }
        rows.push(json!({"t": t, "mass": mass_json(&m), "closed_form": exact}));
    }
    report.result("masses", rows);
    report.tables.push(table);
    Ok(report)
}

/// Gauge action with its invariance checks.
pub fn gauge_report(bv: &BVData, g: &Gauge) -> Result<(Report, BVData)> {
    let mut report = Report::new("gauge");
    let out = apply_gauge(bv, g).context("stage gauge")?;
    let n = CHECK_RESOLUTION;
    report.check(Check::new("mu unchanged", (&out.mu - &bv.mu).max_abs(n), Limit::Equals(0.0)));
    let modulus = out.b.abs2().sqrt() - bv.b.abs2().sqrt();
    report.check(Check::at_most("|B'| - |B|", modulus.max_abs_checked(n), IDENTITY_TOL));
    let theta = theta_density(&out)? - theta_density(bv)?;
    report.check(Check::at_most("theta' - theta", theta.max_abs_checked(n), IDENTITY_TOL));
    report.result("min_modulus", g.min_modulus(bv.domain()));
    Ok((report, out))
}

/// Pullback with closure, conformal, covariance and mass checks.
pub fn pullback_report(bv: &BVData, d: &Diffeomorphism, n: usize) -> Result<(Report, BVData)> {
    let mut report = Report::new("pullback");
    report.param("n", n);
    let out = pullback(bv, d).context("stage pullback")?;
    let k = CHECK_RESOLUTION;
    report.check(Check::at_most("closure", closure_residual(bv, d)?.max_abs_checked(k), IDENTITY_TOL));
    report.check(Check::at_most("conformal", conformal_residual(bv, d)?.max_abs_checked(k), IDENTITY_TOL));
    report.check(Check::new("max |mu*|", out.mu.max_abs(k), Limit::Below(1.0)));
    let covariance = theta_density(&out)? - d.jacobian() * theta_density(bv)?.compose(&d.forward.map);
    report.check(Check::at_most("theta covariance", covariance.max_abs_checked(k), RESIDUAL_TOL));
    let before = mass_on(bv, &d.target, n).context("stage mass")?;
    let after = mass(&out, n).context("stage mass")?;
    report.check(Check::at_most("mass gap", before.gap(&after), before.error_estimate + after.error_estimate));
    report.result("mass_before", mass_json(&before)).result("mass_after", mass_json(&after));
    Ok((report, out))
}

/// Normal form with its residual table, refinement check and invariants.
pub fn reduce_report(bv: &BVData, path: UniformizerPath, n: usize) -> Result<(Report, NormalFormResult)> {
    let mut report = Report::new("reduce");
    report.param("n", n).param("path", format!("{path:?}"));
    let r = normal_form(bv, path, n).context("stage normal form")?;
    let fine = normal_form(bv, path, 2 * n).context("stage normal form (refined)")?;
    let mut table = Table::new("residuals", &["n", "beltrami", "mu", "a"]);
    for (m, x) in [(n, &r), (2 * n, &fine)] {
        table.push(&[Some(m as f64), Some(x.residuals.beltrami), Some(x.residuals.mu), Some(x.residuals.a)]);
    }
    report.tables.push(table);
    if matches!(path, UniformizerPath::Constant) {
        report.check(Check::at_most("beltrami residual", r.residuals.beltrami, 0.0));
        report.check(Check::at_most("max |mu'|", r.residuals.mu, NORMAL_MU_TOL));
    }
    if n >= 256 {
        report.check(Check::at_most(format!("max interior |A'| (n = {n})"), r.residuals.a, GAUGE_A_TOL));
    }
    if r.residuals.a > 0.0 {
        report.check(Check::new(format!("|A'| decreases at n = {}", 2 * n), fine.residuals.a, Limit::Below(r.residuals.a)));
    }
    let before = mass(bv, n).context("stage mass")?;
    let after = mass_on(&r.bv_normal, normal_domain(&r), n).context("stage mass")?;
    report.check(Check::at_most("mass gap", before.gap(&after), before.error_estimate + after.error_estimate));
    report.result("mass_before", mass_json(&before)).result("mass_after", mass_json(&after));
    let zs = |b: &ComplexField, d: &Domain| zero_count(b, d, n, bvlab_core::invariants::ZERO_TOL_REL).map(|z| z.count());
    let z0 = zs(&bv.b, bv.domain())?;
    let z1 = zs(&r.bv_normal.b, normal_domain(&r))?;
    report.check(Check::holds("zero count of B preserved", z0 == z1));
    report.result("zeros", json!({"before": z0, "after": z1}));
    Ok((report, r))
}

pub fn normal_form_json(r: &NormalFormResult) -> Result<Value> {
    Ok(json!({
        "Phi": map_to_json(&r.phi)?,
        "phi": crate::json::field_to_json(&r.gauge.phi)?,
        "bv_normal": bv_to_json(&r.bv_normal)?,
        "residuals": {"beltrami": r.residuals.beltrami, "mu": r.residuals.mu, "a": r.residuals.a},
    }))
}

/// Pointwise transform at `points`, or the gridded transform when none are
/// given.
pub fn cauchy_report(a: &ComplexField, domain: &Domain, points: &[Point], n: usize) -> Result<Report> {
    let mut report = Report::new("cauchy");
    report.param("n", n);
    if points.is_empty() {
        report.result("grid", grid_to_json(&cauchy_transform_grid(a, domain, n).context("stage cauchy")?));
        return Ok(report);
    }
    let mut values = Vec::new();
    for p in points {
        let t = cauchy_transform(a, domain, *p, n).with_context(|| format!("stage cauchy at ({}, {})", p.x, p.y))?;
        values.push(json!({"z": [p.x, p.y], "value": complex_to_json(t.value), "error_estimate": t.error_estimate}));
    }
    report.result("values", values);
    Ok(report)
}

pub fn zeros_report(b: &ComplexField, domain: &Domain, n: usize, tol_rel: f64) -> Result<Report> {
    let mut report = Report::new("zeros");
    report.param("n", n).param("tol_rel", tol_rel);
    match zero_count(b, domain, n, tol_rel).context("stage zeros")? {
        ZeroSet::IdenticallyZero => {
            report.result("identically_zero", true);
        }
        ZeroSet::Isolated { count, locations } => {
            report.result("identically_zero", false).result("count", count);
            report.result("locations", locations.iter().map(|p| json!([p.x, p.y])).collect::<Vec<_>>());
        }
    }
    Ok(report)
}

pub fn uniqueness_report(samples: usize, seed: u64) -> Result<Report> {
    let mut report = Report::new("check-uniqueness");
    report.param("samples", samples).param("seed", seed);
    let u = check_density_uniqueness(samples, &mut CorpusRng::new(seed));
    report.check(Check::at_most("functional equation residual", u.max_residual, IDENTITY_TOL));
    report.check(Check::new("constant witness residual at s = 1/2", u.witness, Limit::AtLeast(0.5)));
    Ok(report)
}

pub fn f_scaling_report(bv: &BVData, rs: &[f64], n: usize) -> Result<Report> {
    let mut report = Report::new("check-f-scaling");
    report.param("r", rs.to_vec()).param("n", n);
    let mut table = Table::new("f_scaling", &["r", "ratio", "expected"]);
    for &r in rs {
        let ratio = f_noninvariance_ratio(bv, r, n).context("stage f scaling")?;
        table.push(&[Some(r), Some(ratio), Some(r * r)]);
        report.check(Check::at_most(format!("ratio - r^2 at r = {r}"), (ratio - r * r).abs(), RESIDUAL_TOL));
    }
    report.tables.push(table);
    Ok(report)
}

/// End-to-end residual of manufactured cases on grids of `sizes` nodes.
pub fn convergence_report(cases: &[ManufacturedCase], sizes: &[usize]) -> Result<Report> {
    let mut report = Report::new("convergence");
    report.param("sizes", sizes.to_vec());
    let mut table = Table::new("convergence", &["case", "n", "residual", "rate"]);
    for case in cases {
        let mut errors = Vec::new();
        for &n in sizes {
            let g = case.on_grid(n).with_context(|| format!("stage sampling {}", case.name))?;
            let d = derive(&g.system).with_context(|| format!("stage derive {}", case.name))?;
            let w = spectral_unknown(&g.system, &d.structure, &g.u, &g.v);
            errors.push(bv_residual(&d.bv, &w)?.max_abs_interior(CHECK_RESOLUTION));
        }
        let rs = rates(&errors);
        for (k, (&n, e)) in sizes.iter().zip(&errors).enumerate() {
            let rate = if k == 0 { String::new() } else { rs[k - 1].to_string() };
            table.rows.push(vec![case.name.to_string(), n.to_string(), e.to_string(), rate]);
        }
        report.extend(rate_checks(case.name, sizes, &errors));
        report.result(case.name, errors.iter().map(|e| finite_or_null(*e)).collect::<Vec<_>>());
    }
    report.tables.push(table);
    Ok(report)
}
