//! Scenario files: a kind, input file references and parameters.
//!
//! ```json
//! {"kind": "mass", "inputs": {"bv": "disk.json"}, "parameters": {"n": 512, "t": [0.5, 1, 1.5]}}
//! ```
//!
//! Input paths are relative to the scenario file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use bvlab_core::corpus::manufactured_systems;
use bvlab_core::reduction::UniformizerPath;
use serde::Deserialize;
use serde_json::Value;

use crate::acceptance::{self, CRITERIA};
use crate::json::{bv_from_json, bv_to_json, system_from_json, transform_from_json, SystemInput, Transform};
use crate::report::{Check, Limit, Report};
use crate::suites::{self, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Derive,
    Mass,
    Gauge,
    Pullback,
    Reduce,
    VerifySuite,
    Convergence,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub system: Option<PathBuf>,
    pub bv: Option<PathBuf>,
    pub transform: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    /// Scale factors for mass sweeps.
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    /// Grid sizes for convergence studies.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// `"constant"` or `"numeric"` for reductions.
    #[serde(default = "default_path")]
    pub path: String,
    /// Replacement bounds keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for Parameters {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("defaults")
    }
}

fn default_n() -> usize {
    256
}

fn default_profile() -> Profile {
    Profile::Strict
}

fn default_t() -> Vec<f64> {
    vec![1.0]
}

fn default_sizes() -> Vec<usize> {
    acceptance::CONVERGENCE_SIZES.to_vec()
}

fn default_path() -> String {
    "constant".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub parameters: Parameters,
}

/// A report plus named JSON artifacts to write next to it.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub artifacts: Vec<(String, Value)>,
}

pub fn check_resolution(n: usize) -> Result<()> {
    ensure!(n.is_power_of_two() && (16..=2048).contains(&n), "N = {n} must be a power of two in [16, 2048]");
    Ok(())
}

pub fn load(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let s: Scenario = serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))?;
    check_resolution(s.parameters.n)?;
    Ok(s)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn input(base: &Path, p: &Option<PathBuf>, what: &str) -> Result<Value> {
    let p = p.as_ref().with_context(|| format!("scenario needs inputs.{what}"))?;
    read_json(&base.join(p))
}

pub fn uniformizer_path(name: &str) -> Result<UniformizerPath> {
    Ok(match name {
        "constant" => UniformizerPath::Constant,
        "numeric" => UniformizerPath::Numeric { max_iter: 60, tol: 1e-2 },
        _ => bail!("unknown reduction path {name}; expected constant or numeric"),
    })
}

/// Runs the acceptance criteria as one report.
pub fn acceptance_report(seed: u64) -> Result<Report> {
    let mut report = Report::new("verify");
    report.param("seed", seed);
    for (id, _) in CRITERIA {
        let c = acceptance::run(id, seed)?;
        for check in c.checks {
            report.check(Check { name: format!("{} {}: {}", c.id, c.title, check.name), ..check });
        }
    }
    Ok(report)
}

/// Executes a parsed scenario; `base` resolves relative input paths.
pub fn run(s: &Scenario, base: &Path) -> Result<Outcome> {
    let p = &s.parameters;
    let mut artifacts = Vec::new();
    let load_bv = || -> Result<_> { bv_from_json(&input(base, &s.inputs.bv, "bv")?).context("schema of inputs.bv") };
    let load_system = || -> Result<SystemInput> { system_from_json(&input(base, &s.inputs.system, "system")?).context("schema of inputs.system") };
    let mut report = match s.kind {
        Kind::Derive => {
            let (r, bv) = suites::derive_report(&load_system()?, p.n, p.profile)?;
            artifacts.push(("bv".into(), bv_to_json(&bv)?));
            r
        }
        Kind::Mass => suites::mass_report(&load_bv()?, p.n, &p.t)?,
        Kind::Gauge | Kind::Pullback => {
            let bv = load_bv()?;
            let t = transform_from_json(&input(base, &s.inputs.transform, "transform")?, bv.domain()).context("schema of inputs.transform")?;
            let (r, out) = match (s.kind, t) {
                (Kind::Gauge, Transform::Gauge(g)) => suites::gauge_report(&bv, &g)?,
                (Kind::Pullback, Transform::Map(d)) => suites::pullback_report(&bv, &d, p.n)?,
                _ => bail!("transform type does not match scenario kind"),
            };
            artifacts.push(("bv".into(), bv_to_json(&out)?));
            r
        }
        Kind::Reduce => {
            let (r, nf) = suites::reduce_report(&load_bv()?, uniformizer_path(&p.path)?, p.n)?;
            artifacts.push(("normal_form".into(), suites::normal_form_json(&nf)?));
            r
        }
        Kind::VerifySuite => match &s.inputs.system {
            Some(_) => suites::derive_report(&load_system()?, p.n, p.profile)?.0,
            None => acceptance_report(p.seed)?,
        },
        Kind::Convergence => {
            let cases = match &s.inputs.system {
                Some(_) => vec![suites::manufactured_case(&load_system()?)?],
                None => manufactured_systems()?,
            };
            suites::convergence_report(&cases, &p.sizes)?
        }
    };
    for (name, tol) in &p.tolerances {
        let mut found = false;
        for c in report.checks.iter_mut().filter(|c| &c.name == name) {
            *c = Check::new(c.name.clone(), c.value, Limit::AtMost(*tol));
            found = true;
        }
        ensure!(found, "tolerance override for unknown check {name:?}");
    }
    report.param("seed", p.seed);
    Ok(Outcome { report, artifacts })
}

pub fn run_file(path: &Path) -> Result<Outcome> {
    let s = load(path)?;
    run(&s, path.parent().unwrap_or(Path::new(".")))
}
