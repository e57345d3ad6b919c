use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bvlab::acceptance::{self, CRITERIA};
use bvlab::json::{bv_from_json, bv_to_json, system_from_json, transform_from_json, Transform};
use bvlab::report::{emit_report, Report};
use bvlab::scenario::{self, read_json, uniformizer_path};
use bvlab::suites::{self, Profile};
use bvlab_core::corpus::manufactured_systems;
use bvlab_core::pipeline::BVData;
use bvlab_core::Point;
use clap::{Parser, Subcommand};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "bvlab", version, about = "Beltrami-Vekua numerical laboratory")]
struct Cli {
    /// Cells (or nodes) per axis; a power of two in [16, 2048].
    #[arg(long, global = true, default_value_t = 256)]
    n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "bvlab-out")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Profile::Strict)]
    tolerance_profile: Profile,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Real system JSON to BV data plus stage identity residuals.
    Derive { system: PathBuf },
    /// Mass of the data scaled by each `t`.
    Mass {
        bv: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        t: Vec<f64>,
    },
    /// Apply a gauge transform.
    Gauge { bv: PathBuf, transform: PathBuf },
    /// Pull the data back along a diffeomorphism.
    Pullback { bv: PathBuf, transform: PathBuf },
    /// Vekua normal form.
    Reduce {
        bv: PathBuf,
        /// `constant` or `numeric` uniformizer.
        #[arg(long, default_value = "constant")]
        path: String,
    },
    /// Cauchy transform of the data's A coefficient.
    Cauchy {
        bv: PathBuf,
        /// Evaluation points `x,y`; the full grid when omitted.
        #[arg(long = "at", value_parser = parse_point)]
        points: Vec<Point>,
    },
    /// Zeros of the B coefficient.
    Zeros {
        bv: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        tol_rel: f64,
    },
    /// Functional equation behind the uniqueness of the density.
    CheckUniqueness {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Scaling of the mass-like F functional under dilation.
    CheckFScaling {
        bv: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.3333333333333333,2,10")]
        r: Vec<f64>,
    },
    /// Identity suite for one system, or the acceptance criteria without one.
    Verify {
        system: Option<PathBuf>,
        /// Run only these acceptance criteria.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// Residual convergence of manufactured solutions on node grids.
    Convergence {
        /// A system with a solution; the built-in corpus when omitted.
        system: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = acceptance::CONVERGENCE_SIZES)]
        sizes: Vec<usize>,
    },
    /// Execute a scenario file.
    Run { scenario: PathBuf },
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Point::new(x, y))
}

fn load_bv(path: &Path) -> Result<BVData> {
    bv_from_json(&read_json(path)?).with_context(|| format!("schema of {}", path.display()))
}

fn write_artifact(dir: &Path, name: &str, v: &Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.json"));
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(&path, s).with_context(|| format!("writing {}", path.display()))
}

fn execute(cli: &Cli) -> Result<(Report, Vec<(String, Value)>)> {
    let n = cli.n;
    scenario::check_resolution(n)?;
    let mut artifacts = Vec::new();
    let report = match &cli.command {
        Command::Derive { system } => {
            let input = system_from_json(&read_json(system)?).context("schema of system")?;
            let (r, bv) = suites::derive_report(&input, n, cli.tolerance_profile)?;
            artifacts.push(("bv".into(), bv_to_json(&bv)?));
            r
        }
        Command::Mass { bv, t } => suites::mass_report(&load_bv(bv)?, n, t)?,
        Command::Gauge { bv, transform } | Command::Pullback { bv, transform } => {
            let data = load_bv(bv)?;
            let t = transform_from_json(&read_json(transform)?, data.domain()).context("schema of transform")?;
            let (r, out) = match (&cli.command, t) {
                (Command::Gauge { .. }, Transform::Gauge(g)) => suites::gauge_report(&data, &g)?,
                (Command::Pullback { .. }, Transform::Map(d)) => suites::pullback_report(&data, &d, n)?,
                _ => bail!("transform type does not match the subcommand"),
            };
            artifacts.push(("bv".into(), bv_to_json(&out)?));
            r
        }
        Command::Reduce { bv, path } => {
            let (r, nf) = suites::reduce_report(&load_bv(bv)?, uniformizer_path(path)?, n)?;
            artifacts.push(("normal_form".into(), suites::normal_form_json(&nf)?));
            r
        }
        Command::Cauchy { bv, points } => {
            let data = load_bv(bv)?;
            suites::cauchy_report(&data.a, data.domain(), points, n)?
        }
        Command::Zeros { bv, tol_rel } => {
            let data = load_bv(bv)?;
            suites::zeros_report(&data.b, data.domain(), n, *tol_rel)?
        }
        Command::CheckUniqueness { samples } => suites::uniqueness_report(*samples, cli.seed)?,
        Command::CheckFScaling { bv, r } => suites::f_scaling_report(&load_bv(bv)?, r, n)?,
        Command::Verify { system: Some(system), .. } => {
            let input = system_from_json(&read_json(system)?).context("schema of system")?;
            suites::derive_report(&input, n, cli.tolerance_profile)?.0
        }
        Command::Verify { system: None, criteria } if criteria.is_empty() => scenario::acceptance_report(cli.seed)?,
        Command::Verify { system: None, criteria } => {
            let mut report = Report::new("verify");
            report.param("seed", cli.seed).param("criteria", criteria.clone());
            for &id in criteria {
                if !CRITERIA.iter().any(|(k, _)| *k == id) {
                    bail!("no acceptance criterion {id}");
                }
                let c = acceptance::run(id, cli.seed)?;
                println!("{}", c.line());
                for check in c.checks {
                    report.check(bvlab::report::Check { name: format!("{} {}: {}", c.id, c.title, check.name), ..check });
                }
            }
            report
        }
        Command::Convergence { system, sizes } => {
            let cases = match system {
                Some(p) => {
                    let input = system_from_json(&read_json(p)?).context("schema of system")?;
                    vec![suites::manufactured_case(&input)?]
                }
                None => manufactured_systems()?,
            };
            suites::convergence_report(&cases, sizes)?
        }
        Command::Run { scenario } => {
            let out = scenario::run_file(scenario)?;
            artifacts = out.artifacts;
            out.report
        }
    };
    Ok((report, artifacts))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BVLAB_THREADS") {
        let threads: usize = v.parse().with_context(|| format!("BVLAB_THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| {
        let (report, artifacts) = execute(&cli)?;
        for (name, v) in &artifacts {
            write_artifact(&cli.out_dir, name, v)?;
        }
        emit_report(&report, &cli.out_dir)?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            print!("{}", report.summary());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
