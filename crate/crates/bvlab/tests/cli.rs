use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bvlab-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn bvlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvlab")).args(args).arg("--out-dir").arg(out).output().expect("spawn bvlab")
}

#[test]
fn mass_scenario_is_byte_stable() {
    let scenario = scenarios().join("mass_family.json");
    let (a, b) = (scratch("mass-a"), scratch("mass-b"));
    for dir in [&a, &b] {
        let out = bvlab(&["run", scenario.to_str().unwrap()], dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["report.json", "summary.txt", "mass.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let csv = fs::read_to_string(a.join("mass.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,mass,estimate,error"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn failing_check_sets_exit_status_and_is_named() {
    let dir = scratch("fail");
    fs::create_dir_all(&dir).unwrap();
    let bv = scenarios().join("unit_disk_b1.json");
    let scenario = dir.join("strict.json");
    let text = format!(
        r#"{{"kind": "mass", "inputs": {{"bv": {:?}}}, "parameters": {{"n": 16, "tolerances": {{"relative error at t = 1": 1e-12}}}}}}"#,
        bv.to_str().unwrap()
    );
    fs::write(&scenario, text).unwrap();
    let out = bvlab(&["run", scenario.to_str().unwrap()], &dir.join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL relative error at t = 1"));
}

#[test]
fn bad_inputs_exit_with_errors() {
    let dir = scratch("bad");
    let bv = scenarios().join("unit_disk_b1.json");
    let out = bvlab(&["mass", bv.to_str().unwrap(), "--n", "100"], &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("power of two"));
    let out = bvlab(&["mass", "no-such-file.json"], &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-file.json"));
}

#[test]
fn subcommands_write_artifacts() {
    let dir = scratch("sub");
    let s = scenarios();
    let system = s.join("cauchy_riemann.json");
    let out = bvlab(&["derive", system.to_str().unwrap(), "--n", "32"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bv: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("bv.json")).unwrap()).unwrap();
    assert!(bv.get("mu").is_some() && bv.get("domain").is_some());

    let pair = s.join("b_equals_z.json");
    let out = bvlab(&["zeros", pair.to_str().unwrap(), "--n", "128"], &dir);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["count"], 1);

    let out = bvlab(&["cauchy", s.join("ellipse.json").to_str().unwrap(), "--at", "0.3,0", "--n", "64"], &dir);
    assert!(out.status.success());
    let out = bvlab(&["check-uniqueness", "--samples", "200"], &dir);
    assert!(out.status.success());
    let out = bvlab(&["verify", "--criteria", "11,12", "--n", "16"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS 11"));
}
