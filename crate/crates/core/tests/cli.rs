use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geoflow"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(cfg: &Path, out: &Path) -> i32 {
    let o = bin().arg("run").arg(cfg).arg("--out").arg(out).output().unwrap();
    o.status.code().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

/// A config file derived from a shipped one.
fn edited(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(config(name)).unwrap()).unwrap();
    edit(&mut v);
    let p = dir.join(format!("edited-{name}"));
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn check<'a>(rep: &'a Value, name: &str) -> &'a Value {
    rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn magnon_run_passes_with_stencil_order_slopes() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run(&config("hf-magnon.json"), out.path()), 0);
    let rep = report(&out.path().join("hf-magnon"));
    assert_eq!(rep["status"], "pass");
    let lax = check(&rep, "lax");
    let s = lax["slopes"]["consistent_max"].as_f64().unwrap();
    assert!((s - 2.0).abs() < 0.3, "{s}");
    assert_eq!(rep["checks"].as_array().unwrap().len(), 3);
    for a in rep["artifacts"].as_array().unwrap() {
        let text = std::fs::read(out.path().join("hf-magnon").join(a["name"].as_str().unwrap())).unwrap();
        assert_eq!(a["bytes"].as_u64().unwrap() as usize, text.len());
    }
}

#[test]
fn expected_blowup_exits_zero() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run(&config("burgers-blowup.json"), out.path()), 0);
    let rep = report(&out.path().join("burgers-blowup"));
    assert_eq!(rep["status"], "expected-blowup");
    assert!(rep["blowup"]["relative_gap"].as_f64().unwrap() <= 0.02);
}

#[test]
fn undeclared_blowup_exits_three() {
    let out = tempfile::tempdir().unwrap();
    let cfg = edited(out.path(), "burgers-blowup.json", |v| {
        v.as_object_mut().unwrap().remove("expect_blowup");
    });
    assert_eq!(run(&cfg, out.path()), 3);
}

#[test]
fn missing_blowup_fails() {
    let out = tempfile::tempdir().unwrap();
    let cfg = edited(out.path(), "coupled-heat.json", |v| v["expect_blowup"] = serde_json::json!({"t": 1.0}));
    assert_eq!(run(&cfg, out.path()), 2);
}

#[test]
fn failed_check_exits_two() {
    let out = tempfile::tempdir().unwrap();
    let cfg = edited(out.path(), "hf-magnon.json", |v| v["checks"] = serde_json::json!([{"name": "exact", "tolerance": 1e-9}]));
    assert_eq!(run(&cfg, out.path()), 2);
    assert_eq!(report(&out.path().join("hf-magnon"))["status"], "fail");
}

#[test]
fn invalid_configs_exit_four_without_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let cases: Vec<Box<dyn FnOnce(&mut Value)>> = vec![
        Box::new(|v| v["flow"] = "teleport".into()),
        Box::new(|v| v["params"]["gamma"] = 1.0.into()),
        Box::new(|v| v["initial"] = serde_json::json!({"preset": "sphere-cap", "rho": 1.0})),
        Box::new(|v| v["checks"] = serde_json::json!(["volume"])),
    ];
    for (k, edit) in cases.into_iter().enumerate() {
        let cfg = edited(out.path(), "hf-magnon.json", edit);
        let dest = out.path().join(format!("case{k}"));
        assert_eq!(run(&cfg, &dest), 4, "case {k}");
        assert!(!dest.exists(), "case {k} wrote artifacts");
        assert_eq!(bin().arg("validate").arg(&cfg).status().unwrap().code(), Some(4));
    }
    // step-size stability is checked when the run starts, before any step
    let cfg = edited(out.path(), "hf-magnon.json", |v| v["params"]["dt"] = 0.5.into());
    let dest = out.path().join("unstable");
    assert_eq!(run(&cfg, &dest), 4);
    assert!(!dest.exists());
}

#[test]
fn runs_are_byte_identical() {
    let out = tempfile::tempdir().unwrap();
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    assert_eq!(run(&config("mi-rotor.json"), &a), 0);
    assert_eq!(run(&config("mi-rotor.json"), &b), 0);
    let (a, b) = (a.join("mi-rotor"), b.join("mi-rotor"));
    let names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() > 3);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn config_echo_reruns_identically() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run(&config("coupled-heat.json"), &out.path().join("first")), 0);
    let first = report(&out.path().join("first/coupled-heat"));
    let echo = out.path().join("echo.json");
    std::fs::write(&echo, serde_json::to_string(&first["config"]).unwrap()).unwrap();
    assert_eq!(run(&echo, &out.path().join("second")), 0);
    let second = report(&out.path().join("second/coupled-heat"));
    assert_eq!(first["artifacts"], second["artifacts"]);
    assert_eq!(first["checks"], second["checks"]);
    assert_eq!(first["config"], second["config"]);
}

#[test]
fn shipped_configs_validate() {
    for e in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let p = e.unwrap().path();
        let o = bin().arg("validate").arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn list_presets_names_every_preset() {
    let o = bin().arg("list-presets").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for p in ["constant", "magnon", "sphere-cap", "random-smooth", "fourier-mode", "lambda-linear", "lambda-sine"] {
        assert!(text.lines().any(|l| l.starts_with(p)), "{p}");
    }
}

#[test]
fn convergence_tables() {
    let out = tempfile::tempdir().unwrap();
    let o = bin().args(["convergence"]).arg(config("hf-magnon.json")).args(["--levels", "3", "--out"]).arg(out.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("hf-magnon-convergence/convergence.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("exact,relative_l2,")).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    let slope: f64 = cols[cols.len() - 2].parse().unwrap();
    assert!((slope - 2.0).abs() < 0.3, "{slope}");

    let o = bin().args(["convergence"]).arg(config("hf-plane.json")).args(["--levels", "3", "--out"]).arg(out.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("hf-plane-convergence/convergence.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        for v in &cols[2..5] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }
}
