//! Config-driven runs: validate, execute, check, write `out/<name>/`.

pub mod config;
pub mod execute;
pub mod report;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

pub use config::{preset_catalogue, CheckKind, CheckSpec, ConfigInvalid, FlowKind, Preset, RunConfig};
pub use execute::{execute, Artifact, CheckOutcome, FlowOutput, RunError};
pub use report::{to_json_17, ManifestEntry};

use crate::studies::fit_slope;

/// Primary norms at or below this count as exact; no slope is fitted.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Not evaluated because the flow blew up.
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Pass,
    Fail,
    ExpectedBlowup,
    UnexpectedBlowup,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Pass | RunStatus::ExpectedBlowup => 0,
            RunStatus::Fail => 2,
            RunStatus::UnexpectedBlowup => 3,
        }
    }
}

/// Norms of one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelNorms {
    pub n: usize,
    pub h: f64,
    pub norms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: CheckKind,
    pub status: Status,
    /// Norms of the configured (coarsest) level.
    pub norms: BTreeMap<String, f64>,
    pub bounds: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<LevelNorms>,
    /// Fitted `ln(norm)` against `ln(h)` slopes over the levels.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub slopes: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub status: RunStatus,
    pub exit_code: i32,
    pub config: RunConfig,
    pub summary: Map<String, Value>,
    pub blowup: Option<BlowupReport>,
    pub checks: Vec<CheckReport>,
    /// Every file of the run directory except `report.json`.
    pub artifacts: Vec<ManifestEntry>,
}

fn grid_n_h(cfg: &RunConfig) -> (usize, f64) {
    match (cfg.grid.nx, cfg.grid.lx) {
        (Some(nx), Some(lx)) => (nx, lx / nx as f64),
        _ => (cfg.grid.ny, cfg.grid.ly / cfg.grid.ny as f64),
    }
}

/// Runs `cfg` at `levels` successive refinements, keeping at level `l` only
/// the checks that ask for more than `l` levels. Level 0 is `cfg` itself.
pub fn run_levels(cfg: &RunConfig, levels: impl Fn(&CheckSpec) -> usize) -> Result<Vec<(RunConfig, FlowOutput)>, RunError> {
    cfg.validate()?;
    let max = cfg.checks.iter().map(&levels).max().unwrap_or(1).max(1);
    let mut out = Vec::new();
    for l in 0..max {
        let mut c = cfg.refined(l as u32);
        if l > 0 {
            c.checks.retain(|s| levels(s) > l);
        }
        let o = execute(&c)?;
        out.push((c, o));
    }
    Ok(out)
}

fn assess(spec: &CheckSpec, runs: &[(RunConfig, FlowOutput)], levels: usize) -> CheckReport {
    let find = |o: &FlowOutput| o.checks.iter().find(|c| c.kind == spec.name).cloned();
    let mut rep = CheckReport {
        name: spec.name,
        status: Status::Fail,
        norms: BTreeMap::new(),
        bounds: BTreeMap::new(),
        levels: Vec::new(),
        slopes: BTreeMap::new(),
        primary: None,
        min_slope: None,
        note: None,
        error: None,
    };
    let Some(base) = find(&runs[0].1) else {
        rep.status = Status::Skipped;
        rep.error = runs[0].1.blowup.map(|t| format!("not evaluated: flow blew up at t = {t}"));
        return rep;
    };
    rep.norms = base.norms.clone();
    rep.bounds = base.bounds.clone();
    rep.note = base.note.clone();
    rep.error = base.error.clone();
    let mut ok = base.passed();
    if levels > 1 && base.error.is_none() {
        rep.primary = Some(base.primary.clone());
        let mut hs = Vec::new();
        let mut per_level = Vec::new();
        for (c, o) in runs.iter().take(levels) {
            let (n, h) = grid_n_h(c);
            match find(o) {
                Some(x) if x.error.is_none() => {
                    hs.push(h);
                    per_level.push(x.clone());
                    rep.levels.push(LevelNorms { n, h, norms: x.norms });
                }
                Some(x) => rep.error = x.error,
                None => rep.error = Some(format!("level n = {n} did not evaluate the check")),
            }
        }
        if rep.error.is_some() {
            ok = false;
        } else {
            for key in base.norms.keys() {
                let e: Vec<f64> = per_level.iter().map(|x| x.norms.get(key).copied().unwrap_or(f64::NAN)).collect();
                if let Some(s) = fit_slope(&hs, &e) {
                    rep.slopes.insert(key.clone(), s);
                }
            }
            let min = spec.min_slope.or(base.expected_slope);
            rep.min_slope = min;
            let prim: Vec<f64> = per_level.iter().filter_map(|x| x.primary_value()).collect();
            let exact = prim.iter().all(|v| *v <= ZERO_TOL);
            if let (Some(min), false) = (min, exact) {
                ok &= rep.slopes.get(&base.primary).is_some_and(|s| *s >= min);
            }
            ok &= per_level.iter().all(|x| x.passed());
        }
    }
    rep.status = if ok { Status::Pass } else { Status::Fail };
    rep
}

/// Runs `cfg` and assembles the report and the artifacts (nothing is written).
pub fn run_report(cfg: &RunConfig) -> Result<(RunReport, Vec<Artifact>), RunError> {
    let runs = run_levels(cfg, |s| s.levels)?;
    let base = &runs[0].1;
    let checks: Vec<CheckReport> = cfg.checks.iter().map(|s| assess(s, &runs, s.levels)).collect();
    let any_fail = checks.iter().any(|c| c.status == Status::Fail);
    let blowup = base.blowup.map(|t| {
        let e = cfg.expect_blowup;
        BlowupReport { t, expected_t: e.map(|e| e.t), relative_gap: e.map(|e| (t - e.t).abs() / e.t.abs()) }
    });
    let status = match (&blowup, cfg.expect_blowup) {
        (Some(_), None) => RunStatus::UnexpectedBlowup,
        (Some(b), Some(e)) if b.relative_gap.is_some_and(|g| g <= e.rel_tol) => {
            if any_fail {
                RunStatus::Fail
            } else {
                RunStatus::ExpectedBlowup
            }
        }
        (Some(_), Some(_)) | (None, Some(_)) => RunStatus::Fail,
        (None, None) if any_fail => RunStatus::Fail,
        (None, None) => RunStatus::Pass,
    };
    let artifacts = base.artifacts.clone();
    let report = RunReport {
        name: cfg.name.clone(),
        status,
        exit_code: status.exit_code(),
        config: cfg.clone(),
        summary: base.summary.clone(),
        blowup,
        checks,
        artifacts: artifacts.iter().map(|a| ManifestEntry::of(&a.name, &a.text)).collect(),
    };
    Ok((report, artifacts))
}

/// Writes `report.json` and every artifact into `dir`, replacing earlier files
/// of the same names.
pub fn write_run(dir: &Path, report: &RunReport, artifacts: &[Artifact]) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.text).map_err(io)?;
    }
    std::fs::write(dir.join("report.json"), to_json_17(report)).map_err(io)
}

/// `run` command: the run directory is `out_root/<name>`.
pub fn run(cfg: &RunConfig, out_root: &Path) -> Result<(RunReport, PathBuf), RunError> {
    let (report, artifacts) = run_report(cfg)?;
    let dir = out_root.join(&cfg.name);
    write_run(&dir, &report, &artifacts)?;
    Ok((report, dir))
}

/// One norm of one check across refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub check: CheckKind,
    pub norm: String,
    pub values: Vec<f64>,
    pub slope: Option<f64>,
    /// Least expected slope, on primary norms only.
    pub min_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub name: String,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    /// Checks that failed to evaluate at some level.
    pub errors: Vec<String>,
}

impl ConvergenceTable {
    /// A primary norm converges slower than its expected slope, or a check failed.
    pub fn any_below(&self) -> bool {
        !self.errors.is_empty()
            || self.rows.iter().any(|r| {
                let exact = r.values.iter().all(|v| *v <= ZERO_TOL);
                !exact && r.min_slope.is_some_and(|m| !r.slope.is_some_and(|s| s >= m))
            })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,norm");
        for n in &self.n {
            let _ = write!(s, ",n{n}");
        }
        s.push_str(",slope,min_slope\n");
        let opt = |v: Option<f64>| v.map(crate::field::fmt_num).unwrap_or_default();
        for r in &self.rows {
            let _ = write!(s, "{},{}", r.check.name(), r.norm);
            for v in &r.values {
                let _ = write!(s, ",{}", crate::field::fmt_num(*v));
            }
            let _ = writeln!(s, ",{},{}", opt(r.slope), opt(r.min_slope));
        }
        s
    }

    pub fn pretty(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<18} {:<36}", "check", "norm");
        for n in &self.n {
            let _ = write!(s, " {:>11}", format!("n={n}"));
        }
        let _ = writeln!(s, " {:>7} {:>7}", "slope", "min");
        for r in &self.rows {
            let _ = write!(s, "{:<18} {:<36}", r.check.name(), r.norm);
            for v in &r.values {
                let _ = write!(s, " {v:>11.3e}");
            }
            let f = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, " {:>7} {:>7}", f(r.slope), f(r.min_slope));
        }
        for e in &self.errors {
            let _ = writeln!(s, "error: {e}");
        }
        s
    }
}

/// `convergence` command: every check at `levels` refinements.
pub fn convergence(cfg: &RunConfig, levels: usize) -> Result<ConvergenceTable, RunError> {
    let levels = levels.max(2);
    let runs = run_levels(cfg, |_| levels)?;
    let (n, h): (Vec<usize>, Vec<f64>) = runs.iter().map(|(c, _)| grid_n_h(c)).unzip();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for spec in &cfg.checks {
        let outs: Vec<Option<&CheckOutcome>> =
            runs.iter().map(|(_, o)| o.checks.iter().find(|c| c.kind == spec.name)).collect();
        if let Some(e) = outs.iter().find_map(|o| match o {
            None => Some("not evaluated (blow-up)".to_string()),
            Some(c) => c.error.clone(),
        }) {
            errors.push(format!("{}: {e}", spec.name.name()));
            continue;
        }
        let outs: Vec<&CheckOutcome> = outs.into_iter().flatten().collect();
        for key in outs[0].norms.keys() {
            let values: Vec<f64> = outs.iter().map(|o| o.norms.get(key).copied().unwrap_or(f64::NAN)).collect();
            let primary = *key == outs[0].primary;
            rows.push(ConvergenceRow {
                check: spec.name,
                norm: key.clone(),
                slope: fit_slope(&h, &values),
                min_slope: if primary { spec.min_slope.or(outs[0].expected_slope) } else { None },
                values,
            });
        }
    }
    Ok(ConvergenceTable { name: cfg.name.clone(), n, h, rows, errors })
}
