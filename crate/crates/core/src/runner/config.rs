use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::field::{Grid2D, StencilOrder};
use crate::integrate::Integrator;
use crate::lax::{BurgersScheme, Convention};
use crate::metric::{CoupledVariant, Laplacian};

/// Rejected before anything runs; maps to exit code 4.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config: {0}")]
pub struct ConfigInvalid(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigInvalid> {
    Err(ConfigInvalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    Hf,
    Mi,
    Ishimori,
    McfGraph,
    McfParametric,
    RfPlain,
    RfNormalized,
    #[serde(rename = "rf-coupled-73")]
    RfCoupled73,
    #[serde(rename = "rf-coupled-74")]
    RfCoupled74,
    #[serde(rename = "rf-coupled-75")]
    RfCoupled75,
    #[serde(rename = "rf-coupled-76")]
    RfCoupled76,
    Burgers,
}

impl FlowKind {
    pub fn is_spin(self) -> bool {
        matches!(self, FlowKind::Hf | FlowKind::Mi | FlowKind::Ishimori)
    }

    pub fn coupled(self) -> Option<CoupledVariant> {
        match self {
            FlowKind::RfCoupled73 => Some(CoupledVariant::WaveUnit),
            FlowKind::RfCoupled74 => Some(CoupledVariant::HeatUnit),
            FlowKind::RfCoupled75 => Some(CoupledVariant::Wave),
            FlowKind::RfCoupled76 => Some(CoupledVariant::Heat),
            _ => None,
        }
    }

    /// Whether the step size scales with `h` (rather than `h^2`) under refinement.
    pub fn hyperbolic(self) -> bool {
        self == FlowKind::Burgers
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Required by every flow except `burgers`, which has no x direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    pub ny: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lx: Option<f64>,
    pub ly: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
    /// Burgers only: periodic `y`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<bool>,
}

impl GridConfig {
    pub fn grid2d(&self) -> Result<Grid2D, ConfigInvalid> {
        let (Some(nx), Some(lx)) = (self.nx, self.lx) else {
            return bad("grid.nx and grid.lx are required for this flow");
        };
        Grid2D::with_origin(nx, self.ny, lx, self.ly, self.x0, self.y0).map_err(|e| ConfigInvalid(e.to_string()))
    }
}

fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_alpha2() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_k() -> f64 {
    1.0
}
fn default_sign() -> f64 {
    1.0
}
fn default_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_conventions() -> Vec<Convention> {
    Convention::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Step size: flow time, or the `y` sub-step of the ferromagnet march.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub order: StencilOrder,
    /// Stencils of the checks; defaults to `order`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_order: Option<StencilOrder>,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_true")]
    pub project: bool,
    /// Drift of the MCF flows.
    #[serde(default)]
    pub xi: [f64; 3],
    /// Anisotropy of the parametric MCF.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<[f64; 3]>,
    #[serde(default = "default_alpha2")]
    pub alpha2: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub laplacian: Laplacian,
    #[serde(default)]
    pub freeze_metric: bool,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_conventions")]
    pub conventions: Vec<Convention>,
    #[serde(default)]
    pub scheme: BurgersScheme,
    /// `lambda_t = sign * lambda lambda_y`.
    #[serde(default = "default_sign")]
    pub sign: f64,
    /// Blow-up ceiling; each flow has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<f64>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all params have defaults")
    }
}

impl ParamsConfig {
    pub fn check_order(&self) -> StencilOrder {
        self.check_order.unwrap_or(self.order)
    }
}

fn default_amplitude() -> f64 {
    0.3
}
fn default_one() -> f64 {
    1.0
}

/// Named initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// Spin flows: `direction` (default `e_z`). Scalar flows and Burgers: `value`.
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
    },
    Magnon { theta: f64, k: f64 },
    SphereCap { rho: f64 },
    RandomSmooth {
        seed: u64,
        bandwidth: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    FourierMode {
        kx: i64,
        ky: i64,
        #[serde(default = "default_one")]
        amplitude: f64,
    },
    /// `lambda = (a + y) / t0`.
    LambdaLinear { a: f64, t0: f64 },
    /// `offset + amplitude sin(k y)`.
    LambdaSine {
        amplitude: f64,
        k: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constant { .. } => "constant",
            Preset::Magnon { .. } => "magnon",
            Preset::SphereCap { .. } => "sphere-cap",
            Preset::RandomSmooth { .. } => "random-smooth",
            Preset::FourierMode { .. } => "fourier-mode",
            Preset::LambdaLinear { .. } => "lambda-linear",
            Preset::LambdaSine { .. } => "lambda-sine",
        }
    }

    fn fits(&self, flow: FlowKind) -> bool {
        use FlowKind::*;
        match self {
            Preset::Constant { direction, value } => {
                if flow.is_spin() {
                    value.is_none()
                } else {
                    direction.is_none()
                }
            }
            Preset::Magnon { .. } => flow.is_spin(),
            Preset::SphereCap { .. } => flow == McfGraph,
            Preset::RandomSmooth { .. } => flow != Burgers,
            Preset::FourierMode { .. } => !flow.is_spin() && flow != Burgers,
            Preset::LambdaLinear { .. } | Preset::LambdaSine { .. } => flow == Burgers,
        }
    }
}

/// One line per preset: name, fields, flows it applies to.
pub fn preset_catalogue() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("constant", "direction [x,y,z] | value", "all flows (direction for spin flows, value otherwise)"),
        ("magnon", "theta, k", "hf, mi, ishimori"),
        ("sphere-cap", "rho", "mcf-graph (edge ring pinned to the exact shrinking sphere)"),
        (
            "random-smooth",
            "seed, bandwidth, amplitude=0.3",
            "all 2D flows (mi uses the solvable rotor family; coupled flows set u)",
        ),
        ("fourier-mode", "kx, ky, amplitude=1", "scalar 2D flows (graph height, conformal factor, coupled u)"),
        ("lambda-linear", "a, t0", "burgers (exact profile (a + y)/(t0 - t))"),
        ("lambda-sine", "amplitude, k, offset=0", "burgers"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    #[serde(rename = "identity-2d")]
    Identity2d,
    Egregium,
    Gauge,
    Lax,
    FrameDecomp,
    MetricEvolution,
    Dissipation,
    Metric3,
    Volume,
    /// Comparison against a closed-form solution of the preset.
    Exact,
}

impl CheckKind {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }

    fn applies(self, flow: FlowKind, preset: &Preset, p: &ParamsConfig) -> bool {
        use FlowKind::*;
        match self {
            CheckKind::Identity2d => flow != Burgers,
            CheckKind::Egregium => matches!(flow, Mi | McfParametric),
            CheckKind::Gauge => flow.is_spin(),
            CheckKind::Lax => matches!(flow, Hf | Mi),
            CheckKind::FrameDecomp | CheckKind::MetricEvolution | CheckKind::Metric3 => flow == Mi,
            CheckKind::Dissipation => flow == McfParametric,
            CheckKind::Volume => matches!(flow, RfPlain | RfNormalized),
            CheckKind::Exact => match (flow, preset) {
                (Hf, Preset::Magnon { .. }) => true,
                (McfGraph, Preset::SphereCap { .. }) => true,
                (Burgers, Preset::LambdaLinear { .. }) => p.sign == 1.0,
                (RfCoupled74, Preset::FourierMode { .. }) => p.freeze_metric && p.laplacian == Laplacian::Flat,
                _ => false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: CheckKind,
    /// Bound on the check's primary norm; each check has a default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Refinement levels for a fitted slope (1 = no slope).
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Least acceptable refinement slope when `levels > 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slope: Option<f64>,
    /// identity-2d: number of random metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// exact (burgers): compare up to this time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

fn default_levels() -> usize {
    1
}

/// A check given by name alone or in full.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum CheckEntry {
    Name(CheckKind),
    Full(CheckSpec),
}

fn checks_de<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<CheckSpec>, D::Error> {
    let entries = Vec::<CheckEntry>::deserialize(d)?;
    Ok(entries
        .into_iter()
        .map(|e| match e {
            CheckEntry::Name(name) => CheckSpec { name, tolerance: None, levels: 1, min_slope: None, samples: None, t_max: None },
            CheckEntry::Full(s) => s,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectBlowup {
    /// Predicted blow-up time.
    pub t: f64,
    /// Accepted relative gap between the estimate and `t`.
    #[serde(default = "default_blowup_tol")]
    pub rel_tol: f64,
}

fn default_blowup_tol() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub flow: FlowKind,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub initial: Preset,
    #[serde(default, deserialize_with = "checks_de")]
    pub checks: Vec<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_blowup: Option<ExpectBlowup>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigInvalid> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| ConfigInvalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigInvalid> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|e| ConfigInvalid(format!("{}: {e}", p.display())))?;
        Self::from_json(&text)
    }

    /// Schema-level checks beyond what serde enforces.
    pub fn validate(&self) -> Result<(), ConfigInvalid> {
        let name_ok = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
            && !self.name.starts_with('.');
        if !name_ok {
            return bad("name must be non-empty and use only [A-Za-z0-9._-]");
        }
        let p = &self.params;
        if self.flow == FlowKind::Burgers {
            if self.grid.nx.is_some() || self.grid.lx.is_some() {
                return bad("burgers has no x direction: drop grid.nx and grid.lx");
            }
            if self.grid.ny < 8 || !(self.grid.ly > 0.0) {
                return bad("burgers needs grid.ny >= 8 and grid.ly > 0");
            }
            if !(p.sign == 1.0 || p.sign == -1.0) {
                return bad("params.sign must be 1 or -1");
            }
        } else {
            if self.grid.periodic.is_some() {
                return bad("grid.periodic applies to burgers only; 2D grids are periodic");
            }
            self.grid.grid2d()?;
        }
        match p.dt {
            Some(dt) if dt > 0.0 && dt.is_finite() => {}
            Some(_) => return bad("params.dt must be positive"),
            None => return bad("params.dt is required"),
        }
        if self.flow != FlowKind::Hf && p.steps == 0 {
            return bad("params.steps must be positive");
        }
        if p.stride == 0 {
            return bad("params.stride must be positive");
        }
        if p.lambdas.is_empty() || p.conventions.is_empty() {
            return bad("params.lambdas and params.conventions must be non-empty");
        }
        if !self.initial.fits(self.flow) {
            return bad(format!("preset {} does not apply to this flow", self.initial.name()));
        }
        self.validate_preset()?;
        let mut seen = BTreeSet::new();
        for c in &self.checks {
            if !seen.insert(c.name) {
                return bad(format!("check {} listed twice", c.name.name()));
            }
            if !c.name.applies(self.flow, &self.initial, p) {
                return bad(format!("check {} does not apply to this flow and preset", c.name.name()));
            }
            if c.levels == 0 {
                return bad("check levels must be at least 1");
            }
            if c.tolerance.is_some_and(|t| !(t > 0.0)) {
                return bad("check tolerance must be positive");
            }
            let time_diff = matches!(c.name, CheckKind::MetricEvolution | CheckKind::Lax | CheckKind::Dissipation);
            if time_diff && self.flow != FlowKind::Hf && p.steps / p.stride < 2 {
                return bad(format!("check {} needs at least 3 frames (steps / stride >= 2)", c.name.name()));
            }
        }
        if let Some(e) = self.expect_blowup {
            if !(e.t > 0.0 && e.rel_tol > 0.0) {
                return bad("expect_blowup needs t > 0 and rel_tol > 0");
            }
        }
        Ok(())
    }

    fn validate_preset(&self) -> Result<(), ConfigInvalid> {
        match &self.initial {
            Preset::Constant { direction: Some(d), .. } if d.iter().all(|v| *v == 0.0) => bad("constant direction is zero"),
            Preset::RandomSmooth { bandwidth, amplitude, .. } if *bandwidth == 0 || !amplitude.is_finite() => {
                bad("random-smooth needs bandwidth >= 1 and a finite amplitude")
            }
            Preset::RandomSmooth { amplitude, .. } if self.flow.is_spin() && !(amplitude.abs() < 1.0) => {
                bad("random-smooth spin data need |amplitude| < 1")
            }
            Preset::SphereCap { rho } => {
                let g = self.grid.grid2d()?;
                let corner = [(g.x0, g.y0), (g.x0 + g.lx, g.y0 + g.ly), (g.x0, g.y0 + g.ly), (g.x0 + g.lx, g.y0)]
                    .iter()
                    .map(|(x, y)| x.hypot(*y))
                    .fold(0.0, f64::max);
                let t_end = self.params.dt.unwrap_or(0.0) * self.params.steps as f64;
                if !(*rho > corner) {
                    bad("sphere-cap radius must exceed the distance to every grid corner")
                } else if !(4.0 * t_end < rho * rho - corner * corner) {
                    bad("sphere-cap: the sphere leaves the grid before dt * steps (need 4 t < rho^2 - corner^2)")
                } else {
                    Ok(())
                }
            }
            Preset::Magnon { k, .. } => {
                let lx = self.grid.lx.unwrap_or(0.0);
                let m = k * lx / (2.0 * std::f64::consts::PI);
                if (m - m.round()).abs() > 1e-9 {
                    bad("magnon k * lx must be a multiple of 2 pi on the periodic grid")
                } else {
                    Ok(())
                }
            }
            Preset::LambdaLinear { t0, .. } if !(*t0 != 0.0) => bad("lambda-linear needs t0 != 0"),
            _ => Ok(()),
        }
    }

    /// Grid `2^level` times finer, step sizes scaled to match, final time kept.
    pub fn refined(&self, level: u32) -> RunConfig {
        let f = 1usize << level;
        let mut c = self.clone();
        c.grid.ny *= f;
        c.grid.nx = c.grid.nx.map(|n| n * f);
        let dt_div = if self.flow.hyperbolic() { f } else { f * f };
        c.params.dt = c.params.dt.map(|d| d / dt_div as f64);
        c.params.steps *= dt_div;
        c.params.stride *= dt_div / f;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(checks: &str, steps: usize, stride: usize) -> String {
        format!(
            r#"{{"name":"m","flow":"mi","grid":{{"nx":16,"ny":16,"lx":6.283185307179586,"ly":6.283185307179586}},
            "params":{{"dt":0.01,"steps":{steps},"stride":{stride}}},
            "initial":{{"preset":"random-smooth","seed":1,"bandwidth":2}},"checks":{checks}}}"#
        )
    }

    fn err(text: &str) -> String {
        RunConfig::from_json(text).unwrap_err().0
    }

    #[test]
    fn checks_by_name_or_object() {
        let c = RunConfig::from_json(&mi(r#"["gauge",{"name":"lax","levels":3,"tolerance":1e-3}]"#, 4, 1)).unwrap();
        assert_eq!(c.checks[0].name, CheckKind::Gauge);
        assert_eq!(c.checks[1].levels, 3);
        assert_eq!(c.params.order, StencilOrder::Second);
    }

    #[test]
    fn time_difference_checks_need_three_frames() {
        assert!(err(&mi(r#"["metric-evolution"]"#, 4, 4)).contains("3 frames"));
        assert!(RunConfig::from_json(&mi(r#"["metric-evolution"]"#, 4, 2)).is_ok());
    }

    #[test]
    fn rejects_duplicates_and_misplaced_checks() {
        assert!(err(&mi(r#"["gauge","gauge"]"#, 4, 1)).contains("twice"));
        assert!(err(&mi(r#"["volume"]"#, 4, 1)).contains("does not apply"));
    }

    #[test]
    fn preset_constraints() {
        let spin_fourier = mi("[]", 4, 1).replace(r#""preset":"random-smooth","seed":1,"bandwidth":2"#, r#""preset":"fourier-mode","kx":1,"ky":0"#);
        assert!(err(&spin_fourier).contains("does not apply"));
        let magnon = mi("[]", 4, 1).replace(r#""preset":"random-smooth","seed":1,"bandwidth":2"#, r#""preset":"magnon","theta":1.0,"k":1.5"#);
        assert!(err(&magnon).contains("multiple of 2 pi"));
        let sphere = r#"{"name":"s","flow":"mcf-graph","grid":{"nx":16,"ny":16,"lx":0.6,"ly":0.6,"x0":-0.3,"y0":-0.3},
            "params":{"dt":1e-3,"steps":300},"initial":{"preset":"sphere-cap","rho":1.0}}"#;
        assert!(err(sphere).contains("leaves the grid"));
        let burgers = r#"{"name":"b","flow":"burgers","grid":{"ny":32,"ly":2.0},"params":{"dt":1e-3,"steps":10,"sign":-1},
            "initial":{"preset":"lambda-linear","a":0.0,"t0":1.0},"checks":["exact"]}"#;
        assert!(err(burgers).contains("does not apply"));
    }

    #[test]
    fn stencil_order_is_an_integer() {
        let c = RunConfig::from_json(&mi("[]", 4, 1).replace(r#""stride":1"#, r#""stride":1,"order":4"#)).unwrap();
        assert_eq!(c.params.order, StencilOrder::Fourth);
        assert!(err(&mi("[]", 4, 1).replace(r#""stride":1"#, r#""stride":1,"order":3"#)).contains("order"));
    }
}
