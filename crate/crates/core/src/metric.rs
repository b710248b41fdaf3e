//! Metric-level flows and diagnostics: the induced-metric evolution of the
//! M-I surface and its frame decomposition, 2D conformal Ricci flows (plain,
//! normalized, coupled to a scalar field), and the 3D metric on
//! `(x, y, t)`-space with its numerical Ricci tensor.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::field::{CsvTable, Deriv, Field, Grid2D, ScalarField, StencilOrder, VectorField3};
use crate::integrate::{self, Integrator};
use crate::spin::{mi_flux, MIState};
use crate::surface::{reconstruct_position_with_drift, FundamentalForms, SurfaceJet};
use crate::tensor::{self, Cube};

/// Rates of the first fundamental form.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRates {
    pub e_t: ScalarField,
    pub f_t: ScalarField,
    pub g_t: ScalarField,
    /// `G_t - 2 F F_t`.
    pub det_t: ScalarField,
    /// The same rate written through `g_x` directly:
    /// `g_x (FM - N)/sqrt g - 2 sqrt g (M_y - F L_y) + u g_x`.
    pub det_t_closed: ScalarField,
}

/// Induced-metric rates of the M-I surface (`E = 1` gauge) with potential `u`.
pub fn mi_metric_rhs(
    jet: &SurfaceJet,
    forms: &FundamentalForms,
    u: &ScalarField,
    order: StencilOrder,
) -> Result<MetricRates> {
    forms.e.same_grid(u)?;
    let grid = forms.grid();
    let (ex, fx, gx) = jet.metric_dx();
    let (ly, my) = (forms.l.dy(order), forms.m.dy(order));
    let uy = u.dy(order);
    let n = grid.len();
    let detx: Vec<f64> = (0..n)
        .map(|k| ex.data[k] * forms.g.data[k] + forms.e.data[k] * gx.data[k] - 2.0 * forms.f.data[k] * fx.data[k])
        .collect();
    let (mut f_t, mut g_t, mut det_t, mut closed) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let (f, m, nn) = (forms.f.data[k], forms.m.data[k], forms.n.data[k]);
        let s = forms.det.data[k].sqrt();
        let a = (f * m - nn) / s;
        f_t[k] = a * fx.data[k] - ly.data[k] * s + u.data[k] * fx.data[k] + uy.data[k];
        g_t[k] = a * gx.data[k] - 2.0 * my.data[k] * s + u.data[k] * gx.data[k] + 2.0 * f * uy.data[k];
        det_t[k] = g_t[k] - 2.0 * f * f_t[k];
        closed[k] = detx[k] * a - 2.0 * s * (my.data[k] - f * ly.data[k]) + u.data[k] * detx[k];
    }
    let sf = |d: Vec<f64>| Field { grid, data: d };
    Ok(MetricRates {
        e_t: ScalarField::zeros(grid),
        f_t: sf(f_t),
        g_t: sf(g_t),
        det_t: sf(det_t),
        det_t_closed: sf(closed),
    })
}

/// Pointwise residuals of the frame decomposition of `r_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResidual {
    /// `|r_x ^ r_xy + u r_x - [(MF/sqrt g + u) r_x - (M/sqrt g) r_y + (G_x/2 sqrt g) n]|`.
    pub velocity: ScalarField,
    /// `|u_x - (L G_x - 2 M F_x)/(2 sqrt g)|`.
    pub potential: ScalarField,
}

pub fn mi_frame_decomposition_residual(
    jet: &SurfaceJet,
    forms: &FundamentalForms,
    u: &ScalarField,
    order: StencilOrder,
) -> Result<FrameResidual> {
    jet.r_x.same_grid(u)?;
    let grid = jet.grid();
    let (_, fx, gx) = jet.metric_dx();
    let ux = u.dx(order);
    let n = grid.len();
    let (mut vel, mut pot) = (vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let (rx, ry, rxy) = (jet.r_x.data[k], jet.r_y.data[k], jet.r_xy.data[k]);
        let (f, l, m) = (forms.f.data[k], forms.l.data[k], forms.m.data[k]);
        let s = forms.det.data[k].sqrt();
        let lhs = rx.cross(&rxy) + rx * u.data[k];
        let rhs = rx * (m * f / s + u.data[k]) - ry * (m / s) + forms.normal.data[k] * (gx.data[k] / (2.0 * s));
        vel[k] = (lhs - rhs).norm();
        pot[k] = (ux.data[k] - (l * gx.data[k] - 2.0 * m * fx.data[k]) / (2.0 * s)).abs();
    }
    Ok(FrameResidual { velocity: Field { grid, data: vel }, potential: Field { grid, data: pot } })
}

/// Which Laplacian acts in the scalar-field equations and in `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Laplacian {
    Flat,
    /// Laplace-Beltrami of `e^{2 phi} (dx^2 + dy^2)`, i.e. `e^{-2 phi}` times flat.
    #[default]
    Metric,
}

/// Metric `e^{2 phi} (dx^2 + dy^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric2D {
    pub phi: ScalarField,
    pub t: f64,
}

fn flat_laplacian(f: &ScalarField, order: StencilOrder) -> ScalarField {
    f.derivative(Deriv::XX, order).add(&f.derivative(Deriv::YY, order))
}

/// `R = -2 e^{-2 phi} Lap phi`.
pub fn conformal_scalar_curvature(phi: &ScalarField, order: StencilOrder) -> ScalarField {
    flat_laplacian(phi, order).zip_map(phi, |l, p| -2.0 * (-2.0 * p).exp() * l)
}

/// `int e^{2 phi} dx dy`.
pub fn conformal_volume(phi: &ScalarField) -> f64 {
    phi.map(|p| (2.0 * p).exp()).integral()
}

/// Area-weighted mean of `f`.
fn area_mean(phi: &ScalarField, f: &ScalarField) -> f64 {
    let w = phi.map(|p| (2.0 * p).exp());
    w.mul(f).integral() / w.integral()
}

/// User forcing `F_ij(x, y, t)` added to `g_ij,t`. Only its trace with respect
/// to the conformal metric acts in conformal gauge.
pub type TensorForcing = Arc<dyn Fn(f64, f64, f64) -> [[f64; 2]; 2] + Send + Sync>;

/// `phi_t` of the plain (`-R/2`) or normalized (`(<R> - R)/2`) flow.
pub fn conformal_rf_rhs(m: &ConformalMetric2D, normalized: bool, order: StencilOrder) -> ScalarField {
    let r = conformal_scalar_curvature(&m.phi, order);
    let mean = if normalized { area_mean(&m.phi, &r) } else { 0.0 };
    r.map(|v| 0.5 * (mean - v))
}

fn forcing_term(phi: &ScalarField, t: f64, forcing: &Option<TensorForcing>) -> Option<ScalarField> {
    let f = forcing.as_ref()?;
    let g = phi.grid;
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let a = f(g.x(i), g.y(j), t);
            out.data[k] = 0.25 * (-2.0 * phi.data[k]).exp() * (a[0][0] + a[1][1]);
        }
    }
    Some(out)
}

#[derive(Clone)]
pub struct RfParams {
    pub dt: f64,
    pub normalized: bool,
    pub order: StencilOrder,
    pub integrator: Integrator,
    pub forcing: Option<TensorForcing>,
}

impl RfParams {
    pub fn new(dt: f64, normalized: bool) -> Self {
        RfParams { dt, normalized, order: StencilOrder::Second, integrator: Integrator::Rk4, forcing: None }
    }
}

/// One row of the RF history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfStats {
    pub t: f64,
    pub volume: f64,
    pub mean_r: f64,
    pub min_r: f64,
    pub max_r: f64,
    /// `int R dA`.
    pub total_curvature: f64,
}

impl RfStats {
    pub fn of(phi: &ScalarField, t: f64, order: StencilOrder) -> Self {
        let r = conformal_scalar_curvature(phi, order);
        let w = phi.map(|p| (2.0 * p).exp());
        let volume = w.integral();
        let total = w.mul(&r).integral();
        RfStats { t, volume, mean_r: total / volume, min_r: r.min(), max_r: r.max(), total_curvature: total }
    }
}

pub fn rf_table(stats: &[RfStats]) -> CsvTable {
    let mut t = CsvTable::new(&["t", "volume", "mean_R", "min_R", "max_R", "total_curvature"]);
    for s in stats {
        t.push(vec![s.t, s.volume, s.mean_r, s.min_r, s.max_r, s.total_curvature]);
    }
    t
}

fn rf_bound(phi: &ScalarField) -> f64 {
    0.2 * phi.grid.h_min().powi(2) * (2.0 * phi.min()).exp()
}

#[derive(Debug, Clone)]
pub struct RfTrajectory {
    pub frames: Vec<ConformalMetric2D>,
    pub stats: Vec<RfStats>,
}

/// Conformal Ricci flow, recording stats after every step and a frame every
/// `stride` steps.
pub fn rf_evolve(m: &ConformalMetric2D, p: &RfParams, n_steps: usize, stride: usize) -> Result<RfTrajectory> {
    let bound = rf_bound(&m.phi);
    if !(p.dt > 0.0 && p.dt <= bound) {
        return Err(FlowError::Unstable { dt: p.dt, bound });
    }
    let stride = stride.max(1);
    let mut phi = m.phi.clone();
    let mut frames = vec![m.clone()];
    let mut stats = vec![RfStats::of(&phi, m.t, p.order)];
    for step in 1..=n_steps {
        let t0 = m.t + (step - 1) as f64 * p.dt;
        phi = integrate::step(p.integrator, t0, &phi, p.dt, |t, f: &ScalarField| {
            let mut r = conformal_rf_rhs(&ConformalMetric2D { phi: f.clone(), t }, p.normalized, p.order);
            if let Some(extra) = forcing_term(f, t, &p.forcing) {
                r = r.add(&extra);
            }
            Ok(r)
        })?;
        let t = m.t + step as f64 * p.dt;
        if phi.check_finite().is_err() {
            return Err(FlowError::BlowUp(t));
        }
        stats.push(RfStats::of(&phi, t, p.order));
        if step % stride == 0 {
            frames.push(ConformalMetric2D { phi: phi.clone(), t });
        }
    }
    Ok(RfTrajectory { frames, stats })
}

/// Coupled metric + scalar-field systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoupledVariant {
    /// `g_t = -2 Ric + u g`, `u_tt = Lap(u + k R)`.
    #[serde(rename = "wave-unit")]
    WaveUnit,
    /// `g_t = -2 Ric + u g`, `u_t = Lap(u + k R)`.
    #[serde(rename = "heat-unit")]
    HeatUnit,
    /// `g_t = -2 Ric + (beta u + alpha R) g`, `u_tt = Lap(u + k R)`.
    #[serde(rename = "wave")]
    Wave,
    /// `g_t = -2 Ric + (beta u + alpha R) g`, `u_t = Lap(u + k R)`.
    #[serde(rename = "heat")]
    Heat,
}

impl CoupledVariant {
    pub fn second_order(self) -> bool {
        matches!(self, CoupledVariant::WaveUnit | CoupledVariant::Wave)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRFState {
    pub phi: ScalarField,
    pub u: ScalarField,
    /// `u_t`, carried by the second-order variants.
    pub u_t: ScalarField,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub t: f64,
}

impl CoupledRFState {
    pub fn new(phi: ScalarField, u: ScalarField, k: f64) -> Result<Self> {
        phi.same_grid(&u)?;
        let z = ScalarField::zeros(phi.grid);
        Ok(CoupledRFState { phi, u, u_t: z, alpha: 0.0, beta: 1.0, k, t: 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledOptions {
    pub laplacian: Laplacian,
    /// Holds the metric fixed (only the field equation moves).
    pub freeze_metric: bool,
    pub order: StencilOrder,
}

impl Default for CoupledOptions {
    fn default() -> Self {
        CoupledOptions { laplacian: Laplacian::Metric, freeze_metric: false, order: StencilOrder::Second }
    }
}

type Triple = ((ScalarField, ScalarField), ScalarField);

fn coupled_rhs(y: &Triple, s: &CoupledRFState, variant: CoupledVariant, o: &CoupledOptions) -> Triple {
    let ((phi, u), ut) = y;
    let r = conformal_scalar_curvature(phi, o.order);
    let (alpha, beta) = match variant {
        CoupledVariant::WaveUnit | CoupledVariant::HeatUnit => (0.0, 1.0),
        _ => (s.alpha, s.beta),
    };
    let phi_t = if o.freeze_metric {
        ScalarField::zeros(phi.grid)
    } else {
        let mut d = r.scale(-0.5 + 0.5 * alpha);
        d = d.axpy(0.5 * beta, u);
        d
    };
    let mut lap = flat_laplacian(&u.axpy(s.k, &r), o.order);
    if o.laplacian == Laplacian::Metric {
        lap = lap.zip_map(phi, |l, p| l * (-2.0 * p).exp());
    }
    if variant.second_order() {
        ((phi_t, ut.clone()), lap)
    } else {
        ((phi_t, lap), ScalarField::zeros(phi.grid))
    }
}

/// One RK4 step of a coupled system.
pub fn coupled_rf_step(
    state: &CoupledRFState,
    variant: CoupledVariant,
    dt: f64,
    opts: &CoupledOptions,
) -> Result<CoupledRFState> {
    let bound = rf_bound(&state.phi);
    if !(dt > 0.0 && dt <= bound) {
        return Err(FlowError::Unstable { dt, bound });
    }
    let y: Triple = ((state.phi.clone(), state.u.clone()), state.u_t.clone());
    let ((phi, u), u_t) =
        integrate::step(Integrator::Rk4, state.t, &y, dt, |_, y: &Triple| Ok(coupled_rhs(y, state, variant, opts)))?;
    let t = state.t + dt;
    for f in [&phi, &u, &u_t] {
        if f.check_finite().is_err() {
            return Err(FlowError::BlowUp(t));
        }
    }
    Ok(CoupledRFState { phi, u, u_t, t, ..state.clone() })
}

/// Six components of the metric on `(x, y, t)`-space at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric3Sample {
    pub g11: ScalarField,
    pub g12: ScalarField,
    pub g13: ScalarField,
    pub g22: ScalarField,
    pub g23: ScalarField,
    pub g33: ScalarField,
    pub t: f64,
}

impl Metric3Sample {
    pub fn grid(&self) -> Grid2D {
        self.g11.grid
    }

    fn at(&self, k: usize) -> [[f64; 3]; 3] {
        let (a, b, c) = (self.g11.data[k], self.g12.data[k], self.g13.data[k]);
        let (d, e, f) = (self.g22.data[k], self.g23.data[k], self.g33.data[k]);
        [[a, b, c], [b, d, e], [c, e, f]]
    }

    fn component(&self, i: usize, j: usize) -> &ScalarField {
        match (i.min(j), i.max(j)) {
            (0, 0) => &self.g11,
            (0, 1) => &self.g12,
            (0, 2) => &self.g13,
            (1, 1) => &self.g22,
            (1, 2) => &self.g23,
            _ => &self.g33,
        }
    }

    /// Metric `g (+) dt^2` built from a 2D first form, static in time.
    pub fn product(e: &ScalarField, f: &ScalarField, g: &ScalarField, g33: f64, t: f64) -> Self {
        let z = ScalarField::zeros(e.grid);
        Metric3Sample {
            g11: e.clone(),
            g12: f.clone(),
            g13: z.clone(),
            g22: g.clone(),
            g23: z,
            g33: ScalarField::constant(e.grid, g33),
            t,
        }
    }

    /// `x,y,G11,...,G33,detG`.
    pub fn table(&self) -> Result<CsvTable> {
        let d = det3(self);
        crate::field::grid_table(
            &["G11", "G12", "G13", "G22", "G23", "G33", "detG"],
            &[&self.g11, &self.g12, &self.g13, &self.g22, &self.g23, &self.g33, &d],
        )
    }
}

/// Direct 3x3 determinant.
pub fn det3(s: &Metric3Sample) -> ScalarField {
    let g = s.grid();
    Field { grid: g, data: (0..g.len()).map(|k| tensor::determinant(&s.at(k))).collect() }
}

/// Size of the gap between the dot-product definitions and the closed forms
/// `G33 = r_xy^2 + u`, `G13 = u`, `G23 = u r_y^2 - r_xy.(r_x ^ r_y)` and the
/// determinant polynomial, at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric3Discrepancy {
    pub t: f64,
    pub g13_max_gap: f64,
    pub g23_max_gap: f64,
    pub g33_max_gap: f64,
    pub det_max_gap: f64,
    /// Scale of the directly computed determinant, for context.
    pub det_max_abs: f64,
}

/// Metric samples along an M-I trajectory with `r_t = r_x ^ r_xy + u r_x`,
/// plus the closed-form discrepancy report at every level.
pub fn assemble_metric3(
    frames: &[MIState],
    order: StencilOrder,
) -> Result<(Vec<Metric3Sample>, Vec<Metric3Discrepancy>)> {
    let mut samples = Vec::with_capacity(frames.len());
    let mut gaps = Vec::with_capacity(frames.len());
    for st in frames {
        let r = reconstruct_position_with_drift(&st.s, &st.ry_mean, order)?;
        let jet = SurfaceJet::new(&r, order);
        let rt: VectorField3 = mi_flux(&jet.r_x, &st.u, order);
        let g = jet.grid();
        let n = g.len();
        let mut c = vec![vec![0.0; n]; 6];
        let mut gap = Metric3Discrepancy { t: st.t, g13_max_gap: 0.0, g23_max_gap: 0.0, g33_max_gap: 0.0, det_max_gap: 0.0, det_max_abs: 0.0 };
        for k in 0..n {
            let (rx, ry, rxy, v) = (jet.r_x.data[k], jet.r_y.data[k], jet.r_xy.data[k], rt.data[k]);
            let u = st.u.data[k];
            let m = [rx.dot(&rx), rx.dot(&ry), rx.dot(&v), ry.dot(&ry), ry.dot(&v), v.dot(&v)];
            for (slot, val) in c.iter_mut().zip(m) {
                slot[k] = val;
            }
            let gm = [[m[0], m[1], m[2]], [m[1], m[3], m[4]], [m[2], m[4], m[5]]];
            let det = tensor::determinant(&gm);
            let ry2 = ry.dot(&ry);
            let rxy2 = rxy.dot(&rxy);
            let fxy = rx.dot(&ry);
            let g23_closed = u * ry2 - rxy.dot(&rx.cross(&ry));
            let g33_closed = rxy2 + u;
            let det_closed = u * u * (rxy2 - ry2) + u * (ry2 - fxy * fxy) + (ry2 - fxy * fxy) * rxy2;
            gap.g13_max_gap = gap.g13_max_gap.max((m[2] - u).abs());
            gap.g23_max_gap = gap.g23_max_gap.max((m[4] - g23_closed).abs());
            gap.g33_max_gap = gap.g33_max_gap.max((m[5] - g33_closed).abs());
            gap.det_max_gap = gap.det_max_gap.max((det - det_closed).abs());
            gap.det_max_abs = gap.det_max_abs.max(det.abs());
        }
        let mut it = c.into_iter().map(|d| Field { grid: g, data: d });
        samples.push(Metric3Sample {
            g11: it.next().unwrap(),
            g12: it.next().unwrap(),
            g13: it.next().unwrap(),
            g22: it.next().unwrap(),
            g23: it.next().unwrap(),
            g33: it.next().unwrap(),
            t: st.t,
        });
        gaps.push(gap);
    }
    Ok((samples, gaps))
}

/// Symmetric 3x3 tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym3Field {
    /// Components `(11, 12, 13, 22, 23, 33)`.
    pub c: [ScalarField; 6],
    pub t: f64,
}

impl Sym3Field {
    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        let (a, b) = (i.min(j), i.max(j));
        let idx = match (a, b) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            _ => 5,
        };
        &self.c[idx]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }
}

/// Ricci tensor of the metric on `(x, y, t)` at every level that has two
/// neighbours on each side, with time derivatives by central differences of
/// spacing `dt`.
pub fn ricci3_numeric(samples: &[Metric3Sample], dt: f64, order: StencilOrder, floor: f64) -> Result<Vec<Sym3Field>> {
    if samples.len() < 5 {
        return Err(FlowError::InsufficientHistory { needed: 5, got: samples.len() });
    }
    let grid = samples[0].grid();
    let n = grid.len();
    for s in samples {
        let d = det3(s);
        if let Some(node) = d.data.iter().position(|v| !(v.abs() > floor)) {
            return Err(FlowError::DegenerateMetric { node, value: d.data[node] });
        }
    }
    // Christoffel symbols at levels 1..len-1
    let mut gammas: Vec<Vec<Cube<3>>> = vec![Vec::new(); samples.len()];
    for lvl in 1..samples.len() - 1 {
        let s = &samples[lvl];
        let mut d = [[[0.0; 3]; 3]; 3];
        let mut dg: Vec<Cube<3>> = vec![d; n];
        for i in 0..3 {
            for j in i..3 {
                let c = s.component(i, j);
                let (cx, cy) = (c.dx(order), c.dy(order));
                let ct = samples[lvl + 1].component(i, j).sub(samples[lvl - 1].component(i, j)).scale(0.5 / dt);
                for k in 0..n {
                    for (l, f) in [&cx, &cy, &ct].into_iter().enumerate() {
                        dg[k][l][i][j] = f.data[k];
                        dg[k][l][j][i] = f.data[k];
                    }
                }
            }
        }
        gammas[lvl] = (0..n)
            .map(|k| {
                let gi = tensor::inverse(&s.at(k)).expect("determinant checked above");
                d = tensor::christoffel(&gi, &dg[k]);
                d
            })
            .collect();
    }
    let mut out = Vec::new();
    for lvl in 2..samples.len() - 2 {
        let mut dgam = vec![[[[[0.0; 3]; 3]; 3]; 3]; n];
        for a in 0..3 {
            for b in 0..3 {
                for c in b..3 {
                    let fld = Field { grid, data: gammas[lvl].iter().map(|gm| gm[a][b][c]).collect::<Vec<f64>>() };
                    let (fx, fy) = (fld.dx(order), fld.dy(order));
                    for k in 0..n {
                        let ft = (gammas[lvl + 1][k][a][b][c] - gammas[lvl - 1][k][a][b][c]) * 0.5 / dt;
                        for (l, v) in [fx.data[k], fy.data[k], ft].into_iter().enumerate() {
                            dgam[k][l][a][b][c] = v;
                            dgam[k][l][a][c][b] = v;
                        }
                    }
                }
            }
        }
        let ric: Vec<[[f64; 3]; 3]> = (0..n).map(|k| tensor::ricci(&gammas[lvl][k], &dgam[k])).collect();
        let comp = |i: usize, j: usize| Field { grid, data: ric.iter().map(|r| r[i][j]).collect::<Vec<f64>>() };
        out.push(Sym3Field { c: [comp(0, 0), comp(0, 1), comp(0, 2), comp(1, 1), comp(1, 2), comp(2, 2)], t: samples[lvl].t });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{fundamental_forms, LinearPlusPeriodic, G_FLOOR};
    use crate::field::Vec3;
    use std::f64::consts::PI;

    fn box_grid(n: usize) -> Grid2D {
        Grid2D::new(n, n, 2.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn plane_rates_and_decomposition_vanish() {
        let g = box_grid(16);
        let r = LinearPlusPeriodic::from_fn(g, Vec3::x(), Vec3::y(), |_, _| Vec3::zeros()).unwrap();
        let jet = SurfaceJet::new(&r, StencilOrder::Second);
        let forms = fundamental_forms(&jet, G_FLOOR).unwrap();
        let u = ScalarField::zeros(g);
        let rates = mi_metric_rhs(&jet, &forms, &u, StencilOrder::Second).unwrap();
        for f in [&rates.e_t, &rates.f_t, &rates.g_t, &rates.det_t] {
            assert_eq!(f.max_abs(), 0.0);
        }
        let res = mi_frame_decomposition_residual(&jet, &forms, &u, StencilOrder::Second).unwrap();
        assert_eq!(res.velocity.max_abs(), 0.0);
        assert_eq!(res.potential.max_abs(), 0.0);
    }

    #[test]
    fn flat_torus_is_rf_fixed_point() {
        let g = box_grid(16);
        let m = ConformalMetric2D { phi: ScalarField::constant(g, 0.4), t: 0.0 };
        assert_eq!(conformal_rf_rhs(&m, false, StencilOrder::Second).max_abs(), 0.0);
        assert_eq!(conformal_rf_rhs(&m, true, StencilOrder::Second).max_abs(), 0.0);
    }

    #[test]
    fn round_sphere_factor_has_unit_rate() {
        // e^{2 phi} = 4 / (1 + x^2 + y^2)^2 has R = 2; check away from the wrap
        let g = Grid2D::with_origin(128, 128, 2.0, 2.0, -1.0, -1.0).unwrap();
        let phi = ScalarField::from_fn(g, |x, y| (2.0 / (1.0 + x * x + y * y)).ln());
        let m = ConformalMetric2D { phi, t: 0.0 };
        let rate = conformal_rf_rhs(&m, false, StencilOrder::Fourth);
        for j in 16..112 {
            for i in 16..112 {
                assert!((rate.at(i, j) + 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn coupled_fixed_point() {
        let g = box_grid(16);
        let s = CoupledRFState::new(ScalarField::zeros(g), ScalarField::zeros(g), 0.7).unwrap();
        for v in [CoupledVariant::WaveUnit, CoupledVariant::HeatUnit, CoupledVariant::Wave, CoupledVariant::Heat] {
            let n = coupled_rf_step(&s, v, 1e-3, &CoupledOptions::default()).unwrap();
            assert_eq!(n.phi.max_abs(), 0.0);
            assert_eq!(n.u.max_abs(), 0.0);
        }
    }

    #[test]
    fn flat_static_3d_metric_has_no_ricci() {
        let g = box_grid(16);
        let one = ScalarField::constant(g, 1.0);
        let z = ScalarField::zeros(g);
        let samples: Vec<Metric3Sample> = (0..5).map(|k| Metric3Sample::product(&one, &z, &one, 1.0, k as f64)).collect();
        let ric = ricci3_numeric(&samples, 1.0, StencilOrder::Second, 1e-10).unwrap();
        assert_eq!(ric.len(), 1);
        assert_eq!(ric[0].max_abs(), 0.0);
        assert!(matches!(ricci3_numeric(&samples[..4], 1.0, StencilOrder::Second, 1e-10), Err(FlowError::InsufficientHistory { .. })));
    }
}
