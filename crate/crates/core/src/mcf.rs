//! Mean-curvature flow of graphs and of parametric periodic surfaces, and the
//! dissipation identities along parametric runs.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::field::{antiderivative_x_discrete, Deriv, Field, Grid2D, ScalarField, StencilOrder, Vec3, VectorField3};
use crate::integrate::{self, Integrator};
use crate::surface::{curvatures, fundamental_forms, FundamentalForms, LinearPlusPeriodic, SurfaceJet, G_FLOOR};

/// Drift `xi` of the graph flow.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Constant(Vec3),
    Field(VectorField3),
}

impl Drift {
    fn at(&self, k: usize) -> Vec3 {
        match self {
            Drift::Constant(v) => *v,
            Drift::Field(f) => f.data[k],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub phi: ScalarField,
    pub t: f64,
    pub xi: Drift,
}

impl GraphState {
    pub fn new(phi: ScalarField, xi: Vec3) -> Self {
        GraphState { phi, t: 0.0, xi: Drift::Constant(xi) }
    }
}

/// `phi_t = [(1+p2^2) p11 + (1+p1^2) p22 - 2 p1 p2 p12] / W^2 + xi1 p1 + xi2 p2 - xi3`.
pub fn mcf_graph_rhs(state: &GraphState, order: StencilOrder) -> Result<ScalarField> {
    if let Drift::Field(f) = &state.xi {
        state.phi.same_grid(f)?;
    }
    Ok(graph_rhs(&state.phi, &state.xi, order))
}

fn graph_rhs(phi: &ScalarField, xi: &Drift, order: StencilOrder) -> ScalarField {
    let p1 = phi.dx(order);
    let p2 = phi.dy(order);
    let p11 = phi.derivative(Deriv::XX, order);
    let p12 = phi.derivative(Deriv::XY, order);
    let p22 = phi.derivative(Deriv::YY, order);
    let data = (0..phi.data.len())
        .into_par_iter()
        .map(|k| {
            let (a, b) = (p1.data[k], p2.data[k]);
            let num = (1.0 + b * b) * p11.data[k] + (1.0 + a * a) * p22.data[k] - 2.0 * a * b * p12.data[k];
            let x = xi.at(k);
            num / (1.0 + a * a + b * b) + x[0] * a + x[1] * b - x[2]
        })
        .collect();
    Field { grid: phi.grid, data }
}

/// Exact boundary data: value and time derivative at `(x, y, t)`.
pub type ExactFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Boundary treatment of the graph chart.
#[derive(Clone, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    /// A ring of `width` nodes along the box edge follows given data; use on
    /// charts that are not periods of the surface.
    Pinned { width: usize, value: ExactFn, rate: ExactFn },
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "Periodic"),
            Boundary::Pinned { width, .. } => write!(f, "Pinned {{ width: {width} }}"),
        }
    }
}

fn in_ring(g: &Grid2D, i: usize, j: usize, w: usize) -> bool {
    i < w || j < w || i + w >= g.nx || j + w >= g.ny
}

#[derive(Debug, Clone)]
pub struct McfParams {
    pub dt: f64,
    pub order: StencilOrder,
    pub integrator: Integrator,
    /// Ceiling on `max|grad phi|` and `max|phi_t|`.
    pub ceiling: f64,
    pub boundary: Boundary,
}

impl McfParams {
    pub fn new(dt: f64) -> Self {
        McfParams { dt, order: StencilOrder::Second, integrator: Integrator::Rk4, ceiling: 1e6, boundary: Boundary::Periodic }
    }

    pub fn stability_bound(grid: &Grid2D) -> f64 {
        0.2 * grid.h_min().powi(2)
    }
}

#[derive(Debug, Clone)]
pub struct GraphTrajectory {
    pub frames: Vec<GraphState>,
    pub frame_dt: f64,
}

/// Explicit integration of the graph flow, storing every `stride`-th state.
pub fn mcf_evolve(state: &GraphState, params: &McfParams, n_steps: usize, stride: usize) -> Result<GraphTrajectory> {
    let g = state.phi.grid;
    let bound = McfParams::stability_bound(&g);
    if !(params.dt > 0.0 && params.dt <= bound) {
        return Err(FlowError::Unstable { dt: params.dt, bound });
    }
    if let Drift::Field(f) = &state.xi {
        state.phi.same_grid(f)?;
    }
    let stride = stride.max(1);
    let order = params.order;
    let rhs = |t: f64, phi: &ScalarField| -> Result<ScalarField> {
        let mut r = graph_rhs(phi, &state.xi, order);
        if let Boundary::Pinned { width, rate, .. } = &params.boundary {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    if in_ring(&g, i, j, *width) {
                        r.data[g.idx(i, j)] = rate(g.x(i), g.y(j), t);
                    }
                }
            }
        }
        Ok(r)
    };
    let mut frames = vec![state.clone()];
    let mut phi = state.phi.clone();
    for step in 1..=n_steps {
        let t0 = state.t + (step - 1) as f64 * params.dt;
        let t = state.t + step as f64 * params.dt;
        phi = integrate::step(params.integrator, t0, &phi, params.dt, rhs)?;
        if let Boundary::Pinned { width, value, .. } = &params.boundary {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    if in_ring(&g, i, j, *width) {
                        phi.data[g.idx(i, j)] = value(g.x(i), g.y(j), t);
                    }
                }
            }
        }
        let grad = phi.dx(order).zip_map(&phi.dy(order), |a, b| a.hypot(b));
        let rate = rhs(t, &phi)?;
        if !(grad.max_abs() <= params.ceiling && rate.max_abs() <= params.ceiling) {
            return Err(FlowError::BlowUp(t));
        }
        if step % stride == 0 {
            frames.push(GraphState { phi: phi.clone(), t, xi: state.xi.clone() });
        }
    }
    Ok(GraphTrajectory { frames, frame_dt: params.dt * stride as f64 })
}

/// `V` with `V_x = r_x ^ J r_x`, zero x-mean per row.
pub fn anisotropic_drift(r_x: &VectorField3, j: Vec3, order: StencilOrder) -> Result<VectorField3> {
    let src = r_x.map(|v| v.cross(&v.component_mul(&j)));
    let comps = (0..3)
        .map(|c| antiderivative_x_discrete(&src.component(c), 1e-8, order))
        .collect::<Result<Vec<_>>>()?;
    VectorField3::from_components(&comps[0], &comps[1], &comps[2])
}

/// `H n - xi`, plus the anisotropic drift when `j` is given.
pub fn parametric_normal_flow_rhs(
    jet: &SurfaceJet,
    xi: Vec3,
    j: Option<Vec3>,
    order: StencilOrder,
) -> Result<VectorField3> {
    let forms = fundamental_forms(jet, G_FLOOR)?;
    let (h, _) = curvatures(&forms);
    let mut v = forms.normal.scale_by(&h).map(|n| n - xi);
    if let Some(j) = j {
        v = v.add(&anisotropic_drift(&jet.r_x, j, order)?);
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct ParametricTrajectory {
    pub frames: Vec<LinearPlusPeriodic>,
    pub times: Vec<f64>,
    pub frame_dt: f64,
}

/// Integrates `r_t = H n - xi (+ V)` keeping the linear part of `r` fixed.
pub fn parametric_evolve(
    r0: &LinearPlusPeriodic,
    xi: Vec3,
    j: Option<Vec3>,
    dt: f64,
    order: StencilOrder,
    n_steps: usize,
    stride: usize,
) -> Result<ParametricTrajectory> {
    let g = r0.grid();
    let bound = McfParams::stability_bound(&g);
    if !(dt > 0.0 && dt <= bound) {
        return Err(FlowError::Unstable { dt, bound });
    }
    let stride = stride.max(1);
    let rebuild = |q: &VectorField3| LinearPlusPeriodic::new(r0.slope_x.clone(), r0.slope_y, q.clone());
    let mut q = r0.periodic.clone();
    for j in 0..g.ny {
        for i in 0..g.nx {
            q.data[g.idx(i, j)] += r0.row_offset[j];
        }
    }
    let mut frames = vec![r0.clone()];
    let mut times = vec![0.0];
    for step in 1..=n_steps {
        q = integrate::step(Integrator::Rk4, 0.0, &q, dt, |_, q: &VectorField3| {
            let jet = SurfaceJet::new(&rebuild(q)?, order);
            parametric_normal_flow_rhs(&jet, xi, j, order)
        })?;
        if step % stride == 0 {
            frames.push(rebuild(&q)?);
            times.push(step as f64 * dt);
        }
    }
    Ok(ParametricTrajectory { frames, times, frame_dt: dt * stride as f64 })
}

/// Laplace-Beltrami operator `(1/sqrt g) d_i (sqrt g g^ij d_j f)`.
pub fn laplace_beltrami(forms: &FundamentalForms, f: &ScalarField, order: StencilOrder) -> ScalarField {
    let sg = forms.sqrt_det();
    let (fx, fy) = (f.dx(order), f.dy(order));
    let n = f.data.len();
    let mut ax = Vec::with_capacity(n);
    let mut ay = Vec::with_capacity(n);
    for k in 0..n {
        let (e, ff, gg, d) = (forms.e.data[k], forms.f.data[k], forms.g.data[k], forms.det.data[k]);
        let s = sg.data[k];
        ax.push(s * (gg * fx.data[k] - ff * fy.data[k]) / d);
        ay.push(s * (-ff * fx.data[k] + e * fy.data[k]) / d);
    }
    let div = Field { grid: f.grid, data: ax }.dx(order).add(&Field { grid: f.grid, data: ay }.dy(order));
    div.zip_map(&sg, |a, s| a / s)
}

/// `Tr K^2 = g^ik g^jl b_ij b_kl`.
pub fn second_form_norm2(forms: &FundamentalForms) -> ScalarField {
    let data = (0..forms.e.data.len())
        .map(|k| {
            let (e, f, g, d) = (forms.e.data[k], forms.f.data[k], forms.g.data[k], forms.det.data[k]);
            let (l, m, n) = (forms.l.data[k], forms.m.data[k], forms.n.data[k]);
            // A = g^{-1} b
            let a11 = (g * l - f * m) / d;
            let a12 = (g * m - f * n) / d;
            let a21 = (-f * l + e * m) / d;
            let a22 = (-f * m + e * n) / d;
            a11 * a11 + 2.0 * a12 * a21 + a22 * a22
        })
        .collect();
    Field { grid: forms.grid(), data }
}

/// Max and root-mean-square of a residual, plus an optional refinement slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub max_norm: f64,
    pub l2_norm: f64,
}

impl Norms {
    pub fn of(f: &ScalarField) -> Self {
        Norms { max_norm: f.max_abs(), l2_norm: f.rms() }
    }

    fn worst(self, o: Norms) -> Norms {
        Norms { max_norm: self.max_norm.max(o.max_norm), l2_norm: self.l2_norm.max(o.l2_norm) }
    }
}

/// Dissipation residuals over the interior frames of a parametric run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DissipationReport {
    /// `(ln sqrt g)_t + H^2`.
    pub log_area_rate: Norms,
    /// `H_t - (Lap_g H + |K|^2 H)`.
    pub mean_curvature_rate: Norms,
    /// `(ln sqrt g)_tt + 2 H Lap_g H + 2 |K|^2 H^2`.
    pub log_area_accel: Norms,
    /// `(sqrt g)_tt - (-2 H Lap_g H - 2 |K|^2 H^2 + H^4) sqrt g`.
    pub area_density_accel: Norms,
    /// Total area at every frame.
    pub areas: Vec<f64>,
}

/// Evaluates the dissipation identities with central time differences of
/// spacing `frame_dt`.
pub fn dissipation_residuals(traj: &ParametricTrajectory, order: StencilOrder) -> Result<DissipationReport> {
    if traj.frames.len() < 3 {
        return Err(FlowError::InsufficientHistory { needed: 3, got: traj.frames.len() });
    }
    let forms = traj
        .frames
        .iter()
        .map(|r| fundamental_forms(&SurfaceJet::new(r, order), G_FLOOR))
        .collect::<Result<Vec<_>>>()?;
    let dt = traj.frame_dt;
    let logs: Vec<ScalarField> = forms.iter().map(|f| f.sqrt_det().map(f64::ln)).collect();
    let sgs: Vec<ScalarField> = forms.iter().map(|f| f.sqrt_det()).collect();
    let hs: Vec<ScalarField> = forms.iter().map(|f| curvatures(f).0).collect();
    let zero = Norms { max_norm: 0.0, l2_norm: 0.0 };
    let (mut r1, mut r2, mut r3, mut r4) = (zero, zero, zero, zero);
    for k in 1..forms.len() - 1 {
        let fm = &forms[k];
        let h = &hs[k];
        let lap = laplace_beltrami(fm, h, order);
        let k2 = second_form_norm2(fm);
        let d1 = |v: &[ScalarField]| v[k + 1].sub(&v[k - 1]).scale(0.5 / dt);
        let d2 = |v: &[ScalarField]| v[k + 1].sub(&v[k].scale(2.0)).add(&v[k - 1]).scale(1.0 / (dt * dt));
        let h2 = h.mul(h);
        let hlap = h.mul(&lap);
        let k2h2 = k2.mul(&h2);
        r1 = r1.worst(Norms::of(&d1(&logs).add(&h2)));
        r2 = r2.worst(Norms::of(&d1(&hs).sub(&lap.add(&k2.mul(h)))));
        r3 = r3.worst(Norms::of(&d2(&logs).add(&hlap.scale(2.0)).add(&k2h2.scale(2.0))));
        let bracket = hlap.scale(-2.0).sub(&k2h2.scale(2.0)).add(&h2.mul(&h2));
        r4 = r4.worst(Norms::of(&d2(&sgs).sub(&bracket.mul(&sgs[k]))));
    }
    Ok(DissipationReport {
        log_area_rate: r1,
        mean_curvature_rate: r2,
        log_area_accel: r3,
        area_density_accel: r4,
        areas: forms.iter().map(|f| f.area()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use std::f64::consts::PI;

    #[test]
    fn plane_and_translation() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        let flat = GraphState::new(ScalarField::constant(g, 0.3), Vec3::zeros());
        assert_eq!(mcf_graph_rhs(&flat, StencilOrder::Second).unwrap().max_abs(), 0.0);
        let up = GraphState::new(ScalarField::constant(g, 0.3), Vec3::z());
        assert!(mcf_graph_rhs(&up, StencilOrder::Second).unwrap().data.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn sphere_apex_speed() {
        let rho = 2.0;
        let g = Grid2D::with_origin(64, 64, 1.0, 1.0, -0.5, -0.5).unwrap();
        let s = GraphState::new(presets::sphere_cap(g, rho), Vec3::zeros());
        let r = mcf_graph_rhs(&s, StencilOrder::Fourth).unwrap();
        assert!((r.at(32, 32) + 2.0 / rho).abs() < 1e-6);
    }

    #[test]
    fn pure_drift_transports_data() {
        let g = Grid2D::new(64, 8, 2.0 * PI, 2.0 * PI).unwrap();
        let phi = ScalarField::from_fn(g, |x, _| 1e-3 * x.sin());
        let xi = Vec3::new(1.0, 0.0, 0.0);
        let dt = 0.2 * g.h_min().powi(2);
        let n = 200;
        let tr = mcf_evolve(&GraphState::new(phi, xi), &McfParams::new(dt), n, n).unwrap();
        let t = n as f64 * dt;
        // phi_t = phi_x (+ tiny curvature term): transport to x + t
        let exact = ScalarField::from_fn(g, |x, _| 1e-3 * (x + t).sin() * (-t).exp());
        assert!(tr.frames[1].phi.sub(&exact).max_abs() < 1e-6);
    }

    #[test]
    fn step_guard() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        let s = GraphState::new(ScalarField::zeros(g), Vec3::zeros());
        assert!(matches!(mcf_evolve(&s, &McfParams::new(1.0), 1, 1), Err(FlowError::Unstable { .. })));
    }

    #[test]
    fn plane_parametric_flow_is_static() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        let r = LinearPlusPeriodic::from_fn(g, Vec3::x(), Vec3::y(), |_, _| Vec3::zeros()).unwrap();
        let jet = SurfaceJet::new(&r, StencilOrder::Second);
        assert_eq!(parametric_normal_flow_rhs(&jet, Vec3::zeros(), None, StencilOrder::Second).unwrap().max_norm(), 0.0);
        let v = parametric_normal_flow_rhs(&jet, Vec3::zeros(), Some(Vec3::new(2.0, 2.0, 2.0)), StencilOrder::Second);
        assert_eq!(v.unwrap().max_norm(), 0.0);
        let tr = parametric_evolve(&r, Vec3::zeros(), None, 1e-4, StencilOrder::Second, 6, 2).unwrap();
        let rep = dissipation_residuals(&tr, StencilOrder::Second).unwrap();
        assert_eq!(rep.log_area_rate.max_norm, 0.0);
        assert_eq!(rep.area_density_accel.max_norm, 0.0);
    }

    #[test]
    fn unit_sphere_moves_inward_at_speed_two() {
        // sampled on a latitude band, evaluated pointwise
        let jet_at = |x: f64, y: f64| {
            let (sx, cx) = x.sin_cos();
            let (sy, cy) = y.sin_cos();
            let r = Vec3::new(sx * cy, sx * sy, cx);
            let rx = Vec3::new(cx * cy, cx * sy, -sx);
            let ry = Vec3::new(-sx * sy, sx * cy, 0.0);
            let rxx = -r;
            let rxy = Vec3::new(-cx * sy, cx * cy, 0.0);
            let ryy = Vec3::new(-sx * cy, -sx * sy, 0.0);
            (r, crate::surface::forms_at(rx, ry, rxx, rxy, ryy))
        };
        for (x, y) in [(0.4, 0.1), (1.2, 2.0), (2.5, 4.0)] {
            let (r, f) = jet_at(x, y);
            let v = f.normal * f.mean_curvature();
            assert!((v + r * 2.0).norm() < 1e-13);
            assert!((f.gauss_curvature() - 1.0).abs() < 1e-13);
        }
    }
}
