//! Spin-field flows: the Heisenberg ferromagnet, the M-I equation with its
//! nonlocal potential, the Ishimori-type flow, and the generic geometric flow
//! written for the tangent `S = r_x`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::field::{
    antiderivative_x_discrete, derivative_1d, solve_hyperbolic_constraint_with, Deriv, Grid2D,
    HyperbolicTolerance, ScalarField, StencilOrder, Vec3, VectorField3,
};
use crate::integrate::{self, Integrator, OdeState};
use crate::surface;

/// Largest tolerated `||S| - 1|` for a spin field.
pub const UNIT_TOL: f64 = 1e-10;
/// Row means of the M-I source above this are rejected as unsolvable.
pub const SOLVABILITY_ERROR: f64 = 1e-6;
/// Row means above this are solvable but logged.
pub const SOLVABILITY_WARN: f64 = 1e-10;

/// Unit 3-vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinField(VectorField3);

impl SpinField {
    pub fn new(v: VectorField3) -> Result<Self> {
        v.check_finite()?;
        for (node, s) in v.data.iter().enumerate() {
            let deviation = (s.norm() - 1.0).abs();
            if deviation > UNIT_TOL {
                return Err(FlowError::NotUnit { node, deviation });
            }
        }
        Ok(SpinField(v))
    }

    /// Normalizes `v` pointwise.
    pub fn from_unnormalized(v: &VectorField3) -> Result<Self> {
        Ok(SpinField(v.normalize()?))
    }

    pub fn field(&self) -> &VectorField3 {
        &self.0
    }

    pub fn into_field(self) -> VectorField3 {
        self.0
    }

    pub fn grid(&self) -> Grid2D {
        self.0.grid
    }

    pub fn max_unit_deviation(&self) -> f64 {
        max_unit_deviation(&self.0)
    }
}

pub fn max_unit_deviation(v: &VectorField3) -> f64 {
    v.data.iter().fold(0.0_f64, |m, s| m.max((s.norm() - 1.0).abs()))
}

/// `S ^ S_xx`, the Heisenberg ferromagnet velocity. Rows are independent.
pub fn hf_rhs(s: &SpinField, order: StencilOrder) -> VectorField3 {
    s.0.cross(&s.0.derivative(Deriv::XX, order))
}

/// `S . (S_x ^ S_y)`.
pub fn triple_density(s: &VectorField3, order: StencilOrder) -> ScalarField {
    s.triple(&s.dx(order), &s.dy(order))
}

/// Solves `u_x = -S . (S_x ^ S_y)` for the zero-mean-per-row `u`.
///
/// The x-antiderivative inverts the same first-derivative stencil used by the
/// residual check, so `dx(u) + S.(S_x^S_y)` is the row-mean defect only.
pub fn mi_constraint_u(s: &SpinField, order: StencilOrder) -> Result<ScalarField> {
    let src = triple_density(&s.0, order).scale(-1.0);
    let worst = src.row_means().into_iter().map(f64::abs).fold(0.0, f64::max);
    if worst > SOLVABILITY_WARN && worst <= SOLVABILITY_ERROR {
        warn!("M-I source row mean {worst:e} exceeds {SOLVABILITY_WARN:e}; dropping it");
    }
    let centred = src.with_row_means_removed(SOLVABILITY_ERROR)?;
    antiderivative_x_discrete(&centred, SOLVABILITY_WARN, order)
}

/// Pointwise `|u_x + S.(S_x^S_y)|`, the residual of the M-I constraint.
pub fn mi_constraint_residual(s: &VectorField3, u: &ScalarField, order: StencilOrder) -> ScalarField {
    u.dx(order).add(&triple_density(s, order)).map(f64::abs)
}

/// `S ^ S_y + u S`; its x-derivative is the M-I velocity and the field itself
/// is the surface velocity `r_t`.
pub fn mi_flux(s: &VectorField3, u: &ScalarField, order: StencilOrder) -> VectorField3 {
    s.cross(&s.dy(order)).add(&s.scale_by(u))
}

/// M-I velocity `(S ^ S_y + u S)_x`.
pub fn mi_rhs(state: &MIState, order: StencilOrder) -> VectorField3 {
    mi_flux(state.s.field(), &state.u, order).dx(order)
}

/// Source of the Ishimori constraint, `-2 a^2 S.(S_x^S_y)`.
pub fn ishimori_source(s: &SpinField, alpha2: f64, order: StencilOrder) -> ScalarField {
    triple_density(&s.0, order).scale(-2.0 * alpha2)
}

/// Tolerances used when the Ishimori potential is re-solved inside a flow:
/// lattice-level mean and resonant content is dropped.
pub const ISHIMORI_TOL: HyperbolicTolerance = HyperbolicTolerance { mean: 1e-6, resonant: 1e-6, near_null: 1e-9 };

pub fn ishimori_u(s: &SpinField, alpha2: f64, order: StencilOrder, tol: HyperbolicTolerance) -> Result<ScalarField> {
    solve_hyperbolic_constraint_with(&ishimori_source(s, alpha2, order), alpha2, tol)
}

/// Ishimori velocity `S ^ (S_xx + a^2 S_yy) + u_x S_y + u_y S_x` for a given
/// potential `u`.
pub fn ishimori_rhs_with_u(s: &SpinField, u: &ScalarField, alpha2: f64, order: StencilOrder) -> VectorField3 {
    let f = &s.0;
    let lap = f.derivative(Deriv::XX, order).axpy(alpha2, &f.derivative(Deriv::YY, order));
    f.cross(&lap)
        .add(&f.dy(order).scale_by(&u.dx(order)))
        .add(&f.dx(order).scale_by(&u.dy(order)))
}

/// Ishimori velocity with the potential solved from the constraint.
pub fn ishimori_rhs(s: &SpinField, alpha2: f64, order: StencilOrder) -> Result<VectorField3> {
    let u = ishimori_u(s, alpha2, order, HyperbolicTolerance::default())?;
    Ok(ishimori_rhs_with_u(s, &u, alpha2, order))
}

/// Drift `V` with `V_x = S ^ J S` for diagonal `J`, zero x-mean per row.
pub fn anisotropy_velocity(s: &SpinField, j: Vec3, tol_mean: f64, order: StencilOrder) -> Result<VectorField3> {
    let src = s.0.map(|v| v.cross(&v.component_mul(&j)));
    let comps = (0..3)
        .map(|c| antiderivative_x_discrete(&src.component(c), tol_mean, order))
        .collect::<Result<Vec<_>>>()?;
    VectorField3::from_components(&comps[0], &comps[1], &comps[2])
}

/// Normal speed `M` of the generic flow `r_t = M n - xi + u r_x`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalSpeed {
    MeanCurvature,
    Field(ScalarField),
}

/// Which spin flow to integrate.
#[derive(Debug, Clone, PartialEq)]
pub enum SpinFlow {
    /// `S_t = S ^ S_xx` row by row (the flow variable plays the role of y).
    Hf,
    /// `S_t = (S ^ S_y + u S)_x`, `u_x = -S.(S_x ^ S_y)`.
    Mi,
    /// Ishimori-type flow with hyperbolic constraint parameter `alpha2`.
    Ishimori { alpha2: f64 },
    /// `S_t = (M n - xi + u S)_x` with the M-I potential.
    General { speed: NormalSpeed, xi: Vec3 },
}

/// Integration settings for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "yes")]
    pub project_each_step: bool,
    #[serde(default)]
    pub order: StencilOrder,
    /// Blow-up ceiling on `max|u|` and `max|S_t|`.
    #[serde(default = "default_ceiling")]
    pub blowup_ceiling: f64,
    /// Largest tolerated constraint residual before the run is abandoned.
    #[serde(default = "default_constraint_limit")]
    pub constraint_limit: f64,
}

fn yes() -> bool {
    true
}
fn default_ceiling() -> f64 {
    1e6
}
fn default_constraint_limit() -> f64 {
    1e-4
}

impl FlowParams {
    pub fn new(dt: f64) -> Self {
        FlowParams {
            dt,
            integrator: Integrator::Rk4,
            project_each_step: true,
            order: StencilOrder::Second,
            blowup_ceiling: default_ceiling(),
            constraint_limit: default_constraint_limit(),
        }
    }

    pub fn with_order(mut self, order: StencilOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_projection(mut self, on: bool) -> Self {
        self.project_each_step = on;
        self
    }

    /// Diffusion-scaled stability bound `0.25 h^2` for the given flow.
    pub fn stability_bound(grid: &Grid2D, flow: &SpinFlow) -> f64 {
        let h = match flow {
            SpinFlow::Hf => grid.hx(),
            _ => grid.h_min(),
        };
        0.25 * h * h
    }

    pub fn check(&self, grid: &Grid2D, flow: &SpinFlow) -> Result<()> {
        let bound = Self::stability_bound(grid, flow);
        if !(self.dt > 0.0 && self.dt < bound) {
            return Err(FlowError::Unstable { dt: self.dt, bound });
        }
        Ok(())
    }
}

/// Spin field, its potential, and the x-mean of `r_y` per row.
///
/// `ry_mean` fixes the free `c(y)` in the surface `r` with `r_x = S`; it moves
/// with the flow as `d/dt ry_mean = d/dy (x-mean of r_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MIState {
    pub s: SpinField,
    pub u: ScalarField,
    pub ry_mean: Vec<Vec3>,
    pub t: f64,
}

impl MIState {
    /// State with the M-I potential solved from `s` and `r_y` gauge zero.
    pub fn new(s: SpinField, order: StencilOrder) -> Result<Self> {
        let u = mi_constraint_u(&s, order)?;
        let ny = s.grid().ny;
        Ok(MIState { s, u, ry_mean: vec![Vec3::zeros(); ny], t: 0.0 })
    }

    /// State whose potential is given (not necessarily consistent).
    pub fn with_potential(s: SpinField, u: ScalarField) -> Result<Self> {
        s.field().same_grid(&u)?;
        let ny = s.grid().ny;
        Ok(MIState { s, u, ry_mean: vec![Vec3::zeros(); ny], t: 0.0 })
    }

    pub fn with_ry_mean(mut self, v: Vec<Vec3>) -> Self {
        assert_eq!(v.len(), self.s.grid().ny);
        self.ry_mean = v;
        self
    }

    pub fn grid(&self) -> Grid2D {
        self.s.grid()
    }
}

/// Per-frame diagnostics recorded by [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub constraint_residual: f64,
    pub unit_deviation: f64,
    pub max_u: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frames: Vec<MIState>,
    /// Flow-time spacing between stored frames.
    pub frame_dt: f64,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn last(&self) -> &MIState {
        self.frames.last().expect("trajectory holds at least the initial frame")
    }
}

/// Flat state advanced by the integrator: spin vectors plus `ry_mean`.
#[derive(Clone)]
struct Packed {
    s: VectorField3,
    ry: Vec<Vec3>,
}

impl OdeState for Packed {
    fn axpy(&self, a: f64, k: &Self) -> Self {
        Packed { s: self.s.axpy(a, &k.s), ry: self.ry.iter().zip(&k.ry).map(|(x, y)| x + y * a).collect() }
    }
}

impl OdeState for Vec<Vec3> {
    fn axpy(&self, a: f64, k: &Self) -> Self {
        self.iter().zip(k).map(|(x, y)| x + y * a).collect()
    }
}

/// Potential for the flow at the given spin field.
fn potential(flow: &SpinFlow, s: &SpinField, order: StencilOrder) -> Result<ScalarField> {
    match flow {
        SpinFlow::Hf => Ok(ScalarField::zeros(s.grid())),
        SpinFlow::Mi | SpinFlow::General { .. } => mi_constraint_u(s, order),
        SpinFlow::Ishimori { alpha2 } => ishimori_u(s, *alpha2, order, ISHIMORI_TOL),
    }
}

/// Surface velocity `r_t` (when the flow has one) and spin velocity `S_t`.
fn velocities(
    flow: &SpinFlow,
    s: &SpinField,
    u: &ScalarField,
    ry: &[Vec3],
    order: StencilOrder,
) -> Result<(Option<VectorField3>, VectorField3)> {
    match flow {
        SpinFlow::Hf => Ok((None, hf_rhs(s, order))),
        SpinFlow::Mi => {
            let q = mi_flux(s.field(), u, order);
            let st = q.dx(order);
            Ok((Some(q), st))
        }
        SpinFlow::Ishimori { alpha2 } => Ok((None, ishimori_rhs_with_u(s, u, *alpha2, order))),
        SpinFlow::General { speed, xi } => {
            let q = general_flux(s, u, ry, speed, *xi, order)?;
            let st = q.dx(order);
            Ok((Some(q), st))
        }
    }
}

/// `M n - xi + u S` with `n` and (for `M = H`) the mean curvature taken from
/// the surface reconstructed from `S`.
pub fn general_flux(
    s: &SpinField,
    u: &ScalarField,
    ry_mean: &[Vec3],
    speed: &NormalSpeed,
    xi: Vec3,
    order: StencilOrder,
) -> Result<VectorField3> {
    let r = surface::reconstruct_position_with_drift(s, ry_mean, order)?;
    let jet = surface::SurfaceJet::new(&r, order);
    let forms = surface::fundamental_forms(&jet, surface::G_FLOOR)?;
    let m = match speed {
        NormalSpeed::MeanCurvature => surface::curvatures(&forms).0,
        NormalSpeed::Field(m) => m.clone(),
    };
    Ok(forms.normal.scale_by(&m).add(&s.field().scale_by(u)).map(|v| v - xi))
}

/// Integrates a spin flow for `n_steps`, storing every `stride`-th state.
///
/// The potential is re-solved at every stage; with `project_each_step` the
/// spins are renormalized after each step.
pub fn evolve(initial: &MIState, flow: &SpinFlow, params: &FlowParams, n_steps: usize, stride: usize) -> Result<Trajectory> {
    let grid = initial.grid();
    params.check(&grid, flow)?;
    if let SpinFlow::General { speed: NormalSpeed::Field(m), .. } = flow {
        m.same_grid(initial.s.field())?;
    }
    let stride = stride.max(1);
    let order = params.order;
    let dt = params.dt;

    let mut frames = vec![initial.clone()];
    let mut diagnostics = vec![diagnose(initial, flow, order)];
    let mut y = Packed { s: initial.s.field().clone(), ry: initial.ry_mean.clone() };
    let mut t = initial.t;

    for step in 1..=n_steps {
        let next = integrate::step(params.integrator, t, &y, dt, |_, st: &Packed| {
            let stage = SpinField(st.s.clone());
            let u = potential(flow, &stage, order)?;
            let (q, sdot) = velocities(flow, &stage, &u, &st.ry, order)?;
            let ry = match q {
                Some(q) => row_mean_y_derivative(&q, order),
                None => vec![Vec3::zeros(); grid.ny],
            };
            Ok(Packed { s: sdot, ry })
        })?;
        t = initial.t + step as f64 * dt;
        let s_new = if params.project_each_step { next.s.normalize()? } else { next.s.clone() };
        y = Packed { s: s_new, ry: next.ry };

        let s_field = SpinField(y.s.clone());
        let u = potential(flow, &s_field, order)?;
        let (_, sdot) = velocities(flow, &s_field, &u, &y.ry, order)?;
        let max_u = u.max_abs();
        let max_st = sdot.max_norm();
        if !(max_u <= params.blowup_ceiling && max_st <= params.blowup_ceiling) {
            return Err(FlowError::BlowUp(t));
        }
        let state = MIState { s: s_field, u, ry_mean: y.ry.clone(), t };
        let diag = diagnose(&state, flow, order);
        if diag.constraint_residual > params.constraint_limit {
            return Err(FlowError::ConstraintLost { t, residual: diag.constraint_residual });
        }
        if step % stride == 0 {
            frames.push(state);
            diagnostics.push(diag);
        }
    }
    Ok(Trajectory { frames, frame_dt: dt * stride as f64, diagnostics })
}

fn diagnose(state: &MIState, flow: &SpinFlow, order: StencilOrder) -> StepDiagnostics {
    let constraint_residual = match flow {
        SpinFlow::Mi | SpinFlow::General { .. } => mi_constraint_residual(state.s.field(), &state.u, order).max_abs(),
        SpinFlow::Ishimori { alpha2 } => {
            let lhs = state.u.derivative(Deriv::XX, order).axpy(-alpha2, &state.u.derivative(Deriv::YY, order));
            lhs.sub(&ishimori_source(&state.s, *alpha2, order)).max_abs()
        }
        SpinFlow::Hf => 0.0,
    };
    StepDiagnostics {
        t: state.t,
        constraint_residual,
        unit_deviation: state.s.max_unit_deviation(),
        max_u: state.u.max_abs(),
    }
}

/// `d/dy` of the per-row x-mean of `q`.
fn row_mean_y_derivative(q: &VectorField3, order: StencilOrder) -> Vec<Vec3> {
    let means = q.row_means();
    derivative_1d(&means, q.grid.hy(), 1, order)
}

/// Settings for [`hf_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub order: StencilOrder,
    pub integrator: Integrator,
    /// Integration steps between consecutive stored rows.
    pub substeps: usize,
    pub project: bool,
}

/// Advances one row of the 1+1 ferromagnet `S_y = S ^ S_xx` by `n_steps`
/// steps of size `dt` on a periodic row with spacing `hx`.
pub fn hf_march(
    initial: &[Vec3],
    hx: f64,
    dt: f64,
    n_steps: usize,
    order: StencilOrder,
    integrator: Integrator,
    project: bool,
) -> Result<Vec<Vec3>> {
    let bound = 0.25 * hx * hx;
    if !(dt > 0.0 && dt < bound) {
        return Err(FlowError::Unstable { dt, bound });
    }
    let mut row: Vec<Vec3> = initial.to_vec();
    for k in 0..n_steps {
        row = integrate::step(integrator, k as f64 * dt, &row, dt, |_, s: &Vec<Vec3>| {
            let sxx = derivative_1d(s, hx, 2, order);
            Ok(s.iter().zip(&sxx).map(|(a, b)| a.cross(b)).collect())
        })?;
        if project {
            for v in row.iter_mut() {
                *v /= v.norm();
            }
        }
    }
    if row.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(FlowError::BlowUp(n_steps as f64 * dt));
    }
    Ok(row)
}

/// Integrates the 1+1 ferromagnet `S_y = S ^ S_xx` from the row `initial`
/// (taken at `y = grid.y0`) and stores `S(x, y_j)` as row `j`.
pub fn hf_sweep(initial: &[Vec3], grid: Grid2D, p: SweepParams) -> Result<SpinField> {
    if initial.len() != grid.nx {
        return Err(FlowError::GridMismatch);
    }
    let substeps = p.substeps.max(1);
    let dt = grid.hy() / substeps as f64;
    let mut row: Vec<Vec3> = initial.to_vec();
    let mut data = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        if j > 0 {
            row = hf_march(&row, grid.hx(), dt, substeps, p.order, p.integrator, p.project)?;
        }
        data.extend_from_slice(&row);
    }
    SpinField::new(VectorField3::new(grid, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(n, n, 2.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn constant_spin_is_stationary_everywhere() {
        let g = grid(16);
        let s = SpinField::new(VectorField3::constant(g, Vec3::z())).unwrap();
        assert_eq!(hf_rhs(&s, StencilOrder::Fourth).max_norm(), 0.0);
        let st = MIState::new(s.clone(), StencilOrder::Second).unwrap();
        assert_eq!(st.u.max_abs(), 0.0);
        assert_eq!(mi_rhs(&st, StencilOrder::Second).max_norm(), 0.0);
        assert_eq!(ishimori_rhs(&s, 0.5, StencilOrder::Second).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn magnon_rhs_matches_hand_substitution() {
        // S_xx of a single mode is exactly -k_h^2 (S - S3 e3), k_h^2 the stencil symbol
        let (theta, k) = (PI / 3.0, 2.0);
        let g = Grid2D::new(64, 8, 2.0 * PI, 1.0).unwrap();
        let s = presets::magnon(g, theta, k, 0.0);
        let rhs = hf_rhs(&s, StencilOrder::Second);
        let h = g.hx();
        let kh2 = (2.0 - 2.0 * (k * h).cos()) / (h * h);
        let exact = VectorField3::from_fn(g, |x, _| {
            let phi = k * x;
            Vec3::new(phi.sin(), -phi.cos(), 0.0) * (kh2 * theta.cos() * theta.sin())
        });
        assert!(rhs.sub(&exact).max_norm() < 1e-12);
        assert!(rhs.dot(s.field()).max_abs() < 1e-12);
    }

    #[test]
    fn y_independent_data_freeze_mi() {
        let g = grid(32);
        let s = presets::magnon(g, 0.7, 1.0, 0.0);
        let st = MIState::new(s, StencilOrder::Second).unwrap();
        assert!(st.u.max_abs() < 1e-15);
        assert!(mi_rhs(&st, StencilOrder::Second).max_norm() < 1e-15);
    }

    #[test]
    fn ishimori_on_x_only_data_reduces_to_hf() {
        let g = grid(32);
        let s = presets::magnon(g, 0.7, 2.0, 0.0);
        let r = ishimori_rhs(&s, 0.5, StencilOrder::Second).unwrap();
        assert!(r.sub(&hf_rhs(&s, StencilOrder::Second)).max_norm() < 1e-13);
    }

    #[test]
    fn anisotropy_velocity_vanishes_for_isotropic_or_eigen_direction() {
        let g = grid(16);
        let s = presets::magnon(g, 0.4, 1.0, 0.0);
        let v = anisotropy_velocity(&s, Vec3::new(2.0, 2.0, 2.0), 1e-10, StencilOrder::Second).unwrap();
        assert!(v.max_norm() < 1e-14);
        let z = SpinField::new(VectorField3::constant(g, Vec3::z())).unwrap();
        let v = anisotropy_velocity(&z, Vec3::new(1.0, 3.0, 5.0), 1e-10, StencilOrder::Second).unwrap();
        assert_eq!(v.max_norm(), 0.0);
    }

    #[test]
    fn unstable_step_rejected() {
        let g = grid(16);
        let st = MIState::new(presets::magnon(g, 0.4, 1.0, 0.0), StencilOrder::Second).unwrap();
        let p = FlowParams::new(1.0);
        assert!(matches!(evolve(&st, &SpinFlow::Mi, &p, 1, 1), Err(FlowError::Unstable { .. })));
    }

    #[test]
    fn non_unit_spin_rejected() {
        let g = grid(8);
        let v = VectorField3::constant(g, Vec3::new(0.0, 0.0, 1.1));
        assert!(matches!(SpinField::new(v), Err(FlowError::NotUnit { .. })));
    }
}
