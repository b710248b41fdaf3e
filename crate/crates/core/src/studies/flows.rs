use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Refinement;
use crate::error::Result;
use crate::field::{Grid2D, ScalarField, StencilOrder, Vec3};
use crate::lax::{burgers_lambda_evolve, BurgersParams, BurgersRun, LambdaGrid, LambdaInitial};
use crate::mcf::{self, Boundary, GraphState, McfParams};
use crate::metric::{self, ConformalMetric2D, CoupledOptions, CoupledRFState, CoupledVariant, Laplacian, RfParams};
use crate::presets;

use super::geometry::random_graph_surface;

/// Shrinking sphere on a square chart around the apex, the chart's edge ring
/// pinned to the exact surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSetup {
    pub rho0: f64,
    pub n: usize,
    /// Half-width of the chart in units of `rho0`.
    pub half_width: f64,
    pub order: StencilOrder,
    /// Run until the radius reaches this fraction of `rho0`.
    pub end_ratio: f64,
    pub records: usize,
}

impl Default for SphereSetup {
    fn default() -> Self {
        SphereSetup { rho0: 1.0, n: 32, half_width: 0.3, order: StencilOrder::Second, end_ratio: 0.5, records: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereReport {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_exact: Vec<f64>,
    pub max_relative_error: f64,
}

pub fn shrinking_sphere(s: &SphereSetup) -> Result<SphereReport> {
    let a = s.half_width * s.rho0;
    let grid = Grid2D::with_origin(s.n, s.n, 2.0 * a, 2.0 * a, -a, -a)?;
    let rho0 = s.rho0;
    let value = move |x: f64, y: f64, t: f64| (rho0 * rho0 - 4.0 * t - x * x - y * y).sqrt();
    let boundary = Boundary::Pinned {
        width: s.order.reach(),
        value: Arc::new(value),
        rate: Arc::new(move |x, y, t| -2.0 / value(x, y, t)),
    };
    let t_end = (1.0 - s.end_ratio * s.end_ratio) * rho0 * rho0 / 4.0;
    let bound = McfParams::stability_bound(&grid);
    let records = s.records.max(1);
    let per = ((t_end / records as f64) / bound).ceil() as usize;
    let dt = t_end / (per * records) as f64;
    let params = McfParams { dt, order: s.order, boundary, ..McfParams::new(dt) };
    let state = GraphState::new(presets::sphere_cap(grid, rho0), Vec3::zeros());
    let traj = mcf::mcf_evolve(&state, &params, per * records, per)?;
    let c = s.n / 2;
    let mut rep = SphereReport { t: vec![], rho: vec![], rho_exact: vec![], max_relative_error: 0.0 };
    for f in &traj.frames {
        let exact = (rho0 * rho0 - 4.0 * f.t).sqrt();
        let got = f.phi.at(c, c);
        rep.max_relative_error = rep.max_relative_error.max((got - exact).abs() / exact);
        rep.t.push(f.t);
        rep.rho.push(got);
        rep.rho_exact.push(exact);
    }
    Ok(rep)
}

/// Parametric MCF of a random periodic graph surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationSetup {
    pub seed: u64,
    pub bandwidth: usize,
    pub amplitude: f64,
    /// Frame spacing in units of `h^2`, so time differences are `O(h^4)`.
    pub frame_factor: f64,
    pub frames: usize,
    pub order: StencilOrder,
}

impl Default for DissipationSetup {
    fn default() -> Self {
        DissipationSetup { seed: 5, bandwidth: 2, amplitude: 0.3, frame_factor: 0.25, frames: 3, order: StencilOrder::Fourth }
    }
}

pub fn parametric_run(s: &DissipationSetup, n: usize) -> Result<mcf::ParametricTrajectory> {
    let grid = Grid2D::new(n, n, 2.0 * PI, 2.0 * PI)?;
    let r0 = random_graph_surface(grid, s.seed, s.bandwidth, s.amplitude)?;
    let h = grid.h_min();
    let spacing = s.frame_factor * h * h;
    let per = (spacing / McfParams::stability_bound(&grid)).ceil() as usize;
    let dt = spacing / per as f64;
    mcf::parametric_evolve(&r0, Vec3::zeros(), None, dt, s.order, per * (s.frames.max(3) - 1), per)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationStudy {
    pub log_area_rate: Refinement,
    pub mean_curvature_rate: Refinement,
    pub log_area_accel: Refinement,
    pub area_density_accel: Refinement,
}

pub fn dissipation_study(s: &DissipationSetup, ns: &[usize]) -> Result<DissipationStudy> {
    let mut reps = Vec::new();
    let mut hs = Vec::new();
    for &n in ns {
        reps.push(mcf::dissipation_residuals(&parametric_run(s, n)?, s.order)?);
        hs.push(2.0 * PI / n as f64);
    }
    let col = |f: fn(&mcf::DissipationReport) -> f64| Refinement::new(ns.to_vec(), hs.clone(), reps.iter().map(f).collect());
    Ok(DissipationStudy {
        log_area_rate: col(|r| r.log_area_rate.max_norm),
        mean_curvature_rate: col(|r| r.mean_curvature_rate.max_norm),
        log_area_accel: col(|r| r.log_area_accel.max_norm),
        area_density_accel: col(|r| r.area_density_accel.max_norm),
    })
}

/// Total area at each frame of a longer parametric run, and whether it never
/// increases.
pub fn area_history(s: &DissipationSetup, n: usize, frames: usize) -> Result<(Vec<f64>, bool)> {
    let traj = parametric_run(&DissipationSetup { frames, ..*s }, n)?;
    let areas: Vec<f64> = traj
        .frames
        .iter()
        .map(|r| {
            crate::surface::fundamental_forms(&crate::surface::SurfaceJet::new(r, s.order), crate::surface::G_FLOOR)
                .map(|f| f.area())
        })
        .collect::<Result<_>>()?;
    let monotone = areas.windows(2).all(|w| w[1] <= w[0]);
    Ok((areas, monotone))
}

/// Conformal RF from a random factor on a `2 pi` torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfSetup {
    pub n: usize,
    pub seed: u64,
    pub amplitude: f64,
    pub t_end: f64,
    pub order: StencilOrder,
}

impl Default for RfSetup {
    fn default() -> Self {
        RfSetup { n: 32, seed: 3, amplitude: 0.3, t_end: 1.0, order: StencilOrder::Second }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfReport {
    pub stats: Vec<metric::RfStats>,
    /// `max |V(t) - V(0)| / V(0)` divided by the run time.
    pub volume_drift_per_time: f64,
    pub max_total_curvature: f64,
}

pub fn rf_run(s: &RfSetup, normalized: bool) -> Result<RfReport> {
    let grid = Grid2D::new(s.n, s.n, 2.0 * PI, 2.0 * PI)?;
    let phi = presets::random_smooth_scalar(grid, s.seed, 3, s.amplitude);
    let bound = 0.2 * grid.h_min().powi(2) * (2.0 * phi.min()).exp();
    let steps = (s.t_end / bound).ceil() as usize;
    let dt = s.t_end / steps as f64;
    let p = RfParams { order: s.order, ..RfParams::new(dt, normalized) };
    let traj = metric::rf_evolve(&ConformalMetric2D { phi, t: 0.0 }, &p, steps, steps)?;
    let v0 = traj.stats[0].volume;
    let drift = traj.stats.iter().map(|st| (st.volume - v0).abs() / v0).fold(0.0, f64::max) / s.t_end;
    let tc = traj.stats.iter().map(|st| st.total_curvature.abs()).fold(0.0, f64::max);
    Ok(RfReport { stats: traj.stats, volume_drift_per_time: drift, max_total_curvature: tc })
}

/// Heat variant with unit coefficients on a frozen flat metric from `u = cos x`: largest relative
/// gap to `e^{-t} cos x` at `t_end`.
pub fn heat_mode_decay(n: usize, order: StencilOrder, dt: f64, t_end: f64) -> Result<f64> {
    let grid = Grid2D::new(n, n, 2.0 * PI, 2.0 * PI)?;
    let u = ScalarField::from_fn(grid, |x, _| x.cos());
    let mut st = CoupledRFState::new(ScalarField::zeros(grid), u, 1.0)?;
    let opts = CoupledOptions { laplacian: Laplacian::Flat, freeze_metric: true, order };
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        st = metric::coupled_rf_step(&st, CoupledVariant::HeatUnit, dt, &opts)?;
    }
    let decay = (-st.t).exp();
    let exact = ScalarField::from_fn(grid, |x, _| decay * x.cos());
    Ok(st.u.sub(&exact).max_abs() / decay)
}

/// Burgers run from `lambda = (a + y) / t0` on `[-1, 1]`.
pub fn burgers_exact_profile(a: f64, t0: f64, ny: usize, dt: f64) -> Result<BurgersRun> {
    let grid = LambdaGrid::new(ny, -1.0, 2.0, false)?;
    let steps = (1.5 * t0 / dt).ceil() as usize;
    burgers_lambda_evolve(&LambdaInitial::Linear { a, t0 }, &grid, &BurgersParams::new(dt, steps))
}

/// Burgers run from `sin y` on the `2 pi` circle.
pub fn burgers_sine(ny: usize, dt: f64) -> Result<BurgersRun> {
    let grid = LambdaGrid::new(ny, 0.0, 2.0 * PI, true)?;
    let steps = (1.5 / dt).ceil() as usize;
    burgers_lambda_evolve(&LambdaInitial::Sine { amplitude: 1.0, k: 1.0, offset: 0.0 }, &grid, &BurgersParams::new(dt, steps))
}
