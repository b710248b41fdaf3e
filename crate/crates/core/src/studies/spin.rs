use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Refinement;
use crate::error::Result;
use crate::field::{derivative_1d, Grid2D, ScalarField, StencilOrder, Vec3};
use crate::integrate::Integrator;
use crate::lax::{self, Convention, LaxReport};
use crate::metric::{self, Metric3Discrepancy};
use crate::presets;
use crate::spin::{self, FlowParams, MIState, SpinFlow, SweepParams, Trajectory};
use crate::surface::{fundamental_forms, reconstruct_position_with_drift, SurfaceJet, G_FLOOR};

/// Magnon run of the ferromagnet along `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnonSetup {
    pub theta: f64,
    pub k: f64,
    pub nx: usize,
    pub lx: f64,
    pub dt: f64,
    pub y_end: f64,
    pub order: StencilOrder,
    pub integrator: Integrator,
}

impl Default for MagnonSetup {
    fn default() -> Self {
        MagnonSetup {
            theta: PI / 3.0,
            k: 1.0,
            nx: 256,
            lx: 6.0 * PI,
            dt: 1e-3,
            y_end: 1.0,
            order: StencilOrder::Fourth,
            integrator: Integrator::Rk4,
        }
    }
}

fn magnon_row(theta: f64, nx: usize, lx: f64, phase: impl Fn(f64) -> f64) -> Vec<Vec3> {
    let (st, ct) = theta.sin_cos();
    (0..nx)
        .map(|i| {
            let p = phase(i as f64 * lx / nx as f64);
            Vec3::new(st * p.cos(), st * p.sin(), ct)
        })
        .collect()
}

fn rel_l2(a: &[Vec3], b: &[Vec3]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum();
    let den: f64 = b.iter().map(|y| y.norm_squared()).sum();
    (num / den).sqrt()
}

/// `sigma` with `D_xx cos(k x) = -sigma cos(k x)` for the stencil in use.
pub fn discrete_symbol(k: f64, nx: usize, lx: f64, order: StencilOrder) -> f64 {
    let h = lx / nx as f64;
    let row: Vec<f64> = (0..nx).map(|i| (k * i as f64 * h).cos()).collect();
    -derivative_1d(&row, h, 2, order)[0]
}

/// Relative L2 distance at `y_end` between the marched row and the magnon with
/// frequency `omega`.
fn magnon_march_error(s: &MagnonSetup, omega: f64) -> Result<f64> {
    let steps = (s.y_end / s.dt).round() as usize;
    let y = steps as f64 * s.dt;
    let row0 = magnon_row(s.theta, s.nx, s.lx, |x| s.k * x);
    let row = spin::hf_march(&row0, s.lx / s.nx as f64, s.dt, steps, s.order, s.integrator, false)?;
    let exact = magnon_row(s.theta, s.nx, s.lx, |x| s.k * x - omega * y);
    Ok(rel_l2(&row, &exact))
}

/// Error against the continuum magnon `omega = k^2 cos(theta)`.
pub fn magnon_fidelity(s: &MagnonSetup) -> Result<f64> {
    magnon_march_error(s, s.k * s.k * s.theta.cos())
}

/// Temporal order: error against the semi-discrete magnon (frequency from
/// the stencil symbol), so only the time stepper contributes.
pub fn magnon_temporal_order(base: &MagnonSetup, dts: &[f64]) -> Result<Refinement> {
    let omega = discrete_symbol(base.k, base.nx, base.lx, base.order) * base.theta.cos();
    let mut err = Vec::new();
    for &dt in dts {
        err.push(magnon_march_error(&MagnonSetup { dt, ..*base }, omega)?);
    }
    Ok(Refinement::new(vec![base.nx; dts.len()], dts.to_vec(), err))
}

/// Spatial order: error against the continuum magnon with a time step small
/// enough to leave only the stencil error.
pub fn magnon_spatial_order(base: &MagnonSetup, nxs: &[usize]) -> Result<Refinement> {
    let mut err = Vec::new();
    let mut hs = Vec::new();
    for &nx in nxs {
        err.push(magnon_fidelity(&MagnonSetup { nx, ..*base })?);
        hs.push(base.lx / nx as f64);
    }
    Ok(Refinement::new(nxs.to_vec(), hs, err))
}

/// Defaults of the three magnon studies.
pub fn magnon_temporal_setup() -> (MagnonSetup, Vec<f64>) {
    let s = MagnonSetup { nx: 16, lx: 2.0 * PI, order: StencilOrder::Second, ..MagnonSetup::default() };
    (s, vec![0.032, 0.016, 0.008])
}

pub fn magnon_spatial_setup() -> (MagnonSetup, Vec<usize>) {
    let s = MagnonSetup { lx: 2.0 * PI, order: StencilOrder::Second, dt: 5e-4, ..MagnonSetup::default() };
    (s, vec![16, 32, 64])
}

/// M-I runs from rotor data on a `2 pi` box: time step `0.2 h^2`, frames
/// `frame_factor * h^frame_exponent` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiSetup {
    pub seed: u64,
    pub bandwidth: usize,
    pub amplitude: f64,
    pub frames: usize,
    pub frame_factor: f64,
    pub frame_exponent: i32,
    pub evolve_order: StencilOrder,
    /// Stencils of the diagnostics.
    pub check_order: StencilOrder,
}

impl Default for MiSetup {
    fn default() -> Self {
        MiSetup {
            seed: 11,
            bandwidth: 3,
            amplitude: 0.1,
            frames: 5,
            frame_factor: 0.1,
            frame_exponent: 1,
            evolve_order: StencilOrder::Fourth,
            check_order: StencilOrder::Second,
        }
    }
}

pub fn mi_trajectory(s: &MiSetup, n: usize) -> Result<Trajectory> {
    let grid = Grid2D::new(n, n, 2.0 * PI, 2.0 * PI)?;
    let (spins, ry) = presets::rotor_spin(grid, s.seed, s.bandwidth, s.amplitude);
    let init = MIState::new(spins, s.evolve_order)?.with_ry_mean(ry);
    let h = grid.h_min();
    let spacing = s.frame_factor * h.powi(s.frame_exponent);
    let per = (spacing / (0.2 * h * h)).ceil() as usize;
    let dt = spacing / per as f64;
    let params = FlowParams::new(dt).with_order(s.evolve_order);
    spin::evolve(&init, &SpinFlow::Mi, &params, per * (s.frames.max(3) - 1), per)
}

/// Constraint and gauge along one M-I run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub max_unit_deviation: f64,
    pub max_constraint_residual: f64,
    pub max_e_deviation: f64,
}

pub fn constraint_report(traj: &Trajectory, order: StencilOrder) -> Result<ConstraintReport> {
    let mut rep = ConstraintReport { max_unit_deviation: 0.0, max_constraint_residual: 0.0, max_e_deviation: 0.0 };
    for d in &traj.diagnostics {
        rep.max_unit_deviation = rep.max_unit_deviation.max(d.unit_deviation);
        rep.max_constraint_residual = rep.max_constraint_residual.max(d.constraint_residual);
    }
    for f in &traj.frames {
        let r = reconstruct_position_with_drift(&f.s, &f.ry_mean, order)?;
        let forms = fundamental_forms(&SurfaceJet::new(&r, order), G_FLOOR)?;
        rep.max_e_deviation = rep.max_e_deviation.max(forms.e.map(|e| e - 1.0).max_abs());
    }
    Ok(rep)
}

/// Per-level errors of the surface-level M-I checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiSurfaceStudy {
    pub frame_velocity: Refinement,
    pub frame_potential: Refinement,
    pub f_rate: Refinement,
    pub g_rate: Refinement,
    pub det_rate: Refinement,
    pub constraint: Vec<ConstraintReport>,
}

/// Largest surface-level residuals along one M-I trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiResiduals {
    pub vel: f64,
    pub pot: f64,
    pub f: f64,
    pub g: f64,
    pub det: f64,
}

/// Frame decomposition over every frame; metric rates against central time
/// differences over the interior frames.
pub fn mi_surface_residuals(traj: &Trajectory, order: StencilOrder) -> Result<MiResiduals> {
    let mut forms = Vec::new();
    let mut jets = Vec::new();
    for f in &traj.frames {
        let r = reconstruct_position_with_drift(&f.s, &f.ry_mean, order)?;
        let jet = SurfaceJet::new(&r, order);
        forms.push(fundamental_forms(&jet, G_FLOOR)?);
        jets.push(jet);
    }
    let mut lv = MiResiduals { vel: 0.0, pot: 0.0, f: 0.0, g: 0.0, det: 0.0 };
    for (k, f) in traj.frames.iter().enumerate() {
        let res = metric::mi_frame_decomposition_residual(&jets[k], &forms[k], &f.u, order)?;
        lv.vel = lv.vel.max(res.velocity.max_abs());
        lv.pot = lv.pot.max(res.potential.max_abs());
    }
    let dt = traj.frame_dt;
    for k in 1..traj.frames.len() - 1 {
        let rates = metric::mi_metric_rhs(&jets[k], &forms[k], &traj.frames[k].u, order)?;
        let diff = |a: &ScalarField, b: &ScalarField| a.sub(b).scale(0.5 / dt);
        lv.f = lv.f.max(diff(&forms[k + 1].f, &forms[k - 1].f).sub(&rates.f_t).max_abs());
        lv.g = lv.g.max(diff(&forms[k + 1].g, &forms[k - 1].g).sub(&rates.g_t).max_abs());
        lv.det = lv.det.max(diff(&forms[k + 1].det, &forms[k - 1].det).sub(&rates.det_t_closed).max_abs());
    }
    Ok(lv)
}

/// Frame decomposition, metric evolution and constraint checks on M-I runs
/// at every grid size in `ns`.
pub fn mi_surface_study(s: &MiSetup, ns: &[usize]) -> Result<MiSurfaceStudy> {
    let mut levels = Vec::new();
    let mut constraint = Vec::new();
    let mut hs = Vec::new();
    for &n in ns {
        let traj = mi_trajectory(s, n)?;
        levels.push(mi_surface_residuals(&traj, s.check_order)?);
        constraint.push(constraint_report(&traj, s.check_order)?);
        hs.push(2.0 * PI / n as f64);
    }
    let col = |f: fn(&MiResiduals) -> f64| Refinement::new(ns.to_vec(), hs.clone(), levels.iter().map(f).collect());
    Ok(MiSurfaceStudy {
        frame_velocity: col(|l| l.vel),
        frame_potential: col(|l| l.pot),
        f_rate: col(|l| l.f),
        g_rate: col(|l| l.g),
        det_rate: col(|l| l.det),
        constraint,
    })
}

/// Lax residual refinement for one `(lambda, convention)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxStudy {
    pub lambda: f64,
    pub convention: Convention,
    pub reports: Vec<LaxReport>,
    pub refinement: Refinement,
}

/// Magnon swept along one `y`-period, `hy = hx`, time step under `0.2 hx^2`.
pub fn hf_magnon_sweep(n: usize, theta: f64, order: StencilOrder) -> Result<spin::SpinField> {
    let period = 2.0 * PI / theta.cos();
    let grid = Grid2D::new(n, n, 2.0 * PI, period)?;
    let hx = grid.hx();
    let substeps = (grid.hy() / (0.2 * hx * hx)).ceil() as usize;
    let init = presets::magnon(grid, theta, 1.0, 0.0);
    let row = init.field().row(0).to_vec();
    spin::hf_sweep(&row, grid, SweepParams { order, integrator: Integrator::Rk4, substeps, project: false })
}

/// Ferromagnet Lax residuals on swept magnons, rows within the stencil reach
/// of the (non-periodic) `y` ends excluded.
pub fn hf_lax_study(ns: &[usize], lambdas: &[f64], order: StencilOrder) -> Result<Vec<LaxStudy>> {
    let theta = PI / 3.0;
    let sweeps = ns.iter().map(|&n| hf_magnon_sweep(n, theta, order)).collect::<Result<Vec<_>>>()?;
    let hs: Vec<f64> = ns.iter().map(|&n| 2.0 * PI / n as f64).collect();
    let mut out = Vec::new();
    for &l in lambdas {
        for conv in Convention::ALL {
            let reports: Vec<LaxReport> = sweeps
                .iter()
                .map(|s| {
                    let z = lax::hf_zero_curvature_residual(s.field(), Complex64::new(l, 0.0), conv, order);
                    lax::report(&[z], Complex64::new(l, 0.0), conv, order.reach())
                })
                .collect();
            let refinement = Refinement::new(ns.to_vec(), hs.clone(), reports.iter().map(|r| r.max_norm).collect());
            out.push(LaxStudy { lambda: l, convention: conv, reports, refinement });
        }
    }
    Ok(out)
}

/// M-I Lax residuals along rotor runs.
pub fn mi_lax_study(s: &MiSetup, ns: &[usize], lambdas: &[f64]) -> Result<Vec<LaxStudy>> {
    let trajs = ns.iter().map(|&n| mi_trajectory(s, n)).collect::<Result<Vec<_>>>()?;
    let hs: Vec<f64> = ns.iter().map(|&n| 2.0 * PI / n as f64).collect();
    let mut out = Vec::new();
    for &l in lambdas {
        let lc = Complex64::new(l, 0.0);
        for conv in Convention::ALL {
            let reports = trajs
                .iter()
                .map(|t| {
                    let zs = lax::mi_zero_curvature_residual(&t.frames, t.frame_dt, lc, conv, s.check_order)?;
                    Ok(lax::report(&zs, lc, conv, 0))
                })
                .collect::<Result<Vec<_>>>()?;
            let refinement = Refinement::new(ns.to_vec(), hs.clone(), reports.iter().map(|r| r.max_norm).collect());
            out.push(LaxStudy { lambda: l, convention: conv, reports, refinement });
        }
    }
    Ok(out)
}

/// Convention whose finest-level residual is smaller, per `lambda`.
pub fn consistent_convention(studies: &[LaxStudy]) -> Option<Convention> {
    let score = |c: Convention| -> f64 {
        studies.iter().filter(|s| s.convention == c).map(|s| s.refinement.finest_error()).fold(0.0, f64::max)
    };
    let (a, b) = (score(Convention::LambdaOver2i), score(Convention::ILambdaOver2));
    if a == b {
        None
    } else if a < b {
        Some(Convention::LambdaOver2i)
    } else {
        Some(Convention::ILambdaOver2)
    }
}

/// 3D metric samples along an M-I run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric3Study {
    pub max_g11_deviation: f64,
    pub discrepancy: Vec<Metric3Discrepancy>,
    /// Largest entry of the numerical 3D Ricci tensor at the central level.
    pub ricci_max: Option<f64>,
    /// Why the Ricci tensor could not be formed (too few frames or a
    /// degenerate 3D metric).
    pub ricci_error: Option<String>,
}

pub fn mi_metric3_study(traj: &Trajectory, order: StencilOrder) -> Result<Metric3Study> {
    let (samples, discrepancy) = metric::assemble_metric3(&traj.frames, order)?;
    let max_g11_deviation = samples.iter().map(|s| s.g11.map(|v| v - 1.0).max_abs()).fold(0.0, f64::max);
    let (ricci_max, ricci_error) = match metric::ricci3_numeric(&samples, traj.frame_dt, order, 1e-12) {
        Ok(r) => (Some(r.iter().map(|f| f.max_abs()).fold(0.0, f64::max)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Metric3Study { max_g11_deviation, discrepancy, ricci_max, ricci_error })
}
