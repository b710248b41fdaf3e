use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Refinement;
use crate::error::Result;
use crate::field::{Grid2D, ScalarField, StencilOrder, Vec3};
use crate::metric::{ricci3_numeric, Metric3Sample};
use crate::presets::{rng, RandomTrig};
use crate::surface::{
    curvatures, fundamental_forms, ricci_christoffel, ricci_tensor_2d, scalar_curvature_christoffel,
    scalar_curvature_e1, scalar_curvature_orthogonal_at, LinearPlusPeriodic, Metric2, SurfaceJet, G_FLOOR,
};

/// Random `E = 1` metric: `F = a f1`, `G = F^2 + 1.5 + b f2` with `f1`, `f2`
/// band-limited and normalized to `|f| <= 1`.
pub fn random_e1_metric(grid: Grid2D, seed: u64, bandwidth: usize) -> Metric2 {
    let mut r = rng(seed);
    let f1 = RandomTrig::new(&mut r, bandwidth, grid.lx, grid.ly);
    let f2 = RandomTrig::new(&mut r, bandwidth, grid.lx, grid.ly);
    let (b1, b2) = (f1.bound().max(1e-300), f2.bound().max(1e-300));
    Metric2::from_fn(grid, |x, y| {
        let f = 0.5 * f1.eval(x, y) / b1;
        (1.0, f, f * f + 1.5 + 0.5 * f2.eval(x, y) / b2)
    })
}

/// Random periodic graph surface `(x, y, a f)` with `|f| <= 1`.
pub fn random_graph_surface(grid: Grid2D, seed: u64, bandwidth: usize, amplitude: f64) -> Result<LinearPlusPeriodic> {
    let mut r = rng(seed);
    let f = RandomTrig::new(&mut r, bandwidth, grid.lx, grid.ly);
    let b = f.bound().max(1e-300);
    LinearPlusPeriodic::from_fn(grid, Vec3::x(), Vec3::y(), |x, y| Vec3::new(0.0, 0.0, amplitude * f.eval(x, y) / b))
}

/// Refinement slopes of the two 2D identities for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySample {
    pub seed: u64,
    /// `max |R_ij - R g_ij / 2|`, Christoffel Ricci against the closed-form `R`.
    pub ricci: Refinement,
    /// `max |K - R/2|`, extrinsic `K` against intrinsic `R`.
    pub egregium: Refinement,
}

fn box_grid(n: usize) -> Result<Grid2D> {
    Grid2D::new(n, n, 2.0 * PI, 2.0 * PI)
}

pub fn ricci_identity_refinement(seed: u64, ns: &[usize], order: StencilOrder) -> Result<Refinement> {
    let mut err = Vec::new();
    let mut hs = Vec::new();
    for &n in ns {
        let g = box_grid(n)?;
        let m = random_e1_metric(g, seed, 3);
        let r = scalar_curvature_e1(&m, order, G_FLOOR)?;
        let ric = ricci_christoffel(&m, order, G_FLOOR)?;
        err.push(ric.max_abs_diff(&ricci_tensor_2d(&m, &r)));
        hs.push(g.h_min());
    }
    Ok(Refinement::new(ns.to_vec(), hs, err))
}

pub fn egregium_refinement(seed: u64, ns: &[usize], order: StencilOrder) -> Result<Refinement> {
    let mut err = Vec::new();
    let mut hs = Vec::new();
    for &n in ns {
        let g = box_grid(n)?;
        let surf = random_graph_surface(g, seed, 3, 0.5)?;
        let forms = fundamental_forms(&SurfaceJet::new(&surf, order), G_FLOOR)?;
        let (_, k) = curvatures(&forms);
        let r = scalar_curvature_christoffel(&forms.metric(), order, G_FLOOR)?;
        err.push(k.sub(&r.scale(0.5)).max_abs());
        hs.push(g.h_min());
    }
    Ok(Refinement::new(ns.to_vec(), hs, err))
}

pub fn identity_study(seeds: std::ops::Range<u64>, ns: &[usize], order: StencilOrder) -> Result<Vec<IdentitySample>> {
    seeds
        .map(|seed| {
            Ok(IdentitySample {
                seed,
                ricci: ricci_identity_refinement(seed, ns, order)?,
                egregium: egregium_refinement(seed, ns, order)?,
            })
        })
        .collect()
}

/// `max |R - 2|` for `dx^2 + sin^2 x dy^2` on `(0, pi)` with exact jets of `G`.
pub fn sphere_metric_curvature_error(n: usize) -> f64 {
    (0..n)
        .map(|i| {
            let x = PI * (i as f64 + 0.5) / n as f64;
            let (s, c) = x.sin_cos();
            (scalar_curvature_orthogonal_at(s * s, 2.0 * s * c, 2.0 * (c * c - s * s)) - 2.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Product metric `g (+) dt^2` over a random `E = 1` slice: largest gap
/// between the 3D Ricci 2D block and `R g / 2`, and the largest entry of the
/// third row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductStudy {
    pub block: Refinement,
    pub third_row_max: f64,
}

pub fn product_metric_study(seed: u64, ns: &[usize], order: StencilOrder) -> Result<ProductStudy> {
    let mut err = Vec::new();
    let mut hs = Vec::new();
    let mut third: f64 = 0.0;
    for &n in ns {
        let g = box_grid(n)?;
        let m = random_e1_metric(g, seed, 3);
        let r = scalar_curvature_e1(&m, order, G_FLOOR)?;
        let want = ricci_tensor_2d(&m, &r);
        let samples: Vec<Metric3Sample> =
            (0..5).map(|k| Metric3Sample::product(&m.e, &m.f, &m.g, 1.0, 0.1 * k as f64)).collect();
        let ric = ricci3_numeric(&samples, 0.1, order, 1e-12)?;
        let got = &ric[0];
        let gap = [(0, 0, &want.xx), (0, 1, &want.xy), (1, 1, &want.yy)]
            .iter()
            .map(|(i, j, w): &(usize, usize, &ScalarField)| got.get(*i, *j).sub(w).max_abs())
            .fold(0.0, f64::max);
        for j in 0..3 {
            third = third.max(got.get(2, j).max_abs());
        }
        err.push(gap);
        hs.push(g.h_min());
    }
    Ok(ProductStudy { block: Refinement::new(ns.to_vec(), hs, err), third_row_max: third })
}
