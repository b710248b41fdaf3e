//! Zero-curvature residuals of the HF and M-I Lax pairs, and the Burgers
//! flow of the spectral parameter with blow-up detection.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::field::{Field, Mat2, MatrixFieldC2, StencilOrder, Vec3, VectorField3};
use crate::integrate::{self, Integrator};
use crate::spin::MIState;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// The standard Pauli matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliEmbedding {
    pub sigma: [Mat2; 3],
}

impl Default for PauliEmbedding {
    fn default() -> Self {
        let z = c(0.0);
        let o = c(1.0);
        PauliEmbedding {
            sigma: [
                Mat2::new(z, o, o, z),
                Mat2::new(z, -I, I, z),
                Mat2::new(o, z, z, -o),
            ],
        }
    }
}

impl PauliEmbedding {
    /// `v . sigma`.
    pub fn embed(&self, v: Vec3) -> Mat2 {
        self.sigma[0] * c(v.x) + self.sigma[1] * c(v.y) + self.sigma[2] * c(v.z)
    }

    pub fn embed_field(&self, v: &VectorField3) -> MatrixFieldC2 {
        v.map(|w| self.embed(w))
    }

    /// Largest entry of `sigma_a sigma_b - delta_ab I - i eps_abc sigma_c`.
    pub fn self_test(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..3 {
            for b in 0..3 {
                let mut expect = if a == b { Mat2::identity() } else { Mat2::zeros() };
                for (cc, s) in self.sigma.iter().enumerate() {
                    let eps = levi_civita(a, b, cc);
                    if eps != 0.0 {
                        expect += s * (I * eps);
                    }
                }
                let d = self.sigma[a] * self.sigma[b] - expect;
                worst = worst.max(d.iter().fold(0.0, |m, z| m.max(z.norm())));
            }
        }
        worst
    }
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Prefactor of `U = prefactor * r_x . sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `lambda / (2i)`.
    LambdaOver2i,
    /// `i lambda / 2`.
    ILambdaOver2,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::LambdaOver2i, Convention::ILambdaOver2];

    pub fn prefactor(self, lambda: Complex64) -> Complex64 {
        match self {
            Convention::LambdaOver2i => lambda / (I * 2.0),
            Convention::ILambdaOver2 => I * lambda / 2.0,
        }
    }
}

fn commutator(a: &MatrixFieldC2, b: &MatrixFieldC2) -> MatrixFieldC2 {
    a.zip_map(b, |x, y| x * y - y * x)
}

fn cscale(f: &MatrixFieldC2, z: Complex64) -> MatrixFieldC2 {
    f.map(|m| m * z)
}

/// `U` and `V` of the ferromagnet pair for the spin field `s` on the
/// `(x, y)` grid.
pub fn hf_lax_pair(
    s: &VectorField3,
    lambda: Complex64,
    conv: Convention,
    order: StencilOrder,
) -> (MatrixFieldC2, MatrixFieldC2) {
    let p = PauliEmbedding::default();
    let sm = p.embed_field(s);
    let sxm = p.embed_field(&s.dx(order));
    let u = cscale(&sm, conv.prefactor(lambda));
    let v1 = cscale(&sm, I * lambda * lambda / 2.0);
    let v2 = sxm.zip_map(&sm, |a, b| a * b * (lambda / 2.0));
    (u, v1.add(&v2))
}

/// `Z = U_y - V_x + [U, V]` for an arbitrary pair.
pub fn zero_curvature(u: &MatrixFieldC2, v: &MatrixFieldC2, order: StencilOrder) -> MatrixFieldC2 {
    u.dy(order).sub(&v.dx(order)).add(&commutator(u, v))
}

/// Ferromagnet residual field, `S` treated as a function of `(x, y)` with `y`
/// the evolution variable.
pub fn hf_zero_curvature_residual(
    s: &VectorField3,
    lambda: Complex64,
    conv: Convention,
    order: StencilOrder,
) -> MatrixFieldC2 {
    let (u, v) = hf_lax_pair(s, lambda, conv, order);
    zero_curvature(&u, &v, order)
}

/// `V = (lambda/4)([r_x, r_xy] + 2 i u r_x)` with `r_x = S`.
fn mi_v(s: &VectorField3, u: &crate::field::ScalarField, lambda: Complex64, order: StencilOrder) -> MatrixFieldC2 {
    let p = PauliEmbedding::default();
    let sm = p.embed_field(s);
    let sym = p.embed_field(&s.dy(order));
    let comm = commutator(&sm, &sym);
    let us = sm.zip_map(u, |m, w| m * (I * 2.0 * w));
    cscale(&comm.add(&us), lambda / 4.0)
}

/// M-I residual `Z = U_t - lambda U_y - V_x + [U, V]` at every frame with a
/// neighbour on each side; frames are `frame_dt` apart.
pub fn mi_zero_curvature_residual(
    frames: &[MIState],
    frame_dt: f64,
    lambda: Complex64,
    conv: Convention,
    order: StencilOrder,
) -> Result<Vec<MatrixFieldC2>> {
    if frames.len() < 3 {
        return Err(FlowError::InsufficientHistory { needed: 3, got: frames.len() });
    }
    let p = PauliEmbedding::default();
    let pre = conv.prefactor(lambda);
    let us: Vec<MatrixFieldC2> = frames.iter().map(|f| cscale(&p.embed_field(f.s.field()), pre)).collect();
    let mut out = Vec::with_capacity(frames.len() - 2);
    for k in 1..frames.len() - 1 {
        let ut = us[k + 1].sub(&us[k - 1]).scale(0.5 / frame_dt);
        let v = mi_v(frames[k].s.field(), &frames[k].u, lambda, order);
        let z = ut.sub(&cscale(&us[k].dy(order), lambda)).sub(&v.dx(order)).add(&commutator(&us[k], &v));
        out.push(z);
    }
    Ok(out)
}

/// Norms of a residual field, optionally skipping `margin` rows at each
/// y-end (for data that is not periodic in `y`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxReport {
    pub lambda: [f64; 2],
    pub convention: Convention,
    pub max_norm: f64,
    pub l2_norm: f64,
}

pub fn residual_norms(z: &MatrixFieldC2, margin: usize) -> (f64, f64) {
    let g = z.grid;
    let (mut mx, mut sum, mut n) = (0.0_f64, 0.0, 0usize);
    for j in margin..g.ny.saturating_sub(margin) {
        for m in z.row(j) {
            let f = m.norm();
            mx = mx.max(f);
            sum += f * f;
            n += 1;
        }
    }
    (mx, if n == 0 { 0.0 } else { (sum / n as f64).sqrt() })
}

pub fn report(zs: &[MatrixFieldC2], lambda: Complex64, conv: Convention, margin: usize) -> LaxReport {
    let (mut mx, mut sq) = (0.0_f64, 0.0);
    for z in zs {
        let (a, b) = residual_norms(z, margin);
        mx = mx.max(a);
        sq += b * b;
    }
    let l2 = if zs.is_empty() { 0.0 } else { (sq / zs.len() as f64).sqrt() };
    LaxReport { lambda: [lambda.re, lambda.im], convention: conv, max_norm: mx, l2_norm: l2 }
}

/// `C M C^{-1}` at every node.
pub fn conjugate(m: &MatrixFieldC2, c: &Mat2) -> Result<MatrixFieldC2> {
    let inv = c.try_inverse().ok_or_else(|| FlowError::InvalidParameter("gauge matrix is singular".into()))?;
    Ok(m.map(|a| c * a * inv))
}

/// Largest pointwise gap between the residual at `probe` and the quadratic
/// through the residuals at `nodes`.
pub fn lambda_interpolation_gap(
    eval: impl Fn(Complex64) -> MatrixFieldC2,
    nodes: [Complex64; 3],
    probe: Complex64,
) -> f64 {
    let zs: Vec<MatrixFieldC2> = nodes.iter().map(|&l| eval(l)).collect();
    let target = eval(probe);
    let w: Vec<Complex64> = (0..3)
        .map(|a| {
            let mut p = c(1.0);
            for b in 0..3 {
                if a != b {
                    p *= (probe - nodes[b]) / (nodes[a] - nodes[b]);
                }
            }
            p
        })
        .collect();
    let mut worst = 0.0_f64;
    for k in 0..target.data.len() {
        let interp = zs[0].data[k] * w[0] + zs[1].data[k] * w[1] + zs[2].data[k] * w[2];
        worst = worst.max((interp - target.data[k]).norm());
    }
    worst
}

/// One-dimensional chart in `y` for the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub ny: usize,
    pub y0: f64,
    pub ly: f64,
    /// Periodic charts drop the right end point; open charts include it.
    pub periodic: bool,
}

impl LambdaGrid {
    pub fn new(ny: usize, y0: f64, ly: f64, periodic: bool) -> Result<Self> {
        if ny < 8 {
            return Err(FlowError::GridTooSmall { nx: 1, ny, min: 8 });
        }
        if !(ly > 0.0 && ly.is_finite() && y0.is_finite()) {
            return Err(FlowError::InvalidGrid(format!("bad y-chart: y0 = {y0}, ly = {ly}")));
        }
        Ok(LambdaGrid { ny, y0, ly, periodic })
    }

    pub fn h(&self) -> f64 {
        if self.periodic {
            self.ly / self.ny as f64
        } else {
            self.ly / (self.ny - 1) as f64
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }
}

/// Initial spectral-parameter profiles.
#[derive(Clone)]
pub enum LambdaInitial {
    /// `(a + y) / t0`.
    Linear { a: f64, t0: f64 },
    /// `offset + amplitude sin(k y)`.
    Sine { amplitude: f64, k: f64, offset: f64 },
    Constant(f64),
    /// Value and derivative.
    Custom(Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
}

impl std::fmt::Debug for LambdaInitial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LambdaInitial::Linear { a, t0 } => write!(f, "Linear {{ a: {a}, t0: {t0} }}"),
            LambdaInitial::Sine { amplitude, k, offset } => {
                write!(f, "Sine {{ amplitude: {amplitude}, k: {k}, offset: {offset} }}")
            }
            LambdaInitial::Constant(v) => write!(f, "Constant({v})"),
            LambdaInitial::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl LambdaInitial {
    pub fn eval(&self, y: f64) -> (f64, f64) {
        match self {
            LambdaInitial::Linear { a, t0 } => ((a + y) / t0, 1.0 / t0),
            LambdaInitial::Sine { amplitude, k, offset } => {
                let (s, co) = (k * y).sin_cos();
                (offset + amplitude * s, amplitude * k * co)
            }
            LambdaInitial::Constant(v) => (*v, 0.0),
            LambdaInitial::Custom(f) => f(y),
        }
    }

    /// `(a, t0)` when the profile has the exact blow-up form.
    pub fn exact_parameters(&self) -> Option<(f64, f64)> {
        match self {
            LambdaInitial::Linear { a, t0 } => Some((*a, *t0)),
            _ => None,
        }
    }
}

/// `lambda = (a + y) / (t0 - t)`.
pub fn lambda_exact(a: f64, t0: f64, y: f64, t: f64) -> f64 {
    (a + y) / (t0 - t)
}

/// `lambda_t - lambda lambda_y` of the exact profile, with `lambda_t` taken by
/// complex-step differentiation and `lambda_y` from the closed form.
pub fn exact_solution_defect(a: f64, t0: f64, y: f64, t: f64) -> f64 {
    let h = 1e-30;
    let lt = ((c(a + y)) / (c(t0) - Complex64::new(t, h))).im / h;
    let ly = ((Complex64::new(a + y, h)) / c(t0 - t)).im / h;
    let l = lambda_exact(a, t0, y, t);
    lt - l * ly
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BurgersScheme {
    #[default]
    Characteristics,
    Upwind,
}

/// Settings of a Burgers run; `sign` selects `lambda_t = sign * lambda lambda_y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersParams {
    pub dt: f64,
    pub n_steps: usize,
    pub stride: usize,
    pub scheme: BurgersScheme,
    pub sign: f64,
    /// Blow-up is declared once `max |lambda_y|` exceeds this.
    pub ceiling: f64,
}

impl BurgersParams {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        BurgersParams { dt, n_steps, stride: 1, scheme: BurgersScheme::Characteristics, sign: 1.0, ceiling: 1e4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaProfile {
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub t: f64,
    /// Largest `|lambda_y|` at this time.
    pub max_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpSummary {
    pub t_blowup_est: Option<f64>,
    pub t_characteristics: Option<f64>,
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersRun {
    pub profiles: Vec<LambdaProfile>,
    pub summary: BlowUpSummary,
    /// Parameters of the exact profile, when the initial data has that form.
    pub exact: Option<(f64, f64)>,
}

impl BurgersRun {
    /// `t,y,lambda` rows.
    pub fn table(&self) -> crate::field::CsvTable {
        let mut t = crate::field::CsvTable::new(&["t", "y", "lambda"]);
        for p in &self.profiles {
            for (y, l) in p.y.iter().zip(&p.lambda) {
                t.push(vec![p.t, *y, *l]);
            }
        }
        t
    }

    /// Worst relative error against the exact profile over frames with
    /// `t <= t_max`.
    pub fn exact_relative_error(&self, t_max: f64) -> Option<f64> {
        let (a, t0) = self.exact?;
        let mut worst = 0.0_f64;
        for p in self.profiles.iter().filter(|p| p.t <= t_max) {
            let (mut num, mut den) = (0.0, 0.0);
            for (y, l) in p.y.iter().zip(&p.lambda) {
                let e = lambda_exact(a, t0, *y, p.t);
                num += (l - e).powi(2);
                den += e * e;
            }
            worst = worst.max(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() });
        }
        Some(worst)
    }
}

/// `t* = 1 / max(sign lambda_0')` sampled on a fine copy of the chart.
pub fn characteristic_crossing_time(init: &LambdaInitial, grid: &LambdaGrid, sign: f64) -> Option<f64> {
    let n = 16 * grid.ny;
    let m = (0..=n)
        .map(|j| sign * init.eval(grid.y0 + grid.ly * j as f64 / n as f64).1)
        .fold(f64::NEG_INFINITY, f64::max);
    (m > 0.0).then(|| 1.0 / m)
}

/// Value of `lambda(y, t)` by following the characteristic `y = y0 - sign lambda_0(y0) t`
/// back to its foot; also returns `lambda_y`.
fn characteristic_value(init: &LambdaInitial, sign: f64, y: f64, t: f64, bound: f64) -> (f64, f64) {
    let g = |y0: f64| y0 - sign * init.eval(y0).0 * t - y;
    let mut reach = bound * t + 1e-12;
    // the foot map is increasing before crossing, so bisection brackets it
    while g(y - reach) > 0.0 || g(y + reach) < 0.0 {
        reach *= 2.0;
        if !reach.is_finite() {
            break;
        }
    }
    let (mut lo, mut hi) = (y - reach, y + reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    let y0 = 0.5 * (lo + hi);
    let (l0, d0) = init.eval(y0);
    (l0, d0 / (1.0 - sign * d0 * t))
}

fn upwind_rhs(l: &[f64], grid: &LambdaGrid, sign: f64) -> Vec<f64> {
    let n = l.len();
    let h = grid.h();
    let val = |j: isize| -> f64 {
        if grid.periodic {
            l[j.rem_euclid(n as isize) as usize]
        } else if j < 0 {
            2.0 * l[0] - l[1]
        } else if j as usize >= n {
            2.0 * l[n - 1] - l[n - 2]
        } else {
            l[j as usize]
        }
    };
    (0..n as isize)
        .map(|j| {
            let speed = -sign * val(j);
            let dl = if speed > 0.0 { (val(j) - val(j - 1)) / h } else { (val(j + 1) - val(j)) / h };
            sign * val(j) * dl
        })
        .collect()
}

fn max_fd_slope(l: &[f64], grid: &LambdaGrid) -> f64 {
    let n = l.len();
    let h = grid.h();
    let mut m = 0.0_f64;
    let last = if grid.periodic { n } else { n - 1 };
    for j in 0..last {
        m = m.max(((l[(j + 1) % n] - l[j]) / h).abs());
    }
    m
}

/// Evolves `lambda_t = sign lambda lambda_y`. Stops at the first step where
/// `max |lambda_y|` passes the ceiling; that time is the blow-up estimate.
pub fn burgers_lambda_evolve(init: &LambdaInitial, grid: &LambdaGrid, p: &BurgersParams) -> Result<BurgersRun> {
    if !(p.dt > 0.0 && p.dt.is_finite()) || !(p.sign == 1.0 || p.sign == -1.0) || !(p.ceiling > 0.0) {
        return Err(FlowError::InvalidParameter(format!(
            "burgers needs dt > 0, sign = +-1, ceiling > 0 (dt = {}, sign = {}, ceiling = {})",
            p.dt, p.sign, p.ceiling
        )));
    }
    let ys = grid.nodes();
    let lam0: Vec<f64> = ys.iter().map(|&y| init.eval(y).0).collect();
    let bound = {
        let n = 16 * grid.ny;
        let mut m = 0.0_f64;
        for j in 0..=n {
            m = m.max(init.eval(grid.y0 - grid.ly + 3.0 * grid.ly * j as f64 / n as f64).0.abs());
        }
        m
    };
    let stride = p.stride.max(1);
    let slope0 = ys.iter().map(|&y| init.eval(y).1.abs()).fold(0.0, f64::max);
    let mut profiles = vec![LambdaProfile { y: ys.clone(), lambda: lam0.clone(), t: 0.0, max_slope: slope0 }];
    let mut current = lam0;
    let mut blowup = None;
    for step in 1..=p.n_steps {
        let t = step as f64 * p.dt;
        let (lam, slope) = match p.scheme {
            BurgersScheme::Characteristics => {
                let mut lam = Vec::with_capacity(ys.len());
                let mut slope = 0.0_f64;
                let tc = characteristic_crossing_time(init, grid, p.sign);
                if tc.is_some_and(|tc| t >= tc) {
                    slope = f64::INFINITY;
                } else {
                    for &y in &ys {
                        let (l, ly) = characteristic_value(init, p.sign, y, t, bound);
                        lam.push(l);
                        slope = slope.max(ly.abs());
                    }
                }
                (lam, slope)
            }
            BurgersScheme::Upwind => {
                let next = integrate::step(Integrator::Rk4, t - p.dt, &current, p.dt, |_, l: &Vec<f64>| {
                    Ok(upwind_rhs(l, grid, p.sign))
                })?;
                let s = if next.iter().all(|v| v.is_finite()) { max_fd_slope(&next, grid) } else { f64::INFINITY };
                (next, s)
            }
        };
        if !(slope <= p.ceiling) {
            blowup = Some(t);
            break;
        }
        current = lam;
        if step % stride == 0 || step == p.n_steps {
            profiles.push(LambdaProfile { y: ys.clone(), lambda: current.clone(), t, max_slope: slope });
        }
    }
    let tc = characteristic_crossing_time(init, grid, p.sign);
    let gap = match (blowup, tc) {
        (Some(b), Some(c)) => Some((b - c).abs() / c),
        _ => None,
    };
    Ok(BurgersRun {
        profiles,
        summary: BlowUpSummary { t_blowup_est: blowup, t_characteristics: tc, relative_gap: gap },
        exact: init.exact_parameters(),
    })
}

/// Rows of a `MatrixFieldC2` as Frobenius norms, for CSV output.
pub fn frobenius_field(z: &MatrixFieldC2) -> crate::field::ScalarField {
    Field { grid: z.grid, data: z.data.iter().map(|m| m.norm()).collect() }
}
