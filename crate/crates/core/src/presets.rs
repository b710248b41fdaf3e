//! Named initial data: spin fields, graphs, conformal factors and profiles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{Grid2D, ScalarField, Vec3, VectorField3};
use crate::spin::SpinField;

/// Spin wave `(sin t cos p, sin t sin p, cos t)` with `p = k x + tau`.
pub fn magnon(grid: Grid2D, theta: f64, k: f64, tau: f64) -> SpinField {
    let (st, ct) = theta.sin_cos();
    let v = VectorField3::from_fn(grid, |x, _| {
        let p = k * x + tau;
        Vec3::new(st * p.cos(), st * p.sin(), ct)
    });
    SpinField::new(v).expect("magnon is unit by construction")
}

/// Magnon of the continuum flow `S_y = S ^ S_xx` sampled at every `(x, y)`:
/// phase `k x - k^2 cos(theta) y`.
pub fn magnon_exact(grid: Grid2D, theta: f64, k: f64) -> VectorField3 {
    magnon_with_frequency(grid, theta, k, k * k * theta.cos())
}

/// Magnon with phase `k x - omega y`.
pub fn magnon_with_frequency(grid: Grid2D, theta: f64, k: f64, omega: f64) -> VectorField3 {
    let (st, ct) = theta.sin_cos();
    VectorField3::from_fn(grid, |x, y| {
        let p = k * x - omega * y;
        Vec3::new(st * p.cos(), st * p.sin(), ct)
    })
}

pub fn constant_spin(grid: Grid2D, dir: Vec3) -> SpinField {
    SpinField::from_unnormalized(&VectorField3::constant(grid, dir)).expect("direction must be nonzero")
}

/// Trigonometric polynomial with random coefficients, decaying as `1/(1+m^2)`.
#[derive(Debug, Clone)]
pub struct RandomTrig {
    terms: Vec<(f64, f64, f64, f64)>,
}

impl RandomTrig {
    /// Modes `|mx|, |my| <= bandwidth` on the box of periods `(lx, ly)`.
    pub fn new(rng: &mut ChaCha8Rng, bandwidth: usize, lx: f64, ly: f64) -> Self {
        let b = bandwidth as i64;
        let mut terms = Vec::new();
        for mx in 0..=b {
            for my in -b..=b {
                if mx == 0 && my <= 0 {
                    continue;
                }
                let w = 1.0 / (1.0 + (mx * mx + my * my) as f64);
                let a = rng.gen_range(-1.0..1.0) * w;
                let c = rng.gen_range(-1.0..1.0) * w;
                terms.push((2.0 * PI * mx as f64 / lx, 2.0 * PI * my as f64 / ly, a, c));
            }
        }
        RandomTrig { terms }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|&(kx, ky, a, c)| {
            let p = kx * x + ky * y;
            a * p.cos() + c * p.sin()
        }).sum()
    }

    /// `(f, f_x, f_y, f_xx, f_xy, f_yy)` at a point.
    pub fn jet(&self, x: f64, y: f64) -> [f64; 6] {
        let mut out = [0.0; 6];
        for &(kx, ky, a, c) in &self.terms {
            let (s, co) = (kx * x + ky * y).sin_cos();
            let v = a * co + c * s;
            let d = -a * s + c * co;
            out[0] += v;
            out[1] += kx * d;
            out[2] += ky * d;
            out[3] -= kx * kx * v;
            out[4] -= kx * ky * v;
            out[5] -= ky * ky * v;
        }
        out
    }

    /// Largest possible |f|.
    pub fn bound(&self) -> f64 {
        self.terms.iter().map(|t| t.2.abs() + t.3.abs()).sum()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-mean band-limited scalar field with `max|f| <= amplitude`.
pub fn random_smooth_scalar(grid: Grid2D, seed: u64, bandwidth: usize, amplitude: f64) -> ScalarField {
    let t = RandomTrig::new(&mut rng(seed), bandwidth, grid.lx, grid.ly);
    let s = amplitude / t.bound().max(1e-300);
    ScalarField::from_fn(grid, |x, y| s * t.eval(x, y))
}

/// Generic smooth unit field: `e_z` tilted by a band-limited perturbation.
pub fn random_smooth_spin(grid: Grid2D, seed: u64, bandwidth: usize, amplitude: f64) -> SpinField {
    let mut r = rng(seed);
    let comps: Vec<RandomTrig> = (0..3).map(|_| RandomTrig::new(&mut r, bandwidth, grid.lx, grid.ly)).collect();
    let scale = amplitude / comps.iter().map(|c| c.bound()).fold(1e-300, f64::max);
    let v = VectorField3::from_fn(grid, |x, y| {
        Vec3::new(scale * comps[0].eval(x, y), scale * comps[1].eval(x, y), 1.0 + scale * comps[2].eval(x, y))
    });
    SpinField::from_unnormalized(&v).expect("perturbation smaller than one keeps the field away from zero")
}

/// Smooth data for which the M-I constraint is solvable on the periodic box:
/// `R_z(b(y)) (sin a(x), 0, cos a(x))` with `a` odd in x.
///
/// Both row means of the in-plane components vanish at every y, so the
/// surface has a y-independent x-slope and `S.(S_x^S_y)` integrates to zero
/// along each row. Returns the field and an x-mean of `r_y` (`e_y`, transverse
/// to `S`, which stays near `e_z`, so the surface is far from degenerate).
pub fn rotor_spin(grid: Grid2D, seed: u64, bandwidth: usize, amplitude: f64) -> (SpinField, Vec<Vec3>) {
    let mut r = rng(seed);
    let kx = 2.0 * PI / grid.lx;
    let ky = 2.0 * PI / grid.ly;
    let a_coef: Vec<f64> = (1..=bandwidth).map(|m| r.gen_range(-1.0..1.0) / (m * m) as f64).collect();
    let b_coef: Vec<(f64, f64)> =
        (1..=bandwidth).map(|m| (r.gen_range(-1.0..1.0) / (m * m) as f64, r.gen_range(0.0..2.0 * PI))).collect();
    let norm_a = a_coef.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let norm_b = b_coef.iter().map(|v| v.0.abs()).sum::<f64>().max(1e-300);
    let x0 = grid.x0;
    let v = VectorField3::from_fn(grid, |x, y| {
        let a: f64 = a_coef.iter().enumerate().map(|(m, c)| c * ((m + 1) as f64 * kx * (x - x0)).sin()).sum::<f64>()
            * amplitude
            / norm_a;
        let b: f64 = b_coef
            .iter()
            .enumerate()
            .map(|(m, (c, ph))| c * ((m + 1) as f64 * ky * y + ph).sin())
            .sum::<f64>()
            * amplitude
            / norm_b;
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        Vec3::new(cb * sa, sb * sa, ca)
    });
    let s = SpinField::from_unnormalized(&v).expect("unit by construction");
    (s, vec![Vec3::y(); grid.ny])
}

/// Upper hemisphere of radius `rho` centred at the origin:
/// `sqrt(rho^2 - x^2 - y^2)`; the grid must lie inside the disc.
pub fn sphere_cap(grid: Grid2D, rho: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| (rho * rho - x * x - y * y).max(0.0).sqrt())
}

/// `amplitude cos(2 pi kx x / lx) cos(2 pi ky y / ly)`.
pub fn fourier_mode(grid: Grid2D, kx: i64, ky: i64, amplitude: f64) -> ScalarField {
    let (wx, wy) = (2.0 * PI * kx as f64 / grid.lx, 2.0 * PI * ky as f64 / grid.ly);
    ScalarField::from_fn(grid, |x, y| amplitude * (wx * x).cos() * (wy * y).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::StencilOrder;
    use crate::spin::triple_density;

    #[test]
    fn rotor_has_uniform_slope_and_solvable_source() {
        let g = Grid2D::new(32, 32, 2.0 * PI, 2.0 * PI).unwrap();
        let (s, _) = rotor_spin(g, 7, 3, 0.8);
        let means = s.field().row_means();
        for m in &means {
            assert!((m - means[0]).norm() < 1e-14);
            assert!(m[0].abs() < 1e-14 && m[1].abs() < 1e-14);
        }
        let src = triple_density(s.field(), StencilOrder::Second);
        assert!(src.row_means().iter().all(|m| m.abs() < 1e-13));
    }

    #[test]
    fn same_seed_same_field() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        assert_eq!(random_smooth_scalar(g, 3, 2, 1.0), random_smooth_scalar(g, 3, 2, 1.0));
        assert_ne!(random_smooth_scalar(g, 3, 2, 1.0), random_smooth_scalar(g, 4, 2, 1.0));
        assert!(random_smooth_scalar(g, 3, 2, 0.5).max_abs() <= 0.5);
    }

    #[test]
    fn trig_jet_matches_eval() {
        let t = RandomTrig::new(&mut rng(1), 2, 2.0, 3.0);
        let (x, y, h) = (0.3, 0.7, 1e-5);
        let j = t.jet(x, y);
        assert!((j[0] - t.eval(x, y)).abs() < 1e-14);
        assert!((j[1] - (t.eval(x + h, y) - t.eval(x - h, y)) / (2.0 * h)).abs() < 1e-8);
        assert!((j[2] - (t.eval(x, y + h) - t.eval(x, y - h)) / (2.0 * h)).abs() < 1e-8);
    }
}
