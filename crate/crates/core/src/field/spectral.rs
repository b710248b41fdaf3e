//! Fourier-diagonalized periodic solvers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{ScalarField, StencilOrder};
use crate::error::{FlowError, Result};

/// Signed integer wavenumber for FFT bin `k` of an `n`-point transform.
fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn check_row_means(f: &ScalarField, tol_mean: f64) -> Result<()> {
    for (row, mean) in f.row_means().into_iter().enumerate() {
        if mean.abs() > tol_mean {
            return Err(FlowError::SecularGrowth { row, mean });
        }
    }
    Ok(())
}

/// Divides every row's Fourier coefficients by `i * symbol(k)`, dropping bins
/// where the symbol vanishes (the mean and, for stencil symbols, Nyquist).
fn integrate_rows(f: &ScalarField, symbol: impl Fn(f64) -> f64) -> ScalarField {
    let nx = f.grid.nx;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nx);
    let inv = planner.plan_fft_inverse(nx);
    let mut out = Vec::with_capacity(f.data.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];
    for row in f.data.chunks(nx) {
        for (b, &v) in buf.iter_mut().zip(row) {
            *b = Complex64::new(v, 0.0);
        }
        fwd.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let kappa = 2.0 * PI * signed_mode(k, nx) as f64 / f.grid.lx;
            let s = symbol(kappa);
            // the Nyquist sine is invisible on the lattice; its cosine has no
            // periodic antiderivative representable at the nodes
            if k == 0 || 2 * k == nx || s.abs() < 1e-14 * (1.0 + kappa.abs()) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, s);
            }
        }
        inv.process(&mut buf);
        out.extend(buf.iter().map(|c| c.re / nx as f64));
    }
    ScalarField { grid: f.grid, data: out }
}

/// Periodic x-antiderivative with zero x-mean per row, computed spectrally
/// (exact on every resolved Fourier mode).
pub fn antiderivative_x(f: &ScalarField, tol_mean: f64) -> Result<ScalarField> {
    check_row_means(f, tol_mean)?;
    Ok(integrate_rows(f, |k| k))
}

/// Inverse of the central first-derivative stencil of the given order, with
/// zero x-mean per row: `dx(F) = f - mean - (Nyquist part of f)` to round-off.
pub fn antiderivative_x_discrete(f: &ScalarField, tol_mean: f64, order: StencilOrder) -> Result<ScalarField> {
    check_row_means(f, tol_mean)?;
    let h = f.grid.hx();
    Ok(integrate_rows(f, |k| order.first_symbol(k, h)))
}

/// Zero-mean periodic antiderivative of a 1D sample of period `period`,
/// inverting the first-derivative stencil. The mean of `f` is discarded.
pub fn antiderivative_1d_discrete(f: &[f64], period: f64, order: StencilOrder) -> Vec<f64> {
    let n = f.len();
    let h = period / n as f64;
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let kappa = 2.0 * PI * signed_mode(k, n) as f64 / period;
        let s = order.first_symbol(kappa, h);
        if k == 0 || 2 * k == n || s.abs() < 1e-14 * (1.0 + kappa.abs()) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, s);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Tolerances for [`solve_hyperbolic_constraint_with`]. Coefficients are
/// compared as mode amplitudes (FFT output divided by node count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicTolerance {
    /// Largest admissible |mean of rho|.
    pub mean: f64,
    /// Largest admissible amplitude on a null mode of the operator.
    pub resonant: f64,
    /// A mode is null when |kx^2 - a^2 ky^2| <= near_null * (kx^2 + |a^2| ky^2).
    pub near_null: f64,
}

impl Default for HyperbolicTolerance {
    fn default() -> Self {
        HyperbolicTolerance { mean: 1e-10, resonant: 1e-10, near_null: 1e-9 }
    }
}

fn fft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (px, py) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
    };
    for row in data.chunks_mut(nx) {
        px.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = data[i + nx * j];
        }
        py.process(&mut col);
        for j in 0..ny {
            data[i + nx * j] = col[j];
        }
    }
}

/// Solves `u_xx - alpha2 * u_yy = rho` on the periodic box for the
/// zero-mean `u`, with default tolerances.
pub fn solve_hyperbolic_constraint(rho: &ScalarField, alpha2: f64) -> Result<ScalarField> {
    solve_hyperbolic_constraint_with(rho, alpha2, HyperbolicTolerance::default())
}

/// As [`solve_hyperbolic_constraint`]; source content below the tolerances on
/// the mean or on null modes is discarded.
pub fn solve_hyperbolic_constraint_with(
    rho: &ScalarField,
    alpha2: f64,
    tol: HyperbolicTolerance,
) -> Result<ScalarField> {
    let g = rho.grid;
    let (nx, ny) = (g.nx, g.ny);
    let n = (nx * ny) as f64;
    let mut buf: Vec<Complex64> = rho.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, nx, ny, false);

    let mean = buf[0].re / n;
    if mean.abs() > tol.mean {
        return Err(FlowError::NonzeroMean(mean));
    }
    for j in 0..ny {
        let my = signed_mode(j, ny);
        let ky = 2.0 * PI * my as f64 / g.ly;
        for i in 0..nx {
            let k = i + nx * j;
            if k == 0 {
                buf[k] = Complex64::new(0.0, 0.0);
                continue;
            }
            let mx = signed_mode(i, nx);
            let kx = 2.0 * PI * mx as f64 / g.lx;
            let sym = -kx * kx + alpha2 * ky * ky;
            let size = kx * kx + alpha2.abs() * ky * ky;
            if sym.abs() <= tol.near_null * size {
                if buf[k].norm() / n > tol.resonant {
                    return Err(FlowError::ResonantMode { kx: mx, ky: my });
                }
                buf[k] = Complex64::new(0.0, 0.0);
            } else {
                buf[k] /= sym;
            }
        }
    }
    fft2(&mut buf, nx, ny, true);
    Ok(ScalarField { grid: g, data: buf.iter().map(|c| c.re / n).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Deriv, Grid2D};

    fn box2pi(n: usize) -> Grid2D {
        Grid2D::new(n, n, 2.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn antiderivative_of_cosine_is_sine() {
        let lx = 3.0;
        let k = 2.0 * PI / lx;
        let g = Grid2D::new(32, 8, lx, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (k * x).cos());
        let big_f = antiderivative_x(&f, 1e-10).unwrap();
        let exact = ScalarField::from_fn(g, |x, _| (k * x).sin() / k);
        assert!(big_f.sub(&exact).max_abs() < 1e-14);
    }

    #[test]
    fn antiderivative_of_zero_and_constant() {
        let g = box2pi(16);
        let z = antiderivative_x(&ScalarField::zeros(g), 1e-10).unwrap();
        assert!(z.data.iter().all(|&v| v == 0.0));
        let one = ScalarField::constant(g, 1.0);
        match antiderivative_x(&one, 1e-10) {
            Err(FlowError::SecularGrowth { row: 0, mean }) => assert!((mean - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn discrete_inverse_undoes_stencil() {
        let g = box2pi(32);
        let f = ScalarField::from_fn(g, |x, y| (x + y).sin().exp() + 0.3 * (2.0 * x).cos() * y.sin());
        for order in [StencilOrder::Second, StencilOrder::Fourth] {
            let d = f.derivative(Deriv::X, order);
            let back = antiderivative_x_discrete(&d, 1e-10, order).unwrap();
            let means = f.row_means();
            let centred = ScalarField::from_fn(g, |_, _| 0.0)
                .data
                .iter()
                .enumerate()
                .map(|(k, _)| f.data[k] - means[k / 32])
                .collect::<Vec<_>>();
            let err = back.data.iter().zip(&centred).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            // the Nyquist component of f is the only part the stencil cannot see
            assert!(err < 1e-6, "order {order:?} err {err}");
        }
    }

    #[test]
    fn hyperbolic_single_mode() {
        let g = box2pi(16);
        let rho = ScalarField::from_fn(g, |x, y| (2.0 * x).cos() * y.cos());
        let u = solve_hyperbolic_constraint(&rho, 1.0).unwrap();
        let exact = rho.scale(-1.0 / 3.0);
        assert!(u.sub(&exact).max_abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_zero_and_resonance() {
        let g = box2pi(16);
        let u = solve_hyperbolic_constraint(&ScalarField::zeros(g), 1.0).unwrap();
        assert!(u.max_abs() == 0.0);
        let rho = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        assert_eq!(solve_hyperbolic_constraint(&rho, 1.0), Err(FlowError::ResonantMode { kx: 1, ky: 1 }));
        let rho = ScalarField::from_fn(g, |x, _| 0.5 + x.cos());
        assert!(matches!(solve_hyperbolic_constraint(&rho, 1.0), Err(FlowError::NonzeroMean(_))));
    }
}
