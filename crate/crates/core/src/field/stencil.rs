use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{wrap, Field, Node};

/// Accuracy order of the central periodic stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "u8", into = "u8")]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

impl From<StencilOrder> for u8 {
    fn from(o: StencilOrder) -> u8 {
        o.as_usize() as u8
    }
}

impl TryFrom<u8> for StencilOrder {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            _ => Err(format!("stencil order must be 2 or 4, got {v}")),
        }
    }
}

impl StencilOrder {
    pub fn as_usize(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    /// Half-width of the stencil.
    pub fn reach(self) -> usize {
        self.as_usize() / 2
    }

    pub fn from_usize(n: usize) -> Option<Self> {
        match n {
            2 => Some(StencilOrder::Second),
            4 => Some(StencilOrder::Fourth),
            _ => None,
        }
    }

    /// Integer weights and their common denominator for the first derivative.
    pub(crate) fn first(self) -> (&'static [(isize, f64)], f64) {
        match self {
            StencilOrder::Second => (&[(-1, -1.0), (1, 1.0)], 2.0),
            StencilOrder::Fourth => (&[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0),
        }
    }

    pub(crate) fn second(self) -> (&'static [(isize, f64)], f64) {
        match self {
            StencilOrder::Second => (&[(-1, 1.0), (0, -2.0), (1, 1.0)], 1.0),
            StencilOrder::Fourth => (&[(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)], 12.0),
        }
    }

    /// Fourier symbol of the first-derivative stencil divided by `i`, for
    /// wavenumber `k` on spacing `h`.
    pub(crate) fn first_symbol(self, k: f64, h: f64) -> f64 {
        let t = k * h;
        match self {
            StencilOrder::Second => t.sin() / h,
            StencilOrder::Fourth => (8.0 * t.sin() - (2.0 * t).sin()) / (6.0 * h),
        }
    }
}

/// Which partial derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    X,
    Y,
    XX,
    YY,
    XY,
}

fn apply_x<T: Node>(f: &Field<T>, w: &[(isize, f64)], scale: f64) -> Field<T> {
    let nx = f.grid.nx;
    let mut out = vec![T::zero(); f.data.len()];
    out.par_chunks_mut(nx).zip(f.data.par_chunks(nx)).for_each(|(o, row)| {
        for i in 0..nx {
            let mut acc = T::zero();
            for &(off, c) in w {
                acc = acc.add(row[wrap(i as isize + off, nx)].scale(c));
            }
            o[i] = acc.scale(scale);
        }
    });
    Field { grid: f.grid, data: out }
}

fn apply_y<T: Node>(f: &Field<T>, w: &[(isize, f64)], scale: f64) -> Field<T> {
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    let mut out = vec![T::zero(); f.data.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, o)| {
        for (i, slot) in o.iter_mut().enumerate() {
            let mut acc = T::zero();
            for &(off, c) in w {
                acc = acc.add(f.data[i + nx * wrap(j as isize + off, ny)].scale(c));
            }
            *slot = acc.scale(scale);
        }
    });
    Field { grid: f.grid, data: out }
}

/// Central periodic finite-difference derivative.
pub fn derivative<T: Node>(f: &Field<T>, d: Deriv, order: StencilOrder) -> Field<T> {
    let (hx, hy) = (f.grid.hx(), f.grid.hy());
    let (w1, d1) = order.first();
    let (w2, d2) = order.second();
    match d {
        Deriv::X => apply_x(f, w1, 1.0 / (d1 * hx)),
        Deriv::Y => apply_y(f, w1, 1.0 / (d1 * hy)),
        Deriv::XX => apply_x(f, w2, 1.0 / (d2 * hx * hx)),
        Deriv::YY => apply_y(f, w2, 1.0 / (d2 * hy * hy)),
        Deriv::XY => apply_y(&apply_x(f, w1, 1.0 / (d1 * hx)), w1, 1.0 / (d1 * hy)),
    }
}

/// Periodic derivative of a 1D sample (`degree` 1 or 2).
pub fn derivative_1d<T: Node>(f: &[T], h: f64, degree: usize, order: StencilOrder) -> Vec<T> {
    let n = f.len();
    let (w, scale) = match degree {
        1 => (order.first().0, 1.0 / (order.first().1 * h)),
        2 => (order.second().0, 1.0 / (order.second().1 * h * h)),
        _ => panic!("derivative_1d supports degree 1 or 2"),
    };
    (0..n)
        .map(|i| {
            w.iter()
                .fold(T::zero(), |acc, &(off, c)| acc.add(f[wrap(i as isize + off, n)].scale(c)))
                .scale(scale)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Grid2D, ScalarField};
    use std::f64::consts::PI;

    #[test]
    fn constant_is_annihilated_exactly() {
        let g = Grid2D::new(16, 12, 3.0, 2.0).unwrap();
        let f = ScalarField::constant(g, 2.5);
        for d in [Deriv::X, Deriv::Y, Deriv::XX, Deriv::YY, Deriv::XY] {
            for o in [StencilOrder::Second, StencilOrder::Fourth] {
                assert!(derivative(&f, d, o).data.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn sine_derivative_second_order() {
        let lx = 3.0;
        let k = 2.0 * PI / lx;
        let g = Grid2D::new(64, 8, lx, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (k * x).sin());
        let exact = ScalarField::from_fn(g, |x, _| k * (k * x).cos());
        let err = f.dx(StencilOrder::Second).sub(&exact).max_abs();
        let h = g.hx();
        // leading truncation term k^3 h^2 / 6
        assert!(err < k.powi(3) * h * h / 6.0 * 1.01, "err {err}");
    }

    #[test]
    fn fourth_order_matches_symbol() {
        let g = Grid2D::new(32, 8, 2.0 * PI, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (3.0 * x).sin());
        let d = f.dx(StencilOrder::Fourth);
        let s = StencilOrder::Fourth.first_symbol(3.0, g.hx());
        let exact = ScalarField::from_fn(g, |x, _| s * (3.0 * x).cos());
        assert!(d.sub(&exact).max_abs() < 1e-13);
    }

    #[test]
    fn one_dimensional_matches_grid_version() {
        let g = Grid2D::new(16, 8, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).cos() + x * (1.0 - x));
        let d2 = f.derivative(Deriv::XX, StencilOrder::Fourth);
        let d1 = derivative_1d(f.row(0), g.hx(), 2, StencilOrder::Fourth);
        for i in 0..16 {
            assert_eq!(d1[i], d2.at(i, 0));
        }
    }
}
