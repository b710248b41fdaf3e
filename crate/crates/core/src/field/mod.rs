//! Periodic grid fields, stencils, and the periodic solvers the flows build on.
//!
//! Every field is stored row-major with x varying fastest: node `(i, j)` lives
//! at `i + nx * j`.

mod io;
mod spectral;
mod stencil;

pub use io::{fmt_num, grid_table, read_csv, write_csv, CsvTable};
pub use spectral::{
    antiderivative_1d_discrete, antiderivative_x, antiderivative_x_discrete, solve_hyperbolic_constraint,
    solve_hyperbolic_constraint_with, HyperbolicTolerance,
};
pub use stencil::{derivative, derivative_1d, Deriv, StencilOrder};

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

/// Minimum node count per axis; a five-point stencil must fit without aliasing.
pub const MIN_NODES: usize = 8;

pub type Vec3 = Vector3<f64>;
pub type Mat2 = Matrix2<Complex64>;

/// Uniform periodic lattice over `[x0, x0 + lx) x [y0, y0 + ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::with_origin(nx, ny, lx, ly, 0.0, 0.0)
    }

    pub fn with_origin(nx: usize, ny: usize, lx: f64, ly: f64, x0: f64, y0: f64) -> Result<Self> {
        let g = Grid2D { nx, ny, lx, ly, x0, y0 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_NODES || self.ny < MIN_NODES || self.nx % 2 != 0 || self.ny % 2 != 0 {
            return Err(FlowError::GridTooSmall { nx: self.nx, ny: self.ny, min: MIN_NODES });
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return Err(FlowError::InvalidGrid(format!("periods must be positive, got {} x {}", self.lx, self.ly)));
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(FlowError::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn h_min(&self) -> f64 {
        self.hx().min(self.hy())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy()
    }

    /// Same physical box at a different resolution.
    pub fn refined(&self, nx: usize, ny: usize) -> Result<Self> {
        Self::with_origin(nx, ny, self.lx, self.ly, self.x0, self.y0)
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }
}

/// Values a field may carry at each node.
pub trait Node: Copy + Send + Sync + 'static {
    fn zero() -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn is_finite(&self) -> bool;
}

impl Node for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Node for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl Node for Mat2 {
    fn zero() -> Self {
        Mat2::zeros()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// A value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Node> {
    pub grid: Grid2D,
    pub data: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField3 = Field<Vec3>;
pub type MatrixFieldC2 = Field<Mat2>;

impl<T: Node> Field<T> {
    pub fn new(grid: Grid2D, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(FlowError::GridMismatch);
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite(k));
        }
        Ok(Field { grid, data })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Field { grid, data: vec![T::zero(); grid.len()] }
    }

    pub fn constant(grid: Grid2D, v: T) -> Self {
        Field { grid, data: vec![v; grid.len()] }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> T + Sync) -> Self {
        let mut data = vec![T::zero(); grid.len()];
        data.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            let y = grid.y(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.x(i), y);
            }
        });
        Field { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.grid.idx(i, j)]
    }

    pub fn row(&self, j: usize) -> &[T] {
        let nx = self.grid.nx;
        &self.data[j * nx..(j + 1) * nx]
    }

    pub fn map<U: Node>(&self, f: impl Fn(T) -> U + Sync) -> Field<U> {
        Field { grid: self.grid, data: self.data.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Node, V: Node>(&self, other: &Field<U>, f: impl Fn(T, U) -> V + Sync) -> Field<V> {
        assert_eq!(self.grid, other.grid, "zip_map on mismatched grids");
        Field {
            grid: self.grid,
            data: self.data.par_iter().zip(other.data.par_iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip_map(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip_map(o, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|a| a.scale(s))
    }

    /// `self + s * o`
    pub fn axpy(&self, s: f64, o: &Self) -> Self {
        self.zip_map(o, |a, b| a.add(b.scale(s)))
    }

    pub fn same_grid<U: Node>(&self, o: &Field<U>) -> Result<()> {
        if self.grid == o.grid {
            Ok(())
        } else {
            Err(FlowError::GridMismatch)
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(FlowError::NonFinite(k)),
            None => Ok(()),
        }
    }

    /// x-mean of each row.
    pub fn row_means(&self) -> Vec<T> {
        let nx = self.grid.nx;
        self.data
            .chunks(nx)
            .map(|row| row.iter().fold(T::zero(), |acc, &v| acc.add(v)).scale(1.0 / nx as f64))
            .collect()
    }

    pub fn mean(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.add(v)).scale(1.0 / self.data.len() as f64)
    }

    pub fn derivative(&self, d: Deriv, order: StencilOrder) -> Self {
        derivative(self, d, order)
    }

    pub fn dx(&self, order: StencilOrder) -> Self {
        derivative(self, Deriv::X, order)
    }

    pub fn dy(&self, order: StencilOrder) -> Self {
        derivative(self, Deriv::Y, order)
    }
}

impl ScalarField {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Root-mean-square value over nodes.
    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    /// Trapezoid (= midpoint on a periodic lattice) integral over the box.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.zip_map(o, |a, b| a * b)
    }

    /// Subtracts each row's x-mean, failing if any exceeds `tol`.
    pub fn with_row_means_removed(&self, tol: f64) -> Result<ScalarField> {
        let means = self.row_means();
        if let Some((row, &mean)) = means.iter().enumerate().find(|(_, m)| m.abs() > tol) {
            return Err(FlowError::SecularGrowth { row, mean });
        }
        let nx = self.grid.nx;
        Ok(ScalarField {
            grid: self.grid,
            data: self.data.iter().enumerate().map(|(k, v)| v - means[k / nx]).collect(),
        })
    }
}

impl VectorField3 {
    pub fn component(&self, c: usize) -> ScalarField {
        self.map(|v| v[c])
    }

    pub fn from_components(x: &ScalarField, y: &ScalarField, z: &ScalarField) -> Result<Self> {
        x.same_grid(y)?;
        x.same_grid(z)?;
        let data = (0..x.data.len()).map(|k| Vec3::new(x.data[k], y.data[k], z.data[k])).collect();
        Ok(Field { grid: x.grid, data })
    }

    pub fn cross(&self, o: &Self) -> Self {
        self.zip_map(o, |a, b| a.cross(&b))
    }

    pub fn dot(&self, o: &Self) -> ScalarField {
        self.zip_map(o, |a, b| a.dot(&b))
    }

    /// `self . (b ^ c)` at every node.
    pub fn triple(&self, b: &Self, c: &Self) -> ScalarField {
        self.dot(&b.cross(c))
    }

    pub fn norm(&self) -> ScalarField {
        self.map(|v| v.norm())
    }

    pub fn scale_by(&self, s: &ScalarField) -> Self {
        self.zip_map(s, |v, a| v * a)
    }

    /// Pointwise unit vectors; fails on nodes shorter than `1e-13`.
    pub fn normalize(&self) -> Result<Self> {
        if let Some(k) = self.data.iter().position(|v| v.norm() < 1e-13) {
            return Err(FlowError::DegenerateVector(k));
        }
        Ok(self.map(|v| v / v.norm()))
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|v| v.norm_squared()).sum::<f64>() / self.data.len() as f64).sqrt()
    }
}

impl MatrixFieldC2 {
    /// Largest pointwise Frobenius norm.
    pub fn max_frobenius(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, a| m.max(a.norm()))
    }

    /// Root-mean-square of pointwise Frobenius norms.
    pub fn rms_frobenius(&self) -> f64 {
        (self.data.iter().map(|a| a.norm_squared()).sum::<f64>() / self.data.len() as f64).sqrt()
    }
}

/// Periodic index.
#[inline]
pub(crate) fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_small_and_odd() {
        assert!(matches!(Grid2D::new(6, 8, 1.0, 1.0), Err(FlowError::GridTooSmall { .. })));
        assert!(matches!(Grid2D::new(9, 8, 1.0, 1.0), Err(FlowError::GridTooSmall { .. })));
        assert!(Grid2D::new(8, 8, 0.0, 1.0).is_err());
        assert!(Grid2D::new(8, 10, 1.0, 2.0).is_ok());
    }

    #[test]
    fn layout_is_x_fastest() {
        let g = Grid2D::new(8, 8, 8.0, 8.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x + 100.0 * y);
        assert_eq!(f.data[1], 1.0);
        assert_eq!(f.data[8], 100.0);
        assert_eq!(f.at(3, 2), 203.0);
    }

    #[test]
    fn basis_vector_algebra() {
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let e1 = VectorField3::constant(g, Vec3::x());
        let e2 = VectorField3::constant(g, Vec3::y());
        let e3 = VectorField3::constant(g, Vec3::z());
        assert!(e1.cross(&e2).data.iter().all(|v| *v == Vec3::z()));
        assert!(e1.dot(&e2).data.iter().all(|&v| v == 0.0));
        assert!(e1.cross(&e1).data.iter().all(|v| *v == Vec3::zeros()));
        assert!(e1.triple(&e2, &e3).data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn normalize_rejects_zero_vector() {
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let mut a = VectorField3::constant(g, Vec3::new(3.0, 4.0, 0.0));
        assert!((a.normalize().unwrap().data[5].norm() - 1.0).abs() < 1e-15);
        a.data[17] = Vec3::new(1e-14, 0.0, 0.0);
        assert_eq!(a.normalize(), Err(FlowError::DegenerateVector(17)));
    }

    #[test]
    fn new_rejects_nan() {
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let mut d = vec![0.0; 64];
        d[9] = f64::NAN;
        assert_eq!(ScalarField::new(g, d), Err(FlowError::NonFinite(9)));
    }
}
