//! Curvature of a 2D metric `E dx^2 + 2F dx dy + G dy^2` from the metric alone.

use crate::error::{FlowError, Result};
use crate::field::{Deriv, Field, Grid2D, ScalarField, StencilOrder};
use crate::tensor::{self, Cube};

/// First fundamental form sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric2 {
    pub e: ScalarField,
    pub f: ScalarField,
    pub g: ScalarField,
}

/// Symmetric 2-tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym2Field {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl Sym2Field {
    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, o: &Sym2Field) -> f64 {
        self.xx.sub(&o.xx).max_abs().max(self.xy.sub(&o.xy).max_abs()).max(self.yy.sub(&o.yy).max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.max_abs().max(self.xy.max_abs()).max(self.yy.max_abs())
    }
}

impl Metric2 {
    pub fn new(e: ScalarField, f: ScalarField, g: ScalarField) -> Result<Self> {
        e.same_grid(&f)?;
        e.same_grid(&g)?;
        Ok(Metric2 { e, f, g })
    }

    /// Samples `(E, F, G)` at every node.
    pub fn from_fn(grid: Grid2D, m: impl Fn(f64, f64) -> (f64, f64, f64) + Sync) -> Self {
        Metric2 {
            e: ScalarField::from_fn(grid, |x, y| m(x, y).0),
            f: ScalarField::from_fn(grid, |x, y| m(x, y).1),
            g: ScalarField::from_fn(grid, |x, y| m(x, y).2),
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.e.grid
    }

    pub fn det(&self) -> ScalarField {
        let ef = self.e.mul(&self.g);
        ef.sub(&self.f.mul(&self.f))
    }

    /// Fails unless `E > 0` and `EG - F^2 > floor` everywhere.
    pub fn check(&self, floor: f64) -> Result<()> {
        let d = self.det();
        for node in 0..d.data.len() {
            if !(self.e.data[node] > 0.0 && d.data[node] > floor) {
                return Err(FlowError::DegenerateMetric { node, value: d.data[node] });
            }
        }
        Ok(())
    }

    fn require_unit_e(&self) -> Result<()> {
        let dev = self.e.data.iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
        if dev > 1e-6 {
            return Err(FlowError::InvalidParameter(format!("closed-form curvature needs E = 1 (max |E-1| = {dev:e})")));
        }
        Ok(())
    }
}

/// Scalar curvature of an `E = 1` metric from `F`, `G` and their derivatives,
/// with `g = G - F^2`.
pub fn scalar_curvature_e1(metric: &Metric2, order: StencilOrder, floor: f64) -> Result<ScalarField> {
    metric.check(floor)?;
    metric.require_unit_e()?;
    let (f, g) = (&metric.f, &metric.g);
    let (fx, fy, fxy) = (f.dx(order), f.dy(order), f.derivative(Deriv::XY, order));
    let (gx, gy, gxx) = (g.dx(order), g.dy(order), g.derivative(Deriv::XX, order));
    let grid = metric.grid();
    let data = (0..grid.len())
        .map(|k| {
            let (f, g) = (f.data[k], g.data[k]);
            let (fx, fy, fxy, gx, gy, gxx) = (fx.data[k], fy.data[k], fxy.data[k], gx.data[k], gy.data[k], gxx.data[k]);
            let det = g - f * f;
            (4.0 * f * fx * fy - 2.0 * fx * gy - 2.0 * f * fx * gx + gx * gx - 4.0 * f * f * fxy + 4.0 * g * fxy
                + 2.0 * f * f * gxx
                - 2.0 * g * gxx)
                / (2.0 * det * det)
        })
        .collect();
    Ok(Field { grid, data })
}

/// `(G_x^2 - 2 G G_xx) / (2 G^2)` at a point.
pub fn scalar_curvature_orthogonal_at(g: f64, gx: f64, gxx: f64) -> f64 {
    (gx * gx - 2.0 * g * gxx) / (2.0 * g * g)
}

/// Scalar curvature of `dx^2 + G dy^2`.
pub fn scalar_curvature_orthogonal(metric: &Metric2, order: StencilOrder, floor: f64) -> Result<ScalarField> {
    metric.check(floor)?;
    metric.require_unit_e()?;
    let fmax = metric.f.max_abs();
    if fmax > 1e-6 {
        return Err(FlowError::InvalidParameter(format!("orthogonal formula needs F = 0 (max |F| = {fmax:e})")));
    }
    let g = &metric.g;
    let (gx, gxx) = (g.dx(order), g.derivative(Deriv::XX, order));
    let grid = metric.grid();
    let data = (0..grid.len()).map(|k| scalar_curvature_orthogonal_at(g.data[k], gx.data[k], gxx.data[k])).collect();
    Ok(Field { grid, data })
}

fn metric_at(m: &Metric2, k: usize) -> [[f64; 2]; 2] {
    [[m.e.data[k], m.f.data[k]], [m.f.data[k], m.g.data[k]]]
}

/// Ricci tensor from stencil Christoffel symbols, themselves differentiated by
/// the same stencils.
pub fn ricci_christoffel(metric: &Metric2, order: StencilOrder, floor: f64) -> Result<Sym2Field> {
    metric.check(floor)?;
    let grid = metric.grid();
    let comps = [&metric.e, &metric.f, &metric.g];
    let dxs: Vec<ScalarField> = comps.iter().map(|c| c.dx(order)).collect();
    let dys: Vec<ScalarField> = comps.iter().map(|c| c.dy(order)).collect();
    let idx = |i: usize, j: usize| i + j;

    let mut gammas: Vec<Cube<2>> = Vec::with_capacity(grid.len());
    let mut ginvs = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let g = metric_at(metric, k);
        let ginv = tensor::inverse(&g).ok_or(FlowError::DegenerateMetric { node: k, value: tensor::determinant(&g) })?;
        let mut dg = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                dg[0][i][j] = dxs[idx(i, j)].data[k];
                dg[1][i][j] = dys[idx(i, j)].data[k];
            }
        }
        gammas.push(tensor::christoffel(&ginv, &dg));
        ginvs.push(ginv);
    }
    // derivatives of each Gamma^a_bc
    let mut dgam = vec![[[[[0.0; 2]; 2]; 2]; 2]; grid.len()];
    for a in 0..2 {
        for b in 0..2 {
            for c in b..2 {
                let fld = Field { grid, data: gammas.iter().map(|gm| gm[a][b][c]).collect::<Vec<f64>>() };
                let (fx, fy) = (fld.dx(order), fld.dy(order));
                for k in 0..grid.len() {
                    dgam[k][0][a][b][c] = fx.data[k];
                    dgam[k][0][a][c][b] = fx.data[k];
                    dgam[k][1][a][b][c] = fy.data[k];
                    dgam[k][1][a][c][b] = fy.data[k];
                }
            }
        }
    }
    let ric: Vec<[[f64; 2]; 2]> = (0..grid.len()).map(|k| tensor::ricci(&gammas[k], &dgam[k])).collect();
    let sf = |i: usize, j: usize| Field { grid, data: ric.iter().map(|r| r[i][j]).collect() };
    Ok(Sym2Field { xx: sf(0, 0), xy: sf(0, 1), yy: sf(1, 1) })
}

/// `g^ij R_ij` with `R_ij` from [`ricci_christoffel`].
pub fn scalar_curvature_christoffel(metric: &Metric2, order: StencilOrder, floor: f64) -> Result<ScalarField> {
    let ric = ricci_christoffel(metric, order, floor)?;
    let grid = metric.grid();
    let data = (0..grid.len())
        .map(|k| {
            let g = metric_at(metric, k);
            let ginv = tensor::inverse(&g).expect("checked above");
            tensor::trace(&ginv, &[[ric.xx.data[k], ric.xy.data[k]], [ric.xy.data[k], ric.yy.data[k]]])
        })
        .collect();
    Ok(Field { grid, data })
}

/// `1/2 R g_ij`.
pub fn ricci_tensor_2d(metric: &Metric2, r: &ScalarField) -> Sym2Field {
    Sym2Field {
        xx: r.mul(&metric.e).scale(0.5),
        xy: r.mul(&metric.f).scale(0.5),
        yy: r.mul(&metric.g).scale(0.5),
    }
}

/// Scalar curvature by the closed `E = 1` formula when the metric is in that
/// gauge, by Christoffel symbols otherwise.
pub fn scalar_curvature_2d(metric: &Metric2, order: StencilOrder, floor: f64) -> Result<ScalarField> {
    if metric.require_unit_e().is_ok() {
        scalar_curvature_e1(metric, order, floor)
    } else {
        scalar_curvature_christoffel(metric, order, floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::G_FLOOR;
    use std::f64::consts::PI;

    #[test]
    fn sphere_metric_closed_form_is_two() {
        for x in [0.2, 0.9, 1.5, 2.8] {
            let (s, c) = f64::sin_cos(x);
            let r = scalar_curvature_orthogonal_at(s * s, 2.0 * s * c, 2.0 * (c * c - s * s));
            assert!((r - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        let m = Metric2::from_fn(g, |_, _| (1.0, 0.0, 1.0));
        assert_eq!(scalar_curvature_e1(&m, StencilOrder::Fourth, G_FLOOR).unwrap().max_abs(), 0.0);
        assert_eq!(ricci_christoffel(&m, StencilOrder::Second, G_FLOOR).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn closed_form_and_orthogonal_agree_when_f_vanishes() {
        let g = Grid2D::new(32, 32, 2.0 * PI, 2.0 * PI).unwrap();
        let m = Metric2::from_fn(g, |x, y| (1.0, 0.0, 1.5 + 0.3 * x.sin() * y.cos()));
        let a = scalar_curvature_e1(&m, StencilOrder::Fourth, G_FLOOR).unwrap();
        let b = scalar_curvature_orthogonal(&m, StencilOrder::Fourth, G_FLOOR).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-12);
    }

    #[test]
    fn non_unit_e_rejected_by_closed_form() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        let m = Metric2::from_fn(g, |_, _| (2.0, 0.0, 1.0));
        assert!(matches!(scalar_curvature_e1(&m, StencilOrder::Second, G_FLOOR), Err(FlowError::InvalidParameter(_))));
        assert_eq!(scalar_curvature_2d(&m, StencilOrder::Second, G_FLOOR).unwrap().max_abs(), 0.0);
    }
}
