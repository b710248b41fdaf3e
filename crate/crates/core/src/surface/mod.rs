//! Surfaces swept by spin fields: reconstruction of `r` from `r_x = S`,
//! fundamental forms, curvatures, intrinsic curvature routes and graph charts.

mod graph;
mod intrinsic;

pub use graph::{graph_mean_curvature, graph_slopes, inward_normal, Branch, GraphJet, GraphSlopes};
pub use intrinsic::{
    ricci_christoffel, ricci_tensor_2d, scalar_curvature_2d, scalar_curvature_christoffel, scalar_curvature_e1,
    scalar_curvature_orthogonal, scalar_curvature_orthogonal_at, Metric2, Sym2Field,
};

use crate::error::{FlowError, Result};
use crate::field::{
    antiderivative_1d_discrete, antiderivative_x_discrete, derivative_1d, grid_table, CsvTable, Deriv, Field, Grid2D,
    ScalarField, StencilOrder, Vec3, VectorField3,
};
use crate::spin::SpinField;

/// Default floor on `EG - F^2` below which a surface counts as degenerate.
pub const G_FLOOR: f64 = 1e-10;

/// `r(x_i, y_j) = x_i m_j + y_j b + c_j + p(x_i, y_j)` with `p` periodic and of
/// zero x-mean on every row, and `c` periodic in y.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlusPeriodic {
    /// Per-row x-slope `m_j`.
    pub slope_x: Vec<Vec3>,
    /// Constant y-slope `b`.
    pub slope_y: Vec3,
    /// Row offsets `c_j`.
    pub row_offset: Vec<Vec3>,
    pub periodic: VectorField3,
}

impl LinearPlusPeriodic {
    /// Splits the row means of `periodic` off into the row offsets.
    pub fn new(slope_x: Vec<Vec3>, slope_y: Vec3, periodic: VectorField3) -> Result<Self> {
        let g = periodic.grid;
        if slope_x.len() != g.ny {
            return Err(FlowError::GridMismatch);
        }
        periodic.check_finite()?;
        let row_offset = periodic.row_means();
        let nx = g.nx;
        let data = periodic.data.iter().enumerate().map(|(k, v)| v - row_offset[k / nx]).collect();
        Ok(LinearPlusPeriodic { slope_x, slope_y, row_offset, periodic: Field { grid: g, data } })
    }

    /// Surface `x a + y b + f(x, y)` with `f` periodic.
    pub fn from_fn(grid: Grid2D, a: Vec3, b: Vec3, f: impl Fn(f64, f64) -> Vec3 + Sync) -> Result<Self> {
        Self::new(vec![a; grid.ny], b, VectorField3::from_fn(grid, f))
    }

    pub fn grid(&self) -> Grid2D {
        self.periodic.grid
    }

    /// Mean x-slope.
    pub fn slope3(&self) -> Vec3 {
        self.slope_x.iter().sum::<Vec3>() / self.slope_x.len() as f64
    }

    pub fn positions(&self) -> VectorField3 {
        let g = self.grid();
        let mut out = self.periodic.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.data[g.idx(i, j)] += self.slope_x[j] * g.x(i) + self.slope_y * g.y(j) + self.row_offset[j];
            }
        }
        out
    }

    /// Point cloud `x,y,r1,r2,r3`.
    pub fn point_cloud(&self) -> Result<CsvTable> {
        let p = self.positions();
        grid_table(&["r1", "r2", "r3"], &[&p.component(0), &p.component(1), &p.component(2)])
    }
}

/// Surface with `r_x = S` and zero row-mean of the periodic part of `r_y`.
pub fn reconstruct_position(s: &SpinField, order: StencilOrder) -> Result<LinearPlusPeriodic> {
    reconstruct_position_with_drift(s, &vec![Vec3::zeros(); s.grid().ny], order)
}

/// Surface with `r_x = S` (inverting the stencil of `order`) whose `r_y`,
/// less its x-secular part, has x-mean `ry_mean[j]` on row `j`.
pub fn reconstruct_position_with_drift(
    s: &SpinField,
    ry_mean: &[Vec3],
    order: StencilOrder,
) -> Result<LinearPlusPeriodic> {
    let g = s.grid();
    if ry_mean.len() != g.ny {
        return Err(FlowError::GridMismatch);
    }
    let f = s.field();
    let slope_x = f.row_means();
    let comps = (0..3)
        .map(|c| {
            let centred = f.component(c).with_row_means_removed(f64::INFINITY)?;
            antiderivative_x_discrete(&centred, 1e-9, order)
        })
        .collect::<Result<Vec<_>>>()?;
    let periodic = VectorField3::from_components(&comps[0], &comps[1], &comps[2])?;

    let slope_y = ry_mean.iter().sum::<Vec3>() / g.ny as f64;
    let mut row_offset = vec![Vec3::zeros(); g.ny];
    for c in 0..3 {
        let w: Vec<f64> = ry_mean.iter().map(|v| v[c] - slope_y[c]).collect();
        for (o, v) in row_offset.iter_mut().zip(antiderivative_1d_discrete(&w, g.ly, order)) {
            o[c] = v;
        }
    }
    Ok(LinearPlusPeriodic { slope_x, slope_y, row_offset, periodic })
}

/// `r` with its first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceJet {
    pub r: LinearPlusPeriodic,
    pub r_x: VectorField3,
    pub r_y: VectorField3,
    pub r_xx: VectorField3,
    pub r_xy: VectorField3,
    pub r_yy: VectorField3,
}

impl SurfaceJet {
    /// Stencil derivatives of the periodic part plus exact derivatives of the
    /// linear part (row slopes and offsets are differentiated along y).
    pub fn new(r: &LinearPlusPeriodic, order: StencilOrder) -> Self {
        let g = r.grid();
        let p = &r.periodic;
        let hy = g.hy();
        let dm = derivative_1d(&r.slope_x, hy, 1, order);
        let ddm = derivative_1d(&r.slope_x, hy, 2, order);
        let dc = derivative_1d(&r.row_offset, hy, 1, order);
        let ddc = derivative_1d(&r.row_offset, hy, 2, order);
        let lin = |f: &dyn Fn(usize, usize) -> Vec3| -> VectorField3 {
            let mut data = Vec::with_capacity(g.len());
            for j in 0..g.ny {
                for i in 0..g.nx {
                    data.push(f(i, j));
                }
            }
            Field { grid: g, data }
        };
        let r_x = p.dx(order).add(&lin(&|_, j| r.slope_x[j]));
        let r_y = p.dy(order).add(&lin(&|i, j| dm[j] * g.x(i) + r.slope_y + dc[j]));
        let r_xx = p.derivative(Deriv::XX, order);
        let r_xy = p.derivative(Deriv::XY, order).add(&lin(&|_, j| dm[j]));
        let r_yy = p.derivative(Deriv::YY, order).add(&lin(&|i, j| ddm[j] * g.x(i) + ddc[j]));
        SurfaceJet { r: r.clone(), r_x, r_y, r_xx, r_xy, r_yy }
    }

    pub fn grid(&self) -> Grid2D {
        self.r.grid()
    }

    /// `(E_x, F_x, G_x)` by the product rule on the jet. The first form need
    /// not be periodic in x when the row slopes vary along y, so stencils on
    /// `E`, `F`, `G` themselves would see a jump at the seam.
    pub fn metric_dx(&self) -> (ScalarField, ScalarField, ScalarField) {
        let grid = self.grid();
        let n = grid.len();
        let (mut ex, mut fx, mut gx) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let (rx, ry, rxx, rxy) = (self.r_x.data[k], self.r_y.data[k], self.r_xx.data[k], self.r_xy.data[k]);
            ex.push(2.0 * rx.dot(&rxx));
            fx.push(rxx.dot(&ry) + rx.dot(&rxy));
            gx.push(2.0 * ry.dot(&rxy));
        }
        (Field { grid, data: ex }, Field { grid, data: fx }, Field { grid, data: gx })
    }
}

/// Both fundamental forms at one point, with `det = EG - F^2` and the unit
/// normal `n = (r_x ^ r_y)/sqrt(det)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormsAt {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub det: f64,
    pub normal: Vec3,
}

impl FormsAt {
    /// Trace-convention mean curvature `(EN - 2FM + GL)/det`.
    pub fn mean_curvature(&self) -> f64 {
        (self.e * self.n - 2.0 * self.f * self.m + self.g * self.l) / self.det
    }

    pub fn gauss_curvature(&self) -> f64 {
        (self.l * self.n - self.m * self.m) / self.det
    }
}

/// Forms from a jet; no degeneracy check (a vanishing `det` gives non-finite
/// second-form entries).
pub fn forms_at(rx: Vec3, ry: Vec3, rxx: Vec3, rxy: Vec3, ryy: Vec3) -> FormsAt {
    let c = rx.cross(&ry);
    let det = c.norm_squared();
    let normal = c / det.sqrt();
    FormsAt {
        e: rx.dot(&rx),
        f: rx.dot(&ry),
        g: ry.dot(&ry),
        l: rxx.dot(&normal),
        m: rxy.dot(&normal),
        n: ryy.dot(&normal),
        det,
        normal,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalForms {
    pub e: ScalarField,
    pub f: ScalarField,
    pub g: ScalarField,
    pub l: ScalarField,
    pub m: ScalarField,
    pub n: ScalarField,
    /// `EG - F^2`.
    pub det: ScalarField,
    pub normal: VectorField3,
}

/// Forms of the jet; fails on the first node with `det <= floor`.
pub fn fundamental_forms(jet: &SurfaceJet, floor: f64) -> Result<FundamentalForms> {
    let grid = jet.grid();
    let pts: Vec<FormsAt> = (0..grid.len())
        .map(|k| forms_at(jet.r_x.data[k], jet.r_y.data[k], jet.r_xx.data[k], jet.r_xy.data[k], jet.r_yy.data[k]))
        .collect();
    if let Some((node, p)) = pts.iter().enumerate().find(|(_, p)| !(p.det > floor)) {
        return Err(FlowError::DegenerateMetric { node, value: p.det });
    }
    let sf = |f: fn(&FormsAt) -> f64| Field { grid, data: pts.iter().map(f).collect() };
    Ok(FundamentalForms {
        e: sf(|p| p.e),
        f: sf(|p| p.f),
        g: sf(|p| p.g),
        l: sf(|p| p.l),
        m: sf(|p| p.m),
        n: sf(|p| p.n),
        det: sf(|p| p.det),
        normal: Field { grid, data: pts.iter().map(|p| p.normal).collect() },
    })
}

impl FundamentalForms {
    pub fn grid(&self) -> Grid2D {
        self.e.grid
    }

    pub fn sqrt_det(&self) -> ScalarField {
        self.det.map(f64::sqrt)
    }

    pub fn metric(&self) -> Metric2 {
        Metric2 { e: self.e.clone(), f: self.f.clone(), g: self.g.clone() }
    }

    /// Surface area `sum sqrt(det) hx hy`.
    pub fn area(&self) -> f64 {
        self.sqrt_det().integral()
    }

    /// `x,y,E,F,G,L,M,N,H,K,R` with `R` from the metric alone.
    pub fn table(&self, r: &ScalarField) -> Result<CsvTable> {
        let (h, k) = curvatures(self);
        grid_table(
            &["E", "F", "G", "L", "M", "N", "H", "K", "R"],
            &[&self.e, &self.f, &self.g, &self.l, &self.m, &self.n, &h, &k, r],
        )
    }
}

/// Mean (trace convention) and Gauss curvature.
pub fn curvatures(forms: &FundamentalForms) -> (ScalarField, ScalarField) {
    let grid = forms.grid();
    let mut h = Vec::with_capacity(grid.len());
    let mut k = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (e, f, g, l, m, n, d) =
            (forms.e.data[i], forms.f.data[i], forms.g.data[i], forms.l.data[i], forms.m.data[i], forms.n.data[i], forms.det.data[i]);
        h.push((e * n - 2.0 * f * m + g * l) / d);
        k.push((l * n - m * m) / d);
    }
    (Field { grid, data: h }, Field { grid, data: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use std::f64::consts::PI;

    #[test]
    fn straight_line_and_circle() {
        let g = Grid2D::new(32, 8, 2.0 * PI, 1.0).unwrap();
        let s = SpinField::new(VectorField3::constant(g, Vec3::x())).unwrap();
        let r = reconstruct_position(&s, StencilOrder::Second).unwrap();
        assert_eq!(r.slope3(), Vec3::x());
        assert!(r.periodic.max_norm() == 0.0);

        let k = 1.0;
        let s = SpinField::new(VectorField3::from_fn(g, |x, _| Vec3::new((k * x).cos(), (k * x).sin(), 0.0))).unwrap();
        let r = reconstruct_position(&s, StencilOrder::Fourth).unwrap();
        assert!(r.slope3().norm() < 1e-15);
        let sym = StencilOrder::Fourth.first_symbol(k, g.hx());
        // the discrete inverse divides by the stencil symbol rather than k
        let exact = VectorField3::from_fn(g, |x, _| Vec3::new((k * x).sin(), -(k * x).cos(), 0.0) / sym);
        assert!(r.periodic.sub(&exact).max_norm() < 1e-13);
        assert!((sym - k).abs() < 1e-4);
    }

    #[test]
    fn reconstruction_round_trip() {
        let g = Grid2D::new(32, 32, 2.0 * PI, 2.0 * PI).unwrap();
        let s = presets::random_smooth_spin(g, 11, 3, 0.6);
        for order in [StencilOrder::Second, StencilOrder::Fourth] {
            let r = reconstruct_position(&s, order).unwrap();
            let jet = SurfaceJet::new(&r, order);
            // only the Nyquist content of S escapes the discrete inverse
            assert!(jet.r_x.sub(s.field()).max_norm() < 1e-6);
        }
    }

    #[test]
    fn drift_sets_row_mean_of_ry() {
        let g = Grid2D::new(16, 16, 2.0 * PI, 2.0 * PI).unwrap();
        let s = presets::constant_spin(g, Vec3::x());
        let ry: Vec<Vec3> = (0..16).map(|j| Vec3::new(0.0, 1.0 + 0.1 * g.y(j).cos(), 0.0)).collect();
        let r = reconstruct_position_with_drift(&s, &ry, StencilOrder::Second).unwrap();
        let jet = SurfaceJet::new(&r, StencilOrder::Second);
        let means = jet.r_y.row_means();
        for j in 0..16 {
            assert!((means[j] - ry[j]).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_forms() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        let r = LinearPlusPeriodic::from_fn(g, Vec3::x(), Vec3::y(), |_, _| Vec3::zeros()).unwrap();
        let forms = fundamental_forms(&SurfaceJet::new(&r, StencilOrder::Fourth), G_FLOOR).unwrap();
        assert!(forms.e.data.iter().all(|&v| v == 1.0));
        assert!(forms.g.data.iter().all(|&v| v == 1.0));
        assert!(forms.f.max_abs() == 0.0 && forms.l.max_abs() == 0.0 && forms.n.max_abs() == 0.0);
        let (h, k) = curvatures(&forms);
        assert!(h.max_abs() == 0.0 && k.max_abs() == 0.0);
    }

    #[test]
    fn degenerate_surface_is_rejected() {
        let g = Grid2D::new(16, 16, 1.0, 1.0).unwrap();
        let r = LinearPlusPeriodic::from_fn(g, Vec3::x(), Vec3::zeros(), |_, _| Vec3::zeros()).unwrap();
        let err = fundamental_forms(&SurfaceJet::new(&r, StencilOrder::Second), G_FLOOR);
        assert!(matches!(err, Err(FlowError::DegenerateMetric { node: 0, .. })));
    }

    #[test]
    fn cylinder_curvatures() {
        let rho = 0.7;
        let g = Grid2D::new(64, 8, 2.0 * PI, 1.0).unwrap();
        let r = LinearPlusPeriodic::from_fn(g, Vec3::zeros(), Vec3::z(), |x, _| {
            Vec3::new(rho * x.cos(), rho * x.sin(), 0.0)
        })
        .unwrap();
        let forms = fundamental_forms(&SurfaceJet::new(&r, StencilOrder::Fourth), G_FLOOR).unwrap();
        let (h, k) = curvatures(&forms);
        assert!(h.data.iter().all(|v| (v.abs() - 1.0 / rho).abs() < 1e-5));
        assert!(k.max_abs() < 1e-12);
    }
}
