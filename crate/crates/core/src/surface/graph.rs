//! Surfaces written as graphs `r3 = phi(r1, r2)`.

use crate::error::{FlowError, Result};
use crate::field::{Deriv, Field, Grid2D, ScalarField, StencilOrder, Vec3, VectorField3};

/// `phi` and its stencil derivatives on the `(r1, r2)` chart (grid x = r1,
/// grid y = r2).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphJet {
    pub phi: ScalarField,
    pub p1: ScalarField,
    pub p2: ScalarField,
    pub p11: ScalarField,
    pub p12: ScalarField,
    pub p22: ScalarField,
}

impl GraphJet {
    pub fn new(phi: &ScalarField, order: StencilOrder) -> Self {
        GraphJet {
            phi: phi.clone(),
            p1: phi.dx(order),
            p2: phi.dy(order),
            p11: phi.derivative(Deriv::XX, order),
            p12: phi.derivative(Deriv::XY, order),
            p22: phi.derivative(Deriv::YY, order),
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.phi.grid
    }

    /// `sqrt(1 + phi_1^2 + phi_2^2)`.
    pub fn w(&self) -> ScalarField {
        self.p1.zip_map(&self.p2, |a, b| (1.0 + a * a + b * b).sqrt())
    }

    /// `(1+p2^2) p11 + (1+p1^2) p22 - 2 p1 p2 p12`.
    pub fn numerator(&self) -> ScalarField {
        let g = self.grid();
        let data = (0..g.len())
            .map(|k| {
                let (a, b) = (self.p1.data[k], self.p2.data[k]);
                (1.0 + b * b) * self.p11.data[k] + (1.0 + a * a) * self.p22.data[k]
                    - 2.0 * a * b * self.p12.data[k]
            })
            .collect();
        Field { grid: g, data }
    }
}

/// Trace-convention mean curvature of the graph, `numerator / W^3`.
pub fn graph_mean_curvature(graph: &GraphJet) -> ScalarField {
    graph.numerator().zip_map(&graph.w(), |n, w| n / (w * w * w))
}

/// `(-phi_1, -phi_2, 1) / W`.
pub fn inward_normal(graph: &GraphJet) -> VectorField3 {
    let w = graph.w();
    let g = graph.grid();
    let data = (0..g.len()).map(|k| Vec3::new(-graph.p1.data[k], -graph.p2.data[k], 1.0) / w.data[k]).collect();
    Field { grid: g, data }
}

/// Sign choice in the quadratic for `r1_x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
    /// Plus at the first node of each row, then the sign closest to the
    /// x-neighbour's value.
    Continuity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSlopes {
    pub r1x: ScalarField,
    pub r1y: ScalarField,
}

/// Recovers `r1_x` from `r_x^2 = 1` on the graph and `r1_y` from
/// `r3_y = r1_x r2_xx - r1_xx r2_x`, all fields sampled on one grid.
pub fn graph_slopes(
    graph: &GraphJet,
    r2x: &ScalarField,
    r2y: &ScalarField,
    r1xx: &ScalarField,
    r2xx: &ScalarField,
    branch: Branch,
) -> Result<GraphSlopes> {
    let g = graph.grid();
    for f in [r2x, r2y, r1xx, r2xx] {
        graph.phi.same_grid(f)?;
    }
    let mut r1x = vec![0.0; g.len()];
    for j in 0..g.ny {
        let mut prev: Option<f64> = None;
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let (a, b, s) = (graph.p1.data[k], graph.p2.data[k], r2x.data[k]);
            let disc = 1.0 + a * a - (1.0 + a * a + b * b) * s * s;
            if disc < 0.0 {
                return Err(FlowError::NegativeDiscriminant(k));
            }
            let (base, root) = (-a * b * s / (1.0 + a * a), disc.sqrt() / (1.0 + a * a));
            let (plus, minus) = (base + root, base - root);
            r1x[k] = match (branch, prev) {
                (Branch::Plus, _) | (Branch::Continuity, None) => plus,
                (Branch::Minus, _) => minus,
                (Branch::Continuity, Some(p)) => {
                    if (plus - p).abs() <= (minus - p).abs() {
                        plus
                    } else {
                        minus
                    }
                }
            };
            prev = Some(r1x[k]);
        }
    }
    let mut r1y = vec![0.0; g.len()];
    for k in 0..g.len() {
        let a = graph.p1.data[k];
        if a.abs() < 1e-12 {
            return Err(FlowError::VanishingSlope(k));
        }
        r1y[k] = (r1x[k] * r2xx.data[k] - r1xx.data[k] * r2x.data[k] - graph.p2.data[k] * r2y.data[k]) / a;
    }
    Ok(GraphSlopes { r1x: Field { grid: g, data: r1x }, r1y: Field { grid: g, data: r1y } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{curvatures, fundamental_forms, LinearPlusPeriodic, SurfaceJet, G_FLOOR};
    use std::f64::consts::PI;

    fn grid() -> Grid2D {
        Grid2D::new(32, 32, 2.0 * PI, 2.0 * PI).unwrap()
    }

    fn jet_of(phi: &ScalarField, order: StencilOrder) -> GraphJet {
        GraphJet::new(phi, order)
    }

    #[test]
    fn flat_graph() {
        let g = grid();
        let jet = jet_of(&ScalarField::constant(g, 3.0), StencilOrder::Second);
        assert_eq!(graph_mean_curvature(&jet).max_abs(), 0.0);
        assert!(inward_normal(&jet).data.iter().all(|n| *n == Vec3::z()));
        let r2x = ScalarField::constant(g, 0.6);
        let z = ScalarField::zeros(g);
        let s = graph_slopes(&jet, &r2x, &z, &z, &z, Branch::Plus);
        // phi_1 = 0, so r1_y is undefined but r1_x is not
        assert!(matches!(s, Err(FlowError::VanishingSlope(0))));
    }

    #[test]
    fn unit_speed_is_restored() {
        let g = grid();
        let z = ScalarField::zeros(g);
        let jet = GraphJet {
            phi: z.clone(),
            p1: ScalarField::from_fn(g, |x, _| 1.2 + 0.5 * x.cos()),
            p2: ScalarField::from_fn(g, |x, y| 0.3 * (x + y).sin()),
            p11: z.clone(),
            p12: z.clone(),
            p22: z.clone(),
        };
        let r2x = ScalarField::from_fn(g, |x, y| 0.2 * (x - y).sin());
        for branch in [Branch::Plus, Branch::Minus, Branch::Continuity] {
            let s = graph_slopes(&jet, &r2x, &z, &z, &z, branch).unwrap();
            for k in 0..g.len() {
                let (a, b) = (jet.p1.data[k], jet.p2.data[k]);
                let r3x = a * s.r1x.data[k] + b * r2x.data[k];
                let len2 = s.r1x.data[k].powi(2) + r2x.data[k].powi(2) + r3x * r3x;
                assert!((len2 - 1.0).abs() < 1e-12);
            }
        }
        let s = graph_slopes(&jet, &z, &z, &z, &z, Branch::Plus).unwrap();
        let expected = jet.p1.map(|a| 1.0 / (1.0 + a * a).sqrt());
        assert!(s.r1x.sub(&expected).max_abs() < 1e-15);
    }

    #[test]
    fn negative_discriminant() {
        let g = grid();
        let jet = jet_of(&ScalarField::from_fn(g, |x, _| x.sin()), StencilOrder::Second);
        let r2x = ScalarField::constant(g, 1.5);
        let z = ScalarField::zeros(g);
        assert!(matches!(graph_slopes(&jet, &r2x, &z, &z, &z, Branch::Plus), Err(FlowError::NegativeDiscriminant(0))));
    }

    #[test]
    fn graph_and_parametric_mean_curvature_agree() {
        let g = grid();
        let h = |x: f64, y: f64| 0.4 * x.sin() * y.cos() + 0.2 * (2.0 * y).sin();
        let phi = ScalarField::from_fn(g, h);
        let graph_h = graph_mean_curvature(&jet_of(&phi, StencilOrder::Second));
        let r = LinearPlusPeriodic::from_fn(g, Vec3::x(), Vec3::y(), |x, y| Vec3::new(0.0, 0.0, h(x, y))).unwrap();
        let forms = fundamental_forms(&SurfaceJet::new(&r, StencilOrder::Second), G_FLOOR).unwrap();
        let (ph, _) = curvatures(&forms);
        // r_x ^ r_y is the upward normal, the same orientation as the graph normal
        assert!(graph_h.sub(&ph).max_abs() < 1e-12);
        assert!(forms.normal.sub(&inward_normal(&jet_of(&phi, StencilOrder::Second))).max_norm() < 1e-14);
    }
}
