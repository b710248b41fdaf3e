use std::f64::consts::PI;

use geoflow::field::{Deriv, Grid2D, Mat2, ScalarField, StencilOrder, Vec3};
use geoflow::lax::{self, Convention, PauliEmbedding};
use geoflow::presets;
use geoflow::runner::{to_json_17, RunConfig};
use geoflow::spin::triple_density;
use geoflow::studies::{fit_slope, random_e1_metric};
use geoflow::surface::{ricci_christoffel, ricci_tensor_2d, scalar_curvature_e1, G_FLOOR};
use num_complex::Complex64;
use proptest::prelude::*;

fn box_grid(n: usize) -> Grid2D {
    Grid2D::new(n, n, 2.0 * PI, 2.0 * PI).unwrap()
}

fn order() -> impl Strategy<Value = StencilOrder> {
    prop_oneof![Just(StencilOrder::Second), Just(StencilOrder::Fourth)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn slope_fit_recovers_power_laws(p in -1.0f64..6.0, c in 1e-8f64..1e3, h0 in 0.01f64..1.0) {
        let h = [h0, h0 / 2.0, h0 / 4.0, h0 / 8.0];
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(p)).collect();
        prop_assert!((fit_slope(&h, &e).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn report_floats_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = to_json_17(&serde_json::json!({ "v": v }));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back["v"].as_f64().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn pauli_embedding_squares_to_norm(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
        let v = Vec3::new(x, y, z);
        let m = PauliEmbedding::default().embed(v);
        let d = m * m - Mat2::identity() * Complex64::new(v.norm_squared(), 0.0);
        prop_assert!(d.iter().all(|e| e.norm() <= 1e-13));
    }

    #[test]
    fn stencils_are_exact_on_resolved_modes(k in 1i64..4, o in order()) {
        // A mode with k << n is differentiated with error O((k h)^order).
        let g = box_grid(64);
        let f = ScalarField::from_fn(g, |x, y| (k as f64 * x).sin() * y.cos());
        let fx = f.derivative(Deriv::X, o);
        let exact = ScalarField::from_fn(g, |x, y| k as f64 * (k as f64 * x).cos() * y.cos());
        let kh = k as f64 * g.hx();
        let bound = match o { StencilOrder::Second => kh * kh, StencilOrder::Fourth => kh.powi(4) } * k as f64;
        prop_assert!(fx.sub(&exact).max_abs() <= bound);
    }

    #[test]
    fn rotor_source_has_zero_row_means(seed in 0u64..1000, amp in 0.05f64..0.9, o in order()) {
        let (s, ry) = presets::rotor_spin(box_grid(32), seed, 3, amp);
        prop_assert!(s.max_unit_deviation() <= 1e-15);
        prop_assert!(ry.iter().all(|v| v.dot(&Vec3::z()).abs() < 1e-15));
        let src = triple_density(s.field(), o);
        prop_assert!(src.row_means().iter().all(|m| m.abs() <= 1e-12));
    }

    #[test]
    fn ricci_of_e1_metric_is_half_r_g(seed in 0u64..10_000) {
        let m = random_e1_metric(box_grid(48), seed, 2);
        let r = scalar_curvature_e1(&m, StencilOrder::Fourth, G_FLOOR).unwrap();
        let direct = ricci_christoffel(&m, StencilOrder::Fourth, G_FLOOR).unwrap();
        prop_assert!(direct.max_abs_diff(&ricci_tensor_2d(&m, &r)) <= 1e-2);
    }

    #[test]
    fn constant_spin_has_zero_lax_residual(x in -1.0f64..1.0, y in -1.0f64..1.0, l in -3.0f64..3.0, o in order()) {
        let s = presets::constant_spin(box_grid(16), Vec3::new(x, y, 0.5));
        for conv in Convention::ALL {
            let z = lax::hf_zero_curvature_residual(s.field(), Complex64::new(l, 0.0), conv, o);
            prop_assert!(lax::residual_norms(&z, 0).0 <= 1e-12);
        }
    }

    #[test]
    fn linear_profile_defect_is_roundoff(a in -1.0f64..1.0, t0 in 0.2f64..3.0, y in -2.0f64..2.0, s in 0.0f64..0.95) {
        let t = s * t0;
        let l = lax::lambda_exact(a, t0, y, t);
        let scale = (l * l / (t0 - t)).abs().max(1.0);
        prop_assert!(lax::exact_solution_defect(a, t0, y, t).abs() <= 1e-13 * scale);
    }

    #[test]
    fn refinement_keeps_final_time(level in 0u32..3, burgers in any::<bool>()) {
        let text = if burgers {
            r#"{"name":"b","flow":"burgers","grid":{"ny":32,"ly":2.0,"y0":-1.0},"params":{"dt":0.01,"steps":50,"stride":5},"initial":{"preset":"lambda-linear","a":0.0,"t0":1.0}}"#
        } else {
            r#"{"name":"r","flow":"rf-plain","grid":{"nx":16,"ny":16,"lx":6.283185307179586,"ly":6.283185307179586},"params":{"dt":0.01,"steps":50,"stride":5},"initial":{"preset":"constant","value":0.0}}"#
        };
        let c = RunConfig::from_json(text).unwrap();
        let r = c.refined(level);
        let f = 1usize << level;
        prop_assert_eq!(r.grid.ny, c.grid.ny * f);
        let t = |c: &RunConfig| c.params.dt.unwrap() * c.params.steps as f64;
        prop_assert!((t(&r) - t(&c)).abs() <= 1e-12);
        // frames are spaced O(h)
        let spacing = |c: &RunConfig| c.params.dt.unwrap() * c.params.stride as f64;
        prop_assert!((spacing(&r) * f as f64 - spacing(&c)).abs() <= 1e-12);
        r.validate().unwrap();
    }
}
