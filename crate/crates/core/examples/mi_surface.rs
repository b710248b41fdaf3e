//! Myrzakulov-I run from rotor data: constraint diagnostics, the swept
//! surface, its fundamental forms and the frame-decomposition residuals.

use geoflow::field::StencilOrder;
use geoflow::studies::{constraint_report, mi_surface_residuals, mi_trajectory, MiSetup};
use geoflow::surface::{fundamental_forms, reconstruct_position_with_drift, scalar_curvature_christoffel, SurfaceJet, G_FLOOR};

fn main() -> geoflow::Result<()> {
    let s = MiSetup::default();
    let traj = mi_trajectory(&s, 64)?;
    println!("{} frames, frame spacing {:.4e}", traj.frames.len(), traj.frame_dt);
    let c = constraint_report(&traj, s.evolve_order)?;
    println!("max ||S|-1| {:.1e}, constraint residual {:.1e}, |E-1| {:.1e}", c.max_unit_deviation, c.max_constraint_residual, c.max_e_deviation);

    let last = traj.last();
    let o = StencilOrder::Second;
    let r = reconstruct_position_with_drift(&last.s, &last.ry_mean, o)?;
    let forms = fundamental_forms(&SurfaceJet::new(&r, o), G_FLOOR)?;
    let rr = scalar_curvature_christoffel(&forms.metric(), o, G_FLOOR)?;
    println!("final area {:.6}, R in [{:.4}, {:.4}]", forms.area(), rr.min(), rr.max());

    let res = mi_surface_residuals(&traj, o)?;
    println!("r_t decomposition {:.2e}, u_x agreement {:.2e}", res.vel, res.pot);
    println!("F_t {:.2e}, G_t {:.2e}, det_t {:.2e} against central differences", res.f, res.g, res.det);
    Ok(())
}
