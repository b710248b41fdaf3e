//! Mean-curvature flow: the shrinking sphere as a graph, and the dissipation
//! laws on parametric runs.

use geoflow::studies::{area_history, dissipation_study, shrinking_sphere, DissipationSetup, SphereSetup};

fn main() -> geoflow::Result<()> {
    let sphere = shrinking_sphere(&SphereSetup::default())?;
    for k in (0..sphere.t.len()).step_by(8) {
        println!("t {:.4}  rho {:.8}  exact {:.8}", sphere.t[k], sphere.rho[k], sphere.rho_exact[k]);
    }
    println!("max relative radius error {:.2e}", sphere.max_relative_error);

    let d = dissipation_study(&DissipationSetup::default(), &[16, 32, 64])?;
    for (name, r) in [
        ("d/dt ln A", &d.log_area_rate),
        ("mean curvature rate", &d.mean_curvature_rate),
        ("d2/dt2 ln A", &d.log_area_accel),
        ("area density accel", &d.area_density_accel),
    ] {
        println!("{name:<22} {:?} slope {:.3?}", r.error, r.slope);
    }
    let (areas, monotone) = area_history(&DissipationSetup { frame_factor: 2.0, ..DissipationSetup::default() }, 32, 20)?;
    println!("area {:.6} -> {:.6}, monotone {monotone}", areas[0], areas[areas.len() - 1]);
    Ok(())
}
