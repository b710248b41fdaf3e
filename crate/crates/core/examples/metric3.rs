//! 3D metric assembled along an M-I run: G11, the closed-form discrepancy
//! report, and the 3D Ricci tensor when the metric is invertible.

use geoflow::field::StencilOrder;
use geoflow::studies::{mi_metric3_study, mi_trajectory, MiSetup};

fn main() -> geoflow::Result<()> {
    let traj = mi_trajectory(&MiSetup::default(), 64)?;
    let st = mi_metric3_study(&traj, StencilOrder::Second)?;
    println!("max |G11 - 1| {:.2e}", st.max_g11_deviation);
    for d in &st.discrepancy {
        println!(
            "t {:.4}: G13 gap {:.2e}, G23 gap {:.2e}, G33 gap {:.2e}, det gap {:.2e} (|det| up to {:.2e})",
            d.t, d.g13_max_gap, d.g23_max_gap, d.g33_max_gap, d.det_max_gap, d.det_max_abs
        );
    }
    match (&st.ricci_max, &st.ricci_error) {
        (Some(r), _) => println!("3D Ricci max entry {r:.3e}"),
        (_, Some(e)) => println!("3D Ricci not formed: {e}"),
        _ => {}
    }
    Ok(())
}
