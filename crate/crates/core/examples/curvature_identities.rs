//! 2D curvature identities on random E = 1 metrics and the round sphere.

use geoflow::field::StencilOrder;
use geoflow::studies::{identity_study, product_metric_study, sphere_metric_curvature_error};

fn main() -> geoflow::Result<()> {
    let ns = [32, 64, 128];
    for s in identity_study(0..5, &ns, StencilOrder::Second)? {
        println!(
            "seed {}: Ricci - R g/2 {:?} slope {:.3?}; K - R/2 {:?} slope {:.3?}",
            s.seed, s.ricci.error, s.ricci.slope, s.egregium.error, s.egregium.slope
        );
    }
    println!("sphere E=1, F=0, G=sin^2 x: |R - 2| = {:.2e}", sphere_metric_curvature_error(64));
    let p = product_metric_study(1, &ns, StencilOrder::Second)?;
    println!("product metric: 3D Ricci block gap {:?} slope {:.3?}, third row {:.1e}", p.block.error, p.block.slope, p.third_row_max);
    Ok(())
}
