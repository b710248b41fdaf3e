//! Plain and normalized Ricci flow of a conformal torus metric, and the
//! coupled heat variant on a frozen flat metric.

use geoflow::field::StencilOrder;
use geoflow::studies::{heat_mode_decay, rf_run, RfSetup};

fn main() -> geoflow::Result<()> {
    let s = RfSetup::default();
    let n = rf_run(&s, true)?;
    let p = rf_run(&s, false)?;
    let (a, b) = (&p.stats[0], p.stats.last().expect("at least one record"));
    println!("plain: volume {:.6} -> {:.6}, R range [{:.3}, {:.3}] -> [{:.3}, {:.3}]", a.volume, b.volume, a.min_r, a.max_r, b.min_r, b.max_r);
    println!("plain: max |int R dA| {:.2e}", p.max_total_curvature);
    println!("normalized: volume drift per unit time {:.2e}", n.volume_drift_per_time);
    println!("heat mode cos x after t = 1: relative error {:.2e}", heat_mode_decay(64, StencilOrder::Fourth, 1e-3, 1.0)?);
    Ok(())
}
