//! Heisenberg ferromagnet sweep of a magnon against its analytic dispersion,
//! with the measured temporal and spatial orders.

use geoflow::studies::{magnon_fidelity, magnon_spatial_order, magnon_spatial_setup, magnon_temporal_order, magnon_temporal_setup, MagnonSetup};

fn main() -> geoflow::Result<()> {
    let s = MagnonSetup::default();
    println!("theta = {:.4}, k = {}, nx = {}, dt = {:e}", s.theta, s.k, s.nx, s.dt);
    println!("relative L2 error at y = {}: {:.3e}", s.y_end, magnon_fidelity(&s)?);
    let (base, dts) = magnon_temporal_setup();
    let t = magnon_temporal_order(&base, &dts)?;
    print!("temporal refinement (dt):\n{}", t.table().to_string());
    let (base, nxs) = magnon_spatial_setup();
    let x = magnon_spatial_order(&base, &nxs)?;
    print!("spatial refinement (nx):\n{}", x.table().to_string());
    println!("slopes: temporal {:?}, spatial {:?}", t.slope, x.slope);
    Ok(())
}
