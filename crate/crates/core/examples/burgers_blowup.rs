//! Spectral-parameter Burgers flow: the linear profile that blows up at t0,
//! and a sine profile whose characteristics cross at t = 1.

use geoflow::studies::{burgers_exact_profile, burgers_sine};

fn main() -> geoflow::Result<()> {
    let run = burgers_exact_profile(0.0, 1.0, 201, 1e-3)?;
    println!("lambda = y/(1 - t): relative error to t = 0.9 {:.2e}", run.exact_relative_error(0.9).unwrap_or(f64::NAN));
    println!("blow-up summary {:?}", run.summary);
    let sine = burgers_sine(256, 1e-3)?;
    println!("sin y: blow-up summary {:?}", sine.summary);
    for y in [-0.5, 0.0, 0.5] {
        println!("defect of the exact profile at y = {y}, t = 0.5: {:.1e}", geoflow::lax::exact_solution_defect(0.0, 1.0, y, 0.5));
    }
    Ok(())
}
