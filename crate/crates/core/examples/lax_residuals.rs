//! Zero-curvature residuals of the ferromagnet and M-I Lax pairs under
//! refinement, for both spectral-parameter conventions.

use geoflow::field::StencilOrder;
use geoflow::studies::{consistent_convention, hf_lax_study, mi_lax_study, LaxStudy, MiSetup};

fn show(name: &str, studies: &[LaxStudy]) {
    for s in studies {
        println!("{name} lambda {} {:?}: {:?} slope {:.3?}", s.lambda, s.convention, s.refinement.error, s.refinement.slope);
    }
    println!("{name}: consistent convention {:?}", consistent_convention(studies));
}

fn main() -> geoflow::Result<()> {
    let lambdas = [0.5, 1.0, 2.0];
    show("HF", &hf_lax_study(&[16, 32, 64], &lambdas, StencilOrder::Fourth)?);
    let ms = MiSetup { check_order: StencilOrder::Fourth, frame_exponent: 2, frame_factor: 0.6, ..MiSetup::default() };
    show("M-I", &mi_lax_study(&ms, &[32, 64], &lambdas)?);
    Ok(())
}
