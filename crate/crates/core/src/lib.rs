//! Numerical laboratory for integrable geometric flows: spin flows and the
//! surfaces they sweep, graph and parametric mean-curvature flow, 2D Ricci
//! flows, Lax zero-curvature residuals and the spectral-parameter blow-up.

pub mod error;
pub mod field;
pub mod integrate;
pub mod lax;
pub mod mcf;
pub mod metric;
pub mod presets;
pub mod runner;
pub mod spin;
pub mod studies;
pub mod surface;
pub mod tensor;

pub use error::{FlowError, Result};
