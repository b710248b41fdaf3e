//! Explicit Runge-Kutta steppers shared by every flow.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{Field, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
    Heun,
}

impl Integrator {
    pub fn order(self) -> usize {
        match self {
            Integrator::Rk4 => 4,
            Integrator::Heun => 2,
        }
    }
}

/// Anything that can be combined linearly by an explicit stepper.
pub trait OdeState: Clone {
    /// `self + s * k`
    fn axpy(&self, s: f64, k: &Self) -> Self;
}

impl<T: Node> OdeState for Field<T> {
    fn axpy(&self, s: f64, k: &Self) -> Self {
        Field::axpy(self, s, k)
    }
}

impl OdeState for Vec<f64> {
    fn axpy(&self, s: f64, k: &Self) -> Self {
        self.iter().zip(k).map(|(a, b)| a + s * b).collect()
    }
}

impl<A: OdeState, B: OdeState> OdeState for (A, B) {
    fn axpy(&self, s: f64, k: &Self) -> Self {
        (self.0.axpy(s, &k.0), self.1.axpy(s, &k.1))
    }
}

/// One step of size `dt` from time `t`.
pub fn step<S: OdeState>(
    method: Integrator,
    t: f64,
    y: &S,
    dt: f64,
    mut rhs: impl FnMut(f64, &S) -> Result<S>,
) -> Result<S> {
    match method {
        Integrator::Rk4 => {
            let k1 = rhs(t, y)?;
            let k2 = rhs(t + 0.5 * dt, &y.axpy(0.5 * dt, &k1))?;
            let k3 = rhs(t + 0.5 * dt, &y.axpy(0.5 * dt, &k2))?;
            let k4 = rhs(t + dt, &y.axpy(dt, &k3))?;
            Ok(y.axpy(dt / 6.0, &k1).axpy(dt / 3.0, &k2).axpy(dt / 3.0, &k3).axpy(dt / 6.0, &k4))
        }
        Integrator::Heun => {
            let k1 = rhs(t, y)?;
            let k2 = rhs(t + dt, &y.axpy(dt, &k1))?;
            Ok(y.axpy(0.5 * dt, &k1).axpy(0.5 * dt, &k2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_error(method: Integrator, n: usize) -> f64 {
        let dt = 1.0 / n as f64;
        let mut y = vec![1.0];
        for k in 0..n {
            y = step(method, k as f64 * dt, &y, dt, |_, v: &Vec<f64>| Ok(vec![-v[0]])).unwrap();
        }
        (y[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn observed_orders() {
        for (m, p) in [(Integrator::Rk4, 4.0), (Integrator::Heun, 2.0)] {
            let slope = (decay_error(m, 20) / decay_error(m, 40)).log2();
            assert!((slope - p).abs() < 0.15, "{m:?}: {slope}");
        }
    }

    #[test]
    fn time_dependent_rhs_sees_stage_times() {
        // y' = t, y(0) = 0 -> y(1) = 1/2 exactly for both schemes
        for m in [Integrator::Rk4, Integrator::Heun] {
            let mut y = vec![0.0];
            for k in 0..4 {
                y = step(m, k as f64 * 0.25, &y, 0.25, |t, _| Ok(vec![t])).unwrap();
            }
            assert!((y[0] - 0.5).abs() < 1e-15);
        }
    }
}
