//! Refinement studies and oracle comparisons. The runner's checks, the
//! examples and the acceptance suite all call into these.

use serde::{Deserialize, Serialize};

use crate::field::CsvTable;

mod flows;
mod geometry;
mod spin;

pub use flows::*;
pub use geometry::*;
pub use spin::*;

/// Errors measured on a sequence of grids, with the fitted log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub error: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln h`; `None` when some
    /// error is zero (nothing to fit).
    pub slope: Option<f64>,
}

impl Refinement {
    pub fn new(n: Vec<usize>, h: Vec<f64>, error: Vec<f64>) -> Self {
        let slope = fit_slope(&h, &error);
        Refinement { n, h, error, slope }
    }

    /// Slopes between consecutive levels.
    pub fn pairwise_slopes(&self) -> Vec<f64> {
        self.h
            .windows(2)
            .zip(self.error.windows(2))
            .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            .collect()
    }

    pub fn max_error(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }

    pub fn finest_error(&self) -> f64 {
        *self.error.last().unwrap_or(&0.0)
    }

    /// `true` when the slope lies in `[lo, hi]`, or when every error is at
    /// most `zero_tol` (exact data refines to nothing).
    pub fn slope_within(&self, lo: f64, hi: f64, zero_tol: f64) -> bool {
        if self.error.iter().all(|e| *e <= zero_tol) {
            return true;
        }
        self.slope.is_some_and(|s| s >= lo && s <= hi)
    }

    /// `n,h,error,slope` with the pairwise slope into each level.
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["n", "h", "error", "slope"]);
        let ps = self.pairwise_slopes();
        for k in 0..self.n.len() {
            let s = if k == 0 { f64::NAN } else { ps[k - 1] };
            t.push(vec![self.n[k] as f64, self.h[k], self.error[k], s]);
        }
        t
    }
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn fit_slope(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() < 2 || h.len() != e.len() || e.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let h = vec![0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        let r = Refinement::new(vec![8, 16, 32], h, e);
        assert!((r.slope.unwrap() - 2.0).abs() < 1e-12);
        assert!(r.pairwise_slopes().iter().all(|s| (s - 2.0).abs() < 1e-12));
        let z = Refinement::new(vec![8, 16], vec![0.2, 0.1], vec![0.0, 0.0]);
        assert!(z.slope.is_none() && z.slope_within(1.7, 2.3, 1e-14));
    }
}
