//! The Dirichlet kernel density estimator
//! `f̂_{n,b}(s) = (1/n) Σ_i κ_{s,b}(X_i)`.
//!
//! Evaluation is defined for every `s ∈ S_d`, including boundary points,
//! where the kernel stays well defined through the `0⁰ = 1` convention.
//! The asymptotic guarantees (bias, variance, normality) only cover
//! interior points. The estimator ignores the time order of the data, and
//! it is not renormalized in `s`: its integral over the simplex is close to,
//! but not exactly, one.

use rayon::prelude::*;

use crate::error::{KdeError, Result};
use crate::kernel::{check_bandwidth, log_parts, LogDensity};
use crate::simplex::{CompositionSeries, SimplexPoint};

/// A fitted estimator. Immutable once built.
#[derive(Debug, Clone)]
pub struct KdeModel {
    data: CompositionSeries,
    bandwidth: f64,
    // (ln x_1, …, ln x_d, ln residual) for each observation, row-major
    log_data: Vec<f64>,
}

impl KdeModel {
    /// Fits the estimator. Only the log-coordinates of the observations
    /// are cached.
    pub fn fit(data: CompositionSeries, bandwidth: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(KdeError::EmptyData);
        }
        check_bandwidth(bandwidth)?;
        let log_data = data.points().iter().flat_map(log_parts).collect();
        Ok(KdeModel {
            data,
            bandwidth,
            log_data,
        })
    }

    pub fn data(&self) -> &CompositionSeries {
        &self.data
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Same observations, different bandwidth.
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(KdeModel {
            data: self.data.clone(),
            bandwidth,
            log_data: self.log_data.clone(),
        })
    }

    fn log_row(&self, i: usize) -> &[f64] {
        let w = self.dim() + 1;
        &self.log_data[i * w..(i + 1) * w]
    }

    fn kernel(&self, s: &SimplexPoint) -> Result<LogDensity> {
        s.require_dim(self.dim())?;
        Ok(LogDensity::for_kernel(s, self.bandwidth))
    }

    /// Sum of `κ_{s,b}(X_j)` over all `j`, skipping `skip` if given.
    fn kernel_sum(&self, kernel: &LogDensity, skip: Option<usize>) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n() {
            if Some(j) != skip {
                acc += kernel.eval(self.log_row(j));
            }
        }
        acc
    }

    /// `f̂_{n,b}(s)`.
    pub fn evaluate(&self, s: &SimplexPoint) -> Result<f64> {
        let kernel = self.kernel(s)?;
        Ok(self.kernel_sum(&kernel, None) / self.n() as f64)
    }

    /// [`evaluate`](Self::evaluate) over many points, in parallel. Results
    /// are bitwise identical to the sequential loop.
    pub fn evaluate_batch(&self, points: &[SimplexPoint]) -> Result<Vec<f64>> {
        points.par_iter().map(|s| self.evaluate(s)).collect()
    }

    /// Leave-one-out estimate `f̂^{(−i)}(s)`: the estimator built from the
    /// other `n − 1` observations. `i` is zero-based.
    pub fn evaluate_loo(&self, s: &SimplexPoint, i: usize) -> Result<f64> {
        let n = self.n();
        if n < 2 {
            return Err(KdeError::SingleObservation);
        }
        if i >= n {
            return Err(KdeError::IndexOutOfRange { index: i, len: n });
        }
        let kernel = self.kernel(s)?;
        Ok(self.kernel_sum(&kernel, Some(i)) / (n - 1) as f64)
    }

    /// `f̂^{(−i)}(X_i)`, the leave-one-out estimate at the held-out point.
    pub fn loo_at_observation(&self, i: usize) -> Result<f64> {
        let point = self
            .data
            .get(i)
            .ok_or(KdeError::IndexOutOfRange { index: i, len: self.n() })?;
        self.evaluate_loo(point, i)
    }
}
