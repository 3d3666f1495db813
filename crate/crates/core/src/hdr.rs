//! Highest-density-region thresholds by self-normalized Monte Carlo.
//!
//! For `M` uniform points `s_m` on `S_d` with weights `w_m = f̂(s_m)`, the
//! threshold is the largest value `t` among the `w_m` such that the weights
//! of all points with `w_m ≥ t` make up at least `level` of the total.
//! Dividing by the total weight, rather than assuming `∫ f̂ = 1`, makes the
//! "fraction of its mass" reading exact for the estimator at hand.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KdeError, Result};
use crate::kde::KdeModel;
use crate::simplex::{sample_uniform, SimplexPoint};
use crate::special::{check_open_unit, pairwise_sum};

/// Smallest admissible Monte Carlo size.
pub const MIN_MC_POINTS: usize = 100;
pub const DEFAULT_MC_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdrResult {
    pub threshold: f64,
    pub level: f64,
    pub mc_points: usize,
    /// Monte Carlo standard error of the enclosed mass fraction at the
    /// threshold.
    pub se: f64,
}

/// Threshold of the `level` HDR of a fitted estimator.
pub fn hdr_threshold<R: Rng + ?Sized>(
    model: &KdeModel,
    level: f64,
    mc_points: usize,
    rng: &mut R,
) -> Result<HdrResult> {
    hdr_threshold_fn(model.dim(), |s| model.evaluate(s), level, mc_points, rng)
}

/// [`hdr_threshold`] for any nonnegative density on `S_d`. Points are drawn
/// sequentially from `rng`; the density is evaluated in parallel.
pub fn hdr_threshold_fn<F, R>(
    d: usize,
    density: F,
    level: f64,
    mc_points: usize,
    rng: &mut R,
) -> Result<HdrResult>
where
    F: Fn(&SimplexPoint) -> Result<f64> + Sync,
    R: Rng + ?Sized,
{
    check_open_unit(level)?;
    if mc_points < MIN_MC_POINTS {
        return Err(KdeError::InsufficientSamples {
            min: MIN_MC_POINTS,
            got: mc_points,
        });
    }
    let points = (0..mc_points)
        .map(|_| sample_uniform(d, rng))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = points.par_iter().map(&density).collect::<Result<_>>()?;
    threshold_from_weights(weights, level, mc_points)
}

/// Discrete crossing on an arbitrary weight sample.
pub fn threshold_from_weights(mut weights: Vec<f64>, level: f64, mc_points: usize) -> Result<HdrResult> {
    check_open_unit(level)?;
    if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(KdeError::NonFinite { index: i });
    }
    weights.sort_by(|a, b| b.total_cmp(a));
    let total = pairwise_sum(&weights);
    if weights.is_empty() || total <= 0.0 {
        return Ok(HdrResult {
            threshold: 0.0,
            level,
            mc_points,
            se: 0.0,
        });
    }
    let target = level * total;
    let mut acc = 0.0;
    let mut threshold = *weights.last().unwrap();
    for &w in &weights {
        acc += w;
        if acc >= target {
            threshold = w;
            break;
        }
    }
    // binomial error sqrt(p (1 − p) / M_eff) with the Kish effective sample
    // size M_eff = (Σ w)² / Σ w² of the weighted sample
    let squares: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let m_eff = total * total / pairwise_sum(&squares);
    let se = (level * (1.0 - level) / m_eff).sqrt();
    Ok(HdrResult {
        threshold,
        level,
        mc_points,
        se,
    })
}

/// Whether `s` lies in the super-level set `{f̂ ≥ threshold}`.
pub fn hdr_membership(model: &KdeModel, threshold: f64, s: &SimplexPoint) -> Result<bool> {
    Ok(model.evaluate(s)? >= threshold)
}
