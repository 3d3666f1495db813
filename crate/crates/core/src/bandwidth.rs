//! Bandwidth selection by Monte Carlo least-squares cross-validation.
//!
//! ```text
//! LSCV_MC(b) = 1/(M d!) Σ_m f̂_b(S̃_m)² − 2/M Σ_m f̂_b^{(−I_m)}(X_{I_m})
//! ```
//!
//! with `S̃_1..S̃_M` uniform on `S_d` and `I_1..I_M` uniform on the data
//! indices. The first term estimates `∫ f̂²` (mean square times
//! `Vol(S_d) = 1/d!`), the second estimates `2 ∫ f̂ f` by leave-one-out.
//!
//! Random-number protocol: a design draws all `M` uniform points first
//! (each consuming `d + 1` uniforms, see
//! [`sample_uniform`](crate::simplex::sample_uniform)), then all `M`
//! indices. [`select_bandwidth`] draws one design from the
//! `LSCV_DESIGN` substream of the seed and reuses it for every grid
//! point, so the criterion curve uses common random numbers and adding grid
//! points never changes existing values.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KdeError, Result};
use crate::kde::KdeModel;
use crate::kernel::check_bandwidth;
use crate::rng::{purpose, substream};
use crate::simplex::{factorial, sample_uniform, CompositionSeries, SimplexPoint};
use crate::special::pairwise_sum;

/// Settings of the cross-validation search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LscvConfig {
    /// Monte Carlo size `M`.
    pub mc_points: usize,
    /// Candidate bandwidths, strictly ascending.
    pub grid: Vec<f64>,
    pub seed: u64,
}

impl LscvConfig {
    pub const DEFAULT_MC_POINTS: usize = 1000;

    pub fn new(mc_points: usize, grid: Vec<f64>, seed: u64) -> Result<Self> {
        let cfg = LscvConfig {
            mc_points,
            grid,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `M = 1000` over the default grid `0.01, 0.02, …, 0.50`.
    pub fn with_seed(seed: u64) -> Self {
        LscvConfig {
            mc_points: Self::DEFAULT_MC_POINTS,
            grid: default_grid(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_points < 1 {
            return Err(KdeError::InvalidConfig("M must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(KdeError::InvalidConfig("bandwidth grid is empty".into()));
        }
        for &b in &self.grid {
            check_bandwidth(b)?;
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KdeError::InvalidConfig(
                "bandwidth grid must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// `lo, lo + step, …` up to `hi` (inclusive within rounding), computed as
/// `lo + k · step` to avoid accumulated drift.
pub fn bandwidth_grid(lo: f64, step: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && step > 0.0 && hi >= lo) {
        return Err(KdeError::InvalidConfig(format!(
            "invalid grid {lo}:{step}:{hi}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|k| {
            let b = lo + k as f64 * step;
            // snap to 12 significant digits so 0.01 * 7 prints as 0.07
            (b * 1e12).round() / 1e12
        })
        .collect())
}

/// The default grid `0.01:0.01:0.50` (50 bandwidths).
pub fn default_grid() -> Vec<f64> {
    bandwidth_grid(0.01, 0.01, 0.50).expect("valid default grid")
}

/// The random inputs of one criterion evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LscvDesign {
    pub points: Vec<SimplexPoint>,
    /// Zero-based data indices `I_m`.
    pub indices: Vec<usize>,
}

impl LscvDesign {
    /// Draws `m` uniform points, then `m` indices in `0..n`.
    pub fn draw<R: Rng + ?Sized>(d: usize, n: usize, m: usize, rng: &mut R) -> Result<Self> {
        let points = (0..m)
            .map(|_| sample_uniform(d, rng))
            .collect::<Result<Vec<_>>>()?;
        let indices = (0..m).map(|_| rng.random_range(0..n)).collect();
        Ok(LscvDesign { points, indices })
    }

    /// A design whose index draws are forced to `0..n` (one per
    /// observation), turning the second term into the classical
    /// leave-one-out sum.
    pub fn with_all_indices(points: Vec<SimplexPoint>, n: usize) -> Self {
        LscvDesign {
            points,
            indices: (0..n).collect(),
        }
    }
}

/// The two terms of the criterion, kept apart for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LscvTerms {
    /// Estimate of `∫ f̂²`.
    pub integral_sq: f64,
    /// Estimate of `2 ∫ f̂ f`.
    pub cross: f64,
}

impl LscvTerms {
    pub fn value(&self) -> f64 {
        self.integral_sq - self.cross
    }
}

fn require_pairs(data: &CompositionSeries) -> Result<()> {
    if data.len() < 2 {
        Err(KdeError::SingleObservation)
    } else {
        Ok(())
    }
}

/// Evaluates both criterion terms at bandwidth `b` on a fixed design.
pub fn lscv_terms(data: &CompositionSeries, b: f64, design: &LscvDesign) -> Result<LscvTerms> {
    require_pairs(data)?;
    check_bandwidth(b)?;
    let model = KdeModel::fit(data.clone(), b)?;
    lscv_terms_for_model(&model, design)
}

fn lscv_terms_for_model(model: &KdeModel, design: &LscvDesign) -> Result<LscvTerms> {
    let d = model.dim();
    let squares: Vec<f64> = design
        .points
        .iter()
        .map(|p| model.evaluate(p).map(|v| v * v))
        .collect::<Result<_>>()?;
    let m_points = squares.len().max(1) as f64;
    let integral_sq = pairwise_sum(&squares) / (m_points * factorial(d));

    // each distinct index needs one leave-one-out evaluation
    let mut cache: BTreeMap<usize, f64> = BTreeMap::new();
    let mut loo = Vec::with_capacity(design.indices.len());
    for &i in &design.indices {
        let v = match cache.get(&i) {
            Some(v) => *v,
            None => {
                let v = model.loo_at_observation(i)?;
                cache.insert(i, v);
                v
            }
        };
        loo.push(v);
    }
    let m_index = loo.len().max(1) as f64;
    let cross = 2.0 * pairwise_sum(&loo) / m_index;
    Ok(LscvTerms { integral_sq, cross })
}

/// `LSCV_MC(b)`, drawing a fresh design of size `cfg.mc_points` from `rng`.
pub fn lscv_mc<R: Rng + ?Sized>(
    data: &CompositionSeries,
    b: f64,
    cfg: &LscvConfig,
    rng: &mut R,
) -> Result<f64> {
    require_pairs(data)?;
    check_bandwidth(b)?;
    let design = LscvDesign::draw(data.dim(), data.len(), cfg.mc_points, rng)?;
    Ok(lscv_terms(data, b, &design)?.value())
}

/// Result of a grid search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSelection {
    pub b_star: f64,
    /// `(b, LSCV_MC(b))` for every grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Grid argmin of the criterion; ties go to the smaller bandwidth.
pub fn select_bandwidth(data: &CompositionSeries, cfg: &LscvConfig) -> Result<BandwidthSelection> {
    cfg.validate()?;
    require_pairs(data)?;
    let mut rng = substream(cfg.seed, purpose::LSCV_DESIGN);
    let design = LscvDesign::draw(data.dim(), data.len(), cfg.mc_points, &mut rng)?;
    select_bandwidth_with_design(data, &cfg.grid, &design)
}

/// [`select_bandwidth`] on an explicit design.
pub fn select_bandwidth_with_design(
    data: &CompositionSeries,
    grid: &[f64],
    design: &LscvDesign,
) -> Result<BandwidthSelection> {
    require_pairs(data)?;
    let base = KdeModel::fit(data.clone(), grid.first().copied().unwrap_or(1.0))?;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&b| {
            let model = base.with_bandwidth(b)?;
            lscv_terms_for_model(&model, design).map(|t| t.value())
        })
        .collect::<Result<_>>()?;
    let curve: Vec<(f64, f64)> = grid.iter().copied().zip(values).collect();
    let b_star = argmin_smallest(&curve)
        .ok_or_else(|| KdeError::InvalidConfig("bandwidth grid is empty".into()))?;
    Ok(BandwidthSelection { b_star, curve })
}

// first minimum wins: the grid is ascending, so ties go to the smaller b
fn argmin_smallest(curve: &[(f64, f64)]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &(b, v) in curve {
        match best {
            Some((_, bv)) if !(v < bv) => {}
            _ if v.is_nan() => {}
            _ => best = Some((b, v)),
        }
    }
    best.map(|(b, _)| b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn two_points() -> CompositionSeries {
        CompositionSeries::from_rows([[0.3], [0.7]]).unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[6], 0.07);
        assert_eq!(g[49], 0.5);
        assert!(bandwidth_grid(0.1, 0.0, 0.2).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LscvConfig::new(0, vec![0.1], 1).is_err());
        assert!(LscvConfig::new(10, vec![], 1).is_err());
        assert!(LscvConfig::new(10, vec![0.2, 0.1], 1).is_err());
        assert!(LscvConfig::new(10, vec![-0.1, 0.1], 1).is_err());
        assert!(LscvConfig::new(10, vec![0.1, 0.2], 1).is_ok());
    }

    // straight-line reimplementation of the criterion with the same
    // random-number protocol, sharing nothing with the estimator code
    fn reference_lscv(rows: &[f64], b: f64, m: usize, seed: u64) -> f64 {
        use crate::special::ln_gamma;
        let n = rows.len();
        let kern = |s: f64, x: f64| -> f64 {
            let (a1, a2) = (s / b + 1.0, (1.0 - s) / b + 1.0);
            let ln = ln_gamma(a1 + a2) - ln_gamma(a1) - ln_gamma(a2)
                + (a1 - 1.0) * x.ln()
                + (a2 - 1.0) * (1.0 - x).ln();
            ln.exp()
        };
        let fhat = |s: f64| rows.iter().map(|&x| kern(s, x)).sum::<f64>() / n as f64;
        let mut rng = seeded(seed);
        let mut pts = vec![];
        for _ in 0..m {
            let e1 = -(1.0 - rng.random::<f64>()).ln();
            let e2 = -(1.0 - rng.random::<f64>()).ln();
            pts.push(e1 / (e1 + e2));
        }
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
        let first: f64 = pts.iter().map(|&s| fhat(s).powi(2)).sum::<f64>() / m as f64;
        let second: f64 = idx
            .iter()
            .map(|&i| {
                (0..n).filter(|&j| j != i).map(|j| kern(rows[i], rows[j])).sum::<f64>()
                    / (n - 1) as f64
            })
            .sum::<f64>()
            / m as f64;
        first - 2.0 * second
    }

    #[test]
    fn matches_straight_line_reference() {
        let cfg = LscvConfig::new(4, vec![0.2], 0).unwrap();
        let got = lscv_mc(&two_points(), 0.2, &cfg, &mut seeded(17)).unwrap();
        let expected = reference_lscv(&[0.3, 0.7], 0.2, 4, 17);
        assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));

        let mut rng = seeded(5);
        let rows: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 0.9 + 0.05).collect();
        let data = CompositionSeries::from_rows(rows.iter().map(|&x| [x])).unwrap();
        let cfg = LscvConfig::new(200, vec![0.05], 0).unwrap();
        let got = lscv_mc(&data, 0.05, &cfg, &mut seeded(23)).unwrap();
        let expected = reference_lscv(&rows, 0.05, 200, 23);
        assert!((got - expected).abs() <= 1e-10 * expected.abs().max(1.0));
    }

    #[test]
    fn forced_indices_give_classical_loo_term() {
        let mut rng = seeded(3);
        let data = CompositionSeries::new(
            (0..25).map(|_| sample_uniform(2, &mut rng).unwrap()).collect(),
        )
        .unwrap();
        let n = data.len();
        let design = LscvDesign::with_all_indices(vec![], n);
        let b = 0.1;
        let terms = lscv_terms(&data, b, &design).unwrap();
        let model = KdeModel::fit(data.clone(), b).unwrap();
        let classical: f64 =
            2.0 / n as f64 * (0..n).map(|i| model.loo_at_observation(i).unwrap()).sum::<f64>();
        assert!((terms.cross - classical).abs() < 1e-12 * classical);
    }

    #[test]
    fn guards() {
        let one = CompositionSeries::from_rows([[0.3]]).unwrap();
        let cfg = LscvConfig::new(4, vec![0.2], 0).unwrap();
        assert_eq!(
            lscv_mc(&one, 0.2, &cfg, &mut seeded(1)),
            Err(KdeError::SingleObservation)
        );
        assert!(matches!(
            lscv_mc(&two_points(), 0.0, &cfg, &mut seeded(1)),
            Err(KdeError::NonPositiveBandwidth(_))
        ));
    }

    #[test]
    fn singleton_grid_and_ties() {
        let cfg = LscvConfig::new(50, vec![0.1], 9).unwrap();
        assert_eq!(select_bandwidth(&two_points(), &cfg).unwrap().b_star, 0.1);
        let curve = [(0.1, 1.0), (0.2, -3.0), (0.3, -3.0), (0.4, 0.0)];
        assert_eq!(argmin_smallest(&curve), Some(0.2));
    }

    #[test]
    fn curve_matches_single_evaluations_and_is_deterministic() {
        let mut rng = seeded(4);
        let data = CompositionSeries::new(
            (0..40).map(|_| sample_uniform(2, &mut rng).unwrap()).collect(),
        )
        .unwrap();
        let cfg = LscvConfig::new(100, vec![0.05, 0.1, 0.2], 77).unwrap();
        let sel = select_bandwidth(&data, &cfg).unwrap();
        for &(b, v) in &sel.curve {
            let mut rng = substream(77, purpose::LSCV_DESIGN);
            assert_eq!(v, lscv_mc(&data, b, &cfg, &mut rng).unwrap());
        }
        assert_eq!(sel, select_bandwidth(&data, &cfg).unwrap());

        // adding grid points leaves existing values untouched
        let wider = LscvConfig::new(100, vec![0.02, 0.05, 0.1, 0.15, 0.2], 77).unwrap();
        let sel2 = select_bandwidth(&data, &wider).unwrap();
        for (b, v) in &sel.curve {
            assert!(sel2.curve.contains(&(*b, *v)));
        }
    }

    #[test]
    fn criterion_variance_shrinks_with_m() {
        let mut rng = seeded(12);
        let data = CompositionSeries::new(
            (0..60).map(|_| sample_uniform(2, &mut rng).unwrap()).collect(),
        )
        .unwrap();
        let spread = |m: usize| -> f64 {
            let cfg = LscvConfig::new(m, vec![0.1], 0).unwrap();
            let vals: Vec<f64> = (0..20)
                .map(|k| lscv_mc(&data, 0.1, &cfg, &mut substream(1000 + k, 0)).unwrap())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
        };
        let (v250, v1000, v4000) = (spread(250), spread(1000), spread(4000));
        // 1/M scaling: each fourfold increase divides the variance by ~4
        for r in [v250 / v1000, v1000 / v4000] {
            assert!((1.5..10.0).contains(&r), "{v250} {v1000} {v4000}");
        }
    }
}
