//! Closed-form large-sample quantities of the estimator.
//!
//! For an interior point `s`, a target `f` that is twice continuously
//! differentiable, and a bandwidth `b → 0` with `n b^{d/2} → ∞`:
//!
//! ```text
//! MSE[f̂(s)] = b² g(s)² + n⁻¹ b^{−d/2} ψ(s) f(s) + o(b²) + o(n⁻¹ b^{−d/2})
//! g(s)      = Σ_i (1 − (d+1) s_i) ∂_i f(s) + ½ Σ_{i,j} s_i (1{i=j} − s_j) ∂_ij f(s)
//! ψ(s)      = (4π)^{−d/2} / sqrt((1 − ‖s‖₁) Π_i s_i)
//! ```
//!
//! and, when additionally `n^{1/2} b^{d/4 + 1/2} → 0`,
//! `n^{1/2} b^{d/4} (f̂(s) − f(s)) → N(0, ψ(s) f(s))`, for iid samples and
//! for strongly mixing sequences whose mixing coefficients decay fast
//! enough. The decay condition concerns the data-generating process and
//! cannot be checked from a sample.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{KdeError, Result};
use crate::kde::KdeModel;
use crate::kernel::DirichletParams;
use crate::simplex::SimplexPoint;
use crate::special::{ln_gamma, normal_quantile};

/// Variance constant `ψ(s)`.
pub fn psi(s: &SimplexPoint) -> Result<f64> {
    s.require_interior()?;
    let d = s.dim() as f64;
    let prod: f64 = s.coords().iter().product::<f64>() * (1.0 - s.l1_norm());
    Ok((4.0 * std::f64::consts::PI).powf(-d / 2.0) / prod.sqrt())
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type MatrixFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;

/// An analytic density on `S_d` with its gradient and Hessian with respect
/// to the `d` free coordinates.
#[derive(Clone)]
pub struct DensityModel {
    d: usize,
    value: Arc<ValueFn>,
    gradient: Arc<VectorFn>,
    hessian: Arc<MatrixFn>,
}

impl fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityModel").field("d", &self.d).finish_non_exhaustive()
    }
}

impl DensityModel {
    pub fn new<V, G, H>(d: usize, value: V, gradient: G, hessian: H) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        H: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        DensityModel {
            d,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
        }
    }

    /// The Dirichlet(u, v) density with closed-form derivatives.
    pub fn dirichlet(params: &DirichletParams) -> Self {
        let d = params.dim();
        let log_norm =
            ln_gamma(params.total()) - params.all_shapes().map(ln_gamma).sum::<f64>();
        let exps: Vec<f64> = params.all_shapes().map(|a| a - 1.0).collect();
        let value = {
            let exps = exps.clone();
            move |s: &[f64]| dirichlet_value(log_norm, &exps, s)
        };
        let gradient = {
            let exps = exps.clone();
            move |s: &[f64]| {
                let f = dirichlet_value(log_norm, &exps, s);
                log_gradient(&exps, s).into_iter().map(|g| f * g).collect()
            }
        };
        let hessian = move |s: &[f64]| {
            let f = dirichlet_value(log_norm, &exps, s);
            let lg = log_gradient(&exps, s);
            let r = 1.0 - s.iter().sum::<f64>();
            let tail = exps[d] / (r * r);
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            let diag = if i == j { exps[i] / (s[i] * s[i]) } else { 0.0 };
                            f * (lg[i] * lg[j] - diag - tail)
                        })
                        .collect()
                })
                .collect()
        };
        DensityModel::new(d, value, gradient, hessian)
    }

    /// The constant density `d!` of the uniform distribution on `S_d`.
    pub fn uniform(d: usize) -> Self {
        let c = crate::simplex::factorial(d);
        DensityModel::new(
            d,
            move |_| c,
            move |_| vec![0.0; d],
            move |_| vec![vec![0.0; d]; d],
        )
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        (self.value)(s)
    }

    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        (self.gradient)(s)
    }

    pub fn hessian(&self, s: &[f64]) -> Vec<Vec<f64>> {
        (self.hessian)(s)
    }
}

fn dirichlet_value(log_norm: f64, exps: &[f64], s: &[f64]) -> f64 {
    let r = 1.0 - s.iter().sum::<f64>();
    let mut acc = log_norm;
    for (e, x) in exps.iter().zip(s.iter().chain(std::iter::once(&r))) {
        if *e != 0.0 {
            acc += e * x.ln();
        }
    }
    acc.exp()
}

// ∂_i ln f = a_i / s_i − a_r / r
fn log_gradient(exps: &[f64], s: &[f64]) -> Vec<f64> {
    let d = s.len();
    let r = 1.0 - s.iter().sum::<f64>();
    (0..d).map(|i| exps[i] / s[i] - exps[d] / r).collect()
}

/// Bias functional `g(s)`.
pub fn bias_functional_g(f: &DensityModel, s: &SimplexPoint) -> Result<f64> {
    s.require_interior()?;
    s.require_dim(f.dim())?;
    let x = s.coords();
    let d = x.len();
    let grad = f.gradient(x);
    let hess = f.hessian(x);
    let first: f64 = (0..d)
        .map(|i| (1.0 - (d as f64 + 1.0) * x[i]) * grad[i])
        .sum();
    let mut second = 0.0;
    for i in 0..d {
        for j in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            second += x[i] * (delta - x[j]) * hess[i][j];
        }
    }
    Ok(first + 0.5 * second)
}

/// Leading terms of the pointwise mean squared error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseExpansion {
    /// `b² g(s)²`
    pub bias_term: f64,
    /// `n⁻¹ b^{−d/2} ψ(s) f(s)`
    pub variance_term: f64,
    pub total: f64,
}

pub fn mse_expansion(f: &DensityModel, s: &SimplexPoint, n: usize, b: f64) -> Result<MseExpansion> {
    crate::kernel::check_bandwidth(b)?;
    if n == 0 {
        return Err(KdeError::EmptyData);
    }
    let g = bias_functional_g(f, s)?;
    let d = s.dim() as f64;
    let bias_term = b * b * g * g;
    let variance_term = b.powf(-d / 2.0) * psi(s)? * f.value(s.coords()) / n as f64;
    Ok(MseExpansion {
        bias_term,
        variance_term,
        total: bias_term + variance_term,
    })
}

/// Plug-in `(1 − conf_alpha)` interval
/// `f̂ ± Φ⁻¹(1 − conf_alpha/2) sqrt(ψ(s) f̂) n^{−1/2} b^{−d/4}`.
///
/// The lower end is not clipped at zero.
pub fn confidence_interval(
    fhat: f64,
    s: &SimplexPoint,
    n: usize,
    b: f64,
    conf_alpha: f64,
) -> Result<(f64, f64)> {
    if !(conf_alpha > 0.0 && conf_alpha <= 1.0) {
        return Err(KdeError::InvalidAlpha(conf_alpha));
    }
    if !(fhat >= 0.0) {
        return Err(KdeError::InvalidConfig(format!(
            "plug-in estimate must be nonnegative, got {fhat}"
        )));
    }
    if n == 0 {
        return Err(KdeError::EmptyData);
    }
    crate::kernel::check_bandwidth(b)?;
    let d = s.dim() as f64;
    let z = normal_quantile(1.0 - conf_alpha / 2.0);
    let half = z * (psi(s)? * fhat).sqrt() / (n as f64).sqrt() * b.powf(-d / 4.0);
    Ok((fhat - half, fhat + half))
}

/// Finite-sample proxies for the bandwidth regime `b → 0`,
/// `n b^{d/2} → ∞`, `n^{1/2} b^{d/4 + 1/2} → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeThresholds {
    /// Minimum acceptable `n b^{d/2}`.
    pub variance_min: f64,
    /// Maximum acceptable `n^{1/2} b^{d/4 + 1/2}`.
    pub bias_max: f64,
    /// Maximum acceptable `b`.
    pub bandwidth_max: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            variance_min: 10.0,
            bias_max: 1.0,
            bandwidth_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub n_b_d_half: f64,
    pub bias_scale: f64,
    pub bandwidth_small: bool,
    pub variance_vanishes: bool,
    pub bias_negligible: bool,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.bandwidth_small && self.variance_vanishes && self.bias_negligible
    }
}

/// Advisory check of `(n, b)` against the thresholds.
pub fn check_bandwidth_regime(n: usize, b: f64, d: usize, th: &RegimeThresholds) -> RegimeReport {
    let n = n as f64;
    let d = d as f64;
    let n_b_d_half = n * b.powf(d / 2.0);
    let bias_scale = n.sqrt() * b.powf(d / 4.0 + 0.5);
    RegimeReport {
        n_b_d_half,
        bias_scale,
        bandwidth_small: b <= th.bandwidth_max,
        variance_vanishes: n_b_d_half >= th.variance_min,
        bias_negligible: bias_scale <= th.bias_max,
    }
}

/// Bandwidth `n^{−2/(d+4)}`, which balances the two MSE terms.
pub fn mse_optimal_rate(n: usize, d: usize) -> f64 {
    (n as f64).powf(-2.0 / (d as f64 + 4.0))
}

/// Exact mean and variance of `f̂_{n,b}(s)` for an iid sample from a
/// Dirichlet target: `E κ_{s,b}(X)` and `(E κ² − (E κ)²)/n` follow from the
/// closed-form integral of a product of Dirichlet densities.
pub fn exact_iid_moments(
    target: &DirichletParams,
    s: &SimplexPoint,
    n: usize,
    b: f64,
) -> Result<(f64, f64)> {
    s.require_dim(target.dim())?;
    crate::kernel::check_bandwidth(b)?;
    let kernel = crate::kernel::KernelSpec::new(s.clone(), b)?.params();
    let m1 = product_integral(&[&kernel, target]);
    let m2 = product_integral(&[&kernel, &kernel, target]);
    Ok((m1, (m2 - m1 * m1) / n as f64))
}

/// `∫_{S_d} Π_k K_{p_k}(x) dx` for Dirichlet densities `K_{p_k}`.
pub fn product_integral(factors: &[&DirichletParams]) -> f64 {
    let d = factors[0].dim();
    let log_norm = |shapes: &[f64]| -> f64 {
        ln_gamma(shapes.iter().sum()) - shapes.iter().map(|&a| ln_gamma(a)).sum::<f64>()
    };
    let mut combined = vec![1.0; d + 1];
    let mut acc = 0.0;
    for p in factors {
        let shapes: Vec<f64> = p.all_shapes().collect();
        acc += log_norm(&shapes);
        for (c, a) in combined.iter_mut().zip(&shapes) {
            *c += a - 1.0;
        }
    }
    (acc - log_norm(&combined)).exp()
}

/// Mode estimate `argmax_t f̂(t)`: a lattice sweep over `S_d` at
/// `grid_resolution`, then `refine_steps` rounds of coordinate-wise hill
/// climbing with a halving step. Lattice ties go to the lexicographically
/// smallest point.
pub fn mode_estimate(
    model: &KdeModel,
    grid_resolution: usize,
    refine_steps: usize,
) -> Result<SimplexPoint> {
    if grid_resolution < 2 {
        return Err(KdeError::InvalidConfig(
            "grid resolution must be at least 2".into(),
        ));
    }
    let d = model.dim();
    let lattice = simplex_lattice(d, grid_resolution);
    let values = model.evaluate_batch(&lattice)?;
    let mut best = 0;
    for k in 1..lattice.len() {
        let better = values[k] > values[best]
            || (values[k] == values[best] && lex_less(lattice[k].coords(), lattice[best].coords()));
        if better {
            best = k;
        }
    }
    let mut point = lattice[best].coords().to_vec();
    let mut value = values[best];
    let mut step = 1.0 / grid_resolution as f64;
    for _ in 0..refine_steps {
        let mut improved = false;
        for k in 0..d {
            for dir in [1.0, -1.0] {
                let mut trial = point.clone();
                trial[k] += dir * step;
                if trial[k] < 0.0 || trial.iter().sum::<f64>() > 1.0 {
                    continue;
                }
                let candidate = SimplexPoint::from_raw(trial.clone());
                let v = model.evaluate(&candidate)?;
                if v > value {
                    point = trial;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(SimplexPoint::from_raw(point))
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// All points `k / res` of `S_d` with integer `k ≥ 0`, `Σ k ≤ res`, in
/// lexicographic order.
pub fn simplex_lattice(d: usize, res: usize) -> Vec<SimplexPoint> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        out.push(SimplexPoint::from_raw(
            idx.iter().map(|&k| k as f64 / res as f64).collect(),
        ));
        // odometer increment under the constraint Σ idx ≤ res
        let mut pos = d;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx.iter().sum::<usize>() <= res {
                break;
            }
            idx[pos] = 0;
        }
    }
}
