//! The Dirichlet density and the boundary-adaptive kernel built from it.
//!
//! For an anchor `s ∈ S_d` and bandwidth `b > 0` the kernel `κ_{s,b}` is the
//! Dirichlet density with shapes `u = s/b + 1` and residual shape
//! `v = (1 − ‖s‖₁)/b + 1`. Its mode is `s` itself and its mass stays inside
//! the simplex, which is what removes the boundary spill-over of symmetric
//! kernels.
//!
//! All density arithmetic is done in log space: shape parameters reach
//! `1/b + d + 1`, far beyond where `Γ` itself overflows.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::asymptotics::psi;
use crate::error::{KdeError, Result};
use crate::simplex::SimplexPoint;
use crate::special::{gamma_quantile, ln_gamma, normal_cdf};

/// Parameters of a Dirichlet(u, v) distribution on `S_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    shape: Vec<f64>,
    tail: f64,
}

impl DirichletParams {
    pub fn new(shape: Vec<f64>, tail: f64) -> Result<Self> {
        if shape.is_empty() {
            return Err(KdeError::EmptyVector);
        }
        for (i, &u) in shape.iter().enumerate() {
            if !(u > 0.0 && u.is_finite()) {
                return Err(KdeError::NonPositiveShape {
                    name: format!("u[{i}]"),
                    value: u,
                });
            }
        }
        if !(tail > 0.0 && tail.is_finite()) {
            return Err(KdeError::NonPositiveShape {
                name: "v".into(),
                value: tail,
            });
        }
        Ok(DirichletParams { shape, tail })
    }

    /// Symmetric parameters `(a, …, a; a)` on `S_d`.
    pub fn symmetric(d: usize, a: f64) -> Result<Self> {
        Self::new(vec![a; d], a)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// All `d + 1` shape parameters, residual last.
    pub fn all_shapes(&self) -> impl Iterator<Item = f64> + '_ {
        self.shape.iter().copied().chain(std::iter::once(self.tail))
    }

    pub fn total(&self) -> f64 {
        self.all_shapes().sum()
    }

    /// Mean of each free coordinate, `u_i / (‖u‖₁ + v)`.
    pub fn mean(&self) -> Vec<f64> {
        let t = self.total();
        self.shape.iter().map(|u| u / t).collect()
    }

    fn log_normalizer(&self) -> f64 {
        ln_gamma(self.total()) - self.all_shapes().map(ln_gamma).sum::<f64>()
    }

    fn exponents(&self) -> Vec<f64> {
        self.all_shapes().map(|a| a - 1.0).collect()
    }
}

/// Anchor and bandwidth of a kernel `κ_{s,b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    anchor: SimplexPoint,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(anchor: SimplexPoint, bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(KernelSpec { anchor, bandwidth })
    }

    pub fn anchor(&self) -> &SimplexPoint {
        &self.anchor
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// The induced Dirichlet parameters `(s/b + 1, (1 − ‖s‖₁)/b + 1)`.
    pub fn params(&self) -> DirichletParams {
        let b = self.bandwidth;
        DirichletParams {
            shape: self.anchor.coords().iter().map(|s| s / b + 1.0).collect(),
            tail: self.anchor.residual() / b + 1.0,
        }
    }
}

pub(crate) fn check_bandwidth(b: f64) -> Result<f64> {
    if b > 0.0 && b.is_finite() {
        Ok(b)
    } else {
        Err(KdeError::NonPositiveBandwidth(b))
    }
}

/// Log-coordinates `(ln x_1, …, ln x_d, ln(1 − ‖x‖₁))` of a point.
pub(crate) fn log_parts(x: &SimplexPoint) -> Vec<f64> {
    x.coords()
        .iter()
        .map(|c| c.ln())
        .chain(std::iter::once(x.residual().ln()))
        .collect()
}

/// A Dirichlet log-density reduced to a constant plus exponents, evaluated
/// against precomputed [`log_parts`].
#[derive(Debug, Clone)]
pub(crate) struct LogDensity {
    log_norm: f64,
    exponents: Vec<f64>,
}

impl LogDensity {
    pub(crate) fn from_params(p: &DirichletParams) -> Self {
        LogDensity {
            log_norm: p.log_normalizer(),
            exponents: p.exponents(),
        }
    }

    pub(crate) fn for_kernel(anchor: &SimplexPoint, b: f64) -> Self {
        let d = anchor.dim();
        let mut exponents: Vec<f64> = anchor.coords().iter().map(|s| s / b).collect();
        exponents.push(anchor.residual() / b);
        let log_norm = ln_gamma(1.0 / b + d as f64 + 1.0)
            - exponents.iter().map(|e| ln_gamma(e + 1.0)).sum::<f64>();
        LogDensity {
            log_norm,
            exponents,
        }
    }

    /// `0⁰ := 1`: a zero exponent contributes nothing even at a zero base.
    #[inline]
    pub(crate) fn eval_log(&self, logs: &[f64]) -> f64 {
        let mut acc = self.log_norm;
        for (e, l) in self.exponents.iter().zip(logs) {
            if *e != 0.0 {
                acc += e * l;
            }
        }
        acc
    }

    #[inline]
    pub(crate) fn eval(&self, logs: &[f64]) -> f64 {
        self.eval_log(logs).exp()
    }
}

/// `ln K_{u,v}(x)`, or `-inf` where a zero base meets a positive exponent.
pub fn log_dirichlet_density(p: &DirichletParams, x: &SimplexPoint) -> Result<f64> {
    x.require_dim(p.dim())?;
    Ok(LogDensity::from_params(p).eval_log(&log_parts(x)))
}

/// The Dirichlet density `K_{u,v}(x)`.
pub fn dirichlet_density(p: &DirichletParams, x: &SimplexPoint) -> Result<f64> {
    log_dirichlet_density(p, x).map(f64::exp)
}

/// The kernel value `κ_{s,b}(x)`.
pub fn kappa(spec: &KernelSpec, x: &SimplexPoint) -> Result<f64> {
    x.require_dim(spec.anchor.dim())?;
    Ok(LogDensity::for_kernel(&spec.anchor, spec.bandwidth).eval(&log_parts(x)))
}

/// The exact maximum of `x ↦ κ_{s,b}(x)`, attained at `x = s`.
pub fn kappa_peak(spec: &KernelSpec) -> f64 {
    LogDensity::for_kernel(&spec.anchor, spec.bandwidth)
        .eval(&log_parts(&spec.anchor))
}

/// Leading term of the squared `L^q` norm of `κ_{s,b}` as `b → 0`:
///
/// `‖κ_{s,b}‖_q² ≈ b^{−d/p} ψ(s)^{2/p} / (2^{−d/p} q^{d/q})`, `1/p + 1/q = 1`.
///
/// At `q = 2` this reduces to `b^{−d/2} ψ(s)`.
pub fn kappa_lq_norm_sq_asymptotic(s: &SimplexPoint, b: f64, q: f64) -> Result<f64> {
    s.require_interior()?;
    check_bandwidth(b)?;
    if !(q > 1.0 && q.is_finite()) {
        return Err(KdeError::InvalidExponent(q));
    }
    let d = s.dim() as f64;
    let inv_p = 1.0 - 1.0 / q;
    let num = b.powf(-d * inv_p) * psi(s)?.powf(2.0 * inv_p);
    let den = 2f64.powf(-d * inv_p) * q.powf(d / q);
    Ok(num / den)
}

/// Constant in [`kappa_sup_bound`] for dimension `d`: `2^{3d/2}`.
///
/// The peak of `κ_{s,b}` is `2^{d/2} b^{−d/2} ψ(s) (1 + O_s(b))`; the extra
/// factor `2^d` absorbs the `O_s(b)` growth up to `b = 0.5` for `d ≤ 4`.
pub fn sup_bound_constant(d: usize) -> f64 {
    2f64.powf(1.5 * d as f64)
}

/// Largest bandwidth for which [`kappa_sup_bound`] is guaranteed.
pub const SUP_BOUND_MAX_BANDWIDTH: f64 = 0.5;

/// Upper bound `C_d · b^{−d/2} ψ(s)` on `max_x κ_{s,b}(x)`.
///
/// Guaranteed for interior `s`, `d ≤ 4` and `b ≤ SUP_BOUND_MAX_BANDWIDTH`.
pub fn kappa_sup_bound(s: &SimplexPoint, b: f64) -> Result<f64> {
    s.require_interior()?;
    check_bandwidth(b)?;
    let d = s.dim();
    Ok(sup_bound_constant(d) * b.powf(-(d as f64) / 2.0) * psi(s)?)
}

/// Exact Dirichlet draw: `d + 1` Gamma variates normalized to sum one.
///
/// Each Gamma variate is the Gamma quantile of `Φ(z)` for a standard normal
/// `z`; the generator consumes exactly `d + 1` normals, in coordinate order
/// with the residual last.
pub fn sample_dirichlet<R: Rng + ?Sized>(p: &DirichletParams, rng: &mut R) -> SimplexPoint {
    let latent: Vec<f64> = (0..=p.dim()).map(|_| rng.sample(StandardNormal)).collect();
    dirichlet_from_latent(p, &latent)
}

/// Maps `d + 1` standard-normal latents to a Dirichlet point through the
/// Gamma quantile transform.
pub(crate) fn dirichlet_from_latent(p: &DirichletParams, latent: &[f64]) -> SimplexPoint {
    let gammas: Vec<f64> = p
        .all_shapes()
        .zip(latent)
        .map(|(a, &z)| gamma_quantile(a, normal_cdf(z), normal_cdf(-z)))
        .collect();
    let total: f64 = gammas.iter().sum();
    let d = p.dim();
    let coords = if total > 0.0 && total.is_finite() {
        gammas[..d].iter().map(|g| g / total).collect()
    } else {
        // every variate underflowed: fall back to the largest latent
        let k = latent
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(d);
        (0..d).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
    };
    SimplexPoint::from_raw(coords)
}
