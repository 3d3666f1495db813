//! Numerical integration over `S_1 = [0, 1]` and the triangle `S_2`.
//!
//! One-dimensional integrals use adaptive Gauss–Kronrod (7/15) on a
//! composite partition; triangle integrals go through the Duffy map
//! `(u, v) ↦ (u, (1 − u) v)` with Jacobian `1 − u` and nest the 1-D rule.
//! When the integrand is a sharply peaked kernel, the caller passes the
//! peak location and bandwidth so the initial partition clusters panels in
//! a window of width `~√b` around it.
//!
//! These routines are the independent oracles for closed-form kernel
//! results; they know nothing about the estimator.

use crate::error::{KdeError, Result};
use crate::simplex::SimplexPoint;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 2000;

/// Tolerances of the adaptive 1-D rule.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-13,
            rel: 1e-11,
        }
    }
}

/// 15-point Kronrod estimate, its difference from the embedded 7-point
/// Gauss rule and the Kronrod integral of `|f|` (the roundoff scale).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = half * XGK[j];
        let (lo, hi) = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (lo + hi);
        abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs(), abs * half.abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Self {
        let (value, err, scale) = gk15(f, a, b);
        // an error at the roundoff floor cannot shrink further by bisection
        let err = if err <= 50.0 * f64::EPSILON * scale { 0.0 } else { err };
        Panel { a, b, value, err }
    }
}

/// Globally adaptive Gauss–Kronrod integral of `f` over the partition given
/// by the sorted `breakpoints` (first and last are the integration limits).
///
/// The panel with the largest error estimate is bisected until the summed
/// error meets the tolerance or `MAX_PANELS` is reached.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: Tolerance) -> f64 {
    let mut panels: Vec<Panel> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Panel::new(&f, w[0], w[1]))
        .collect();
    while panels.len() < MAX_PANELS {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if err <= tol.abs.max(tol.rel * value.abs()) {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .unwrap();
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval exhausted at machine precision; keep it as is
            panels.push(Panel { a, b, value: gk15(&f, a, b).0, err: 0.0 });
            continue;
        }
        panels.push(Panel::new(&f, a, mid));
        panels.push(Panel::new(&f, mid, b));
    }
    panels.iter().map(|p| p.value).sum()
}

/// Breakpoints on `[0, 1]` clustered around `center` with scale `width`.
pub fn peak_breakpoints(center: f64, width: f64) -> Vec<f64> {
    let mut pts = vec![0.0, 1.0];
    for k in [-12.0, -8.0, -5.0, -3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0] {
        let x = center + k * width;
        if x > 0.0 && x < 1.0 {
            pts.push(x);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Uniform breakpoints `0, 1/panels, …, 1`.
pub fn uniform_breakpoints(panels: usize) -> Vec<f64> {
    (0..=panels).map(|k| k as f64 / panels as f64).collect()
}

/// Integral of `f` over `S_d` for `d ∈ {1, 2}`.
///
/// `peak` optionally names the anchor and bandwidth of a kernel-like
/// integrand. Higher dimensions are rejected.
pub fn integrate_simplex<F>(d: usize, peak: Option<(&SimplexPoint, f64)>, f: F) -> Result<f64>
where
    F: Fn(&SimplexPoint) -> f64,
{
    match d {
        1 => {
            let breaks = match peak {
                Some((s, b)) => {
                    let c = s.coords()[0];
                    peak_breakpoints(c, kernel_width(c, b))
                }
                None => uniform_breakpoints(16),
            };
            Ok(integrate_1d(
                |x| f(&SimplexPoint::from_raw(vec![x])),
                &breaks,
                Tolerance::default(),
            ))
        }
        2 => Ok(integrate_triangle(peak.map(|(s, b)| (s.coords()[0], s.coords()[1], b)), |x, y| {
            f(&SimplexPoint::from_raw(vec![x, y]))
        })),
        _ => Err(KdeError::InvalidConfig(format!(
            "quadrature over the simplex supports d <= 2, got d = {d}"
        ))),
    }
}

fn kernel_width(c: f64, b: f64) -> f64 {
    (b * c.max(b) * (1.0 - c).max(b)).sqrt().max(1e-4)
}

fn integrate_triangle<F: Fn(f64, f64) -> f64>(peak: Option<(f64, f64, f64)>, f: F) -> f64 {
    let outer_breaks = match peak {
        Some((s1, _, b)) => peak_breakpoints(s1, kernel_width(s1, b)),
        None => uniform_breakpoints(16),
    };
    let inner_tol = Tolerance {
        abs: 1e-13,
        rel: 1e-10,
    };
    let outer_tol = Tolerance {
        abs: 1e-12,
        rel: 1e-9,
    };
    let inner = |u: f64| -> f64 {
        let scale = 1.0 - u;
        if scale <= 0.0 {
            return 0.0;
        }
        let breaks = match peak {
            Some((_, s2, b)) => {
                let center = (s2 / scale).min(1.0);
                peak_breakpoints(center, kernel_width(s2, b) / scale)
            }
            None => uniform_breakpoints(8),
        };
        scale * integrate_1d(|v| f(u, scale * v), &breaks, inner_tol)
    };
    integrate_1d(inner, &outer_breaks, outer_tol)
}

/// Regular lattice `{(i/res, j/res) : i + j ≤ res}` on `S_2`, row-major in `i`.
pub fn triangle_lattice(res: usize) -> Vec<SimplexPoint> {
    let r = res as f64;
    let mut out = Vec::with_capacity((res + 1) * (res + 2) / 2);
    for i in 0..=res {
        for j in 0..=(res - i) {
            let x = i as f64 / r;
            let y = j as f64 / r;
            // guard against x + y rounding above 1
            let y = if x + y > 1.0 { 1.0 - x } else { y };
            out.push(SimplexPoint::from_raw(vec![x, y]));
        }
    }
    out
}

/// Centroids of the `res²` congruent triangles of the uniform subdivision
/// of `S_2`; each cell has area `1 / (2 res²)`.
pub fn triangle_cell_centroids(res: usize) -> Vec<SimplexPoint> {
    let r = res as f64;
    let mut out = Vec::with_capacity(res * res);
    for i in 0..res {
        for j in 0..(res - i) {
            out.push(SimplexPoint::from_raw(vec![
                (i as f64 + 1.0 / 3.0) / r,
                (j as f64 + 1.0 / 3.0) / r,
            ]));
            if i + j + 1 < res {
                out.push(SimplexPoint::from_raw(vec![
                    (i as f64 + 2.0 / 3.0) / r,
                    (j as f64 + 2.0 / 3.0) / r,
                ]));
            }
        }
    }
    out
}

/// Midpoints of `res` equal cells of `[0, 1]`.
pub fn interval_cell_midpoints(res: usize) -> Vec<SimplexPoint> {
    (0..res)
        .map(|k| SimplexPoint::from_raw(vec![(k as f64 + 0.5) / res as f64]))
        .collect()
}

/// Equal-weight cell points of `S_d` for `d ∈ {1, 2}` at resolution `res`,
/// together with the area of each cell.
pub fn cell_rule(d: usize, res: usize) -> Result<(Vec<SimplexPoint>, f64)> {
    match d {
        1 => Ok((interval_cell_midpoints(res), 1.0 / res as f64)),
        2 => Ok((triangle_cell_centroids(res), 0.5 / (res * res) as f64)),
        _ => Err(KdeError::InvalidConfig(format!(
            "lattice rules support d <= 2, got d = {d}"
        ))),
    }
}
