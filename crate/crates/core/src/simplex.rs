//! Geometry of the d-simplex `S_d = {s ∈ [0,1]^d : ‖s‖₁ ≤ 1}`.
//!
//! A point stores its `d` free coordinates; the residual part
//! `1 − ‖s‖₁` of the underlying (d+1)-part composition is implicit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KdeError, Result};

/// Slack allowed on the ℓ¹ constraint when validating points.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Slack allowed when checking that a full share row sums to one.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A point of the simplex `S_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

/// How [`validate_composition`] treats out-of-range input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    /// Reject negative coordinates and sums above `1 + SUM_TOLERANCE`.
    #[default]
    Strict,
    /// Clip negatives at zero and rescale onto the simplex when needed.
    Renormalize,
}

impl SimplexPoint {
    /// Validates `coords` in strict mode.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        validate_composition(&coords, ValidationMode::Strict)
    }

    /// Builds a point without validation. Callers guarantee the invariants.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        SimplexPoint { coords }
    }

    /// The barycenter `(1/(d+1), …, 1/(d+1))`.
    pub fn barycenter(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(KdeError::InvalidDimension(d));
        }
        Ok(SimplexPoint::from_raw(vec![1.0 / (d as f64 + 1.0); d]))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// ℓ¹ norm of the free coordinates.
    pub fn l1_norm(&self) -> f64 {
        self.coords.iter().sum()
    }

    /// The implicit last part `1 − ‖s‖₁`, clamped at zero.
    pub fn residual(&self) -> f64 {
        (1.0 - self.l1_norm()).max(0.0)
    }

    /// True iff every coordinate is positive and the residual is positive.
    pub fn is_interior(&self) -> bool {
        self.coords.iter().all(|&c| c > 0.0) && self.l1_norm() < 1.0
    }

    pub(crate) fn require_interior(&self) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(KdeError::BoundaryPoint)
        }
    }

    pub(crate) fn require_dim(&self, d: usize) -> Result<()> {
        if self.dim() == d {
            Ok(())
        } else {
            Err(KdeError::DimensionMismatch {
                expected: d,
                got: self.dim(),
            })
        }
    }
}

/// Validates a vector of `d` coordinates as a point of `S_d`.
///
/// In [`ValidationMode::Renormalize`] negative entries are clipped to zero
/// and a vector whose sum exceeds one is divided by its sum.
pub fn validate_composition(raw: &[f64], mode: ValidationMode) -> Result<SimplexPoint> {
    if raw.is_empty() {
        return Err(KdeError::EmptyVector);
    }
    if let Some(index) = raw.iter().position(|c| !c.is_finite()) {
        return Err(KdeError::NonFinite { index });
    }
    match mode {
        ValidationMode::Strict => {
            if let Some((index, &value)) = raw.iter().enumerate().find(|(_, &c)| c < 0.0) {
                return Err(KdeError::NegativeCoordinate { index, value });
            }
            let sum: f64 = raw.iter().sum();
            if sum > 1.0 + SUM_TOLERANCE {
                return Err(KdeError::SumExceedsOne { sum });
            }
            Ok(SimplexPoint::from_raw(raw.to_vec()))
        }
        ValidationMode::Renormalize => {
            let mut coords: Vec<f64> = raw.iter().map(|&c| c.max(0.0)).collect();
            let sum: f64 = coords.iter().sum();
            if sum > 1.0 {
                coords.iter_mut().for_each(|c| *c /= sum);
            }
            Ok(SimplexPoint::from_raw(coords))
        }
    }
}

/// Validates a full `(d+1)`-part composition and drops its last part.
///
/// Strict mode requires nonnegative parts summing to one within
/// [`ROW_TOLERANCE`]; renormalize mode clips negatives and divides by the
/// sum. Returns the point and whether it was rescaled.
pub fn validate_full_composition(
    parts: &[f64],
    mode: ValidationMode,
) -> Result<(SimplexPoint, bool)> {
    if parts.len() < 2 {
        return Err(KdeError::EmptyVector);
    }
    if let Some(index) = parts.iter().position(|c| !c.is_finite()) {
        return Err(KdeError::NonFinite { index });
    }
    let d = parts.len() - 1;
    match mode {
        ValidationMode::Strict => {
            if let Some((index, &value)) = parts.iter().enumerate().find(|(_, &c)| c < 0.0) {
                return Err(KdeError::NegativeCoordinate { index, value });
            }
            let sum: f64 = parts.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(KdeError::RowNotNormalized { row: 0, sum });
            }
            let point = validate_composition(&parts[..d], ValidationMode::Renormalize)?;
            Ok((point, false))
        }
        ValidationMode::Renormalize => {
            let clipped: Vec<f64> = parts.iter().map(|&c| c.max(0.0)).collect();
            let sum: f64 = clipped.iter().sum();
            if sum <= 0.0 {
                return Err(KdeError::RowNotNormalized { row: 0, sum });
            }
            let rescaled = clipped != parts || sum != 1.0;
            let coords: Vec<f64> = clipped[..d].iter().map(|c| c / sum).collect();
            let point = validate_composition(&coords, ValidationMode::Renormalize)?;
            Ok((point, rescaled))
        }
    }
}

/// Volume (Lebesgue measure) of `S_d`, which is `1/d!`.
pub fn simplex_volume(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(KdeError::InvalidDimension(d));
    }
    Ok(1.0 / factorial(d))
}

/// `d!` as a float.
pub fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// Draws a point uniformly on `S_d`, i.e. from Dirichlet(1, …, 1).
///
/// Uses `d + 1` unit exponentials `−ln(1 − U)` normalized to sum one; the
/// first `d` coordinates are kept. Consumes exactly `d + 1` uniform draws.
pub fn sample_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<SimplexPoint> {
    if d < 1 {
        return Err(KdeError::InvalidDimension(d));
    }
    let mut e = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        let u: f64 = rng.random();
        e.push(-(1.0 - u).ln());
    }
    let total: f64 = e.iter().sum();
    e.truncate(d);
    e.iter_mut().for_each(|x| *x /= total);
    Ok(SimplexPoint::from_raw(e))
}

/// An ordered sequence of points sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionSeries {
    points: Vec<SimplexPoint>,
    labels: Option<Vec<String>>,
}

impl CompositionSeries {
    /// Builds a series; fails on an empty input or mixed dimensions.
    pub fn new(points: Vec<SimplexPoint>) -> Result<Self> {
        let d = points.first().ok_or(KdeError::EmptyData)?.dim();
        for p in &points {
            p.require_dim(d)?;
        }
        Ok(CompositionSeries {
            points,
            labels: None,
        })
    }

    /// Convenience constructor from raw coordinate rows (strict mode).
    pub fn from_rows<I, V>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = V>,
        V: AsRef<[f64]>,
    {
        let points = rows
            .into_iter()
            .map(|r| SimplexPoint::new(r.as_ref().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// Attaches component names (`d` or `d + 1` of them).
    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    pub fn get(&self, i: usize) -> Option<&SimplexPoint> {
        self.points.get(i)
    }

    /// Values of one coordinate in time order.
    pub fn coordinate(&self, k: usize) -> Result<Vec<f64>> {
        if k >= self.dim() {
            return Err(KdeError::IndexOutOfRange {
                index: k,
                len: self.dim(),
            });
        }
        Ok(self.points.iter().map(|p| p.coords()[k]).collect())
    }
}

/// A table of full compositions: each row holds `m` shares summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareTable {
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl ShareTable {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let m = labels.len();
        if rows.is_empty() {
            return Err(KdeError::EmptyData);
        }
        for row in &rows {
            if row.len() != m {
                return Err(KdeError::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
        }
        Ok(ShareTable { rows, labels })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn components(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Builds the `d = 2` series `(S_i, S_j)` with implicit residual
/// `1 − S_i − S_j`. Indices are zero-based.
pub fn build_pair_composition(table: &ShareTable, i: usize, j: usize) -> Result<CompositionSeries> {
    let m = table.components();
    if m < 3 {
        return Err(KdeError::InvalidConfig(format!(
            "pair compositions need at least 3 components, table has {m}"
        )));
    }
    for idx in [i, j] {
        if idx >= m {
            return Err(KdeError::IndexOutOfRange { index: idx, len: m });
        }
    }
    if i == j {
        return Err(KdeError::EqualIndices(i));
    }
    let points = table
        .rows()
        .iter()
        .enumerate()
        .map(|(row, shares)| {
            let sum: f64 = shares.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(KdeError::RowNotNormalized { row, sum });
            }
            validate_composition(&[shares[i], shares[j]], ValidationMode::Strict)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = vec![
        table.labels()[i].clone(),
        table.labels()[j].clone(),
        "other".to_string(),
    ];
    Ok(CompositionSeries::new(points)?.with_labels(labels))
}
