//! Node indicator normalization, composite node scores, throughput ratios
//! and the network cohesion metric.
//!
//! Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("indicator column {column:?} is constant (max == min)")]
    DegenerateIndicator { column: Option<usize> },
    #[error("indicator values must be finite")]
    NonFinite,
    #[error("need at least {min} values, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("score weights must lie in [0, 1] and sum to 1 (sum = {sum})")]
    WeightSumViolation { sum: f64 },
    #[error("normalizer must be positive, got {0}")]
    NonPositiveNormalizer(f64),
    #[error("cohesion denominator is zero")]
    ZeroDenominator,
    #[error("invalid cohesion input: {0}")]
    InvalidCohesion(String),
}

/// Whether larger raw values are better (`Benefit`) or worse (`Cost`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Benefit,
    Cost,
}

/// Per-node indicator table: `values[node][indicator]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorMatrix {
    pub values: Vec<Vec<f64>>,
    pub orientations: Vec<Orientation>,
}

impl IndicatorMatrix {
    pub fn new(values: Vec<Vec<f64>>, orientations: Vec<Orientation>) -> Result<Self, IndicatorError> {
        let m = Self { values, orientations };
        m.validate()?;
        Ok(m)
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn indicators(&self) -> usize {
        self.orientations.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }

    pub fn validate(&self) -> Result<(), IndicatorError> {
        if self.values.len() < 2 {
            return Err(IndicatorError::TooFew { min: 2, got: self.values.len() });
        }
        if self.orientations.is_empty() {
            return Err(IndicatorError::TooFew { min: 1, got: 0 });
        }
        let m = self.orientations.len();
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != m {
                return Err(IndicatorError::Shape(format!("row {i} has {} values, expected {m}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(IndicatorError::NonFinite);
            }
        }
        Ok(())
    }
}

/// Min-max normalization of one indicator column.
///
/// `Benefit` maps to `(v - min) / (max - min)`, `Cost` to
/// `(max - v) / (max - min)`. The output always spans exactly `[0, 1]`.
pub fn normalize_column(column: &[f64], orientation: Orientation) -> Result<Vec<f64>, IndicatorError> {
    if column.len() < 2 {
        return Err(IndicatorError::TooFew { min: 2, got: column.len() });
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(IndicatorError::NonFinite);
    }
    let (min, max) = column.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = max - min;
    if span <= 0.0 {
        return Err(IndicatorError::DegenerateIndicator { column: None });
    }
    Ok(column
        .iter()
        .map(|&v| match orientation {
            Orientation::Benefit => (v - min) / span,
            Orientation::Cost => (max - v) / span,
        })
        .collect())
}

/// Normalizes every column according to its orientation. Orientations are
/// carried over unchanged as metadata.
pub fn normalize_matrix(m: &IndicatorMatrix) -> Result<IndicatorMatrix, IndicatorError> {
    m.validate()?;
    let mut out = vec![vec![0.0; m.indicators()]; m.nodes()];
    for (j, &orientation) in m.orientations.iter().enumerate() {
        let normalized = normalize_column(&m.column(j), orientation).map_err(|e| match e {
            IndicatorError::DegenerateIndicator { .. } => IndicatorError::DegenerateIndicator { column: Some(j) },
            other => other,
        })?;
        for (row, v) in out.iter_mut().zip(normalized) {
            row[j] = v;
        }
    }
    Ok(IndicatorMatrix { values: out, orientations: m.orientations.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl ScoreWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, IndicatorError> {
        let w = Self { w1, w2, w3 };
        w.validate()?;
        Ok(w)
    }

    /// Rescales three nonnegative magnitudes so they sum to one.
    pub fn from_relative(a: f64, b: f64, c: f64) -> Result<Self, IndicatorError> {
        let sum = a + b + c;
        if !(sum > 0.0) || a < 0.0 || b < 0.0 || c < 0.0 {
            return Err(IndicatorError::WeightSumViolation { sum });
        }
        Self::new(a / sum, b / sum, c / sum)
    }

    pub fn validate(&self) -> Result<(), IndicatorError> {
        let sum = self.w1 + self.w2 + self.w3;
        let in_range = [self.w1, self.w2, self.w3].iter().all(|w| (0.0..=1.0).contains(w));
        if !in_range || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(IndicatorError::WeightSumViolation { sum });
        }
        Ok(())
    }
}

/// Coverage, distribution coefficient and delay of one node.
///
/// `q_delay` enters the score additively, so callers pass it already
/// normalized with [`Orientation::Cost`] (larger = shorter delay).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub t_coverage: f64,
    pub c_coeff: f64,
    pub q_delay: f64,
}

pub fn composite_score(metrics: &NodeMetrics, w: &ScoreWeights) -> Result<f64, IndicatorError> {
    w.validate()?;
    Ok(w.w1 * metrics.t_coverage + w.w2 * metrics.c_coeff + w.w3 * metrics.q_delay)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSnapshot {
    pub n_i: f64,
    pub n_r: f64,
    pub n_s: f64,
    pub c_norm: f64,
}

/// Throughputs of the I, R and S nodes divided by the normal number.
pub fn throughput_ratios(s: &ThroughputSnapshot) -> Result<(f64, f64, f64), IndicatorError> {
    if !(s.c_norm > 0.0) {
        return Err(IndicatorError::NonPositiveNormalizer(s.c_norm));
    }
    Ok((s.n_i / s.c_norm, s.n_r / s.c_norm, s.n_s / s.c_norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohesionTerm {
    pub s: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohesionInput {
    pub terms: Vec<CohesionTerm>,
    /// Weighted shortest distances, `n x n`, symmetric with zero diagonal.
    pub d_w: Vec<Vec<f64>>,
    pub c_norm: f64,
}

/// Network cohesion metric
/// `1 / (c_norm * sum_i(s_i / sigma2_i) * mean_{i != j} d_ij)`.
pub fn cohesion(input: &CohesionInput) -> Result<f64, IndicatorError> {
    let n = input.d_w.len();
    if n < 2 {
        return Err(IndicatorError::InvalidCohesion(format!("need n >= 2, got {n}")));
    }
    if input.terms.len() != n {
        return Err(IndicatorError::InvalidCohesion(format!("{} cohesion terms for {n} nodes", input.terms.len())));
    }
    if !(input.c_norm > 0.0) {
        return Err(IndicatorError::NonPositiveNormalizer(input.c_norm));
    }
    if input.terms.iter().any(|t| !(t.sigma2 > 0.0)) {
        return Err(IndicatorError::InvalidCohesion("sigma2 must be positive".into()));
    }
    let mut off_diag = 0.0;
    for (i, row) in input.d_w.iter().enumerate() {
        if row.len() != n {
            return Err(IndicatorError::InvalidCohesion(format!("row {i} has {} entries", row.len())));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() {
                return Err(IndicatorError::NonFinite);
            }
            if i == j {
                if d != 0.0 {
                    return Err(IndicatorError::InvalidCohesion("nonzero diagonal".into()));
                }
            } else {
                if (d - input.d_w[j][i]).abs() > 1e-9 * d.abs().max(1.0) {
                    return Err(IndicatorError::InvalidCohesion("asymmetric distances".into()));
                }
                off_diag += d;
            }
        }
    }
    let mean_distance = off_diag / (n * (n - 1)) as f64;
    let load: f64 = input.terms.iter().map(|t| t.s / t.sigma2).sum();
    let denom = input.c_norm * load * mean_distance;
    if denom == 0.0 {
        return Err(IndicatorError::ZeroDenominator);
    }
    Ok(1.0 / denom)
}
