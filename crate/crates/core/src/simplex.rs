//! Probability-simplex primitives shared by every other module.
//!
//! A classifier output lives on the K-class probability simplex: K
//! non-negative entries summing to one. [`ProbVector`] enforces that
//! invariant at construction; [`softmax`] maps arbitrary finite logits onto
//! it; one-hot vectors are its extreme points.
//!
//! Labels are 0-based throughout (`0..K`), one below the 1-based class
//! indices conventional in the classification literature.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Tolerance for the sum-to-one check on probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Floor applied to probabilities before log-based loss evaluation.
pub const CLAMP_EPS: f64 = 1e-7;

/// A point on the K-class probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector {
    values: Vec<f64>,
}

impl ProbVector {
    /// Validates entries in [0, 1] summing to 1 within [`SIMPLEX_TOL`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "probability vector needs K >= 2, got {}",
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0 + SIMPLEX_TOL).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "probability entry {i} out of [0, 1]: {v}"
                )));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1 within {SIMPLEX_TOL}"
            )));
        }
        Ok(Self { values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Index of the largest entry (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.values.len() {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        ProbVector::new(values)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.values
    }
}

/// A 0-based class index, checked against the class count at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(usize);

impl ClassLabel {
    pub fn new(index: usize, k: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::InvalidInput(format!(
                "class label {index} out of range for K = {k}"
            )));
        }
        Ok(Self(index))
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// One labeled example: model input plus clean and observed labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub clean_label: ClassLabel,
    pub observed_label: ClassLabel,
    pub flipped: bool,
}

impl Sample {
    /// A clean sample (observed = clean).
    pub fn clean(features: Vec<f64>, label: ClassLabel) -> Self {
        Self {
            features,
            clean_label: label,
            observed_label: label,
            flipped: false,
        }
    }

    /// Rebinds the observed label, keeping the flipped flag consistent.
    pub fn with_observed(&self, observed: ClassLabel) -> Self {
        Self {
            features: self.features.clone(),
            clean_label: self.clean_label,
            observed_label: observed,
            flipped: observed != self.clean_label,
        }
    }
}

/// A labeled dataset with a fixed class count and feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub k: usize,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, k: usize, feature_dim: usize) -> Result<Self> {
        let ds = Self {
            samples,
            k,
            feature_dim,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidInput(format!(
                "dataset needs K >= 2, got {}",
                self.k
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.features.len() != self.feature_dim {
                return Err(Error::InvalidInput(format!(
                    "sample {i}: feature dim {} != dataset dim {}",
                    s.features.len(),
                    self.feature_dim
                )));
            }
            if s.clean_label.index() >= self.k || s.observed_label.index() >= self.k {
                return Err(Error::InvalidInput(format!(
                    "sample {i}: label out of range for K = {}",
                    self.k
                )));
            }
            if s.flipped != (s.clean_label != s.observed_label) {
                return Err(Error::InvalidInput(format!(
                    "sample {i}: flipped flag inconsistent with labels"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Numerically stable softmax: exp(z_k - max z) / sum_j exp(z_j - max z).
pub fn softmax(logits: &[f64]) -> Result<ProbVector> {
    if logits.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "softmax needs K >= 2 logits, got {}",
            logits.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidInput("softmax input must be finite".into()));
    }
    Ok(ProbVector {
        values: softmax_slice(logits),
    })
}

/// Softmax on a raw slice; callers guarantee finite input.
pub(crate) fn softmax_slice(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    for e in &mut exps {
        *e /= sum;
    }
    exps
}

/// One-hot vector e_y in K dimensions.
pub fn one_hot(y: ClassLabel, k: usize) -> Result<ProbVector> {
    if y.index() >= k {
        return Err(Error::InvalidInput(format!(
            "one_hot: label {} out of range for K = {k}",
            y.index()
        )));
    }
    let mut values = vec![0.0; k];
    values[y.index()] = 1.0;
    Ok(ProbVector { values })
}

/// Floors every entry at `epsilon` and renormalizes to sum 1.
///
/// Interior points (all entries already >= epsilon) map to themselves.
pub fn clamp_simplex(p: &ProbVector, epsilon: f64) -> ProbVector {
    let k = p.k();
    debug_assert!(epsilon > 0.0 && epsilon < 1.0 / k as f64);
    if p.values.iter().all(|&v| v >= epsilon) {
        return p.clone();
    }
    let mut values: Vec<f64> = p.values.iter().map(|&v| v.max(epsilon)).collect();
    let sum: f64 = values.iter().sum();
    for v in &mut values {
        *v /= sum;
    }
    ProbVector { values }
}
