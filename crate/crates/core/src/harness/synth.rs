//! Synthetic datasets for desk-scale experiments.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::substream;
use crate::simplex::{ClassLabel, Dataset, Sample};
use crate::Result;

/// Synthetic dataset family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// K unit-variance isotropic clusters, centers spaced `separation`
    /// apart on a circle in the first two feature dimensions.
    Gaussians,
    /// K concentric annuli at radii (c+1) * separation with unit radial
    /// noise; not linearly separable.
    Rings,
}

/// Generates a balanced labeled dataset (class counts differ by at most 1).
/// Sample i draws from `substream(seed, i)`, so generation is deterministic
/// and order-independent.
pub fn synth_dataset(
    kind: SynthKind,
    n: usize,
    k: usize,
    feature_dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if k < 2 {
        return Err(Error::Config(format!("synthetic data needs K >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::Config(format!("need at least K = {k} samples, got {n}")));
    }
    if feature_dim < 2 {
        return Err(Error::Config(format!(
            "synthetic data needs feature_dim >= 2, got {feature_dim}"
        )));
    }
    if !separation.is_finite() || separation <= 0.0 {
        return Err(Error::Config(format!(
            "separation must be > 0, got {separation}"
        )));
    }
    // Chord length `separation` between adjacent centers on the circle.
    let radius = if k == 2 {
        separation / 2.0
    } else {
        separation / (2.0 * (std::f64::consts::PI / k as f64).sin())
    };
    let samples = (0..n)
        .map(|i| {
            let class = i % k;
            let mut rng = substream(seed, i as u64);
            let mut features = vec![0.0; feature_dim];
            match kind {
                SynthKind::Gaussians => {
                    let angle = std::f64::consts::TAU * class as f64 / k as f64;
                    for f in features.iter_mut() {
                        *f = rng.next_normal();
                    }
                    features[0] += radius * angle.cos();
                    features[1] += radius * angle.sin();
                }
                SynthKind::Rings => {
                    let ring = (class + 1) as f64 * separation;
                    let theta = std::f64::consts::TAU * rng.next_f64();
                    let r = ring + rng.next_normal();
                    features[0] = r * theta.cos();
                    features[1] = r * theta.sin();
                    for f in features.iter_mut().skip(2) {
                        *f = rng.next_normal();
                    }
                }
            }
            Ok(Sample::clean(features, ClassLabel::new(class, k)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, k, feature_dim)
}
