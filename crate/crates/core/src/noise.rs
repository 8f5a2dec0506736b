//! Seeded label corruption and transition-matrix reports.
//!
//! Each sample's flip decision comes from its own substream derived from
//! `(seed, sample index)`, so injection is bit-reproducible and independent
//! of processing order. Supported processes:
//!
//! - `symmetric`: keep the label with probability 1 - eta, otherwise move to
//!   one of the K - 1 other classes uniformly.
//! - `pairflip`: each mapped class flips only to its designated counterpart
//!   with probability eta; unmapped classes are untouched.
//! - `groupshift`: within each ordered group, a class flips to its cyclic
//!   successor with probability eta (singleton groups are untouched).
//! - `instance`: per-sample rate from a normal(eta_mean, eta_std) clipped to
//!   [0, 1), flip target drawn from a softmax over a fixed random linear
//!   projection of the features, restricted to classes != y.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::{substream, SplitMix64};
use crate::simplex::{softmax_slice, ClassLabel, Dataset};
use crate::Result;

/// A label-corruption process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    Symmetric {
        eta: f64,
    },
    Pairflip {
        eta: f64,
        /// Class -> flip target; serialized as an array of `[from, to]` pairs.
        #[serde(with = "flip_map_pairs")]
        flip_map: BTreeMap<usize, usize>,
    },
    Groupshift {
        eta: f64,
        groups: Vec<Vec<usize>>,
    },
    Instance {
        eta_mean: f64,
        eta_std: f64,
        projection_seed: u64,
    },
}

/// Wire format for the pairflip map: `[[from, to], ...]` (JSON objects
/// cannot key on integers).
mod flip_map_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<usize, usize>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(map.iter().map(|(&from, &to)| (from, to)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<usize, usize>, D::Error> {
        let pairs: Vec<(usize, usize)> = Deserialize::deserialize(deserializer)?;
        Ok(pairs.into_iter().collect())
    }
}

impl NoiseSpec {
    /// Validates rates and class references against a class count.
    ///
    /// Symmetric noise requires eta < (K-1)/K and pairflip/groupshift require
    /// eta < 0.5, so the clean label always remains the per-row plurality.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            NoiseSpec::Symmetric { eta } => {
                let bound = (k as f64 - 1.0) / k as f64;
                if !eta.is_finite() || *eta < 0.0 || *eta >= bound {
                    return Err(Error::Config(format!(
                        "symmetric noise requires 0 <= eta < {bound:.4} for K = {k}, got {eta}"
                    )));
                }
            }
            NoiseSpec::Pairflip { eta, flip_map } => {
                check_rate_below_half(*eta)?;
                for (&from, &to) in flip_map {
                    if from >= k || to >= k {
                        return Err(Error::Config(format!(
                            "pairflip map entry {from} -> {to} references class >= K = {k}"
                        )));
                    }
                    if from == to {
                        return Err(Error::Config(format!(
                            "pairflip map has fixed point {from} -> {to}"
                        )));
                    }
                }
            }
            NoiseSpec::Groupshift { eta, groups } => {
                check_rate_below_half(*eta)?;
                let mut seen = vec![false; k];
                for group in groups {
                    for &class in group {
                        if class >= k {
                            return Err(Error::Config(format!(
                                "groupshift references class {class} >= K = {k}"
                            )));
                        }
                        if seen[class] {
                            return Err(Error::Config(format!(
                                "groupshift lists class {class} twice"
                            )));
                        }
                        seen[class] = true;
                    }
                }
                if seen.iter().any(|&s| !s) {
                    return Err(Error::Config(
                        "groupshift groups must partition all classes".into(),
                    ));
                }
            }
            NoiseSpec::Instance {
                eta_mean, eta_std, ..
            } => {
                if !eta_mean.is_finite() || *eta_mean < 0.0 || *eta_mean >= 1.0 {
                    return Err(Error::Config(format!(
                        "instance noise requires 0 <= eta_mean < 1, got {eta_mean}"
                    )));
                }
                if !eta_std.is_finite() || *eta_std < 0.0 {
                    return Err(Error::Config(format!(
                        "instance noise requires eta_std >= 0, got {eta_std}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Cyclic successor table for groupshift; identity for singleton groups.
    fn successor_table(groups: &[Vec<usize>], k: usize) -> Vec<usize> {
        let mut succ: Vec<usize> = (0..k).collect();
        for group in groups {
            if group.len() < 2 {
                continue;
            }
            for (pos, &class) in group.iter().enumerate() {
                succ[class] = group[(pos + 1) % group.len()];
            }
        }
        succ
    }
}

fn check_rate_below_half(eta: f64) -> Result<()> {
    if !eta.is_finite() || !(0.0..0.5).contains(&eta) {
        return Err(Error::Config(format!(
            "flip rate must satisfy 0 <= eta < 0.5, got {eta}"
        )));
    }
    Ok(())
}

/// Corrupts observed labels under the given noise process; clean labels are
/// preserved.
///
/// Requires the input to be clean (observed = clean). Deterministic given
/// the seed: sample i uses `substream(seed, i)`.
pub fn inject(dataset: &Dataset, spec: &NoiseSpec, seed: u64) -> Result<Dataset> {
    spec.validate(dataset.k)?;
    require_clean(dataset)?;
    if let NoiseSpec::Instance { .. } = spec {
        return inject_instance(dataset, spec, seed);
    }
    let k = dataset.k;
    let succ = match spec {
        NoiseSpec::Groupshift { groups, .. } => Some(NoiseSpec::successor_table(groups, k)),
        _ => None,
    };
    let mut samples = Vec::with_capacity(dataset.len());
    for (i, sample) in dataset.samples.iter().enumerate() {
        let mut rng = substream(seed, i as u64);
        let y = sample.clean_label.index();
        let observed = match spec {
            NoiseSpec::Symmetric { eta } => {
                let flip = rng.next_f64() < *eta;
                let slot = rng.next_index(k - 1); // drawn unconditionally: 2 draws/sample
                if flip {
                    if slot < y {
                        slot
                    } else {
                        slot + 1
                    }
                } else {
                    y
                }
            }
            NoiseSpec::Pairflip { eta, flip_map } => {
                let flip = rng.next_f64() < *eta;
                match flip_map.get(&y) {
                    Some(&target) if flip => target,
                    _ => y,
                }
            }
            NoiseSpec::Groupshift { eta, .. } => {
                let flip = rng.next_f64() < *eta;
                let target = succ.as_ref().expect("groupshift table")[y];
                if flip && target != y {
                    target
                } else {
                    y
                }
            }
            NoiseSpec::Instance { .. } => unreachable!(),
        };
        samples.push(sample.with_observed(ClassLabel::new(observed, k)?));
    }
    Dataset::new(samples, k, dataset.feature_dim)
}

/// Instance-dependent injection: per-sample rate, feature-correlated target.
///
/// The projection matrix is K x feature_dim with standard-normal entries
/// drawn row-major from `SplitMix64::new(projection_seed)`. Sample i then
/// draws, from `substream(seed, i)`: one normal (rate), one uniform (flip
/// decision), one uniform (target choice from the softmax over projected
/// scores of classes != y).
pub fn inject_instance(dataset: &Dataset, spec: &NoiseSpec, seed: u64) -> Result<Dataset> {
    let NoiseSpec::Instance {
        eta_mean,
        eta_std,
        projection_seed,
    } = spec
    else {
        return Err(Error::Config(
            "inject_instance requires an instance-kind noise spec".into(),
        ));
    };
    spec.validate(dataset.k)?;
    require_clean(dataset)?;
    let k = dataset.k;
    let dim = dataset.feature_dim;
    let mut proj_rng = SplitMix64::new(*projection_seed);
    let projection: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| proj_rng.next_normal()).collect())
        .collect();

    let mut samples = Vec::with_capacity(dataset.len());
    for (i, sample) in dataset.samples.iter().enumerate() {
        let mut rng = substream(seed, i as u64);
        let rate = (eta_mean + eta_std * rng.next_normal()).clamp(0.0, 1.0 - 1e-9);
        let flip = rng.next_f64() < rate;
        let u_target = rng.next_f64();
        let y = sample.clean_label.index();
        let observed = if flip {
            let scores: Vec<f64> = projection
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&sample.features)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
                })
                .collect();
            sample_excluding(&scores, y, u_target)
        } else {
            y
        };
        samples.push(sample.with_observed(ClassLabel::new(observed, k)?));
    }
    Dataset::new(samples, k, dim)
}

/// Draws a class != excluded from the softmax of scores restricted to the rest.
fn sample_excluding(scores: &[f64], excluded: usize, u: f64) -> usize {
    let classes: Vec<usize> = (0..scores.len()).filter(|&c| c != excluded).collect();
    let restricted: Vec<f64> = classes.iter().map(|&c| scores[c]).collect();
    let probs = softmax_slice(&restricted);
    let mut acc = 0.0;
    for (idx, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return classes[idx];
        }
    }
    *classes.last().expect("K >= 2 leaves at least one class")
}

fn require_clean(dataset: &Dataset) -> Result<()> {
    if dataset.samples.iter().any(|s| s.flipped) {
        return Err(Error::InvalidInput(
            "injection input must be clean (observed = clean)".into(),
        ));
    }
    Ok(())
}

/// Exact class-conditional transition matrix, entry [y][k] = P(observed = k | clean = y).
pub fn transition_matrix(spec: &NoiseSpec, k: usize) -> Result<Vec<Vec<f64>>> {
    spec.validate(k)?;
    let mut m = vec![vec![0.0; k]; k];
    match spec {
        NoiseSpec::Symmetric { eta } => {
            let off = eta / (k as f64 - 1.0);
            for (y, row) in m.iter_mut().enumerate() {
                for (c, cell) in row.iter_mut().enumerate() {
                    *cell = if c == y { 1.0 - eta } else { off };
                }
            }
        }
        NoiseSpec::Pairflip { eta, flip_map } => {
            for (y, row) in m.iter_mut().enumerate() {
                match flip_map.get(&y) {
                    Some(&target) => {
                        row[y] = 1.0 - eta;
                        row[target] = *eta;
                    }
                    None => row[y] = 1.0,
                }
            }
        }
        NoiseSpec::Groupshift { eta, groups } => {
            let succ = NoiseSpec::successor_table(groups, k);
            for (y, row) in m.iter_mut().enumerate() {
                if succ[y] == y {
                    row[y] = 1.0;
                } else {
                    row[y] = 1.0 - eta;
                    row[succ[y]] = *eta;
                }
            }
        }
        NoiseSpec::Instance { .. } => {
            return Err(Error::NoAnalyticMatrix(
                "instance-dependent noise has per-sample rates; use empirical_rates".into(),
            ));
        }
    }
    Ok(m)
}

/// Empirical transition frequencies from an aligned clean/noisy dataset pair.
///
/// Returns the K x K frequency matrix (rows normalized by clean-class counts;
/// empty rows stay zero) and the per-row counts.
pub fn empirical_rates(clean: &Dataset, noisy: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if clean.len() != noisy.len() || clean.k != noisy.k {
        return Err(Error::InvalidInput(format!(
            "datasets misaligned: {} x K={} vs {} x K={}",
            clean.len(),
            clean.k,
            noisy.len(),
            noisy.k
        )));
    }
    let k = clean.k;
    let mut counts = vec![vec![0usize; k]; k];
    for (a, b) in clean.samples.iter().zip(&noisy.samples) {
        if a.clean_label != b.clean_label {
            return Err(Error::InvalidInput(
                "datasets misaligned: clean labels differ at matching index".into(),
            ));
        }
        counts[b.clean_label.index()][b.observed_label.index()] += 1;
    }
    let row_counts: Vec<usize> = counts.iter().map(|row| row.iter().sum()).collect();
    let freq = counts
        .iter()
        .zip(&row_counts)
        .map(|(row, &n)| {
            row.iter()
                .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                .collect()
        })
        .collect();
    Ok((freq, row_counts))
}

/// Analytic matrix (when available), empirical frequencies, and their gap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionReport {
    pub matrix: Option<Vec<Vec<f64>>>,
    pub empirical_matrix: Vec<Vec<f64>>,
    pub row_counts: Vec<usize>,
    pub max_abs_diff: Option<f64>,
}

/// Builds the full report for a clean/noisy pair under a noise spec.
pub fn transition_report(
    spec: &NoiseSpec,
    clean: &Dataset,
    noisy: &Dataset,
) -> Result<TransitionReport> {
    let (empirical, row_counts) = empirical_rates(clean, noisy)?;
    let matrix = match transition_matrix(spec, clean.k) {
        Ok(m) => Some(m),
        Err(Error::NoAnalyticMatrix(_)) => None,
        Err(e) => return Err(e),
    };
    let max_abs_diff = matrix.as_ref().map(|m| {
        m.iter()
            .zip(&empirical)
            .zip(&row_counts)
            .filter(|(_, &n)| n > 0)
            .flat_map(|((mrow, erow), _)| {
                mrow.iter().zip(erow).map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    });
    Ok(TransitionReport {
        matrix,
        empirical_matrix: empirical,
        row_counts,
        max_abs_diff,
    })
}
