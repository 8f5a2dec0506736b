//! Experiment configuration and run identity.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::harness::synth::SynthKind;
use crate::losses::LossSpec;
use crate::noise::NoiseSpec;
use crate::trainer::{MlpConfig, OptConfig};
use crate::Result;

/// Where the training data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetSource {
    Synthetic {
        kind: SynthKind,
        n: usize,
        k: usize,
        feature_dim: usize,
        separation: f64,
        seed: u64,
    },
    /// A dataset JSON file previously written by this tool.
    File { path: PathBuf },
    /// An IDX image/label pair.
    Idx { images: PathBuf, labels: PathBuf },
}

/// One experiment: data, optional corruption, loss, model, optimizer.
///
/// All seeds are explicit; nothing reads the wall clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Held-out set; defaults to an independent synthetic draw when absent
    /// and the dataset is synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_dataset: Option<DatasetSource>,
    /// Fraction of `dataset` held out for testing when no test set is given
    /// (file/IDX sources); split is seeded by `opt.seed`.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    pub loss: LossSpec,
    pub mlp: MlpConfig,
    pub opt: OptConfig,
    pub outputs: PathBuf,
    /// Epochs at which to snapshot prediction histograms; defaults to the
    /// final epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_epochs: Option<Vec<usize>>,
}

fn default_test_fraction() -> f64 {
    0.2
}

impl ExperimentConfig {
    /// Canonical JSON used for hashing and persisted snapshots.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Content-addressed run id: FNV-1a 64 over the canonical JSON (the
    /// seed lives inside `opt`, so reruns of the same config collide on
    /// purpose and different seeds do not).
    pub fn run_id(&self) -> Result<String> {
        Ok(format!("{:016x}", fnv1a64(self.canonical_json()?.as_bytes())))
    }

    pub fn histogram_epochs_or_default(&self) -> Vec<usize> {
        self.histogram_epochs
            .clone()
            .unwrap_or_else(|| vec![self.opt.epochs.saturating_sub(1)])
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
