//! Experiment execution and persistent run records.
//!
//! Each run writes a self-describing directory
//! `outputs/<run-id>/{config.json, metrics.csv, histograms.json,
//! transition.json, record.json}`; replaying the embedded config reproduces
//! the metrics exactly (the duration field is the one exception).

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::harness::config::{DatasetSource, ExperimentConfig};
use crate::harness::idx::load_idx;
use crate::harness::synth::synth_dataset;
use crate::noise::{inject, transition_report, TransitionReport};
use crate::rng::substream;
use crate::simplex::Dataset;
use crate::trainer::{train, TrainReport};
use crate::Result;

/// Stream index reserved for deriving the noise-injection seed from the run
/// seed (keeps it disjoint from the trainer's shuffle and init streams).
const NOISE_SEED_STREAM: u64 = (1 << 62) + 1;

/// Everything a finished run leaves behind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub config: ExperimentConfig,
    pub report: TrainReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionReport>,
    pub duration_secs: f64,
    pub artifact_version: String,
}

/// Materializes a dataset source.
pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Synthetic {
            kind,
            n,
            k,
            feature_dim,
            separation,
            seed,
        } => synth_dataset(*kind, *n, *k, *feature_dim, *separation, *seed),
        DatasetSource::File { path } => {
            let raw = std::fs::read(path)?;
            let ds: Dataset = serde_json::from_slice(&raw)?;
            ds.validate()?;
            Ok(ds)
        }
        DatasetSource::Idx { images, labels } => load_idx(images, labels),
    }
}

/// Builds the train/test pair for a config.
///
/// Synthetic sources without an explicit test set draw an independent test
/// set from `seed + 1`; file/IDX sources are split by a seeded shuffle.
pub fn load_train_test(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    if let Some(test_source) = &config.test_dataset {
        return Ok((load_dataset(&config.dataset)?, load_dataset(test_source)?));
    }
    match &config.dataset {
        DatasetSource::Synthetic {
            kind,
            n,
            k,
            feature_dim,
            separation,
            seed,
        } => {
            let test_n = ((*n as f64 * config.test_fraction).round() as usize).max(*k);
            let train = synth_dataset(*kind, *n, *k, *feature_dim, *separation, *seed)?;
            let test = synth_dataset(*kind, test_n, *k, *feature_dim, *separation, seed + 1)?;
            Ok((train, test))
        }
        other => {
            let full = load_dataset(other)?;
            if !(0.0..1.0).contains(&config.test_fraction) || config.test_fraction == 0.0 {
                return Err(Error::Config(format!(
                    "test_fraction must be in (0, 1), got {}",
                    config.test_fraction
                )));
            }
            let mut order: Vec<usize> = (0..full.len()).collect();
            substream(config.opt.seed, NOISE_SEED_STREAM + 1).shuffle(&mut order);
            let n_test = ((full.len() as f64 * config.test_fraction).round() as usize)
                .clamp(1, full.len() - 1);
            let test_idx = &order[..n_test];
            let train_idx = &order[n_test..];
            let pick = |idx: &[usize]| {
                Dataset::new(
                    idx.iter().map(|&i| full.samples[i].clone()).collect(),
                    full.k,
                    full.feature_dim,
                )
            };
            Ok((pick(train_idx)?, pick(test_idx)?))
        }
    }
}

/// Runs one experiment end-to-end and persists its record.
///
/// `original_config_bytes`, when given, is written verbatim as
/// `config.json` for auditability; otherwise the canonical serialization is
/// used. On any failure the partially written run directory is removed.
pub fn run_experiment(
    config: &ExperimentConfig,
    original_config_bytes: Option<&[u8]>,
) -> Result<RunRecord> {
    let started = Instant::now();
    config.opt.validate()?;
    config.loss.validate()?;
    let (clean_train, test_set) = load_train_test(config)?;

    let (train_set, transition) = match &config.noise {
        Some(noise_spec) => {
            let noise_seed = substream(config.opt.seed, NOISE_SEED_STREAM).next_u64();
            let noisy = inject(&clean_train, noise_spec, noise_seed)?;
            let report = transition_report(noise_spec, &clean_train, &noisy)?;
            (noisy, Some(report))
        }
        None => (clean_train, None),
    };

    let report = train(
        &train_set,
        &test_set,
        &config.mlp,
        &config.opt,
        &config.loss,
        &config.histogram_epochs_or_default(),
    )?;

    let record = RunRecord {
        run_id: config.run_id()?,
        config: config.clone(),
        report,
        transition,
        duration_secs: started.elapsed().as_secs_f64(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    persist_run(&record, original_config_bytes)?;
    Ok(record)
}

/// Writes the run directory; removes it wholesale if any step fails.
fn persist_run(record: &RunRecord, original_config_bytes: Option<&[u8]>) -> Result<()> {
    let dir = record.config.outputs.join(&record.run_id);
    let write_all = || -> Result<()> {
        std::fs::create_dir_all(&dir)?;
        match original_config_bytes {
            Some(bytes) => std::fs::write(dir.join("config.json"), bytes)?,
            None => std::fs::write(
                dir.join("config.json"),
                record.config.canonical_json()?,
            )?,
        }
        std::fs::write(dir.join("metrics.csv"), metrics_csv(&record.report))?;
        std::fs::write(
            dir.join("histograms.json"),
            serde_json::to_string_pretty(&record.report.histograms)?,
        )?;
        if let Some(t) = &record.transition {
            std::fs::write(dir.join("transition.json"), serde_json::to_string_pretty(t)?)?;
        }
        std::fs::write(
            dir.join("record.json"),
            serde_json::to_string_pretty(record)?,
        )?;
        Ok(())
    };
    if let Err(e) = write_all() {
        std::fs::remove_dir_all(&dir).ok();
        return Err(e);
    }
    Ok(())
}

/// Returns the run directory for a persisted record.
pub fn run_dir(record: &RunRecord) -> PathBuf {
    record.config.outputs.join(&record.run_id)
}

/// Per-epoch metrics as CSV.
pub fn metrics_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,lr,train_loss,train_acc_noisy,train_acc_clean,test_acc\n");
    for e in &report.per_epoch {
        out.push_str(&format!(
            "{},{:.8},{:.8},{:.6},{:.6},{:.6}\n",
            e.epoch, e.lr, e.train_loss, e.train_acc_noisy, e.train_acc_clean, e.test_acc
        ));
    }
    out
}

/// Loads a persisted record from a run directory.
pub fn load_record(dir: &Path) -> Result<RunRecord> {
    let raw = std::fs::read(dir.join("record.json"))?;
    Ok(serde_json::from_slice(&raw)?)
}
