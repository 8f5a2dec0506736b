//! Experiment orchestration: configs, data sources, run records, comparisons.

pub mod compare;
pub mod config;
pub mod idx;
pub mod runner;
pub mod synth;

pub use compare::{compare_runs, describe_loss, describe_noise, ComparisonTable};
pub use config::{DatasetSource, ExperimentConfig};
pub use idx::{load_idx, write_idx};
pub use runner::{load_dataset, load_train_test, run_experiment, RunRecord};
pub use synth::{synth_dataset, SynthKind};

use crate::error::Error;
use crate::losses::{make_jal, JalFlavor, LossSpec};
use crate::Result;

/// Loss parameters settable from the command line.
#[derive(Debug, Clone, Copy)]
pub struct LossParams {
    pub gamma: f64,
    pub a: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub log_zero: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            a: 30.0,
            q: 2.0,
            alpha: 1.0,
            beta: 1.0,
            log_zero: -4.0,
        }
    }
}

/// Resolves a loss name ("ce", "fl", "mae", "mse", "rce", "nce", "nfl",
/// "amse", "jal-ce", "jal-fl") plus parameters into a spec.
pub fn parse_loss(name: &str, params: &LossParams) -> Result<LossSpec> {
    let spec = match name.to_ascii_lowercase().replace('_', "-").as_str() {
        "ce" => LossSpec::Ce,
        "fl" => LossSpec::Fl {
            gamma: params.gamma,
        },
        "mae" => LossSpec::Mae,
        "mse" => LossSpec::Mse,
        "rce" => LossSpec::Rce {
            log_zero: params.log_zero,
        },
        "nce" => LossSpec::nce(),
        "nfl" => LossSpec::nfl(params.gamma),
        "amse" => LossSpec::Amse {
            a: params.a,
            q: params.q,
        },
        "jal-ce" => make_jal(
            JalFlavor::Ce,
            params.alpha,
            params.beta,
            params.a,
            params.gamma,
        )?,
        "jal-fl" => make_jal(
            JalFlavor::Fl,
            params.alpha,
            params.beta,
            params.a,
            params.gamma,
        )?,
        other => {
            return Err(Error::Config(format!(
                "unknown loss '{other}' (expected ce, fl, mae, mse, rce, nce, nfl, amse, jal-ce, jal-fl)"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}
