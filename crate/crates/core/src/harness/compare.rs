//! Cross-run comparison tables (final accuracies per loss per noise setting).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::harness::config::DatasetSource;
use crate::harness::runner::RunRecord;
use crate::losses::LossSpec;
use crate::noise::NoiseSpec;
use crate::Result;

/// One (noise, loss) group aggregated over seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub noise: String,
    pub loss: String,
    pub runs: usize,
    pub mean_final_acc: f64,
    /// Sample standard deviation over seeds; 0 for a single run.
    pub std_final_acc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("noise,loss,runs,mean_final_acc,std_final_acc\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6}\n",
                r.noise, r.loss, r.runs, r.mean_final_acc, r.std_final_acc
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let noise_w = self
            .rows
            .iter()
            .map(|r| r.noise.len())
            .chain(["noise".len()])
            .max()
            .unwrap_or(5);
        let loss_w = self
            .rows
            .iter()
            .map(|r| r.loss.len())
            .chain(["loss".len()])
            .max()
            .unwrap_or(4);
        let mut out = format!(
            "{:<noise_w$}  {:<loss_w$}  runs  final acc (mean +/- std)\n",
            "noise", "loss"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<noise_w$}  {:<loss_w$}  {:>4}  {:.4} +/- {:.4}\n",
                r.noise, r.loss, r.runs, r.mean_final_acc, r.std_final_acc
            ));
        }
        out
    }
}

/// Aggregates run records into a table keyed by (noise, loss), sorted by
/// noise then loss name. Records must share the dataset shape (everything
/// except its seed); seeds may differ and feed the mean/std columns.
pub fn compare_runs(records: &[RunRecord]) -> Result<ComparisonTable> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no run records to compare".into()));
    }
    let reference = dataset_shape(&records[0].config.dataset);
    for r in records.iter().skip(1) {
        if dataset_shape(&r.config.dataset) != reference {
            return Err(Error::InvalidInput(format!(
                "runs cover different datasets: {:?} vs {:?}",
                dataset_shape(&r.config.dataset),
                reference
            )));
        }
    }
    let mut groups: std::collections::BTreeMap<(String, String), Vec<f64>> =
        std::collections::BTreeMap::new();
    for r in records {
        let key = (
            describe_noise(r.config.noise.as_ref()),
            describe_loss(&r.config.loss),
        );
        groups.entry(key).or_default().push(r.report.final_test_acc);
    }
    let rows = groups
        .into_iter()
        .map(|((noise, loss), accs)| {
            let n = accs.len();
            let mean = accs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            ComparisonRow {
                noise,
                loss,
                runs: n,
                mean_final_acc: mean,
                std_final_acc: std,
            }
        })
        .collect();
    Ok(ComparisonTable { rows })
}

/// Dataset identity modulo seed: different seeds over the same shape are the
/// same experiment repeated.
fn dataset_shape(source: &DatasetSource) -> String {
    match source {
        DatasetSource::Synthetic {
            kind,
            n,
            k,
            feature_dim,
            separation,
            ..
        } => format!("synthetic:{kind:?}:{n}:{k}:{feature_dim}:{separation}"),
        DatasetSource::File { path } => format!("file:{}", path.display()),
        DatasetSource::Idx { images, labels } => {
            format!("idx:{}:{}", images.display(), labels.display())
        }
    }
}

/// Sort-friendly noise description; "clean" sorts before any noise.
pub fn describe_noise(noise: Option<&NoiseSpec>) -> String {
    match noise {
        None => "clean".to_string(),
        Some(NoiseSpec::Symmetric { eta }) => format!("symmetric({eta:.2})"),
        Some(NoiseSpec::Pairflip { eta, .. }) => format!("pairflip({eta:.2})"),
        Some(NoiseSpec::Groupshift { eta, .. }) => format!("groupshift({eta:.2})"),
        Some(NoiseSpec::Instance {
            eta_mean, eta_std, ..
        }) => format!("instance({eta_mean:.2},{eta_std:.2})"),
    }
}

/// Compact human-readable loss name.
pub fn describe_loss(spec: &LossSpec) -> String {
    match spec {
        LossSpec::Ce => "CE".into(),
        LossSpec::Fl { gamma } => format!("FL(g={gamma})"),
        LossSpec::Mae => "MAE".into(),
        LossSpec::Mse => "MSE".into(),
        LossSpec::Rce { log_zero } => format!("RCE(A={log_zero})"),
        LossSpec::Amse { a, q } => format!("AMSE(a={a},q={q})"),
        LossSpec::Normalized { base } => match **base {
            LossSpec::Ce => "NCE".into(),
            LossSpec::Fl { gamma } => format!("NFL(g={gamma})"),
            ref other => format!("N[{}]", describe_loss(other)),
        },
        LossSpec::Apl {
            alpha,
            beta,
            active,
            passive,
        } => {
            // The JAL pairings get their published names.
            match (&**active, &**passive) {
                (LossSpec::Normalized { base }, LossSpec::Amse { a, .. })
                    if matches!(**base, LossSpec::Ce) =>
                {
                    format!("JAL-CE(a={alpha},b={beta},A={a})")
                }
                (LossSpec::Normalized { base }, LossSpec::Amse { a, .. })
                    if matches!(**base, LossSpec::Fl { .. }) =>
                {
                    format!("JAL-FL(a={alpha},b={beta},A={a})")
                }
                _ => format!(
                    "APL({}+{},a={alpha},b={beta})",
                    describe_loss(active),
                    describe_loss(passive)
                ),
            }
        }
    }
}
