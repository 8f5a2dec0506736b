//! Deterministic MLP trainer with hand-written backpropagation.
//!
//! The backbone is a plain fully-connected network (ReLU hidden layers,
//! linear logits; losses apply softmax themselves). The optimizer is SGD
//! with momentum, L1 or L2 weight decay folded into the gradient, and a
//! per-epoch cosine-annealed learning rate:
//!
//! ```text
//! v <- momentum * v + g + decay(param);  param <- param - lr * v
//! lr(e) = lr0 * 0.5 * (1 + cos(pi * e / epochs))
//! ```
//!
//! Training is strictly sequential and fully seeded: weight init uses
//! `substream(seed, 2^62)` and the epoch-e shuffle uses `substream(seed, e)`,
//! so a fixed seed reproduces the run bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::losses::LossSpec;
use crate::rng::{substream, SplitMix64};
use crate::simplex::{softmax_slice, ClassLabel, Dataset};
use crate::Result;

const INIT_STREAM: u64 = 1 << 62;

/// Layer sizes input -> hidden... -> K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub layer_dims: Vec<usize>,
}

/// Dense network parameters; `weights[l]` is row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Weight-decay flavor; L1 adds wd * sign(param) to the gradient, L2 adds
/// wd * param.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    L1,
    L2,
}

/// Optimizer and loop hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub decay_kind: DecayKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lr0.is_finite() || self.lr0 <= 0.0 {
            return Err(Error::Config(format!("lr0 must be > 0, got {}", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::Config(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc_noisy: f64,
    pub train_acc_clean: f64,
    pub test_acc: f64,
}

/// Histogram of predicted probability at the observed label, split by
/// whether the observed label is clean or flipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionHistogram {
    pub epoch: usize,
    pub bins: usize,
    pub counts_clean: Vec<u64>,
    pub counts_flipped: Vec<u64>,
}

impl PredictionHistogram {
    /// Fraction of flipped samples whose predicted probability at the
    /// (wrong) observed label exceeds `threshold`. The memorization gauge.
    pub fn flipped_fraction_above(&self, threshold: f64) -> f64 {
        let total: u64 = self.counts_flipped.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let cut = (threshold * self.bins as f64).floor() as usize;
        let above: u64 = self.counts_flipped[cut.min(self.bins - 1)..].iter().sum();
        above as f64 / total as f64
    }
}

/// Full record of one training run; `final_test_acc` is the last epoch's
/// value, not the best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub per_epoch: Vec<EpochRecord>,
    pub final_test_acc: f64,
    pub histograms: Vec<PredictionHistogram>,
}

/// Parameter gradients, same shapes as [`MlpParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Momentum buffers.
#[derive(Debug, Clone)]
pub struct OptState {
    velocity_w: Vec<Vec<f64>>,
    velocity_b: Vec<Vec<f64>>,
}

impl OptState {
    pub fn zeros(params: &MlpParams) -> Self {
        Self {
            velocity_w: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            velocity_b: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

/// Glorot-uniform initialization: weights from
/// U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)), biases zero. Draw order is
/// layer-major, then row-major within a layer.
pub fn init_mlp(layer_dims: &[usize], seed: u64) -> Result<MlpParams> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!(
            "network needs >= 2 layer dims, got {}",
            layer_dims.len()
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::Config("layer dims must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let scale = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(
            (0..fan_in * fan_out)
                .map(|_| (2.0 * rng.next_f64() - 1.0) * scale)
                .collect(),
        );
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpParams {
        layer_dims: layer_dims.to_vec(),
        weights,
        biases,
    })
}

/// Forward pass to logits (no softmax).
pub fn forward(params: &MlpParams, features: &[f64]) -> Result<Vec<f64>> {
    if features.len() != params.layer_dims[0] {
        return Err(Error::InvalidInput(format!(
            "feature dim {} != input dim {}",
            features.len(),
            params.layer_dims[0]
        )));
    }
    let (_, _, logits) = forward_cached(params, features);
    Ok(logits)
}

/// Forward pass keeping layer activations and pre-activations for backprop.
/// Returns (activations per layer incl. input, pre-activations, logits).
fn forward_cached(params: &MlpParams, features: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let layers = params.weights.len();
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
    let mut pre_acts: Vec<Vec<f64>> = Vec::with_capacity(layers);
    activations.push(features.to_vec());
    for l in 0..layers {
        let fan_in = params.layer_dims[l];
        let fan_out = params.layer_dims[l + 1];
        let input = &activations[l];
        let mut z = params.biases[l].clone();
        for (o, zo) in z.iter_mut().enumerate().take(fan_out) {
            let row = &params.weights[l][o * fan_in..(o + 1) * fan_in];
            *zo += row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
        let act = if l + 1 == layers {
            z.clone() // linear output layer
        } else {
            z.iter().map(|&v| v.max(0.0)).collect()
        };
        pre_acts.push(z);
        activations.push(act);
    }
    let logits = activations.last().unwrap().clone();
    (activations, pre_acts, logits)
}

/// Mean-over-batch parameter gradients for the given loss.
pub fn backward(
    params: &MlpParams,
    batch: &[(&[f64], ClassLabel)],
    spec: &LossSpec,
) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("backward needs a non-empty batch".into()));
    }
    let layers = params.weights.len();
    let mut grads = Gradients {
        weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
        biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
    };
    for &(features, label) in batch {
        let (activations, pre_acts, logits) = forward_cached(params, features);
        let mut delta = spec.grad_logits(&logits, label)?;
        for l in (0..layers).rev() {
            let fan_in = params.layer_dims[l];
            let fan_out = params.layer_dims[l + 1];
            let input = &activations[l];
            for (o, &d) in delta.iter().enumerate().take(fan_out) {
                let row = &mut grads.weights[l][o * fan_in..(o + 1) * fan_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                grads.biases[l][o] += d;
            }
            if l > 0 {
                let mut prev = vec![0.0; fan_in];
                for (o, &d) in delta.iter().enumerate().take(fan_out) {
                    let row = &params.weights[l][o * fan_in..(o + 1) * fan_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                // ReLU mask from the previous layer's pre-activations.
                for (p, &z) in prev.iter_mut().zip(&pre_acts[l - 1]) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for tensor in grads.weights.iter_mut().chain(grads.biases.iter_mut()) {
        for g in tensor.iter_mut() {
            *g *= inv;
        }
    }
    Ok(grads)
}

/// One SGD step with momentum and weight decay (applied to all parameters).
pub fn sgd_step(
    params: &mut MlpParams,
    grads: &Gradients,
    state: &mut OptState,
    opt: &OptConfig,
    lr: f64,
) {
    let decay = |p: f64| -> f64 {
        match opt.decay_kind {
            DecayKind::L1 => opt.weight_decay * sign(p),
            DecayKind::L2 => opt.weight_decay * p,
        }
    };
    for l in 0..params.weights.len() {
        for (i, g) in grads.weights[l].iter().enumerate() {
            let v = &mut state.velocity_w[l][i];
            *v = opt.momentum * *v + g + decay(params.weights[l][i]);
            params.weights[l][i] -= lr * *v;
        }
        for (i, g) in grads.biases[l].iter().enumerate() {
            let v = &mut state.velocity_b[l][i];
            *v = opt.momentum * *v + g + decay(params.biases[l][i]);
            params.biases[l][i] -= lr * *v;
        }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Cosine-annealed learning rate at per-epoch granularity.
pub fn cosine_lr(epoch: usize, total_epochs: usize, lr0: f64) -> f64 {
    debug_assert!(epoch < total_epochs);
    lr0 * 0.5 * (1.0 + (std::f64::consts::PI * epoch as f64 / total_epochs as f64).cos())
}

/// Runs the full training loop; deterministic given `opt.seed`.
/// Histogram snapshots are taken at the end of each epoch listed in
/// `histogram_epochs`.
pub fn train(
    train_set: &Dataset,
    test_set: &Dataset,
    mlp: &MlpConfig,
    opt: &OptConfig,
    spec: &LossSpec,
    histogram_epochs: &[usize],
) -> Result<TrainReport> {
    opt.validate()?;
    spec.validate()?;
    train_set.validate()?;
    test_set.validate()?;
    if train_set.k != test_set.k || train_set.feature_dim != test_set.feature_dim {
        return Err(Error::InvalidInput(
            "train and test sets must share K and feature_dim".into(),
        ));
    }
    if mlp.layer_dims.first() != Some(&train_set.feature_dim)
        || mlp.layer_dims.last() != Some(&train_set.k)
    {
        return Err(Error::Config(format!(
            "layer dims {:?} must run from feature_dim {} to K {}",
            mlp.layer_dims, train_set.feature_dim, train_set.k
        )));
    }
    if train_set.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }

    let mut params = init_mlp(&mlp.layer_dims, substream(opt.seed, INIT_STREAM).next_u64())?;
    let mut state = OptState::zeros(&params);
    let mut per_epoch = Vec::with_capacity(opt.epochs);
    let mut histograms = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..opt.epochs {
        let lr = cosine_lr(epoch, opt.epochs, opt.lr0);
        let mut shuffle_rng = substream(opt.seed, epoch as u64);
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(opt.batch_size) {
            let batch: Vec<(&[f64], ClassLabel)> = chunk
                .iter()
                .map(|&i| {
                    let s = &train_set.samples[i];
                    (s.features.as_slice(), s.observed_label)
                })
                .collect();
            let grads = backward(&params, &batch, spec)?;
            sgd_step(&mut params, &grads, &mut state, opt, lr);
        }

        let (train_loss, train_acc_noisy, train_acc_clean) =
            evaluate_train(&params, train_set, spec)?;
        let test_acc = accuracy_clean(&params, test_set)?;
        per_epoch.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            train_acc_noisy,
            train_acc_clean,
            test_acc,
        });
        if histogram_epochs.contains(&epoch) {
            histograms.push(probability_histogram(&params, train_set, 20, epoch)?);
        }
    }

    let final_test_acc = per_epoch.last().map(|e| e.test_acc).unwrap_or(0.0);
    Ok(TrainReport {
        per_epoch,
        final_test_acc,
        histograms,
    })
}

fn evaluate_train(
    params: &MlpParams,
    dataset: &Dataset,
    spec: &LossSpec,
) -> Result<(f64, f64, f64)> {
    let mut loss_sum = 0.0;
    let mut correct_noisy = 0usize;
    let mut correct_clean = 0usize;
    for s in &dataset.samples {
        let logits = forward(params, &s.features)?;
        let p = softmax_slice(&logits);
        loss_sum += spec.value_slice(&p, s.observed_label.index())?;
        let pred = argmax(&logits);
        if pred == s.observed_label.index() {
            correct_noisy += 1;
        }
        if pred == s.clean_label.index() {
            correct_clean += 1;
        }
    }
    let n = dataset.len() as f64;
    Ok((
        loss_sum / n,
        correct_noisy as f64 / n,
        correct_clean as f64 / n,
    ))
}

fn accuracy_clean(params: &MlpParams, dataset: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for s in &dataset.samples {
        let logits = forward(params, &s.features)?;
        if argmax(&logits) == s.clean_label.index() {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Bins the predicted probability at each training sample's observed label,
/// split into clean and flipped subsets.
pub fn probability_histogram(
    params: &MlpParams,
    dataset: &Dataset,
    bins: usize,
    epoch: usize,
) -> Result<PredictionHistogram> {
    if bins == 0 {
        return Err(Error::Config("histogram needs >= 1 bin".into()));
    }
    let mut counts_clean = vec![0u64; bins];
    let mut counts_flipped = vec![0u64; bins];
    for s in &dataset.samples {
        let logits = forward(params, &s.features)?;
        let p = softmax_slice(&logits);
        let prob = p[s.observed_label.index()];
        let bin = ((prob * bins as f64) as usize).min(bins - 1);
        if s.flipped {
            counts_flipped[bin] += 1;
        } else {
            counts_clean[bin] += 1;
        }
    }
    Ok(PredictionHistogram {
        epoch,
        bins,
        counts_clean,
        counts_flipped,
    })
}

/// Outcome of the analytic-vs-finite-difference gradient sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_err_prob: f64,
    pub max_rel_err_logits: f64,
    pub points_checked: usize,
    /// Points skipped because they sit on a non-differentiable kink
    /// (AMSE with q <= 1 exactly at p_k = a * e_k).
    pub points_skipped: usize,
}

/// Compares analytic gradients against central finite differences at both
/// the probability level and through softmax, on random interior points.
/// Relative error per point is max_j |g_j - fd_j| / max(1, ||g||_inf).
pub fn gradient_check(
    spec: &LossSpec,
    trials: usize,
    ks: &[usize],
    seed: u64,
) -> Result<GradCheckReport> {
    if trials < 10 {
        return Err(Error::Config(format!(
            "gradient check needs >= 10 trials, got {trials}"
        )));
    }
    spec.validate()?;
    let step = 1e-6;
    let mut rng = SplitMix64::new(seed);
    let mut report = GradCheckReport {
        max_rel_err_prob: 0.0,
        max_rel_err_logits: 0.0,
        points_checked: 0,
        points_skipped: 0,
    };
    for &k in ks {
        for _ in 0..trials {
            // Interior point: mix toward uniform so every entry stays >= 0.1/K.
            let mut p = rng.next_simplex(k);
            for v in &mut p {
                *v = 0.9 * *v + 0.1 / k as f64;
            }
            let y = rng.next_index(k);
            if near_kink(spec, &p, y, 10.0 * step) {
                report.points_skipped += 1;
                continue;
            }
            let analytic = spec.grad_p_slice(&p, y)?;
            let mut err = 0.0f64;
            let scale = analytic.iter().map(|g| g.abs()).fold(1.0f64, f64::max);
            for j in 0..k {
                let mut hi = p.clone();
                let mut lo = p.clone();
                hi[j] += step;
                lo[j] -= step;
                let fd = (spec.value_slice(&hi, y)? - spec.value_slice(&lo, y)?) / (2.0 * step);
                err = err.max((analytic[j] - fd).abs() / scale);
            }
            report.max_rel_err_prob = report.max_rel_err_prob.max(err);

            // No kink gate here: softmax outputs stay strictly inside (0, 1),
            // so a logit step never crosses an |.| kink.
            let logits: Vec<f64> = (0..k).map(|_| 2.0 * rng.next_normal()).collect();
            let analytic_z = spec.grad_logits(&logits, ClassLabel::new(y, k)?)?;
            let scale_z = analytic_z.iter().map(|g| g.abs()).fold(1.0f64, f64::max);
            let mut err_z = 0.0f64;
            for j in 0..k {
                let mut hi = logits.clone();
                let mut lo = logits.clone();
                hi[j] += step;
                lo[j] -= step;
                let f_hi = spec.value_slice(&softmax_slice(&hi), y)?;
                let f_lo = spec.value_slice(&softmax_slice(&lo), y)?;
                let fd = (f_hi - f_lo) / (2.0 * step);
                err_z = err_z.max((analytic_z[j] - fd).abs() / scale_z);
            }
            report.max_rel_err_logits = report.max_rel_err_logits.max(err_z);
            report.points_checked += 1;
        }
    }
    Ok(report)
}

/// Detects proximity to a kink of any AMSE component with q <= 1.
fn near_kink(spec: &LossSpec, p: &[f64], y: usize, radius: f64) -> bool {
    match spec {
        LossSpec::Amse { a, q } if *q <= 1.0 => p.iter().enumerate().any(|(j, &v)| {
            let target = if j == y { *a } else { 0.0 };
            (v - target).abs() < radius
        }),
        LossSpec::Mae => p.iter().enumerate().any(|(j, &v)| {
            let target = if j == y { 1.0 } else { 0.0 };
            (v - target).abs() < radius
        }),
        LossSpec::Normalized { base } => near_kink(base, p, y, radius),
        LossSpec::Apl {
            active, passive, ..
        } => near_kink(active, p, y, radius) || near_kink(passive, p, y, radius),
        _ => false,
    }
}
