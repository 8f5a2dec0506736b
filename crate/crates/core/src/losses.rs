//! The loss zoo: closed-form values and analytic gradients.
//!
//! Elementary kinds:
//!
//! - `CE`   = -log p_y (active)
//! - `FL`   = -(1 - p_y)^gamma * log p_y (active)
//! - `MAE`  = sum_k |e_k - p_k| = 2(1 - p_y) on the simplex (passive, symmetric)
//! - `MSE`  = AMSE with a = 1, q = 2 (passive)
//! - `RCE`  = -A * sum_{k != y} p_k, the reverse cross entropy with log 0
//!   replaced by the constant A < 0; equals (-A/2) * MAE (passive, symmetric)
//! - `AMSE` = (1/K) * sum_k |a * e_k - p_k|^q with a >= 1, q > 0 (passive)
//!
//! Combinators:
//!
//! - `Normalized(base)` = base(p, y) / sum_k base(p, k); its per-class row
//!   always sums to 1, which makes any base symmetric. Normalizing CE and FL
//!   gives NCE and NFL.
//! - `Apl(active, passive)` = alpha * active + beta * passive. JAL-CE pairs
//!   NCE with AMSE; JAL-FL pairs NFL with AMSE.
//!
//! Evaluation accepts raw slices in a neighborhood of the simplex (the
//! `*_slice` methods) so that finite-difference checks can perturb single
//! coordinates. Log-based kinds floor probabilities at [`CLAMP_EPS`] without
//! renormalizing; polynomial kinds (MAE/MSE/RCE/AMSE) are evaluated as-is.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::simplex::{softmax_slice, ClassLabel, ProbVector, CLAMP_EPS};
use crate::Result;

/// Activity/passivity/symmetry classification of an elementary loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossTaxonomy {
    /// Only the labeled class's probability appears in the per-coordinate terms.
    pub is_active: bool,
    /// At least one non-label coordinate contributes.
    pub is_passive: bool,
    /// The per-class row sums to a constant independent of p.
    pub is_symmetric: bool,
}

/// A closed description of a loss function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum LossSpec {
    Ce,
    Fl {
        gamma: f64,
    },
    Mae,
    Mse,
    Rce {
        /// Substitute for log 0; conventionally -4.
        log_zero: f64,
    },
    Normalized {
        base: Box<LossSpec>,
    },
    Amse {
        a: f64,
        q: f64,
    },
    Apl {
        alpha: f64,
        beta: f64,
        active: Box<LossSpec>,
        passive: Box<LossSpec>,
    },
}

/// Base loss selector for the JAL combinator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JalFlavor {
    Ce,
    Fl,
}

impl LossSpec {
    /// Normalized cross entropy.
    pub fn nce() -> Self {
        LossSpec::Normalized {
            base: Box::new(LossSpec::Ce),
        }
    }

    /// Normalized focal loss.
    pub fn nfl(gamma: f64) -> Self {
        LossSpec::Normalized {
            base: Box::new(LossSpec::Fl { gamma }),
        }
    }

    /// RCE with the conventional log-zero substitute A = -4.
    pub fn rce_default() -> Self {
        LossSpec::Rce { log_zero: -4.0 }
    }

    /// Checks every parameter against its documented domain.
    pub fn validate(&self) -> Result<()> {
        match self {
            LossSpec::Ce | LossSpec::Mae | LossSpec::Mse => Ok(()),
            LossSpec::Fl { gamma } => {
                if !gamma.is_finite() || *gamma < 0.0 {
                    return Err(Error::Config(format!("FL gamma must be >= 0, got {gamma}")));
                }
                Ok(())
            }
            LossSpec::Rce { log_zero } => {
                if !log_zero.is_finite() || *log_zero >= 0.0 {
                    return Err(Error::Config(format!(
                        "RCE log-zero substitute must be < 0, got {log_zero}"
                    )));
                }
                Ok(())
            }
            LossSpec::Amse { a, q } => {
                if !a.is_finite() || *a < 1.0 {
                    return Err(Error::Config(format!("AMSE requires a >= 1, got {a}")));
                }
                if !q.is_finite() || *q <= 0.0 {
                    return Err(Error::Config(format!("AMSE requires q > 0, got {q}")));
                }
                Ok(())
            }
            LossSpec::Normalized { base } => {
                // Restricting the base to elementary kinds keeps the
                // denominator row strictly positive on (floored) inputs.
                if matches!(**base, LossSpec::Normalized { .. } | LossSpec::Apl { .. }) {
                    return Err(Error::Config(
                        "normalization base must be an elementary loss".into(),
                    ));
                }
                base.validate()
            }
            LossSpec::Apl {
                alpha,
                beta,
                active,
                passive,
            } => {
                if !alpha.is_finite() || *alpha <= 0.0 || !beta.is_finite() || *beta <= 0.0 {
                    return Err(Error::Config(format!(
                        "APL weights must be > 0, got alpha = {alpha}, beta = {beta}"
                    )));
                }
                if matches!(**active, LossSpec::Apl { .. })
                    || matches!(**passive, LossSpec::Apl { .. })
                {
                    return Err(Error::Config("APL components cannot be nested APLs".into()));
                }
                active.validate()?;
                passive.validate()?;
                let a_tax = active.taxonomy().expect("non-APL component");
                let p_tax = passive.taxonomy().expect("non-APL component");
                if !a_tax.is_active {
                    return Err(Error::Config(
                        "APL active slot requires an active loss (CE, FL, NCE, NFL)".into(),
                    ));
                }
                if !p_tax.is_passive {
                    return Err(Error::Config(
                        "APL passive slot requires a passive loss (MAE, MSE, RCE, AMSE)".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Classification of an elementary loss; `None` for APL combinations.
    pub fn taxonomy(&self) -> Option<LossTaxonomy> {
        let (is_active, is_symmetric) = match self {
            LossSpec::Ce | LossSpec::Fl { .. } => (true, false),
            LossSpec::Mae => (false, true),
            LossSpec::Mse => (false, false),
            LossSpec::Rce { .. } => (false, true),
            // Row sums of AMSE collapse to a constant exactly at q = 1.
            LossSpec::Amse { q, .. } => (false, *q == 1.0),
            LossSpec::Normalized { base } => {
                (base.taxonomy().map(|t| t.is_active).unwrap_or(false), true)
            }
            LossSpec::Apl { .. } => return None,
        };
        Some(LossTaxonomy {
            is_active,
            is_passive: !is_active,
            is_symmetric,
        })
    }

    /// Loss value at a validated simplex point.
    pub fn value(&self, p: &ProbVector, y: ClassLabel) -> Result<f64> {
        if y.index() >= p.k() {
            return Err(Error::InvalidInput(format!(
                "label {} out of range for K = {}",
                y.index(),
                p.k()
            )));
        }
        self.value_slice(p.values(), y.index())
    }

    /// Loss value on a raw slice near the simplex.
    pub fn value_slice(&self, p: &[f64], y: usize) -> Result<f64> {
        let k = p.len();
        match self {
            LossSpec::Ce => Ok(-floor_prob(p[y]).ln()),
            LossSpec::Fl { gamma } => {
                let py = floor_prob(p[y]);
                Ok(-(1.0 - py).max(0.0).powf(*gamma) * py.ln())
            }
            LossSpec::Mae => Ok(p
                .iter()
                .enumerate()
                .map(|(j, &v)| (one_hot_entry(j, y) - v).abs())
                .sum()),
            LossSpec::Mse => Ok(amse_value(p, y, 1.0, 2.0)),
            LossSpec::Rce { log_zero } => {
                let off: f64 = p
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != y)
                    .map(|(_, &v)| v)
                    .sum();
                Ok(-log_zero * off)
            }
            LossSpec::Amse { a, q } => Ok(amse_value(p, y, *a, *q)),
            LossSpec::Normalized { base } => {
                let numerator = base.value_slice(p, y)?;
                let mut denom = 0.0;
                for class in 0..k {
                    denom += base.value_slice(p, class)?;
                }
                if denom <= 0.0 || !denom.is_finite() {
                    return Err(Error::Numeric(format!(
                        "normalization denominator {denom} is not positive"
                    )));
                }
                Ok(numerator / denom)
            }
            LossSpec::Apl {
                alpha,
                beta,
                active,
                passive,
            } => Ok(alpha * active.value_slice(p, y)? + beta * passive.value_slice(p, y)?),
        }
    }

    /// Per-class row: entry k is the loss with label k at the same p.
    pub fn row(&self, p: &ProbVector) -> Result<Vec<f64>> {
        (0..p.k()).map(|c| self.value_slice(p.values(), c)).collect()
    }

    /// Analytic gradient with respect to the probability entries.
    pub fn grad_p(&self, p: &ProbVector, y: ClassLabel) -> Result<Vec<f64>> {
        if y.index() >= p.k() {
            return Err(Error::InvalidInput(format!(
                "label {} out of range for K = {}",
                y.index(),
                p.k()
            )));
        }
        self.grad_p_slice(p.values(), y.index())
    }

    /// Gradient on a raw slice near the simplex.
    pub fn grad_p_slice(&self, p: &[f64], y: usize) -> Result<Vec<f64>> {
        let k = p.len();
        match self {
            LossSpec::Ce => {
                let mut g = vec![0.0; k];
                // The floored value function is flat below the clamp.
                g[y] = if p[y] > CLAMP_EPS { -1.0 / p[y] } else { 0.0 };
                Ok(g)
            }
            LossSpec::Fl { gamma } => {
                let mut g = vec![0.0; k];
                g[y] = if p[y] <= CLAMP_EPS {
                    0.0
                } else {
                    let py = p[y];
                    let rest = (1.0 - py).max(0.0);
                    if rest == 0.0 {
                        0.0
                    } else {
                        gamma * rest.powf(gamma - 1.0) * py.ln() - rest.powf(*gamma) / py
                    }
                };
                Ok(g)
            }
            LossSpec::Mae => Ok((0..k)
                .map(|j| sign(p[j] - one_hot_entry(j, y)))
                .collect()),
            LossSpec::Mse => amse_grad(p, y, 1.0, 2.0),
            LossSpec::Rce { log_zero } => {
                Ok((0..k).map(|j| if j == y { 0.0 } else { -log_zero }).collect())
            }
            LossSpec::Amse { a, q } => amse_grad(p, y, *a, *q),
            LossSpec::Normalized { base } => {
                let mut values = Vec::with_capacity(k);
                let mut denom = 0.0;
                for class in 0..k {
                    let v = base.value_slice(p, class)?;
                    denom += v;
                    values.push(v);
                }
                if denom <= 0.0 || !denom.is_finite() {
                    return Err(Error::Numeric(format!(
                        "normalization denominator {denom} is not positive"
                    )));
                }
                // Quotient rule: d(B_y/S) = (dB_y * S - B_y * dS) / S^2.
                let mut denom_grad = vec![0.0; k];
                let mut numerator_grad = vec![0.0; k];
                for class in 0..k {
                    let g = base.grad_p_slice(p, class)?;
                    for j in 0..k {
                        denom_grad[j] += g[j];
                    }
                    if class == y {
                        numerator_grad = g;
                    }
                }
                Ok((0..k)
                    .map(|j| {
                        (numerator_grad[j] * denom - values[y] * denom_grad[j]) / (denom * denom)
                    })
                    .collect())
            }
            LossSpec::Apl {
                alpha,
                beta,
                active,
                passive,
            } => {
                let ga = active.grad_p_slice(p, y)?;
                let gp = passive.grad_p_slice(p, y)?;
                Ok(ga
                    .iter()
                    .zip(&gp)
                    .map(|(a_j, p_j)| alpha * a_j + beta * p_j)
                    .collect())
            }
        }
    }

    /// Gradient with respect to logits, chained through softmax:
    /// g_j = p_j * (dL/dp_j - sum_i dL/dp_i * p_i).
    pub fn grad_logits(&self, logits: &[f64], y: ClassLabel) -> Result<Vec<f64>> {
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("logits must be finite".into()));
        }
        if y.index() >= logits.len() {
            return Err(Error::InvalidInput(format!(
                "label {} out of range for K = {}",
                y.index(),
                logits.len()
            )));
        }
        let p = softmax_slice(logits);
        let gp = self.grad_p_slice(&p, y.index())?;
        let dot: f64 = gp.iter().zip(&p).map(|(g, pi)| g * pi).sum();
        Ok(p.iter().zip(&gp).map(|(pi, gi)| pi * (gi - dot)).collect())
    }
}

/// Builds a JAL spec: alpha * NCE + beta * AMSE (CE flavor) or
/// alpha * NFL + beta * AMSE (FL flavor), with the AMSE exponent fixed at 2.
pub fn make_jal(flavor: JalFlavor, alpha: f64, beta: f64, a: f64, gamma: f64) -> Result<LossSpec> {
    make_jal_with_q(flavor, alpha, beta, a, 2.0, gamma)
}

/// JAL with an explicit AMSE exponent q (2 is the standard choice).
pub fn make_jal_with_q(
    flavor: JalFlavor,
    alpha: f64,
    beta: f64,
    a: f64,
    q: f64,
    gamma: f64,
) -> Result<LossSpec> {
    let active = match flavor {
        JalFlavor::Ce => LossSpec::nce(),
        JalFlavor::Fl => LossSpec::nfl(gamma),
    };
    let spec = LossSpec::Apl {
        alpha,
        beta,
        active: Box::new(active),
        passive: Box::new(LossSpec::Amse { a, q }),
    };
    spec.validate()?;
    Ok(spec)
}

#[inline]
fn one_hot_entry(j: usize, y: usize) -> f64 {
    if j == y {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn floor_prob(v: f64) -> f64 {
    v.max(CLAMP_EPS)
}

/// Subgradient convention sign(0) = 0.
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

fn amse_value(p: &[f64], y: usize, a: f64, q: f64) -> f64 {
    let k = p.len() as f64;
    let sum: f64 = p
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let d = (a * one_hot_entry(j, y) - v).abs();
            pow_q(d, q)
        })
        .sum();
    sum / k
}

fn amse_grad(p: &[f64], y: usize, a: f64, q: f64) -> Result<Vec<f64>> {
    let k = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(j, &v)| {
            let d = v - a * one_hot_entry(j, y);
            if q < 1.0 && d == 0.0 {
                return Err(Error::GradientSingularity(format!(
                    "AMSE with q = {q} < 1 is non-differentiable at p_{j} = a * e_{j}"
                )));
            }
            Ok(q / k * sign(d) * pow_q(d.abs(), q - 1.0))
        })
        .collect()
}

#[inline]
fn pow_q(base: f64, q: f64) -> f64 {
    if q == 1.0 {
        base
    } else if q == 2.0 {
        base * base
    } else if q == 0.0 {
        1.0
    } else {
        base.powf(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::one_hot;
    use proptest::prelude::*;

    fn prob(values: &[f64]) -> ProbVector {
        ProbVector::new(values.to_vec()).unwrap()
    }

    fn label(i: usize, k: usize) -> ClassLabel {
        ClassLabel::new(i, k).unwrap()
    }

    /// Central finite differences on value_slice, independent of grad_p.
    fn fd_grad(spec: &LossSpec, p: &[f64], y: usize, h: f64) -> Vec<f64> {
        (0..p.len())
            .map(|j| {
                let mut hi = p.to_vec();
                let mut lo = p.to_vec();
                hi[j] += h;
                lo[j] -= h;
                (spec.value_slice(&hi, y).unwrap() - spec.value_slice(&lo, y).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn amse_perfect_prediction_is_zero() {
        let spec = LossSpec::Amse { a: 1.0, q: 2.0 };
        let p = one_hot(label(1, 3), 3).unwrap();
        assert_eq!(spec.value(&p, label(1, 3)).unwrap(), 0.0);
    }

    #[test]
    fn amse_two_class_hand_value() {
        // ((2 - 0.8)^2 + 0.2^2) / 2 = 0.74
        let spec = LossSpec::Amse { a: 2.0, q: 2.0 };
        let v = spec.value(&prob(&[0.8, 0.2]), label(0, 2)).unwrap();
        assert!((v - 0.74).abs() < 1e-12);
    }

    #[test]
    fn rce_is_scaled_mae() {
        // A = -4, p_y = 0.8: RCE = 4 * 0.2 = 0.8 = 2 * MAE.
        let rce = LossSpec::Rce { log_zero: -4.0 };
        let p = prob(&[0.8, 0.2]);
        let v = rce.value(&p, label(0, 2)).unwrap();
        assert!((v - 0.8).abs() < 1e-12);
        let mae = LossSpec::Mae.value(&p, label(0, 2)).unwrap();
        assert!((v - 2.0 * mae).abs() < 1e-12);
    }

    #[test]
    fn nce_two_class_hand_value() {
        // -ln 0.8 / (-ln 0.8 - ln 0.2) = 0.121764...
        let v = LossSpec::nce().value(&prob(&[0.8, 0.2]), label(0, 2)).unwrap();
        assert!((v - 0.121_763_8).abs() < 1e-6);
    }

    #[test]
    fn ce_row_at_uniform_is_log_k() {
        let p = prob(&[0.25; 4]);
        let row = LossSpec::Ce.row(&p).unwrap();
        for v in row {
            assert!((v - 4.0_f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn mae_row_sum_is_constant() {
        let mut rng = crate::rng::SplitMix64::new(17);
        for _ in 0..100 {
            let p = ProbVector::new(rng.next_simplex(3)).unwrap();
            let sum: f64 = LossSpec::Mae.row(&p).unwrap().iter().sum();
            assert!((sum - 4.0).abs() < 1e-9, "sum {sum}");
        }
    }

    #[test]
    fn normalized_row_sums_to_one() {
        let mut rng = crate::rng::SplitMix64::new(23);
        for spec in [LossSpec::nce(), LossSpec::nfl(0.5)] {
            for _ in 0..100 {
                let p = ProbVector::new(rng.next_simplex(5)).unwrap();
                let sum: f64 = spec.row(&p).unwrap().iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rce_equals_scaled_mae_pointwise() {
        let mut rng = crate::rng::SplitMix64::new(29);
        let rce = LossSpec::Rce { log_zero: -4.0 };
        for _ in 0..100 {
            let p = ProbVector::new(rng.next_simplex(6)).unwrap();
            for y in 0..6 {
                let lhs = rce.value(&p, label(y, 6)).unwrap();
                let rhs = 2.0 * LossSpec::Mae.value(&p, label(y, 6)).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mse_matches_squared_distance() {
        let mut rng = crate::rng::SplitMix64::new(31);
        for _ in 0..50 {
            let p = ProbVector::new(rng.next_simplex(4)).unwrap();
            for y in 0..4 {
                let direct: f64 = p
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let e = if j == y { 1.0 } else { 0.0 };
                        (e - v) * (e - v)
                    })
                    .sum::<f64>()
                    / 4.0;
                let v = LossSpec::Mse.value(&p, label(y, 4)).unwrap();
                assert!((v - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn amse_gradient_hand_value() {
        // (2/K)(p - a e_y) at K=2, a=2, p=(0.8, 0.2), y=0 -> (-1.2, 0.2)
        let spec = LossSpec::Amse { a: 2.0, q: 2.0 };
        let g = spec.grad_p(&prob(&[0.8, 0.2]), label(0, 2)).unwrap();
        assert!((g[0] + 1.2).abs() < 1e-12);
        assert!((g[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ce_gradient_hand_value() {
        let g = LossSpec::Ce.grad_p(&prob(&[0.5, 0.5]), label(0, 2)).unwrap();
        assert_eq!(g, vec![-2.0, 0.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let specs = vec![
            LossSpec::Ce,
            LossSpec::Fl { gamma: 0.5 },
            LossSpec::Mae,
            LossSpec::Mse,
            LossSpec::Rce { log_zero: -4.0 },
            LossSpec::nce(),
            LossSpec::nfl(0.5),
            LossSpec::Amse { a: 10.0, q: 2.0 },
            LossSpec::Amse { a: 2.0, q: 3.0 },
            make_jal(JalFlavor::Ce, 1.0, 1.0, 30.0, 0.0).unwrap(),
        ];
        let mut rng = crate::rng::SplitMix64::new(37);
        for spec in specs {
            for _ in 0..20 {
                let mut p = rng.next_simplex(5);
                // Pull toward the uniform point so FD steps stay interior.
                for v in &mut p {
                    *v = 0.9 * *v + 0.1 / 5.0;
                }
                let y = rng.next_index(5);
                let analytic = spec.grad_p_slice(&p, y).unwrap();
                let numeric = fd_grad(&spec, &p, y, 1e-6);
                let scale = analytic
                    .iter()
                    .map(|g| g.abs())
                    .fold(1.0_f64, f64::max);
                for (a, n) in analytic.iter().zip(&numeric) {
                    assert!(
                        (a - n).abs() / scale < 1e-5,
                        "{spec:?}: analytic {a} vs fd {n}"
                    );
                }
            }
        }
    }

    #[test]
    fn ce_logit_gradient_reduces_to_p_minus_onehot() {
        let logits = [0.3, -1.2, 2.0];
        let g = LossSpec::Ce.grad_logits(&logits, label(1, 3)).unwrap();
        let p = softmax_slice(&logits);
        for (j, gj) in g.iter().enumerate() {
            let e = if j == 1 { 1.0 } else { 0.0 };
            assert!((gj - (p[j] - e)).abs() < 1e-12);
        }
    }

    #[test]
    fn logit_gradients_sum_to_zero() {
        let specs = vec![
            LossSpec::Ce,
            LossSpec::Mae,
            LossSpec::Amse { a: 10.0, q: 2.0 },
            make_jal(JalFlavor::Fl, 1.0, 1.0, 30.0, 0.5).unwrap(),
        ];
        let mut rng = crate::rng::SplitMix64::new(41);
        for spec in specs {
            for _ in 0..20 {
                let logits: Vec<f64> = (0..6).map(|_| 4.0 * rng.next_normal()).collect();
                let y = rng.next_index(6);
                let g = spec.grad_logits(&logits, label(y, 6)).unwrap();
                let sum: f64 = g.iter().sum();
                assert!(sum.abs() < 1e-10, "{spec:?}: gradient sum {sum}");
            }
        }
    }

    #[test]
    fn amse_q1_kink_is_reported() {
        let spec = LossSpec::Amse { a: 1.0, q: 0.5 };
        // p_y = a = 1 exactly sits on the kink.
        let err = spec.grad_p_slice(&[1.0, 0.0], 0).unwrap_err();
        assert!(matches!(err, Error::GradientSingularity(_)));
    }

    #[test]
    fn jal_ce_is_weighted_sum_of_components() {
        let jal = make_jal(JalFlavor::Ce, 1.5, 0.5, 30.0, 0.0).unwrap();
        let nce = LossSpec::nce();
        let amse = LossSpec::Amse { a: 30.0, q: 2.0 };
        let mut rng = crate::rng::SplitMix64::new(43);
        for _ in 0..50 {
            let p = ProbVector::new(rng.next_simplex(10)).unwrap();
            let y = label(rng.next_index(10), 10);
            let combo = jal.value(&p, y).unwrap();
            let parts = 1.5 * nce.value(&p, y).unwrap() + 0.5 * amse.value(&p, y).unwrap();
            assert!((combo - parts).abs() < 1e-12);
            let g_combo = jal.grad_p(&p, y).unwrap();
            let g_nce = nce.grad_p(&p, y).unwrap();
            let g_amse = amse.grad_p(&p, y).unwrap();
            for j in 0..10 {
                assert!((g_combo[j] - (1.5 * g_nce[j] + 0.5 * g_amse[j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn taxonomy_partitions_the_zoo() {
        let active = [LossSpec::Ce, LossSpec::Fl { gamma: 0.5 }, LossSpec::nce(), LossSpec::nfl(0.5)];
        let passive = [
            LossSpec::Mae,
            LossSpec::Mse,
            LossSpec::rce_default(),
            LossSpec::Amse { a: 30.0, q: 2.0 },
        ];
        for spec in &active {
            let t = spec.taxonomy().unwrap();
            assert!(t.is_active && !t.is_passive, "{spec:?}");
        }
        for spec in &passive {
            let t = spec.taxonomy().unwrap();
            assert!(t.is_passive && !t.is_active, "{spec:?}");
        }
        assert!(make_jal(JalFlavor::Ce, 1.0, 1.0, 30.0, 0.0)
            .unwrap()
            .taxonomy()
            .is_none());
    }

    #[test]
    fn activity_matches_per_coordinate_definition() {
        // For decomposable losses L(p, y) = sum_k l(p_k, e_k), activity means
        // the k != y terms vanish: zeroing out any non-label coordinate must
        // leave the loss unchanged.
        let cases = [
            (LossSpec::Ce, true),
            (LossSpec::Fl { gamma: 0.5 }, true),
            (LossSpec::Mae, false),
            (LossSpec::Mse, false),
            (LossSpec::rce_default(), false),
            (LossSpec::Amse { a: 10.0, q: 2.0 }, false),
        ];
        let p = [0.6, 0.3, 0.1];
        for (spec, expect_active) in cases {
            let full = spec.value_slice(&p, 0).unwrap();
            let mut zeroed = p;
            zeroed[1] = 0.0;
            zeroed[2] = 0.0;
            let stripped = spec.value_slice(&zeroed, 0).unwrap();
            let unchanged = (full - stripped).abs() < 1e-12;
            assert_eq!(unchanged, expect_active, "{spec:?}");
            assert_eq!(spec.taxonomy().unwrap().is_active, expect_active);
        }
    }

    #[test]
    fn apl_slots_are_checked() {
        // CE in the passive slot must be rejected.
        let bad = LossSpec::Apl {
            alpha: 1.0,
            beta: 1.0,
            active: Box::new(LossSpec::nce()),
            passive: Box::new(LossSpec::Ce),
        };
        assert!(bad.validate().is_err());
        let bad = make_jal(JalFlavor::Ce, 0.0, 1.0, 30.0, 0.0);
        assert!(bad.is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = make_jal(JalFlavor::Fl, 1.0, 1.0, 30.0, 0.5).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: LossSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        // The wire shape is {"kind": ..., "params": {...}}.
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["kind"], "apl");
        assert!(parsed["params"]["active"]["kind"].is_string());
    }

    proptest! {
        #[test]
        fn normalized_rows_sum_to_one_for_any_base(
            raw in proptest::collection::vec(1e-3..1.0f64, 3..8),
            base_pick in 0usize..4
        ) {
            let sum: f64 = raw.iter().sum();
            let p = ProbVector::new(raw.iter().map(|v| v / sum).collect()).unwrap();
            let base = match base_pick {
                0 => LossSpec::Ce,
                1 => LossSpec::Fl { gamma: 0.5 },
                2 => LossSpec::Mae,
                _ => LossSpec::Amse { a: 5.0, q: 2.0 },
            };
            let spec = LossSpec::Normalized { base: Box::new(base) };
            let row_sum: f64 = spec.row(&p).unwrap().iter().sum();
            prop_assert!((row_sum - 1.0).abs() < 1e-9);
        }

        #[test]
        fn mae_row_sum_is_2k_minus_2(
            raw in proptest::collection::vec(1e-6..1.0f64, 2..10)
        ) {
            let sum: f64 = raw.iter().sum();
            let p = ProbVector::new(raw.iter().map(|v| v / sum).collect()).unwrap();
            let k = p.k();
            let row_sum: f64 = LossSpec::Mae.row(&p).unwrap().iter().sum();
            prop_assert!((row_sum - 2.0 * (k as f64 - 1.0)).abs() < 1e-9);
        }
    }
}
