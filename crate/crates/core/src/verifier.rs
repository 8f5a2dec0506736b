//! Numerical certification of the symmetric and asymmetric conditions.
//!
//! A loss is *symmetric* when its per-class row sums to a constant, and
//! *asymmetric* (for weights with a strictly dominant entry w_t) when the
//! minimizer of the weighted row sum over the whole simplex is the vertex
//! e_t. For the AMSE family (1/K)·||a·e_y - p||_q^q the asymmetric condition
//! holds exactly when
//!
//! ```text
//! w_m / w_n >= (a^(q-1) + sum_{i != m} w_i / w_n) / (a - 1)^(q-1)   if q > 1
//! w_m / w_n >= 1                                                    if q <= 1
//! ```
//!
//! with m the dominant index and n the strongest competitor. The closed form
//! is the supremum of a one-dimensional function h(x) obtained by restricting
//! candidate minimizers to the two-coordinate family p = x·e_m + (1-x)·e_n;
//! [`sup_h`] maximizes h numerically and must match the closed form, and
//! [`oracle_minimize`] cross-checks the verdict by brute force on a simplex
//! grid (exhaustive for K <= 4, two-coordinate with uniform-leakage probes
//! for larger K, which the same reduction justifies).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::losses::LossSpec;
use crate::noise::NoiseSpec;
use crate::rng::SplitMix64;
use crate::simplex::{ClassLabel, ProbVector};
use crate::Result;

/// Comparison tolerance for the threshold inequality.
pub const RATIO_TOL: f64 = 1e-9;

/// Weight vector with a strictly dominant entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryWeights {
    w: Vec<f64>,
    t: usize,
}

impl AsymmetryWeights {
    /// Validates non-negative weights with a strictly dominant maximum.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "weights need K >= 2 entries, got {}",
                w.len()
            )));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "weights must be finite and non-negative".into(),
            ));
        }
        let t = argmax(&w);
        let runner = w
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != t)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        if w[t] <= runner {
            return Err(Error::DominanceViolation(format!(
                "no strictly dominant weight: max {} ties the runner-up {}",
                w[t], runner
            )));
        }
        Ok(Self { w, t })
    }

    pub fn k(&self) -> usize {
        self.w.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// The dominant index m (= t).
    pub fn dominant(&self) -> usize {
        self.t
    }

    /// The strongest competitor n = argmax_{i != m} w_i (smallest index on
    /// ties; tied competitors give the same ratio, hence the same verdict).
    pub fn runner_up(&self) -> usize {
        let mut best = usize::MAX;
        let mut best_w = f64::NEG_INFINITY;
        for (i, &v) in self.w.iter().enumerate() {
            if i != self.t && v > best_w {
                best = i;
                best_w = v;
            }
        }
        best
    }

    /// w_m / w_n; infinite when the competitor weight is zero.
    pub fn ratio(&self) -> f64 {
        let wn = self.w[self.runner_up()];
        if wn == 0.0 {
            f64::INFINITY
        } else {
            self.w[self.t] / wn
        }
    }

    /// Sum over i != m of w_i / w_n (zero when w_n is zero).
    fn competitor_mass(&self) -> f64 {
        let wn = self.w[self.runner_up()];
        if wn == 0.0 {
            return 0.0;
        }
        self.w
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.t)
            .map(|(_, &v)| v / wn)
            .sum()
    }
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

/// Closed-form right-hand side of the asymmetry condition for the AMSE family.
///
/// Returns 0 when the competitor weight is zero (the inequality is trivial),
/// 1 for q <= 1, and otherwise (a^(q-1) + sum_{i != m} w_i/w_n)/(a-1)^(q-1).
/// For q > 1 with a = 1 the ratio would be infinite, reported as
/// [`Error::UnsatisfiableThreshold`].
pub fn theorem_threshold(q: f64, a: f64, weights: &AsymmetryWeights) -> Result<f64> {
    check_q_a(q, a)?;
    if weights.w[weights.runner_up()] == 0.0 {
        return Ok(0.0);
    }
    if q <= 1.0 {
        return Ok(1.0);
    }
    if a == 1.0 {
        return Err(Error::UnsatisfiableThreshold);
    }
    Ok((a.powf(q - 1.0) + weights.competitor_mass()) / (a - 1.0).powf(q - 1.0))
}

fn check_q_a(q: f64, a: f64) -> Result<()> {
    if !q.is_finite() || q <= 0.0 {
        return Err(Error::Config(format!("q must be > 0, got {q}")));
    }
    if !a.is_finite() || a < 1.0 {
        return Err(Error::Config(format!("a must be >= 1, got {a}")));
    }
    Ok(())
}

/// Numerically maximizes the reduction function
///
/// ```text
/// h(x) = [a^q + 1 - (a-1+x)^q - x^q + S·(1 - x^q - (1-x)^q)]
///        / [(a-x)^q + (1-x)^q - (a-1)^q],    S = sum_{i != m,n} w_i / w_n
/// ```
///
/// over x in [0, 1). The x = 1 endpoint is a removable 0/0 point; for q > 1
/// the supremum is the limit there and equals the closed-form threshold, for
/// q <= 1 the supremum is 1 (attained at x = 0). A dense grid is refined
/// locally around its argmax and along a geometric approach to x = 1,
/// capped at 1 - 1e-7 to stay clear of cancellation.
pub fn sup_h(q: f64, a: f64, weights: &AsymmetryWeights, grid: usize) -> Result<f64> {
    check_q_a(q, a)?;
    if grid < 1000 {
        return Err(Error::Config(format!("sup_h grid must be >= 1000, got {grid}")));
    }
    if weights.w[weights.runner_up()] == 0.0 {
        return Ok(0.0);
    }
    if q > 1.0 && a == 1.0 {
        return Err(Error::UnsatisfiableThreshold);
    }
    let s = weights.competitor_mass() - 1.0; // sum over i != m,n of w_i / w_n
    let h = |x: f64| -> Option<f64> {
        let xq = pow(x, q);
        let omx = 1.0 - x;
        let omxq = pow(omx, q);
        let numerator = pow(a, q) + 1.0 - pow(a - 1.0 + x, q) - xq + s * (1.0 - xq - omxq);
        let denominator = pow(a - x, q) + omxq - pow(a - 1.0, q);
        if denominator <= 0.0 {
            None // removable endpoint (or a = 1 edge); skip
        } else {
            Some(numerator / denominator)
        }
    };

    const X_MAX: f64 = 1.0 - 1e-7;
    let mut best_x = 0.0;
    let mut best = f64::NEG_INFINITY;
    let consider = |x: f64, best: &mut f64, best_x: &mut f64| {
        if let Some(v) = h(x.min(X_MAX)) {
            if v > *best {
                *best = v;
                *best_x = x.min(X_MAX);
            }
        }
    };
    for i in 0..grid {
        consider(i as f64 / grid as f64, &mut best, &mut best_x);
    }
    for j in 1..=7 {
        consider(1.0 - 10f64.powi(-j), &mut best, &mut best_x);
    }
    // Local refinement: three rounds of 10x finer scans around the argmax.
    let mut step = 1.0 / grid as f64;
    for _ in 0..3 {
        let center = best_x;
        let fine = step / 10.0;
        for i in -10..=10 {
            let x = (center + i as f64 * fine).clamp(0.0, X_MAX);
            consider(x, &mut best, &mut best_x);
        }
        step = fine;
    }
    Ok(best)
}

#[inline]
fn pow(base: f64, q: f64) -> f64 {
    if q == 1.0 {
        base
    } else if q == 2.0 {
        base * base
    } else {
        base.powf(q)
    }
}

/// Brute-force minimizer of the weighted row sum over the probability simplex.
///
/// For K <= 4 every composition grid point with `resolution` steps per
/// coordinate is visited in ascending lexicographic order. For larger K the
/// search walks the two-coordinate family x·e_m + (1-x)·e_n (the family the
/// asymmetry reduction shows is decisive), a uniform-leakage family
/// (1-s)·e_m + s·uniform, and all vertices. Ties resolve toward the
/// dominant vertex, then toward the earliest candidate in that order.
pub fn oracle_minimize(
    spec: &LossSpec,
    weights: &AsymmetryWeights,
    resolution: usize,
) -> Result<ProbVector> {
    if resolution < 10 {
        return Err(Error::Config(format!(
            "oracle resolution must be >= 10, got {resolution}"
        )));
    }
    spec.validate()?;
    let k = weights.k();
    let m = weights.dominant();
    let n = weights.runner_up();

    let risk = |p: &[f64]| -> Result<f64> {
        let mut total = 0.0;
        for (class, &w) in weights.w.iter().enumerate() {
            if w > 0.0 {
                total += w * spec.value_slice(p, class)?;
            }
        }
        Ok(total)
    };

    // The dominant vertex is the incumbent; later candidates must beat it strictly.
    let mut best: Vec<f64> = vertex(k, m);
    let mut best_risk = risk(&best)?;
    let consider = |p: &[f64], best: &mut Vec<f64>, best_risk: &mut f64| -> Result<()> {
        let r = risk(p)?;
        if r < *best_risk {
            *best_risk = r;
            best.clear();
            best.extend_from_slice(p);
        }
        Ok(())
    };

    if k <= 4 {
        let mut point = vec![0.0; k];
        let mut counts = vec![0usize; k];
        enumerate_compositions(resolution, 0, &mut counts, &mut |counts| {
            for (j, &c) in counts.iter().enumerate() {
                point[j] = c as f64 / resolution as f64;
            }
            consider(&point, &mut best, &mut best_risk)
        })?;
    } else {
        let mut point = vec![0.0; k];
        for j in 0..=resolution {
            let x = j as f64 / resolution as f64;
            point.iter_mut().for_each(|v| *v = 0.0);
            point[m] = x;
            point[n] += 1.0 - x;
            consider(&point, &mut best, &mut best_risk)?;
        }
        for j in 0..=resolution {
            let s = j as f64 / resolution as f64;
            let share = s / k as f64;
            point.iter_mut().for_each(|v| *v = share);
            point[m] += 1.0 - s;
            consider(&point, &mut best, &mut best_risk)?;
        }
        for v in 0..k {
            consider(&vertex(k, v), &mut best, &mut best_risk)?;
        }
    }
    ProbVector::new(best)
}

fn vertex(k: usize, index: usize) -> Vec<f64> {
    let mut p = vec![0.0; k];
    p[index] = 1.0;
    p
}

fn enumerate_compositions<F>(
    remaining: usize,
    coord: usize,
    counts: &mut Vec<usize>,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    if coord == counts.len() - 1 {
        counts[coord] = remaining;
        return visit(counts);
    }
    for c in 0..=remaining {
        counts[coord] = c;
        enumerate_compositions(remaining - c, coord + 1, counts, visit)?;
    }
    Ok(())
}

/// True when the grid argmin sits within one grid cell of the vertex e_t.
pub fn argmin_is_vertex(argmin: &ProbVector, t: usize, resolution: usize) -> bool {
    let cell = 1.0 / resolution as f64 + 1e-12;
    argmin.values().iter().enumerate().all(|(j, &v)| {
        let e = if j == t { 1.0 } else { 0.0 };
        (v - e).abs() <= cell
    })
}

/// Row-sum constancy check over random simplex points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub constant_c: f64,
    pub max_deviation: f64,
    pub is_symmetric: bool,
}

/// Estimates the symmetric-condition constant C and the worst deviation of
/// row sums from it over `trials` random simplex points.
pub fn check_symmetric(
    spec: &LossSpec,
    k: usize,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<SymmetryReport> {
    if trials < 100 {
        return Err(Error::Config(format!(
            "symmetry check needs >= 100 trials, got {trials}"
        )));
    }
    spec.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut sums = Vec::with_capacity(trials);
    for _ in 0..trials {
        let p = ProbVector::new(rng.next_simplex(k))?;
        sums.push(spec.row(&p)?.iter().sum::<f64>());
    }
    let constant_c = sums.iter().sum::<f64>() / trials as f64;
    let max_deviation = sums
        .iter()
        .map(|s| (s - constant_c).abs())
        .fold(0.0, f64::max);
    Ok(SymmetryReport {
        constant_c,
        max_deviation,
        is_symmetric: max_deviation < tol,
    })
}

/// Per-class weights of the noisy risk: w_y = 1 - eta, w_{k != y} = eta_{x,k}.
///
/// Instance-dependent noise has no fixed per-class weights and is rejected.
pub fn weights_from_noise(noise: &NoiseSpec, y: ClassLabel, k: usize) -> Result<AsymmetryWeights> {
    noise.validate(k)?;
    if y.index() >= k {
        return Err(Error::InvalidInput(format!(
            "class {} out of range for K = {k}",
            y.index()
        )));
    }
    let yi = y.index();
    let w = match noise {
        NoiseSpec::Symmetric { eta } => {
            let off = eta / (k as f64 - 1.0);
            (0..k).map(|c| if c == yi { 1.0 - eta } else { off }).collect()
        }
        NoiseSpec::Pairflip { eta, flip_map } => {
            let mut w = vec![0.0; k];
            match flip_map.get(&yi) {
                Some(&target) => {
                    w[yi] = 1.0 - eta;
                    w[target] = *eta;
                }
                None => w[yi] = 1.0,
            }
            w
        }
        NoiseSpec::Groupshift { eta, groups } => {
            let mut succ = yi;
            for group in groups {
                if let Some(pos) = group.iter().position(|&c| c == yi) {
                    if group.len() > 1 {
                        succ = group[(pos + 1) % group.len()];
                    }
                }
            }
            let mut w = vec![0.0; k];
            if succ == yi {
                w[yi] = 1.0;
            } else {
                w[yi] = 1.0 - eta;
                w[succ] = *eta;
            }
            w
        }
        NoiseSpec::Instance { .. } => {
            return Err(Error::Config(
                "instance-dependent noise has per-sample rates and no fixed class weights".into(),
            ));
        }
    };
    AsymmetryWeights::new(w)
}

/// Full verdict for an AMSE-family loss at given (q, a, weights).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymmetryVerdict {
    pub theorem_satisfied: bool,
    /// Closed-form required ratio; `None` when unsatisfiable (q > 1, a = 1).
    pub required_ratio: Option<f64>,
    pub actual_ratio: f64,
    pub sup_h: f64,
    pub oracle_argmin: ProbVector,
    /// Whether the oracle argmin is the dominant vertex.
    pub oracle_vertex: bool,
    /// Whether the oracle verdict matches the closed-form verdict.
    pub oracle_agrees: bool,
}

/// Evaluates threshold, sup h, and the brute-force oracle for one case.
pub fn verify_amse(
    q: f64,
    a: f64,
    weights: &AsymmetryWeights,
    grid: usize,
    resolution: usize,
) -> Result<AsymmetryVerdict> {
    let spec = LossSpec::Amse { a, q };
    spec.validate()?;
    let (required_ratio, sup) = match theorem_threshold(q, a, weights) {
        Ok(t) => (Some(t), sup_h(q, a, weights, grid)?),
        Err(Error::UnsatisfiableThreshold) => (None, f64::INFINITY),
        Err(e) => return Err(e),
    };
    let actual_ratio = weights.ratio();
    let theorem_satisfied = match required_ratio {
        Some(t) => actual_ratio >= t - RATIO_TOL,
        None => false,
    };
    let oracle_argmin = oracle_minimize(&spec, weights, resolution)?;
    let oracle_vertex = argmin_is_vertex(&oracle_argmin, weights.dominant(), resolution);
    Ok(AsymmetryVerdict {
        theorem_satisfied,
        required_ratio,
        actual_ratio,
        sup_h: sup,
        oracle_argmin,
        oracle_vertex,
        oracle_agrees: oracle_vertex == theorem_satisfied,
    })
}

/// Per-class outcome of the pointwise noise-tolerance probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub class: usize,
    pub argmin: ProbVector,
    pub passes: bool,
}

/// For every class y, builds the noisy-risk weights and checks that the
/// brute-force argmin of sum_k w_k L(p, k) is the vertex e_y. All classes
/// passing certifies the unrestricted noisy-risk minimizer pointwise.
pub fn noise_tolerance_probe(
    spec: &LossSpec,
    noise: &NoiseSpec,
    k: usize,
    resolution: usize,
) -> Result<Vec<ClassVerdict>> {
    (0..k)
        .map(|y| {
            let weights = weights_from_noise(noise, ClassLabel::new(y, k)?, k)?;
            let argmin = oracle_minimize(spec, &weights, resolution)?;
            Ok(ClassVerdict {
                class: y,
                passes: argmin_is_vertex(&argmin, y, resolution),
                argmin,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{make_jal, JalFlavor};

    fn symmetric_weights(eta: f64, k: usize, y: usize) -> AsymmetryWeights {
        weights_from_noise(&NoiseSpec::Symmetric { eta }, ClassLabel::new(y, k).unwrap(), k)
            .unwrap()
    }

    #[test]
    fn threshold_boundary_case() {
        // K = 10 symmetric 0.8 noise: ratio 0.2 / (0.8/9) = 2.25 and the
        // q = 2, a = 9 threshold (9 + 9) / 8 = 2.25 coincide exactly.
        let w = symmetric_weights(0.8, 10, 0);
        assert!((w.ratio() - 2.25).abs() < 1e-12);
        let t = theorem_threshold(2.0, 9.0, &w).unwrap();
        assert!((t - 2.25).abs() < 1e-12);
        let t10 = theorem_threshold(2.0, 10.0, &w).unwrap();
        assert!((t10 - 19.0 / 9.0).abs() < 1e-12);
        assert!(t10 < w.ratio());
    }

    #[test]
    fn threshold_q_at_most_one_is_one() {
        let w = symmetric_weights(0.4, 3, 1);
        assert_eq!(theorem_threshold(1.0, 7.0, &w).unwrap(), 1.0);
        assert_eq!(theorem_threshold(0.5, 1.0, &w).unwrap(), 1.0);
    }

    #[test]
    fn threshold_zero_competitor_is_trivial() {
        let w = AsymmetryWeights::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(theorem_threshold(2.0, 1.0, &w).unwrap(), 0.0);
        assert_eq!(w.ratio(), f64::INFINITY);
    }

    #[test]
    fn threshold_unsatisfiable_at_a_one() {
        let w = symmetric_weights(0.4, 3, 0);
        let err = theorem_threshold(2.0, 1.0, &w).unwrap_err();
        assert!(matches!(err, Error::UnsatisfiableThreshold));
    }

    #[test]
    fn sup_h_matches_closed_form_q2() {
        let w = symmetric_weights(0.8, 10, 0);
        let sup = sup_h(2.0, 10.0, &w, 2000).unwrap();
        assert!((sup - 19.0 / 9.0).abs() < 1e-3, "sup {sup}");
        let sup9 = sup_h(2.0, 9.0, &w, 2000).unwrap();
        assert!((sup9 - 2.25).abs() < 1e-3, "sup {sup9}");
    }

    #[test]
    fn sup_h_is_one_for_q_at_most_one() {
        let w = AsymmetryWeights::new(vec![0.6, 0.2, 0.2]).unwrap();
        let sup = sup_h(1.0, 5.0, &w, 2000).unwrap();
        assert!((sup - 1.0).abs() < 1e-6, "sup {sup}");
        let sup_half = sup_h(0.5, 3.0, &w, 2000).unwrap();
        assert!((sup_half - 1.0).abs() < 1e-6, "sup {sup_half}");
    }

    #[test]
    fn oracle_vertex_for_satisfied_amse() {
        let w = AsymmetryWeights::new(vec![0.6, 0.2, 0.2]).unwrap();
        let spec = LossSpec::Amse { a: 10.0, q: 2.0 };
        let argmin = oracle_minimize(&spec, &w, 200).unwrap();
        assert!(argmin_is_vertex(&argmin, 0, 200));
        assert_eq!(argmin.values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn oracle_interior_for_violated_amse() {
        // a = 2: threshold (2 + 9)/1 = 11 far above ratio 2.25.
        let w = symmetric_weights(0.8, 10, 0);
        let spec = LossSpec::Amse { a: 2.0, q: 2.0 };
        let argmin = oracle_minimize(&spec, &w, 10_000).unwrap();
        assert!(!argmin_is_vertex(&argmin, 0, 10_000));
    }

    #[test]
    fn oracle_vertex_for_symmetric_mae() {
        let w = AsymmetryWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let argmin = oracle_minimize(&LossSpec::Mae, &w, 200).unwrap();
        assert!(argmin_is_vertex(&argmin, 0, 200));
    }

    #[test]
    fn small_iff_grid_agrees() {
        for k in [3usize, 10] {
            for eta in [0.4, 0.6] {
                if eta >= (k as f64 - 1.0) / k as f64 {
                    continue;
                }
                let w = symmetric_weights(eta, k, 0);
                for q in [1.0, 2.0] {
                    for a in [2.0, 10.0] {
                        let resolution = if k <= 4 { 200 } else { 10_000 };
                        let v = verify_amse(q, a, &w, 2000, resolution).unwrap();
                        assert!(
                            v.oracle_agrees,
                            "disagreement at K={k} eta={eta} q={q} a={a}: \
                             theorem {} oracle-vertex {}",
                            v.theorem_satisfied, v.oracle_vertex
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn verdict_scaling_invariance() {
        let w1 = AsymmetryWeights::new(vec![0.6, 0.25, 0.15]).unwrap();
        let w2 = AsymmetryWeights::new(vec![6.0, 2.5, 1.5]).unwrap();
        for (q, a) in [(2.0, 3.0), (2.0, 10.0), (3.0, 2.0)] {
            let v1 = verify_amse(q, a, &w1, 1000, 100).unwrap();
            let v2 = verify_amse(q, a, &w2, 1000, 100).unwrap();
            assert_eq!(v1.theorem_satisfied, v2.theorem_satisfied);
            assert_eq!(v1.oracle_vertex, v2.oracle_vertex);
            assert_eq!(v1.oracle_argmin, v2.oracle_argmin);
        }
    }

    #[test]
    fn check_symmetric_certifies_the_zoo() {
        let symmetric = [
            (LossSpec::Mae, 8.0),          // 2(K-1) at K = 5
            (LossSpec::nce(), 1.0),
            (LossSpec::nfl(0.5), 1.0),
            (LossSpec::rce_default(), 16.0), // -A(K-1) = 4 * 4
        ];
        for (spec, expect_c) in symmetric {
            let report = check_symmetric(&spec, 5, 500, 1e-9, 7).unwrap();
            assert!(report.is_symmetric, "{spec:?}");
            assert!((report.constant_c - expect_c).abs() < 1e-9, "{spec:?}");
        }
        for spec in [
            LossSpec::Ce,
            LossSpec::Fl { gamma: 0.5 },
            LossSpec::Mse,
            LossSpec::Amse { a: 30.0, q: 2.0 },
        ] {
            let report = check_symmetric(&spec, 5, 500, 1e-9, 7).unwrap();
            assert!(!report.is_symmetric, "{spec:?}");
        }
    }

    #[test]
    fn ce_symmetry_fails_visibly_at_k2() {
        // Row sums at (0.9, 0.1) and (0.5, 0.5) differ by far more than tol.
        let report = check_symmetric(&LossSpec::Ce, 2, 200, 1e-9, 3).unwrap();
        assert!(!report.is_symmetric);
        assert!(report.max_deviation > 0.1);
    }

    #[test]
    fn weights_from_symmetric_noise() {
        let w = symmetric_weights(0.8, 10, 3);
        assert_eq!(w.dominant(), 3);
        assert!((w.weights()[3] - 0.2).abs() < 1e-12);
        assert!((w.weights()[0] - 0.8 / 9.0).abs() < 1e-12);

        let zero = symmetric_weights(0.0, 4, 2);
        assert_eq!(zero.weights(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn weights_from_pairflip_noise() {
        let noise = NoiseSpec::Pairflip {
            eta: 0.4,
            flip_map: [(0, 2)].into_iter().collect(),
        };
        let w = weights_from_noise(&noise, ClassLabel::new(0, 4).unwrap(), 4).unwrap();
        assert_eq!(w.weights(), &[0.6, 0.0, 0.4, 0.0]);
        // Unmapped class: all mass on the clean label.
        let w1 = weights_from_noise(&noise, ClassLabel::new(1, 4).unwrap(), 4).unwrap();
        assert_eq!(w1.weights(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn parameter_domains_are_enforced() {
        let w = AsymmetryWeights::new(vec![0.6, 0.2, 0.2]).unwrap();
        assert!(matches!(
            oracle_minimize(&LossSpec::Mae, &w, 5),
            Err(Error::Config(_))
        ));
        assert!(matches!(sup_h(2.0, 5.0, &w, 999), Err(Error::Config(_))));
        assert!(matches!(
            check_symmetric(&LossSpec::Mae, 3, 99, 1e-9, 1),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            theorem_threshold(0.0, 5.0, &w),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn dominance_violation_is_reported() {
        // K = 3 symmetric 0.8: off-diagonal 0.4 beats diagonal 0.2.
        let err = AsymmetryWeights::new(vec![0.2, 0.4, 0.4]).unwrap_err();
        assert!(matches!(err, Error::DominanceViolation(_)));
        let noise = NoiseSpec::Symmetric { eta: 0.8 };
        assert!(weights_from_noise(&noise, ClassLabel::new(0, 3).unwrap(), 3).is_err());
    }

    #[test]
    fn probe_passes_jal_and_fails_ce() {
        let noise = NoiseSpec::Symmetric { eta: 0.4 };
        let jal = make_jal(JalFlavor::Ce, 1.0, 1.0, 30.0, 0.0).unwrap();
        let verdicts = noise_tolerance_probe(&jal, &noise, 6, 2000).unwrap();
        assert!(verdicts.iter().all(|v| v.passes));
        let ce = noise_tolerance_probe(&LossSpec::Ce, &noise, 6, 2000).unwrap();
        assert!(ce.iter().all(|v| !v.passes));
    }

    #[test]
    fn probe_passes_amse_under_heavy_pairflip() {
        // eta = 0.45 keeps ratio 0.55/0.45 above the a = 30 threshold 31/29.
        let noise = NoiseSpec::Pairflip {
            eta: 0.45,
            flip_map: [(0, 1), (2, 3)].into_iter().collect(),
        };
        let w = weights_from_noise(&noise, ClassLabel::new(0, 5).unwrap(), 5).unwrap();
        let threshold = theorem_threshold(2.0, 30.0, &w).unwrap();
        assert!((threshold - 31.0 / 29.0).abs() < 1e-12);
        assert!(w.ratio() > threshold);
        let spec = LossSpec::Amse { a: 30.0, q: 2.0 };
        let verdicts = noise_tolerance_probe(&spec, &noise, 5, 2000).unwrap();
        assert!(verdicts.iter().all(|v| v.passes));
    }

    #[test]
    fn apl_combination_preserves_the_vertex_property() {
        // Both components individually pass the vertex test with the same
        // weights; so does their combination.
        let w = symmetric_weights(0.4, 10, 0);
        let nce = LossSpec::nce();
        let amse = LossSpec::Amse { a: 30.0, q: 2.0 };
        for spec in [&nce, &amse] {
            let argmin = oracle_minimize(spec, &w, 2000).unwrap();
            assert!(argmin_is_vertex(&argmin, 0, 2000), "{spec:?}");
        }
        let combo = make_jal(JalFlavor::Ce, 1.0, 1.0, 30.0, 0.0).unwrap();
        let argmin = oracle_minimize(&combo, &w, 2000).unwrap();
        assert!(argmin_is_vertex(&argmin, 0, 2000));
    }
}
