//! Per-sample SGD with a clipped L1 penalty, shared by the proxy regressors
//! and the logistic baseline.
//!
//! At update `t` (counted from 1 across all epochs) the step size is
//! `eta0 / t^power_t`. The penalty step moves every weight toward zero by
//! `eta * alpha` and stops at zero instead of crossing it. It is applied
//! lazily: each weight remembers the cumulative penalty it has already
//! absorbed and catches up when its feature is next seen, which is exactly
//! equivalent to shrinking all weights after every update. Weights start at
//! zero and the intercept at the best constant fit.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::corpus::FeatureVector;
use crate::error::{Error, Result};

pub(crate) const PRUNE_BELOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Loss {
    /// `0.5 * (z - y)^2`
    Squared,
    /// Log-loss with labels in {0, 1}; `z` is the logit.
    Logistic,
}

impl Loss {
    fn gradient(self, z: f64, y: f64) -> f64 {
        match self {
            Loss::Squared => z - y,
            Loss::Logistic => sigmoid(z) - y,
        }
    }

    /// Best constant predictor for the targets, used as the starting intercept.
    pub(crate) fn initial_intercept(self, targets: &[f64]) -> f64 {
        let n = targets.len() as f64;
        let sum: f64 = targets.iter().sum();
        match self {
            Loss::Squared => sum / n,
            Loss::Logistic => ((sum + 0.5) / (n - sum + 0.5)).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Schedule {
    pub alpha: f64,
    pub epochs: usize,
    pub eta0: f64,
    pub power_t: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn shrink(w: f64, amount: f64) -> f64 {
    if w > 0.0 {
        (w - amount).max(0.0)
    } else if w < 0.0 {
        (w + amount).min(0.0)
    } else {
        0.0
    }
}

/// Returns dense weights and the intercept.
pub(crate) fn fit(
    features: &[&FeatureVector],
    targets: &[f64],
    n_features: usize,
    loss: Loss,
    schedule: Schedule,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64)> {
    if features.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    crate::error::check_len(features.len(), targets.len())?;

    let mut w = vec![0.0f64; n_features];
    let mut absorbed = vec![0.0f64; n_features];
    let mut b = loss.initial_intercept(targets);
    let mut penalty = 0.0f64;
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut t = 0u64;

    for _ in 0..schedule.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = schedule.eta0 / (t as f64).powf(schedule.power_t);
            let x = features[i];
            let mut z = b;
            for &(j, n) in x.entries() {
                w[j] = shrink(w[j], penalty - absorbed[j]);
                absorbed[j] = penalty;
                z += w[j] * f64::from(n);
            }
            let g = loss.gradient(z, targets[i]);
            for &(j, n) in x.entries() {
                w[j] -= eta * g * f64::from(n);
            }
            b -= eta * g;
            penalty += eta * schedule.alpha;
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "SGD diverged; lower eta0 or use binary features",
            ));
        }
    }
    for (wj, a) in w.iter_mut().zip(&absorbed) {
        *wj = shrink(*wj, penalty - a);
    }
    Ok((w, b))
}

/// Sparse `(index, value)` pairs with magnitude at least [`PRUNE_BELOW`].
pub(crate) fn sparsify(w: &[f64]) -> Vec<(usize, f64)> {
    w.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= PRUNE_BELOW)
        .map(|(i, &v)| (i, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Shrinks every weight after every update.
    fn fit_dense(
        features: &[&FeatureVector],
        targets: &[f64],
        n_features: usize,
        loss: Loss,
        s: Schedule,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<f64>, f64) {
        let mut w = vec![0.0; n_features];
        let mut b = loss.initial_intercept(targets);
        let mut order: Vec<usize> = (0..features.len()).collect();
        let mut t = 0u64;
        for _ in 0..s.epochs {
            order.shuffle(rng);
            for &i in &order {
                t += 1;
                let eta = s.eta0 / (t as f64).powf(s.power_t);
                let z = b + features[i].dot(&w);
                let g = loss.gradient(z, targets[i]);
                for &(j, n) in features[i].entries() {
                    w[j] -= eta * g * f64::from(n);
                }
                b -= eta * g;
                for wj in w.iter_mut() {
                    *wj = shrink(*wj, eta * s.alpha);
                }
            }
        }
        (w, b)
    }

    #[test]
    fn lazy_penalty_matches_dense_shrinking() {
        let mut gen = ChaCha8Rng::seed_from_u64(5);
        let docs: Vec<FeatureVector> = (0..60)
            .map(|_| FeatureVector::from_indices((0..6).map(|_| gen.random_range(0..12))))
            .collect();
        let refs: Vec<&FeatureVector> = docs.iter().collect();
        let y: Vec<f64> = docs.iter().map(|d| 0.7 * f64::from(d.count(3)) - 0.2 * f64::from(d.count(7)) - 1.0).collect();
        for alpha in [0.0, 1e-3, 0.05] {
            let s = Schedule { alpha, epochs: 5, eta0: 0.01, power_t: 0.25 };
            let (wl, bl) = fit(&refs, &y, 12, Loss::Squared, s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let (wd, bd) = fit_dense(&refs, &y, 12, Loss::Squared, s, &mut ChaCha8Rng::seed_from_u64(1));
            assert!((bl - bd).abs() < 1e-10);
            for (a, b) in wl.iter().zip(&wd) {
                assert!((a - b).abs() < 1e-10, "alpha {alpha}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sigmoid_is_stable_and_symmetric() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        for z in [-30.0, -3.5, -0.1, 0.7, 12.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shrink_never_crosses_zero() {
        assert_eq!(shrink(0.3, 1.0), 0.0);
        assert_eq!(shrink(-0.3, 1.0), 0.0);
        assert!((shrink(0.3, 0.1) - 0.2).abs() < 1e-15);
    }
}
