use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{sigmoid, ClassDistribution, Classifier};
use crate::features::{EncodedSample, Feature, FEATURE_COUNT};

/// Approximate large margin classifier, p = 2.
///
/// At update counter `k` the target margin is `B / sqrt(k)` and the step is
/// `C / sqrt(k)`. A sample triggers an update when `y (w . x)` is at most
/// `(1 - alpha)` times the target margin; after the additive step the weight
/// vector is projected back onto the unit L2 ball and `k` advances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alma {
    weights: Vec<f64>,
    k: u64,
    alpha: f64,
    b: f64,
    c: f64,
}

impl Alma {
    pub fn new(alpha: f64, b: f64, c: f64) -> Self {
        Self {
            weights: vec![0.0; FEATURE_COUNT],
            k: 1,
            alpha,
            b,
            c,
        }
    }

    pub fn weight(&self, feature: Feature) -> f64 {
        self.weights[feature.index()]
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.weights.iter().map(|w| w * w).sum())
    }

    /// Number of updates performed so far.
    pub fn updates(&self) -> u64 {
        self.k - 1
    }

    pub fn margin(&self, sample: &EncodedSample) -> f64 {
        sample.iter().map(|(f, x)| self.weights[f.index()] * x).sum()
    }

    /// Whether `learn_one(sample, label)` would update the weights.
    pub fn would_update(&self, sample: &EncodedSample, label: bool) -> bool {
        let y = if label { 1.0 } else { -1.0 };
        let gamma = self.b / libm::sqrt(self.k as f64);
        y * self.margin(sample) <= (1.0 - self.alpha) * gamma
    }
}

impl Classifier for Alma {
    fn learn_one(&mut self, sample: &EncodedSample, label: bool) {
        if !self.would_update(sample, label) {
            return;
        }
        let y = if label { 1.0 } else { -1.0 };
        let eta = self.c / libm::sqrt(self.k as f64);
        for (f, x) in sample.iter() {
            self.weights[f.index()] += eta * y * x;
        }
        let norm = self.norm();
        if norm > 1.0 {
            for w in self.weights.iter_mut() {
                *w /= norm;
            }
        }
        self.k += 1;
    }

    fn predict_proba_one(&self, sample: &EncodedSample) -> ClassDistribution {
        ClassDistribution::from_present(sigmoid(self.margin(sample)))
    }
}
