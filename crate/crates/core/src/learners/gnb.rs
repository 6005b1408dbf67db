use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ClassDistribution, Classifier};
use crate::features::{EncodedSample, Feature};

/// Welford accumulator with the sample (`n - 1`) variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Gaussian {
    pub fn update(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> f64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            self.m2 / (self.n - 1.0)
        }
    }

    fn log_pdf(&self, x: f64, variance: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * libm::log(2.0 * PI * variance) - d * d / (2.0 * variance)
    }
}

/// Gaussian naive Bayes: class priors plus one Gaussian per (class, feature).
///
/// Each variance is smoothed by `1e-9` times the largest variance in the
/// model so that features constant within a class stay finite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    class_counts: [f64; 2],
    gaussians: [BTreeMap<Feature, Gaussian>; 2],
}

const VAR_SMOOTHING: f64 = 1e-9;

impl GaussianNb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn class_count(&self, label: bool) -> f64 {
        self.class_counts[label as usize]
    }

    pub fn gaussian(&self, label: bool, feature: Feature) -> Option<&Gaussian> {
        self.gaussians[label as usize].get(&feature)
    }

    fn epsilon(&self) -> f64 {
        let max_var = self
            .gaussians
            .iter()
            .flat_map(|g| g.values())
            .map(Gaussian::variance)
            .fold(0.0, f64::max);
        if max_var > 0.0 {
            VAR_SMOOTHING * max_var
        } else {
            VAR_SMOOTHING
        }
    }
}

impl Classifier for GaussianNb {
    fn learn_one(&mut self, sample: &EncodedSample, label: bool) {
        let c = label as usize;
        self.class_counts[c] += 1.0;
        for (f, x) in sample.iter() {
            self.gaussians[c].entry(f).or_default().update(x);
        }
    }

    fn predict_proba_one(&self, sample: &EncodedSample) -> ClassDistribution {
        let total = self.class_counts[0] + self.class_counts[1];
        if total == 0.0 {
            return ClassDistribution::UNIFORM;
        }
        let seen: Vec<usize> = (0..2).filter(|&c| self.class_counts[c] > 0.0).collect();
        if seen.len() == 1 {
            return if seen[0] == 1 {
                ClassDistribution::from_present(1.0)
            } else {
                ClassDistribution::from_present(0.0)
            };
        }
        let eps = self.epsilon();
        let mut jll = [0.0f64; 2];
        for c in 0..2 {
            jll[c] = libm::log(self.class_counts[c] / total);
        }
        for (f, x) in sample.iter() {
            // only features both classes have statistics for
            let (Some(g0), Some(g1)) = (self.gaussians[0].get(&f), self.gaussians[1].get(&f))
            else {
                continue;
            };
            jll[0] += g0.log_pdf(x, g0.variance() + eps);
            jll[1] += g1.log_pdf(x, g1.variance() + eps);
        }
        let hi = jll[0].max(jll[1]);
        let w0 = libm::exp(jll[0] - hi);
        let w1 = libm::exp(jll[1] - hi);
        ClassDistribution::from_weights(w0, w1)
    }
}
