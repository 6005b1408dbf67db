use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{sigmoid, ClassDistribution, Classifier};
use crate::features::{EncodedSample, Feature, FEATURE_COUNT};

/// Weight step size; only the L2 penalty and the intercept step are tunable.
pub const WEIGHT_LEARNING_RATE: f64 = 0.01;

/// Logistic regression trained by plain SGD on the log-loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    weights: Vec<f64>,
    intercept: f64,
    l2: f64,
    intercept_lr: f64,
    learning_rate: f64,
}

impl LogisticRegression {
    pub fn new(l2: f64, intercept_lr: f64) -> Self {
        Self {
            weights: vec![0.0; FEATURE_COUNT],
            intercept: 0.0,
            l2,
            intercept_lr,
            learning_rate: WEIGHT_LEARNING_RATE,
        }
    }

    pub fn weight(&self, feature: Feature) -> f64 {
        self.weights[feature.index()]
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    fn raw(&self, sample: &EncodedSample) -> f64 {
        sample
            .iter()
            .map(|(f, x)| self.weights[f.index()] * x)
            .sum::<f64>()
            + self.intercept
    }
}

impl Classifier for LogisticRegression {
    fn learn_one(&mut self, sample: &EncodedSample, label: bool) {
        let y = if label { 1.0 } else { 0.0 };
        // d(log-loss)/d(raw)
        let g = sigmoid(self.raw(sample)) - y;
        if self.l2 != 0.0 {
            for w in self.weights.iter_mut() {
                *w -= self.learning_rate * self.l2 * *w;
            }
        }
        for (f, x) in sample.iter() {
            self.weights[f.index()] -= self.learning_rate * g * x;
        }
        self.intercept -= self.intercept_lr * g;
    }

    fn predict_proba_one(&self, sample: &EncodedSample) -> ClassDistribution {
        ClassDistribution::from_present(sigmoid(self.raw(sample)))
    }
}
