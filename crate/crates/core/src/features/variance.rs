use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EncodedSample, Feature};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Moments {
    mean: f64,
    m2: f64,
}

/// Running per-feature sample variance (Welford, divisor `n - 1`).
///
/// The sample count is global: a feature absent from a sample counts as a 0
/// observation, and a feature seen for the first time is assumed to have been
/// 0 for every earlier sample. Since a run of zeros has mean 0 and M2 0, a new
/// feature can start from zeroed moments and stay exact.
///
/// A feature is tracked from its first non-zero value on. Indicators that
/// never fire (an option nobody chose) stay out of the variance list, the
/// same way a dummy column only exists for values present in the data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarianceState {
    n: u64,
    moments: BTreeMap<Feature, Moments>,
}

impl VarianceState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn update(&mut self, sample: &EncodedSample) {
        for (f, x) in sample.iter() {
            if x != 0.0 {
                self.moments.entry(f).or_default();
            }
        }
        self.n += 1;
        let n = self.n as f64;
        for (&f, m) in self.moments.iter_mut() {
            let x = sample.get(f);
            let delta = x - m.mean;
            m.mean += delta / n;
            m.m2 += delta * (x - m.mean);
        }
    }

    /// Sample variance of `feature`; 0 before two samples or for unseen features.
    pub fn variance(&self, feature: Feature) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.moments
            .get(&feature)
            .map_or(0.0, |m| (m.m2 / (self.n - 1) as f64).max(0.0))
    }

    pub fn mean(&self, feature: Feature) -> f64 {
        self.moments.get(&feature).map_or(0.0, |m| m.mean)
    }

    /// Features that have been non-zero at least once, in index order.
    pub fn features(&self) -> impl Iterator<Item = Feature> + '_ {
        self.moments.keys().copied()
    }

    pub fn variances(&self) -> impl Iterator<Item = (Feature, f64)> + '_ {
        self.features().map(|f| (f, self.variance(f)))
    }
}
