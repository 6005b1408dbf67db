use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EncodedSample, VarianceState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("cold-start segment is empty")]
    EmptyColdStart,
    #[error("percentile must lie in [0, 100]")]
    BadPercentile,
    #[error("cold-start fraction must lie in (0, 1]")]
    BadColdStartFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub percentile: f64,
    pub cold_start_fraction: f64,
    /// Fixed once computed from the cold-start segment.
    pub threshold: Option<f64>,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            percentile: 5.0,
            cold_start_fraction: 0.10,
            threshold: None,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if !(0.0..=100.0).contains(&self.percentile) {
            return Err(SelectionError::BadPercentile);
        }
        if !(self.cold_start_fraction > 0.0 && self.cold_start_fraction <= 1.0) {
            return Err(SelectionError::BadColdStartFraction);
        }
        Ok(())
    }

    /// `ceil(fraction * n)`, clamped to `[1, n]` for non-empty streams.
    pub fn cold_start_len(&self, n: usize) -> usize {
        if n == 0 {
            return 0;
        }
        let raw = self.cold_start_fraction * n as f64;
        // absorb representation error, e.g. 0.1 * 1490 = 149.00000000000003
        let len = libm::ceil(raw - 1e-9) as usize;
        len.clamp(1, n)
    }
}

/// Linear-interpolation percentile between order statistics (inclusive
/// method: rank `p/100 * (n - 1)`). Returns `None` on an empty list.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(rank) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Percentile of the per-feature variances over the cold-start samples.
pub fn compute_threshold(
    cold_start: &[EncodedSample],
    config: &SelectorConfig,
) -> Result<f64, SelectionError> {
    config.validate()?;
    if cold_start.is_empty() {
        return Err(SelectionError::EmptyColdStart);
    }
    let mut state = VarianceState::new();
    for s in cold_start {
        state.update(s);
    }
    let variances: Vec<f64> = state.variances().map(|(_, v)| v).collect();
    percentile(&variances, config.percentile).ok_or(SelectionError::EmptyColdStart)
}

/// Drops every feature whose current running variance is below `threshold`.
pub fn select_features(
    sample: &EncodedSample,
    state: &VarianceState,
    threshold: f64,
) -> EncodedSample {
    sample
        .iter()
        .filter(|&(f, _)| state.variance(f) >= threshold)
        .collect()
}

/// Threshold plus running variances. The threshold stays fixed; the
/// variances keep moving while the selector is learning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelector {
    pub threshold: f64,
    pub variances: VarianceState,
}

impl FeatureSelector {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            variances: VarianceState::new(),
        }
    }

    pub fn learn(&mut self, sample: &EncodedSample) {
        self.variances.update(sample);
    }

    pub fn transform(&self, sample: &EncodedSample) -> EncodedSample {
        select_features(sample, &self.variances, self.threshold)
    }

    /// Number of observed features currently below the threshold.
    pub fn filtered_count(&self) -> usize {
        self.variances
            .variances()
            .filter(|&(_, v)| v < self.threshold)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{encode_record, Feature};
    use crate::record::{AgeBucket, ResponseOption, ScreeningRecord, Topic};
    use proptest::prelude::*;

    /// Independent oracle: explicit order statistics with the interpolation
    /// weight computed from the fractional rank.
    fn oracle(values: &[f64], p: f64) -> f64 {
        let mut v = values.to_vec();
        for i in 0..v.len() {
            for j in 0..v.len() - 1 - i {
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                }
            }
        }
        let pos = p * (v.len() as f64 - 1.0) / 100.0;
        let below = pos as usize;
        if below + 1 >= v.len() {
            return v[v.len() - 1];
        }
        let w = pos - below as f64;
        (1.0 - w) * v[below] + w * v[below + 1]
    }

    #[test]
    fn median_of_tenths() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        assert!((percentile(&xs, 50.0).unwrap() - 0.45).abs() < 1e-12);
        assert!((oracle(&xs, 50.0) - 0.45).abs() < 1e-12);
    }

    #[test]
    fn constant_cold_start_gives_zero() {
        let r = ScreeningRecord::new(AgeBucket::From30To35, [ResponseOption::No; 8], None);
        let cold: Vec<_> = (0..20).map(|_| encode_record(&r)).collect();
        assert_eq!(compute_threshold(&cold, &SelectorConfig::default()), Ok(0.0));
    }

    #[test]
    fn empty_cold_start_is_an_error() {
        assert_eq!(
            compute_threshold(&[], &SelectorConfig::default()),
            Err(SelectionError::EmptyColdStart)
        );
        let bad = SelectorConfig {
            percentile: 101.0,
            ..Default::default()
        };
        assert_eq!(
            compute_threshold(&[EncodedSample::new()], &bad),
            Err(SelectionError::BadPercentile)
        );
    }

    #[test]
    fn cold_start_lengths() {
        let c = SelectorConfig::default();
        assert_eq!(c.cold_start_len(1491), 150);
        assert_eq!(c.cold_start_len(1490), 149);
        assert_eq!(c.cold_start_len(1046), 105);
        assert_eq!(c.cold_start_len(3), 1);
        assert_eq!(c.cold_start_len(0), 0);
    }

    fn varied_state() -> (VarianceState, EncodedSample) {
        let mut st = VarianceState::new();
        let mut last = EncodedSample::new();
        for i in 0..30u32 {
            let mut r = ScreeningRecord::new(AgeBucket::ALL[(i % 5) as usize], [ResponseOption::No; 8], None);
            if i % 3 == 0 {
                r.set_response(Topic::TroubleSleeping, ResponseOption::Yes);
            }
            last = encode_record(&r);
            st.update(&last);
        }
        (st, last)
    }

    #[test]
    fn zero_threshold_is_identity_and_high_threshold_empties() {
        let (st, s) = varied_state();
        assert_eq!(select_features(&s, &st, 0.0), s);
        let max = st.variances().map(|(_, v)| v).fold(0.0, f64::max);
        assert!(select_features(&s, &st, max + 1e-6).is_empty());
        let kept = select_features(&s, &st, 0.1);
        assert!(kept.contains(Feature::Topic(Topic::TroubleSleeping, ResponseOption::Yes)));
        assert!(!kept.contains(Feature::Topic(Topic::FeelingGuilty, ResponseOption::Yes)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn percentile_matches_oracle(
            xs in proptest::collection::vec(0.0f64..1.0, 1..100),
            p in 0.0f64..=100.0,
        ) {
            let got = percentile(&xs, p).unwrap();
            prop_assert!((got - oracle(&xs, p)).abs() <= 1e-12);
        }

        #[test]
        fn selection_monotone_in_threshold(a in 0.0f64..0.3, b in 0.0f64..0.3) {
            let (st, s) = varied_state();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let small = select_features(&s, &st, hi);
            let large = select_features(&s, &st, lo);
            prop_assert!(small.features().all(|f| large.contains(f)));
        }
    }
}
