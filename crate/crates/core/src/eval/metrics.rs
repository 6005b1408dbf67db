use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// What is fed to the AUC. `HardLabel` ranks the 0/1 predictions, which
/// makes the AUC equal to the macro recall; `Probability` ranks the
/// predicted probability of PPD presence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    #[default]
    HardLabel,
    Probability,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    /// Present predicted present.
    pub tp: u64,
    /// Absent predicted present.
    pub fp: u64,
    /// Absent predicted absent.
    pub tn: u64,
    /// Present predicted absent.
    pub fn_: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl ClassMetrics {
    fn new(hit: u64, predicted: u64, actual: u64) -> Self {
        let precision = ratio(hit, predicted);
        let recall = ratio(hit, actual);
        Self {
            precision,
            recall,
            f_measure: harmonic(precision, recall),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub auc: f64,
    /// Unweighted mean of the two classes.
    pub macro_avg: ClassMetrics,
    /// Class #0.
    pub absent: ClassMetrics,
    /// Class #1.
    pub present: ClassMetrics,
    pub runtime_seconds: f64,
    pub samples: u64,
}

/// Area under the ROC curve via average ranks (ties count one half), i.e.
/// the normalized Mann-Whitney U. 0.5 when either class is missing.
pub fn auc(scores: &[(f64, bool)]) -> f64 {
    let n_pos = scores.iter().filter(|s| s.1).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mean_rank = (i + j + 2) as f64 / 2.0;
        let pos = sorted[i..=j].iter().filter(|s| s.1).count();
        rank_sum += mean_rank * pos as f64;
        i = j + 1;
    }
    let np = n_pos as f64;
    let u = rank_sum - np * (np + 1.0) / 2.0;
    u / (np * n_neg as f64)
}

/// Streaming confusion counts plus the retained score list for the AUC.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsState {
    confusion: Confusion,
    scores: Vec<(f64, bool)>,
    runtime_seconds: f64,
}

impl MetricsState {
    pub fn new() -> Self {
        Self::default()
    }

    /// `score` is the positive-class score in `[0, 1]`.
    pub fn update(&mut self, truth: bool, predicted: bool, score: f64) {
        self.confusion.record(truth, predicted);
        self.scores.push((score.clamp(0.0, 1.0), truth));
    }

    pub fn add_runtime(&mut self, seconds: f64) {
        self.runtime_seconds += seconds;
    }

    pub fn confusion(&self) -> Confusion {
        self.confusion
    }

    pub fn scores(&self) -> &[(f64, bool)] {
        &self.scores
    }

    pub fn samples(&self) -> u64 {
        self.confusion.total()
    }

    pub fn report(&self) -> MetricsReport {
        let c = self.confusion;
        let present = ClassMetrics::new(c.tp, c.tp + c.fp, c.tp + c.fn_);
        let absent = ClassMetrics::new(c.tn, c.tn + c.fn_, c.tn + c.fp);
        let macro_avg = ClassMetrics {
            precision: (present.precision + absent.precision) / 2.0,
            recall: (present.recall + absent.recall) / 2.0,
            f_measure: (present.f_measure + absent.f_measure) / 2.0,
        };
        MetricsReport {
            accuracy: ratio(c.tp + c.tn, c.total()),
            auc: auc(&self.scores),
            macro_avg,
            absent,
            present,
            runtime_seconds: self.runtime_seconds,
            samples: c.total(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eight_two_two_eight() {
        let mut m = MetricsState::new();
        for (truth, pred, k) in [(true, true, 8), (false, true, 2), (true, false, 2), (false, false, 8)] {
            for _ in 0..k {
                m.update(truth, pred, pred as u8 as f64);
            }
        }
        let r = m.report();
        assert!((r.present.precision - 0.8).abs() < 1e-15);
        assert!((r.present.recall - 0.8).abs() < 1e-15);
        assert!((r.present.f_measure - 0.8).abs() < 1e-15);
        assert!((r.accuracy - 0.8).abs() < 1e-15);
        assert_eq!(r.samples, 20);
    }

    #[test]
    fn separated_and_tied_scores() {
        let sep: Vec<(f64, bool)> = (0..10).map(|i| if i % 2 == 0 { (0.9, true) } else { (0.1, false) }).collect();
        assert_eq!(auc(&sep), 1.0);
        let tied: Vec<(f64, bool)> = (0..10).map(|i| (0.3, i % 3 == 0)).collect();
        assert_eq!(auc(&tied), 0.5);
        assert_eq!(auc(&[(0.2, true)]), 0.5);
    }

    #[test]
    fn no_positive_predictions_gives_zero_precision() {
        let mut m = MetricsState::new();
        m.update(true, false, 0.0);
        m.update(false, false, 0.0);
        let r = m.report();
        assert_eq!(r.present.precision, 0.0);
        assert_eq!(r.present.f_measure, 0.0);
        assert_eq!(r.absent.precision, 0.5);
    }

    #[test]
    fn hard_label_auc_is_macro_recall() {
        let rows = [(true, true), (true, false), (false, false), (false, false), (false, true), (true, true), (true, true)];
        let mut m = MetricsState::new();
        for (t, p) in rows {
            m.update(t, p, p as u8 as f64);
        }
        let r = m.report();
        assert!((r.auc - r.macro_avg.recall).abs() < 1e-12);
    }

    fn brute_mann_whitney(scores: &[(f64, bool)]) -> f64 {
        let mut u = 0.0;
        let mut pairs = 0.0;
        for p in scores.iter().filter(|s| s.1) {
            for n in scores.iter().filter(|s| !s.1) {
                pairs += 1.0;
                if p.0 > n.0 {
                    u += 1.0;
                } else if p.0 == n.0 {
                    u += 0.5;
                }
            }
        }
        if pairs == 0.0 {
            0.5
        } else {
            u / pairs
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn metrics_match_confusion_oracle(rows in proptest::collection::vec((proptest::bool::ANY, proptest::bool::ANY), 1..1000)) {
            let mut m = MetricsState::new();
            for &(t, p) in &rows {
                m.update(t, p, p as u8 as f64);
            }
            let r = m.report();
            let count = |t: bool, p: bool| rows.iter().filter(|r| r.0 == t && r.1 == p).count() as f64;
            let (tp, fp, tn, fneg) = (count(true, true), count(false, true), count(false, false), count(true, false));
            let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
            let f = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            let n = rows.len() as f64;
            prop_assert_eq!(r.accuracy, (tp + tn) / n);
            let (p1, r1) = (div(tp, tp + fp), div(tp, tp + fneg));
            let (p0, r0) = (div(tn, tn + fneg), div(tn, tn + fp));
            prop_assert_eq!(r.present.precision, p1);
            prop_assert_eq!(r.present.recall, r1);
            prop_assert_eq!(r.absent.precision, p0);
            prop_assert_eq!(r.absent.recall, r0);
            prop_assert_eq!(r.present.f_measure, f(p1, r1));
            prop_assert_eq!(r.absent.f_measure, f(p0, r0));
            prop_assert_eq!(r.macro_avg.precision, (p1 + p0) / 2.0);
            prop_assert_eq!(r.macro_avg.recall, (r1 + r0) / 2.0);
            prop_assert_eq!(r.macro_avg.f_measure, (f(p1, r1) + f(p0, r0)) / 2.0);
            prop_assert_eq!(r.samples, rows.len() as u64);
        }

        #[test]
        fn auc_matches_pairwise_oracle(
            rows in proptest::collection::vec((0u8..20, proptest::bool::ANY), 1..500),
        ) {
            // coarse scores force plenty of ties
            let scores: Vec<(f64, bool)> = rows.iter().map(|&(s, y)| (s as f64 / 19.0, y)).collect();
            prop_assert!((auc(&scores) - brute_mann_whitney(&scores)).abs() <= 1e-9);
        }
    }
}
