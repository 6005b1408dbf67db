use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::{auc, MetricsReport, MetricsState, ScoreSource};
use super::EvalError;
use crate::features::{encode_record, percentile, FeatureSelector, SelectorConfig};
use crate::learners::{make_learner, Classifier, Learner, LearnerConfig};
use crate::record::ScreeningRecord;

/// Wall-clock source in seconds. The core is `no_std`, so callers supply it.
pub trait Clock {
    fn now(&mut self) -> f64;
}

/// Clock that never advances; runtimes come out as 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&mut self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub selector: SelectorConfig,
    /// Also score the cold-start segment.
    pub score_cold_start: bool,
    pub score_source: ScoreSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub report: MetricsReport,
    /// AUC over predicted probabilities, whatever `score_source` says.
    pub auc_probability: f64,
    pub threshold: f64,
    pub cold_start_len: usize,
    /// Tracked features below the threshold after the last sample.
    pub filtered_at_end: usize,
    pub selector: FeatureSelector,
}

/// Test-then-train over `records` in order.
///
/// Per sample: encode, update the running variances, filter (once the
/// threshold exists), score if past the cold start, then learn. Unless
/// `selector.threshold` is fixed, the threshold is the configured percentile
/// of the running variances at the end of the cold-start segment; samples
/// before that pass through unfiltered.
pub fn prequential_run<L: Classifier + ?Sized, C: Clock + ?Sized>(
    records: &[ScreeningRecord],
    learner: &mut L,
    config: &RunConfig,
    clock: &mut C,
) -> Result<RunOutcome, EvalError> {
    config.selector.validate()?;
    if records.is_empty() {
        return Err(EvalError::EmptyStream);
    }
    if let Some(index) = records.iter().position(|r| r.label.is_none()) {
        return Err(EvalError::MissingLabel { index });
    }
    let cold = config.selector.cold_start_len(records.len());
    if cold == records.len() && !config.score_cold_start {
        return Err(EvalError::NothingToScore);
    }

    let start = clock.now();
    let mut selector = FeatureSelector::new(config.selector.threshold.unwrap_or(0.0));
    let mut threshold = config.selector.threshold;
    let mut metrics = MetricsState::new();
    let mut probabilities: Vec<(f64, bool)> = Vec::new();

    for (i, record) in records.iter().enumerate() {
        let label = record.label.expect("checked above");
        let encoded = encode_record(record);
        selector.learn(&encoded);
        let sample = match threshold {
            Some(_) => selector.transform(&encoded),
            None => encoded,
        };
        if i >= cold || config.score_cold_start {
            let dist = learner.predict_proba_one(&sample);
            let predicted = dist.predicted();
            let score = match config.score_source {
                ScoreSource::HardLabel => predicted as u8 as f64,
                ScoreSource::Probability => dist.present(),
            };
            metrics.update(label, predicted, score);
            probabilities.push((dist.present(), label));
        }
        learner.learn_one(&sample, label);

        if i + 1 == cold && threshold.is_none() {
            let variances: Vec<f64> = selector.variances.variances().map(|(_, v)| v).collect();
            let t = percentile(&variances, config.selector.percentile).unwrap_or(0.0);
            selector.threshold = t;
            threshold = Some(t);
        }
    }
    metrics.add_runtime(clock.now() - start);

    Ok(RunOutcome {
        report: metrics.report(),
        auc_probability: auc(&probabilities),
        threshold: selector.threshold,
        cold_start_len: cold,
        filtered_at_end: selector.filtered_count(),
        selector,
    })
}

/// Builds a fresh learner from `config` and `seed` and replays `records`.
/// Returns the trained learner alongside the outcome.
pub fn replay<C: Clock + ?Sized>(
    config: &LearnerConfig,
    records: &[ScreeningRecord],
    run: &RunConfig,
    seed: u64,
    clock: &mut C,
) -> Result<(RunOutcome, Learner), EvalError> {
    let mut learner = make_learner(config.kind(), config, seed)?;
    let outcome = prequential_run(records, &mut learner, run, clock)?;
    Ok((outcome, learner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_threshold, EncodedSample};
    use crate::learners::{ClassDistribution, LearnerKind};
    use crate::record::{AgeBucket, ResponseOption, Topic};
    use core::cell::RefCell;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn records(seed: u64, n: usize) -> Vec<ScreeningRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut responses = [ResponseOption::No; 8];
                for r in responses.iter_mut() {
                    *r = ResponseOption::ALL[rng.random_range(1..6)];
                }
                let mut rec = ScreeningRecord::new(AgeBucket::ALL[rng.random_range(0..5)], responses, None);
                let y = rec.response(Topic::FeelingSadOrTearful) == ResponseOption::Yes
                    || rng.random::<f64>() < 0.3;
                rec.label = Some(y);
                rec
            })
            .collect()
    }

    /// Answers with the label of the record whose encoding it is shown;
    /// it peeks at the stream, not at the learner's training data.
    struct Oracle(Vec<(EncodedSample, bool)>);

    impl Classifier for Oracle {
        fn learn_one(&mut self, _: &EncodedSample, _: bool) {}
        fn predict_proba_one(&self, x: &EncodedSample) -> ClassDistribution {
            let y = self.0.iter().find(|(s, _)| s.iter().all(|(f, v)| x.get(f) == v) && x.iter().all(|(f, v)| s.get(f) == v)).map(|r| r.1);
            ClassDistribution::from_present(y.unwrap_or(false) as u8 as f64)
        }
    }

    #[test]
    fn oracle_scores_perfectly() {
        let recs = records(1, 60);
        let mut oracle = Oracle(recs.iter().map(|r| (encode_record(r), r.label.unwrap())).collect());
        let cfg = RunConfig { selector: SelectorConfig { threshold: Some(0.0), ..Default::default() }, ..Default::default() };
        let out = prequential_run(&recs, &mut oracle, &cfg, &mut NoClock).unwrap();
        assert_eq!(out.report.accuracy, 1.0);
        assert_eq!(out.report.samples, 54);
    }

    #[derive(Default)]
    struct Spy {
        log: RefCell<Vec<(char, usize)>>,
        learned: usize,
    }

    impl Classifier for Spy {
        fn learn_one(&mut self, _: &EncodedSample, _: bool) {
            self.log.borrow_mut().push(('L', self.learned));
            self.learned += 1;
        }
        fn predict_proba_one(&self, _: &EncodedSample) -> ClassDistribution {
            self.log.borrow_mut().push(('P', self.learned));
            ClassDistribution::UNIFORM
        }
    }

    #[test]
    fn every_prediction_precedes_its_training_step() {
        let recs = records(2, 50);
        let mut spy = Spy::default();
        prequential_run(&recs, &mut spy, &RunConfig::default(), &mut NoClock).unwrap();
        let log = spy.log.into_inner();
        // 5 cold-start samples are trained on, never scored
        assert_eq!(log.iter().filter(|e| e.0 == 'L').count(), 50);
        assert_eq!(log.iter().filter(|e| e.0 == 'P').count(), 45);
        for (k, w) in log.windows(2).enumerate() {
            if w[0].0 == 'P' {
                // predict for sample i is logged with i samples learned, and the
                // very next event is learning sample i
                assert_eq!(w[1], ('L', w[0].1), "at event {k}");
            }
        }
        assert_eq!(log.iter().find(|e| e.0 == 'P'), Some(&('P', 5)));
    }

    #[test]
    fn threshold_equals_batch_computation_on_prefix() {
        let recs = records(3, 300);
        let cfg = RunConfig::default();
        let mut m = make_learner(LearnerKind::Gnb, &LearnerConfig::Gnb, 0).unwrap();
        let out = prequential_run(&recs, &mut m, &cfg, &mut NoClock).unwrap();
        let prefix: Vec<EncodedSample> = recs[..30].iter().map(encode_record).collect();
        let batch = compute_threshold(&prefix, &cfg.selector).unwrap();
        assert_eq!(out.cold_start_len, 30);
        assert!((out.threshold - batch).abs() < 1e-12);
    }

    #[test]
    fn score_all_mode_scores_everything() {
        let recs = records(4, 40);
        let mut spy = Spy::default();
        let cfg = RunConfig { score_cold_start: true, ..Default::default() };
        let out = prequential_run(&recs, &mut spy, &cfg, &mut NoClock).unwrap();
        assert_eq!(out.report.samples, 40);
    }

    #[test]
    fn errors() {
        let mut spy = Spy::default();
        assert_eq!(prequential_run(&[], &mut spy, &RunConfig::default(), &mut NoClock).unwrap_err(), EvalError::EmptyStream);
        let mut recs = records(5, 10);
        recs[4].label = None;
        assert_eq!(
            prequential_run(&recs, &mut spy, &RunConfig::default(), &mut NoClock).unwrap_err(),
            EvalError::MissingLabel { index: 4 }
        );
        let one = records(6, 1);
        assert_eq!(prequential_run(&one, &mut spy, &RunConfig::default(), &mut NoClock).unwrap_err(), EvalError::NothingToScore);
    }

    #[test]
    fn same_seed_same_report() {
        let recs = records(7, 400);
        let cfg = LearnerConfig::Arfc { n_models: 5, features_per_split: crate::learners::MaxFeatures::Sqrt, lambda: 6.0 };
        let a = replay(&cfg, &recs, &RunConfig::default(), 11, &mut NoClock).unwrap().0;
        let b = replay(&cfg, &recs, &RunConfig::default(), 11, &mut NoClock).unwrap().0;
        assert_eq!(a.report, b.report);
    }

    struct Ticks(f64);
    impl Clock for Ticks {
        fn now(&mut self) -> f64 {
            self.0 += 1.5;
            self.0
        }
    }

    #[test]
    fn runtime_spans_the_loop() {
        let recs = records(8, 20);
        let mut spy = Spy::default();
        let out = prequential_run(&recs, &mut spy, &RunConfig::default(), &mut Ticks(0.0)).unwrap();
        assert_eq!(out.report.runtime_seconds, 1.5);
    }
}
