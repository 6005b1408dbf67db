//! Prequential evaluation, streaming metrics, class balancing and the
//! hyperparameter grid runner.

mod grid;
mod metrics;
mod prequential;

pub use grid::{apply_param, grid_search, pick_best, GridAxis, GridResult, GridRun, ParamGrid};
pub use metrics::{auc, ClassMetrics, Confusion, MetricsReport, MetricsState, ScoreSource};
pub use prequential::{prequential_run, replay, Clock, NoClock, RunConfig, RunOutcome};

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::SelectionError;
use crate::learners::{LearnerError, LearnerKind};
use crate::record::ScreeningRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("the stream is empty")]
    EmptyStream,
    #[error("no samples left to score after the cold-start segment")]
    NothingToScore,
    #[error("record {index} has no label")]
    MissingLabel { index: usize },
    #[error("balancing needs both classes present")]
    SingleClass,
    #[error("{0} has no hyperparameter grid")]
    NoGrid(LearnerKind),
    #[error("the grid has no points")]
    EmptyGrid,
    #[error("unknown hyperparameter `{0}`")]
    UnknownParameter(String),
    #[error("bad value `{value}` for `{name}`")]
    BadParameterValue { name: String, value: String },
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Randomly drops majority-class records, without replacement, down to the
/// minority count. Surviving records keep their original order.
pub fn balanced_downsample(
    records: &[ScreeningRecord],
    seed: u64,
) -> Result<Vec<ScreeningRecord>, EvalError> {
    if let Some(index) = records.iter().position(|r| r.label.is_none()) {
        return Err(EvalError::MissingLabel { index });
    }
    let positives: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == Some(true)).collect();
    let negatives: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == Some(false)).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(EvalError::SingleClass);
    }
    let (minority, majority) = if positives.len() <= negatives.len() {
        (positives, negatives)
    } else {
        (negatives, positives)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = sample_indices(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|k| majority[k])
        .chain(minority.iter().copied())
        .collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| records[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{AgeBucket, ResponseOption};

    fn recs(pos: usize, neg: usize) -> Vec<ScreeningRecord> {
        // interleave, tagging each record by its position through the age bucket
        let mut out = Vec::new();
        let (mut p, mut n) = (0, 0);
        while p < pos || n < neg {
            if p < pos {
                out.push(ScreeningRecord::new(AgeBucket::ALL[out.len() % 5], [ResponseOption::Yes; 8], Some(true)));
                p += 1;
            }
            if n < neg {
                out.push(ScreeningRecord::new(AgeBucket::ALL[out.len() % 5], [ResponseOption::No; 8], Some(false)));
                n += 1;
            }
        }
        out
    }

    #[test]
    fn counts_and_order() {
        let data = recs(968, 523);
        let bal = balanced_downsample(&data, 7).unwrap();
        assert_eq!(bal.len(), 1046);
        assert_eq!(bal.iter().filter(|r| r.label == Some(true)).count(), 523);
        // subsequence of the input
        let mut it = data.iter();
        assert!(bal.iter().all(|b| it.any(|d| d == b)));
    }

    #[test]
    fn balanced_input_is_identity() {
        let data = recs(20, 20);
        assert_eq!(balanced_downsample(&data, 3).unwrap(), data);
    }

    #[test]
    fn seeds_pick_different_subsets() {
        let data: Vec<ScreeningRecord> = (0..200)
            .map(|i| {
                let mut r = ScreeningRecord::new(AgeBucket::ALL[i % 5], [ResponseOption::No; 8], Some(i % 4 == 0));
                r.set_response(crate::record::Topic::ALL[i % 8], ResponseOption::ALL[(i / 8) % 6]);
                r
            })
            .collect();
        let a = balanced_downsample(&data, 1).unwrap();
        let b = balanced_downsample(&data, 2).unwrap();
        assert_eq!(a.len(), b.len());
        assert_ne!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(balanced_downsample(&recs(5, 0), 0), Err(EvalError::SingleClass));
    }
}
