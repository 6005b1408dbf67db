//! Seeded questionnaire streams with a controllable class signal. Used for
//! runtime checks and fixtures when the public survey is not at hand.

use ppd_core::record::{AgeBucket, ResponseOption, ScreeningRecord, Topic};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub absent: usize,
    pub present: usize,
    /// Probability that an answer follows the class-typical pattern rather
    /// than a uniform draw.
    pub signal: f64,
}

impl SyntheticSpec {
    /// Same class counts as the public survey.
    pub const SURVEY_SIZED: SyntheticSpec = SyntheticSpec {
        absent: 523,
        present: 968,
        signal: 0.6,
    };

    /// `n` records with roughly the survey's class ratio.
    pub fn small(n: usize) -> Self {
        let absent = n * 523 / 1491;
        SyntheticSpec {
            absent,
            present: n - absent,
            signal: 0.6,
        }
    }
}

const ANSWERS: [ResponseOption; 5] = [
    ResponseOption::Yes,
    ResponseOption::Sometimes,
    ResponseOption::Often,
    ResponseOption::No,
    ResponseOption::UnwillingToDisclose,
];

fn typical(present: bool, rng: &mut ChaCha8Rng) -> ResponseOption {
    let pool: &[ResponseOption] = if present {
        &[ResponseOption::Yes, ResponseOption::Often, ResponseOption::Sometimes]
    } else {
        &[ResponseOption::No, ResponseOption::No, ResponseOption::Sometimes]
    };
    pool[rng.random_range(0..pool.len())]
}

/// Labels are shuffled so that the class counts are exact; no NA answers.
pub fn synthetic_stream(spec: &SyntheticSpec, seed: u64) -> Vec<ScreeningRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<bool> = std::iter::repeat_n(false, spec.absent)
        .chain(std::iter::repeat_n(true, spec.present))
        .collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .map(|y| {
            let mut responses = [ResponseOption::No; 8];
            for t in Topic::ALL {
                responses[t.index()] = if rng.random::<f64>() < spec.signal {
                    typical(y, &mut rng)
                } else {
                    ANSWERS[rng.random_range(0..ANSWERS.len())]
                };
            }
            let age = AgeBucket::ALL[rng.random_range(0..AgeBucket::ALL.len())];
            ScreeningRecord::new(age, responses, Some(y))
        })
        .collect()
}

/// Every record has `trouble_sleeping` answered, and the label is exactly
/// whether that answer is `Yes`. Other answers are uniform noise.
pub fn single_feature_stream(n: usize, seed: u64) -> Vec<ScreeningRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut responses = [ResponseOption::No; 8];
            for r in responses.iter_mut() {
                *r = ANSWERS[rng.random_range(0..ANSWERS.len())];
            }
            let y = responses[Topic::TroubleSleeping.index()] == ResponseOption::Yes;
            let age = AgeBucket::ALL[rng.random_range(0..AgeBucket::ALL.len())];
            ScreeningRecord::new(age, responses, Some(y))
        })
        .collect()
}
