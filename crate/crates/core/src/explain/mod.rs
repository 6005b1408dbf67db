//! Counterfactual explanations: random perturbation search for a small set
//! of answer changes that flips the prediction, plus text rendering.

mod render;

pub use render::{explanation_rows, render_explanation, render_not_found, ExplanationRow};

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::{encode_record, FeatureSelector};
use crate::learners::{ClassDistribution, Classifier};
use crate::record::{AgeBucket, ResponseOption, ScreeningRecord, Topic};

/// An explanation is only offered when the winning class is this sure.
pub const ELIGIBILITY_THRESHOLD: f64 = 0.80;

pub const DEFAULT_ITERATIONS: usize = 100;

/// Strictly above [`ELIGIBILITY_THRESHOLD`].
pub fn eligible_for_explanation(distribution: &ClassDistribution) -> bool {
    distribution.max_probability() > ELIGIBILITY_THRESHOLD
}

/// Scores whole records.
pub trait RecordModel {
    fn predict_record(&self, record: &ScreeningRecord) -> ClassDistribution;
}

impl<F: Fn(&ScreeningRecord) -> ClassDistribution> RecordModel for F {
    fn predict_record(&self, record: &ScreeningRecord) -> ClassDistribution {
        self(record)
    }
}

/// A learner behind the same encode-and-select steps used in replay.
pub struct Pipeline<'a, L: ?Sized> {
    pub learner: &'a L,
    pub selector: &'a FeatureSelector,
}

impl<L: Classifier + ?Sized> RecordModel for Pipeline<'_, L> {
    fn predict_record(&self, record: &ScreeningRecord) -> ClassDistribution {
        let encoded = encode_record(record);
        self.learner.predict_proba_one(&self.selector.transform(&encoded))
    }
}

/// One editable field of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Age,
    Topic(Topic),
}

impl Field {
    /// Age first, then the topics in canonical order.
    pub fn all() -> impl Iterator<Item = Field> {
        core::iter::once(Field::Age).chain(Topic::ALL.into_iter().map(Field::Topic))
    }

    pub fn title(self) -> &'static str {
        match self {
            Field::Age => "Age",
            Field::Topic(t) => t.title(),
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Field::Age => "age",
            Field::Topic(t) => t.slug(),
        }
    }

    pub fn value_label(self, record: &ScreeningRecord) -> &'static str {
        match self {
            Field::Age => record.age_bucket.label(),
            Field::Topic(t) => record.response(t).label(),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Fields where two records disagree, in [`Field::all`] order.
pub fn changed_fields(a: &ScreeningRecord, b: &ScreeningRecord) -> Vec<Field> {
    Field::all()
        .filter(|&f| match f {
            Field::Age => a.age_bucket != b.age_bucket,
            Field::Topic(t) => a.response(t) != b.response(t),
        })
        .collect()
}

/// Replacement values per predicted class, chosen to push toward the other
/// class. Age moves to an adjacent bucket when enabled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationPolicy {
    pub when_present: Vec<ResponseOption>,
    pub when_absent: Vec<ResponseOption>,
    pub perturb_age: bool,
}

impl Default for PerturbationPolicy {
    fn default() -> Self {
        use ResponseOption::*;
        Self {
            when_present: alloc::vec![No, Sometimes],
            when_absent: alloc::vec![Yes, Often, Sometimes],
            perturb_age: true,
        }
    }
}

impl PerturbationPolicy {
    pub fn pool(&self, predicted: bool) -> &[ResponseOption] {
        if predicted {
            &self.when_present
        } else {
            &self.when_absent
        }
    }

    /// Values `field` may take other than its current one.
    fn alternatives(&self, record: &ScreeningRecord, field: Field, predicted: bool) -> Vec<Alt> {
        match field {
            Field::Age if self.perturb_age => [record.age_bucket.previous(), record.age_bucket.next()]
                .into_iter()
                .flatten()
                .map(Alt::Age)
                .collect(),
            Field::Age => Vec::new(),
            Field::Topic(t) => self
                .pool(predicted)
                .iter()
                .copied()
                .filter(|&o| o != record.response(t))
                .map(Alt::Option)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Alt {
    Age(AgeBucket),
    Option(ResponseOption),
}

fn set(record: &mut ScreeningRecord, field: Field, alt: Alt) {
    match (field, alt) {
        (Field::Age, Alt::Age(b)) => record.age_bucket = b,
        (Field::Topic(t), Alt::Option(o)) => record.set_response(t, o),
        _ => unreachable!("alternative does not match field"),
    }
}

fn revert(record: &mut ScreeningRecord, original: &ScreeningRecord, field: Field) {
    match field {
        Field::Age => record.age_bucket = original.age_bucket,
        Field::Topic(t) => record.set_response(t, original.response(t)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    /// Fields that differ between the input and `x_final`.
    pub relevant: Vec<Field>,
    /// Probability of the flipped class at `x_final`.
    pub flipped_probability: f64,
    pub x_final: ScreeningRecord,
    /// 1-based iteration at which this set was found.
    pub iterations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SearchOutcome {
    Found(CounterfactualResult),
    NotFound,
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&CounterfactualResult> {
        match self {
            SearchOutcome::Found(r) => Some(r),
            SearchOutcome::NotFound => None,
        }
    }
}

fn flips<M: RecordModel + ?Sized>(model: &M, candidate: &ScreeningRecord, predicted: bool) -> Option<f64> {
    let d = model.predict_record(candidate);
    (d.predicted() != predicted && d.probability(!predicted) > 0.5).then(|| d.probability(!predicted))
}

/// Random search over `n_iterations` trials for the smallest flipping change.
///
/// Each trial perturbs every field independently with probability 1/2 (at
/// least one field always moves), drawing a value from the policy pool for
/// the current prediction. A flipping trial is then shrunk by reverting
/// changes one at a time, in field order, as long as the flip survives. The
/// smallest set seen wins; ties keep the earliest.
pub fn counterfactual<M: RecordModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    x: &ScreeningRecord,
    predicted: bool,
    n_iterations: usize,
    policy: &PerturbationPolicy,
    rng: &mut R,
) -> SearchOutcome {
    let fields: Vec<(Field, Vec<Alt>)> = Field::all()
        .map(|f| (f, policy.alternatives(x, f, predicted)))
        .filter(|(_, alts)| !alts.is_empty())
        .collect();
    if fields.is_empty() {
        return SearchOutcome::NotFound;
    }
    let mut best: Option<CounterfactualResult> = None;
    for iteration in 1..=n_iterations {
        let mut candidate = x.clone();
        let mut moved = 0usize;
        for (field, alts) in &fields {
            if rng.random_bool(0.5) {
                set(&mut candidate, *field, alts[rng.random_range(0..alts.len())]);
                moved += 1;
            }
        }
        if moved == 0 {
            let (field, alts) = &fields[rng.random_range(0..fields.len())];
            set(&mut candidate, *field, alts[rng.random_range(0..alts.len())]);
        }
        let Some(mut prob) = flips(model, &candidate, predicted) else {
            continue;
        };
        loop {
            let mut shrunk = false;
            for field in changed_fields(x, &candidate) {
                let mut trial = candidate.clone();
                revert(&mut trial, x, field);
                if let Some(p) = flips(model, &trial, predicted) {
                    candidate = trial;
                    prob = p;
                    shrunk = true;
                }
            }
            if !shrunk {
                break;
            }
        }
        let relevant = changed_fields(x, &candidate);
        if best.as_ref().is_none_or(|b| relevant.len() < b.relevant.len()) {
            best = Some(CounterfactualResult {
                relevant,
                flipped_probability: prob,
                x_final: candidate,
                iterations_used: iteration,
            });
        }
    }
    match best {
        Some(r) => SearchOutcome::Found(r),
        None => SearchOutcome::NotFound,
    }
}
