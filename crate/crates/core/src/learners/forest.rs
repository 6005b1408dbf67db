//! Adaptive random forest of Hoeffding trees.
//!
//! Each member sees every sample with a Poisson(lambda) weight and splits on
//! a random subset of features drawn per leaf. Every member has two ADWIN
//! detectors fed with its 0/1 error made before training on the sample. A
//! warning starts a background tree that trains alongside the member. A
//! drift replaces the member with its background tree, or with a fresh tree
//! if there is none.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::adwin::Adwin;
use super::hoeffding::{HoeffdingTree, TreeParams};
use super::{ClassDistribution, Classifier};
use crate::features::EncodedSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_models: usize,
    pub features_per_split: usize,
    pub lambda: f64,
    pub warning_delta: f64,
    pub drift_delta: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_models: 100,
            features_per_split: 7,
            lambda: 100.0,
            warning_delta: 0.01,
            drift_delta: 0.001,
        }
    }
}

/// Unweighted mean of the member distributions (uniform if empty).
pub fn aggregate_votes(votes: &[ClassDistribution]) -> ClassDistribution {
    if votes.is_empty() {
        return ClassDistribution::UNIFORM;
    }
    let n = votes.len() as f64;
    let absent = votes.iter().map(|v| v.absent()).sum::<f64>() / n;
    let present = votes.iter().map(|v| v.present()).sum::<f64>() / n;
    ClassDistribution::from_weights(absent, present)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Member {
    tree: HoeffdingTree,
    background: Option<HoeffdingTree>,
    warning: Adwin,
    drift: Adwin,
    rng: ChaCha8Rng,
}

impl Member {
    fn new(params: &ForestParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = fresh_tree(params, &mut rng);
        Self {
            tree,
            background: None,
            warning: Adwin::new(params.warning_delta),
            drift: Adwin::new(params.drift_delta),
            rng,
        }
    }
}

fn fresh_tree(params: &ForestParams, rng: &mut ChaCha8Rng) -> HoeffdingTree {
    HoeffdingTree::new(TreeParams::forest_member(params.features_per_split), rng.random())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRandomForest {
    params: ForestParams,
    members: Vec<Member>,
    warnings: u64,
    drifts: u64,
}

impl AdaptiveRandomForest {
    pub fn new(params: ForestParams, seed: u64) -> Self {
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let members = (0..params.n_models)
            .map(|_| Member::new(&params, master.random()))
            .collect();
        Self {
            params,
            members,
            warnings: 0,
            drifts: 0,
        }
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn member_distributions(&self, sample: &EncodedSample) -> Vec<ClassDistribution> {
        self.members
            .iter()
            .map(|m| m.tree.predict_proba_one(sample))
            .collect()
    }

    pub fn warnings(&self) -> u64 {
        self.warnings
    }

    pub fn drifts(&self) -> u64 {
        self.drifts
    }

    pub fn member(&self, i: usize) -> Option<&HoeffdingTree> {
        self.members.get(i).map(|m| &m.tree)
    }
}

impl Classifier for AdaptiveRandomForest {
    fn learn_one(&mut self, sample: &EncodedSample, label: bool) {
        let poisson = Poisson::new(self.params.lambda).ok();
        for member in &mut self.members {
            let err = (member.tree.predict_one(sample) != label) as u8 as f64;
            let k = match &poisson {
                Some(p) => p.sample(&mut member.rng),
                None => 1.0,
            };
            if k <= 0.0 {
                continue;
            }
            if let Some(bg) = member.background.as_mut() {
                bg.learn_weighted(sample, label, k);
            }
            member.tree.learn_weighted(sample, label, k);

            if member.warning.update(err) {
                self.warnings += 1;
                member.background = Some(fresh_tree(&self.params, &mut member.rng));
                member.warning = Adwin::new(self.params.warning_delta);
            }
            if member.drift.update(err) {
                self.drifts += 1;
                member.tree = match member.background.take() {
                    Some(bg) => bg,
                    None => fresh_tree(&self.params, &mut member.rng),
                };
                member.warning = Adwin::new(self.params.warning_delta);
                member.drift = Adwin::new(self.params.drift_delta);
            }
        }
    }

    fn predict_proba_one(&self, sample: &EncodedSample) -> ClassDistribution {
        aggregate_votes(&self.member_distributions(sample))
    }
}
