//! Hoeffding tree over Boolean features, with optional per-node drift
//! monitoring and alternate-subtree replacement (the adaptive variant).
//!
//! Leaves keep per-candidate-feature class counts for both feature values.
//! Once a leaf has absorbed `grace_period` weight since its last attempt it
//! ranks candidate splits by information gain (bits). It splits when the gap
//! between the best and the second-best candidate (the "no split" option
//! counts, with gain 0) exceeds the Hoeffding bound for the observed weight,
//! or when the bound itself has shrunk below `tie_threshold`.
//!
//! In adaptive mode every node feeds the 0/1 error of its subtree's
//! prediction into an ADWIN detector. A detected rise in error grows an
//! alternate subtree at that node; the alternate replaces the original once
//! its error is significantly lower, and is dropped once it is significantly
//! higher.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adwin::Adwin;
use super::{ClassDistribution, Classifier};
use crate::features::{EncodedSample, Feature, FEATURE_COUNT};

/// Rough footprint of one node: a full leaf carries 53 x 2 x 2 counters plus
/// its detector. The memory budget is enforced as `nodes * this <= budget`.
pub const NODE_BYTES_ESTIMATE: f64 = 4096.0;

const MIB: f64 = 1024.0 * 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub grace_period: f64,
    /// Split confidence.
    pub delta: f64,
    pub tie_threshold: f64,
    pub max_depth: Option<usize>,
    pub max_size_mib: f64,
    /// Random candidate subset drawn per leaf; `None` considers every feature.
    pub max_features: Option<usize>,
    pub adaptive: bool,
    pub min_branch_fraction: f64,
    pub drift_window_threshold: u64,
    pub switch_significance: f64,
    pub drift_delta: f64,
}

impl TreeParams {
    pub fn adaptive() -> Self {
        Self {
            grace_period: 200.0,
            delta: 1e-7,
            tie_threshold: 0.05,
            max_depth: None,
            max_size_mib: 50.0,
            max_features: None,
            adaptive: true,
            min_branch_fraction: 0.01,
            drift_window_threshold: 300,
            switch_significance: 0.05,
            drift_delta: 0.002,
        }
    }

    /// Plain (non-adaptive) tree as used inside the random forest.
    pub fn forest_member(max_features: usize) -> Self {
        Self {
            grace_period: 50.0,
            delta: 0.01,
            max_features: Some(max_features),
            adaptive: false,
            ..Self::adaptive()
        }
    }
}

/// `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> f64 {
    libm::sqrt(range * range * libm::log(1.0 / delta) / (2.0 * n))
}

/// Split rule: a clear winner, or a tie the bound can no longer separate.
pub fn should_split(best: f64, second: f64, bound: f64, tie_threshold: f64) -> bool {
    best - second > bound || bound < tie_threshold
}

fn entropy(weights: &[f64; 2]) -> f64 {
    let total = weights[0] + weights[1];
    if total <= 0.0 {
        return 0.0;
    }
    weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * libm::log2(p)
        })
        .sum()
}

fn branch(sample: &EncodedSample, feature: Feature) -> usize {
    (sample.get(feature) > 0.5) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ErrorMonitor {
    adwin: Adwin,
    errors: f64,
    seen: u64,
}

impl ErrorMonitor {
    fn new(delta: f64) -> Self {
        Self {
            adwin: Adwin::new(delta),
            errors: 0.0,
            seen: 0,
        }
    }

    fn mean(&self) -> f64 {
        if self.seen == 0 {
            0.0
        } else {
            self.errors / self.seen as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LeafStats {
    candidates: Vec<Feature>,
    /// `counts[i][value][class]` for `candidates[i]`.
    counts: Vec<[[f64; 2]; 2]>,
    observed: [f64; 2],
    weight_at_last_attempt: f64,
    mc_correct: f64,
    nb_correct: f64,
}

impl LeafStats {
    fn new(candidates: Vec<Feature>) -> Self {
        let n = candidates.len();
        Self {
            candidates,
            counts: alloc::vec![[[0.0; 2]; 2]; n],
            observed: [0.0; 2],
            weight_at_last_attempt: 0.0,
            mc_correct: 0.0,
            nb_correct: 0.0,
        }
    }

    fn majority(class_weights: &[f64; 2]) -> ClassDistribution {
        ClassDistribution::from_weights(class_weights[0], class_weights[1])
    }

    /// Laplace-smoothed naive Bayes over the candidate features.
    fn naive_bayes(&self, class_weights: &[f64; 2], sample: &EncodedSample) -> ClassDistribution {
        let total = class_weights[0] + class_weights[1];
        if total <= 0.0 {
            return ClassDistribution::UNIFORM;
        }
        let mut ll = [0.0f64; 2];
        for c in 0..2 {
            if class_weights[c] <= 0.0 {
                ll[c] = f64::NEG_INFINITY;
                continue;
            }
            ll[c] = libm::log(class_weights[c] / total);
            for (i, &f) in self.candidates.iter().enumerate() {
                let v = branch(sample, f);
                let n_fc = self.counts[i][0][c] + self.counts[i][1][c];
                ll[c] += libm::log((self.counts[i][v][c] + 1.0) / (n_fc + 2.0));
            }
        }
        let hi = ll[0].max(ll[1]);
        ClassDistribution::from_weights(libm::exp(ll[0] - hi), libm::exp(ll[1] - hi))
    }

    fn predict(&self, class_weights: &[f64; 2], sample: &EncodedSample) -> ClassDistribution {
        if self.nb_correct > self.mc_correct {
            self.naive_bayes(class_weights, sample)
        } else {
            Self::majority(class_weights)
        }
    }

    fn learn(&mut self, class_weights: &[f64; 2], sample: &EncodedSample, label: bool, weight: f64) {
        if class_weights[0] + class_weights[1] > 0.0 {
            if Self::majority(class_weights).predicted() == label {
                self.mc_correct += weight;
            }
            if self.naive_bayes(class_weights, sample).predicted() == label {
                self.nb_correct += weight;
            }
        }
        let c = label as usize;
        self.observed[c] += weight;
        for (i, &f) in self.candidates.iter().enumerate() {
            self.counts[i][branch(sample, f)][c] += weight;
        }
    }

    fn observed_weight(&self) -> f64 {
        self.observed[0] + self.observed[1]
    }

    /// Information gain of splitting on `candidates[i]`; `-inf` when fewer
    /// than two branches would receive `min_fraction` of the weight.
    fn gain(&self, i: usize, min_fraction: f64) -> f64 {
        let total = self.observed_weight();
        let branch_weights = [
            self.counts[i][0][0] + self.counts[i][0][1],
            self.counts[i][1][0] + self.counts[i][1][1],
        ];
        if branch_weights.iter().filter(|&&w| w / total >= min_fraction).count() < 2 {
            return f64::NEG_INFINITY;
        }
        let after: f64 = (0..2)
            .map(|v| branch_weights[v] / total * entropy(&self.counts[i][v]))
            .sum();
        entropy(&self.observed) - after
    }

    /// Best candidate index if the split rule fires.
    fn choose_split(&self, params: &TreeParams) -> Option<usize> {
        let mut ranked: Vec<(Option<usize>, f64)> = (0..self.candidates.len())
            .map(|i| (Some(i), self.gain(i, params.min_branch_fraction)))
            .collect();
        ranked.push((None, 0.0));
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best, best_merit) = ranked[0];
        let second_merit = ranked[1].1;
        let bound = hoeffding_bound(1.0, params.delta, self.observed_weight());
        match best {
            Some(i) if best_merit > 0.0 && should_split(best_merit, second_merit, bound, params.tie_threshold) => {
                Some(i)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum NodeKind {
    Leaf(LeafStats),
    Split {
        feature: Feature,
        children: Box<[Node; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    depth: usize,
    class_weights: [f64; 2],
    kind: NodeKind,
    monitor: Option<ErrorMonitor>,
    alternate: Option<Box<Node>>,
    is_alternate: bool,
}

struct Ctx<'a> {
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    growth_allowed: bool,
    splits: u64,
    swaps: u64,
    pruned_alternates: u64,
}

impl Ctx<'_> {
    fn candidates(&mut self) -> Vec<Feature> {
        match self.params.max_features {
            Some(m) if m < FEATURE_COUNT => {
                let mut idx: Vec<usize> = sample_indices(self.rng, FEATURE_COUNT, m).into_vec();
                idx.sort_unstable();
                idx.into_iter().filter_map(Feature::from_index).collect()
            }
            _ => Feature::all().collect(),
        }
    }

    fn new_leaf(&mut self, depth: usize, class_weights: [f64; 2], is_alternate: bool) -> Node {
        Node {
            depth,
            class_weights,
            kind: NodeKind::Leaf(LeafStats::new(self.candidates())),
            monitor: self
                .params
                .adaptive
                .then(|| ErrorMonitor::new(self.params.drift_delta)),
            alternate: None,
            is_alternate,
        }
    }
}

impl Node {
    fn predict(&self, sample: &EncodedSample) -> ClassDistribution {
        match &self.kind {
            NodeKind::Leaf(stats) => stats.predict(&self.class_weights, sample),
            NodeKind::Split { feature, children } => children[branch(sample, *feature)].predict(sample),
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        if let NodeKind::Split { children, .. } = &self.kind {
            children[0].visit(f);
            children[1].visit(f);
        }
        if let Some(alt) = &self.alternate {
            alt.visit(f);
        }
    }

    fn promote(&mut self) {
        self.is_alternate = false;
        if let NodeKind::Split { children, .. } = &mut self.kind {
            children[0].promote();
            children[1].promote();
        }
    }

    fn learn(&mut self, sample: &EncodedSample, label: bool, weight: f64, ctx: &mut Ctx<'_>) {
        if self.monitor.is_some() {
            let err = (self.predict(sample).predicted() != label) as u8 as f64;
            let monitor = self.monitor.as_mut().expect("checked above");
            let before = monitor.adwin.estimation();
            let drift = monitor.adwin.update(err);
            monitor.errors += err;
            monitor.seen += 1;
            let worse = drift && monitor.adwin.estimation() > before;
            if worse && self.alternate.is_none() && !self.is_alternate {
                self.alternate = Some(Box::new(ctx.new_leaf(self.depth, [0.0; 2], true)));
            }
            if self.review_alternate(ctx) {
                // the promoted subtree has not seen this sample yet
                return self.learn(sample, label, weight, ctx);
            }
            if let Some(alt) = self.alternate.as_mut() {
                alt.learn(sample, label, weight, ctx);
            }
        }

        let before = self.class_weights;
        self.class_weights[label as usize] += weight;
        let depth = self.depth;
        let is_alternate = self.is_alternate;
        let split_on = match &mut self.kind {
            NodeKind::Split { feature, children } => {
                children[branch(sample, *feature)].learn(sample, label, weight, ctx);
                None
            }
            NodeKind::Leaf(stats) => {
                stats.learn(&before, sample, label, weight);
                let depth_ok = ctx.params.max_depth.is_none_or(|m| depth < m);
                let pure = stats.observed.iter().any(|&w| w == 0.0);
                let due = stats.observed_weight() - stats.weight_at_last_attempt
                    >= ctx.params.grace_period;
                if due && depth_ok && ctx.growth_allowed && !pure {
                    stats.weight_at_last_attempt = stats.observed_weight();
                    stats
                        .choose_split(ctx.params)
                        .map(|i| (stats.candidates[i], stats.counts[i]))
                } else {
                    None
                }
            }
        };
        if let Some((feature, counts)) = split_on {
            let left = ctx.new_leaf(depth + 1, counts[0], is_alternate);
            let right = ctx.new_leaf(depth + 1, counts[1], is_alternate);
            self.kind = NodeKind::Split {
                feature,
                children: Box::new([left, right]),
            };
            ctx.splits += 1;
        }
    }

    /// Swaps in or discards the alternate subtree. Returns true on a swap.
    fn review_alternate(&mut self, ctx: &mut Ctx<'_>) -> bool {
        let (Some(alt), Some(own)) = (self.alternate.as_ref(), self.monitor.as_ref()) else {
            return false;
        };
        let Some(alt_mon) = alt.monitor.as_ref() else {
            return false;
        };
        let threshold = ctx.params.drift_window_threshold;
        if alt_mon.seen <= threshold || own.seen <= threshold {
            return false;
        }
        let old_rate = own.mean();
        let alt_rate = alt_mon.mean();
        let n_inv = 1.0 / alt_mon.seen as f64 + 1.0 / own.seen as f64;
        let bound = libm::sqrt(
            2.0 * old_rate * (1.0 - old_rate) * libm::log(2.0 / ctx.params.switch_significance) * n_inv,
        );
        if bound < old_rate - alt_rate {
            let mut promoted = *self.alternate.take().expect("checked above");
            promoted.promote();
            *self = promoted;
            ctx.swaps += 1;
            true
        } else {
            if bound < alt_rate - old_rate {
                self.alternate = None;
                ctx.pruned_alternates += 1;
            }
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    params: TreeParams,
    root: Node,
    rng: ChaCha8Rng,
    splits: u64,
    swaps: u64,
    pruned_alternates: u64,
}

impl HoeffdingTree {
    pub fn new(params: TreeParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let root = {
            let mut ctx = Ctx {
                params: &params,
                rng: &mut rng,
                growth_allowed: true,
                splits: 0,
                swaps: 0,
                pruned_alternates: 0,
            };
            ctx.new_leaf(0, [0.0; 2], false)
        };
        Self {
            params,
            root,
            rng,
            splits: 0,
            swaps: 0,
            pruned_alternates: 0,
        }
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn learn_weighted(&mut self, sample: &EncodedSample, label: bool, weight: f64) {
        if !(weight > 0.0) {
            return;
        }
        let growth_allowed =
            self.node_count() as f64 * NODE_BYTES_ESTIMATE <= self.params.max_size_mib * MIB;
        let mut ctx = Ctx {
            params: &self.params,
            rng: &mut self.rng,
            growth_allowed,
            splits: 0,
            swaps: 0,
            pruned_alternates: 0,
        };
        self.root.learn(sample, label, weight, &mut ctx);
        self.splits += ctx.splits;
        self.swaps += ctx.swaps;
        self.pruned_alternates += ctx.pruned_alternates;
    }

    /// Nodes including alternate subtrees.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.root.visit(&mut |_| n += 1);
        n
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.root
            .visit(&mut |node| n += matches!(node.kind, NodeKind::Leaf(_)) as usize);
        n
    }

    /// Deepest node depth present (root = 0).
    pub fn max_depth_reached(&self) -> usize {
        let mut d = 0;
        self.root.visit(&mut |node| d = d.max(node.depth));
        d
    }

    pub fn root_split_feature(&self) -> Option<Feature> {
        match &self.root.kind {
            NodeKind::Split { feature, .. } => Some(*feature),
            NodeKind::Leaf(_) => None,
        }
    }

    /// Split features along the path `sample` takes from the root.
    pub fn decision_path(&self, sample: &EncodedSample) -> Vec<Feature> {
        let mut path = Vec::new();
        let mut node = &self.root;
        while let NodeKind::Split { feature, children } = &node.kind {
            path.push(*feature);
            node = &children[branch(sample, *feature)];
        }
        path
    }

    pub fn split_count(&self) -> u64 {
        self.splits
    }

    pub fn alternate_swaps(&self) -> u64 {
        self.swaps
    }

    pub fn active_alternates(&self) -> usize {
        let mut n = 0;
        self.root.visit(&mut |node| n += node.alternate.is_some() as usize);
        n
    }
}

impl Classifier for HoeffdingTree {
    fn learn_one(&mut self, sample: &EncodedSample, label: bool) {
        self.learn_weighted(sample, label, 1.0);
    }

    fn predict_proba_one(&self, sample: &EncodedSample) -> ClassDistribution {
        self.root.predict(sample)
    }
}
