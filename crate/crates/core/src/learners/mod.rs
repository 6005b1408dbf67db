//! Incremental binary classifiers over sparse Boolean samples.
//!
//! Every learner follows the same contract: `learn_one` folds in exactly one
//! labelled observation, `predict_proba_one` is read-only and always yields a
//! valid two-class distribution (uniform before any training), and
//! `predict_one` is its argmax with ties going to `false` (PPD absent).

pub mod adwin;
mod alma;
mod forest;
mod gnb;
mod hoeffding;
mod logistic;

pub use alma::Alma;
pub use forest::{aggregate_votes, AdaptiveRandomForest, ForestParams};
pub use gnb::GaussianNb;
pub use hoeffding::{hoeffding_bound, should_split, HoeffdingTree, TreeParams, NODE_BYTES_ESTIMATE};
pub use logistic::LogisticRegression;

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{EncodedSample, FEATURE_COUNT};

/// Probability of PPD absence (`false`) and presence (`true`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    absent: f64,
    present: f64,
}

impl ClassDistribution {
    pub const UNIFORM: ClassDistribution = ClassDistribution {
        absent: 0.5,
        present: 0.5,
    };

    /// Normalizes non-negative weights; degenerate input gives the uniform
    /// distribution.
    pub fn from_weights(absent: f64, present: f64) -> Self {
        let total = absent + present;
        if !(total > 0.0) || !total.is_finite() || absent < 0.0 || present < 0.0 {
            return Self::UNIFORM;
        }
        Self {
            absent: absent / total,
            present: present / total,
        }
    }

    pub fn from_present(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            absent: 1.0 - p,
            present: p,
        }
    }

    pub fn absent(&self) -> f64 {
        self.absent
    }

    pub fn present(&self) -> f64 {
        self.present
    }

    pub fn probability(&self, label: bool) -> f64 {
        if label {
            self.present
        } else {
            self.absent
        }
    }

    /// Argmax; a tie goes to `false`.
    pub fn predicted(&self) -> bool {
        self.present > self.absent
    }

    pub fn max_probability(&self) -> f64 {
        self.present.max(self.absent)
    }
}

pub trait Classifier {
    fn learn_one(&mut self, sample: &EncodedSample, label: bool);

    fn predict_proba_one(&self, sample: &EncodedSample) -> ClassDistribution;

    fn predict_one(&self, sample: &EncodedSample) -> bool {
        self.predict_proba_one(sample).predicted()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Gnb,
    Lr,
    Alma,
    Hatc,
    Arfc,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::Gnb,
        LearnerKind::Lr,
        LearnerKind::Alma,
        LearnerKind::Hatc,
        LearnerKind::Arfc,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            LearnerKind::Gnb => "gnb",
            LearnerKind::Lr => "lr",
            LearnerKind::Alma => "alma",
            LearnerKind::Hatc => "hatc",
            LearnerKind::Arfc => "arfc",
        }
    }

    /// Upper-case label used in reports.
    pub const fn label(self) -> &'static str {
        match self {
            LearnerKind::Gnb => "GNB",
            LearnerKind::Lr => "LR",
            LearnerKind::Alma => "ALMA",
            LearnerKind::Hatc => "HATC",
            LearnerKind::Arfc => "ARFC",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| LearnerError::UnknownKind(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("unknown model kind `{0}` (expected gnb, lr, alma, hatc or arfc)")]
    UnknownKind(String),
    #[error("configuration is for {config}, not {requested}")]
    KindMismatch {
        requested: LearnerKind,
        config: LearnerKind,
    },
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(&'static str),
}

/// Number of candidate features drawn at each forest leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => libm::floor(libm::sqrt(n_features as f64)) as usize,
            MaxFeatures::Count(c) => c,
        };
        m.clamp(1, n_features.max(1))
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::Count(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            other => other
                .parse()
                .map(MaxFeatures::Count)
                .map_err(|_| LearnerError::InvalidParameter("features_per_split")),
        }
    }
}

/// Hyperparameters per learner kind. `Default` for each kind is the
/// configuration used for the reported runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearnerConfig {
    Gnb,
    Lr {
        l2: f64,
        intercept_lr: f64,
    },
    Alma {
        alpha: f64,
        b: f64,
        c: f64,
    },
    Hatc {
        /// `None` = unbounded.
        max_depth: Option<usize>,
        tie_threshold: f64,
        /// Memory budget in MiB.
        max_size: f64,
    },
    Arfc {
        n_models: usize,
        features_per_split: MaxFeatures,
        lambda: f64,
    },
}

impl LearnerConfig {
    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::Gnb => LearnerConfig::Gnb,
            LearnerKind::Lr => LearnerConfig::Lr {
                l2: 0.0,
                intercept_lr: 0.01,
            },
            LearnerKind::Alma => LearnerConfig::Alma {
                alpha: 0.5,
                b: 0.6,
                c: 1.4,
            },
            LearnerKind::Hatc => LearnerConfig::Hatc {
                max_depth: None,
                tie_threshold: 0.05,
                max_size: 50.0,
            },
            LearnerKind::Arfc => LearnerConfig::Arfc {
                n_models: 100,
                features_per_split: MaxFeatures::Sqrt,
                lambda: 100.0,
            },
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerConfig::Gnb => LearnerKind::Gnb,
            LearnerConfig::Lr { .. } => LearnerKind::Lr,
            LearnerConfig::Alma { .. } => LearnerKind::Alma,
            LearnerConfig::Hatc { .. } => LearnerKind::Hatc,
            LearnerConfig::Arfc { .. } => LearnerKind::Arfc,
        }
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        use LearnerError::InvalidParameter as bad;
        match *self {
            LearnerConfig::Gnb => {}
            LearnerConfig::Lr { l2, intercept_lr } => {
                if !(l2 >= 0.0) {
                    return Err(bad("l2"));
                }
                if !(intercept_lr >= 0.0) {
                    return Err(bad("intercept_lr"));
                }
            }
            LearnerConfig::Alma { alpha, b, c } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(bad("alpha"));
                }
                if !(b > 0.0) {
                    return Err(bad("B"));
                }
                if !(c > 0.0) {
                    return Err(bad("C"));
                }
            }
            LearnerConfig::Hatc {
                max_depth,
                tie_threshold,
                max_size,
            } => {
                if max_depth == Some(0) {
                    return Err(bad("depth"));
                }
                if !(tie_threshold >= 0.0) {
                    return Err(bad("tie_threshold"));
                }
                if !(max_size > 0.0) {
                    return Err(bad("max_size"));
                }
            }
            LearnerConfig::Arfc {
                n_models, lambda, ..
            } => {
                if n_models == 0 {
                    return Err(bad("n_models"));
                }
                if !(lambda > 0.0) {
                    return Err(bad("lambda"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for LearnerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerConfig::Gnb => f.write_str("gnb"),
            LearnerConfig::Lr { l2, intercept_lr } => {
                write!(f, "lr(l2={l2}, intercept_lr={intercept_lr})")
            }
            LearnerConfig::Alma { alpha, b, c } => write!(f, "alma(alpha={alpha}, B={b}, C={c})"),
            LearnerConfig::Hatc {
                max_depth,
                tie_threshold,
                max_size,
            } => {
                f.write_str("hatc(depth=")?;
                match max_depth {
                    Some(d) => write!(f, "{d}")?,
                    None => f.write_str("None")?,
                }
                write!(f, ", tie_threshold={tie_threshold}, max_size={max_size})")
            }
            LearnerConfig::Arfc {
                n_models,
                features_per_split,
                lambda,
            } => write!(
                f,
                "arfc(models={n_models}, features={features_per_split}, lambda={lambda})"
            ),
        }
    }
}

/// Any of the five learners behind one serializable type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "lowercase")]
pub enum Learner {
    Gnb(GaussianNb),
    Lr(LogisticRegression),
    Alma(Alma),
    Hatc(HoeffdingTree),
    Arfc(AdaptiveRandomForest),
}

impl Learner {
    pub fn kind(&self) -> LearnerKind {
        match self {
            Learner::Gnb(_) => LearnerKind::Gnb,
            Learner::Lr(_) => LearnerKind::Lr,
            Learner::Alma(_) => LearnerKind::Alma,
            Learner::Hatc(_) => LearnerKind::Hatc,
            Learner::Arfc(_) => LearnerKind::Arfc,
        }
    }
}

impl Classifier for Learner {
    fn learn_one(&mut self, sample: &EncodedSample, label: bool) {
        match self {
            Learner::Gnb(m) => m.learn_one(sample, label),
            Learner::Lr(m) => m.learn_one(sample, label),
            Learner::Alma(m) => m.learn_one(sample, label),
            Learner::Hatc(m) => m.learn_one(sample, label),
            Learner::Arfc(m) => m.learn_one(sample, label),
        }
    }

    fn predict_proba_one(&self, sample: &EncodedSample) -> ClassDistribution {
        match self {
            Learner::Gnb(m) => m.predict_proba_one(sample),
            Learner::Lr(m) => m.predict_proba_one(sample),
            Learner::Alma(m) => m.predict_proba_one(sample),
            Learner::Hatc(m) => m.predict_proba_one(sample),
            Learner::Arfc(m) => m.predict_proba_one(sample),
        }
    }
}

/// Fresh learner of `kind`. All randomness derives from `seed`.
pub fn make_learner(
    kind: LearnerKind,
    config: &LearnerConfig,
    seed: u64,
) -> Result<Learner, LearnerError> {
    if config.kind() != kind {
        return Err(LearnerError::KindMismatch {
            requested: kind,
            config: config.kind(),
        });
    }
    config.validate()?;
    Ok(match *config {
        LearnerConfig::Gnb => Learner::Gnb(GaussianNb::new()),
        LearnerConfig::Lr { l2, intercept_lr } => {
            Learner::Lr(LogisticRegression::new(l2, intercept_lr))
        }
        LearnerConfig::Alma { alpha, b, c } => Learner::Alma(Alma::new(alpha, b, c)),
        LearnerConfig::Hatc {
            max_depth,
            tie_threshold,
            max_size,
        } => Learner::Hatc(HoeffdingTree::new(
            TreeParams {
                max_depth,
                tie_threshold,
                max_size_mib: max_size,
                ..TreeParams::adaptive()
            },
            seed,
        )),
        LearnerConfig::Arfc {
            n_models,
            features_per_split,
            lambda,
        } => Learner::Arfc(AdaptiveRandomForest::new(
            ForestParams {
                n_models,
                features_per_split: features_per_split.resolve(FEATURE_COUNT),
                lambda,
                ..ForestParams::default()
            },
            seed,
        )),
    })
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}
