//! Versioned JSON checkpoints: a trained learner plus the selector state and
//! feature registry it was trained with.

use std::path::Path;

use ppd_core::eval::RunOutcome;
use ppd_core::explain::Pipeline;
use ppd_core::features::{feature_names, FeatureSelector};
use ppd_core::learners::{Learner, LearnerConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: LearnerConfig,
    pub seed: u64,
    pub learner: Learner,
    pub selector: FeatureSelector,
    /// Feature names in encoding order at training time.
    pub feature_names: Vec<String>,
    pub trained_samples: usize,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint version {found} is not supported (expected {CHECKPOINT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint feature registry does not match this build")]
    FeatureMismatch,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

impl Checkpoint {
    pub fn new(config: LearnerConfig, seed: u64, learner: Learner, outcome: &RunOutcome, trained_samples: usize) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config,
            seed,
            learner,
            selector: outcome.selector.clone(),
            feature_names: feature_names(),
            trained_samples,
        }
    }

    pub fn pipeline(&self) -> Pipeline<'_, Learner> {
        Pipeline {
            learner: &self.learner,
            selector: &self.selector,
        }
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version { found: probe.version });
        }
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.feature_names != feature_names() {
            return Err(CheckpointError::FeatureMismatch);
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{synthetic_stream, SyntheticSpec};
    use ppd_core::eval::{replay, NoClock, RunConfig};
    use ppd_core::learners::{Classifier, LearnerKind};
    use ppd_core::features::encode_record;

    fn trained(kind: LearnerKind) -> Checkpoint {
        let records = synthetic_stream(&SyntheticSpec::small(300), 3);
        let mut config = LearnerConfig::default_for(kind);
        if let LearnerConfig::Arfc { n_models, .. } = &mut config {
            *n_models = 5;
        }
        let (outcome, learner) = replay(&config, &records, &RunConfig::default(), 3, &mut NoClock).unwrap();
        Checkpoint::new(config, 3, learner, &outcome, records.len())
    }

    #[test]
    fn round_trip_every_kind() {
        let probe = synthetic_stream(&SyntheticSpec::small(20), 9);
        for kind in LearnerKind::ALL {
            let c = trained(kind);
            let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
            assert_eq!(back, c, "{kind:?}");
            for r in &probe {
                let x = c.selector.transform(&encode_record(r));
                assert_eq!(back.learner.predict_proba_one(&x), c.learner.predict_proba_one(&x));
            }
        }
    }

    #[test]
    fn version_is_checked() {
        let mut c = trained(LearnerKind::Gnb);
        c.version = 7;
        let text = serde_json::to_string(&c).unwrap();
        assert!(matches!(Checkpoint::from_json(&text), Err(CheckpointError::Version { found: 7 })));
        c.version = CHECKPOINT_VERSION;
        c.feature_names.pop();
        let text = serde_json::to_string(&c).unwrap();
        assert!(matches!(Checkpoint::from_json(&text), Err(CheckpointError::FeatureMismatch)));
    }
}
