#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;

use ppd::checkpoint::Checkpoint;
use ppd::service::{ApiMessage, Role, ScreeningService, ServiceConfig};
use ppd::synthetic::{single_feature_stream, synthetic_stream, SyntheticSpec};
use ppd_core::dialogue::MockBackend;
use ppd_core::eval::{replay, NoClock, RunConfig};
use ppd_core::learners::{LearnerConfig, LearnerKind};

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/transcript.txt")
}

pub fn train(kind: LearnerKind, records: &[ppd_core::record::ScreeningRecord], seed: u64) -> Checkpoint {
    let config = LearnerConfig::default_for(kind);
    let (outcome, learner) = replay(&config, records, &RunConfig::default(), seed, &mut NoClock).unwrap();
    Checkpoint::new(config, seed, learner, &outcome, records.len())
}

/// GNB trained on the survey-sized synthetic stream.
pub fn demo_checkpoint() -> Checkpoint {
    train(LearnerKind::Gnb, &synthetic_stream(&SyntheticSpec::SURVEY_SIZED, 0), 0)
}

/// Adaptive tree whose only split is on `trouble_sleeping = yes`.
pub fn stump_checkpoint() -> Checkpoint {
    train(LearnerKind::Hatc, &single_feature_stream(2000, 5), 5)
}

pub const SCRIPT: [&str; 9] = [
    "I'm 31 years old",
    "Honestly, bonding has been hard, yes",
    "Yes, I often can't focus",
    "I feel sad often, I cry a lot",
    "Yes, a lot of guilt",
    "Sometimes I snap at my partner",
    "My appetite is gone, yes",
    "I'd rather not say",
    "I barely sleep, often awake all night",
];

pub fn demo_service() -> ScreeningService {
    ScreeningService::new(Some(demo_checkpoint()), Box::new(MockBackend::default()), ServiceConfig::default())
}

pub fn render_messages(out: &mut String, messages: &[ApiMessage]) {
    for m in messages {
        let role = match m.role {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::SystemNote => "note",
        };
        let _ = writeln!(out, "[{role}]");
        let _ = writeln!(out, "{}", m.text.trim_end());
        if let Some(a) = &m.assessment {
            let _ = writeln!(out, "[assessment]");
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(a).unwrap());
        }
    }
}

/// Runs the scripted conversation and returns the transcript text plus the
/// raw replies per turn.
pub fn scripted_conversation(service: &ScreeningService) -> (String, Vec<Vec<ApiMessage>>) {
    let created = service.create_session().unwrap();
    let mut text = String::new();
    render_messages(&mut text, &created.messages);
    let mut replies = Vec::new();
    for line in SCRIPT {
        let _ = writeln!(text, "[user]\n{line}");
        let r = service.post_message(&created.session_id, line).unwrap();
        render_messages(&mut text, &r);
        replies.push(r);
    }
    (text, replies)
}
