//! Session bookkeeping behind the HTTP API. Every HTTP route maps onto one
//! method here, so the API can be exercised without a socket.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use ppd_core::dialogue::{
    AssessOptions, Assessment, ChatBackend, DialogueError, DialogueSession, SessionState, TurnKind, Utterance,
};
use ppd_core::explain::ExplanationRow;
use ppd_core::features::encode_record;
use ppd_core::learners::Classifier;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::Checkpoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
    SystemNote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationPayload {
    pub found: bool,
    pub rows: Vec<ExplanationRow>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentPayload {
    pub prediction: bool,
    /// "Presence of PPD" or "Absence of PPD".
    pub label: String,
    pub probability: f64,
    pub explanation: Option<ExplanationPayload>,
    pub recommendations: Option<Vec<String>>,
    pub recommendations_failed: bool,
    pub age_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiMessage {
    pub role: Role,
    pub text: String,
    /// Only on the assessment message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<AssessmentPayload>,
}

impl ApiMessage {
    fn new(role: Role, text: impl Into<String>) -> Self {
        Self {
            role,
            text: text.into(),
            assessment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub messages: Vec<ApiMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub state: SessionState,
    pub transcript: Vec<ApiMessage>,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no model checkpoint is loaded")]
    NoCheckpoint,
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session is finished")]
    SessionDone,
    #[error("labeled feedback is disabled")]
    FeedbackDisabled,
    #[error("session has no assessment yet")]
    NotAssessed,
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub assess: AssessOptions,
    /// Seeds the per-session counterfactual search.
    pub seed: u64,
    pub learn_from_feedback: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            assess: AssessOptions::default(),
            seed: 0,
            learn_from_feedback: false,
        }
    }
}

struct Slot {
    session: DialogueSession,
    rng: ChaCha8Rng,
    transcript: Vec<ApiMessage>,
    assessment: Option<Assessment>,
    feedback_given: bool,
}

pub struct ScreeningService {
    model: RwLock<Option<Checkpoint>>,
    backend: Box<dyn ChatBackend + Send + Sync>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Slot>>>>,
    created: AtomicU64,
    config: ServiceConfig,
}

fn class_label(prediction: bool) -> &'static str {
    if prediction {
        "Presence of PPD"
    } else {
        "Absence of PPD"
    }
}

/// Chat text for an assessment: the explanation block when there is one,
/// then the recommendations.
pub fn assessment_text(a: &Assessment) -> String {
    let mut s = match &a.explanation {
        Some(e) => e.text.clone(),
        None => format!("{} ({:.2}%)\n", class_label(a.prediction), a.probability * 100.0),
    };
    if let Some(recs) = &a.recommendations {
        s.push_str("\nRecommendations:\n");
        for (i, r) in recs.iter().enumerate() {
            let _ = writeln!(s, "{}. {}", i + 1, r);
        }
    }
    s
}

fn payload(a: &Assessment) -> AssessmentPayload {
    AssessmentPayload {
        prediction: a.prediction,
        label: class_label(a.prediction).into(),
        probability: a.probability,
        explanation: a.explanation.as_ref().map(|e| ExplanationPayload {
            found: e.found,
            rows: e.rows.clone(),
            text: e.text.clone(),
        }),
        recommendations: a.recommendations.clone(),
        recommendations_failed: a.recommendations_failed,
        age_clamped: a.age_clamped,
    }
}

impl ScreeningService {
    pub fn new(model: Option<Checkpoint>, backend: Box<dyn ChatBackend + Send + Sync>, config: ServiceConfig) -> Self {
        Self {
            model: RwLock::new(model),
            backend,
            sessions: Mutex::new(HashMap::new()),
            created: AtomicU64::new(0),
            config,
        }
    }

    pub fn has_model(&self) -> bool {
        self.model.read().expect("model lock").is_some()
    }

    pub fn set_model(&self, model: Checkpoint) {
        *self.model.write().expect("model lock") = Some(model);
    }

    /// Copy of the live model, e.g. to save it after feedback.
    pub fn model(&self) -> Option<Checkpoint> {
        self.model.read().expect("model lock").clone()
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, ServiceError> {
        self.sessions
            .lock()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    pub fn create_session(&self) -> Result<CreatedSession, ServiceError> {
        if !self.has_model() {
            return Err(ServiceError::NoCheckpoint);
        }
        let n = self.created.fetch_add(1, Ordering::Relaxed);
        let id = uuid::Uuid::new_v4().to_string();
        let mut session = DialogueSession::new(id.clone());
        let greeting = ApiMessage::new(Role::Assistant, session.start());
        let slot = Slot {
            session,
            rng: ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(n)),
            transcript: vec![greeting.clone()],
            assessment: None,
            feedback_given: false,
        };
        self.sessions
            .lock()
            .expect("session table lock")
            .insert(id.clone(), Arc::new(Mutex::new(slot)));
        Ok(CreatedSession {
            session_id: id,
            messages: vec![greeting],
        })
    }

    /// Handles one user message and returns the assistant's replies. The
    /// final answer triggers the assessment in the same call.
    pub fn post_message(&self, id: &str, text: &str) -> Result<Vec<ApiMessage>, ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("session lock");
        if slot.session.state() == SessionState::Done {
            return Err(ServiceError::SessionDone);
        }
        let had_age = slot.session.age().is_some();
        let turn = slot.session.handle_user_message(text, &*self.backend)?;
        if !text.trim().is_empty() {
            slot.transcript.push(ApiMessage::new(Role::User, text.trim()));
        }
        let mut out = Vec::new();
        if !had_age {
            if let Some(age) = slot.session.age() {
                if ppd_core::record::clamp_age(age).1 {
                    out.push(ApiMessage::new(
                        Role::SystemNote,
                        format!("Age {age} is outside 25-50 and was placed in the nearest age group."),
                    ));
                }
            }
        }
        if let Some(i) = &turn.interpretation {
            if i.malformed && i.updated.is_empty() {
                out.push(ApiMessage::new(Role::SystemNote, "The answer could not be matched to a topic."));
            }
        }
        out.push(ApiMessage::new(Role::Assistant, turn.reply));
        if turn.kind == TurnKind::ReadyToAssess {
            let guard = self.model.read().expect("model lock");
            let model = guard.as_ref().ok_or(ServiceError::NoCheckpoint)?;
            let Slot { session, rng, .. } = &mut *slot;
            let assessment = session.assess(&model.pipeline(), &*self.backend, &self.config.assess, rng)?;
            drop(guard);
            if assessment.recommendations_failed {
                out.push(ApiMessage::new(Role::SystemNote, "Care recommendations are unavailable right now."));
            }
            out.push(ApiMessage {
                role: Role::Assistant,
                text: assessment_text(&assessment),
                assessment: Some(payload(&assessment)),
            });
            slot.session.push_history(Utterance::assistant(assessment_text(&assessment)));
            slot.assessment = Some(assessment);
        }
        slot.transcript.extend(out.iter().cloned());
        Ok(out)
    }

    pub fn session(&self, id: &str) -> Result<SessionView, ServiceError> {
        let slot = self.slot(id)?;
        let slot = slot.lock().expect("session lock");
        Ok(SessionView {
            session_id: id.into(),
            state: slot.session.state(),
            transcript: slot.transcript.clone(),
        })
    }

    /// Trains the live model on a finished session's record with the given
    /// ground truth. Only when enabled, and once per session.
    pub fn feedback(&self, id: &str, label: bool) -> Result<(), ServiceError> {
        if !self.config.learn_from_feedback {
            return Err(ServiceError::FeedbackDisabled);
        }
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("session lock");
        if slot.feedback_given {
            return Err(ServiceError::SessionDone);
        }
        let record = slot.assessment.as_ref().ok_or(ServiceError::NotAssessed)?.record.clone();
        let mut guard = self.model.write().expect("model lock");
        let model = guard.as_mut().ok_or(ServiceError::NoCheckpoint)?;
        let encoded = encode_record(&record);
        model.selector.learn(&encoded);
        let x = model.selector.transform(&encoded);
        model.learner.learn_one(&x, label);
        model.trained_samples += 1;
        slot.feedback_given = true;
        Ok(())
    }
}
