use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backend::{ChatBackend, ChatRequest};
use super::history::{History, Utterance};
use super::interpret::{parse_interpretation, parse_numbered_list};
use super::prompts::{
    fallback_question, interpretation_system, question_system, treatment_system, PromptId, PromptTemplate,
    AGE_QUESTION, AGE_REPROMPT, EMPTY_REPROMPT,
};
use crate::explain::{
    counterfactual, eligible_for_explanation, explanation_rows, render_explanation, render_not_found,
    ExplanationRow, Field, PerturbationPolicy, RecordModel, SearchOutcome,
};
use crate::record::{clamp_age, ResponseOption, ScreeningRecord, Topic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Collecting,
    Assessing,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error("session is {actual:?}, expected {expected:?}")]
    WrongState {
        expected: SessionState,
        actual: SessionState,
    },
    #[error("no user utterance to interpret")]
    NoUserUtterance,
    #[error("session is missing the age or some topic answers")]
    IncompleteSession,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NextQuestion {
    Question {
        topic: Topic,
        text: String,
        /// The backend failed and a canned question was used.
        fallback: bool,
    },
    AllTopicsCovered,
}

/// Closing line once every topic has an answer.
pub const ALL_COVERED_NOTICE: &str = "Thank you for sharing all of this with me. I will now put together your assessment.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TurnKind {
    /// Nothing usable arrived; the same question stands.
    Reprompt,
    Question { topic: Topic, fallback: bool },
    ReadyToAssess,
}

/// Assistant side of one exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub reply: String,
    pub kind: TurnKind,
    pub interpretation: Option<InterpretOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretOutcome {
    /// Topics whose stored option changed.
    pub updated: Vec<Topic>,
    /// The reply was missing topics or the backend failed.
    pub malformed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub text: String,
    pub rows: Vec<ExplanationRow>,
    pub relevant: Vec<Field>,
    pub found: bool,
    pub flipped_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub prediction: bool,
    /// Probability of the predicted class.
    pub probability: f64,
    pub record: ScreeningRecord,
    pub explanation: Option<Explanation>,
    pub recommendations: Option<Vec<String>>,
    /// Recommendations were due but the backend failed to supply them.
    pub recommendations_failed: bool,
    pub age_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessOptions {
    pub n_iterations: usize,
    pub policy: PerturbationPolicy,
}

impl Default for AssessOptions {
    fn default() -> Self {
        Self {
            n_iterations: crate::explain::DEFAULT_ITERATIONS,
            policy: PerturbationPolicy::default(),
        }
    }
}

/// One screening conversation: collects the age, then one answer per topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub id: String,
    pending: Vec<Topic>,
    history: History,
    interpretations: BTreeMap<Topic, ResponseOption>,
    age: Option<u32>,
    state: SessionState,
}

/// First integer in `text`.
pub fn parse_age(text: &str) -> Option<u32> {
    let start = text.find(|c: char| c.is_ascii_digit())?;
    let digits: String = text[start..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

impl DialogueSession {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            pending: Topic::ALL.to_vec(),
            history: History::new(),
            interpretations: Topic::ALL.into_iter().map(|t| (t, ResponseOption::Na)).collect(),
            age: None,
            state: SessionState::Collecting,
        }
    }

    /// Opening assistant turn; asks for the age.
    pub fn start(&mut self) -> &'static str {
        if self.history.is_empty() {
            self.history.push(Utterance::assistant(AGE_QUESTION));
        }
        AGE_QUESTION
    }

    /// One user message: the first answer carries the age, later ones are
    /// interpreted before the next question is asked.
    pub fn handle_user_message<B: ChatBackend + ?Sized>(&mut self, text: &str, backend: &B) -> Result<Turn, DialogueError> {
        self.expect(SessionState::Collecting)?;
        let text = text.trim();
        if text.is_empty() {
            return Ok(Turn {
                reply: EMPTY_REPROMPT.into(),
                kind: TurnKind::Reprompt,
                interpretation: None,
            });
        }
        self.history.push(Utterance::user(text));
        let mut interpretation = None;
        if self.age.is_none() {
            match parse_age(text) {
                Some(a) => self.age = Some(a),
                None => {
                    self.history.push(Utterance::assistant(AGE_REPROMPT));
                    return Ok(Turn {
                        reply: AGE_REPROMPT.into(),
                        kind: TurnKind::Reprompt,
                        interpretation: None,
                    });
                }
            }
        } else {
            interpretation = Some(self.interpret_responses(backend)?);
        }
        let turn = match self.next_question(backend)? {
            NextQuestion::Question { topic, text, fallback } => Turn {
                reply: text,
                kind: TurnKind::Question { topic, fallback },
                interpretation,
            },
            NextQuestion::AllTopicsCovered => {
                self.history.push(Utterance::assistant(ALL_COVERED_NOTICE));
                Turn {
                    reply: ALL_COVERED_NOTICE.into(),
                    kind: TurnKind::ReadyToAssess,
                    interpretation,
                }
            }
        };
        Ok(turn)
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn pending_topics(&self) -> &[Topic] {
        &self.pending
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn interpretation(&self, topic: Topic) -> ResponseOption {
        self.interpretations[&topic]
    }

    pub fn age(&self) -> Option<u32> {
        self.age
    }

    pub fn set_age(&mut self, years: u32) {
        self.age = Some(years);
    }

    pub fn push_history(&mut self, utterance: Utterance) {
        self.history.push(utterance);
    }

    fn advance(&mut self, to: SessionState) {
        debug_assert!(to >= self.state);
        self.state = self.state.max(to);
    }

    fn expect(&self, expected: SessionState) -> Result<(), DialogueError> {
        if self.state == expected {
            Ok(())
        } else {
            Err(DialogueError::WrongState {
                expected,
                actual: self.state,
            })
        }
    }

    fn request(&self, prompt: PromptId, system: String) -> ChatRequest {
        ChatRequest {
            prompt,
            system,
            history: self.history.iter().cloned().collect(),
            temperature: PromptTemplate::get(prompt).temperature,
        }
    }

    /// Asks about the first pending topic, or moves to assessment when none
    /// is left.
    pub fn next_question<B: ChatBackend + ?Sized>(&mut self, backend: &B) -> Result<NextQuestion, DialogueError> {
        self.expect(SessionState::Collecting)?;
        let Some(&topic) = self.pending.first() else {
            self.advance(SessionState::Assessing);
            return Ok(NextQuestion::AllTopicsCovered);
        };
        let req = self.request(PromptId::QuestionGeneration, question_system(topic));
        let (text, fallback) = match backend.complete(&req) {
            Ok(t) if !t.trim().is_empty() => (String::from(t.trim()), false),
            _ => (String::from(fallback_question(topic)), true),
        };
        self.history.push(Utterance::assistant(text.clone()));
        Ok(NextQuestion::Question { topic, text, fallback })
    }

    /// Interprets the history and merges the result: a non-NA answer
    /// replaces anything, NA never replaces an answer.
    pub fn interpret_responses<B: ChatBackend + ?Sized>(&mut self, backend: &B) -> Result<InterpretOutcome, DialogueError> {
        self.expect(SessionState::Collecting)?;
        if !self.history.has_user_utterance() {
            return Err(DialogueError::NoUserUtterance);
        }
        let req = self.request(PromptId::Interpretation, interpretation_system());
        let parsed = match backend.complete(&req) {
            Ok(reply) => parse_interpretation(&reply),
            Err(_) => super::interpret::Interpretation::all_na(),
        };
        let mut updated = Vec::new();
        for topic in Topic::ALL {
            let new = parsed.get(topic);
            if new != ResponseOption::Na && self.interpretations[&topic] != new {
                self.interpretations.insert(topic, new);
                updated.push(topic);
            }
        }
        self.pending.retain(|t| self.interpretations[t] == ResponseOption::Na);
        Ok(InterpretOutcome {
            updated,
            malformed: parsed.malformed,
        })
    }

    /// Complete record; the age is clamped into the supported range.
    pub fn record(&self) -> Result<(ScreeningRecord, bool), DialogueError> {
        let age = self.age.ok_or(DialogueError::IncompleteSession)?;
        if !self.pending.is_empty() {
            return Err(DialogueError::IncompleteSession);
        }
        let (bucket, clamped) = clamp_age(age);
        let mut responses = [ResponseOption::Na; 8];
        for t in Topic::ALL {
            responses[t.index()] = self.interpretations[&t];
        }
        Ok((ScreeningRecord::new(bucket, responses, None), clamped))
    }

    /// Scores the collected answers, explains confident predictions and asks
    /// for treatments when PPD is predicted.
    pub fn assess<M, B, R>(
        &mut self,
        model: &M,
        backend: &B,
        options: &AssessOptions,
        rng: &mut R,
    ) -> Result<Assessment, DialogueError>
    where
        M: RecordModel + ?Sized,
        B: ChatBackend + ?Sized,
        R: Rng + ?Sized,
    {
        self.expect(SessionState::Assessing)?;
        let (record, age_clamped) = self.record()?;
        let dist = model.predict_record(&record);
        let prediction = dist.predicted();
        let probability = dist.probability(prediction);

        let explanation = eligible_for_explanation(&dist).then(|| {
            match counterfactual(model, &record, prediction, options.n_iterations, &options.policy, rng) {
                SearchOutcome::Found(r) => Explanation {
                    text: render_explanation(&record, Some(&r), prediction, probability),
                    rows: explanation_rows(&record, Some(&r)),
                    relevant: r.relevant.clone(),
                    found: true,
                    flipped_probability: Some(r.flipped_probability),
                },
                SearchOutcome::NotFound => Explanation {
                    text: render_not_found(prediction, probability),
                    rows: explanation_rows(&record, None),
                    relevant: Vec::new(),
                    found: false,
                    flipped_probability: None,
                },
            }
        });

        let (recommendations, recommendations_failed) = if prediction {
            let req = self.request(PromptId::Treatment, treatment_system());
            match backend.complete(&req).map(|r| parse_numbered_list(&r)) {
                Ok(items) if items.len() >= 3 => (Some(items.into_iter().take(3).collect()), false),
                _ => (None, true),
            }
        } else {
            (None, false)
        };

        self.advance(SessionState::Done);
        Ok(Assessment {
            prediction,
            probability,
            record,
            explanation,
            recommendations,
            recommendations_failed,
            age_clamped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::backend::{BackendError, FailingBackend, MockBackend};
    use crate::learners::ClassDistribution;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_session_asks_about_bonding() {
        let mut s = DialogueSession::new("a");
        let q = s.next_question(&MockBackend::default()).unwrap();
        assert!(matches!(q, NextQuestion::Question { topic: Topic::BabyBondingIssues, fallback: false, .. }));
    }

    #[test]
    fn backend_failure_uses_fallback() {
        let mut s = DialogueSession::new("a");
        let q = s.next_question(&FailingBackend).unwrap();
        assert_eq!(
            q,
            NextQuestion::Question {
                topic: Topic::BabyBondingIssues,
                text: fallback_question(Topic::BabyBondingIssues).into(),
                fallback: true
            }
        );
        assert_eq!(s.history().len(), 1);
    }

    struct Fixed(&'static str);
    impl ChatBackend for Fixed {
        fn complete(&self, _: &ChatRequest) -> Result<String, BackendError> {
            Ok(self.0.into())
        }
    }

    #[test]
    fn full_reply_moves_to_assessing() {
        let mut s = DialogueSession::new("a");
        s.push_history(Utterance::user("..."));
        let reply = "topic 1: no\ntopic 2: no\ntopic 3: yes\ntopic 4: no\ntopic 5: sometimes\ntopic 6: often\ntopic 7: no\ntopic 8: yes";
        let out = s.interpret_responses(&Fixed(reply)).unwrap();
        assert_eq!(out.updated.len(), 8);
        assert!(!out.malformed);
        assert!(s.pending_topics().is_empty());
        assert_eq!(s.next_question(&Fixed("")).unwrap(), NextQuestion::AllTopicsCovered);
        assert_eq!(s.state(), SessionState::Assessing);
        assert!(s.next_question(&Fixed("")).is_err());
    }

    #[test]
    fn interpretation_needs_a_user_turn() {
        let mut s = DialogueSession::new("a");
        assert_eq!(s.interpret_responses(&MockBackend::default()), Err(DialogueError::NoUserUtterance));
    }

    #[test]
    fn na_never_overwrites() {
        let mut s = DialogueSession::new("a");
        s.push_history(Utterance::user("..."));
        s.interpret_responses(&Fixed("topic 3: yes")).unwrap();
        s.interpret_responses(&Fixed("topic 3: na\ntopic 4: no")).unwrap();
        assert_eq!(s.interpretation(Topic::FeelingSadOrTearful), ResponseOption::Yes);
        s.interpret_responses(&Fixed("topic 3: often")).unwrap();
        assert_eq!(s.interpretation(Topic::FeelingSadOrTearful), ResponseOption::Often);
        assert!(!s.pending_topics().contains(&Topic::FeelingGuilty));
    }

    fn completed(age: Option<u32>) -> DialogueSession {
        let mut s = DialogueSession::new("a");
        if let Some(a) = age {
            s.set_age(a);
        }
        s.push_history(Utterance::user("..."));
        let reply = "topic 1: no\ntopic 2: no\ntopic 3: yes\ntopic 4: no\ntopic 5: no\ntopic 6: no\ntopic 7: no\ntopic 8: no";
        s.interpret_responses(&Fixed(reply)).unwrap();
        s.next_question(&Fixed("")).unwrap();
        s
    }

    fn sad_model(r: &ScreeningRecord) -> ClassDistribution {
        ClassDistribution::from_present(if r.response(Topic::FeelingSadOrTearful) == ResponseOption::Yes { 0.84 } else { 0.3 })
    }

    #[test]
    fn confident_positive_gets_explanation_and_treatments() {
        let mut s = completed(Some(31));
        let a = s.assess(&sad_model, &MockBackend::default(), &AssessOptions::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(a.prediction);
        assert!((a.probability - 0.84).abs() < 1e-12);
        let e = a.explanation.unwrap();
        assert_eq!(e.relevant, [Field::Topic(Topic::FeelingSadOrTearful)]);
        assert!(e.text.starts_with("Presence of PPD (84.00%)"));
        assert_eq!(a.recommendations.unwrap().len(), 3);
        assert_eq!(s.state(), SessionState::Done);
    }

    #[test]
    fn unsure_prediction_has_no_explanation() {
        let mut s = completed(Some(31));
        let model = |_: &ScreeningRecord| ClassDistribution::from_present(0.6);
        let a = s.assess(&model, &MockBackend::default(), &AssessOptions::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(a.explanation.is_none());
        assert!(a.recommendations.is_some());
    }

    #[test]
    fn treatment_failure_is_flagged() {
        let mut s = completed(Some(31));
        let a = s.assess(&sad_model, &FailingBackend, &AssessOptions::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(a.recommendations.is_none() && a.recommendations_failed);
    }

    #[test]
    fn missing_age_is_incomplete() {
        let mut s = completed(None);
        let r = s.assess(&sad_model, &MockBackend::default(), &AssessOptions::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r.unwrap_err(), DialogueError::IncompleteSession);
    }

    #[test]
    fn scripted_conversation() {
        let m = MockBackend::default();
        let mut s = DialogueSession::new("a");
        assert_eq!(s.start(), AGE_QUESTION);
        let t = s.handle_user_message("   ", &m).unwrap();
        assert_eq!(t.kind, TurnKind::Reprompt);
        assert_eq!(s.history().len(), 1);
        assert_eq!(s.handle_user_message("not telling", &m).unwrap().reply, AGE_REPROMPT);
        let t = s.handle_user_message("I am 29", &m).unwrap();
        assert_eq!(t.kind, TurnKind::Question { topic: Topic::BabyBondingIssues, fallback: false });
        for answer in ["yes", "not really", "sometimes", "often", "no", "never", "rather not say"] {
            s.handle_user_message(answer, &m).unwrap();
        }
        let t = s.handle_user_message("sometimes", &m).unwrap();
        assert_eq!(t.kind, TurnKind::ReadyToAssess);
        let (r, clamped) = s.record().unwrap();
        assert!(!clamped);
        assert_eq!(r.response(Topic::SuicideBehavior), ResponseOption::UnwillingToDisclose);
        assert_eq!(r.response(Topic::TroubleSleeping), ResponseOption::Sometimes);
        assert!(matches!(s.handle_user_message("hi", &m), Err(DialogueError::WrongState { .. })));
    }

    #[test]
    fn age_parsing() {
        assert_eq!(parse_age("I'm 32 years old"), Some(32));
        assert_eq!(parse_age("thirty"), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        /// Random user turns against the mock: pending topics and answered
        /// topics always partition the eight topics, no question targets a
        /// covered topic and the state never moves backwards.
        #[test]
        fn session_invariants(turns in proptest::collection::vec(
            (0usize..8, 0usize..6, proptest::bool::ANY), 0..30)
        ) {
            let m = MockBackend::default();
            let kw = ["bonding", "focus", "sad", "guilty", "irritable", "appetite", "suicidal", "sleep"];
            let opt = ["sometimes", "often", "no", "yes", "rather not say", "hmm"];
            let mut s = DialogueSession::new("p");
            let mut last = s.state();
            for (t, o, name_topic) in turns {
                if s.state() != SessionState::Collecting {
                    break;
                }
                match s.next_question(&m).unwrap() {
                    NextQuestion::Question { topic, .. } => {
                        prop_assert_eq!(s.interpretation(topic), ResponseOption::Na);
                    }
                    NextQuestion::AllTopicsCovered => {
                        prop_assert!(s.pending_topics().is_empty());
                        break;
                    }
                }
                let text = if name_topic { alloc::format!("{} {}", opt[o], kw[t]) } else { String::from(opt[o]) };
                s.push_history(Utterance::user(text));
                s.interpret_responses(&m).unwrap();
                for topic in Topic::ALL {
                    let pending = s.pending_topics().contains(&topic);
                    prop_assert_eq!(pending, s.interpretation(topic) == ResponseOption::Na);
                }
                prop_assert!(s.state() >= last);
                last = s.state();
            }
        }
    }
}
