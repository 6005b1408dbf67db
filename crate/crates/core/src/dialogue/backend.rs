use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::history::{Speaker, Utterance};
use super::interpret::format_interpretation;
use super::prompts::PromptId;
use crate::record::{ResponseOption, Topic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub prompt: PromptId,
    pub system: String,
    pub history: Vec<Utterance>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend returned an unusable reply: {0}")]
    BadReply(String),
}

/// Chat-completion service.
pub trait ChatBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule table line {line}: {message}")]
pub struct RuleError {
    pub line: usize,
    pub message: String,
}

/// Lowercase words; apostrophes stay inside words.
fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    topics: BTreeMap<Topic, Vec<Vec<String>>>,
    options: Vec<(ResponseOption, Vec<Vec<String>>)>,
    questions: BTreeMap<Topic, String>,
    treatments: Vec<String>,
}

pub const DEFAULT_RULES: &str = include_str!("mock_rules.txt");

fn keyword_list(s: &str) -> Vec<Vec<String>> {
    s.split(',').map(words).filter(|w| !w.is_empty()).collect()
}

impl RuleTable {
    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut table = RuleTable {
            topics: BTreeMap::new(),
            options: Vec::new(),
            questions: BTreeMap::new(),
            treatments: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| RuleError {
                line: i + 1,
                message: message.into(),
            };
            let (key, value) = line.split_once(':').ok_or_else(|| err("expected `key: value`"))?;
            let mut key_parts = key.split_whitespace();
            let head = key_parts.next().unwrap_or("");
            let arg = key_parts.next();
            let value = value.trim();
            let topic_arg = || {
                arg.and_then(|a| a.parse().ok())
                    .and_then(Topic::from_number)
                    .ok_or_else(|| err("expected a topic number 1-8"))
            };
            match head {
                "topic" => {
                    table.topics.insert(topic_arg()?, keyword_list(value));
                }
                "option" => {
                    let option: ResponseOption = arg
                        .ok_or_else(|| err("missing option name"))?
                        .parse()
                        .map_err(|_| err("unknown option"))?;
                    table.options.push((option, keyword_list(value)));
                }
                "question" => {
                    table.questions.insert(topic_arg()?, value.into());
                }
                "treatment" => table.treatments.push(value.into()),
                _ => return Err(err("unknown key")),
            }
        }
        Ok(table)
    }

    fn topics_in(&self, text: &[String]) -> Vec<Topic> {
        self.topics
            .iter()
            .filter(|(_, kws)| kws.iter().any(|k| contains_phrase(text, k)))
            .map(|(t, _)| *t)
            .collect()
    }

    fn option_in(&self, text: &[String]) -> Option<ResponseOption> {
        self.options
            .iter()
            .find(|(_, kws)| kws.iter().any(|k| contains_phrase(text, k)))
            .map(|(o, _)| *o)
    }

    pub fn question(&self, topic: Topic) -> Option<&str> {
        self.questions.get(&topic).map(String::as_str)
    }

    pub fn treatments(&self) -> &[String] {
        &self.treatments
    }

    /// Per-topic options read off the user turns, later turns winning.
    pub fn interpret(&self, history: &[Utterance]) -> BTreeMap<Topic, ResponseOption> {
        let mut out: BTreeMap<Topic, ResponseOption> = BTreeMap::new();
        let mut context: Vec<Topic> = Vec::new();
        for u in history {
            let text = words(&u.text);
            match u.speaker {
                Speaker::Assistant => {
                    context = self.topics_in(&text).into_iter().take(1).collect();
                }
                Speaker::User => {
                    let mut topics = self.topics_in(&text);
                    if topics.is_empty() {
                        topics = context.clone();
                    }
                    if let Some(option) = self.option_in(&text) {
                        for t in topics {
                            out.insert(t, option);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Deterministic offline backend driven by a [`RuleTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockBackend {
    rules: RuleTable,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self {
            rules: RuleTable::parse(DEFAULT_RULES).expect("shipped rule table parses"),
        }
    }
}

impl MockBackend {
    pub fn new(rules: RuleTable) -> Self {
        Self { rules }
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }
}

fn requested_topic(system: &str) -> Option<Topic> {
    let tail = &system[system.rfind("Ask now about topic ")? + "Ask now about topic ".len()..];
    let digits: String = tail.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok().and_then(Topic::from_number)
}

impl ChatBackend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        match request.prompt {
            PromptId::Interpretation => {
                Ok(format_interpretation(&self.rules.interpret(&request.history)))
            }
            PromptId::QuestionGeneration => requested_topic(&request.system)
                .and_then(|t| self.rules.question(t))
                .map(String::from)
                .ok_or_else(|| BackendError::BadReply("no question for this request".into())),
            PromptId::Treatment => {
                let mut out = String::new();
                for (i, t) in self.rules.treatments.iter().enumerate() {
                    out.push_str(&alloc::format!("{}. {}\n", i + 1, t));
                }
                Ok(out)
            }
        }
    }
}

/// Always fails; exercises the fallback paths.
#[derive(Debug, Clone, Copy, Default)]
pub struct FailingBackend;

impl ChatBackend for FailingBackend {
    fn complete(&self, _: &ChatRequest) -> Result<String, BackendError> {
        Err(BackendError::Unavailable("offline".into()))
    }
}
