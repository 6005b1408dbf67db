use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::record::Topic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptId {
    Interpretation,
    QuestionGeneration,
    Treatment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PromptTemplate {
    pub id: PromptId,
    pub text: &'static str,
    pub temperature: f64,
}

const INTERPRETATION: &str = "Analyze the user's responses in the dialogue and return per topic one of the following options: na, yes, sometimes, often, no, unwilling to disclose.\nTopic 1: baby bonding issues, topic 2: concentration and decision-making problems, topic 3: feeling sad or tearful, topic 4: feeling guilty, topic 5: irritability towards the baby or the partner, topic 6: overreacting or loss of appetite, topic 7: suicide behavior, topic 8: trouble sleeping.";

const QUESTION_GENERATION: &str = "The following is a conversation with an AI assistant. The assistant is dynamic, never repeats the same thing twice, and is creative, intelligent, and kind. The assistant tries to establish a conversation, and it always asks a question when he finishes speaking about one of these topics: topic 1: baby bonding issues, topic 2: concentration and decision-making problems, topic 3: feeling sad or tearful, topic 4: feeling guilty, topic 5: irritability towards the baby or the partner, topic 6: overreacting or loss of appetite, topic 7: suicide behavior, topic 8: trouble sleeping. Return an utterance per topic.";

const TREATMENT: &str = "Propose three care treatments for a user with PPD taking into consideration its responses into the following dialogue.";

/// Reply syntax the interpretation parser expects.
pub const INTERPRETATION_FORMAT: &str =
    "Answer with exactly one line per topic, in the form `topic <n>: <option>`, and nothing else.";

pub const TREATMENT_FORMAT: &str = "Answer with a numbered list of exactly three items.";

/// Scripted opening; the age is collected before any topic.
pub const AGE_QUESTION: &str =
    "Hello, and thank you for taking a few minutes to talk with me. To start, how old are you?";

pub const AGE_REPROMPT: &str = "Sorry, I did not catch that. Could you tell me your age in years?";

pub const EMPTY_REPROMPT: &str = "I did not receive a message. Take your time and answer whenever you are ready.";

impl PromptTemplate {
    pub const fn get(id: PromptId) -> PromptTemplate {
        match id {
            PromptId::Interpretation => PromptTemplate {
                id,
                text: INTERPRETATION,
                temperature: 0.0,
            },
            PromptId::QuestionGeneration => PromptTemplate {
                id,
                text: QUESTION_GENERATION,
                temperature: 1.0,
            },
            PromptId::Treatment => PromptTemplate {
                id,
                text: TREATMENT,
                temperature: 1.0,
            },
        }
    }
}

/// System text for the interpretation request.
pub fn interpretation_system() -> String {
    format!("{INTERPRETATION}\n{INTERPRETATION_FORMAT}")
}

/// System text asking for one question about `topic`.
pub fn question_system(topic: Topic) -> String {
    format!(
        "{QUESTION_GENERATION}\nAsk now about topic {}: {}.",
        topic.number(),
        topic.phrase()
    )
}

pub fn treatment_system() -> String {
    format!("{TREATMENT}\n{TREATMENT_FORMAT}")
}

/// Used when the backend fails to produce a question.
pub const fn fallback_question(topic: Topic) -> &'static str {
    match topic {
        Topic::BabyBondingIssues => "How do you feel about the bond between you and your baby these days?",
        Topic::ConcentrationAndDecisionMakingProblems => {
            "Have you noticed any trouble concentrating or making decisions lately?"
        }
        Topic::FeelingSadOrTearful => "Have you been feeling sad or tearful recently?",
        Topic::FeelingGuilty => "Do you find yourself feeling guilty about things?",
        Topic::IrritabilityTowardsTheBabyOrThePartner => {
            "Have you felt irritable towards your baby or your partner?"
        }
        Topic::OverreactingOrLossOfAppetite => "How has your appetite been? Any overeating or loss of appetite?",
        Topic::SuicideBehavior => {
            "This one is hard to ask, but it matters: have you had any thoughts of suicide or of hurting yourself?"
        }
        Topic::TroubleSleeping => "How have you been sleeping at night?",
    }
}
