//! Screening conversation: prompts, history, reply parsing and the session
//! state machine. Chat completions go through [`ChatBackend`].

pub mod backend;
pub mod history;
pub mod interpret;
pub mod prompts;
pub mod session;

pub use backend::{BackendError, ChatBackend, ChatRequest, FailingBackend, MockBackend, RuleError, RuleTable};
pub use history::{History, Speaker, Utterance, HISTORY_CAPACITY};
pub use interpret::{format_interpretation, parse_interpretation, parse_numbered_list, Interpretation};
pub use prompts::{PromptId, PromptTemplate};
pub use session::{
    parse_age, AssessOptions, Assessment, DialogueError, DialogueSession, Explanation, InterpretOutcome,
    NextQuestion, SessionState, Turn, TurnKind, ALL_COVERED_NOTICE,
};
