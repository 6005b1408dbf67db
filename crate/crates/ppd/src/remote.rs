//! Client for an OpenAI-compatible `/chat/completions` endpoint.

use std::time::Duration;

use ppd_core::dialogue::{BackendError, ChatBackend, ChatRequest, Speaker};
use serde::{Deserialize, Serialize};

pub const ENV_BASE_URL: &str = "PPD_LLM_BASE_URL";
pub const ENV_MODEL: &str = "PPD_LLM_MODEL";
pub const ENV_API_KEY: &str = "PPD_LLM_API_KEY";

const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after a failed one.
    pub retries: u32,
}

impl RemoteConfig {
    /// Reads the three environment variables; only the key may be absent.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        Self {
            base_url: var(ENV_BASE_URL).unwrap_or_else(|| DEFAULT_BASE_URL.into()),
            model: var(ENV_MODEL).unwrap_or_else(|| DEFAULT_MODEL.into()),
            api_key: var(ENV_API_KEY),
            timeout: Duration::from_secs(30),
            retries: 1,
        }
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<WireMessage<'a>>,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<String, (BackendError, bool)> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut req = self.client.post(url).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| (BackendError::Unavailable(e.to_string()), true))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((BackendError::Unavailable(format!("status {status}")), retry));
        }
        let parsed: WireResponse = resp
            .json()
            .map_err(|e| (BackendError::BadReply(e.to_string()), false))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| (BackendError::BadReply("no choices in reply".into()), false))
    }
}

impl ChatBackend for RemoteBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let mut messages = vec![WireMessage {
            role: "system",
            content: &request.system,
        }];
        messages.extend(request.history.iter().map(|u| WireMessage {
            role: match u.speaker {
                Speaker::User => "user",
                Speaker::Assistant => "assistant",
            },
            content: &u.text,
        }));
        let body = WireRequest {
            model: &self.config.model,
            temperature: request.temperature,
            messages,
        };
        let mut last = None;
        for _ in 0..=self.config.retries {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((e, retry)) => {
                    last = Some(e);
                    if !retry {
                        break;
                    }
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}
