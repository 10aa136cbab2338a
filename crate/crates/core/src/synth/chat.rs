//! Chat-completion HTTP backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Answer, BatchMode, FailureReason, GenerationRequest, SynthDescriptor, Synthesizer};

pub const TRIES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key. Keys never
    /// appear in configuration files or transcripts.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    /// Ask for all `n` completions in one request; otherwise `n` requests.
    pub batch: bool,
    pub max_parallel: usize,
    pub request_timeout_s: u64,
    /// Base delay of the exponential backoff between tries.
    pub backoff_ms: u64,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            api_key_env: None,
            temperature: 1.0,
            batch: true,
            max_parallel: 4,
            request_timeout_s: 300,
            backoff_ms: 1000,
        }
    }
}

pub struct ChatSynthesizer {
    config: ChatConfig,
    agent: ureq::Agent,
}

enum CallError {
    /// Worth retrying.
    Transient(String),
    ContextOverflow(String),
    Fatal(String),
}

impl ChatSynthesizer {
    pub fn new(config: ChatConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.request_timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        ChatSynthesizer { config, agent }
    }

    fn api_key(&self) -> Result<Option<String>, String> {
        match &self.config.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var).map(Some).map_err(|_| format!("environment variable {var} is not set")),
        }
    }

    fn call(&self, body: &serde_json::Value, key: Option<&str>) -> Result<Vec<String>, CallError> {
        let mut request = self.agent.post(&self.config.endpoint).header("Content-Type", "application/json");
        if let Some(key) = key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send_json(body).map_err(|e| CallError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| CallError::Transient(e.to_string()))?;
        if status != 200 {
            let lower = text.to_lowercase();
            if lower.contains("context_length") || lower.contains("maximum context") || lower.contains("context window") {
                return Err(CallError::ContextOverflow(format!("HTTP {status}")));
            }
            let snippet: String = text.chars().take(200).collect();
            return Err(if status == 429 || status >= 500 {
                CallError::Transient(format!("HTTP {status}: {snippet}"))
            } else {
                CallError::Fatal(format!("HTTP {status}: {snippet}"))
            });
        }
        let parsed: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CallError::Transient(format!("malformed response body: {e}")))?;
        let choices = parsed["choices"].as_array().ok_or_else(|| CallError::Transient("response has no choices".into()))?;
        Ok(choices.iter().map(|c| c["message"]["content"].as_str().unwrap_or_default().to_string()).collect())
    }

    fn call_with_retries(&self, body: &serde_json::Value, key: Option<&str>) -> Result<Vec<String>, Answer> {
        let mut last = String::new();
        for attempt in 0..TRIES {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            match self.call(body, key) {
                Ok(texts) => return Ok(texts),
                Err(CallError::ContextOverflow(d)) => return Err(Answer::failed(FailureReason::ContextOverflow, d)),
                Err(CallError::Fatal(d)) => return Err(Answer::failed(FailureReason::Transport, d)),
                Err(CallError::Transient(d)) => {
                    log::warn!("chat request failed (try {}/{TRIES}): {d}", attempt + 1);
                    last = d;
                }
            }
        }
        Err(Answer::failed(FailureReason::Transport, format!("generation failed after {TRIES} tries: {last}")))
    }

    pub fn request_body(&self, request: &GenerationRequest<'_>, n: usize) -> serde_json::Value {
        json!({
            "model": self.config.model,
            "messages": request.conversation.messages,
            "n": n,
            "temperature": self.config.temperature,
        })
    }
}

impl Synthesizer for ChatSynthesizer {
    fn descriptor(&self) -> SynthDescriptor {
        SynthDescriptor {
            backend: "chat".into(),
            batch_mode: if self.config.batch { BatchMode::Batched } else { BatchMode::Sequential },
            detail: format!("model={} temperature={}", self.config.model, self.config.temperature),
        }
    }

    fn capacity(&self) -> usize {
        self.config.max_parallel.max(1)
    }

    fn generate(&self, request: &GenerationRequest<'_>, n: usize) -> Vec<Answer> {
        let key = match self.api_key() {
            Ok(k) => k,
            Err(e) => return vec![Answer::failed(FailureReason::Backend, e); n],
        };
        let mut answers: Vec<Answer> = Vec::with_capacity(n);
        if self.config.batch && n > 1 {
            match self.call_with_retries(&self.request_body(request, n), key.as_deref()) {
                Ok(texts) => answers.extend(texts.into_iter().take(n).map(Answer::Text)),
                Err(failed) => return vec![failed; n],
            }
        }
        // Sequential mode, or a batched reply with fewer choices than asked.
        while answers.len() < n {
            match self.call_with_retries(&self.request_body(request, 1), key.as_deref()) {
                Ok(texts) => answers.push(texts.into_iter().next().map_or_else(
                    || Answer::failed(FailureReason::Transport, "empty choices"),
                    Answer::Text,
                )),
                Err(failed) => answers.push(failed),
            }
        }
        answers
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Constraint, ConstraintSpec};
    use crate::runner::LanguageProfile;
    use crate::synth::Conversation;
    use crate::task::{Reference, Signature, Task};
    use crate::value::ValueType;
    use std::collections::BTreeSet;

    fn task() -> Task {
        Task {
            id: "t".into(),
            signature: Signature::new("Puzzle", vec![ValueType::Int], ValueType::Int),
            constraints: ConstraintSpec(vec![Constraint::Int { lo: 0, hi: 9 }]),
            reference: Reference::Minilang { source: String::new() },
            alternate_references: vec![],
            nl_description: None,
            knowledge_tags: BTreeSet::from(["math".to_string()]),
            source: "test".into(),
            base_dir: None,
        }
    }

    #[test]
    fn unreachable_endpoint_yields_failure_markers() {
        let config = ChatConfig {
            endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
            backoff_ms: 1,
            request_timeout_s: 5,
            ..ChatConfig::default()
        };
        let synth = ChatSynthesizer::new(config);
        let t = task();
        let mut conversation = Conversation::new();
        conversation.push_user("hello");
        let profile = LanguageProfile::minilang();
        let req = GenerationRequest { task: &t, set_index: 0, round: 1, attempt: None, conversation: &conversation, visible: &[], profile: &profile };
        let answers = synth.generate(&req, 10);
        assert_eq!(answers.len(), 10);
        assert!(answers.iter().all(|a| matches!(a, Answer::Failed(f) if f.reason == FailureReason::Transport)));
    }

    #[test]
    fn body_shape() {
        let synth = ChatSynthesizer::new(ChatConfig::default());
        let t = task();
        let mut conversation = Conversation::new();
        conversation.push_user("hi");
        let profile = LanguageProfile::minilang();
        let req = GenerationRequest { task: &t, set_index: 0, round: 1, attempt: None, conversation: &conversation, visible: &[], profile: &profile };
        let body = synth.request_body(&req, 10);
        assert_eq!(body, json!({"model": "default", "messages": [{"role": "user", "content": "hi"}], "n": 10, "temperature": 1.0}));
        // The exact bytes on the wire, as documented.
        assert_eq!(
            serde_json::to_string(&body).unwrap(),
            r#"{"messages":[{"content":"hi","role":"user"}],"model":"default","n":10,"temperature":1.0}"#
        );
    }

    #[test]
    fn missing_key_variable_fails_every_slot() {
        let config = ChatConfig { api_key_env: Some("ITERCODE_TEST_UNSET_KEY_VAR".into()), ..ChatConfig::default() };
        let synth = ChatSynthesizer::new(config);
        let t = task();
        let conversation = Conversation::new();
        let profile = LanguageProfile::minilang();
        let req = GenerationRequest { task: &t, set_index: 0, round: 2, attempt: Some(0), conversation: &conversation, visible: &[], profile: &profile };
        let answers = synth.generate(&req, 1);
        assert!(matches!(&answers[0], Answer::Failed(f) if f.reason == FailureReason::Backend));
    }
}
