//! Prompting, answer extraction, and the synthesizer backends.

mod chat;
mod enumerative;
mod extract;
mod hardcode;
mod prompt;
mod scripted;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use chat::{ChatConfig, ChatSynthesizer};
pub use enumerative::{enumerate_synthesize, expr_source, observed_vectors, EnumOptions, EnumerativeSynthesizer};
pub use extract::{extract_code, pick_candidate, PickedCandidate};
pub use hardcode::{hardcoded_program, InputMatchingSynthesizer};
pub use prompt::{
    build_first_prompt, build_nl_prompt, build_supplement_prompt, FIRST_INSTRUCTION, NL_INSTRUCTION,
    SUPPLEMENT_INSTRUCTION,
};
pub use scripted::{Fixture, FixtureEntry, FixtureError, PerfectSynthesizer, ScriptedSynthesizer, REFERENCE_PLACEHOLDER};

use crate::example_engine::IOExample;
use crate::runner::LanguageProfile;
use crate::task::Task;

/// Stored in place of an empty assistant answer, so messages are never empty.
pub const EMPTY_ANSWER: &str = "[empty response]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// Chat history. User and assistant turns alternate after an optional
/// leading system message.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Conversation {
    pub messages: Vec<Message>,
}

impl Conversation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, role: Role, content: &str) {
        debug_assert!(
            self.messages.last().is_none_or(|m| m.role != role),
            "conversation roles must alternate"
        );
        let content = if content.trim().is_empty() { EMPTY_ANSWER } else { content };
        self.messages.push(Message { role, content: content.to_string() });
    }

    pub fn push_user(&mut self, content: &str) {
        self.push(Role::User, content);
    }

    pub fn push_assistant(&mut self, content: &str) {
        self.push(Role::Assistant, content);
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn last_user(&self) -> Option<&str> {
        self.messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str())
    }
}

/// Whether the first prompt carries examples or a natural-language description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    #[default]
    Examples,
    NaturalLanguage,
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::Examples => "examples",
            PromptMode::NaturalLanguage => "natural_language",
        })
    }
}

impl std::str::FromStr for PromptMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "examples" => Ok(PromptMode::Examples),
            "natural_language" | "nl" => Ok(PromptMode::NaturalLanguage),
            other => Err(format!("unknown mode `{other}` (expected examples or natural_language)")),
        }
    }
}

/// Everything a backend may look at when producing answers.
pub struct GenerationRequest<'a> {
    pub task: &'a Task,
    pub set_index: usize,
    /// 1 for the first round; iterative rounds count up from 2.
    pub round: u32,
    /// `None` for the shared first-round request, else the attempt index.
    pub attempt: Option<usize>,
    pub conversation: &'a Conversation,
    /// All examples shown so far in this lineage.
    pub visible: &'a [IOExample],
    pub profile: &'a LanguageProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Transport,
    ContextOverflow,
    MissingFixture,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub reason: FailureReason,
    pub detail: String,
}

/// One answer slot: text, or the marker of a failed generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Text(String),
    Failed(GenerationFailure),
}

impl Answer {
    pub fn failed(reason: FailureReason, detail: impl Into<String>) -> Self {
        Answer::Failed(GenerationFailure { reason, detail: detail.into() })
    }
}

/// How `n` completions were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// One request returning `n` completions.
    Batched,
    /// `n` independent requests.
    Sequential,
    /// Computed locally without a model.
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthDescriptor {
    pub backend: String,
    pub batch_mode: BatchMode,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

pub trait Synthesizer: Send + Sync {
    fn descriptor(&self) -> SynthDescriptor;

    /// Maximum number of requests this backend accepts concurrently.
    fn capacity(&self) -> usize {
        usize::MAX
    }

    /// Exactly `n` answer slots.
    fn generate(&self, request: &GenerationRequest<'_>, n: usize) -> Vec<Answer>;
}

/// Wrap source in a fenced block tagged for `profile`.
pub fn fenced(source: &str, profile: &LanguageProfile) -> String {
    format!("```{}\n{}\n```", profile.code_fence_tag, source.trim_end())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_content_is_replaced() {
        let mut c = Conversation::new();
        c.push_user("prompt");
        c.push_assistant("   ");
        assert_eq!(c.messages[1].content, EMPTY_ANSWER);
        assert_eq!(c.last_user(), Some("prompt"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("nl".parse::<PromptMode>().unwrap(), PromptMode::NaturalLanguage);
        assert!("other".parse::<PromptMode>().is_err());
        assert_eq!(PromptMode::Examples.to_string(), "examples");
    }
}
