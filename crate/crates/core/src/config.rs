//! The flat TOML configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checker::EquivalenceBudget;
use crate::controller::RunConfig;
use crate::minilang::RunLimits;
use crate::synth::{
    ChatConfig, ChatSynthesizer, EnumOptions, EnumerativeSynthesizer, Fixture, InputMatchingSynthesizer,
    PerfectSynthesizer, PromptMode, ScriptedSynthesizer, Synthesizer,
};

/// Every accepted key, in documentation order.
pub const CONFIG_KEYS: [&str; 23] = [
    "noe",
    "attempts_n",
    "max_rounds",
    "seed",
    "step_budget",
    "wall_clock_ms",
    "fuzz_samples",
    "exhaustive_cutoff",
    "max_counterexamples",
    "profile",
    "mode",
    "keep_artifacts",
    "workers",
    "synthesizer",
    "fixture",
    "endpoint",
    "model",
    "api_key_env",
    "temperature",
    "batch",
    "max_parallel",
    "request_timeout_s",
    "enum_max_depth",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Answers with the task's reference source.
    #[default]
    Perfect,
    /// Hardcodes the visible examples.
    InputMatching,
    /// Replays a fixture file.
    Scripted,
    /// Bottom-up enumerative search.
    Enumerative,
    /// An OpenAI-style chat-completions endpoint.
    Chat,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "perfect" => Backend::Perfect,
            "input-matching" => Backend::InputMatching,
            "scripted" => Backend::Scripted,
            "enumerative" => Backend::Enumerative,
            "chat" => Backend::Chat,
            other => {
                return Err(format!(
                    "unknown synthesizer `{other}` (expected perfect, input-matching, scripted, enumerative or chat)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub noe: usize,
    pub attempts_n: usize,
    pub max_rounds: u32,
    pub seed: u64,
    pub step_budget: u64,
    pub wall_clock_ms: u64,
    pub fuzz_samples: u64,
    pub exhaustive_cutoff: u64,
    pub max_counterexamples: usize,
    pub profile: String,
    pub mode: PromptMode,
    pub keep_artifacts: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub synthesizer: Backend,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<PathBuf>,
    pub endpoint: String,
    pub model: String,
    /// Name of the variable holding the key, never the key itself.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub batch: bool,
    pub max_parallel: usize,
    pub request_timeout_s: u64,
    pub enum_max_depth: usize,
}

impl Default for FileConfig {
    fn default() -> Self {
        let run = RunConfig::default();
        let chat = ChatConfig::default();
        FileConfig {
            noe: run.noe,
            attempts_n: run.attempts_n,
            max_rounds: run.max_rounds,
            seed: run.master_seed,
            step_budget: run.limits.step_budget,
            wall_clock_ms: run.limits.wall_clock_ms,
            fuzz_samples: run.budget.fuzz_samples,
            exhaustive_cutoff: run.budget.exhaustive_cutoff,
            max_counterexamples: run.budget.max_counterexamples,
            profile: run.profile_id,
            mode: run.mode,
            keep_artifacts: false,
            workers: None,
            synthesizer: Backend::default(),
            fixture: None,
            endpoint: chat.endpoint,
            model: chat.model,
            api_key_env: None,
            temperature: chat.temperature,
            batch: chat.batch,
            max_parallel: chat.max_parallel,
            request_timeout_s: chat.request_timeout_s,
            enum_max_depth: EnumOptions::default().max_depth,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Fixture(#[from] crate::synth::FixtureError),
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(k) = table.keys().find(|k| k.contains("key") && k.as_str() != "api_key_env") {
            return Err(format!("key `{k}` is not accepted: API keys are read from the variable named by `api_key_env`"));
        }
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Load `path`; a relative `fixture` is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io { path: path.into(), source })?;
        let mut config =
            Self::from_toml(&text).map_err(|message| ConfigFileError::Parse { path: path.into(), message })?;
        if let (Some(fixture), Some(dir)) = (&config.fixture, path.parent()) {
            if fixture.is_relative() {
                config.fixture = Some(dir.join(fixture));
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            noe: self.noe,
            attempts_n: self.attempts_n,
            max_rounds: self.max_rounds,
            limits: RunLimits { step_budget: self.step_budget, wall_clock_ms: self.wall_clock_ms },
            budget: EquivalenceBudget {
                fuzz_samples: self.fuzz_samples,
                exhaustive_cutoff: self.exhaustive_cutoff,
                max_counterexamples: self.max_counterexamples,
            },
            master_seed: self.seed,
            mode: self.mode,
            profile_id: self.profile.clone(),
            keep_artifacts: self.keep_artifacts,
        }
    }

    pub fn chat_config(&self) -> ChatConfig {
        ChatConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            api_key_env: self.api_key_env.clone(),
            temperature: self.temperature,
            batch: self.batch,
            max_parallel: self.max_parallel,
            request_timeout_s: self.request_timeout_s,
            ..ChatConfig::default()
        }
    }

    pub fn build_synthesizer(&self) -> Result<Box<dyn Synthesizer>, ConfigFileError> {
        Ok(match self.synthesizer {
            Backend::Perfect => Box::new(PerfectSynthesizer),
            Backend::InputMatching => Box::new(InputMatchingSynthesizer),
            Backend::Enumerative => Box::new(EnumerativeSynthesizer {
                options: EnumOptions { max_depth: self.enum_max_depth, ..EnumOptions::default() },
            }),
            Backend::Chat => Box::new(ChatSynthesizer::new(self.chat_config())),
            Backend::Scripted => {
                let path = self
                    .fixture
                    .as_ref()
                    .ok_or_else(|| ConfigFileError::Invalid("the scripted synthesizer needs a fixture".into()))?;
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Box::new(ScriptedSynthesizer::new(Fixture::load(path)?, name))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_set_is_frozen() {
        let full = FileConfig {
            workers: Some(2),
            fixture: Some("f.json".into()),
            api_key_env: Some("CHAT_KEY".into()),
            ..FileConfig::default()
        };
        let table: toml::Table = toml::from_str(&full.to_toml()).unwrap();
        let mut keys: Vec<&str> = table.keys().map(String::as_str).collect();
        let mut expected = CONFIG_KEYS.to_vec();
        keys.sort();
        expected.sort();
        assert_eq!(keys, expected);
        assert_eq!(FileConfig::from_toml(&full.to_toml()).unwrap(), full);
    }

    #[test]
    fn defaults_and_overrides() {
        let c = FileConfig::from_toml("noe = 7\nmode = \"natural_language\"\nsynthesizer = \"input-matching\"\n").unwrap();
        let run = c.run_config();
        assert_eq!((run.noe, run.attempts_n, run.max_rounds), (7, 10, 5));
        assert_eq!(run.limits.wall_clock_ms, 5000);
        assert_eq!(run.mode, PromptMode::NaturalLanguage);
        assert_eq!(c.synthesizer, Backend::InputMatching);
        assert_eq!(FileConfig::from_toml("").unwrap(), FileConfig::default());
    }

    #[test]
    fn rejects_unknown_and_secret_keys() {
        assert!(FileConfig::from_toml("noes = 3\n").is_err());
        let err = FileConfig::from_toml("api_key = \"sk-123\"\n").unwrap_err();
        assert!(err.contains("api_key_env") && !err.contains("sk-123"));
    }

    #[test]
    fn scripted_needs_fixture() {
        let c = FileConfig { synthesizer: Backend::Scripted, ..FileConfig::default() };
        assert!(matches!(c.build_synthesizer(), Err(ConfigFileError::Invalid(_))));
    }
}
