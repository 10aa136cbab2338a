use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fenced, Answer, BatchMode, FailureReason, GenerationRequest, SynthDescriptor, Synthesizer};
use crate::runner::LanguageProfile;
use crate::task::{Reference, Task};

/// Placeholder in fixture answers, replaced by the task's fenced reference.
pub const REFERENCE_PLACEHOLDER: &str = "{reference}";

/// Answers for one `(task, set, round)` key. `"*"` as task id and an absent
/// set index or attempt act as wildcards; the most specific entry wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_index: Option<usize>,
    pub round: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<usize>,
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub entries: Vec<FixtureEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("cannot read fixture {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid fixture {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io { path: p.clone(), source })?;
        serde_json::from_str(&text).map_err(|source| FixtureError::Parse { path: p, source })
    }

    fn lookup(&self, task_id: &str, set_index: usize, round: u32, attempt: Option<usize>) -> Option<&FixtureEntry> {
        self.entries
            .iter()
            .filter(|e| e.round == round)
            .filter(|e| e.task_id == task_id || e.task_id == "*")
            .filter(|e| e.set_index.is_none_or(|s| s == set_index))
            .filter(|e| e.attempt.is_none_or(|a| Some(a) == attempt))
            .filter(|e| !e.answers.is_empty())
            .max_by_key(|e| (e.task_id != "*", e.set_index.is_some(), e.attempt.is_some()))
    }
}

fn reference_answer(task: &Task, profile: &LanguageProfile) -> Option<String> {
    if profile.is_minilang() {
        return match &task.reference {
            Reference::Minilang { source } => Some(fenced(source, profile)),
            _ => None,
        };
    }
    std::iter::once(&task.reference).chain(&task.alternate_references).find_map(|r| match r {
        Reference::External { profile: Some(p), source: Some(source), .. } if *p == profile.profile_id => {
            Some(fenced(source, profile))
        }
        _ => None,
    })
}

/// Replays answers from a fixture.
pub struct ScriptedSynthesizer {
    fixture: Fixture,
    name: String,
}

impl ScriptedSynthesizer {
    pub fn new(fixture: Fixture, name: impl Into<String>) -> Self {
        ScriptedSynthesizer { fixture, name: name.into() }
    }
}

impl Synthesizer for ScriptedSynthesizer {
    fn descriptor(&self) -> SynthDescriptor {
        SynthDescriptor { backend: "scripted".into(), batch_mode: BatchMode::Local, detail: self.name.clone() }
    }

    fn generate(&self, request: &GenerationRequest<'_>, n: usize) -> Vec<Answer> {
        let task = request.task;
        let Some(entry) = self.fixture.lookup(&task.id, request.set_index, request.round, request.attempt) else {
            let detail = format!("no fixture answers for ({}, set {}, round {})", task.id, request.set_index, request.round);
            return vec![Answer::failed(FailureReason::MissingFixture, detail); n];
        };
        let expand = |text: &str| -> Answer {
            if !text.contains(REFERENCE_PLACEHOLDER) {
                return Answer::Text(text.to_string());
            }
            match reference_answer(task, request.profile) {
                Some(r) => Answer::Text(text.replace(REFERENCE_PLACEHOLDER, &r)),
                None => Answer::failed(FailureReason::Backend, "no reference source for this profile"),
            }
        };
        let len = entry.answers.len();
        let offset = request.attempt.unwrap_or(0);
        (0..n).map(|i| expand(&entry.answers[(offset + i) % len])).collect()
    }
}

/// Answers with the task's own reference source.
pub struct PerfectSynthesizer;

impl Synthesizer for PerfectSynthesizer {
    fn descriptor(&self) -> SynthDescriptor {
        SynthDescriptor { backend: "perfect".into(), batch_mode: BatchMode::Local, detail: String::new() }
    }

    fn generate(&self, request: &GenerationRequest<'_>, n: usize) -> Vec<Answer> {
        let answer = match reference_answer(request.task, request.profile) {
            Some(text) => Answer::Text(text),
            None => Answer::failed(FailureReason::Backend, "no reference source for this profile"),
        };
        vec![answer; n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Constraint, ConstraintSpec};
    use crate::synth::Conversation;
    use crate::task::Signature;
    use crate::value::ValueType;
    use std::collections::BTreeSet;

    fn task() -> Task {
        Task {
            id: "t".into(),
            signature: Signature::new("Puzzle", vec![ValueType::Int], ValueType::Int),
            constraints: ConstraintSpec(vec![Constraint::Int { lo: 0, hi: 9 }]),
            reference: Reference::Minilang { source: "fn Puzzle(x: int) -> int { return x; }".into() },
            alternate_references: vec![],
            nl_description: None,
            knowledge_tags: BTreeSet::from(["math".to_string()]),
            source: "test".into(),
            base_dir: None,
        }
    }

    fn entry(task_id: &str, set_index: Option<usize>, round: u32, attempt: Option<usize>, answers: &[&str]) -> FixtureEntry {
        FixtureEntry { task_id: task_id.into(), set_index, round, attempt, answers: answers.iter().map(|s| s.to_string()).collect() }
    }

    fn generate(s: &dyn Synthesizer, round: u32, attempt: Option<usize>, set_index: usize, n: usize) -> Vec<Answer> {
        let t = task();
        let conversation = Conversation::new();
        let profile = LanguageProfile::minilang();
        let req = GenerationRequest { task: &t, set_index, round, attempt, conversation: &conversation, visible: &[], profile: &profile };
        s.generate(&req, n)
    }

    #[test]
    fn replay_and_specificity() {
        let fixture = Fixture {
            entries: vec![
                entry("*", None, 1, None, &["generic"]),
                entry("t", None, 1, None, &["a", "b", "c"]),
                entry("t", Some(2), 1, None, &["set2"]),
                entry("t", None, 2, None, &["r2-0", "r2-1"]),
                entry("t", None, 2, Some(1), &["special"]),
            ],
        };
        let s = ScriptedSynthesizer::new(fixture, "test");
        let texts = |v: Vec<Answer>| v.into_iter().map(|a| match a { Answer::Text(t) => t, Answer::Failed(f) => format!("failed:{:?}", f.reason) }).collect::<Vec<_>>();
        assert_eq!(texts(generate(&s, 1, None, 0, 4)), ["a", "b", "c", "a"]);
        assert_eq!(texts(generate(&s, 1, None, 2, 2)), ["set2", "set2"]);
        assert_eq!(texts(generate(&s, 2, Some(0), 0, 1)), ["r2-0"]);
        assert_eq!(texts(generate(&s, 2, Some(1), 0, 1)), ["special"]);
        assert_eq!(texts(generate(&s, 2, Some(3), 0, 1)), ["r2-1"]);
        assert_eq!(texts(generate(&s, 3, Some(0), 0, 1)), ["failed:MissingFixture"]);
    }

    #[test]
    fn reference_placeholder_and_perfect() {
        let fixture = Fixture { entries: vec![entry("*", None, 1, None, &["Sure:\n{reference}"])] };
        let s = ScriptedSynthesizer::new(fixture, "test");
        let expected = "Sure:\n```minilang\nfn Puzzle(x: int) -> int { return x; }\n```";
        assert_eq!(generate(&s, 1, None, 0, 1), vec![Answer::Text(expected.into())]);
        let perfect = generate(&PerfectSynthesizer, 1, None, 0, 10);
        assert_eq!(perfect.len(), 10);
        assert_eq!(perfect[9], Answer::Text("```minilang\nfn Puzzle(x: int) -> int { return x; }\n```".into()));
    }
}
