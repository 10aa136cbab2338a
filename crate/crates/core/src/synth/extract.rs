use std::sync::LazyLock;

use regex::Regex;

use crate::runner::{compile, CompileOptions, Handle, LanguageProfile};
use crate::task::Task;

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```[^\n`]*\n(.*?)```").expect("valid regex"));

/// Every fenced block in order; the trimmed answer itself when there are none.
/// Never empty.
pub fn extract_code(answer: &str) -> Vec<String> {
    let blocks: Vec<String> = FENCE.captures_iter(answer).map(|c| c[1].trim_end().to_string()).collect();
    if blocks.is_empty() {
        vec![answer.trim().to_string()]
    } else {
        blocks
    }
}

pub struct PickedCandidate {
    /// Position among the extracted sources.
    pub index: usize,
    pub source: String,
    pub handle: Handle,
}

/// The first source that compiles and defines the signature's function.
pub fn pick_candidate(
    sources: &[String],
    task: &Task,
    profile: &LanguageProfile,
    options: CompileOptions,
) -> Option<PickedCandidate> {
    sources.iter().enumerate().find_map(|(index, source)| {
        if !profile.defines_function(source, &task.signature.name) {
            return None;
        }
        match compile(source, profile, &task.signature, options) {
            Ok(handle) => Some(PickedCandidate { index, source: source.clone(), handle }),
            Err(outcome) => {
                log::debug!("task {}: source {index} rejected: {}", task.id, outcome.detail());
                None
            }
        }
    })
}
