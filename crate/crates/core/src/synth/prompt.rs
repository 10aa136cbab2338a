//! The two frozen prompt templates. Changing any text here changes the
//! experiment, so golden files under `docs/prompts/` pin the output.

use crate::example_engine::{render_example, IOExample, RenderError};
use crate::runner::LanguageProfile;
use crate::task::Task;

pub const FIRST_INSTRUCTION: &str = "Write a function that satisfies the following input-output examples. \
The examples are the only description of the requirement, so infer the intended functionality from them. \
Reply with the complete function in a single fenced code block.";

pub const NL_INSTRUCTION: &str = "Write a function that implements the following description. \
Reply with the complete function in a single fenced code block.";

pub const SUPPLEMENT_INSTRUCTION: &str = "The input-output examples given so far do not describe the functionality completely. \
Your code does not produce the expected outputs for the new examples below. \
Rewrite the complete function so that it satisfies these new examples as well as all previous ones, \
and reply with it in a single fenced code block.";

fn example_lines(task: &Task, examples: &[IOExample], profile: &LanguageProfile) -> Result<String, RenderError> {
    let lines = examples
        .iter()
        .map(|ex| render_example(&task.signature.name, ex, profile))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(lines.join("\n"))
}

fn signature_block(task: &Task, profile: &LanguageProfile) -> String {
    let sig = &task.signature;
    let signature = profile.render_signature(&sig.name, &sig.params, &sig.returns);
    let mut code = String::new();
    if !profile.preamble.is_empty() {
        code.push_str(&profile.preamble);
        code.push_str("\n\n");
    }
    code.push_str(&signature);
    format!("Complete the function below:\n```{}\n{}\n```", profile.code_fence_tag, code)
}

/// Instruction, example lines, preamble and signature, in that order.
pub fn build_first_prompt(task: &Task, visible: &[IOExample], profile: &LanguageProfile) -> Result<String, RenderError> {
    assert!(!visible.is_empty(), "first prompt needs at least one example");
    Ok(format!(
        "{FIRST_INSTRUCTION}\n\nExamples:\n{}\n\n{}\n",
        example_lines(task, visible, profile)?,
        signature_block(task, profile)
    ))
}

/// First prompt for natural-language mode: the description replaces the examples.
pub fn build_nl_prompt(task: &Task, description: &str, profile: &LanguageProfile) -> String {
    format!("{NL_INSTRUCTION}\n\nDescription:\n{}\n\n{}\n", description.trim(), signature_block(task, profile))
}

/// Incompleteness notice plus the new examples only; earlier ones are in the history.
pub fn build_supplement_prompt(
    task: &Task,
    new_examples: &[IOExample],
    profile: &LanguageProfile,
) -> Result<String, RenderError> {
    assert!(!new_examples.is_empty(), "supplement prompt needs at least one example");
    Ok(format!("{SUPPLEMENT_INSTRUCTION}\n\nNew examples:\n{}\n", example_lines(task, new_examples, profile)?))
}
