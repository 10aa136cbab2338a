//! The two-stage protocol for one (task, example set) execution: a shared
//! first round of `attempts_n` answers, then per-attempt iterative rounds
//! that feed counterexamples back until equivalence, conflict or exhaustion.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::checker::{check_conformance, detect_input_matching, find_counterexamples, EquivalenceBudget, SearchSpace, Verdict};
use crate::example_engine::{select_supplements, ExamplePoolSet, IOExample, POOL_SIZE};
use crate::minilang::RunLimits;
use crate::rng::derive_seed;
use crate::runner::{CompileOptions, Handle, LanguageProfile};
use crate::synth::{
    build_first_prompt, build_nl_prompt, build_supplement_prompt, extract_code, pick_candidate, Answer, Conversation,
    GenerationFailure, GenerationRequest, PromptMode, SynthDescriptor, Synthesizer,
};
use crate::task::Task;

pub const HARNESS_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub noe: usize,
    pub attempts_n: usize,
    pub max_rounds: u32,
    pub limits: RunLimits,
    pub budget: EquivalenceBudget,
    pub master_seed: u64,
    pub mode: PromptMode,
    pub profile_id: String,
    #[serde(default)]
    pub keep_artifacts: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            noe: 3,
            attempts_n: 10,
            max_rounds: 5,
            limits: RunLimits::default(),
            budget: EquivalenceBudget::default(),
            master_seed: 0,
            mode: PromptMode::Examples,
            profile_id: "minilang".into(),
            keep_artifacts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid run configuration: {0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError(m.into()));
        if self.noe == 0 || self.noe > POOL_SIZE {
            return fail(&format!("noe must be between 1 and {POOL_SIZE}"));
        }
        if self.attempts_n == 0 {
            return fail("attempts_n must be at least 1");
        }
        if self.max_rounds == 0 {
            return fail("max_rounds must be at least 1");
        }
        if !self.limits.is_valid() {
            return fail("step_budget and wall_clock_ms must be positive");
        }
        if !self.budget.is_valid() {
            return fail("equivalence budget fields must be positive");
        }
        Ok(())
    }

    /// Last round index a candidate can come from: the first round plus
    /// `max_rounds` iterative rounds.
    pub fn last_round(&self) -> u32 {
        match self.mode {
            PromptMode::Examples => self.max_rounds + 1,
            PromptMode::NaturalLanguage => 1,
        }
    }

    fn compile_options(&self) -> CompileOptions {
        CompileOptions { keep_artifacts: self.keep_artifacts }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    GenerationFailed,
    NoCompilableCandidate,
    ConformFail,
    RoundsExhausted,
    /// The reference misbehaved; the whole execution was aborted.
    HarnessDefect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AttemptOutcome {
    Success {
        round: u32,
    },
    Fail {
        reason: FailReason,
        round: u32,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        detail: String,
    },
}

impl AttemptOutcome {
    pub fn success_round(&self) -> Option<u32> {
        match self {
            AttemptOutcome::Success { round } => Some(*round),
            AttemptOutcome::Fail { .. } => None,
        }
    }

    fn fail(reason: FailReason, round: u32, detail: impl Into<String>) -> Self {
        AttemptOutcome::Fail { reason, round, detail: detail.into() }
    }
}

/// What happened in one round of one attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    /// Examples newly presented in this round's prompt.
    pub shown: Vec<IOExample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_failure: Option<GenerationFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    /// Check against every example shown so far.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformance: Option<Verdict>,
    /// Invisible pool plus differential search against the reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<Verdict>,
    #[serde(default)]
    pub input_matching: bool,
}

impl RoundRecord {
    fn new(round: u32, shown: Vec<IOExample>) -> Self {
        RoundRecord {
            round,
            shown,
            answer: None,
            generation_failure: None,
            candidate: None,
            conformance: None,
            search: None,
            input_matching: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptTranscript {
    pub attempt_index: usize,
    pub conversation: Conversation,
    pub rounds: Vec<RoundRecord>,
    pub outcome: AttemptOutcome,
}

impl AttemptTranscript {
    /// Every example shown up to and including `round`.
    pub fn visible_through(&self, round: u32) -> Vec<IOExample> {
        self.rounds.iter().filter(|r| r.round <= round).flat_map(|r| r.shown.iter().cloned()).collect()
    }

    pub fn first_round_passed(&self) -> bool {
        self.rounds.first().and_then(|r| r.conformance.as_ref()).is_some_and(|v| matches!(v, Verdict::ConformPass { .. }))
    }

    pub fn flagged_input_matching(&self) -> bool {
        self.rounds.iter().any(|r| r.input_matching)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub task_id: String,
    pub set_index: usize,
    pub config: RunConfig,
    pub synthesizer: SynthDescriptor,
    pub pool: ExamplePoolSet,
    pub search_seed: u64,
    pub attempts: Vec<AttemptTranscript>,
    /// c1: attempts whose first-round candidate conformed.
    pub first_round_pass_count: usize,
    /// c2: attempts that ended in success.
    pub final_success_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harness_defect: Option<String>,
}

impl ExecutionRecord {
    pub fn key(&self) -> (String, usize) {
        (self.task_id.clone(), self.set_index)
    }

    /// Earliest round at which any attempt succeeded.
    pub fn earliest_success_round(&self) -> Option<u32> {
        self.attempts.iter().filter_map(|a| a.outcome.success_round()).min()
    }

    /// The invisible pool the search started from.
    pub fn invisible_pool(&self) -> Vec<IOExample> {
        split_for_mode(&self.pool, &self.config).1
    }
}

pub fn search_seed(master_seed: u64, task_id: &str, set_index: usize) -> u64 {
    derive_seed(master_seed, &[task_id, &set_index.to_string(), "search"])
}

/// Natural-language mode shows no examples, so the whole pool is invisible.
fn split_for_mode(pool: &ExamplePoolSet, config: &RunConfig) -> (Vec<IOExample>, Vec<IOExample>) {
    match config.mode {
        PromptMode::Examples => pool.split(config.noe),
        PromptMode::NaturalLanguage => pool.split(0),
    }
}

/// Per-execution state shared by its attempts.
pub struct Execution<'a> {
    pub task: &'a Task,
    pub pool: &'a ExamplePoolSet,
    pub config: &'a RunConfig,
    pub profile: &'a LanguageProfile,
    visible: Vec<IOExample>,
    invisible: Vec<IOExample>,
    reference: Handle,
    space: SearchSpace<'a>,
    /// Search verdicts keyed by candidate source. The invisible pool and
    /// search space are fixed per execution, so a verdict depends on the
    /// source alone.
    search_cache: HashMap<String, Verdict>,
}

/// Live attempt: the transcript plus the compiled current candidate.
pub struct LiveAttempt {
    pub transcript: AttemptTranscript,
    handle: Option<Handle>,
    source: Option<String>,
    done: bool,
}

impl LiveAttempt {
    fn finished(&self) -> bool {
        self.done
    }

    fn finish(&mut self, outcome: AttemptOutcome) {
        self.transcript.outcome = outcome;
        self.handle = None;
        self.done = true;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecutionError {
    #[error("task {task}: cannot open reference: {detail}")]
    Reference { task: String, detail: String },
    #[error("task {task}: {detail}")]
    Prompt { task: String, detail: String },
    #[error("pool set {set_index} does not belong to task {task}")]
    ForeignPool { task: String, set_index: usize },
    #[error("task {0} has no natural-language description")]
    MissingDescription(String),
}

impl<'a> Execution<'a> {
    pub fn new(
        task: &'a Task,
        pool: &'a ExamplePoolSet,
        config: &'a RunConfig,
        profile: &'a LanguageProfile,
    ) -> Result<Self, ExecutionError> {
        if pool.task_id != task.id {
            return Err(ExecutionError::ForeignPool { task: task.id.clone(), set_index: pool.set_index });
        }
        let reference = task
            .open_reference(&task.reference, config.compile_options())
            .map_err(|o| ExecutionError::Reference { task: task.id.clone(), detail: o.to_string() })?;
        let (visible, invisible) = split_for_mode(pool, config);
        let space = SearchSpace::new(task, config.budget, search_seed(config.master_seed, &task.id, pool.set_index));
        Ok(Execution { task, pool, config, profile, visible, invisible, reference, space, search_cache: HashMap::new() })
    }

    fn request<'r>(
        &'r self,
        round: u32,
        attempt: Option<usize>,
        conversation: &'r Conversation,
        visible: &'r [IOExample],
    ) -> GenerationRequest<'r> {
        GenerationRequest {
            task: self.task,
            set_index: self.pool.set_index,
            round,
            attempt,
            conversation,
            visible,
            profile: self.profile,
        }
    }

    /// Shared first prompt, `attempts_n` answers, and a conformance check of
    /// each picked candidate against the initially visible examples.
    pub fn run_first_round(&mut self, synthesizer: &dyn Synthesizer) -> Result<Vec<LiveAttempt>, ExecutionError> {
        let prompt = match self.config.mode {
            PromptMode::Examples => build_first_prompt(self.task, &self.visible, self.profile)
                .map_err(|e| ExecutionError::Prompt { task: self.task.id.clone(), detail: e.to_string() })?,
            PromptMode::NaturalLanguage => {
                let description = self
                    .task
                    .nl_description
                    .as_deref()
                    .ok_or_else(|| ExecutionError::MissingDescription(self.task.id.clone()))?;
                build_nl_prompt(self.task, description, self.profile)
            }
        };
        let mut shared = Conversation::new();
        shared.push_user(&prompt);
        let answers = synthesizer.generate(&self.request(1, None, &shared, &self.visible), self.config.attempts_n);
        assert_eq!(answers.len(), self.config.attempts_n, "synthesizer returned the wrong number of answers");

        let mut attempts = Vec::with_capacity(answers.len());
        for (attempt_index, answer) in answers.into_iter().enumerate() {
            let mut live = LiveAttempt {
                transcript: AttemptTranscript {
                    attempt_index,
                    conversation: shared.clone(),
                    rounds: vec![RoundRecord::new(1, self.visible.clone())],
                    outcome: pending(),
                },
                handle: None,
                source: None,
                done: false,
            };
            self.take_answer(&mut live, 1, answer);
            attempts.push(live);
        }
        Ok(attempts)
    }

    /// Record an answer for `round`, pick and compile a candidate, and check
    /// it against all examples shown so far. Ends the attempt on failure.
    fn take_answer(&self, live: &mut LiveAttempt, round: u32, answer: Answer) {
        let record = live.transcript.rounds.last_mut().expect("round record exists");
        let text = match answer {
            Answer::Text(text) => text,
            Answer::Failed(failure) => {
                let detail = format!("{:?}: {}", failure.reason, failure.detail);
                record.generation_failure = Some(failure);
                live.finish(AttemptOutcome::fail(FailReason::GenerationFailed, round, detail));
                return;
            }
        };
        live.transcript.conversation.push_assistant(&text);
        record.answer = Some(text.clone());
        let sources = extract_code(&text);
        let Some(picked) = pick_candidate(&sources, self.task, self.profile, self.config.compile_options()) else {
            live.finish(AttemptOutcome::fail(FailReason::NoCompilableCandidate, round, ""));
            return;
        };
        let mut handle = picked.handle;
        let visible = live.transcript.visible_through(round);
        let verdict = check_conformance(&mut handle, &visible, &self.config.limits);
        let record = live.transcript.rounds.last_mut().expect("round record exists");
        record.input_matching = detect_input_matching(&picked.source, &visible, self.profile);
        record.candidate = Some(picked.source.clone());
        let passed = matches!(verdict, Verdict::ConformPass { .. });
        record.conformance = Some(verdict);
        if passed {
            live.handle = Some(handle);
            live.source = Some(picked.source);
        } else {
            live.finish(AttemptOutcome::fail(FailReason::ConformFail, round, ""));
        }
    }

    fn search(&mut self, source: &str, handle: &mut Handle) -> Result<Verdict, String> {
        if let Some(v) = self.search_cache.get(source) {
            return Ok(v.clone());
        }
        let verdict = find_counterexamples(handle, &mut self.reference, &mut self.space, &self.invisible, &self.config.limits)
            .map_err(|d| d.to_string())?;
        self.search_cache.insert(source.to_string(), verdict.clone());
        Ok(verdict)
    }

    /// Search the current candidate; on disagreement show supplements and
    /// ask for exactly one new candidate, until success or a terminal failure.
    pub fn run_iterations(&mut self, live: &mut LiveAttempt, synthesizer: &dyn Synthesizer) -> Result<(), String> {
        let mut round = 1;
        while !live.finished() {
            let mut handle = live.handle.take().expect("conforming candidate has a handle");
            let source = live.source.clone().expect("conforming candidate has a source");
            let verdict = match self.search(&source, &mut handle) {
                Ok(v) => v,
                Err(defect) => {
                    live.finish(AttemptOutcome::fail(FailReason::HarnessDefect, round, defect.clone()));
                    return Err(defect);
                }
            };
            let record = live.transcript.rounds.last_mut().expect("round record exists");
            record.search = Some(verdict.clone());
            if matches!(verdict, Verdict::EquivalentWithinBudget { .. }) {
                live.finish(AttemptOutcome::Success { round });
                return Ok(());
            }
            if round >= self.config.last_round() {
                live.finish(AttemptOutcome::fail(FailReason::RoundsExhausted, round, ""));
                return Ok(());
            }

            round += 1;
            let (pool_failures, searched): (Vec<IOExample>, Vec<IOExample>) = match &verdict {
                Verdict::PoolFail { failures, .. } => (failures.iter().map(|e| e.example.clone()).collect(), vec![]),
                Verdict::Distinguished { counterexamples, .. } => {
                    (vec![], counterexamples.iter().map(|e| e.example.clone()).collect())
                }
                _ => (vec![], vec![]),
            };
            let supplements: Vec<IOExample> = match select_supplements(&pool_failures, &searched, self.config.noe) {
                Ok(s) => s.iter().map(|e| e.with_origin(e.origin, round)).collect(),
                Err(_) => {
                    let defect = format!("verdict {} carried no supplements", verdict.name());
                    live.finish(AttemptOutcome::fail(FailReason::HarnessDefect, round, defect.clone()));
                    return Err(defect);
                }
            };
            let prompt = match build_supplement_prompt(self.task, &supplements, self.profile) {
                Ok(p) => p,
                Err(e) => {
                    live.finish(AttemptOutcome::fail(FailReason::HarnessDefect, round, e.to_string()));
                    return Err(e.to_string());
                }
            };
            live.transcript.conversation.push_user(&prompt);
            live.transcript.rounds.push(RoundRecord::new(round, supplements));
            let visible = live.transcript.visible_through(round);
            let request =
                self.request(round, Some(live.transcript.attempt_index), &live.transcript.conversation, &visible);
            let answer = synthesizer.generate(&request, 1).into_iter().next().expect("one answer slot");
            self.take_answer(live, round, answer);
        }
        Ok(())
    }
}

/// Placeholder outcome until the attempt finishes.
fn pending() -> AttemptOutcome {
    AttemptOutcome::Fail { reason: FailReason::RoundsExhausted, round: 0, detail: String::new() }
}

/// Both stages for every attempt of one execution.
pub fn evaluate_execution(
    task: &Task,
    pool: &ExamplePoolSet,
    synthesizer: &dyn Synthesizer,
    config: &RunConfig,
    profile: &LanguageProfile,
) -> Result<ExecutionRecord, ExecutionError> {
    let mut execution = Execution::new(task, pool, config, profile)?;
    let mut attempts = execution.run_first_round(synthesizer)?;
    let mut defect = None;
    for live in attempts.iter_mut() {
        if live.finished() {
            continue;
        }
        if defect.is_some() {
            live.finish(AttemptOutcome::fail(FailReason::HarnessDefect, 1, "execution aborted"));
            continue;
        }
        if let Err(d) = execution.run_iterations(live, synthesizer) {
            log::error!("task {} set {}: {d}", task.id, pool.set_index);
            defect = Some(d);
        }
    }
    let attempts: Vec<AttemptTranscript> = attempts.into_iter().map(|a| a.transcript).collect();
    Ok(ExecutionRecord {
        task_id: task.id.clone(),
        set_index: pool.set_index,
        config: config.clone(),
        synthesizer: synthesizer.descriptor(),
        pool: pool.clone(),
        search_seed: search_seed(config.master_seed, &task.id, pool.set_index),
        first_round_pass_count: attempts.iter().filter(|a| a.first_round_passed()).count(),
        final_success_count: attempts.iter().filter(|a| a.outcome.success_round().is_some()).count(),
        attempts,
        harness_defect: defect,
    })
}

/// A recorded verdict that did not reproduce.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Divergence {
    #[error("task {task} set {set_index}: pool example {index} expects {recorded} but the reference gives {actual}")]
    Pool { task: String, set_index: usize, index: usize, recorded: String, actual: String },
    #[error("task {task} set {set_index} attempt {attempt} round {round}: recorded {what} `{recorded}` but replay gives `{actual}`")]
    Verdict { task: String, set_index: usize, attempt: usize, round: u32, what: &'static str, recorded: String, actual: String },
    #[error("task {task} set {set_index} attempt {attempt} round {round}: {detail}")]
    Other { task: String, set_index: usize, attempt: usize, round: u32, detail: String },
}

/// Re-execute every recorded candidate against the recorded examples and
/// the reference, checking that each verdict reproduces. `attempt` limits
/// the check to one attempt.
pub fn replay_execution(
    record: &ExecutionRecord,
    task: &Task,
    profile: &LanguageProfile,
    attempt: Option<usize>,
) -> Result<(), Divergence> {
    let config = &record.config;
    let options = config.compile_options();
    let other = |attempt: usize, round: u32, detail: String| Divergence::Other {
        task: record.task_id.clone(),
        set_index: record.set_index,
        attempt,
        round,
        detail,
    };
    let mut reference = task.open_reference(&task.reference, options).map_err(|o| other(0, 0, o.to_string()))?;
    for (index, ex) in record.pool.examples.iter().enumerate() {
        let actual = reference.run(&ex.inputs, &config.limits);
        if !actual.value().is_some_and(|v| crate::checker::values_equal(v, &ex.expected)) {
            return Err(Divergence::Pool {
                task: record.task_id.clone(),
                set_index: record.set_index,
                index,
                recorded: ex.expected.to_string(),
                actual: actual.to_string(),
            });
        }
    }
    let invisible = record.invisible_pool();
    let mut space = SearchSpace::new(task, config.budget, record.search_seed);
    for transcript in record.attempts.iter().filter(|a| attempt.is_none_or(|i| i == a.attempt_index)) {
        let a = transcript.attempt_index;
        for round in &transcript.rounds {
            let Some(source) = &round.candidate else { continue };
            let mut handle = crate::runner::compile(source, profile, &task.signature, options)
                .map_err(|o| other(a, round.round, format!("recorded candidate no longer compiles: {o}")))?;
            let diverged = |what: &'static str, recorded: &Verdict, actual: &Verdict| Divergence::Verdict {
                task: record.task_id.clone(),
                set_index: record.set_index,
                attempt: a,
                round: round.round,
                what,
                recorded: serde_json::to_string(recorded).expect("verdicts serialize"),
                actual: serde_json::to_string(actual).expect("verdicts serialize"),
            };
            if let Some(recorded) = &round.conformance {
                let actual = check_conformance(&mut handle, &transcript.visible_through(round.round), &config.limits);
                if &actual != recorded {
                    return Err(diverged("conformance", recorded, &actual));
                }
            }
            if let Some(recorded) = &round.search {
                let actual = find_counterexamples(&mut handle, &mut reference, &mut space, &invisible, &config.limits)
                    .map_err(|d| other(a, round.round, d.to_string()))?;
                if &actual != recorded {
                    return Err(diverged("search", recorded, &actual));
                }
            }
        }
        let expected_success = transcript
            .rounds
            .last()
            .and_then(|r| r.search.as_ref())
            .is_some_and(|v| matches!(v, Verdict::EquivalentWithinBudget { .. }));
        if expected_success != transcript.outcome.success_round().is_some() {
            return Err(other(a, 0, "outcome does not follow from the recorded verdicts".into()));
        }
    }
    let c1 = record.attempts.iter().filter(|a| a.first_round_passed()).count();
    let c2 = record.attempts.iter().filter(|a| a.outcome.success_round().is_some()).count();
    if (c1, c2) != (record.first_round_pass_count, record.final_success_count) {
        return Err(other(0, 0, "pass counts do not match the transcripts".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Constraint, ConstraintSpec};
    use crate::example_engine::{sample_pools, Origin};
    use crate::synth::{Fixture, FixtureEntry, InputMatchingSynthesizer, PerfectSynthesizer, ScriptedSynthesizer};
    use crate::task::{Reference, Signature};
    use crate::value::{Value, ValueType};
    use std::collections::BTreeSet;

    const SUM_CHECK: &str = "fn Puzzle(x: int, y: int, z: int) -> bool { return z == x + y; }";
    const INCREASING: &str = "fn Puzzle(x: int, y: int, z: int) -> bool { return x < y && y < z; }";

    fn sum_check() -> Task {
        Task {
            id: "sum_check".into(),
            signature: Signature::new("Puzzle", vec![ValueType::Int; 3], ValueType::Bool),
            constraints: ConstraintSpec(vec![Constraint::Int { lo: 0, hi: 20 }; 3]),
            reference: Reference::Minilang { source: SUM_CHECK.into() },
            alternate_references: vec![],
            nl_description: Some("Whether z equals x + y.".into()),
            knowledge_tags: BTreeSet::from(["math".to_string()]),
            source: "test".into(),
            base_dir: None,
        }
    }

    fn triple(a: i64, b: i64, c: i64) -> IOExample {
        IOExample::new(vec![Value::Int(a), Value::Int(b), Value::Int(c)], Value::Bool(c == a + b), Origin::Initial, 1)
    }

    /// The three visible examples from the motivating example, then seven hidden ones.
    fn pool() -> ExamplePoolSet {
        let examples = [(1, 2, 3), (10, 5, 2), (5, 2, 3), (2, 3, 4), (1, 2, 5), (1, 1, 2), (0, 0, 0), (4, 4, 8), (3, 9, 1), (7, 0, 7)]
            .iter()
            .map(|&(a, b, c)| triple(a, b, c))
            .collect();
        ExamplePoolSet { task_id: "sum_check".into(), set_index: 0, seed: 0, examples, warnings: vec![] }
    }

    fn fenced(src: &str) -> String {
        format!("```minilang\n{src}\n```")
    }

    fn scripted(rounds: &[(u32, &[&str])]) -> ScriptedSynthesizer {
        let entries = rounds
            .iter()
            .map(|(round, answers)| FixtureEntry {
                task_id: "*".into(),
                set_index: None,
                round: *round,
                attempt: None,
                answers: answers.iter().map(|s| s.to_string()).collect(),
            })
            .collect();
        ScriptedSynthesizer::new(Fixture { entries }, "test")
    }

    fn run(synth: &dyn Synthesizer, config: &RunConfig) -> ExecutionRecord {
        evaluate_execution(&sum_check(), &pool(), synth, config, &LanguageProfile::minilang()).unwrap()
    }

    #[test]
    fn perfect_synthesizer_succeeds_in_round_one() {
        let r = run(&PerfectSynthesizer, &RunConfig::default());
        assert_eq!((r.first_round_pass_count, r.final_success_count), (10, 10));
        assert!(r.attempts.iter().all(|a| a.outcome == AttemptOutcome::Success { round: 1 }));
        assert!(r.attempts.iter().all(|a| !a.flagged_input_matching()));
        assert_eq!(r.earliest_success_round(), Some(1));
    }

    #[test]
    fn hardcoder_conforms_but_never_succeeds() {
        let r = run(&InputMatchingSynthesizer, &RunConfig::default());
        assert_eq!((r.first_round_pass_count, r.final_success_count), (10, 0));
        for a in &r.attempts {
            assert!(a.rounds[0].input_matching);
            assert!(matches!(a.outcome, AttemptOutcome::Fail { reason: FailReason::RoundsExhausted, round: 6, .. }));
            assert_eq!(a.rounds.len(), 6);
        }
    }

    #[test]
    fn empty_answers_have_no_candidate() {
        let r = run(&scripted(&[(1, &[""])]), &RunConfig::default());
        assert_eq!(r.first_round_pass_count, 0);
        assert!(r.attempts.iter().all(|a| matches!(
            a.outcome,
            AttemptOutcome::Fail { reason: FailReason::NoCompilableCandidate, round: 1, .. }
        )));
    }

    #[test]
    fn repair_after_supplement() {
        let synth = scripted(&[(1, &[&fenced(INCREASING)]), (2, &[&fenced(SUM_CHECK)])]);
        let r = run(&synth, &RunConfig::default());
        assert_eq!((r.first_round_pass_count, r.final_success_count), (10, 10));
        let a = &r.attempts[0];
        assert_eq!(a.outcome, AttemptOutcome::Success { round: 2 });
        // Pool failures come first: (2,3,4), (1,2,5) and (1,1,2), capped at noe.
        let shown: Vec<Vec<Value>> = a.rounds[1].shown.iter().map(|e| e.inputs.clone()).collect();
        assert_eq!(shown[..3], [triple(2, 3, 4).inputs, triple(1, 2, 5).inputs, triple(1, 1, 2).inputs]);
        assert!(a.rounds[1].shown.iter().all(|e| e.origin == Origin::Pool && e.round_added == 2));
        assert_eq!(a.conversation.len(), 4);
        // Every example shown in the attempt is satisfied by the final candidate.
        let mut h = crate::runner::compile(SUM_CHECK, &LanguageProfile::minilang(), &sum_check().signature, CompileOptions::default()).unwrap();
        assert!(matches!(check_conformance(&mut h, &a.visible_through(2), &RunLimits::default()), Verdict::ConformPass { .. }));
    }

    #[test]
    fn conflict_with_an_initial_example_ends_the_attempt() {
        let always_true = "fn Puzzle(x: int, y: int, z: int) -> bool { return true; }";
        let synth = scripted(&[(1, &[&fenced(INCREASING)]), (2, &[&fenced(always_true)])]);
        let r = run(&synth, &RunConfig::default());
        assert_eq!((r.first_round_pass_count, r.final_success_count), (10, 0));
        assert!(r.attempts.iter().all(|a| matches!(
            a.outcome,
            AttemptOutcome::Fail { reason: FailReason::ConformFail, round: 2, .. }
        )));
    }

    #[test]
    fn repeating_a_wrong_candidate_conflicts_with_its_supplements() {
        let synth = scripted(&[(1, &[&fenced(INCREASING)]), (2, &[&fenced(INCREASING)])]);
        let r = run(&synth, &RunConfig::default());
        assert!(r.attempts.iter().all(|a| matches!(
            a.outcome,
            AttemptOutcome::Fail { reason: FailReason::ConformFail, round: 2, .. }
        )));
    }

    #[test]
    fn rounds_are_capped_for_a_candidate_that_keeps_conforming() {
        let config = RunConfig { max_rounds: 2, ..RunConfig::default() };
        let r = run(&InputMatchingSynthesizer, &config);
        for a in &r.attempts {
            assert_eq!(a.rounds.len(), 3);
            assert!(matches!(a.outcome, AttemptOutcome::Fail { reason: FailReason::RoundsExhausted, round: 3, .. }));
        }
    }

    #[test]
    fn natural_language_mode_is_single_round() {
        let config = RunConfig { mode: PromptMode::NaturalLanguage, ..RunConfig::default() };
        let synth = scripted(&[(1, &[&fenced(INCREASING), &fenced(SUM_CHECK)])]);
        let r = run(&synth, &config);
        assert_eq!(r.final_success_count, 5);
        assert!(r.attempts.iter().all(|a| a.rounds.len() == 1 && a.rounds[0].shown.is_empty()));
        assert_eq!(r.invisible_pool().len(), 10);
    }

    #[test]
    fn records_are_reproducible_and_replay() {
        let task = sum_check();
        let pools = sample_pools(&task, 7, &RunLimits::default()).unwrap();
        let synth = scripted(&[(1, &[&fenced(INCREASING), &fenced(SUM_CHECK), "nope"]), (2, &["{reference}"])]);
        let config = RunConfig { master_seed: 7, ..RunConfig::default() };
        let profile = LanguageProfile::minilang();
        let a = evaluate_execution(&task, &pools[2], &synth, &config, &profile).unwrap();
        let b = evaluate_execution(&task, &pools[2], &synth, &config, &profile).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        replay_execution(&a, &task, &profile, None).unwrap();

        let mut tampered = a.clone();
        let ex = &mut tampered.attempts[1].rounds[0].shown[0];
        ex.expected = Value::Bool(!matches!(ex.expected, Value::Bool(true)));
        assert!(matches!(replay_execution(&tampered, &task, &profile, Some(1)), Err(Divergence::Verdict { .. })));

        let mut tampered = a.clone();
        tampered.pool.examples[4].expected = Value::Int(3);
        assert!(matches!(replay_execution(&tampered, &task, &profile, None), Err(Divergence::Pool { index: 4, .. })));
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        assert!(RunConfig { noe: 11, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { attempts_n: 0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { max_rounds: 0, ..RunConfig::default() }.validate().is_err());
    }
}
