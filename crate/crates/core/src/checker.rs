//! Output comparison, conformance checking and the counterexample search
//! that decides whether a candidate matches the reference.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::constraint::DomainSize;
use crate::example_engine::{IOExample, Origin};
use crate::minilang::{ast_input_matching, parse, RunLimits};
use crate::rng::StableRng;
use crate::runner::{Handle, LanguageProfile, RunOutcome, RunStatus};
use crate::task::Task;
use crate::value::Value;

const ABS_TOL: f64 = 1e-6;
const REL_TOL: f64 = 1e-6;

/// Tolerant equality. Doubles use an absolute plus relative tolerance, so
/// this relation is reflexive and symmetric but not transitive. Equal
/// infinities match, and NaN matches NaN.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Double(x), Value::Double(y)) => {
            if x.is_infinite() || y.is_infinite() {
                x == y
            } else {
                (x.is_nan() && y.is_nan()) || (x - y).abs() <= ABS_TOL + REL_TOL * x.abs().max(y.abs())
            }
        }
        (Value::Array(xs), Value::Array(ys)) => xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| values_equal(x, y)),
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceBudget {
    pub fuzz_samples: u64,
    pub exhaustive_cutoff: u64,
    pub max_counterexamples: usize,
}

impl Default for EquivalenceBudget {
    fn default() -> Self {
        EquivalenceBudget { fuzz_samples: 10_000, exhaustive_cutoff: 100_000, max_counterexamples: 20 }
    }
}

impl EquivalenceBudget {
    pub fn is_valid(&self) -> bool {
        self.fuzz_samples > 0 && self.exhaustive_cutoff > 0 && self.max_counterexamples > 0
    }
}

/// Serializable view of what a program did on one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observed {
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl From<&RunOutcome> for Observed {
    fn from(o: &RunOutcome) -> Self {
        Observed { status: o.status(), value: o.value().cloned(), detail: o.detail() }
    }
}

impl Observed {
    pub fn matches(&self, expected: &Value) -> bool {
        self.value.as_ref().is_some_and(|v| values_equal(v, expected))
    }
}

/// An example together with the candidate's (disagreeing) behavior on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub example: IOExample,
    pub actual: Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Search skipped because the invisible pool already disagreed.
    None,
    Exhaustive,
    Fuzz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpent {
    pub pool_checked: usize,
    pub mode: SearchMode,
    pub inputs_checked: u64,
    pub domain_size: DomainSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    ConformPass { checked: usize },
    ConformFail { first_mismatch: Evidence },
    PoolFail { failures: Vec<Evidence>, budget_spent: BudgetSpent },
    EquivalentWithinBudget { budget_spent: BudgetSpent },
    Distinguished { counterexamples: Vec<Evidence>, budget_spent: BudgetSpent },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::ConformPass { .. } => "conform_pass",
            Verdict::ConformFail { .. } => "conform_fail",
            Verdict::PoolFail { .. } => "pool_fail",
            Verdict::EquivalentWithinBudget { .. } => "equivalent_within_budget",
            Verdict::Distinguished { .. } => "distinguished",
        }
    }

    pub fn evidence(&self) -> &[Evidence] {
        match self {
            Verdict::ConformFail { first_mismatch } => std::slice::from_ref(first_mismatch),
            Verdict::PoolFail { failures: e, .. } | Verdict::Distinguished { counterexamples: e, .. } => e,
            _ => &[],
        }
    }
}

/// Run the candidate on each example; fail at the first disagreement.
pub fn check_conformance(candidate: &mut Handle, examples: &[IOExample], limits: &RunLimits) -> Verdict {
    for ex in examples {
        let outcome = candidate.run(&ex.inputs, limits);
        let observed = Observed::from(&outcome);
        if !observed.matches(&ex.expected) {
            return Verdict::ConformFail { first_mismatch: Evidence { example: ex.clone(), actual: observed } };
        }
    }
    Verdict::ConformPass { checked: examples.len() }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("harness defect: reference failed on {inputs:?}: {outcome}")]
pub struct HarnessDefect {
    pub inputs: Vec<Value>,
    pub outcome: String,
}

/// Search inputs and reference outputs for one (task, seed), shared by all
/// candidates searched against it. Inputs come from a prefix-stable stream,
/// so a larger fuzz budget only ever extends the sequence.
pub struct SearchSpace<'t> {
    task: &'t Task,
    budget: EquivalenceBudget,
    mode: SearchMode,
    domain_size: DomainSize,
    rng: StableRng,
    inputs: Vec<Vec<Value>>,
    expected: Vec<Option<Value>>,
}

impl<'t> SearchSpace<'t> {
    pub fn new(task: &'t Task, budget: EquivalenceBudget, seed: u64) -> Self {
        let domain_size = task.constraints.domain_size();
        let mode = match domain_size {
            DomainSize::Finite(n) if n <= budget.exhaustive_cutoff => SearchMode::Exhaustive,
            _ => SearchMode::Fuzz,
        };
        SearchSpace { task, budget, mode, domain_size, rng: StableRng::new(seed), inputs: Vec::new(), expected: Vec::new() }
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn len(&self) -> u64 {
        match (self.mode, self.domain_size) {
            (SearchMode::Exhaustive, DomainSize::Finite(n)) => n,
            _ => self.budget.fuzz_samples,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn inputs_at(&mut self, index: usize) -> &[Value] {
        while self.inputs.len() <= index {
            let next = match self.mode {
                SearchMode::Exhaustive => {
                    self.task.constraints.tuple_at(self.inputs.len() as u64).expect("index within finite domain")
                }
                _ => self.task.constraints.sample(&mut self.rng),
            };
            self.inputs.push(next);
            self.expected.push(None);
        }
        &self.inputs[index]
    }

    fn expected_at(&mut self, index: usize, reference: &mut Handle, limits: &RunLimits) -> Result<Value, HarnessDefect> {
        self.inputs_at(index);
        if let Some(v) = &self.expected[index] {
            return Ok(v.clone());
        }
        match reference.run(&self.inputs[index], limits) {
            RunOutcome::Ok(v) => {
                self.expected[index] = Some(v.clone());
                Ok(v)
            }
            other => Err(HarnessDefect { inputs: self.inputs[index].clone(), outcome: other.to_string() }),
        }
    }
}

/// Invisible-pool check, then exhaustive or fuzz differential search.
pub fn find_counterexamples(
    candidate: &mut Handle,
    reference: &mut Handle,
    space: &mut SearchSpace<'_>,
    invisible: &[IOExample],
    limits: &RunLimits,
) -> Result<Verdict, HarnessDefect> {
    let mut failures = Vec::new();
    for ex in invisible {
        let observed = Observed::from(&candidate.run(&ex.inputs, limits));
        if !observed.matches(&ex.expected) {
            failures.push(Evidence { example: ex.clone(), actual: observed });
        }
    }
    if !failures.is_empty() {
        let budget_spent = BudgetSpent {
            pool_checked: invisible.len(),
            mode: SearchMode::None,
            inputs_checked: 0,
            domain_size: space.domain_size,
        };
        return Ok(Verdict::PoolFail { failures, budget_spent });
    }

    let total = space.len();
    let mut counterexamples: Vec<Evidence> = Vec::new();
    let mut seen = HashSet::new();
    let mut checked = 0u64;
    for index in 0..total as usize {
        if counterexamples.len() >= space.budget.max_counterexamples {
            break;
        }
        checked += 1;
        let inputs = space.inputs_at(index).to_vec();
        let outcome = candidate.run(&inputs, limits);
        // Candidate errors are differences whatever the reference says, but
        // the reference must still succeed to supply an expected output.
        let expected = space.expected_at(index, reference, limits)?;
        let observed = Observed::from(&outcome);
        if !observed.matches(&expected) {
            let key = serde_json::to_string(&inputs).expect("values serialize");
            if seen.insert(key) {
                counterexamples.push(Evidence { example: IOExample::new(inputs, expected, Origin::Searched, 0), actual: observed });
            }
        }
    }
    let budget_spent =
        BudgetSpent { pool_checked: invisible.len(), mode: space.mode, inputs_checked: checked, domain_size: space.domain_size };
    Ok(if counterexamples.is_empty() {
        Verdict::EquivalentWithinBudget { budget_spent }
    } else {
        Verdict::Distinguished { counterexamples, budget_spent }
    })
}

/// Whether a candidate hardcodes at least one visible example. Reporting only.
pub fn detect_input_matching(source: &str, visible: &[IOExample], profile: &LanguageProfile) -> bool {
    if profile.is_minilang() {
        return parse(source).is_ok_and(|p| ast_input_matching(&p, visible));
    }
    let keyword_lines: Vec<&str> = source
        .lines()
        .filter(|line| {
            line.split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .any(|word| profile.conditional_keywords.iter().any(|k| k == word))
        })
        .collect();
    visible.iter().any(|ex| {
        let literals: Vec<String> = ex.inputs.iter().map(|v| profile.literal(v)).collect();
        keyword_lines.iter().any(|line| literals.iter().all(|lit| line.contains(lit.as_str())))
    })
}
