//! Seeded example pools, example rendering, and supplement selection.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::minilang::RunLimits;
use crate::rng::{derive_seed, StableRng};
use crate::runner::{fill, Handle, LanguageProfile, RunOutcome};
use crate::task::Task;
use crate::value::Value;

pub const SETS_PER_TASK: usize = 5;
pub const POOL_SIZE: usize = 10;
/// Character budget for one rendered example line.
pub const EXAMPLE_CHAR_BUDGET: usize = 2000;
pub const DUPLICATE_RETRIES: usize = 100;
pub const MAX_SUPPLEMENTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Initial,
    Pool,
    Searched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IOExample {
    pub inputs: Vec<Value>,
    pub expected: Value,
    pub origin: Origin,
    pub round_added: u32,
}

impl IOExample {
    pub fn new(inputs: Vec<Value>, expected: Value, origin: Origin, round_added: u32) -> Self {
        IOExample { inputs, expected, origin, round_added }
    }

    pub fn with_origin(&self, origin: Origin, round_added: u32) -> Self {
        IOExample { origin, round_added, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePoolSet {
    pub task_id: String,
    pub set_index: usize,
    pub seed: u64,
    pub examples: Vec<IOExample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ExamplePoolSet {
    /// The first `noe` examples are shown up front; the rest stay hidden.
    pub fn split(&self, noe: usize) -> (Vec<IOExample>, Vec<IOExample>) {
        let noe = noe.min(self.examples.len());
        let visible = self.examples[..noe].iter().map(|e| e.with_origin(Origin::Initial, 1)).collect();
        let invisible = self.examples[noe..].iter().map(|e| e.with_origin(Origin::Pool, 0)).collect();
        (visible, invisible)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoolError {
    #[error("task {task_id}: reference cannot be loaded: {detail}")]
    BrokenReference { task_id: String, detail: String },
    #[error("task {task_id}: reference failed on {inputs:?}: {detail}")]
    ReferenceFailed { task_id: String, inputs: Vec<Value>, detail: String },
    #[error("task {task_id}: cannot sample an example within {EXAMPLE_CHAR_BUDGET} characters")]
    OverBudget { task_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("rendered example is {len} characters, over the {EXAMPLE_CHAR_BUDGET}-character budget")]
    OverBudget { len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("select_supplements called with no pool failures and no searched examples")]
pub struct NoSupplements;

pub fn pool_seed(master_seed: u64, task_id: &str, set_index: usize) -> u64 {
    derive_seed(master_seed, &[task_id, "pool", &set_index.to_string()])
}

/// Five sets of ten examples each, reproducible from `(task, master_seed)`.
pub fn sample_pools(task: &Task, master_seed: u64, limits: &RunLimits) -> Result<Vec<ExamplePoolSet>, PoolError> {
    let mut reference = task
        .open_reference(&task.reference, Default::default())
        .map_err(|o| PoolError::BrokenReference { task_id: task.id.clone(), detail: o.detail() })?;
    (0..SETS_PER_TASK).map(|set| sample_set(task, &mut reference, master_seed, set, limits)).collect()
}

fn sample_set(
    task: &Task,
    reference: &mut Handle,
    master_seed: u64,
    set_index: usize,
    limits: &RunLimits,
) -> Result<ExamplePoolSet, PoolError> {
    let seed = pool_seed(master_seed, &task.id, set_index);
    let mut rng = StableRng::new(seed);
    let profile = LanguageProfile::minilang();
    let mut seen: HashSet<String> = HashSet::new();
    let mut examples = Vec::with_capacity(POOL_SIZE);
    let mut warnings = Vec::new();
    while examples.len() < POOL_SIZE {
        let mut attempt = 0;
        let example = loop {
            let inputs = task.constraints.sample(&mut rng);
            let key = serde_json::to_string(&inputs).expect("values serialize");
            let fresh = !seen.contains(&key);
            if !fresh && attempt < DUPLICATE_RETRIES {
                attempt += 1;
                continue;
            }
            let expected = match reference.run(&inputs, limits) {
                RunOutcome::Ok(v) => v,
                other => {
                    return Err(PoolError::ReferenceFailed { task_id: task.id.clone(), inputs, detail: other.to_string() })
                }
            };
            let ex = IOExample::new(inputs, expected, Origin::Pool, 0);
            if render_example(&task.signature.name, &ex, &profile).is_err() {
                attempt += 1;
                if attempt > DUPLICATE_RETRIES {
                    return Err(PoolError::OverBudget { task_id: task.id.clone() });
                }
                continue;
            }
            if !fresh {
                warnings.push(format!(
                    "set {set_index} example {}: duplicate input allowed after {DUPLICATE_RETRIES} retries",
                    examples.len()
                ));
            }
            seen.insert(key);
            break ex;
        };
        examples.push(example);
    }
    for w in &warnings {
        log::warn!("task {}: {w}", task.id);
    }
    Ok(ExamplePoolSet { task_id: task.id.clone(), set_index, seed, examples, warnings })
}

/// One example line in the profile's call syntax.
pub fn render_example(function_name: &str, ex: &IOExample, profile: &LanguageProfile) -> Result<String, RenderError> {
    let call = profile.render_call(function_name, &ex.inputs);
    let line = fill(&profile.example_template, &[("call", &call), ("output", &profile.literal(&ex.expected))]);
    let len = line.chars().count();
    if len > EXAMPLE_CHAR_BUDGET {
        return Err(RenderError::OverBudget { len });
    }
    Ok(line)
}

/// Pool failures take priority (first `noe` in pool order); otherwise every
/// searched counterexample is shown, up to [`MAX_SUPPLEMENTS`].
pub fn select_supplements(
    pool_failures: &[IOExample],
    searched: &[IOExample],
    noe: usize,
) -> Result<Vec<IOExample>, NoSupplements> {
    if !pool_failures.is_empty() {
        Ok(pool_failures.iter().take(noe).cloned().collect())
    } else if !searched.is_empty() {
        Ok(searched.iter().take(MAX_SUPPLEMENTS).cloned().collect())
    } else {
        Err(NoSupplements)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Constraint, ConstraintSpec};
    use crate::task::{Reference, Signature};
    use crate::value::ValueType;
    use std::collections::BTreeSet;

    fn task(params: Vec<ValueType>, constraints: Vec<Constraint>, returns: ValueType, source: &str) -> Task {
        Task {
            id: "t".into(),
            signature: Signature::new("Puzzle", params, returns),
            constraints: ConstraintSpec(constraints),
            reference: Reference::Minilang { source: source.into() },
            alternate_references: vec![],
            nl_description: None,
            knowledge_tags: BTreeSet::from(["math".to_string()]),
            source: "test".into(),
            base_dir: None,
        }
    }

    fn sum_check() -> Task {
        task(
            vec![ValueType::Int; 3],
            vec![Constraint::Int { lo: 0, hi: 20 }; 3],
            ValueType::Bool,
            "fn Puzzle(x: int, y: int, z: int) -> bool { return x + y == z; }",
        )
    }

    fn ex(inputs: Vec<Value>, expected: Value) -> IOExample {
        IOExample::new(inputs, expected, Origin::Pool, 0)
    }

    #[test]
    fn pools_have_shape_and_membership() {
        let t = sum_check();
        let pools = sample_pools(&t, 7, &RunLimits::default()).unwrap();
        assert_eq!(pools.len(), 5);
        for (i, set) in pools.iter().enumerate() {
            assert_eq!(set.set_index, i);
            assert_eq!(set.examples.len(), 10);
            assert!(set.warnings.is_empty());
            let distinct: HashSet<String> = set.examples.iter().map(|e| format!("{:?}", e.inputs)).collect();
            assert_eq!(distinct.len(), 10);
            for e in &set.examples {
                assert!(t.constraints.contains(&e.inputs));
                let [Value::Int(a), Value::Int(b), Value::Int(c)] = e.inputs[..] else { panic!() };
                assert_eq!(e.expected, Value::Bool(a + b == c));
            }
        }
    }

    #[test]
    fn pools_are_deterministic_and_seed_dependent() {
        let t = sum_check();
        let a = sample_pools(&t, 7, &RunLimits::default()).unwrap();
        let b = sample_pools(&t, 7, &RunLimits::default()).unwrap();
        let c = sample_pools(&t, 8, &RunLimits::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a[0].examples, a[1].examples);
    }

    #[test]
    fn tiny_domain_warns_about_duplicates() {
        let t = task(vec![ValueType::Bool], vec![Constraint::Bool], ValueType::Bool, "fn Puzzle(x: bool) -> bool { return !x; }");
        let pools = sample_pools(&t, 1, &RunLimits::default()).unwrap();
        for set in &pools {
            assert_eq!(set.examples.len(), 10);
            assert_eq!(set.warnings.len(), 8);
        }
    }

    #[test]
    fn reference_failure_aborts() {
        let t = task(
            vec![ValueType::Int],
            vec![Constraint::Int { lo: 0, hi: 0 }],
            ValueType::Int,
            "fn Puzzle(x: int) -> int { return 1 / x; }",
        );
        assert!(matches!(sample_pools(&t, 1, &RunLimits::default()), Err(PoolError::ReferenceFailed { .. })));
    }

    #[test]
    fn split_by_noe() {
        let pools = sample_pools(&sum_check(), 3, &RunLimits::default()).unwrap();
        for noe in [3, 5, 7, 10] {
            let (visible, invisible) = pools[0].split(noe);
            assert_eq!(visible.len(), noe);
            assert_eq!(invisible.len(), 10 - noe);
            let inputs: Vec<_> = visible.iter().chain(&invisible).map(|e| e.inputs.clone()).collect();
            let pool: Vec<_> = pools[0].examples.iter().map(|e| e.inputs.clone()).collect();
            assert_eq!(inputs, pool);
            assert!(visible.iter().all(|e| e.origin == Origin::Initial && e.round_added == 1));
        }
    }

    #[test]
    fn rendering() {
        let mut csharp = LanguageProfile::minilang();
        csharp.example_template = "TryCode.{call} = {output}".into();
        let e = ex(vec![Value::Int(17)], Value::Int(34));
        assert_eq!(render_example("Puzzle", &e, &csharp).unwrap(), "TryCode.Puzzle(17) = 34");
        let plain = LanguageProfile::minilang();
        let e = ex(vec![Value::Int(1), Value::Int(2), Value::Int(3)], Value::Bool(true));
        assert_eq!(render_example("Puzzle", &e, &plain).unwrap(), "Puzzle(1, 2, 3) = true");
        let e = ex(
            vec![Value::Array(vec![Value::Int(1), Value::Int(2)]), Value::Str("ab".into())],
            Value::Str("abab".into()),
        );
        assert_eq!(render_example("Puzzle", &e, &plain).unwrap(), r#"Puzzle([1, 2], "ab") = "abab""#);
        let long = ex(vec![Value::Str("a".repeat(2100))], Value::Int(1));
        assert!(matches!(render_example("Puzzle", &long, &plain), Err(RenderError::OverBudget { .. })));
    }

    #[test]
    fn supplement_rules() {
        let mk = |n: i64| ex(vec![Value::Int(n)], Value::Int(n));
        let failures: Vec<_> = (0..6).map(mk).collect();
        let searched: Vec<_> = (100..125).map(mk).collect();
        assert_eq!(select_supplements(&failures, &searched, 3).unwrap(), failures[..3].to_vec());
        assert_eq!(select_supplements(&[], &searched[..2], 3).unwrap(), searched[..2].to_vec());
        assert_eq!(select_supplements(&[], &searched, 3).unwrap(), searched[..20].to_vec());
        assert_eq!(select_supplements(&[], &[], 3), Err(NoSupplements));
    }
}
