//! Property tests for the invariants each module promises.

use itercode::checker::{find_counterexamples, values_equal, EquivalenceBudget, SearchSpace, Verdict};
use itercode::constraint::{Constraint, ConstraintSpec, DomainSize};
use itercode::example_engine::{sample_pools, IOExample, Origin};
use itercode::metrics::pass_at_k_exact;
use itercode::minilang::{self, EvalOutcome, RunLimits};
use itercode::rng::StableRng;
use itercode::runner::{compile, CompileOptions, Handle, LanguageProfile};
use itercode::synth::{build_first_prompt, enumerate_synthesize, extract_code, observed_vectors, EnumOptions};
use itercode::task::{load_corpus, Reference, Signature, Task};
use itercode::value::{Value, ValueType};
use proptest::prelude::*;

fn corpus() -> Vec<Task> {
    load_corpus(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")).expect("corpus loads")
}

fn leaf_constraint() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        (-1000i64..1000, 0i64..500).prop_map(|(lo, w)| Constraint::Int { lo, hi: lo + w }),
        (-100i32..100, 1i32..200, 0u32..4).prop_map(|(lo, w, decimals)| Constraint::Double {
            lo: lo as f64,
            hi: (lo + w) as f64,
            decimals
        }),
        Just(Constraint::Bool),
        ("[a-e ]{1,5}", 0usize..4, 0usize..6).prop_map(|(charset, min_len, extra)| Constraint::String {
            charset,
            min_len,
            max_len: min_len + extra
        }),
    ]
}

fn constraint() -> impl Strategy<Value = Constraint> {
    leaf_constraint().prop_recursive(2, 8, 1, |inner| {
        (inner, 0usize..3, 0usize..4).prop_map(|(element, min_len, extra)| Constraint::Array {
            element: Box::new(element),
            min_len,
            max_len: min_len + extra,
        })
    })
}

fn value_type() -> impl Strategy<Value = ValueType> {
    let leaf = prop_oneof![Just(ValueType::Int), Just(ValueType::Double), Just(ValueType::Bool), Just(ValueType::String)];
    leaf.prop_recursive(2, 4, 1, |inner| inner.prop_map(ValueType::array_of))
}

fn value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Value::Int),
        any::<f64>().prop_map(Value::Double),
        prop::sample::select(&[f64::INFINITY, f64::NEG_INFINITY, f64::NAN, 0.1 + 0.2, 0.3][..]).prop_map(Value::Double),
        any::<bool>().prop_map(Value::Bool),
        "[a-z]{0,4}".prop_map(Value::Str),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| prop::collection::vec(inner, 0..3).prop_map(Value::Array))
}

/// Integer expressions over the names in `vars`.
fn int_expr(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![prop::sample::select(vars).prop_map(str::to_string), (0i64..12).prop_map(|n| n.to_string())];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(&["+", "-", "*", "/", "%"][..]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("abs({a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("max({a}, {b})")),
        ]
    })
}

fn condition(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    (int_expr(vars), prop::sample::select(&["==", "!=", "<", "<=", ">", ">="][..]), int_expr(vars))
        .prop_map(|(a, op, b)| format!("{a} {op} {b}"))
}

/// Loop-carrying programs `(x, y) -> int`.
fn program() -> impl Strategy<Value = String> {
    const OUTER: &[&str] = &["x", "y"];
    const INNER: &[&str] = &["x", "y", "acc", "i"];
    const TAIL: &[&str] = &["x", "y", "acc"];
    (int_expr(OUTER), int_expr(OUTER), int_expr(INNER), condition(INNER), int_expr(INNER), int_expr(TAIL)).prop_map(
        |(init, bound, step, cond, alt, result)| {
            format!(
                "fn Puzzle(x: int, y: int) -> int {{\n    let acc = {init};\n    for i in 0..{bound} {{\n        acc = {step};\n        if {cond} {{\n            acc = {alt};\n        }}\n    }}\n    return {result};\n}}"
            )
        },
    )
}

fn int_pair_signature() -> Signature {
    Signature::new("Puzzle", vec![ValueType::Int, ValueType::Int], ValueType::Int)
}

fn small_task(reference: &str) -> Task {
    Task {
        id: "small".into(),
        signature: int_pair_signature(),
        constraints: ConstraintSpec(vec![Constraint::Int { lo: -3, hi: 3 }; 2]),
        reference: Reference::Minilang { source: reference.into() },
        alternate_references: vec![],
        nl_description: None,
        knowledge_tags: Default::default(),
        source: "test".into(),
        base_dir: None,
    }
}

fn handle(source: &str, signature: &Signature) -> Handle {
    compile(source, &LanguageProfile::minilang(), signature, CompileOptions::default()).expect("compiles")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sampled_inputs_satisfy_their_constraints(cs in prop::collection::vec(constraint(), 1..4), seed in any::<u64>()) {
        let spec = ConstraintSpec(cs);
        prop_assume!(spec.0.iter().all(|c| c.check().is_ok()));
        let mut rng = StableRng::new(seed);
        for _ in 0..20 {
            let inputs = spec.sample(&mut rng);
            prop_assert!(spec.contains(&inputs), "{inputs:?}");
        }
        if let DomainSize::Finite(n) = spec.domain_size() {
            for i in (0..n).step_by((n / 50).max(1) as usize) {
                let inputs = spec.tuple_at(i).expect("index in domain");
                prop_assert!(spec.contains(&inputs), "tuple {i}: {inputs:?}");
            }
        }
    }

    #[test]
    fn io_type_categories_depend_only_on_the_signature(params in prop::collection::vec(value_type(), 0..4), returns in value_type()) {
        let a = Signature::new("Puzzle", params.clone(), returns.clone());
        let b = Signature::new("Other", params, returns);
        prop_assert_eq!(a.io_type_categories(), a.clone().io_type_categories());
        prop_assert_eq!(a.io_type_categories(), b.io_type_categories());
    }

    #[test]
    fn pretty_printing_round_trips(src in program()) {
        let a = minilang::parse(&src).expect("generated source parses");
        let printed = a.pretty();
        let b = minilang::parse(&printed).map_err(|e| TestCaseError::fail(format!("{printed}\n{e}")))?;
        prop_assert_eq!(a.function, b.function);
    }

    #[test]
    fn larger_step_budgets_never_change_a_finished_result(src in program(), x in -20i64..20, y in -20i64..20, budget in 1u64..3000, extra in 0u64..100_000) {
        let p = minilang::compile(&src).expect("generated source compiles");
        let inputs = [Value::Int(x), Value::Int(y)];
        let small = RunLimits { step_budget: budget, wall_clock_ms: 60_000 };
        let large = RunLimits { step_budget: budget + extra, wall_clock_ms: 60_000 };
        let first = minilang::evaluate(&p, &inputs, &small).unwrap();
        if first != EvalOutcome::Timeout {
            prop_assert_eq!(minilang::evaluate(&p, &inputs, &large).unwrap(), first);
        }
    }

    #[test]
    fn values_equal_is_reflexive_and_symmetric(a in value(), b in value()) {
        prop_assert!(values_equal(&a, &a));
        prop_assert_eq!(values_equal(&a, &b), values_equal(&b, &a));
    }

    #[test]
    fn extract_code_never_returns_nothing(answer in "(```[a-z]{0,6}\n)?[ -~\n]{0,60}(```)?[ -~\n]{0,20}") {
        prop_assert!(!extract_code(&answer).is_empty());
    }

    #[test]
    fn final_stage_never_beats_first_round(n in 1usize..30, c1 in 0usize..30, c2 in 0usize..30, k in 1usize..30) {
        prop_assume!(c1 <= n && k <= n);
        let c2 = c2.min(c1);
        prop_assert!(pass_at_k_exact(n, c2, k).unwrap() <= pass_at_k_exact(n, c1, k).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evaluation_is_deterministic(src in program(), x in -50i64..50, y in -50i64..50) {
        let p = minilang::compile(&src).expect("generated source compiles");
        let limits = RunLimits { step_budget: 20_000, wall_clock_ms: 60_000 };
        let inputs = [Value::Int(x), Value::Int(y)];
        prop_assert_eq!(minilang::evaluate(&p, &inputs, &limits).unwrap(), minilang::evaluate(&p, &inputs, &limits).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhaustive_search_never_misses_a_difference(body in int_expr(&["x", "y"])) {
        let reference = "fn Puzzle(x: int, y: int) -> int { return x * y - 1; }";
        let candidate = format!("fn Puzzle(x: int, y: int) -> int {{ return {body}; }}");
        let task = small_task(reference);
        let limits = RunLimits::default();
        let (mut r, mut c) = (handle(reference, &task.signature), handle(&candidate, &task.signature));
        let differs = (0..49).any(|i| {
            let inputs = task.constraints.tuple_at(i).unwrap();
            c.run(&inputs, &limits) != r.run(&inputs, &limits)
        });
        let mut space = SearchSpace::new(&task, EquivalenceBudget::default(), 1);
        let verdict = find_counterexamples(&mut c, &mut r, &mut space, &[], &limits).unwrap();
        prop_assert_eq!(differs, matches!(verdict, Verdict::Distinguished { .. }), "{}", verdict.name());
        // Every reported counterexample reproduces on a fresh run of both programs.
        for ce in verdict.evidence() {
            let expected = r.run(&ce.example.inputs, &limits);
            prop_assert_eq!(expected.value(), Some(&ce.example.expected));
            prop_assert!(c.run(&ce.example.inputs, &limits).value() != Some(&ce.example.expected));
        }
    }

    #[test]
    fn a_larger_fuzz_budget_keeps_every_counterexample(m in 2i64..60, r in 0i64..60, budget in 1u64..1500, extra in 0u64..1500, seed in any::<u64>()) {
        let reference = "fn Puzzle(x: int) -> int { return x * 2; }";
        let candidate = format!("fn Puzzle(x: int) -> int {{ if x % {m} == {} {{ return x * 2 + 1; }} return x * 2; }}", r % m);
        let task = Task {
            signature: Signature::new("Puzzle", vec![ValueType::Int], ValueType::Int),
            constraints: ConstraintSpec(vec![Constraint::Int { lo: 0, hi: 10_000_000 }]),
            ..small_task(reference)
        };
        let limits = RunLimits::default();
        let found = |fuzz_samples: u64| -> Vec<Vec<Value>> {
            let budget = EquivalenceBudget { fuzz_samples, exhaustive_cutoff: 1000, max_counterexamples: 100_000 };
            let mut space = SearchSpace::new(&task, budget, seed);
            let (mut rh, mut ch) = (handle(reference, &task.signature), handle(&candidate, &task.signature));
            let v = find_counterexamples(&mut ch, &mut rh, &mut space, &[], &limits).unwrap();
            v.evidence().iter().map(|e| e.example.inputs.clone()).collect()
        };
        let large = found(budget + extra);
        for inputs in found(budget) {
            prop_assert!(large.contains(&inputs), "{inputs:?} lost");
        }
    }

    #[test]
    fn enumerated_programs_satisfy_their_examples(a in -3i64..4, b in -20i64..20, xs in prop::collection::btree_set(-50i64..50, 2..6)) {
        let signature = Signature::new("Puzzle", vec![ValueType::Int], ValueType::Int);
        let examples: Vec<IOExample> = xs
            .iter()
            .map(|&x| IOExample::new(vec![Value::Int(x)], Value::Int(a * x + b), Origin::Initial, 1))
            .collect();
        if let Some(f) = enumerate_synthesize(&signature, &examples, EnumOptions::default()) {
            let p = minilang::compile(&f.to_string()).expect("enumerated program compiles");
            for ex in &examples {
                prop_assert_eq!(minilang::evaluate(&p, &ex.inputs, &RunLimits::default()).unwrap(), EvalOutcome::Value(ex.expected.clone()));
            }
        }
    }

    #[test]
    fn pruning_keeps_every_output_vector(xs in prop::collection::vec((-5i64..5, -5i64..5), 1..4)) {
        let signature = int_pair_signature();
        let examples: Vec<IOExample> = xs
            .iter()
            .map(|&(x, y)| IOExample::new(vec![Value::Int(x), Value::Int(y)], Value::Int(0), Origin::Initial, 1))
            .collect();
        prop_assert_eq!(observed_vectors(&signature, &examples, 2, true), observed_vectors(&signature, &examples, 2, false));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pools_and_prompts_are_reproducible(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let tasks = corpus();
        let task = &tasks[pick.index(tasks.len())];
        let a = sample_pools(task, seed, &RunLimits::default()).unwrap();
        let b = sample_pools(task, seed, &RunLimits::default()).unwrap();
        prop_assert_eq!(&a, &b);
        let profile = LanguageProfile::minilang();
        for set in &a {
            let (visible, _) = set.split(3);
            prop_assert_eq!(build_first_prompt(task, &visible, &profile).unwrap(), build_first_prompt(task, &visible, &profile).unwrap());
        }
    }
}
