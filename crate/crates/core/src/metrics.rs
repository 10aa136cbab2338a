//! pass@k, aggregation over executions, category breakdowns and export.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::checker::{SearchMode, Verdict};
use crate::controller::{ExecutionRecord, RunConfig, HARNESS_VERSION};
use crate::example_engine::SETS_PER_TASK;
use crate::synth::SynthDescriptor;
use crate::task::Task;
use crate::value::KindLabel;

pub const KS: [usize; 3] = [1, 5, 10];

/// Knowledge labels that always get a row, tagged or not.
pub const KNOWLEDGE_LABELS: [&str; 4] = ["math", "string-manipulation", "array-manipulation", "complex-manipulation"];

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("pass@k needs 0 <= c <= n and 1 <= k <= n (got n={n}, c={c}, k={k})")]
    PassAtK { n: usize, c: usize, k: usize },
    #[error("no execution records to aggregate")]
    Empty,
    #[error("execution records mix configurations ({0})")]
    MixedConfigs(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// `1 - C(n-c, k) / C(n, k)` as an exact rational.
pub fn pass_at_k_exact(n: usize, c: usize, k: usize) -> Result<BigRational, MetricsError> {
    if c > n || k == 0 || k > n {
        return Err(MetricsError::PassAtK { n, c, k });
    }
    let fail = BigRational::new(binomial(n - c, k).into(), binomial(n, k).into());
    Ok(BigRational::one() - fail)
}

pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, MetricsError> {
    Ok(to_f64(&pass_at_k_exact(n, c, k)?))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("probabilities convert to f64")
}

/// Fixed six-decimal rendering used in every table.
pub fn format_probability(p: f64) -> String {
    format!("{p:.6}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FirstRound,
    Final,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::FirstRound => "first_round",
            Stage::Final => "final",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKRow {
    pub stage: Stage,
    pub k: usize,
    pub average: f64,
    /// Share of executions whose pass@k is exactly zero.
    pub zero_pass_proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: u32,
    /// Executions whose earliest success is at or before this round.
    pub successful_executions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub dimension: String,
    pub category: String,
    pub tasks: usize,
    /// Tasks implemented from at least one of their example sets.
    pub implemented: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub harness_version: String,
    pub noe: usize,
    pub attempts_n: usize,
    pub max_rounds: u32,
    pub master_seed: u64,
    pub mode: String,
    pub profile_id: String,
    pub synthesizer: SynthDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_digest: Option<String>,
    pub tasks: usize,
    pub executions: usize,
    pub excluded_executions: usize,
    /// One pool set per (task, set) serves every NoE setting.
    pub pools_shared_across_noe: bool,
    pub input_matching_filtered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metadata: ReportMetadata,
    pub pass_at_k: Vec<PassAtKRow>,
    pub cumulative_by_round: Vec<RoundRow>,
    pub categories: Vec<CategoryRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

/// Per-execution counts, optionally with input-matching attempts counted as failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub n: usize,
    pub c1: usize,
    pub c2: usize,
    pub earliest_success: Option<u32>,
}

pub fn counts(record: &ExecutionRecord, filter_input_matching: bool) -> Counts {
    let kept = |a: &&crate::controller::AttemptTranscript| !(filter_input_matching && a.flagged_input_matching());
    let attempts: Vec<_> = record.attempts.iter().filter(kept).collect();
    Counts {
        n: record.attempts.len(),
        c1: attempts.iter().filter(|a| a.first_round_passed()).count(),
        c2: attempts.iter().filter(|a| a.outcome.success_round().is_some()).count(),
        earliest_success: attempts.iter().filter_map(|a| a.outcome.success_round()).min(),
    }
}

fn usable(records: &[ExecutionRecord]) -> (Vec<&ExecutionRecord>, usize) {
    let kept: Vec<_> = records.iter().filter(|r| r.harness_defect.is_none()).collect();
    let excluded = records.len() - kept.len();
    (kept, excluded)
}

fn config_of(records: &[ExecutionRecord]) -> Result<(&RunConfig, &SynthDescriptor), MetricsError> {
    let first = records.first().ok_or(MetricsError::Empty)?;
    for r in records {
        if r.config != first.config {
            return Err(MetricsError::MixedConfigs(format!("{} set {} differs", r.task_id, r.set_index)));
        }
        if r.synthesizer != first.synthesizer {
            return Err(MetricsError::MixedConfigs(format!("{} set {} used another synthesizer", r.task_id, r.set_index)));
        }
    }
    Ok((&first.config, &first.synthesizer))
}

/// Average pass@k per stage, zero-pass proportions and the cumulative
/// successes by round. Executions aborted by a harness defect are excluded.
pub fn aggregate(records: &[ExecutionRecord], filter_input_matching: bool) -> Result<MetricsReport, MetricsError> {
    let (config, synthesizer) = config_of(records)?;
    let (kept, excluded) = usable(records);
    let mut notices = Vec::new();
    if excluded > 0 {
        notices.push(format!("{excluded} execution(s) aborted by a harness defect are excluded"));
    }
    let all: Vec<Counts> = kept.iter().map(|r| counts(r, filter_input_matching)).collect();

    let mut pass_rows = Vec::new();
    for stage in [Stage::FirstRound, Stage::Final] {
        for k in KS {
            if k > config.attempts_n {
                if stage == Stage::FirstRound {
                    notices.push(format!("pass@{k} skipped: only {} attempts per execution", config.attempts_n));
                }
                continue;
            }
            let mut sum = BigRational::zero();
            let mut zero = 0usize;
            for c in &all {
                let hits = if stage == Stage::FirstRound { c.c1 } else { c.c2 };
                let p = pass_at_k_exact(c.n, hits, k)?;
                if p.is_zero() {
                    zero += 1;
                }
                sum += p;
            }
            let (average, zero_pass_proportion) = if all.is_empty() {
                (0.0, 0.0)
            } else {
                let count = BigRational::from_integer(all.len().into());
                (to_f64(&(sum / &count)), to_f64(&(BigRational::from_integer(zero.into()) / count)))
            };
            pass_rows.push(PassAtKRow { stage, k, average, zero_pass_proportion });
        }
    }

    let cumulative_by_round = (1..=config.last_round())
        .map(|round| RoundRow {
            round,
            successful_executions: all.iter().filter(|c| c.earliest_success.is_some_and(|r| r <= round)).count(),
        })
        .collect();

    let fuzzed = fuzz_only_tasks(&kept);
    if !fuzzed.is_empty() {
        let names: Vec<&str> = fuzzed.into_iter().collect();
        notices.push(format!("equivalence judged by random sampling only (domain too large to enumerate): {}", names.join(", ")));
    }

    let tasks: BTreeSet<&str> = kept.iter().map(|r| r.task_id.as_str()).collect();
    Ok(MetricsReport {
        metadata: ReportMetadata {
            harness_version: HARNESS_VERSION.into(),
            noe: config.noe,
            attempts_n: config.attempts_n,
            max_rounds: config.max_rounds,
            master_seed: config.master_seed,
            mode: config.mode.to_string(),
            profile_id: config.profile_id.clone(),
            synthesizer: synthesizer.clone(),
            corpus_digest: None,
            tasks: tasks.len(),
            executions: kept.len(),
            excluded_executions: excluded,
            pools_shared_across_noe: true,
            input_matching_filtered: filter_input_matching,
        },
        pass_at_k: pass_rows,
        cumulative_by_round,
        categories: Vec::new(),
        notices,
    })
}

/// Whether a task is implemented from at least one of its example sets.
/// Tasks with a success that rests on a fuzzing search rather than an
/// exhaustive one.
fn fuzz_only_tasks<'a>(records: &[&'a ExecutionRecord]) -> BTreeSet<&'a str> {
    let fuzzed = |r: &ExecutionRecord| {
        r.attempts.iter().any(|a| {
            a.rounds.iter().any(|round| {
                matches!(&round.search, Some(Verdict::EquivalentWithinBudget { budget_spent }) if budget_spent.mode == SearchMode::Fuzz)
            })
        })
    };
    records.iter().filter(|r| fuzzed(r)).map(|r| r.task_id.as_str()).collect()
}

fn task_success(records: &[&ExecutionRecord], filter_input_matching: bool) -> BTreeMap<String, bool> {
    let mut out: BTreeMap<String, bool> = BTreeMap::new();
    for r in records {
        let ok = counts(r, filter_input_matching).c2 > 0;
        *out.entry(r.task_id.clone()).or_default() |= ok;
    }
    out
}

fn row(dimension: &str, category: &str, members: &[&str], success: &BTreeMap<String, bool>) -> CategoryRow {
    let tasks = members.len();
    let implemented = members.iter().filter(|t| success.get(**t).copied().unwrap_or(false)).count();
    let proportion = if tasks == 0 { 0.0 } else { implemented as f64 / tasks as f64 };
    CategoryRow { dimension: dimension.into(), category: category.into(), tasks, implemented, proportion }
}

/// Success rates by difficulty (from a natural-language run), io-type and
/// knowledge. Tasks with several labels count in every matching row.
pub fn categorize(
    records: &[ExecutionRecord],
    tasks: &[Task],
    nl_records: Option<&[ExecutionRecord]>,
    filter_input_matching: bool,
) -> (Vec<CategoryRow>, Vec<String>) {
    let (kept, _) = usable(records);
    let success = task_success(&kept, filter_input_matching);
    let mut notices = Vec::new();

    let mut sets: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &kept {
        *sets.entry(r.task_id.as_str()).or_default() += 1;
    }
    for (task, n) in &sets {
        if *n < SETS_PER_TASK {
            notices.push(format!("task {task} has {n} of {SETS_PER_TASK} example sets"));
        }
    }
    let present: Vec<&Task> = tasks.iter().filter(|t| success.contains_key(&t.id)).collect();
    let mut rows = Vec::new();

    match nl_records {
        None => notices.push("difficulty omitted: no natural-language run given".into()),
        Some(nl) => {
            let (nl_kept, _) = usable(nl);
            // One correct generation out of the attempts of any execution.
            let nl_success = task_success(&nl_kept, false);
            let labelled = |want: bool| -> Vec<&str> {
                present
                    .iter()
                    .filter(|t| nl_success.get(&t.id) == Some(&want))
                    .map(|t| t.id.as_str())
                    .collect()
            };
            rows.push(row("difficulty", "nl_succeed", &labelled(true), &success));
            rows.push(row("difficulty", "nl_fail", &labelled(false), &success));
            let unlabelled = present.iter().filter(|t| !nl_success.contains_key(&t.id)).count();
            if unlabelled > 0 {
                notices.push(format!("difficulty: {unlabelled} task(s) have no natural-language record"));
            }
        }
    }

    for label in KindLabel::ALL {
        let members: Vec<&str> =
            present.iter().filter(|t| t.io_type_categories().contains(&label)).map(|t| t.id.as_str()).collect();
        rows.push(row("io_type", label.as_str(), &members, &success));
    }

    let mut labels: BTreeSet<&str> = KNOWLEDGE_LABELS.into_iter().collect();
    labels.extend(present.iter().flat_map(|t| t.knowledge_tags.iter().map(String::as_str)));
    for label in labels {
        let members: Vec<&str> =
            present.iter().filter(|t| t.knowledge_tags.contains(label)).map(|t| t.id.as_str()).collect();
        rows.push(row("knowledge", label, &members, &success));
    }
    (rows, notices)
}

/// Write `report.json`, `pass_at_k.csv`, `cumulative_by_round.csv` and
/// `categories.csv` into `dir`.
pub fn emit(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>, MetricsError> {
    std::fs::create_dir_all(dir).map_err(|source| MetricsError::Io { path: dir.into(), source })?;
    let mut written = Vec::new();

    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    std::fs::write(&path, json).map_err(|source| MetricsError::Io { path: path.clone(), source })?;
    written.push(path);

    let noe = report.metadata.noe.to_string();
    let pass_rows = report.pass_at_k.iter().map(|r| {
        vec![
            noe.clone(),
            r.stage.as_str().to_string(),
            r.k.to_string(),
            format_probability(r.average),
            format_probability(r.zero_pass_proportion),
        ]
    });
    written.push(write_csv(dir, "pass_at_k.csv", &["noe", "stage", "k", "pass_at_k", "zero_pass_proportion"], pass_rows)?);

    let round_rows = report
        .cumulative_by_round
        .iter()
        .map(|r| vec![noe.clone(), r.round.to_string(), r.successful_executions.to_string()]);
    written.push(write_csv(dir, "cumulative_by_round.csv", &["noe", "round", "successful_executions"], round_rows)?);

    let category_rows = report.categories.iter().map(|r| {
        vec![
            r.dimension.clone(),
            r.category.clone(),
            r.tasks.to_string(),
            r.implemented.to_string(),
            format_probability(r.proportion),
        ]
    });
    written.push(write_csv(dir, "categories.csv", &["dimension", "category", "tasks", "implemented", "proportion"], category_rows)?);
    Ok(written)
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<PathBuf, MetricsError> {
    let path = dir.join(name);
    let csv_err = |source| MetricsError::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| MetricsError::Io { path: path.clone(), source })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{AttemptOutcome, AttemptTranscript, FailReason, RoundRecord};
    use crate::example_engine::ExamplePoolSet;
    use crate::synth::{BatchMode, Conversation};
    use proptest::prelude::*;

    /// Count size-k subsets of n attempts (the first c successful) that
    /// contain a success.
    fn brute_force(n: usize, c: usize, k: usize) -> BigRational {
        let mut hit = 0u64;
        let mut total = 0u64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == k {
                total += 1;
                if mask & ((1u32 << c) - 1) != 0 {
                    hit += 1;
                }
            }
        }
        BigRational::new(hit.into(), total.into())
    }

    #[test]
    fn pass_at_k_examples() {
        assert_eq!(pass_at_k(10, 10, 1).unwrap(), 1.0);
        assert_eq!(pass_at_k(10, 0, 5).unwrap(), 0.0);
        assert_eq!(pass_at_k_exact(10, 3, 5).unwrap(), BigRational::new(231.into(), 252.into()));
        assert_eq!(format_probability(pass_at_k(10, 3, 5).unwrap()), "0.916667");
        assert!(pass_at_k(10, 11, 1).is_err());
        assert!(pass_at_k(10, 1, 0).is_err());
        assert!(pass_at_k(10, 1, 11).is_err());
    }

    #[test]
    fn pass_at_k_matches_subset_enumeration() {
        for n in 1..=12 {
            for c in 0..=n {
                for k in 1..=n {
                    assert_eq!(pass_at_k_exact(n, c, k).unwrap(), brute_force(n, c, k), "n={n} c={c} k={k}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pass_at_k_is_monotone(n in 1usize..40, c in 0usize..40, k in 1usize..40) {
            prop_assume!(c <= n && k <= n);
            let p = pass_at_k_exact(n, c, k).unwrap();
            prop_assert!(p >= BigRational::zero() && p <= BigRational::one());
            if c < n {
                prop_assert!(pass_at_k_exact(n, c + 1, k).unwrap() >= p);
            }
            if k < n {
                prop_assert!(pass_at_k_exact(n, c, k + 1).unwrap() >= p);
            }
        }
    }

    fn attempt(index: usize, outcome: AttemptOutcome, conform: bool, flagged: bool) -> AttemptTranscript {
        let mut round = RoundRecord {
            round: 1,
            shown: vec![],
            answer: None,
            generation_failure: None,
            candidate: None,
            conformance: None,
            search: None,
            input_matching: flagged,
        };
        round.conformance = Some(if conform {
            Verdict::ConformPass { checked: 3 }
        } else {
            Verdict::ConformFail { first_mismatch: serde_json::from_str(r#"{"example":{"inputs":[1],"expected":1,"origin":"initial","round_added":1},"actual":{"status":"ok","value":2}}"#).unwrap() }
        });
        AttemptTranscript { attempt_index: index, conversation: Conversation::new(), rounds: vec![round], outcome }
    }

    pub(crate) fn record(task: &str, set: usize, successes: &[Option<u32>], flagged: usize) -> ExecutionRecord {
        let attempts = (0..10)
            .map(|i| {
                let outcome = match successes.get(i).copied().flatten() {
                    Some(round) => AttemptOutcome::Success { round },
                    None => AttemptOutcome::Fail { reason: FailReason::RoundsExhausted, round: 6, detail: String::new() },
                };
                attempt(i, outcome, i < successes.len(), i < flagged)
            })
            .collect::<Vec<_>>();
        ExecutionRecord {
            task_id: task.into(),
            set_index: set,
            config: RunConfig::default(),
            synthesizer: SynthDescriptor { backend: "scripted".into(), batch_mode: BatchMode::Local, detail: String::new() },
            pool: ExamplePoolSet { task_id: task.into(), set_index: set, seed: 0, examples: vec![], warnings: vec![] },
            search_seed: 0,
            first_round_pass_count: successes.len(),
            final_success_count: successes.iter().filter(|s| s.is_some()).count(),
            attempts,
            harness_defect: None,
        }
    }

    fn final_pass(report: &MetricsReport, k: usize) -> &PassAtKRow {
        report.pass_at_k.iter().find(|r| r.stage == Stage::Final && r.k == k).unwrap()
    }

    #[test]
    fn two_executions_average_and_zero_pass() {
        let records = [record("a", 0, &[Some(1); 10], 0), record("b", 0, &[], 0)];
        let report = aggregate(&records, false).unwrap();
        assert_eq!(final_pass(&report, 1).average, 0.5);
        assert_eq!(final_pass(&report, 1).zero_pass_proportion, 0.5);
        assert_eq!(report.cumulative_by_round.len(), 6);
        assert!(report.cumulative_by_round.iter().all(|r| r.successful_executions == 1));
    }

    #[test]
    fn cumulative_curve_uses_earliest_success() {
        let records = [
            record("a", 0, &[None, Some(3), Some(4)], 0),
            record("a", 1, &[Some(2)], 0),
            record("b", 0, &[None], 0),
        ];
        let report = aggregate(&records, false).unwrap();
        let curve: Vec<usize> = report.cumulative_by_round.iter().map(|r| r.successful_executions).collect();
        assert_eq!(curve, [0, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn filtering_counts_flagged_attempts_as_failures() {
        let records = [record("a", 0, &[Some(1), Some(1), Some(1)], 2)];
        let plain = aggregate(&records, false).unwrap();
        let filtered = aggregate(&records, true).unwrap();
        assert_eq!(final_pass(&plain, 1).average, 0.3);
        assert_eq!(final_pass(&filtered, 1).average, 0.1);
        assert!(filtered.metadata.input_matching_filtered);
    }

    #[test]
    fn fuzz_only_successes_are_named() {
        use crate::checker::BudgetSpent;
        use crate::constraint::DomainSize;
        let spent = |mode| BudgetSpent { pool_checked: 7, mode, inputs_checked: 100, domain_size: DomainSize::Unbounded };
        let mut fuzzed = record("wide", 0, &[Some(1)], 0);
        fuzzed.attempts[0].rounds[0].search = Some(Verdict::EquivalentWithinBudget { budget_spent: spent(SearchMode::Fuzz) });
        let mut exhaustive = record("narrow", 0, &[Some(1)], 0);
        exhaustive.attempts[0].rounds[0].search =
            Some(Verdict::EquivalentWithinBudget { budget_spent: spent(SearchMode::Exhaustive) });
        let report = aggregate(&[exhaustive.clone(), fuzzed], false).unwrap();
        let notes: Vec<_> = report.notices.iter().filter(|n| n.contains("random sampling")).collect();
        assert_eq!(notes.len(), 1);
        assert!(notes[0].ends_with(": wide"), "{}", notes[0]);
        assert!(!aggregate(&[exhaustive], false).unwrap().notices.iter().any(|n| n.contains("random sampling")));
    }

    #[test]
    fn mixed_configs_are_rejected() {
        let mut b = record("b", 0, &[], 0);
        b.config.noe = 5;
        assert!(matches!(aggregate(&[record("a", 0, &[], 0), b], false), Err(MetricsError::MixedConfigs(_))));
        assert!(matches!(aggregate(&[], false), Err(MetricsError::Empty)));
    }

    #[test]
    fn emit_is_deterministic() {
        let records = [record("a", 0, &[Some(1)], 0)];
        let report = aggregate(&records, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit(&report, dir.path()).unwrap();
        let first: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        emit(&report, dir.path()).unwrap();
        let second: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        assert_eq!(first, second);
        let csv = String::from_utf8(first[1].clone()).unwrap();
        assert!(csv.starts_with("noe,stage,k,pass_at_k,zero_pass_proportion\n3,first_round,1,0.100000,0.000000\n"));
    }

    fn task(id: &str, tags: &[&str], params: Vec<crate::value::ValueType>) -> Task {
        use crate::constraint::ConstraintSpec;
        use crate::task::{Reference, Signature};
        Task {
            id: id.into(),
            signature: Signature::new("Puzzle", params, crate::value::ValueType::Bool),
            constraints: ConstraintSpec(vec![]),
            reference: Reference::Minilang { source: String::new() },
            alternate_references: vec![],
            nl_description: None,
            knowledge_tags: tags.iter().map(|t| t.to_string()).collect(),
            source: "test".into(),
            base_dir: None,
        }
    }

    #[test]
    fn categories() {
        use crate::value::ValueType;
        let tasks = [
            task("a", &["math", "string-manipulation"], vec![ValueType::String]),
            task("b", &["math"], vec![ValueType::Int]),
        ];
        let mut records: Vec<ExecutionRecord> = (0..5).map(|s| record("a", s, &[], 0)).collect();
        records[3] = record("a", 3, &[Some(2)], 0);
        records.extend((0..5).map(|s| record("b", s, &[None], 0)));
        let mut one_of_ten = vec![None; 10];
        one_of_ten[7] = Some(1);
        let nl = [record("a", 0, &[None; 10], 0), record("b", 0, &one_of_ten, 0)];

        let (rows, notices) = categorize(&records, &tasks, Some(&nl), false);
        assert!(notices.is_empty(), "{notices:?}");
        let get = |d: &str, c: &str| rows.iter().find(|r| r.dimension == d && r.category == c).unwrap().clone();
        assert_eq!((get("knowledge", "math").tasks, get("knowledge", "math").implemented), (2, 1));
        assert_eq!((get("knowledge", "string-manipulation").tasks, get("knowledge", "string-manipulation").implemented), (1, 1));
        assert_eq!(get("knowledge", "array-manipulation").tasks, 0);
        assert_eq!((get("io_type", "bool").tasks, get("io_type", "string").implemented), (2, 1));
        assert_eq!(get("io_type", "double").tasks, 0);
        assert_eq!((get("difficulty", "nl_succeed").tasks, get("difficulty", "nl_fail").tasks), (1, 1));
        assert_eq!(get("difficulty", "nl_fail").implemented, 1);

        let (rows, notices) = categorize(&records, &tasks, None, false);
        assert!(rows.iter().all(|r| r.dimension != "difficulty"));
        assert_eq!(notices.len(), 1);
    }
}
