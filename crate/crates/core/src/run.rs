//! Whole-corpus runs: pool sampling, parallel executions with resume,
//! ledger finalization, reporting and replay.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::controller::{evaluate_execution, replay_execution, Divergence, ExecutionRecord, RunConfig, HARNESS_VERSION};
use crate::example_engine::{sample_pools, ExamplePoolSet, PoolError};
use crate::ledger::{
    corpus_digest, finalize_ledger, read_ledger, sha256_hex, LedgerError, LedgerIssue, LedgerWriter, RunDir, RunManifest,
    FILTERED_REPORT_DIR,
};
use crate::metrics::{aggregate, categorize, emit, MetricsError, MetricsReport};
use crate::runner::{LanguageProfile, ProfileError};
use crate::synth::{PromptMode, Synthesizer};
use crate::task::{load_corpus, Task, TaskError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::controller::ConfigError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("natural-language mode needs descriptions, missing for: {}", .0.join(", "))]
    MissingDescriptions(Vec<String>),
    #[error("cannot resume {dir}: {reason}")]
    Incompatible { dir: PathBuf, reason: String },
    #[error("pinned pools: {0}")]
    Pools(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("ledger {path} has no usable records")]
    EmptyLedger { path: PathBuf },
    #[error("unknown task id `{0}`")]
    UnknownTask(String),
    #[error("no recorded execution for task {task} set {set_index}")]
    UnknownExecution { task: String, set_index: usize },
}

/// Pool sets for every task, in canonical order.
pub fn sample_corpus_pools(tasks: &[Task], config: &RunConfig) -> Result<Vec<ExamplePoolSet>, (String, PoolError)> {
    let per_task: Vec<_> = tasks
        .par_iter()
        .map(|t| sample_pools(t, config.master_seed, &config.limits).map_err(|e| (t.id.clone(), e)))
        .collect();
    let mut all = Vec::new();
    for r in per_task {
        all.extend(r?);
    }
    Ok(all)
}

pub fn load_pools(path: &Path) -> Result<Vec<ExamplePoolSet>, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|e| RunError::Pools(format!("{}: {e}", path.display())))
}

pub fn pools_to_string(pools: &[ExamplePoolSet]) -> String {
    serde_json::to_string_pretty(pools).expect("pools serialize") + "\n"
}

pub struct RunRequest<'a> {
    pub corpus_dir: PathBuf,
    pub config: RunConfig,
    pub synthesizer: &'a dyn Synthesizer,
    /// Parent of the run directory.
    pub out_root: PathBuf,
    /// Reuse (and resume) this run id instead of minting a new one.
    pub run_id: Option<String>,
    pub workers: usize,
    pub pinned_pools: Option<PathBuf>,
    pub filter_input_matching: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub executed: usize,
    pub skipped: usize,
    /// Executions that could not start, with the reason.
    pub failures: Vec<String>,
    pub ledger_issues: Vec<LedgerIssue>,
    pub report: MetricsReport,
}

/// Run every (task, set) not already in the run's ledger, then finalize the
/// ledger and write the report.
pub fn execute_run(request: &RunRequest<'_>) -> Result<RunSummary, RunError> {
    let config = &request.config;
    config.validate()?;
    let profile = LanguageProfile::resolve(&config.profile_id)?;
    let tasks = load_corpus(&request.corpus_dir)?;
    if config.mode == PromptMode::NaturalLanguage {
        let missing: Vec<String> = tasks.iter().filter(|t| t.nl_description.is_none()).map(|t| t.id.clone()).collect();
        if !missing.is_empty() {
            return Err(RunError::MissingDescriptions(missing));
        }
    }

    let digest = corpus_digest(&request.corpus_dir)?;
    let (pools, pools_digest) = match &request.pinned_pools {
        Some(path) => {
            let pools = load_pools(path)?;
            let d = sha256_hex(pools_to_string(&pools).as_bytes());
            (pools, Some(d))
        }
        None => {
            let pools = sample_corpus_pools(&tasks, config)
                .map_err(|(task, e)| RunError::Pools(format!("task {task}: {e}")))?;
            (pools, None)
        }
    };

    let now = chrono::Utc::now();
    let synth = request.synthesizer.descriptor();
    let run_id = request.run_id.clone().unwrap_or_else(|| RunManifest::make_run_id(now, config, &digest, &synth));
    let run_dir = RunDir::new(request.out_root.join(&run_id));
    let manifest = RunManifest {
        run_id,
        created_at: now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        harness_version: HARNESS_VERSION.into(),
        config: config.clone(),
        synthesizer: synth,
        corpus_dir: request.corpus_dir.clone(),
        corpus_digest: digest,
        pools_digest,
        tasks: tasks.iter().map(|t| t.id.clone()).collect(),
        pools_shared_across_noe: true,
    };
    if run_dir.manifest_path().exists() {
        let existing = run_dir.read_manifest()?;
        existing
            .compatible(&manifest)
            .map_err(|reason| RunError::Incompatible { dir: run_dir.path.clone(), reason })?;
    } else {
        run_dir.write_manifest(&manifest)?;
    }

    let done: HashSet<(String, usize)> = read_ledger(&run_dir.ledger_path())?.records.iter().map(|r| r.key()).collect();
    let by_id: BTreeMap<&str, &Task> = tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let pending: Vec<&ExamplePoolSet> = pools.iter().filter(|p| !done.contains(&(p.task_id.clone(), p.set_index))).collect();
    let skipped = pools.len() - pending.len();
    let writer = LedgerWriter::open(&run_dir.ledger_path())?;
    let workers = request.workers.max(1).min(request.synthesizer.capacity().max(1));
    let thread_pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("worker pool");

    let results: Vec<Result<(), String>> = thread_pool.install(|| {
        pending
            .par_iter()
            .map(|pool| {
                let task = by_id
                    .get(pool.task_id.as_str())
                    .ok_or_else(|| format!("pool for unknown task {}", pool.task_id))?;
                let record = evaluate_execution(task, pool, request.synthesizer, config, &profile)
                    .map_err(|e| format!("task {} set {}: {e}", pool.task_id, pool.set_index))?;
                log::info!(
                    "task {} set {}: c1={} c2={}",
                    record.task_id,
                    record.set_index,
                    record.first_round_pass_count,
                    record.final_success_count
                );
                writer.append(&record).map_err(|e| e.to_string())
            })
            .collect()
    });
    drop(writer);
    let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    let executed = pending.len() - failures.len();

    let contents = finalize_ledger(&run_dir.ledger_path())?;
    let report = write_report(&run_dir, &contents.records, &tasks, None, request.filter_input_matching, Some(&request.corpus_dir))?;
    Ok(RunSummary { run_dir: run_dir.path, executed, skipped, failures, ledger_issues: contents.issues, report })
}

/// Aggregate and categorize `records`, then emit `report/` (and the
/// input-matching-filtered variant under `report/filtered_input_matching/`).
pub fn write_report(
    run_dir: &RunDir,
    records: &[ExecutionRecord],
    tasks: &[Task],
    nl_records: Option<&[ExecutionRecord]>,
    filter_input_matching: bool,
    corpus_dir: Option<&Path>,
) -> Result<MetricsReport, RunError> {
    let digest = corpus_dir.map(corpus_digest).transpose()?;
    let build = |filtered: bool| -> Result<MetricsReport, RunError> {
        let mut report = aggregate(records, filtered)?;
        let (rows, notices) = categorize(records, tasks, nl_records, filtered);
        report.categories = rows;
        report.notices.extend(notices);
        report.metadata.corpus_digest = digest.clone();
        Ok(report)
    };
    let report = build(false)?;
    emit(&report, &run_dir.report_dir())?;
    if filter_input_matching {
        emit(&build(true)?, &run_dir.report_dir().join(FILTERED_REPORT_DIR))?;
    }
    Ok(report)
}

#[derive(Debug)]
pub struct ReportOutcome {
    pub report: MetricsReport,
    pub issues: Vec<LedgerIssue>,
}

/// Recompute the report from the ledger (and corpus) alone.
pub fn report_run(
    run_dir: &Path,
    corpus_override: Option<&Path>,
    nl_run: Option<&Path>,
    filter_input_matching: bool,
) -> Result<ReportOutcome, RunError> {
    let run = RunDir::new(run_dir);
    let manifest = run.read_manifest()?;
    let corpus_dir = corpus_override.map(Path::to_path_buf).unwrap_or(manifest.corpus_dir);
    let tasks = load_corpus(&corpus_dir)?;
    let contents = read_ledger(&run.ledger_path())?;
    if contents.records.is_empty() {
        return Err(RunError::EmptyLedger { path: run.ledger_path() });
    }
    let mut issues = contents.issues;
    let nl_records = match nl_run {
        Some(dir) => {
            let nl = read_ledger(&RunDir::new(dir).ledger_path())?;
            issues.extend(nl.issues);
            Some(nl.records)
        }
        None => None,
    };
    let report = write_report(&run, &contents.records, &tasks, nl_records.as_deref(), filter_input_matching, Some(&corpus_dir))?;
    Ok(ReportOutcome { report, issues })
}

#[derive(Debug, Default)]
pub struct ReplayOutcome {
    pub executions: usize,
    pub divergences: Vec<Divergence>,
    pub issues: Vec<LedgerIssue>,
}

impl ReplayOutcome {
    pub fn is_clean(&self) -> bool {
        self.divergences.is_empty() && self.issues.is_empty()
    }
}

/// Re-derive recorded verdicts, optionally for one execution or attempt.
pub fn replay_run(
    run_dir: &Path,
    corpus_override: Option<&Path>,
    task_id: Option<&str>,
    set_index: Option<usize>,
    attempt: Option<usize>,
) -> Result<ReplayOutcome, RunError> {
    let run = RunDir::new(run_dir);
    let manifest = run.read_manifest()?;
    let corpus_dir = corpus_override.map(Path::to_path_buf).unwrap_or(manifest.corpus_dir);
    let tasks = load_corpus(&corpus_dir)?;
    let by_id: BTreeMap<&str, &Task> = tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    if let Some(id) = task_id {
        if !by_id.contains_key(id) {
            return Err(RunError::UnknownTask(id.into()));
        }
    }
    let contents = read_ledger(&run.ledger_path())?;
    let selected: Vec<&ExecutionRecord> = contents
        .records
        .iter()
        .filter(|r| task_id.is_none_or(|t| t == r.task_id) && set_index.is_none_or(|s| s == r.set_index))
        .collect();
    if let (Some(task), Some(set_index), true) = (task_id, set_index, selected.is_empty()) {
        return Err(RunError::UnknownExecution { task: task.into(), set_index });
    }
    let profile = LanguageProfile::resolve(&manifest.config.profile_id)?;
    let mut outcome = ReplayOutcome { issues: contents.issues.clone(), ..ReplayOutcome::default() };
    for record in selected {
        let task = by_id.get(record.task_id.as_str()).ok_or_else(|| RunError::UnknownTask(record.task_id.clone()))?;
        outcome.executions += 1;
        if let Err(d) = replay_execution(record, task, &profile, attempt) {
            outcome.divergences.push(d);
        }
    }
    Ok(outcome)
}
