use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use itercode::config::FileConfig;
use itercode::metrics::{format_probability, MetricsReport};
use itercode::run::{execute_run, pools_to_string, replay_run, report_run, sample_corpus_pools, RunRequest};
use itercode::task::{load_corpus, validate_corpus};

use crate::{Command, Settings};

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { corpus, probes } => validate(&corpus, probes),
        Command::Sample { settings, out } => sample(&settings, out.as_deref()),
        Command::Run { settings, out, run_id, pools, filter_input_matching } => {
            run(&settings, out, run_id, pools, filter_input_matching)
        }
        Command::Report { run_dir, corpus, nl_run, filter_input_matching, strict } => {
            let outcome = report_run(&run_dir, corpus.as_deref(), nl_run.as_deref(), filter_input_matching)?;
            for issue in &outcome.issues {
                log::warn!("{issue}");
            }
            print_report(&outcome.report);
            println!("report written to {}", run_dir.join("report").display());
            if strict && !outcome.issues.is_empty() {
                eprintln!("{} corrupt ledger line(s)", outcome.issues.len());
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { run_dir, corpus, task_id, set_index, attempt } => {
            let outcome = replay_run(&run_dir, corpus.as_deref(), task_id.as_deref(), set_index, attempt)?;
            for issue in &outcome.issues {
                println!("corrupt: {issue}");
            }
            if let Some(first) = outcome.divergences.first() {
                println!("divergence: {first}");
            }
            println!(
                "replayed {} execution(s): {} divergence(s), {} corrupt line(s)",
                outcome.executions,
                outcome.divergences.len(),
                outcome.issues.len()
            );
            Ok(if outcome.is_clean() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn validate(corpus: &std::path::Path, probes: usize) -> Result<ExitCode> {
    if probes == 0 {
        bail!("--probes must be at least 1");
    }
    let reports = match validate_corpus(corpus, probes, &Default::default()) {
        Ok(r) => r,
        Err(itercode::task::TaskError::EmptyCorpus(_)) => {
            println!("no tasks found in {}", corpus.display());
            return Ok(ExitCode::FAILURE);
        }
        Err(e) => return Err(e.into()),
    };
    let mut bad = 0;
    for report in &reports {
        if report.is_ok() {
            println!("ok    {} ({} probes)", report.task_id, report.probes);
            continue;
        }
        bad += 1;
        println!("FAIL  {}", report.task_id);
        for v in &report.violations {
            let kind = serde_json::to_value(v.kind)?;
            let at = v.inputs.as_ref().map(|i| format!(" on {}", serde_json::to_string(i).unwrap_or_default())).unwrap_or_default();
            println!("      {}{at}: {}", kind.as_str().unwrap_or("violation"), v.detail);
        }
    }
    println!("{} task(s), {} with violations", reports.len(), bad);
    Ok(if bad == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

/// Config file (or defaults) with command-line overrides applied.
fn resolve(settings: &Settings) -> Result<FileConfig> {
    let mut config = match &settings.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(seed) = settings.seed {
        config.seed = seed;
    }
    if let Some(noe) = settings.noe {
        config.noe = noe;
    }
    if let Some(mode) = &settings.mode {
        config.mode = mode.parse().map_err(anyhow::Error::msg)?;
    }
    if let Some(s) = &settings.synthesizer {
        config.synthesizer = s.parse().map_err(anyhow::Error::msg)?;
    }
    if let Some(f) = &settings.fixture {
        config.fixture = Some(f.clone());
    }
    if let Some(p) = &settings.profile {
        config.profile = p.clone();
    }
    if let Some(w) = settings.workers {
        config.workers = Some(w);
    }
    config.keep_artifacts |= settings.keep_artifacts;
    config.run_config().validate()?;
    Ok(config)
}

fn sample(settings: &Settings, out: Option<&std::path::Path>) -> Result<ExitCode> {
    let config = resolve(settings)?;
    let tasks = load_corpus(&settings.corpus)?;
    let pools = sample_corpus_pools(&tasks, &config.run_config())
        .map_err(|(task, e)| anyhow::anyhow!("task {task}: {e}"))?;
    for p in &pools {
        for w in &p.warnings {
            log::warn!("task {} set {}: {w}", p.task_id, p.set_index);
        }
    }
    let text = pools_to_string(&pools);
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("{} pool set(s) written to {}", pools.len(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run(
    settings: &Settings,
    out_root: std::path::PathBuf,
    run_id: Option<String>,
    pools: Option<std::path::PathBuf>,
    filter_input_matching: bool,
) -> Result<ExitCode> {
    let config = resolve(settings)?;
    let synthesizer = config.build_synthesizer()?;
    let workers = config.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let request = RunRequest {
        corpus_dir: settings.corpus.clone(),
        config: config.run_config(),
        synthesizer: synthesizer.as_ref(),
        out_root,
        run_id,
        workers,
        pinned_pools: pools,
        filter_input_matching,
    };
    let summary = execute_run(&request)?;
    for issue in &summary.ledger_issues {
        log::warn!("{issue}");
    }
    for failure in &summary.failures {
        eprintln!("execution failed: {failure}");
    }
    print_report(&summary.report);
    println!(
        "run directory: {} ({} executed, {} resumed from the ledger)",
        summary.run_dir.display(),
        summary.executed,
        summary.skipped
    );
    Ok(if summary.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn print_report(report: &MetricsReport) {
    let m = &report.metadata;
    println!(
        "{} executions over {} tasks (noe={}, mode={}, synthesizer={})",
        m.executions, m.tasks, m.noe, m.mode, m.synthesizer.backend
    );
    println!("{:<12} {:>4} {:>10} {:>10}", "stage", "k", "pass@k", "zero-pass");
    for row in &report.pass_at_k {
        println!(
            "{:<12} {:>4} {:>10} {:>10}",
            row.stage.as_str(),
            row.k,
            format_probability(row.average),
            format_probability(row.zero_pass_proportion)
        );
    }
    let curve: Vec<String> = report.cumulative_by_round.iter().map(|r| r.successful_executions.to_string()).collect();
    println!("successful executions by round: {}", curve.join(" "));
    for notice in &report.notices {
        println!("note: {notice}");
    }
}
