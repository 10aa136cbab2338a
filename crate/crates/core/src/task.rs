//! Benchmark tasks: signature, constraints, reference program, metadata.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraint::{ConstraintError, ConstraintSpec};
use crate::minilang::RunLimits;
use crate::rng::StableRng;
use crate::runner::{self, CompileOptions, Handle, LanguageProfile, RunOutcome};
use crate::value::{KindLabel, Value, ValueType, MAX_ARRAY_DEPTH};

pub const DEFAULT_FUNCTION_NAME: &str = "Puzzle";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signature {
    pub name: String,
    pub params: Vec<ValueType>,
    pub returns: ValueType,
}

impl Signature {
    pub fn new(name: &str, params: Vec<ValueType>, returns: ValueType) -> Self {
        Signature { name: name.to_string(), params, returns }
    }

    /// All kinds appearing anywhere in the parameter or return types.
    pub fn io_type_categories(&self) -> BTreeSet<KindLabel> {
        fn walk(ty: &ValueType, out: &mut BTreeSet<KindLabel>) {
            out.insert(ty.label());
            if let ValueType::Array(inner) = ty {
                walk(inner, out);
            }
        }
        let mut out = BTreeSet::new();
        for ty in self.params.iter().chain(std::iter::once(&self.returns)) {
            walk(ty, &mut out);
        }
        out
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(ToString::to_string).collect();
        write!(f, "{}({}) -> {}", self.name, params.join(", "), self.returns)
    }
}

/// How to obtain the ground-truth implementation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Reference {
    Minilang {
        source: String,
    },
    /// Either `source` compiled under `profile`, or a prebuilt `command`
    /// speaking the call protocol (run from the task file's directory).
    External {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        command: Option<Vec<String>>,
    },
}

impl Reference {
    pub fn describe(&self) -> String {
        match self {
            Reference::Minilang { .. } => "minilang".into(),
            Reference::External { profile: Some(p), .. } => format!("external:{p}"),
            Reference::External { .. } => "external:command".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub signature: Signature,
    pub constraints: ConstraintSpec,
    pub reference: Reference,
    /// Further implementations expected to agree with `reference`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternate_references: Vec<Reference>,
    pub nl_description: Option<String>,
    pub knowledge_tags: BTreeSet<String>,
    pub source: String,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid task file {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("duplicate task id `{0}`")]
    DuplicateId(String),
    #[error("no task files (*.json) in {0}")]
    EmptyCorpus(PathBuf),
}

impl Task {
    pub fn from_json(text: &str) -> Result<Task, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Canonical file form: pretty JSON in field order plus a trailing newline.
    pub fn to_file_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("task serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Task, TaskError> {
        let text = std::fs::read_to_string(path).map_err(|source| TaskError::Io { path: path.into(), source })?;
        let mut task = Task::from_json(&text).map_err(|source| TaskError::Parse { path: path.into(), source })?;
        task.base_dir = path.parent().map(Path::to_path_buf);
        Ok(task)
    }

    pub fn io_type_categories(&self) -> BTreeSet<KindLabel> {
        self.signature.io_type_categories()
    }

    /// Compile a reference (the primary one unless another is given).
    pub fn open_reference(&self, reference: &Reference, options: CompileOptions) -> Result<Handle, RunOutcome> {
        match reference {
            Reference::Minilang { source } => {
                runner::compile(source, &LanguageProfile::minilang(), &self.signature, options)
            }
            Reference::External { command: Some(command), .. } => {
                let cwd = self.base_dir.clone().unwrap_or_else(|| PathBuf::from("."));
                Ok(Handle::external_command(command.clone(), cwd, &self.signature))
            }
            Reference::External { profile, source: Some(source), .. } => {
                let profile = LanguageProfile::resolve(profile.as_deref().unwrap_or("python"))
                    .map_err(|e| RunOutcome::ProtocolError(e.to_string()))?;
                runner::compile(source, &profile, &self.signature, options)
            }
            Reference::External { .. } => {
                Err(RunOutcome::ProtocolError("external reference needs `source` or `command`".into()))
            }
        }
    }
}

/// Load every `*.json` task under `dir`, sorted by id.
pub fn load_corpus(dir: &Path) -> Result<Vec<Task>, TaskError> {
    let entries = std::fs::read_dir(dir).map_err(|source| TaskError::Io { path: dir.into(), source })?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|source| TaskError::Io { path: dir.into(), source })?.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(TaskError::EmptyCorpus(dir.into()));
    }
    let mut tasks = paths.iter().map(|p| Task::load(p)).collect::<Result<Vec<_>, _>>()?;
    tasks.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = tasks.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(TaskError::DuplicateId(w[0].id.clone()));
    }
    Ok(tasks)
}

/// Validate every `*.json` file under `dir`. Files that cannot be read or
/// parsed, and duplicate ids, are reported as malformed rather than aborting.
pub fn validate_corpus(dir: &Path, probe_budget: usize, limits: &RunLimits) -> Result<Vec<ValidationReport>, TaskError> {
    let entries = std::fs::read_dir(dir).map_err(|source| TaskError::Io { path: dir.into(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    if paths.is_empty() {
        return Err(TaskError::EmptyCorpus(dir.into()));
    }
    paths.sort();
    let malformed = |task_id: String, detail: String| ValidationReport {
        task_id,
        probes: 0,
        violations: vec![Violation { kind: ViolationKind::MalformedTask, probe: None, inputs: None, detail }],
    };
    let mut seen = std::collections::HashSet::new();
    let mut reports = Vec::new();
    for path in paths {
        let name = path.file_name().expect("file has a name").to_string_lossy().into_owned();
        match Task::load(&path) {
            Err(e) => reports.push(malformed(name, e.to_string())),
            Ok(task) if !seen.insert(task.id.clone()) => {
                reports.push(malformed(task.id.clone(), format!("{name}: duplicate task id")))
            }
            Ok(task) => reports.push(validate_task(&task, probe_budget, limits)),
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    MalformedTask,
    BrokenReference,
    NonTermination,
    TypeMismatch,
    ConstraintViolation,
    RuntimeError,
    /// An alternate reference returned something else than the primary one.
    ReferenceDisagreement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<Value>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub task_id: String,
    pub probes: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn structural_problems(task: &Task) -> Vec<String> {
    let mut problems = Vec::new();
    let sig = &task.signature;
    if sig.params.is_empty() {
        problems.push("signature has no parameters".to_string());
    }
    if sig.params.iter().chain(std::iter::once(&sig.returns)).any(|t| t.array_depth() > MAX_ARRAY_DEPTH) {
        problems.push(format!("array nesting deeper than {MAX_ARRAY_DEPTH}"));
    }
    if task.knowledge_tags.is_empty() {
        problems.push("knowledge_tags is empty".to_string());
    }
    if let Err(e) = task.constraints.check_against(&sig.params) {
        problems.push(match e {
            ConstraintError::Arity { .. } | ConstraintError::TypeMismatch { .. } => format!("constraints: {e}"),
            other => other.to_string(),
        });
    }
    problems
}

/// Probe the primary reference on `probe_budget` sampled inputs.
pub fn validate_task(task: &Task, probe_budget: usize, limits: &RunLimits) -> ValidationReport {
    assert!(probe_budget >= 1, "probe_budget must be at least 1");
    let mut violations: Vec<Violation> = structural_problems(task)
        .into_iter()
        .map(|detail| Violation { kind: ViolationKind::MalformedTask, probe: None, inputs: None, detail })
        .collect();
    if !violations.is_empty() {
        return ValidationReport { task_id: task.id.clone(), probes: 0, violations };
    }
    let references = std::iter::once(&task.reference).chain(&task.alternate_references);
    let mut handles = Vec::new();
    for reference in references {
        // Minilang references skip the compile-time signature check so a wrong
        // return kind surfaces as a type mismatch on the probes.
        let opened = match reference {
            Reference::Minilang { source } => crate::minilang::compile(source)
                .map(|p| Handle::Minilang(std::sync::Arc::new(p)))
                .map_err(|e| RunOutcome::CompileError(e.to_string())),
            other => task.open_reference(other, CompileOptions::default()),
        };
        match opened {
            Ok(h) => handles.push(h),
            Err(outcome) => violations.push(Violation {
                kind: ViolationKind::BrokenReference,
                probe: None,
                inputs: None,
                detail: format!("{}: {}", reference.describe(), outcome.detail()),
            }),
        }
    }
    if !violations.is_empty() {
        return ValidationReport { task_id: task.id.clone(), probes: 0, violations };
    }
    let mut rng = StableRng::for_stream(0, &[&task.id, "validate"]);
    for probe in 0..probe_budget {
        let inputs = task.constraints.sample(&mut rng);
        if !task.constraints.contains(&inputs) {
            violations.push(Violation {
                kind: ViolationKind::ConstraintViolation,
                probe: Some(probe),
                detail: "sampler produced an input outside the constraints".into(),
                inputs: Some(inputs),
            });
            continue;
        }
        let mut primary: Option<Value> = None;
        for (i, handle) in handles.iter_mut().enumerate() {
            let outcome = handle.run(&inputs, limits);
            if let RunOutcome::Ok(v) = &outcome {
                match &primary {
                    None if i == 0 => primary = Some(v.clone()),
                    Some(p) if !crate::checker::values_equal(p, v) => violations.push(Violation {
                        kind: ViolationKind::ReferenceDisagreement,
                        probe: Some(probe),
                        inputs: Some(inputs.clone()),
                        detail: format!("alternate reference {i} returned {v}, the primary returned {p}"),
                    }),
                    _ => {}
                }
            }
            let problem = match &outcome {
                RunOutcome::Ok(v) if v.conforms_to(&task.signature.returns) => None,
                RunOutcome::Ok(v) => Some((
                    ViolationKind::TypeMismatch,
                    format!("returned {v} ({}), signature declares {}", v.label(), task.signature.returns),
                )),
                RunOutcome::Timeout => Some((ViolationKind::NonTermination, outcome.detail())),
                RunOutcome::CompileError(_) | RunOutcome::ProtocolError(_) => {
                    Some((ViolationKind::BrokenReference, outcome.detail()))
                }
                RunOutcome::RuntimeError { kind, .. } if kind == "type_error" => {
                    Some((ViolationKind::TypeMismatch, outcome.detail()))
                }
                RunOutcome::RuntimeError { .. } => Some((ViolationKind::RuntimeError, outcome.detail())),
            };
            if let Some((kind, detail)) = problem {
                violations.push(Violation { kind, probe: Some(probe), inputs: Some(inputs.clone()), detail });
            }
        }
    }
    ValidationReport { task_id: task.id.clone(), probes: probe_budget, violations }
}
