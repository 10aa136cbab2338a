//! Uniform compile/run over the in-process minilang backend and external
//! toolchains driven through the JSON-lines protocol.

mod external;
mod profile;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use external::ExternalProcess;
pub use profile::{fill, param_names, LanguageProfile, ProfileError, TypeStyle, PYTHON_DRIVER};

use crate::minilang::{self, EvalOutcome, Program, RunLimits};
use crate::task::Signature;
use crate::value::Value;

pub const COMPILE_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    CompileError,
    RuntimeError,
    Timeout,
    ProtocolError,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::CompileError => "compile_error",
            RunStatus::RuntimeError => "runtime_error",
            RunStatus::Timeout => "timeout",
            RunStatus::ProtocolError => "protocol_error",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of compiling or running a program. A value exists only on success.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Ok(Value),
    CompileError(String),
    RuntimeError { kind: String, detail: String },
    Timeout,
    ProtocolError(String),
}

impl RunOutcome {
    pub fn status(&self) -> RunStatus {
        match self {
            RunOutcome::Ok(_) => RunStatus::Ok,
            RunOutcome::CompileError(_) => RunStatus::CompileError,
            RunOutcome::RuntimeError { .. } => RunStatus::RuntimeError,
            RunOutcome::Timeout => RunStatus::Timeout,
            RunOutcome::ProtocolError(_) => RunStatus::ProtocolError,
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            RunOutcome::Ok(v) => Some(v),
            _ => None,
        }
    }

    pub fn detail(&self) -> String {
        match self {
            RunOutcome::Ok(_) => String::new(),
            RunOutcome::CompileError(d) | RunOutcome::ProtocolError(d) => d.clone(),
            RunOutcome::RuntimeError { kind, detail } if kind == detail => kind.clone(),
            RunOutcome::RuntimeError { kind, detail } => format!("{kind}: {detail}"),
            RunOutcome::Timeout => "wall-clock limit exceeded".into(),
        }
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Ok(v) => write!(f, "ok({v})"),
            other => write!(f, "{}({})", other.status(), other.detail()),
        }
    }
}

/// Per-candidate scratch directory, removed on drop unless kept.
pub struct Scratch {
    dir: Option<tempfile::TempDir>,
    path: PathBuf,
}

impl Scratch {
    fn create(keep: bool) -> std::io::Result<Self> {
        let dir = tempfile::Builder::new().prefix("itercode-").tempdir()?;
        let path = dir.path().to_path_buf();
        if keep {
            let path = dir.keep();
            log::info!("keeping candidate artifacts in {}", path.display());
            Ok(Scratch { dir: None, path })
        } else {
            Ok(Scratch { dir: Some(dir), path })
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_kept(&self) -> bool {
        self.dir.is_none()
    }
}

/// A compiled program. Each handle serves one run at a time.
pub enum Handle {
    Minilang(Arc<Program>),
    External { process: ExternalProcess, scratch: Option<Scratch> },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompileOptions {
    pub keep_artifacts: bool,
}

impl Handle {
    pub fn run(&mut self, inputs: &[Value], limits: &RunLimits) -> RunOutcome {
        match self {
            Handle::Minilang(program) => match minilang::evaluate(program, inputs, limits) {
                Ok(EvalOutcome::Value(v)) => RunOutcome::Ok(v),
                Ok(EvalOutcome::RuntimeError { kind, detail }) => {
                    RunOutcome::RuntimeError { kind: kind.to_string(), detail }
                }
                Ok(EvalOutcome::Timeout) => RunOutcome::Timeout,
                Err(violation) => RunOutcome::ProtocolError(violation.0),
            },
            Handle::External { process, .. } => process.call(inputs, limits.wall_clock_ms),
        }
    }

    /// The parsed program for minilang handles.
    pub fn program(&self) -> Option<&Program> {
        match self {
            Handle::Minilang(p) => Some(p),
            Handle::External { .. } => None,
        }
    }

    /// Wraps a raw command (no compile step) speaking the call protocol.
    pub fn external_command(command: Vec<String>, cwd: PathBuf, signature: &Signature) -> Self {
        Handle::External { process: ExternalProcess::new(command, cwd, None, signature.returns.clone()), scratch: None }
    }
}

/// Compile `source` under `profile` for a function with `signature`.
///
/// Errors are `CompileError` (parse failure, nonzero exit, signature
/// mismatch) or `ProtocolError` (toolchain missing or unusable).
pub fn compile(
    source: &str,
    profile: &LanguageProfile,
    signature: &Signature,
    options: CompileOptions,
) -> Result<Handle, RunOutcome> {
    if profile.is_minilang() {
        return compile_minilang(source, signature).map(|p| Handle::Minilang(Arc::new(p)));
    }
    let (Some(compile_cmd), Some(run_cmd)) = (&profile.compile_command, &profile.run_command) else {
        return Err(RunOutcome::ProtocolError(format!("profile `{}` lacks commands", profile.profile_id)));
    };
    let scratch = Scratch::create(options.keep_artifacts)
        .map_err(|e| RunOutcome::ProtocolError(format!("cannot create scratch directory: {e}")))?;
    let dir = scratch.path().to_path_buf();
    let source_path = dir.join(if profile.source_file.is_empty() { "candidate.src" } else { &profile.source_file });
    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).map_err(|e| RunOutcome::ProtocolError(format!("cannot write {}: {e}", path.display())))
    };
    write(&source_path, source)?;
    for (name, text) in &profile.support_files {
        write(&dir.join(name), text)?;
    }
    let vars = [
        ("source", source_path.to_string_lossy().into_owned()),
        ("dir", dir.to_string_lossy().into_owned()),
        ("name", signature.name.clone()),
    ];
    let expand = |cmd: &[String]| -> Vec<String> {
        let pairs: Vec<(&str, &str)> = vars.iter().map(|(k, v)| (*k, v.as_str())).collect();
        cmd.iter().map(|part| fill(part, &pairs)).collect()
    };
    run_compile_command(&expand(compile_cmd), &dir)?;
    let process = ExternalProcess::new(expand(run_cmd), dir.clone(), Some(dir.join("stderr.log")), signature.returns.clone());
    Ok(Handle::External { process, scratch: Some(scratch) })
}

fn compile_minilang(source: &str, signature: &Signature) -> Result<Program, RunOutcome> {
    let program = minilang::compile(source).map_err(|e| RunOutcome::CompileError(e.to_string()))?;
    let f = &program.function;
    let params: Vec<_> = f.params.iter().map(|p| p.ty.clone()).collect();
    if f.name != signature.name || params != signature.params || f.ret != signature.returns {
        return Err(RunOutcome::CompileError(format!(
            "signature mismatch: expected {}, found fn {}({}) -> {}",
            signature,
            f.name,
            params.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "),
            f.ret
        )));
    }
    Ok(program)
}

fn run_compile_command(cmd: &[String], dir: &Path) -> Result<(), RunOutcome> {
    let (program, args) = cmd.split_first().ok_or_else(|| RunOutcome::ProtocolError("empty compile command".into()))?;
    let log_path = dir.join("compile.log");
    let log = std::fs::File::create(&log_path)
        .map_err(|e| RunOutcome::ProtocolError(format!("cannot create compile log: {e}")))?;
    let log_err = log.try_clone().map_err(|e| RunOutcome::ProtocolError(e.to_string()))?;
    let mut child = Command::new(program)
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(log_err)
        .spawn()
        .map_err(|e| RunOutcome::ProtocolError(format!("cannot start compiler `{program}`: {e}")))?;
    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() > COMPILE_TIMEOUT => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(RunOutcome::CompileError("compiler timed out".into()));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(RunOutcome::ProtocolError(format!("waiting for compiler: {e}"))),
        }
    };
    if status.success() {
        Ok(())
    } else {
        let diagnostics = std::fs::read_to_string(&log_path).unwrap_or_default();
        Err(RunOutcome::CompileError(format!("{status}\n{diagnostics}").trim_end().to_string()))
    }
}
