//! Persistent child process speaking the JSON-lines call protocol.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::Deserialize;

use super::RunOutcome;
use crate::value::{Value, ValueType};

struct Live {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

pub struct ExternalProcess {
    command: Vec<String>,
    cwd: PathBuf,
    stderr_log: Option<PathBuf>,
    return_type: ValueType,
    live: Option<Live>,
}

#[derive(Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum Response {
    Ok { value: serde_json::Value },
    Error { kind: String },
}

impl ExternalProcess {
    pub fn new(command: Vec<String>, cwd: PathBuf, stderr_log: Option<PathBuf>, return_type: ValueType) -> Self {
        ExternalProcess { command, cwd, stderr_log, return_type, live: None }
    }

    fn spawn(&self) -> Result<Live, RunOutcome> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| RunOutcome::ProtocolError("empty run command".into()))?;
        let stderr = match &self.stderr_log {
            Some(path) => std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map(Stdio::from)
                .unwrap_or_else(|_| Stdio::null()),
            None => Stdio::null(),
        };
        let mut child = Command::new(program)
            .args(args)
            .current_dir(&self.cwd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(stderr)
            .spawn()
            .map_err(|e| RunOutcome::ProtocolError(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Live { child, stdin, lines })
    }

    fn kill(&mut self) {
        if let Some(mut live) = self.live.take() {
            let _ = live.child.kill();
            let _ = live.child.wait();
        }
    }

    pub fn call(&mut self, inputs: &[Value], wall_clock_ms: u64) -> RunOutcome {
        if self.live.is_none() {
            match self.spawn() {
                Ok(live) => self.live = Some(live),
                Err(outcome) => return outcome,
            }
        }
        let request = serde_json::json!({ "call": inputs.iter().map(Value::to_json).collect::<Vec<_>>() });
        let live = self.live.as_mut().expect("spawned");
        if writeln!(live.stdin, "{request}").and_then(|_| live.stdin.flush()).is_err() {
            self.kill();
            return RunOutcome::RuntimeError { kind: "crashed".into(), detail: "process exited before the call".into() };
        }
        match live.lines.recv_timeout(Duration::from_millis(wall_clock_ms)) {
            Ok(Ok(line)) => self.decode(&line),
            Ok(Err(e)) => {
                self.kill();
                RunOutcome::ProtocolError(format!("unreadable output: {e}"))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                RunOutcome::Timeout
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.kill();
                RunOutcome::RuntimeError { kind: "crashed".into(), detail: "process exited without responding".into() }
            }
        }
    }

    fn decode(&mut self, line: &str) -> RunOutcome {
        let response: Response = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                // The stream position is unknown after garbage; start fresh next call.
                self.kill();
                return RunOutcome::ProtocolError(format!("malformed response {line:?}: {e}"));
            }
        };
        match response {
            Response::Ok { value } => match Value::from_json_typed(&value, &self.return_type) {
                Some(v) => RunOutcome::Ok(v),
                None => RunOutcome::RuntimeError {
                    kind: "type_error".into(),
                    detail: format!("returned {value}, expected {}", self.return_type),
                },
            },
            Response::Error { kind } => RunOutcome::RuntimeError { detail: kind.clone(), kind },
        }
    }
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        self.kill();
    }
}
