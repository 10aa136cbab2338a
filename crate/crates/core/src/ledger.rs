//! Run directory layout: `manifest.json`, the append-only `ledger.jsonl`
//! and `report/`.
//!
//! Each ledger line is `{"digest":"<sha256>","record":<record>}` where the
//! digest covers the record's exact bytes, so any edit to a line is caught
//! on read. Records are appended as executions finish and rewritten in
//! canonical `(task_id, set_index)` order once a run completes, which keeps
//! finished ledgers byte-identical whatever the completion order was.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::controller::{ExecutionRecord, RunConfig};
use crate::synth::SynthDescriptor;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const REPORT_DIR: &str = "report";
pub const FILTERED_REPORT_DIR: &str = "filtered_input_matching";

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid manifest: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LedgerError + '_ {
    move |source| LedgerError::Io { path: path.into(), source }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest over the sorted file names and contents of every `*.json` task file.
pub fn corpus_digest(dir: &Path) -> Result<String, LedgerError> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let name = path.file_name().expect("file has a name").to_string_lossy().into_owned();
            files.insert(name, std::fs::read(&path).map_err(io(&path))?);
        }
    }
    let mut hasher = Sha256::new();
    for (name, bytes) in files {
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub run_id: String,
    pub created_at: String,
    pub harness_version: String,
    pub config: RunConfig,
    pub synthesizer: SynthDescriptor,
    pub corpus_dir: PathBuf,
    pub corpus_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pools_digest: Option<String>,
    pub tasks: Vec<String>,
    /// One pool set per (task, set) serves every NoE setting.
    pub pools_shared_across_noe: bool,
}

impl RunManifest {
    /// `<UTC timestamp>-<8 hex digits>`; the hash covers the configuration,
    /// corpus and synthesizer.
    pub fn make_run_id(now: chrono::DateTime<chrono::Utc>, config: &RunConfig, corpus_digest: &str, synth: &SynthDescriptor) -> String {
        let material = serde_json::to_string(&(config, corpus_digest, synth)).expect("manifest parts serialize");
        format!("{}-{}", now.format("%Y%m%dT%H%M%SZ"), &sha256_hex(material.as_bytes())[..8])
    }

    /// Whether an existing run may be resumed with these settings.
    pub fn compatible(&self, other: &RunManifest) -> Result<(), String> {
        if self.config != other.config {
            return Err("configuration differs".into());
        }
        if self.corpus_digest != other.corpus_digest {
            return Err("task corpus changed".into());
        }
        if self.synthesizer != other.synthesizer {
            return Err("synthesizer differs".into());
        }
        if self.pools_digest != other.pools_digest {
            return Err("pinned pools differ".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        RunDir { path: path.into() }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.path.join(MANIFEST_FILE)
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.path.join(LEDGER_FILE)
    }

    pub fn report_dir(&self) -> PathBuf {
        self.path.join(REPORT_DIR)
    }

    pub fn read_manifest(&self) -> Result<RunManifest, LedgerError> {
        let path = self.manifest_path();
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        serde_json::from_str(&text).map_err(|source| LedgerError::Manifest { path, source })
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), LedgerError> {
        std::fs::create_dir_all(&self.path).map_err(io(&self.path))?;
        let path = self.manifest_path();
        let text = serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(io(&path))
    }
}

/// One ledger line for `record`.
pub fn encode_line(record: &ExecutionRecord) -> String {
    let body = serde_json::to_string(record).expect("records serialize");
    format!("{{\"digest\":\"{}\",\"record\":{body}}}", sha256_hex(body.as_bytes()))
}

#[derive(Deserialize)]
struct RawLine<'a> {
    digest: String,
    #[serde(borrow)]
    record: &'a RawValue,
}

pub fn decode_line(line: &str) -> Result<ExecutionRecord, String> {
    let raw: RawLine = serde_json::from_str(line).map_err(|e| format!("not a ledger line: {e}"))?;
    if sha256_hex(raw.record.get().as_bytes()) != raw.digest {
        return Err("digest mismatch".into());
    }
    serde_json::from_str(raw.record.get()).map_err(|e| format!("malformed record: {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerIssue {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LedgerIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ledger line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Default)]
pub struct LedgerContents {
    /// In canonical order, first occurrence of each key.
    pub records: Vec<ExecutionRecord>,
    pub issues: Vec<LedgerIssue>,
}

/// Read a ledger, skipping (and reporting) corrupt or duplicate lines.
/// A missing file reads as empty.
pub fn read_ledger(path: &Path) -> Result<LedgerContents, LedgerError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(LedgerContents::default()),
        Err(e) => return Err(io(path)(e)),
    };
    let mut by_key = BTreeMap::new();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match decode_line(line) {
            Ok(record) => {
                if by_key.contains_key(&record.key()) {
                    issues.push(LedgerIssue { line: i + 1, message: format!("duplicate record for {} set {}", record.task_id, record.set_index) });
                } else {
                    by_key.insert(record.key(), record);
                }
            }
            Err(message) => issues.push(LedgerIssue { line: i + 1, message }),
        }
    }
    if !text.is_empty() && !text.ends_with('\n') {
        log::warn!("{}: last line is unterminated", path.display());
    }
    Ok(LedgerContents { records: by_key.into_values().collect(), issues })
}

/// Serializes appends from concurrent workers.
pub struct LedgerWriter {
    path: PathBuf,
    file: Mutex<File>,
}

impl LedgerWriter {
    /// Opens for appending. An unterminated last line (an interrupted write)
    /// is cut off first so the next record starts on a line of its own.
    pub fn open(path: &Path) -> Result<Self, LedgerError> {
        let file = OpenOptions::new().create(true).read(true).append(true).open(path).map_err(io(path))?;
        let bytes = std::fs::read(path).map_err(io(path))?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            log::warn!("{}: dropping {} byte(s) of an unterminated last line", path.display(), bytes.len() - keep);
            file.set_len(keep as u64).map_err(io(path))?;
        }
        Ok(LedgerWriter { path: path.into(), file: Mutex::new(file) })
    }

    pub fn append(&self, record: &ExecutionRecord) -> Result<(), LedgerError> {
        let line = encode_line(record) + "\n";
        let mut file = self.file.lock().expect("ledger lock");
        file.write_all(line.as_bytes()).and_then(|_| file.flush()).map_err(io(&self.path))
    }
}

/// Rewrite the ledger with its valid records in canonical order, atomically.
pub fn finalize_ledger(path: &Path) -> Result<LedgerContents, LedgerError> {
    let contents = read_ledger(path)?;
    let tmp = path.with_extension("jsonl.tmp");
    let mut text = String::new();
    for record in &contents.records {
        text.push_str(&encode_line(record));
        text.push('\n');
    }
    std::fs::write(&tmp, text).map_err(io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io(path))?;
    Ok(contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example_engine::ExamplePoolSet;
    use crate::synth::BatchMode;

    fn record(task: &str, set: usize) -> ExecutionRecord {
        ExecutionRecord {
            task_id: task.into(),
            set_index: set,
            config: RunConfig::default(),
            synthesizer: SynthDescriptor { backend: "perfect".into(), batch_mode: BatchMode::Local, detail: String::new() },
            pool: ExamplePoolSet { task_id: task.into(), set_index: set, seed: 1, examples: vec![], warnings: vec![] },
            search_seed: 2,
            attempts: vec![],
            first_round_pass_count: 0,
            final_success_count: 0,
            harness_defect: None,
        }
    }

    #[test]
    fn line_round_trip_and_tamper_detection() {
        let line = encode_line(&record("a", 1));
        assert_eq!(decode_line(&line).unwrap(), record("a", 1));
        for i in 0..line.len() {
            let mut bytes = line.clone().into_bytes();
            bytes[i] ^= 0x01;
            let tampered = String::from_utf8_lossy(&bytes);
            assert!(decode_line(&tampered).is_err(), "flip at byte {i} went unnoticed");
        }
    }

    #[test]
    fn finalize_sorts_and_drops_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(LEDGER_FILE);
        let w = LedgerWriter::open(&path).unwrap();
        for (t, s) in [("b", 0), ("a", 2), ("a", 0), ("b", 0)] {
            w.append(&record(t, s)).unwrap();
        }
        drop(w);
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"garbage\n").unwrap();
        let before = read_ledger(&path).unwrap();
        assert_eq!(before.issues.len(), 2);
        finalize_ledger(&path).unwrap();
        let after = read_ledger(&path).unwrap();
        assert!(after.issues.is_empty());
        let keys: Vec<_> = after.records.iter().map(|r| r.key()).collect();
        assert_eq!(keys, [("a".to_string(), 0), ("a".to_string(), 2), ("b".to_string(), 0)]);
    }

    #[test]
    fn reopening_cuts_an_unterminated_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(LEDGER_FILE);
        LedgerWriter::open(&path).unwrap().append(&record("a", 0)).unwrap();
        let half = encode_line(&record("a", 1));
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(&half.as_bytes()[..half.len() / 2]).unwrap();
        LedgerWriter::open(&path).unwrap().append(&record("a", 2)).unwrap();
        let contents = read_ledger(&path).unwrap();
        assert!(contents.issues.is_empty(), "{:?}", contents.issues);
        let sets: Vec<_> = contents.records.iter().map(|r| r.set_index).collect();
        assert_eq!(sets, [0, 2]);
    }

    #[test]
    fn finalize_preserves_doubles_bit_for_bit() {
        use crate::example_engine::{IOExample, Origin};
        use crate::value::Value;
        let awkward = [-92.02000000000001, 125.60000000000001, 0.1 + 0.2, f64::MIN_POSITIVE, 1e300];
        let mut r = record("f", 0);
        r.pool.examples = awkward
            .iter()
            .map(|&d| IOExample::new(vec![Value::Double(d / 3.0)], Value::Double(d), Origin::Pool, 0))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(LEDGER_FILE);
        LedgerWriter::open(&path).unwrap().append(&r).unwrap();
        let first = std::fs::read(&path).unwrap();
        finalize_ledger(&path).unwrap();
        finalize_ledger(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
        assert_eq!(read_ledger(&path).unwrap().records, vec![r]);
    }

    #[test]
    fn corpus_digest_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.json"), "{}").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let d1 = corpus_digest(dir.path()).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "still ignored").unwrap();
        assert_eq!(corpus_digest(dir.path()).unwrap(), d1);
        std::fs::write(dir.path().join("a.json"), "{ }").unwrap();
        assert_ne!(corpus_digest(dir.path()).unwrap(), d1);
    }

    #[test]
    fn run_id_shape() {
        let now = chrono::DateTime::parse_from_rfc3339("2026-01-02T03:04:05Z").unwrap().with_timezone(&chrono::Utc);
        let synth = SynthDescriptor { backend: "perfect".into(), batch_mode: BatchMode::Local, detail: String::new() };
        let id = RunManifest::make_run_id(now, &RunConfig::default(), "abc", &synth);
        assert!(id.starts_with("20260102T030405Z-") && id.len() == 25, "{id}");
    }
}
