use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn itercode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itercode")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn small_corpus(dir: &Path, ids: &[&str]) -> PathBuf {
    let corpus = dir.join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    for id in ids {
        std::fs::copy(repo(&format!("corpus/{id}.json")), corpus.join(format!("{id}.json"))).unwrap();
    }
    corpus
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_corpus_validates() {
    let out = itercode(&["validate", "--corpus", path(&repo("corpus")), "--probes", "20"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("with violations"));
}

#[test]
fn broken_reference_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &["sum_check", "gcd"]);
    let text = std::fs::read_to_string(corpus.join("gcd.json")).unwrap();
    std::fs::write(corpus.join("gcd.json"), text.replace("return a;", "return a + 1;")).unwrap();
    let out = itercode(&["validate", "--corpus", path(&corpus)]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL  gcd") && text.contains("ok    sum_check"), "{text}");
    assert!(text.contains("2 task(s), 1 with violations"), "{text}");
}

#[test]
fn empty_corpus_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = itercode(&["validate", "--corpus", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("no tasks found"));
}

#[test]
fn config_with_an_api_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "seed = 3\napi_key = \"not-a-real-key\"\n").unwrap();
    let out = itercode(&["sample", "--config", path(&config), "--corpus", path(&repo("corpus"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("api_key_env") && !err.contains("not-a-real-key"), "{err}");
}

#[test]
fn run_report_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &["sum_check", "reverse_string"]);
    let runs = dir.path().join("runs");
    let out = itercode(&[
        "run", "--corpus", path(&corpus), "--synthesizer", "input-matching", "--out", path(&runs), "--run-id", "r",
        "--workers", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("10 executed, 0 resumed"), "{}", stdout(&out));
    let run_dir = runs.join("r");
    assert!(run_dir.join("report").is_dir());

    let replay = itercode(&["replay", path(&run_dir), "--task", "sum_check", "--set", "0"]);
    assert!(replay.status.success(), "{}", stdout(&replay));

    // A corrupt line is skipped by default and fatal under --strict.
    let ledger = run_dir.join("ledger.jsonl");
    let mut text = std::fs::read_to_string(&ledger).unwrap();
    text.push_str("{\"digest\":\"00\",\"record\":{}}\n");
    std::fs::write(&ledger, &text).unwrap();
    assert!(itercode(&["report", path(&run_dir)]).status.success());
    assert_eq!(itercode(&["report", path(&run_dir), "--strict"]).status.code(), Some(1));

    let replay = itercode(&["replay", path(&run_dir), "--task", "sum_check", "--set", "0"]);
    assert_eq!(replay.status.code(), Some(1));
    assert!(stdout(&replay).contains("1 corrupt line(s)"), "{}", stdout(&replay));
}
