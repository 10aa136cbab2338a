//! Checks on the shipped task corpus.

use std::collections::BTreeSet;
use std::path::PathBuf;

use itercode::metrics::KNOWLEDGE_LABELS;
use itercode::task::{load_corpus, validate_corpus, Task};
use itercode::value::KindLabel;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn task_files_are_in_canonical_form() {
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path).unwrap();
            let task = Task::load(&path).unwrap();
            assert!(task.to_file_string() == text, "{} is not in canonical form", path.display());
            assert_eq!(path.file_stem().unwrap().to_str(), Some(task.id.as_str()), "file name and id differ");
        }
    }
}

#[test]
fn every_task_validates() {
    let reports = validate_corpus(&corpus_dir(), 100, &Default::default()).unwrap();
    let bad: Vec<_> = reports.iter().filter(|r| !r.is_ok()).map(|r| (&r.task_id, &r.violations)).collect();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn corpus_covers_every_category() {
    let tasks = load_corpus(&corpus_dir()).unwrap();
    assert!(tasks.len() >= 20, "only {} tasks", tasks.len());
    let undescribed: Vec<_> = tasks.iter().filter(|t| t.nl_description.is_none()).map(|t| &t.id).collect();
    assert!(undescribed.is_empty(), "no description: {undescribed:?}");

    let kinds: BTreeSet<KindLabel> = tasks.iter().flat_map(Task::io_type_categories).collect();
    assert_eq!(kinds, KindLabel::ALL.into_iter().collect());

    let labels: BTreeSet<&str> = tasks.iter().flat_map(|t| t.knowledge_tags.iter().map(String::as_str)).collect();
    assert_eq!(labels, KNOWLEDGE_LABELS.into_iter().collect());
}
