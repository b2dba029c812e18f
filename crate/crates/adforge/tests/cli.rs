use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adforge::cli::RunConfig;
use adforge::corpus::write_jsonl;
use adforge::eval::load_report;
use adforge::{demo, Source};

fn adforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adforge"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run adforge")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = adforge(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Topics, labeled data, entities and a config in a fresh directory.
fn workspace(n_topics: usize) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_jsonl(&demo::topics(n_topics, 7), &p.join("topics.jsonl")).unwrap();
    write_jsonl(&demo::labeled(200, 7, Source::Webis), &p.join("labeled.jsonl")).unwrap();
    write_jsonl(&demo::labeled(60, 8, Source::Webis), &p.join("held_out.jsonl")).unwrap();
    write_jsonl(&demo::entity_pages(), &p.join("entities.jsonl")).unwrap();
    let mut config = RunConfig::default();
    config.paths.topics = Some("topics.jsonl".into());
    config.paths.labeled = Some("labeled.jsonl".into());
    config.paths.held_out = Some("held_out.jsonl".into());
    config.paths.entities = Some("entities.jsonl".into());
    config.paths.output_dir = Some("out".into());
    config.generation.n = 4;
    config.generation.temperatures = vec![1.0];
    config.classify.classifiers = vec!["v0.0".into(), "v0.4".into()];
    let path = p.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    (dir, path)
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = adforge(dir.path(), &["launch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_input_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = adforge(dir.path(), &["qa", "--stub"]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(dir.path().join("c.json"), r#"{"paths": {"topics": "absent.jsonl"}}"#).unwrap();
    let out = adforge(dir.path(), &["qa", "--stub", "--config", "c.json"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
}

#[test]
fn model_missing_is_config_error() {
    let (dir, _) = workspace(3);
    ok(dir.path(), &["qa", "--stub", "--config", "config.json"]);
    let out = adforge(dir.path(), &["rewrite", "--stub", "--config", "config.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn full_pipeline_runs_offline() {
    let (dir, _) = workspace(6);
    let d = dir.path();
    let c = ["--config", "config.json", "--stub"];
    for cmd in ["synth-structured", "qa", "synth-naive", "train"] {
        ok(d, &[&[cmd][..], &c[..]].concat());
    }
    ok(d, &[&["rewrite", "--n", "1", "--method", "zero-shot"][..], &c[..]].concat());
    ok(d, &[&["rewrite", "--n", "4", "--method", "best-of-4"][..], &c[..]].concat());
    ok(d, &[&["build-sft"][..], &c[..]].concat());
    ok(d, &[&["classify"][..], &c[..]].concat());
    let out = adforge(d, &[&["evaluate"][..], &c[..]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("Rewriting Method"));

    let o = d.join("out");
    for f in ["responses.jsonl", "candidates.jsonl", "sft.jsonl", "sft.audit.jsonl", "report.json", "report.txt"] {
        assert!(o.join(f).exists(), "{f} missing");
    }
    for tag in adforge::curriculum::RECIPE_TAGS {
        assert!(o.join("models").join(format!("{tag}.model.json")).exists());
    }
    let report = load_report(&o.join("report.json")).unwrap();
    assert_eq!(report.matrix.columns, vec!["v0.0", "v0.4"]);
    assert_eq!(report.matrix.rows.len(), 2);
    assert_eq!(report.prf.len(), 2);
    assert!(report.matrix.cells.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn rewrite_is_byte_identical_across_runs() {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let (dir, _) = workspace(5);
        let d = dir.path();
        ok(d, &["qa", "--stub", "--seed", "7", "--config", "config.json"]);
        ok(d, &["train", "--recipe", "v0.0", "--seed", "7", "--config", "config.json"]);
        let mut config: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("config.json")).unwrap()).unwrap();
        config["classify"]["scorer"] = "v0.0".into();
        std::fs::write(d.join("config.json"), config.to_string()).unwrap();
        ok(d, &["rewrite", "--stub", "--seed", "7", "--config", "config.json"]);
        outputs.push((
            std::fs::read(d.join("out/rewrites.jsonl")).unwrap(),
            std::fs::read(d.join("out/candidates.jsonl")).unwrap(),
        ));
    }
    assert!(!outputs[0].0.is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn wilcoxon_subcommand_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = [(1.0, 0.5), (2.0, 2.5), (3.0, 1.0), (0.4, 0.1), (0.9, 0.2)]
        .iter()
        .map(|(a, b)| format!("{{\"a\": {a}, \"b\": {b}}}\n"))
        .collect();
    std::fs::write(dir.path().join("pairs.jsonl"), lines).unwrap();
    ok(dir.path(), &["wilcoxon", "--input", "pairs.jsonl", "--output-dir", "o"]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/wilcoxon.json")).unwrap()).unwrap();
    // Differences 0.5, -0.5, 2, 0.3, 0.7: ranks 2.5, 2.5, 5, 1, 4, so W+ = 12.5.
    assert_eq!(v["w_plus"], 12.5);
    assert_eq!(v["mode"], "exact");
}
