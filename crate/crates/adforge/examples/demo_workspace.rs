//! Writes a self-contained workspace for the `adforge` binary: topics,
//! labeled and held-out data, an entity fixture and a run config.
//!
//! ```bash
//! cargo run -p adforge --example demo_workspace -- /tmp/adforge-demo
//! cd /tmp/adforge-demo
//! adforge synth-structured --config config.json --stub
//! adforge qa --config config.json --stub
//! adforge synth-naive --config config.json --stub
//! adforge train --config config.json
//! adforge rewrite --config config.json --stub --n 1 --method zero-shot
//! ```

use std::path::PathBuf;

use adforge::cli::{PathsConfig, RunConfig};
use adforge::corpus::write_jsonl;
use adforge::{demo, Source};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "adforge-demo".into()));
    std::fs::create_dir_all(&dir)?;

    write_jsonl(&demo::topics(24, 7), &dir.join("topics.jsonl"))?;
    write_jsonl(&demo::labeled(200, 7, Source::Webis), &dir.join("labeled.jsonl"))?;
    write_jsonl(&demo::labeled(80, 8, Source::Webis), &dir.join("held_out.jsonl"))?;
    write_jsonl(&demo::entity_pages(), &dir.join("entities.jsonl"))?;

    let mut config = RunConfig {
        seed: Some(7),
        paths: PathsConfig {
            topics: Some("topics.jsonl".into()),
            labeled: Some("labeled.jsonl".into()),
            held_out: Some("held_out.jsonl".into()),
            entities: Some("entities.jsonl".into()),
            output_dir: Some("out".into()),
            ..PathsConfig::default()
        },
        ..RunConfig::default()
    };
    config.generation.n = 5;
    config.classify.classifiers = vec!["v0.0".into(), "v0.4".into()];
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config)?)?;

    println!("wrote demo workspace to {}", dir.display());
    Ok(())
}
