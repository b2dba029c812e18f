//! Builds a fine-tuning dataset for the rewriter: for each task, sample m
//! rewrites across two backends and keep the least detectable as the
//! completion. Writes `sft.jsonl` and its audit sidecar.

use adforge::classifier::{train_logreg, LogRegConfig, VocabConfig};
use adforge::optimizer::{audit_path, build_sft_record, emit_sft_dataset, Backend};
use adforge::{demo, DatasetSplit, Generator, Source, StubGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = DatasetSplit::train_only(demo::labeled(200, 5, Source::Webis));
    let detector = train_logreg(&train, &LogRegConfig::default(), &VocabConfig::default())?;
    let gen = StubGenerator;
    let backends: Vec<Backend<'_>> = vec![(&gen as &dyn Generator, 1.0), (&gen as &dyn Generator, 0.5)];

    let records = demo::topics(12, 5)
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let base = format!("A short guide to {}.", t.query);
            build_sft_record(&t.query, &base, &t.items[0], &backends, &detector, 5, i as u64)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let path = std::env::temp_dir().join("adforge-sft.jsonl");
    let n = emit_sft_dataset(&records, &path)?;
    println!("wrote {n} records to {} (audit: {})", path.display(), audit_path(&path).display());
    let r = &records[0];
    println!("scores {:?} -> chose #{}", r.scores.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(), r.chosen_index);
    Ok(())
}
