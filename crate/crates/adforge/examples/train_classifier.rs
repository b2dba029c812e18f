//! Trains logistic-regression and naive Bayes detectors on a labeled corpus,
//! reports held-out precision, recall and F1, and round-trips a model file.

use adforge::classifier::{
    persist_model, restore_model, train_logreg, train_naive_bayes, LogRegConfig, NaiveBayesConfig, VocabConfig,
};
use adforge::corpus::split_dataset;
use adforge::eval::{confusion, prf1};
use adforge::{demo, ClassifierModel, Label, Source};

fn report(name: &str, model: &ClassifierModel, held_out: &[adforge::LabeledExample]) {
    let preds: Vec<Label> = held_out.iter().map(|e| model.predict(&e.query, &e.response)).collect();
    let labels: Vec<Label> = held_out.iter().map(|e| e.label).collect();
    let m = prf1(&confusion(&preds, &labels).expect("same length"));
    println!(
        "{name:<12} precision {:.3}  recall {:.3}  f1 {:.3}  accuracy {:.3}",
        m.precision, m.recall, m.f1, m.accuracy
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = demo::labeled(400, 1, Source::Webis);
    let split = split_dataset(&data, 0.25, 42)?;
    println!("train {} / held out {}", split.train.len(), split.held_out.len());

    let vocab = VocabConfig::default();
    let logreg = train_logreg(&split, &LogRegConfig::default(), &vocab)?;
    let nb = train_naive_bayes(&split, &NaiveBayesConfig::default(), &vocab)?;
    report("logreg", &logreg, &split.held_out);
    report("naive-bayes", &nb, &split.held_out);

    let dir = tempfile_dir()?;
    let path = dir.join("logreg.model.json");
    persist_model(&logreg, &path)?;
    let restored = restore_model(&path)?;
    let probe = &split.held_out[0];
    println!(
        "restored model agrees: {}",
        restored.predict_proba(&probe.query, &probe.response) == logreg.predict_proba(&probe.query, &probe.response)
    );
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("adforge-train-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
