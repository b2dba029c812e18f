//! Builds a detection-accuracy matrix (rewriting method x temperature by
//! classifier), precision/recall/F1 per classifier and a paired significance
//! test, then prints the text report.

use adforge::classifier::{train_logreg, train_naive_bayes, LogRegConfig, NaiveBayesConfig, VocabConfig};
use adforge::eval::{
    build_detection_matrix, confusion, render_text, rows_of, wilcoxon_signed_rank, Alternative, NamedPrf,
    NamedWilcoxon, Report, ScoreRun,
};
use adforge::optimizer::{rewrite_best_of_n, RewriteSettings};
use adforge::{demo, DatasetSplit, Label, Scorer, Source, StubGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = DatasetSplit::train_only(demo::labeled(300, 4, Source::Webis));
    let vocab = VocabConfig::default();
    let classifiers = [
        ("logreg", train_logreg(&train, &LogRegConfig::default(), &vocab)?),
        ("naive-bayes", train_naive_bayes(&train, &NaiveBayesConfig::default(), &vocab)?),
    ];
    let guide = &classifiers[0].1;
    let tasks = demo::topics(30, 4);

    let mut runs = Vec::new();
    let mut paired: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for temperature in [1.0, 0.5] {
        let mut per_method: Vec<Vec<String>> = Vec::new();
        for n in [1, 10] {
            let texts = tasks
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let base = format!("An overview of {}.", t.query);
                    let settings = RewriteSettings { n, temperature, seed: i as u64, ..RewriteSettings::default() };
                    rewrite_best_of_n(&t.query, &base, &t.items[0], &StubGenerator, guide, &settings)
                        .map(|s| s.chosen().text.clone())
                })
                .collect::<Result<Vec<_>, _>>()?;
            per_method.push(texts);
        }
        for (name, model) in &classifiers {
            let mut scored = Vec::new();
            for (method, texts) in ["zero-shot", "best-of-10"].iter().zip(&per_method) {
                let scores = tasks
                    .iter()
                    .zip(texts)
                    .map(|(t, y)| model.score(&t.query, y))
                    .collect::<Result<Vec<_>, _>>()?;
                scored.push(scores.clone());
                runs.push(ScoreRun { method: method.to_string(), temperature, classifier: name.to_string(), scores });
            }
            if *name == "logreg" {
                paired.push((scored[1].clone(), scored[0].clone()));
            }
        }
    }

    let columns: Vec<String> = classifiers.iter().map(|(n, _)| n.to_string()).collect();
    let matrix = build_detection_matrix(&rows_of(&runs), &columns, &runs, 0.5)?;

    let held_out = demo::labeled(100, 40, Source::Webis);
    let labels: Vec<Label> = held_out.iter().map(|e| e.label).collect();
    let prf = classifiers
        .iter()
        .map(|(name, m)| {
            let preds: Vec<Label> = held_out.iter().map(|e| m.predict(&e.query, &e.response)).collect();
            confusion(&preds, &labels).map(|c| NamedPrf::new(*name, c))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let wilcoxon = paired
        .iter()
        .zip([1.0, 0.5])
        .map(|((a, b), t)| {
            wilcoxon_signed_rank(a, b, Alternative::TwoSided)
                .map(|result| NamedWilcoxon { name: format!("best-of-10 vs zero-shot @ {t:.1} [logreg]"), result })
        })
        .collect::<Result<Vec<_>, _>>()?;

    print!("{}", render_text(&Report { matrix, prf, wilcoxon }));
    Ok(())
}
