//! Best-of-N rewriting: sample N rewrites with the offline stub generator and
//! keep the one a trained classifier finds least ad-like. Compares the mean
//! detection probability against zero-shot rewriting.

use adforge::classifier::{train_logreg, LogRegConfig, VocabConfig};
use adforge::optimizer::{rewrite_best_of_n, RewriteSettings};
use adforge::{demo, DatasetSplit, Source, StubGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = DatasetSplit::train_only(demo::labeled(300, 3, Source::Webis));
    let detector = train_logreg(&train, &LogRegConfig::default(), &VocabConfig::default())?;
    let gen = StubGenerator;

    let tasks = demo::topics(40, 3);
    let mut totals = [0.0; 2];
    for (i, task) in tasks.iter().enumerate() {
        let base = format!("Here is an overview of {}.", task.query);
        for (slot, n) in [1usize, 10].into_iter().enumerate() {
            let settings = RewriteSettings {
                n,
                seed: i as u64,
                ..RewriteSettings::default()
            };
            let set = rewrite_best_of_n(&task.query, &base, &task.items[0], &gen, &detector, &settings)?;
            totals[slot] += set.chosen_score();
            if i == 0 {
                println!("n={n:<2} chose #{} (p={:.3}): {}", set.chosen_index, set.chosen_score(), set.chosen().text);
            }
        }
    }
    let n = tasks.len() as f64;
    println!("mean detection probability  zero-shot {:.3}  best-of-10 {:.3}", totals[0] / n, totals[1] / n);
    Ok(())
}
