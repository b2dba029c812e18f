//! Trains the six classifier versions v0.0 to v0.5 from their recipes.
//! v0.4 and v0.5 order their first epoch from easiest to hardest according
//! to v0.1, and v0.5 also upsamples the structured pairs.

use std::collections::BTreeMap;

use adforge::curriculum::{run_recipe, RecipeCard, TrainerConfig, RECIPE_TAGS};
use adforge::eval::{confusion, prf1};
use adforge::{demo, ClassifierModel, Label, Source};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = demo::recipe_data(21);
    let held_out = demo::labeled(120, 99, Source::Webis);
    let labels: Vec<Label> = held_out.iter().map(|e| e.label).collect();
    let config = TrainerConfig::default();

    let mut models: BTreeMap<String, ClassifierModel> = BTreeMap::new();
    for tag in RECIPE_TAGS {
        let card = RecipeCard::preset(tag)?;
        let reference = card.reference_tag.as_ref().and_then(|r| models.get(r));
        let outcome = run_recipe(&card, &data, &config, reference)?;
        let preds: Vec<Label> = held_out.iter().map(|e| outcome.model.predict(&e.query, &e.response)).collect();
        let m = prf1(&confusion(&preds, &labels)?);
        let first = outcome.first_epoch_difficulties.first().copied();
        println!(
            "{tag}  sources {:?}  f1 {:.3}  first-epoch difficulty starts at {}",
            outcome.provenance.source_counts,
            m.f1,
            first.map_or("-".into(), |d| format!("{d:.3}"))
        );
        models.insert(tag.to_string(), outcome.model);
    }
    Ok(())
}
