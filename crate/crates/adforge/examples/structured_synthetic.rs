//! Structured synthetic pairs: harvest product entities, keep those released
//! in 2000 or later, summarize each and write a hard positive (promotional)
//! and a hard negative (neutral) response about it.

use adforge::synthgen::{
    filter_entities, harvest_entities, run_structured, MemorySource, DEFAULT_INFOBOXES, DEFAULT_PROPERTIES,
};
use adforge::{demo, StubGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = MemorySource(demo::entity_pages());
    let properties: Vec<&str> = DEFAULT_PROPERTIES.iter().map(|(id, _)| *id).collect();
    let harvest = harvest_entities(&source, &DEFAULT_INFOBOXES, &properties)?;
    let kept = filter_entities(&harvest.records);
    println!("harvested {} entities, {} pass the release-year filter", harvest.records.len(), kept.len());
    for e in &kept {
        println!("  {:<20} {:<18} {}", e.product_name, e.infobox, e.release_year);
    }

    let run = run_structured(&harvest.records, &StubGenerator, 1.0, 11, 4);
    println!("{} pairs, {} failures", run.pairs.len(), run.failures.len());
    if let Some(pair) = run.pairs.first() {
        println!("features: {:?}", pair.entity.key_features);
        println!("+ {}", pair.hard_positive.response);
        println!("- {}", pair.hard_negative.response);
    }
    Ok(())
}
