//! Renders every prompt the pipeline sends: QA over retrieved passages,
//! rewriting with an item, naive insertion, summary extraction and the hard
//! positive / hard negative pair.

use adforge::generator::prompts::{build_qa_prompt, build_rewrite_prompt, summarize_template};
use adforge::synthgen::structured::{hard_negative_prompt, hard_positive_prompt};
use adforge::synthgen::{EntityRecord, PromptPool};
use adforge::demo;

fn section(title: &str, body: &str) {
    println!("===== {title} =====\n{body}\n");
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let task = &demo::topics(1, 0)[0];
    section("qa", &build_qa_prompt(task, 3)?);
    let answer = "Start with fit and cushioning, then consider the terrain you run on.";
    section("rewrite", &build_rewrite_prompt(&task.query, answer, &task.items[0])?);

    let pool = PromptPool::default_pool();
    let naive = pool.template(0).expect("non-empty pool");
    section(naive.name(), &naive.render(&[("query", &task.query), ("response", answer)])?);

    let entity = EntityRecord {
        product_name: "Orbis K7".into(),
        infobox: "camera".into(),
        page_title: "Orbis K7 (camera)".into(),
        summary: "A mirrorless camera released in 2021.".into(),
        key_features: vec!["weather sealing".into(), "in-body stabilization".into(), "dual card slots".into()],
        release_year: 2021,
        matched_properties: vec!["P176".into()],
        raw_text: String::new(),
    };
    section(
        "summarize",
        &summarize_template().render(&[("product_name", &entity.product_name), ("text", "The Orbis K7 is a camera.")])?,
    );
    section("hard positive", &hard_positive_prompt(&entity)?);
    section("hard negative", &hard_negative_prompt(&entity)?);
    Ok(())
}
