//! Naive synthetic ads: pick a prompt from a pool and ask the generator to
//! slip an ad into an ad-free answer. Contrasts the 12-prompt pool with the
//! single-prompt pool.

use std::collections::BTreeMap;

use adforge::synthgen::{insert_ad_naive, PromptChoice, PromptPool};
use adforge::{demo, Source, StubGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs = demo::labeled(60, 9, Source::Webis);
    let ad_free: Vec<_> = inputs.iter().filter(|e| !e.label.is_ad()).collect();

    for pool in [PromptPool::single_prompt_pool(), PromptPool::default_pool()] {
        let mut by_tag: BTreeMap<String, usize> = BTreeMap::new();
        for (i, e) in ad_free.iter().enumerate() {
            let out = insert_ad_naive(&e.query, &e.response, &pool, PromptChoice::Seeded, &StubGenerator, 1.0, i as u64)?;
            *by_tag.entry(out.prompt_tag).or_default() += 1;
        }
        println!("pool of {:>2}: prompts used by strategy {by_tag:?}", pool.len());
    }

    let pool = PromptPool::default_pool();
    let e = ad_free[0];
    let sample = insert_ad_naive(&e.query, &e.response, &pool, PromptChoice::Index(3), &StubGenerator, 1.0, 0)?;
    println!("{} [{}] -> {}", sample.prompt_name, sample.example.id, sample.example.response);
    Ok(())
}
