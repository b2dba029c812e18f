//! Built-in prompt templates and the QA / rewrite prompt builders.
//!
//! Template bodies live in `templates/*.txt` at the crate root.

use crate::corpus::{AdItem, QueryTask};

use super::template::PromptTemplate;
use super::GenError;

pub(crate) const QA_BODY: &str = include_str!("../../templates/qa.txt");
pub(crate) const REWRITE_BODY: &str = include_str!("../../templates/rewrite.txt");
pub(crate) const NAIVE_SUBTLE_BODY: &str = include_str!("../../templates/naive_subtle.txt");
pub(crate) const HARD_POSITIVE_BODY: &str = include_str!("../../templates/hard_positive.txt");
pub(crate) const HARD_NEGATIVE_BODY: &str = include_str!("../../templates/hard_negative.txt");
pub(crate) const SUMMARIZE_BODY: &str = include_str!("../../templates/summarize.txt");

fn builtin(name: &str, body: &str) -> PromptTemplate {
    PromptTemplate::new(name, body.trim_end_matches('\n'))
}

/// QA System prompt, bound with `{context}` and `{query}`.
pub fn qa_template() -> PromptTemplate {
    builtin("qa", QA_BODY)
}

/// Ad-Rewriter prompt, bound with `{type}`, `{item}`, `{qualities}`, `{query}`
/// and `{response}`.
pub fn rewrite_template() -> PromptTemplate {
    builtin("rewrite", REWRITE_BODY)
}

/// The published naive ad-insertion prompt, bound with `{query}` and `{response}`.
pub fn naive_insertion_template() -> PromptTemplate {
    builtin("naive-subtle", NAIVE_SUBTLE_BODY)
}

/// Hard-positive (implicit advertisement) prompt.
pub fn hard_positive_template() -> PromptTemplate {
    builtin("hard-positive", HARD_POSITIVE_BODY)
}

/// Hard-negative (factual description) prompt.
pub fn hard_negative_template() -> PromptTemplate {
    builtin("hard-negative", HARD_NEGATIVE_BODY)
}

/// Page summarization and feature extraction prompt.
pub fn summarize_template() -> PromptTemplate {
    builtin("summarize", SUMMARIZE_BODY)
}

/// Line in [`summarize_template`] that announces the structured reply format.
pub const STRUCTURED_REPLY_MARKER: &str = "Format your reply exactly as:";

/// Renders the QA prompt with the top-`k` passages joined by blank lines in
/// rank order.
pub fn build_qa_prompt(task: &QueryTask, k: usize) -> Result<String, GenError> {
    if k == 0 {
        return Err(GenError::InvalidRequest("k must be at least 1".into()));
    }
    if task.passages.is_empty() {
        return Err(GenError::EmptyPassages(task.id.clone()));
    }
    let context = task
        .top_passages(k)
        .iter()
        .map(|p| p.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    Ok(qa_template().render(&[("context", &context), ("query", &task.query)])?)
}

pub fn build_rewrite_prompt(query: &str, response: &str, item: &AdItem) -> Result<String, GenError> {
    for (name, value) in [
        ("query", query),
        ("response", response),
        ("item", item.item.as_str()),
        ("type", item.kind.as_str()),
        ("qualities", item.qualities.as_str()),
    ] {
        if value.trim().is_empty() {
            return Err(GenError::MissingField(name));
        }
    }
    Ok(rewrite_template().render(&[
        ("type", &item.kind),
        ("item", &item.item),
        ("qualities", &item.qualities),
        ("query", query),
        ("response", response),
    ])?)
}
