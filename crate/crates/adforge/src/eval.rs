//! Detection metrics, the method-by-classifier accuracy matrix, the paired
//! Wilcoxon signed-rank test and report rendering.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::corpus::Label;

/// Largest effective sample size handled by the exact null distribution.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no inputs to evaluate")]
    EmptyInput,
    #[error("no scores for row {row:?}, column {column:?}")]
    MissingCell { row: String, column: String },
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut c = ConfusionCounts::default();
    for (p, y) in predictions.iter().zip(labels) {
        match (p.is_ad(), y.is_ad()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Set when some ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn prf1(counts: &ConfusionCounts) -> Prf {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let accuracy = ratio(counts.tp + counts.tn, counts.total());
    let degenerate = precision.is_none() || recall.is_none() || accuracy.is_none();
    let (p, r) = (precision.unwrap_or(0.0), recall.unwrap_or(0.0));
    Prf {
        precision: p,
        recall: r,
        f1: f1(p, r),
        accuracy: accuracy.unwrap_or(0.0),
        degenerate,
    }
}

/// Fraction of ad-bearing responses scored at or above `threshold`.
pub fn detection_accuracy(scores: &[f64], threshold: f64) -> Result<f64, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let flagged = scores.iter().filter(|&&s| s >= threshold).count();
    Ok(flagged as f64 / scores.len() as f64)
}

/// A rewriting method run at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub method: String,
    pub temperature: f64,
}

impl MatrixRow {
    pub fn new(method: impl Into<String>, temperature: f64) -> Self {
        Self {
            method: method.into(),
            temperature,
        }
    }

    fn label(&self) -> String {
        format!("{} @ {:.1}", self.method, self.temperature)
    }
}

/// Classifier scores for one (row, classifier) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRun {
    pub method: String,
    pub temperature: f64,
    pub classifier: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMatrix {
    pub rows: Vec<MatrixRow>,
    pub columns: Vec<String>,
    /// `cells[row][column]`, each in [0, 1].
    pub cells: Vec<Vec<f64>>,
}

impl DetectionMatrix {
    pub fn get(&self, row: usize, column: usize) -> f64 {
        self.cells[row][column]
    }
}

/// Distinct rows of `runs` in order of first appearance.
pub fn rows_of(runs: &[ScoreRun]) -> Vec<MatrixRow> {
    let mut rows: Vec<MatrixRow> = Vec::new();
    for r in runs {
        let row = MatrixRow::new(r.method.clone(), r.temperature);
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    rows
}

pub fn build_detection_matrix(
    rows: &[MatrixRow],
    classifiers: &[String],
    runs: &[ScoreRun],
    threshold: f64,
) -> Result<DetectionMatrix, EvalError> {
    let mut cells = Vec::with_capacity(rows.len());
    for row in rows {
        let mut line = Vec::with_capacity(classifiers.len());
        for col in classifiers {
            let run = runs
                .iter()
                .find(|r| r.method == row.method && r.temperature == row.temperature && &r.classifier == col)
                .ok_or_else(|| EvalError::MissingCell {
                    row: row.label(),
                    column: col.clone(),
                })?;
            line.push(detection_accuracy(&run.scores, threshold)?);
        }
        cells.push(line);
    }
    Ok(DetectionMatrix {
        rows: rows.to_vec(),
        columns: classifiers.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `a` tends to be smaller than `b`.
    Less,
    /// `a` tends to be larger than `b`.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMode {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub w_plus: f64,
    pub w_minus: f64,
    pub n_effective: usize,
    pub p_value: f64,
    pub mode: WilcoxonMode,
    pub alternative: Alternative,
    /// Standardized statistic of the normal branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

/// Average ranks (1-based) of `values`, plus the sizes of tie groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

/// Null distribution of `2 * W+` when each rank's sign is a fair coin:
/// `counts[s]` sign assignments reach doubled sum `s`.
fn doubled_sum_counts(doubled_ranks: &[usize]) -> Vec<u64> {
    let total: usize = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in doubled_ranks {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Paired signed-rank test on `a - b`. Zero differences are dropped; ties
/// share average ranks. Up to [`EXACT_MAX_N`] non-zero pairs the p-value
/// comes from the exact sign-flip distribution, beyond that from a normal
/// approximation with tie-corrected variance and continuity correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(EvalError::TooFewPairs(a.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(EvalError::AllZeroDifferences);
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).fold(0.0, |acc, (_, r)| acc + r);
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    if n <= EXACT_MAX_N {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let counts = doubled_sum_counts(&doubled);
        let observed = (2.0 * w_plus).round() as usize;
        let denom = 2f64.powi(n as i32);
        let lower = counts[..=observed].iter().sum::<u64>() as f64 / denom;
        let upper = counts[observed..].iter().sum::<u64>() as f64 / denom;
        let p_value = match alternative {
            Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
            Alternative::Less => lower,
            Alternative::Greater => upper,
        };
        return Ok(WilcoxonResult {
            w_plus,
            w_minus,
            n_effective: n,
            p_value,
            mode: WilcoxonMode::Exact,
            alternative,
            z: None,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t.pow(3) - t) as f64).sum::<f64>() / 48.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    let normal = Normal::standard();
    let diff = w_plus - mean;
    let (z, p_value) = match alternative {
        Alternative::TwoSided => {
            let z = ((diff.abs() - 0.5).max(0.0)) / sd;
            (z * diff.signum(), (2.0 * normal.sf(z)).min(1.0))
        }
        Alternative::Greater => {
            let z = (diff - 0.5) / sd;
            (z, normal.sf(z))
        }
        Alternative::Less => {
            let z = (diff + 0.5) / sd;
            (z, normal.cdf(z))
        }
    };
    Ok(WilcoxonResult {
        w_plus,
        w_minus,
        n_effective: n,
        p_value,
        mode: WilcoxonMode::NormalApprox,
        alternative,
        z: Some(z),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPrf {
    pub name: String,
    pub counts: ConfusionCounts,
    pub metrics: Prf,
}

impl NamedPrf {
    pub fn new(name: impl Into<String>, counts: ConfusionCounts) -> Self {
        Self {
            name: name.into(),
            metrics: prf1(&counts),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedWilcoxon {
    pub name: String,
    pub result: WilcoxonResult,
}

/// The machine-readable report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub matrix: DetectionMatrix,
    #[serde(default)]
    pub prf: Vec<NamedPrf>,
    #[serde(default)]
    pub wilcoxon: Vec<NamedWilcoxon>,
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Text rendering: the matrix as percentages with two decimals, one line
/// per (method, temperature), followed by any metric and test sections.
pub fn render_text(report: &Report) -> String {
    let m = &report.matrix;
    let method_w = m
        .rows
        .iter()
        .map(|r| r.method.len())
        .chain(["Rewriting Method".len()])
        .max()
        .unwrap_or(0);
    let col_w: Vec<usize> = m.columns.iter().map(|c| c.len().max(6)).collect();
    let mut out = String::new();
    let _ = write!(out, "{:<method_w$}  {:<11}", "Rewriting Method", "Temperature");
    for (c, w) in m.columns.iter().zip(&col_w) {
        let _ = write!(out, "  {c:>w$}");
    }
    out.push('\n');
    let mut previous: Option<&str> = None;
    for (row, cells) in m.rows.iter().zip(&m.cells) {
        let method = if previous == Some(row.method.as_str()) { "" } else { row.method.as_str() };
        previous = Some(&row.method);
        let _ = write!(out, "{method:<method_w$}  {:<11}", format!("{:.1}", row.temperature));
        for (v, w) in cells.iter().zip(&col_w) {
            let _ = write!(out, "  {:>w$}", pct(*v));
        }
        out.push('\n');
    }
    if !report.prf.is_empty() {
        let name_w = report.prf.iter().map(|p| p.name.len()).chain(["Classifier".len()]).max().unwrap_or(0);
        let _ = writeln!(
            out,
            "\n{:<name_w$}  {:>9}  {:>6}  {:>8}  {:>8}",
            "Classifier", "Precision", "Recall", "F1-Score", "Accuracy"
        );
        for p in &report.prf {
            let m = &p.metrics;
            let _ = writeln!(
                out,
                "{:<name_w$}  {:>9.3}  {:>6.3}  {:>8.3}  {:>8.3}{}",
                p.name,
                m.precision,
                m.recall,
                m.f1,
                m.accuracy,
                if m.degenerate { "  (degenerate)" } else { "" }
            );
        }
    }
    if !report.wilcoxon.is_empty() {
        out.push_str("\nWilcoxon signed-rank\n");
        for w in &report.wilcoxon {
            let r = &w.result;
            let _ = writeln!(
                out,
                "{}: W+={} W-={} n={} p={:.4e} ({:?}, {:?})",
                w.name, r.w_plus, r.w_minus, r.n_effective, r.p_value, r.mode, r.alternative
            );
        }
    }
    out
}

/// Writes `report.txt` and `report.json` under `dir`, returning both paths.
pub fn render_report(report: &Report, dir: &Path) -> Result<(PathBuf, PathBuf), EvalError> {
    std::fs::create_dir_all(dir)?;
    let txt = dir.join("report.txt");
    let json = dir.join("report.json");
    std::fs::write(&txt, render_text(report))?;
    std::fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;
    Ok((txt, json))
}

pub fn load_report(path: &Path) -> Result<Report, EvalError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
