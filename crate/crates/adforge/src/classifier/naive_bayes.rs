//! Multinomial naive Bayes over raw term counts with add-alpha smoothing.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesConfig {
    /// Laplace smoothing; must be positive.
    pub alpha: f64,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

/// Class 0 is "no ad", class 1 is "ad".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    pub log_prior: [f64; 2],
    pub log_likelihood: Vec<[f64; 2]>,
}

impl NaiveBayesParams {
    /// `docs` holds (sorted term counts, is_ad) pairs over a `dim`-term vocabulary.
    pub fn fit(docs: &[(Vec<(u32, u32)>, bool)], dim: usize, alpha: f64) -> Self {
        let mut class_docs = [0usize; 2];
        let mut counts = vec![[0u64; 2]; dim];
        let mut totals = [0u64; 2];
        for (terms, ad) in docs {
            let c = usize::from(*ad);
            class_docs[c] += 1;
            for &(i, n) in terms {
                counts[i as usize][c] += u64::from(n);
                totals[c] += u64::from(n);
            }
        }
        let n = docs.len() as f64;
        let log_prior = [
            (class_docs[0] as f64 / n).ln(),
            (class_docs[1] as f64 / n).ln(),
        ];
        let denom = [
            (totals[0] as f64 + alpha * dim as f64).ln(),
            (totals[1] as f64 + alpha * dim as f64).ln(),
        ];
        let log_likelihood = counts
            .iter()
            .map(|c| {
                [
                    (c[0] as f64 + alpha).ln() - denom[0],
                    (c[1] as f64 + alpha).ln() - denom[1],
                ]
            })
            .collect();
        Self {
            log_prior,
            log_likelihood,
        }
    }

    /// Posterior probability of the ad class.
    pub fn posterior_ad(&self, terms: &[(u32, u32)]) -> f64 {
        let mut joint = self.log_prior;
        for &(i, n) in terms {
            let ll = self.log_likelihood[i as usize];
            joint[0] += n as f64 * ll[0];
            joint[1] += n as f64 * ll[1];
        }
        // softmax over two classes
        let m = joint[0].max(joint[1]);
        let e0 = (joint[0] - m).exp();
        let e1 = (joint[1] - m).exp();
        e1 / (e0 + e1)
    }
}
