//! Trigram language model used to reject fragments that are not running
//! text, such as menus, link lists and address blocks.

mod io;
mod model;

use std::path::PathBuf;

pub use io::{load_model, read_model, save_model, write_model, MODEL_FORMAT, MODEL_VERSION};
pub use model::{NgramModel, BOS, EOS, ORDER, UNK};

use crate::extract::Candidate;
use crate::text::is_unsegmented_char;

/// Class token for anything containing a digit.
pub const NUM: &str = "<num>";

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training corpus has {0} tokens, need at least {ORDER}")]
    TooFewTokens(u64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

/// Lowercases, splits on whitespace, separates punctuation and maps any
/// word containing a digit to [`NUM`]. Characters of unsegmented scripts
/// become one token each.
pub fn lm_tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<String>| {
        if word.is_empty() {
            return;
        }
        if word.chars().any(|c| c.is_numeric()) {
            tokens.push(NUM.to_string());
            word.clear();
        } else {
            tokens.push(std::mem::take(word));
        }
    };
    for ch in text.chars() {
        if ch.is_whitespace() {
            flush(&mut word, &mut tokens);
        } else if is_unsegmented_char(ch) {
            flush(&mut word, &mut tokens);
            tokens.push(ch.to_lowercase().collect());
        } else if ch.is_alphanumeric() || ch == '_' {
            word.extend(ch.to_lowercase());
        } else {
            flush(&mut word, &mut tokens);
            tokens.push(ch.to_string());
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

/// Trains on plain text with one sentence per line.
pub fn train_lm(text: &str, cutoff: u64) -> Result<NgramModel, LmError> {
    let sentences: Vec<Vec<String>> = text
        .lines()
        .map(lm_tokenize)
        .filter(|s| !s.is_empty())
        .collect();
    NgramModel::train(&sentences, cutoff)
}

/// Token-level perplexity of a fragment.
pub fn text_perplexity(model: &NgramModel, text: &str) -> f64 {
    model.perplexity::<f64, _>(&lm_tokenize(text))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Fragments are kept when their perplexity is strictly below this.
    pub threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { threshold: 1000.0 }
    }
}

impl FilterConfig {
    pub fn new(threshold: f64) -> Option<Self> {
        (threshold > 0.0).then_some(Self { threshold })
    }

    pub fn keeps(&self, perplexity: f64) -> bool {
        perplexity < self.threshold
    }
}

/// Sets every candidate's perplexity.
pub fn score_candidates(cands: &mut [Candidate], model: &NgramModel) {
    for c in cands {
        c.perplexity = Some(text_perplexity(model, &c.text));
    }
}

/// Scores candidates and keeps those under the threshold, in input order.
pub fn filter_candidates(
    mut cands: Vec<Candidate>,
    model: &NgramModel,
    cfg: &FilterConfig,
) -> Vec<Candidate> {
    score_candidates(&mut cands, model);
    cands.retain(|c| c.perplexity.is_some_and(|p| cfg.keeps(p)));
    cands
}
