//! Grouping a term's descriptions and picking one representative per group.
//!
//! Descriptions become bags of content words, are merged bottom-up with
//! group-average linkage over cosine similarity, and the resulting tree is
//! cut into `k` clusters. Each cluster is represented by its medoid.

mod agglomerate;

use std::collections::{BTreeMap, HashSet};

pub use agglomerate::{agglomerate, cut_and_represent, similarity_matrix, Cluster, Dendrogram, Merge};

use crate::langmodel::{lm_tokenize, NUM};
use crate::text::is_unsegmented_char;
use crate::Scalar;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_MIN_TOKEN_LEN: usize = 2;

/// Word counts of one description. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    weights: BTreeMap<String, u64>,
}

impl FeatureVector {
    /// `None` when there are no positive counts.
    pub fn from_counts<I, S>(counts: I) -> Option<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut weights = BTreeMap::new();
        for (token, count) in counts {
            if count > 0 {
                *weights.entry(token.into()).or_insert(0) += count;
            }
        }
        (!weights.is_empty()).then_some(Self { weights })
    }

    pub fn weights(&self) -> &BTreeMap<String, u64> {
        &self.weights
    }

    pub fn get(&self, token: &str) -> u64 {
        self.weights.get(token).copied().unwrap_or(0)
    }

    fn norm<T: Scalar>(&self) -> T {
        self.weights
            .values()
            .map(|&c| T::from_count(c) * T::from_count(c))
            .sum::<T>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("description has no content words left after filtering")]
pub struct Unvectorizable;

/// Lowercased stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(content: &str) -> Self {
        Self::new(content.lines().filter(|l| !l.trim_start().starts_with('#')))
    }

    /// A short list of English function words.
    pub fn english() -> Self {
        Self::new(ENGLISH_STOPWORDS.split_whitespace())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

const ENGLISH_STOPWORDS: &str = "a about above after again all also am an and any are as at be \
    because been before being between both but by can could did do does doing down during each \
    few for from further had has have having he her here hers him his how i if in into is it its \
    itself just me more most my no nor not now of off on once only or other our ours out over own \
    same she should so some such than that the their theirs them then there these they this those \
    through to too under until up very was we were what when where which while who whom why will \
    with would you your yours";

fn is_content_token(token: &str, stopwords: &Stopwords, min_len: usize) -> bool {
    if token == NUM || stopwords.contains(token) {
        return false;
    }
    if !token.chars().any(char::is_alphanumeric) {
        return false;
    }
    let unsegmented = token.chars().all(is_unsegmented_char);
    unsegmented || token.chars().count() >= min_len
}

/// Counts the content words of a description: [`lm_tokenize`] output minus
/// stopwords, punctuation, numbers and tokens shorter than `min_token_len`
/// characters. Single characters of unsegmented scripts are always kept.
pub fn vectorize(
    text: &str,
    stopwords: &Stopwords,
    min_token_len: usize,
) -> Result<FeatureVector, Unvectorizable> {
    let tokens = lm_tokenize(text);
    let counts = tokens
        .into_iter()
        .filter(|t| is_content_token(t, stopwords, min_token_len))
        .map(|t| (t, 1));
    FeatureVector::from_counts(counts).ok_or(Unvectorizable)
}

/// Cosine of two count vectors, in `[0, 1]`.
pub fn cosine<T: Scalar>(u: &FeatureVector, v: &FeatureVector) -> T {
    let (small, large) = if u.weights.len() <= v.weights.len() {
        (u, v)
    } else {
        (v, u)
    };
    let dot: T = small
        .weights
        .iter()
        .map(|(t, &c)| T::from_count(c) * T::from_count(large.get(t)))
        .sum();
    let sim = dot / (u.norm::<T>() * v.norm::<T>());
    sim.max(T::zero()).min(T::one())
}
