use std::collections::HashMap;

use super::LmError;
use crate::Scalar;

pub const ORDER: usize = 3;
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub(crate) const BOS_ID: u32 = 0;
pub(crate) const EOS_ID: u32 = 1;
pub(crate) const UNK_ID: u32 = 2;

/// Count and number of distinct continuations of a history.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct ContextStats {
    pub total: u64,
    pub distinct: u64,
}

/// Trigram model with interpolated Witten-Bell smoothing.
///
/// Each level mixes its maximum-likelihood estimate with the level below,
/// weighting the ML part by `c(h) / (c(h) + d(h))` where `c(h)` is how often
/// the history was seen and `d(h)` how many distinct words followed it. The
/// unigram level is add-one smoothed over the predictable vocabulary (every
/// token except `<s>`).
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub(crate) cutoff: u64,
    pub(crate) vocab: Vec<String>,
    pub(crate) index: HashMap<String, u32>,
    pub(crate) unigrams: Vec<u64>,
    pub(crate) bigrams: HashMap<(u32, u32), u64>,
    pub(crate) trigrams: HashMap<(u32, u32, u32), u64>,
    pub(crate) total: u64,
    ctx1: HashMap<u32, ContextStats>,
    ctx2: HashMap<(u32, u32), ContextStats>,
}

fn is_reserved(token: &str) -> bool {
    matches!(token, BOS | EOS | UNK)
}

impl NgramModel {
    /// Trains on tokenized sentences. Tokens seen fewer than `cutoff` times
    /// are replaced by `<unk>` before counting.
    pub fn train<S: AsRef<str>>(sentences: &[Vec<S>], cutoff: u64) -> Result<Self, LmError> {
        let mut raw: HashMap<&str, u64> = HashMap::new();
        for sentence in sentences {
            for token in sentence {
                *raw.entry(token.as_ref()).or_default() += 1;
            }
        }
        let n_tokens: u64 = raw.values().sum();
        if n_tokens == 0 {
            return Err(LmError::EmptyCorpus);
        }
        if n_tokens < ORDER as u64 {
            return Err(LmError::TooFewTokens(n_tokens));
        }

        let mut kept: Vec<&str> = raw
            .iter()
            .filter(|(t, &c)| c >= cutoff && !is_reserved(t))
            .map(|(t, _)| *t)
            .collect();
        kept.sort_unstable();
        let vocab: Vec<String> = [BOS, EOS, UNK]
            .into_iter()
            .chain(kept)
            .map(str::to_string)
            .collect();

        let mut model = Self::empty(cutoff, vocab);
        for sentence in sentences {
            let ids: Vec<u32> = std::iter::repeat(BOS_ID)
                .take(ORDER - 1)
                .chain(sentence.iter().map(|t| model.train_id(t.as_ref())))
                .chain(std::iter::once(EOS_ID))
                .collect();
            for w in ids.windows(ORDER) {
                model.unigrams[w[2] as usize] += 1;
                *model.bigrams.entry((w[1], w[2])).or_default() += 1;
                *model.trigrams.entry((w[0], w[1], w[2])).or_default() += 1;
            }
        }
        model.finish();
        Ok(model)
    }

    pub(crate) fn empty(cutoff: u64, vocab: Vec<String>) -> Self {
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            cutoff,
            unigrams: vec![0; vocab.len()],
            vocab,
            index,
            bigrams: HashMap::new(),
            trigrams: HashMap::new(),
            total: 0,
            ctx1: HashMap::new(),
            ctx2: HashMap::new(),
        }
    }

    /// Recomputes totals and history statistics from the raw counts.
    pub(crate) fn finish(&mut self) {
        self.total = self.unigrams.iter().sum();
        self.ctx1.clear();
        self.ctx2.clear();
        for (&(h, _), &c) in &self.bigrams {
            let s = self.ctx1.entry(h).or_default();
            s.total += c;
            s.distinct += 1;
        }
        for (&(h2, h1, _), &c) in &self.trigrams {
            let s = self.ctx2.entry((h2, h1)).or_default();
            s.total += c;
            s.distinct += 1;
        }
    }

    pub fn order(&self) -> usize {
        ORDER
    }

    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    /// All tokens including `<s>`, `</s>` and `<unk>`.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Number of tokens a prediction can produce (vocabulary minus `<s>`).
    pub fn prediction_vocab_size(&self) -> usize {
        self.vocab.len() - 1
    }

    /// Number of predicted positions seen in training (tokens plus `</s>`).
    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    fn train_id(&self, token: &str) -> u32 {
        if is_reserved(token) {
            UNK_ID
        } else {
            self.id(token)
        }
    }

    /// Vocabulary id, `<unk>` for unknown tokens.
    pub(crate) fn id(&self, token: &str) -> u32 {
        match self.index.get(token) {
            Some(&id) => id,
            None => UNK_ID,
        }
    }

    pub(crate) fn unigram_prob<T: Scalar>(&self, w: u32) -> T {
        let c = self.unigrams.get(w as usize).copied().unwrap_or(0);
        T::from_count(c + 1) / T::from_count(self.total + self.prediction_vocab_size() as u64)
    }

    pub(crate) fn bigram_prob<T: Scalar>(&self, h1: u32, w: u32) -> T {
        let lower = self.unigram_prob::<T>(w);
        match self.ctx1.get(&h1) {
            Some(s) => {
                let c = self.bigrams.get(&(h1, w)).copied().unwrap_or(0);
                interpolate(*s, c, lower)
            }
            None => lower,
        }
    }

    pub(crate) fn trigram_prob<T: Scalar>(&self, h2: u32, h1: u32, w: u32) -> T {
        let lower = self.bigram_prob::<T>(h1, w);
        match self.ctx2.get(&(h2, h1)) {
            Some(s) => {
                let c = self.trigrams.get(&(h2, h1, w)).copied().unwrap_or(0);
                interpolate(*s, c, lower)
            }
            None => lower,
        }
    }

    /// `p(word | context)` where `context` holds the two preceding tokens,
    /// oldest first. Unknown tokens are read as `<unk>`, and so is `<s>` in
    /// the word position.
    pub fn prob<T: Scalar>(&self, context: [&str; 2], word: &str) -> T {
        let w = if word == BOS { UNK_ID } else { self.id(word) };
        self.trigram_prob(self.id(context[0]), self.id(context[1]), w)
    }

    /// Natural-log probability of `tokens` followed by `</s>`, starting
    /// from two `<s>`.
    pub fn sequence_log_prob<T: Scalar, S: AsRef<str>>(&self, tokens: &[S]) -> T {
        let mut h2 = BOS_ID;
        let mut h1 = BOS_ID;
        let mut sum = T::zero();
        for w in tokens
            .iter()
            .map(|t| self.train_id(t.as_ref()))
            .chain(std::iter::once(EOS_ID))
        {
            sum = sum + self.trigram_prob::<T>(h2, h1, w).ln();
            h2 = h1;
            h1 = w;
        }
        sum
    }

    /// `exp(-log p / M)` with `M` the number of tokens plus one for `</s>`.
    pub fn perplexity<T: Scalar, S: AsRef<str>>(&self, tokens: &[S]) -> T {
        let m = T::from_usize(tokens.len() + 1).unwrap();
        (-self.sequence_log_prob::<T, S>(tokens) / m).exp()
    }
}

fn interpolate<T: Scalar>(history: ContextStats, count: u64, lower: T) -> T {
    let c = T::from_count(history.total);
    let d = T::from_count(history.distinct);
    let lambda = c / (c + d);
    lambda * T::from_count(count) / c + (T::one() - lambda) * lower
}
