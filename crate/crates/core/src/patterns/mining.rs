use std::collections::{HashMap, HashSet};

use super::matcher::term_regex;
use super::{LineIssue, PatternCandidate, Phrase, TERM_SLOT};
use crate::corpus::{segment_sentences, NormalizedDoc, Terminators};
use crate::text::term_key;

const DEFAULT_FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "was", "were", "be", "been", "being", "am", "of", "in", "on",
    "at", "as", "to", "for", "by", "with", "from", "into", "and", "or", "but", "that", "which",
    "who", "whose", "this", "these", "those", "it", "its", "not", "can", "may", "will", "would",
    "should", "could", "has", "have", "had", "do", "does", "did", "than", "such",
];

/// Penn Treebank and Universal POS tags treated as function words.
const DEFAULT_FUNCTION_TAGS: &[&str] = &[
    "DT", "PDT", "IN", "TO", "CC", "MD", "POS", "RP", "WDT", "EX", "DET", "ADP", "AUX", "CCONJ",
    "SCONJ", "PART",
];

const DEFAULT_PUNCT_TAGS: &[&str] = &[
    ".", ",", ":", ";", "``", "''", "(", ")", "-LRB-", "-RRB-", "#", "$", "HYPH", "NFP", "PUNCT",
    "SYM",
];

/// Decides which tokens attach to the phrase before them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkerConfig {
    pub function_words: HashSet<String>,
    pub function_tags: HashSet<String>,
    pub punct_tags: HashSet<String>,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        let set = |words: &[&str]| words.iter().map(|w| w.to_string()).collect();
        Self {
            function_words: set(DEFAULT_FUNCTION_WORDS),
            function_tags: set(DEFAULT_FUNCTION_TAGS),
            punct_tags: set(DEFAULT_PUNCT_TAGS),
        }
    }
}

impl ChunkerConfig {
    pub fn with_function_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            function_words: words.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }
}

fn is_punct_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TokenClass {
    Content,
    Function,
    Punct,
}

/// Groups tokens into phrases: a run of content tokens followed by the
/// function tokens attached to it. Punctuation tokens form phrases of
/// their own.
///
/// # Panics
///
/// If `pos_tags` is given with a different length than `tokens`.
pub fn chunk_phrases(tokens: &[String], pos_tags: Option<&[String]>, cfg: &ChunkerConfig) -> Vec<Phrase> {
    if let Some(tags) = pos_tags {
        assert_eq!(tags.len(), tokens.len(), "POS tags must align with tokens");
    }
    let class = |i: usize| -> TokenClass {
        match pos_tags {
            Some(tags) if cfg.punct_tags.contains(&tags[i]) => TokenClass::Punct,
            Some(tags) if cfg.function_tags.contains(&tags[i]) => TokenClass::Function,
            Some(_) => TokenClass::Content,
            None if is_punct_token(&tokens[i]) => TokenClass::Punct,
            None if cfg.function_words.contains(&tokens[i].to_lowercase()) => TokenClass::Function,
            None => TokenClass::Content,
        }
    };

    let mut phrases = Vec::new();
    let mut start = 0;
    let mut prev: Option<TokenClass> = None;
    let flush = |phrases: &mut Vec<Phrase>, from: usize, to: usize| {
        if from < to {
            phrases.push(Phrase {
                text: tokens[from..to].join(" "),
                token_span: (from, to),
            });
        }
    };
    for i in 0..tokens.len() {
        let c = class(i);
        let breaks = match (prev, c) {
            (None, _) => false,
            (_, TokenClass::Punct) => true,
            (Some(TokenClass::Punct), _) => true,
            (Some(TokenClass::Function), TokenClass::Content) => true,
            _ => false,
        };
        if breaks {
            flush(&mut phrases, start, i);
            start = i;
        }
        prev = Some(c);
    }
    flush(&mut phrases, start, tokens.len());
    phrases
}

/// Whitespace split with punctuation isolated. Everything is lowercased
/// except the slot token `X`.
pub fn tokenize_for_mining(sentence: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let push = |word: &mut String, tokens: &mut Vec<String>| {
        if !word.is_empty() {
            let w = std::mem::take(word);
            tokens.push(if w == TERM_SLOT { w } else { w.to_lowercase() });
        }
    };
    for chunk in sentence.split_whitespace() {
        let mut word = String::new();
        for ch in chunk.chars() {
            if ch.is_alphanumeric() || ch == '_' {
                word.push(ch);
            } else {
                push(&mut word, &mut tokens);
                tokens.push(ch.to_string());
            }
        }
        push(&mut word, &mut tokens);
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiningOutcome {
    pub candidates: Vec<PatternCandidate>,
    /// Entries whose headword was in the lexicon.
    pub entries_used: usize,
    pub warning: Option<String>,
}

/// Counts co-occurring phrase pairs in which one phrase holds the headword.
///
/// Entries whose headword is not in `lexicon` are ignored. The headword is
/// replaced by the slot `X` before tokenization, and pairs are counted once
/// per sentence and pair of phrase positions. Punctuation-only phrases do not
/// take part.
pub fn mine_patterns(
    entries: &[(String, String)],
    lexicon: &HashSet<String>,
    top_k: usize,
    cfg: &ChunkerConfig,
) -> MiningOutcome {
    let lexicon: HashSet<String> = lexicon.iter().map(|t| term_key(t)).collect();
    let terminators = Terminators::default();
    let mut counts: HashMap<(String, String), u64> = HashMap::new();
    let mut used = 0;

    for (headword, description) in entries {
        if !lexicon.contains(&term_key(headword)) || headword.trim().is_empty() {
            continue;
        }
        used += 1;
        let slotted = term_regex(headword, false).replace_all(description, TERM_SLOT);
        let doc = NormalizedDoc::from_plain("", &slotted);
        for sentence in segment_sentences(&doc, &terminators) {
            let tokens = tokenize_for_mining(&sentence.text);
            let phrases: Vec<(String, bool)> = chunk_phrases(&tokens, None, cfg)
                .into_iter()
                .filter(|p| !tokens[p.token_span.0..p.token_span.1].iter().all(|t| is_punct_token(t)))
                .map(|p| {
                    let has_slot = tokens[p.token_span.0..p.token_span.1].iter().any(|t| t == TERM_SLOT);
                    (p.text, has_slot)
                })
                .collect();
            for i in 0..phrases.len() {
                for j in i + 1..phrases.len() {
                    let key = match (phrases[i].1, phrases[j].1) {
                        (true, _) => (phrases[i].0.clone(), phrases[j].0.clone()),
                        (false, true) => (phrases[j].0.clone(), phrases[i].0.clone()),
                        (false, false) => continue,
                    };
                    *counts.entry(key).or_default() += 1;
                }
            }
        }
    }

    let warning = if entries.is_empty() {
        Some("no entries given".to_string())
    } else if used == 0 {
        Some("no entry headword is in the lexicon".to_string())
    } else {
        None
    };

    let mut candidates: Vec<PatternCandidate> = counts
        .into_iter()
        .map(|((phrase_a, phrase_b), count)| PatternCandidate {
            phrase_a,
            phrase_b,
            count,
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.phrase_a.cmp(&b.phrase_a))
            .then_with(|| a.phrase_b.cmp(&b.phrase_b))
    });
    candidates.truncate(top_k);
    MiningOutcome {
        candidates,
        entries_used: used,
        warning,
    }
}

/// Renders candidates as `count<TAB>phrase_a<TAB>phrase_b` lines.
pub fn write_candidates(candidates: &[PatternCandidate]) -> String {
    candidates
        .iter()
        .map(|c| format!("{}\t{}\t{}\n", c.count, c.phrase_a, c.phrase_b))
        .collect()
}

pub fn parse_candidates(content: &str) -> Result<Vec<PatternCandidate>, LineIssue> {
    let mut out = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| LineIssue {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let count = fields[0]
            .parse::<u64>()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| bad(format!("invalid count `{}`", fields[0])))?;
        out.push(PatternCandidate {
            phrase_a: fields[1].to_string(),
            phrase_b: fields[2].to_string(),
            count,
        });
    }
    Ok(out)
}
