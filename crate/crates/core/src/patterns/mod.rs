//! Two-slot description patterns.
//!
//! A pattern is a template such as `X is Y.` where `X` stands for the term
//! being described and `Y` for the describing fragment. Patterns are kept in
//! a tab-separated file, compiled to regular expressions per term, and can be
//! mined from encyclopedia-style entries for a human to review.

mod matcher;
mod mining;

use std::collections::HashSet;
use std::fmt;

pub use matcher::{
    compile_pattern, match_term, strip_tag_tokens, BoundMatcher, CompiledMatcher, PlainSentence,
};
pub use mining::{
    chunk_phrases, mine_patterns, parse_candidates, tokenize_for_mining, write_candidates,
    ChunkerConfig, MiningOutcome,
};

/// Slot placeholder for the term.
pub const TERM_SLOT: &str = "X";
/// Slot placeholder for the description.
pub const DESC_SLOT: &str = "Y";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptionPattern {
    pub id: String,
    pub template: String,
    pub language_tag: String,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template must contain the slot `{slot}` exactly once (found {count})")]
    SlotCount { slot: &'static str, count: usize },
    #[error("template has no literal text besides the slots")]
    NoLiteral,
    #[error("pattern id is empty")]
    EmptyId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Segment {
    Literal(String),
    Term,
    Desc,
}

fn is_slot_neighbour(ch: Option<char>) -> bool {
    ch.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits a template into literal runs and slots. `X`/`Y` only count as
/// slots when not glued to other ASCII letters or digits.
pub(crate) fn split_template(template: &str) -> Result<Vec<Segment>, TemplateError> {
    let chars: Vec<char> = template.chars().collect();
    let mut segments = Vec::new();
    let mut literal = String::new();
    let (mut xs, mut ys) = (0, 0);
    for (i, &ch) in chars.iter().enumerate() {
        let standalone = (ch == 'X' || ch == 'Y')
            && !is_slot_neighbour(i.checked_sub(1).map(|j| chars[j]))
            && !is_slot_neighbour(chars.get(i + 1).copied());
        if !standalone {
            literal.push(ch);
            continue;
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(std::mem::take(&mut literal)));
        }
        if ch == 'X' {
            xs += 1;
            segments.push(Segment::Term);
        } else {
            ys += 1;
            segments.push(Segment::Desc);
        }
    }
    if !literal.is_empty() {
        segments.push(Segment::Literal(literal));
    }
    if xs != 1 {
        return Err(TemplateError::SlotCount {
            slot: TERM_SLOT,
            count: xs,
        });
    }
    if ys != 1 {
        return Err(TemplateError::SlotCount {
            slot: DESC_SLOT,
            count: ys,
        });
    }
    let has_literal = segments
        .iter()
        .any(|s| matches!(s, Segment::Literal(l) if !l.trim().is_empty()));
    if !has_literal {
        return Err(TemplateError::NoLiteral);
    }
    Ok(segments)
}

/// Whether a language is written without spaces between words.
pub fn is_unsegmented_language(tag: &str) -> bool {
    let primary = tag.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase();
    matches!(primary.as_str(), "ja" | "zh" | "th" | "lo" | "km" | "my" | "bo")
}

impl DescriptionPattern {
    pub fn new(
        id: impl Into<String>,
        template: impl Into<String>,
        language_tag: impl Into<String>,
    ) -> Result<Self, TemplateError> {
        let pattern = Self {
            id: id.into(),
            template: template.into(),
            language_tag: language_tag.into(),
            enabled: true,
        };
        if pattern.id.trim().is_empty() {
            return Err(TemplateError::EmptyId);
        }
        split_template(&pattern.template)?;
        Ok(pattern)
    }
}

impl fmt::Display for DescriptionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.id, self.template, self.language_tag)
    }
}

/// A line of a pattern file that was not turned into a pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternFile {
    pub patterns: Vec<DescriptionPattern>,
    pub issues: Vec<LineIssue>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pattern file has no valid patterns ({} problem lines)", issues.len())]
pub struct NoPatterns {
    pub issues: Vec<LineIssue>,
}

pub const DEFAULT_LANGUAGE: &str = "en";

/// Parses `id<TAB>template[<TAB>language_tag]` lines. Lines starting with
/// `#` are comments. Duplicate templates keep the first occurrence.
pub fn parse_pattern_file(content: &str) -> Result<PatternFile, NoPatterns> {
    let mut patterns = Vec::new();
    let mut issues = Vec::new();
    let mut templates = HashSet::new();
    let mut ids = HashSet::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            issues.push(LineIssue {
                line,
                message: format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
            });
            continue;
        }
        let language = fields.get(2).map_or(DEFAULT_LANGUAGE, |l| l.trim());
        let pattern = match DescriptionPattern::new(fields[0].trim(), fields[1].trim(), language) {
            Ok(p) => p,
            Err(e) => {
                issues.push(LineIssue {
                    line,
                    message: format!("pattern `{}` rejected: {e}", fields[0].trim()),
                });
                continue;
            }
        };
        if !templates.insert(pattern.template.clone()) {
            issues.push(LineIssue {
                line,
                message: format!("duplicate template `{}` ignored", pattern.template),
            });
            continue;
        }
        if !ids.insert(pattern.id.clone()) {
            issues.push(LineIssue {
                line,
                message: format!("duplicate id `{}` ignored", pattern.id),
            });
            continue;
        }
        patterns.push(pattern);
    }
    if patterns.is_empty() {
        return Err(NoPatterns { issues });
    }
    Ok(PatternFile { patterns, issues })
}

/// Where a pattern matched and what it captured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatch {
    pub pattern_id: String,
    pub sentence_index: usize,
    /// Byte range of the term in the document text.
    pub term_span: (usize, usize),
    pub y_text: String,
}

/// A mined co-occurrence of two phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCandidate {
    /// The phrase holding the `X` slot.
    pub phrase_a: String,
    pub phrase_b: String,
    pub count: u64,
}

/// A chunk of consecutive tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    pub text: String,
    /// Half-open token range.
    pub token_span: (usize, usize),
}
