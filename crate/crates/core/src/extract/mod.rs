//! Candidate description fragments.
//!
//! Two extractors feed the same candidate list. The pattern-triggered one
//! looks for sentences where a description pattern matches the term and
//! widens each hit to its paragraph, list, or a window of sentences around
//! it. The structure-triggered one looks for the term as a heading, a
//! definition-list term or link text, and takes the fragment that follows or
//! is pointed to.

mod html;
mod nlp;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use html::extract_html;
pub use nlp::{extract_nlp, extract_nlp_bound};

use crate::corpus::{NormalizedDoc, PageFetcher, Sentence, TagSet, Terminators};

pub const TRIGGER_HEADING: &str = "HEADING";
pub const TRIGGER_ANCHOR: &str = "ANCHOR";
pub const TRIGGER_DTDD: &str = "DTDD";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NLP")]
    Nlp,
    #[serde(rename = "HTML")]
    Html,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Nlp => "NLP",
            Method::Html => "HTML",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NLP" => Ok(Method::Nlp),
            "HTML" => Ok(Method::Html),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub term: String,
    /// Fragment with tag tokens removed.
    pub text: String,
    pub url: String,
    pub method: Method,
    /// Pattern id for [`Method::Nlp`], otherwise `HEADING`, `ANCHOR` or `DTDD`.
    pub trigger: String,
    /// Byte range in the source document's normalized text.
    pub span: (usize, usize),
    pub perplexity: Option<f64>,
}

impl Candidate {
    fn span_len(&self) -> usize {
        self.span.1 - self.span.0
    }

    /// Whether the spans of two candidates from the same page overlap by
    /// more than half of the shorter one.
    pub fn overlaps(&self, other: &Candidate) -> bool {
        if self.url != other.url {
            return false;
        }
        let lo = self.span.0.max(other.span.0);
        let hi = self.span.1.min(other.span.1);
        let shared = hi.saturating_sub(lo);
        2 * shared > self.span_len().min(other.span_len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Sentences in the fallback window; odd.
    pub window_n: usize,
    pub retained_tags: TagSet,
    pub heading_tags: TagSet,
    pub cross_page_anchors: bool,
    pub max_fragment_chars: usize,
    #[serde(skip)]
    pub terminators: Terminators,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            window_n: 3,
            retained_tags: TagSet::default(),
            heading_tags: TagSet::new(["H1", "H2", "H3", "H4", "H5", "H6", "B", "DT"])
                .expect("known tags"),
            cross_page_anchors: false,
            max_fragment_chars: 2000,
            terminators: Terminators::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("window_n must be odd and at least 1, got {0}")]
    Window(usize),
    #[error("max_fragment_chars must be positive")]
    MaxChars,
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_n == 0 || self.window_n % 2 == 0 {
            return Err(ConfigError::Window(self.window_n));
        }
        if self.max_fragment_chars == 0 {
            return Err(ConfigError::MaxChars);
        }
        Ok(())
    }
}

/// Something that kept a structural trigger from producing a candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractIssue {
    pub url: String,
    pub message: String,
}

impl fmt::Display for ExtractIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.url, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub candidates: Vec<Candidate>,
    pub issues: Vec<ExtractIssue>,
}

/// Range of the innermost `tag` element whose content holds `pos`.
fn innermost(doc: &NormalizedDoc, tag: &str, pos: usize) -> Option<Range<usize>> {
    doc.spans_of(tag)
        .filter(|s| s.encloses(pos))
        .max_by_key(|s| s.content_start())
        .map(|s| s.inner())
}

/// Sentence windows are centred on `index` and shifted inward at the edges.
fn centered_window(sentences: &[Sentence], index: usize, n: usize) -> Range<usize> {
    let w = n.min(sentences.len());
    let start = index.saturating_sub((w.saturating_sub(1)) / 2).min(sentences.len() - w);
    sentences[start].start..sentences[start + w - 1].end
}

/// Paragraph, else list, else `None`.
fn block_at(doc: &NormalizedDoc, pos: usize) -> Option<Range<usize>> {
    innermost(doc, "P", pos).or_else(|| innermost(doc, "UL", pos))
}

/// Fragment that starts at `pos`: its paragraph, else its list, else
/// `window_n` sentences from the one holding `pos`.
fn fragment_from(
    doc: &NormalizedDoc,
    sentences: &[Sentence],
    pos: usize,
    window_n: usize,
) -> Option<Range<usize>> {
    if let Some(r) = block_at(doc, pos) {
        return Some(r);
    }
    let first = sentences.partition_point(|s| s.end <= pos);
    if first == sentences.len() {
        return None;
    }
    let last = (first + window_n).min(sentences.len()) - 1;
    Some(pos.max(sentences[first].start)..sentences[last].end)
}

/// Strips tags from `range`, caps it at `max_chars` characters and returns
/// the text with the byte range it really covers.
fn clip(doc: &NormalizedDoc, range: Range<usize>, max_chars: usize) -> Option<(String, (usize, usize))> {
    let (text, map) = doc.plain_mapped(range);
    let mut keep = map.len().min(max_chars);
    while keep > 0 && map[keep - 1].is_empty() {
        keep -= 1;
    }
    if keep == 0 {
        return None;
    }
    let byte_end = text.char_indices().nth(keep).map_or(text.len(), |(i, _)| i);
    let span = (map[0].start, map[keep - 1].end);
    Some((text[..byte_end].to_string(), span))
}

/// Runs both extractors and drops candidates overlapping an earlier one by
/// more than half; pattern hits win over structural ones. Output is ordered
/// by span start.
pub fn extract_all(
    doc: &NormalizedDoc,
    term: &str,
    matchers: &[crate::patterns::CompiledMatcher],
    cfg: &ExtractionConfig,
    fetcher: Option<&dyn PageFetcher>,
) -> Extraction {
    let bound: Vec<_> = matchers.iter().map(|m| m.bind(term)).collect();
    extract_all_bound(doc, term, &bound, cfg, fetcher)
}

/// [`extract_all`] with matchers already bound to the term.
pub fn extract_all_bound(
    doc: &NormalizedDoc,
    term: &str,
    matchers: &[crate::patterns::BoundMatcher],
    cfg: &ExtractionConfig,
    fetcher: Option<&dyn PageFetcher>,
) -> Extraction {
    let nlp = extract_nlp_bound(doc, term, matchers, cfg);
    let html = extract_html(doc, term, cfg, fetcher);
    let mut kept: Vec<Candidate> = Vec::new();
    for c in nlp.into_iter().chain(html.candidates) {
        if !kept.iter().any(|k| k.overlaps(&c)) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| (&a.url, a.span.0).cmp(&(&b.url, b.span.0)));
    Extraction {
        candidates: kept,
        issues: html.issues,
    }
}
