use super::{block_at, centered_window, clip, Candidate, ExtractionConfig, Method};
use crate::corpus::{segment_sentences, NormalizedDoc};
use crate::patterns::{BoundMatcher, CompiledMatcher, PlainSentence};

/// One candidate per sentence matched by any pattern (the first pattern in
/// file order names the trigger), widened to the enclosing paragraph, else
/// the enclosing list, else a window of sentences centred on the match.
pub fn extract_nlp(
    doc: &NormalizedDoc,
    term: &str,
    matchers: &[CompiledMatcher],
    cfg: &ExtractionConfig,
) -> Vec<Candidate> {
    let bound: Vec<_> = matchers.iter().map(|m| m.bind(term)).collect();
    extract_nlp_bound(doc, term, &bound, cfg)
}

pub fn extract_nlp_bound(
    doc: &NormalizedDoc,
    term: &str,
    matchers: &[BoundMatcher],
    cfg: &ExtractionConfig,
) -> Vec<Candidate> {
    if term.trim().is_empty() || matchers.is_empty() {
        return Vec::new();
    }
    let sentences = segment_sentences(doc, &cfg.terminators);
    let mut out: Vec<Candidate> = Vec::new();
    for (i, sentence) in sentences.iter().enumerate() {
        let plain = PlainSentence::from_doc(doc, i, sentence);
        let Some(hit) = matchers.iter().find_map(|m| m.find(&plain)) else {
            continue;
        };
        let range = block_at(doc, hit.term_span.0)
            .unwrap_or_else(|| centered_window(&sentences, i, cfg.window_n));
        let Some((text, span)) = clip(doc, range, cfg.max_fragment_chars) else {
            continue;
        };
        if out.iter().any(|c| c.span == span) {
            continue;
        }
        out.push(Candidate {
            term: term.to_string(),
            text,
            url: doc.url.clone(),
            method: Method::Nlp,
            trigger: hit.pattern_id,
            span,
            perplexity: None,
        });
    }
    out
}
