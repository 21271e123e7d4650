use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;

use super::{is_unsegmented_language, split_template, DescriptionPattern, PatternMatch, Segment};
use crate::corpus::{NormalizedDoc, Sentence};
use crate::text::collapse_whitespace;

const DETERMINERS: &str = "(?:(?:a|an|the)\\s+)?";

/// A validated pattern, ready to be bound to a term.
#[derive(Debug, Clone)]
pub struct CompiledMatcher {
    pattern: DescriptionPattern,
    before: Vec<Segment>,
    after: Vec<Segment>,
    unsegmented: bool,
}

/// A matcher specialised to one term.
#[derive(Debug, Clone)]
pub struct BoundMatcher {
    pattern_id: String,
    enabled: bool,
    term: Regex,
    before: Regex,
    after: Regex,
    desc_before: bool,
}

/// Sentence text with tag tokens removed, mapped back to document offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainSentence {
    pub index: usize,
    pub text: String,
    /// For every byte offset where a char of `text` starts: the document
    /// range it came from.
    map: Vec<(usize, Range<usize>)>,
}

impl PlainSentence {
    pub fn from_doc(doc: &NormalizedDoc, index: usize, sentence: &Sentence) -> Self {
        let (text, ranges) = doc.plain_mapped(sentence.range());
        Self::from_parts(index, text, ranges)
    }

    fn from_parts(index: usize, text: String, ranges: Vec<Range<usize>>) -> Self {
        let map = text.char_indices().map(|(b, _)| b).zip(ranges).collect();
        Self { index, text, map }
    }

    fn source_range(&self, plain: Range<usize>) -> (usize, usize) {
        let lookup = |b: usize| {
            let i = self.map.partition_point(|(o, _)| *o < b);
            &self.map[i].1
        };
        let first = lookup(plain.start);
        let last_char_start = self.text[..plain.end]
            .char_indices()
            .next_back()
            .map_or(plain.start, |(b, _)| b);
        let last = lookup(last_char_start);
        (first.start, last.end.max(first.start))
    }
}

fn tag_token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"</?(?:P|UL|LI|H[1-6]|B|DT|DD|A)>").unwrap())
}

/// Removes normalized tag tokens from a sentence taken out of its document.
/// Block tags turn into a space when they separate words.
pub fn strip_tag_tokens(sentence: &Sentence, index: usize) -> PlainSentence {
    let text = sentence.text.as_str();
    let mut out = String::new();
    let mut ranges = Vec::new();
    let mut need_space = false;
    let mut last = 0;
    let push_run = |out: &mut String, ranges: &mut Vec<_>, run: Range<usize>, need_space: &mut bool| {
        for (off, ch) in text[run.clone()].char_indices() {
            let at = sentence.start + run.start + off;
            if ch.is_whitespace() {
                *need_space = true;
                continue;
            }
            if *need_space && !out.is_empty() {
                out.push(' ');
                ranges.push(at..at);
            }
            *need_space = false;
            out.push(ch);
            ranges.push(at..at + ch.len_utf8());
        }
    };
    for m in tag_token_regex().find_iter(text) {
        push_run(&mut out, &mut ranges, last..m.start(), &mut need_space);
        let tag = m.as_str().trim_matches(|c| c == '<' || c == '>' || c == '/');
        if !matches!(tag, "A" | "B") {
            need_space = true;
        }
        last = m.end();
    }
    push_run(&mut out, &mut ranges, last..text.len(), &mut need_space);
    PlainSentence::from_parts(index, out, ranges)
}

impl CompiledMatcher {
    pub fn id(&self) -> &str {
        &self.pattern.id
    }

    pub fn pattern(&self) -> &DescriptionPattern {
        &self.pattern
    }

    /// Compiles the regular expressions for `term`.
    pub fn bind(&self, term: &str) -> BoundMatcher {
        let term_re = term_regex(term, self.unsegmented);

        let gap = if self.unsegmented { r"\s*" } else { r"\s+" };
        let determiner = if self.unsegmented { "" } else { DETERMINERS };
        let before = format!("(?i){}{determiner}$", segments_regex(&self.before, gap));
        let after = format!("(?i)^{}", segments_regex(&self.after, gap));
        BoundMatcher {
            pattern_id: self.pattern.id.clone(),
            enabled: self.pattern.enabled,
            term: term_re,
            before: Regex::new(&before).expect("template regex"),
            after: Regex::new(&after).expect("template regex"),
            desc_before: self.before.contains(&Segment::Desc),
        }
    }
}

/// Case-insensitive regex finding `term` as a whole word (or anywhere, for
/// unsegmented scripts). Whitespace inside the term is collapsed first.
pub(crate) fn term_regex(term: &str, unsegmented: bool) -> Regex {
    let term = collapse_whitespace(term);
    let escaped = regex::escape(&term);
    let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    let (lead, trail) = if unsegmented {
        ("", "")
    } else {
        (
            if word(term.chars().next()) { r"\b" } else { "" },
            if word(term.chars().last()) { r"\b" } else { "" },
        )
    };
    Regex::new(&format!("(?i){lead}{escaped}{trail}")).expect("escaped term")
}

fn segments_regex(segments: &[Segment], gap: &str) -> String {
    let mut re = String::new();
    for seg in segments {
        match seg {
            Segment::Desc => re.push_str("(?P<y>.+)"),
            Segment::Term => unreachable!("term slot splits the template"),
            Segment::Literal(lit) => {
                let mut run = String::new();
                let mut in_space = false;
                for ch in lit.chars() {
                    if ch.is_whitespace() {
                        if !in_space {
                            re.push_str(&regex::escape(&std::mem::take(&mut run)));
                            re.push_str(gap);
                        }
                        in_space = true;
                    } else {
                        in_space = false;
                        run.push(ch);
                    }
                }
                re.push_str(&regex::escape(&run));
            }
        }
    }
    re
}

/// Validates a pattern and splits it around the term slot.
pub fn compile_pattern(pattern: &DescriptionPattern) -> Result<CompiledMatcher, super::TemplateError> {
    let segments = split_template(&pattern.template)?;
    let x = segments.iter().position(|s| *s == Segment::Term).unwrap();
    Ok(CompiledMatcher {
        before: segments[..x].to_vec(),
        after: segments[x + 1..].to_vec(),
        unsegmented: is_unsegmented_language(&pattern.language_tag),
        pattern: pattern.clone(),
    })
}

impl TryFrom<&DescriptionPattern> for CompiledMatcher {
    type Error = super::TemplateError;

    fn try_from(p: &DescriptionPattern) -> Result<Self, Self::Error> {
        compile_pattern(p)
    }
}

impl BoundMatcher {
    pub fn pattern_id(&self) -> &str {
        &self.pattern_id
    }

    /// Tries every occurrence of the term from the left and returns the
    /// first one where the whole template matches.
    pub fn find(&self, sentence: &PlainSentence) -> Option<PatternMatch> {
        if !self.enabled {
            return None;
        }
        let text = sentence.text.as_str();
        for occ in self.term.find_iter(text) {
            let head = &text[..occ.start()];
            let tail = &text[occ.end()..];
            let Some(before) = self.before.captures(head) else {
                continue;
            };
            let Some(after) = self.after.captures(tail) else {
                continue;
            };
            let (caps, offset) = if self.desc_before {
                (before, 0)
            } else {
                (after, occ.end())
            };
            let y = caps.name("y").expect("template has a Y slot");
            let raw = y.as_str();
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            let lead = raw.len() - raw.trim_start().len();
            let y_start = offset + y.start() + lead;
            debug_assert!(y_start + trimmed.len() <= occ.start() || y_start >= occ.end());
            return Some(PatternMatch {
                pattern_id: self.pattern_id.clone(),
                sentence_index: sentence.index,
                term_span: sentence.source_range(occ.range()),
                y_text: trimmed.to_string(),
            });
        }
        None
    }
}

/// Matches `term` against one sentence with every enabled pattern. At most
/// one match per pattern is returned, in pattern order.
pub fn match_term(
    sentence: &Sentence,
    sentence_index: usize,
    term: &str,
    matchers: &[CompiledMatcher],
) -> Vec<PatternMatch> {
    if term.trim().is_empty() {
        return Vec::new();
    }
    let plain = strip_tag_tokens(sentence, sentence_index);
    matchers
        .iter()
        .filter(|m| m.pattern.enabled)
        .filter_map(|m| m.bind(term).find(&plain))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matcher(template: &str) -> CompiledMatcher {
        compile_pattern(&DescriptionPattern::new("p", template, "en").unwrap()).unwrap()
    }

    fn sentence(text: &str) -> Sentence {
        Sentence {
            text: text.to_string(),
            start: 0,
            end: text.len(),
        }
    }

    fn y(template: &str, text: &str, term: &str) -> Option<String> {
        match_term(&sentence(text), 0, term, &[matcher(template)])
            .pop()
            .map(|m| m.y_text)
    }

    #[test]
    fn x_is_y() {
        assert_eq!(
            y("X is Y.", "A thesaurus is a controlled vocabulary.", "thesaurus").as_deref(),
            Some("a controlled vocabulary")
        );
    }

    #[test]
    fn reversed_slots() {
        assert_eq!(
            y("Y is called X.", "This layout is called a ring network.", "ring network").as_deref(),
            Some("This layout")
        );
    }

    #[test]
    fn data_mining_sentence() {
        let text = "data mining is a process that collects data for a certain task, and retrieves relations latent in the data.";
        let got = match_term(&sentence(text), 3, "data mining", &[matcher("X is Y.")]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].sentence_index, 3);
        assert_eq!(got[0].term_span, (0, 11));
        assert_eq!(
            got[0].y_text,
            "a process that collects data for a certain task, and retrieves relations latent in the data"
        );
    }

    #[test]
    fn metacharacters_escaped() {
        assert_eq!(
            y("X is Y.", "C++ is a programming language.", "C++").as_deref(),
            Some("a programming language")
        );
        assert_eq!(y("X is Y.", "CCC is a thing.", "C++"), None);
        assert_eq!(y("X is Y.", "a.b is fine.", "a*b"), None);
    }

    #[test]
    fn term_required() {
        assert_eq!(y("X is Y.", "Nothing to see here is there.", "thesaurus"), None);
    }

    #[test]
    fn literal_required() {
        assert_eq!(y("X is defined as Y.", "A thesaurus is a list.", "thesaurus"), None);
    }

    #[test]
    fn case_insensitive_and_flexible_space() {
        assert_eq!(
            y("X is defined as Y.", "THESAURUS  IS DEFINED\tAS a list.", "thesaurus").as_deref(),
            Some("a list")
        );
    }

    #[test]
    fn term_must_be_whole_word() {
        assert_eq!(y("X is Y.", "The thesauruses is a list.", "thesaurus"), None);
    }

    #[test]
    fn leftmost_term_occurrence_wins() {
        let text = "A thesaurus is a list and another thesaurus is a set.";
        let got = match_term(&sentence(text), 0, "thesaurus", &[matcher("X is Y.")]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].term_span, (2, 11));
        assert_eq!(got[0].y_text, "a list and another thesaurus is a set");
    }

    #[test]
    fn tag_tokens_ignored() {
        let text = "A <B>thesaurus</B> is a <A>word</A> list.";
        let got = match_term(&sentence(text), 0, "thesaurus", &[matcher("X is Y.")]);
        assert_eq!(got[0].y_text, "a word list");
        assert_eq!(&text[got[0].term_span.0..got[0].term_span.1], "thesaurus");
    }

    #[test]
    fn one_match_per_pattern() {
        let ms = [matcher("X is Y."), matcher("X is defined as Y.")];
        let got = match_term(&sentence("A graph is defined as a pair."), 0, "graph", &ms);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].y_text, "defined as a pair");
        assert_eq!(got[1].y_text, "a pair");
    }

    #[test]
    fn disabled_patterns_skipped() {
        let mut m = matcher("X is Y.");
        m.pattern.enabled = false;
        assert!(match_term(&sentence("A graph is a pair."), 0, "graph", &[m]).is_empty());
    }

    #[test]
    fn unsegmented_language() {
        let m = compile_pattern(&DescriptionPattern::new("ja1", "XとはYである。", "ja").unwrap()).unwrap();
        let got = match_term(&sentence("データマイニングとは知識発見の手法である。"), 0, "データマイニング", &[m]);
        assert_eq!(got[0].y_text, "知識発見の手法");
    }
}
