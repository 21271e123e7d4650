use std::collections::BTreeSet;

use super::{NormalizedDoc, Sentence};

/// Characters that end a sentence.
///
/// ASCII terminators only end a sentence when followed by whitespace, a tag
/// token or the end of the text, so `3.14` and `e.g.` stay in one piece.
/// Other terminators (`。`, `！`, ...) end a sentence wherever they occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Terminators(BTreeSet<char>);

impl Terminators {
    /// Returns `None` for an empty set.
    pub fn new(chars: impl IntoIterator<Item = char>) -> Option<Self> {
        let set: BTreeSet<char> = chars.into_iter().collect();
        (!set.is_empty()).then_some(Self(set))
    }

    pub fn contains(&self, ch: char) -> bool {
        self.0.contains(&ch)
    }
}

impl Default for Terminators {
    fn default() -> Self {
        Self(['.', '!', '?', '。', '！', '？'].into_iter().collect())
    }
}

fn is_closer(ch: char) -> bool {
    matches!(ch, '"' | '\'' | ')' | ']' | '”' | '’' | '」' | '』' | '）')
}

/// Splits a document into sentences. Tag tokens never break a sentence and
/// are never cut; sentences start and end on content characters.
pub fn segment_sentences(doc: &NormalizedDoc, terminators: &Terminators) -> Vec<Sentence> {
    let text = doc.text.as_str();
    let mut sentences = Vec::new();
    let mut start: Option<usize> = None;
    let mut last_end = 0;
    let mut pos = 0;

    let push = |sentences: &mut Vec<Sentence>, s: usize, e: usize| {
        sentences.push(Sentence {
            text: text[s..e].to_string(),
            start: s,
            end: e,
        });
    };

    while pos < text.len() {
        if let Some(tok) = doc.token_at(pos) {
            pos = tok.end;
            continue;
        }
        let ch = text[pos..].chars().next().unwrap();
        let len = ch.len_utf8();
        if ch.is_whitespace() {
            pos += len;
            continue;
        }
        start.get_or_insert(pos);
        last_end = pos + len;
        pos += len;
        if !terminators.contains(ch) {
            continue;
        }
        // Absorb further terminators and closing quotes/brackets.
        let mut ascii_run = ch.is_ascii();
        while let Some(next) = text[pos..].chars().next() {
            if doc.token_at(pos).is_some() {
                break;
            }
            if terminators.contains(next) || is_closer(next) {
                ascii_run &= next.is_ascii();
                pos += next.len_utf8();
                last_end = pos;
            } else {
                break;
            }
        }
        let at_boundary = match text[pos..].chars().next() {
            None => true,
            Some(next) => next.is_whitespace() || doc.token_at(pos).is_some(),
        };
        if !ascii_run || at_boundary {
            push(&mut sentences, start.take().unwrap(), last_end);
        }
    }
    if let Some(s) = start {
        push(&mut sentences, s, last_end);
    }
    sentences
}
