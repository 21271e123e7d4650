//! Page acquisition and normalization.
//!
//! Pages come from a [`SourceSpec`] (a directory of HTML files, a URL list,
//! or a search-style fetch endpoint) and are normalized into a
//! [`NormalizedDoc`]: one line of text with whitespace collapsed, where the
//! only markup left is the handful of tags the extractors look at, written as
//! bare upper-case tokens like `<P>` and `</P>`.

mod html;
mod sentence;
mod source;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use chrono::{DateTime, Utc};

pub use html::{decode_bytes, normalize};
pub use sentence::{segment_sentences, Terminators};
pub use source::{
    load_source, load_source_with, parse_url_list, FetchError, FetchedPage, HttpFetcher,
    IngestIssue, IngestReport, PageFetcher, SourceError, SourceKind, SourceSpec,
};

/// A page as retrieved, after charset decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPage {
    pub url: String,
    pub content: String,
    pub retrieved_at: DateTime<Utc>,
}

impl RawPage {
    pub fn new(url: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            content: content.into(),
            retrieved_at: Utc::now(),
        }
    }
}

/// Every tag the extractors can make use of.
pub const KNOWN_TAGS: &[&str] = &[
    "P", "UL", "LI", "H1", "H2", "H3", "H4", "H5", "H6", "B", "DT", "DD", "A",
];

/// Tags that only mark up a few words and never separate blocks of text.
pub(crate) fn is_inline_tag(tag: &str) -> bool {
    matches!(tag, "A" | "B")
}

/// Set of upper-case tag names kept by [`normalize`].
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TagSet(BTreeSet<String>);

impl TagSet {
    /// Builds a set from tag names in any case. Names outside
    /// [`KNOWN_TAGS`] are rejected.
    pub fn new<I, S>(tags: I) -> Result<Self, UnknownTag>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for tag in tags {
            let upper = tag.as_ref().trim().to_ascii_uppercase();
            if !KNOWN_TAGS.contains(&upper.as_str()) {
                return Err(UnknownTag(tag.as_ref().to_string()));
            }
            set.insert(upper);
        }
        Ok(Self(set))
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.0.contains(tag)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl TryFrom<Vec<String>> for TagSet {
    type Error = UnknownTag;

    fn try_from(tags: Vec<String>) -> Result<Self, UnknownTag> {
        Self::new(tags)
    }
}

impl From<TagSet> for Vec<String> {
    fn from(set: TagSet) -> Self {
        set.0.into_iter().collect()
    }
}

impl Default for TagSet {
    fn default() -> Self {
        Self(KNOWN_TAGS.iter().map(|t| t.to_string()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tag `{0}` cannot be retained; supported tags are P, UL, LI, H1-H6, B, DT, DD, A")]
pub struct UnknownTag(pub String);

/// One retained element in a [`NormalizedDoc`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSpan {
    /// Upper-case tag name.
    pub tag: String,
    /// Offset of the opening token.
    pub open: usize,
    /// Offset of the closing token, `None` when the element was never
    /// explicitly closed.
    pub close: Option<usize>,
    /// Where the element's content ends: the closing token, or the point at
    /// which the element was implicitly closed.
    pub end: usize,
    /// `href` of an `A` element.
    pub href: Option<String>,
}

impl TagSpan {
    /// Offset just past the opening token.
    pub fn content_start(&self) -> usize {
        self.open + self.tag.len() + 2
    }

    /// Range between the opening token and the end of the element.
    pub fn inner(&self) -> Range<usize> {
        self.content_start()..self.end.max(self.content_start())
    }

    /// Whether `pos` falls inside the element's content.
    pub fn encloses(&self, pos: usize) -> bool {
        self.content_start() <= pos && pos < self.end
    }
}

/// Cleaned page text with retained tags inline.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDoc {
    pub url: String,
    pub text: String,
    pub tag_spans: Vec<TagSpan>,
    /// Anchor names and element ids mapped to the offset they mark.
    pub anchors: BTreeMap<String, usize>,
    tokens: Vec<Range<usize>>,
}

impl NormalizedDoc {
    /// Wraps plain text (no markup) as a document.
    pub fn from_plain(url: impl Into<String>, text: &str) -> Self {
        Self {
            url: url.into(),
            text: crate::text::collapse_whitespace(text),
            tag_spans: Vec::new(),
            anchors: BTreeMap::new(),
            tokens: Vec::new(),
        }
    }

    /// Byte ranges of every tag token in `text`, in order.
    pub fn tag_tokens(&self) -> &[Range<usize>] {
        &self.tokens
    }

    /// The tag token covering `pos`, if any.
    pub fn token_at(&self, pos: usize) -> Option<Range<usize>> {
        let idx = self.tokens.partition_point(|r| r.end <= pos);
        self.tokens
            .get(idx)
            .filter(|r| r.start <= pos)
            .cloned()
    }

    /// Name of the tag a token refers to.
    pub fn token_tag(&self, token: &Range<usize>) -> &str {
        self.text[token.clone()].trim_matches(|c| c == '<' || c == '>' || c == '/')
    }

    pub fn spans_of<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a TagSpan> + 'a {
        self.tag_spans.iter().filter(move |s| s.tag == tag)
    }

    /// Text of `range` with tag tokens removed and whitespace collapsed.
    pub fn plain(&self, range: Range<usize>) -> String {
        self.plain_mapped(range).0
    }

    /// Like [`plain`](Self::plain), also returning for every output char the
    /// byte range in `text` it came from. Spaces standing in for a removed
    /// block tag map to an empty range.
    pub fn plain_mapped(&self, range: Range<usize>) -> (String, Vec<Range<usize>>) {
        let mut out = String::new();
        let mut map = Vec::new();
        let mut need_space = false;
        let mut pos = range.start;
        let end = range.end.min(self.text.len());
        while pos < end {
            if let Some(tok) = self.token_at(pos) {
                if !is_inline_tag(self.token_tag(&tok)) {
                    need_space = true;
                }
                pos = tok.end;
                continue;
            }
            let ch = self.text[pos..].chars().next().unwrap();
            let len = ch.len_utf8();
            if ch.is_whitespace() {
                need_space = true;
            } else {
                if need_space && !out.is_empty() {
                    out.push(' ');
                    map.push(pos..pos);
                }
                need_space = false;
                out.push(ch);
                map.push(pos..pos + len);
            }
            pos += len;
        }
        (out, map)
    }

    /// Entire text with tags removed.
    pub fn plain_text(&self) -> String {
        self.plain(0..self.text.len())
    }

    /// First offset at or after `pos` holding a content char (not whitespace,
    /// not inside a tag token).
    pub fn next_content(&self, mut pos: usize) -> Option<usize> {
        while pos < self.text.len() {
            if let Some(tok) = self.token_at(pos) {
                pos = tok.end;
                continue;
            }
            let ch = self.text[pos..].chars().next()?;
            if !ch.is_whitespace() {
                return Some(pos);
            }
            pos += ch.len_utf8();
        }
        None
    }
}

impl fmt::Display for NormalizedDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A sentence located in a [`NormalizedDoc`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Sentence {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}
