use std::collections::BTreeMap;
use std::ops::Range;

use encoding_rs::{Encoding, UTF_8};

use super::{NormalizedDoc, RawPage, TagSet, TagSpan};

/// Elements whose content is dropped along with the tags.
const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style", "title", "noscript", "template"];

/// Non-retained elements that still separate words when removed.
const BLOCK_ELEMENTS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "div", "dl",
    "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "head", "header", "hr", "html", "img", "li", "main", "nav", "ol", "option", "p",
    "pre", "section", "select", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
];

/// Opening one of these ends an open paragraph.
fn closes_paragraph(tag: &str) -> bool {
    matches!(
        tag,
        "P" | "UL" | "H1" | "H2" | "H3" | "H4" | "H5" | "H6" | "DT" | "DD"
    )
}

/// Decodes page bytes, honouring a BOM or a declared charset and falling
/// back to UTF-8. The flag is set when malformed sequences were replaced.
pub fn decode_bytes(bytes: &[u8], content_type: Option<&str>) -> (String, bool) {
    let declared = content_type
        .and_then(charset_from_content_type)
        .or_else(|| sniff_meta_charset(bytes))
        .and_then(|label| Encoding::for_label(label.as_bytes()));
    let encoding = declared.unwrap_or(UTF_8);
    let (text, _, had_errors) = encoding.decode(bytes);
    (text.into_owned(), had_errors)
}

fn charset_from_content_type(ct: &str) -> Option<String> {
    let lower = ct.to_ascii_lowercase();
    let idx = lower.find("charset=")?;
    let value = lower[idx + 8..]
        .trim_start_matches(['"', '\''])
        .split(|c: char| c == ';' || c == '"' || c == '\'' || c.is_whitespace())
        .next()?
        .to_string();
    (!value.is_empty()).then_some(value)
}

fn sniff_meta_charset(bytes: &[u8]) -> Option<String> {
    let head = &bytes[..bytes.len().min(2048)];
    let head = String::from_utf8_lossy(head).to_ascii_lowercase();
    let mut from = 0;
    while let Some(rel) = head[from..].find("<meta") {
        let start = from + rel;
        let end = head[start..].find('>').map_or(head.len(), |e| start + e);
        if let Some(cs) = charset_from_content_type(&head[start..end]) {
            return Some(cs);
        }
        from = end;
    }
    None
}

struct OpenElement {
    span: usize,
    tag: String,
}

struct Builder<'a> {
    retained: &'a TagSet,
    out: String,
    pending_space: bool,
    /// The last char written is a literal `<`.
    after_lt: bool,
    /// Start of a literal `&` that may still grow into an entity reference.
    amp_at: Option<usize>,
    spans: Vec<TagSpan>,
    stack: Vec<OpenElement>,
    anchors: BTreeMap<String, usize>,
    tokens: Vec<Range<usize>>,
}

impl<'a> Builder<'a> {
    fn new(retained: &'a TagSet) -> Self {
        Self {
            retained,
            out: String::new(),
            pending_space: false,
            after_lt: false,
            amp_at: None,
            spans: Vec::new(),
            stack: Vec::new(),
            anchors: BTreeMap::new(),
            tokens: Vec::new(),
        }
    }

    fn text(&mut self, s: &str) {
        for ch in s.chars() {
            if ch.is_whitespace() {
                self.pending_space = true;
            } else {
                self.flush_space();
                self.push_char(ch);
            }
        }
    }

    /// Writes a text char so that the output, read again as HTML, yields
    /// the same text: a literal `<` or `&` never starts markup or an entity.
    fn push_char(&mut self, ch: char) {
        if std::mem::take(&mut self.after_lt) && (ch.is_ascii_alphabetic() || matches!(ch, '/' | '!' | '?')) {
            self.out.push(' ');
        }
        if let Some(start) = self.amp_at {
            if (ch.is_ascii_alphanumeric() || ch == '#') && self.out.len() - start < 40 {
                self.out.push(ch);
                return;
            }
            if ch == ';' {
                self.out.push(ch);
                self.settle_amp();
                return;
            }
            self.settle_amp();
        }
        match ch {
            '<' => self.after_lt = true,
            '&' => self.amp_at = Some(self.out.len()),
            _ => {}
        }
        self.out.push(ch);
    }

    fn settle_amp(&mut self) {
        let Some(start) = self.amp_at.take() else {
            return;
        };
        let candidate = &self.out[start..];
        if html_escape::decode_html_entities(candidate) != candidate {
            self.out.insert(start + 1, ' ');
            for offset in self.anchors.values_mut() {
                if *offset > start {
                    *offset += 1;
                }
            }
        }
    }

    fn end_text(&mut self) {
        self.settle_amp();
        self.after_lt = false;
    }

    fn flush_space(&mut self) {
        if self.pending_space && !self.out.is_empty() {
            self.end_text();
            self.out.push(' ');
        }
        self.pending_space = false;
    }

    fn separator(&mut self) {
        self.pending_space = true;
    }

    fn push_token(&mut self, token: &str) -> usize {
        self.flush_space();
        self.end_text();
        let at = self.out.len();
        self.out.push_str(token);
        self.tokens.push(at..self.out.len());
        at
    }

    fn anchor(&mut self, name: &str) {
        let name = name.trim();
        if !name.is_empty() {
            let at = self.out.len() + usize::from(self.pending_space && !self.out.is_empty());
            self.anchors.entry(name.to_string()).or_insert(at);
        }
    }

    /// Implicitly ends the element at stack index `idx` and everything
    /// opened after it.
    fn end_from(&mut self, idx: usize, at: usize) {
        for open in self.stack.drain(idx..) {
            self.spans[open.span].end = at;
        }
    }

    fn find_open(&self, pred: impl Fn(&str) -> bool, barrier: impl Fn(&str) -> bool) -> Option<usize> {
        for (i, open) in self.stack.iter().enumerate().rev() {
            if pred(&open.tag) {
                return Some(i);
            }
            if barrier(&open.tag) {
                return None;
            }
        }
        None
    }

    fn open_tag(&mut self, name: &str, attrs: &[(String, String)], self_closing: bool) {
        let upper = name.to_ascii_uppercase();
        let lower = name.to_ascii_lowercase();
        for (key, value) in attrs {
            if key == "id" || (key == "name" && lower == "a") {
                self.anchor(value);
            }
        }
        if !self.retained.contains(&upper) {
            if BLOCK_ELEMENTS.contains(&lower.as_str()) {
                self.separator();
            }
            return;
        }

        self.flush_space();
        self.end_text();
        let at = self.out.len();
        if closes_paragraph(&upper) {
            let container = |t: &str| matches!(t, "LI" | "DD" | "UL");
            if let Some(idx) = self.find_open(|t| t == "P", container) {
                self.end_from(idx, at);
            }
        }
        if upper == "LI" {
            if let Some(idx) = self.find_open(|t| t == "LI", |t| t == "UL") {
                self.end_from(idx, at);
            }
        }
        if upper == "DT" || upper == "DD" {
            if let Some(idx) = self.find_open(|t| t == "DT" || t == "DD", |t| t == "UL" || t == "LI") {
                self.end_from(idx, at);
            }
        }

        let href = if upper == "A" {
            attrs
                .iter()
                .find(|(k, _)| k == "href")
                .map(|(_, v)| v.trim().to_string())
        } else {
            None
        };
        let open = self.push_token(&format!("<{upper}>"));
        self.spans.push(TagSpan {
            tag: upper.clone(),
            open,
            close: None,
            end: open + upper.len() + 2,
            href,
        });
        let span = self.spans.len() - 1;
        if self_closing {
            let close = self.push_token(&format!("</{upper}>"));
            self.spans[span].close = Some(close);
            self.spans[span].end = close;
        } else {
            self.stack.push(OpenElement { span, tag: upper });
        }
    }

    fn close_tag(&mut self, name: &str) {
        let upper = name.to_ascii_uppercase();
        let lower = name.to_ascii_lowercase();
        if !self.retained.contains(&upper) {
            if BLOCK_ELEMENTS.contains(&lower.as_str()) {
                self.separator();
            }
            return;
        }
        let Some(idx) = self.stack.iter().rposition(|o| o.tag == upper) else {
            // Stray close tag: nothing to close, so no token either.
            if !super::is_inline_tag(&upper) {
                self.separator();
            }
            return;
        };
        self.flush_space();
        self.end_text();
        let at = self.out.len();
        self.end_from(idx + 1, at);
        let open = self.stack.pop().expect("stack holds idx");
        let close = self.push_token(&format!("</{upper}>"));
        self.spans[open.span].close = Some(close);
        self.spans[open.span].end = close;
    }

    fn finish(mut self, url: String) -> NormalizedDoc {
        self.end_text();
        let at = self.out.len();
        self.end_from(0, at);
        for offset in self.anchors.values_mut() {
            *offset = (*offset).min(at);
        }
        NormalizedDoc {
            url,
            text: self.out,
            tag_spans: self.spans,
            anchors: self.anchors,
            tokens: self.tokens,
        }
    }
}

/// Normalizes a raw page, keeping only the `retained` tags.
///
/// The parser is lenient: unknown constructs are skipped or treated as
/// text, and elements left open are recorded with no closing token.
pub fn normalize(page: &RawPage, retained: &TagSet) -> NormalizedDoc {
    let src = page.content.as_str();
    let bytes = src.as_bytes();
    let mut b = Builder::new(retained);
    let mut pos = 0;
    let mut text_start = 0;

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let Some(markup) = scan_markup(src, pos) else {
            pos += 1;
            continue;
        };
        emit_text(&mut b, &src[text_start..pos]);
        pos = match markup {
            Markup::Skip { end } => end,
            Markup::Open {
                name,
                attrs,
                self_closing,
                end,
            } => {
                let lower = name.to_ascii_lowercase();
                if RAW_TEXT_ELEMENTS.contains(&lower.as_str()) && !self_closing {
                    b.separator();
                    skip_raw_text(src, end, &lower)
                } else {
                    b.open_tag(&name, &attrs, self_closing);
                    end
                }
            }
            Markup::Close { name, end } => {
                b.close_tag(&name);
                end
            }
        };
        text_start = pos;
    }
    emit_text(&mut b, &src[text_start..]);
    b.finish(page.url.clone())
}

fn emit_text(b: &mut Builder<'_>, raw: &str) {
    if raw.is_empty() {
        return;
    }
    if raw.contains('&') {
        b.text(&html_escape::decode_html_entities(raw));
    } else {
        b.text(raw);
    }
}

enum Markup {
    Skip {
        end: usize,
    },
    Open {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
        end: usize,
    },
    Close {
        name: String,
        end: usize,
    },
}

fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'-' || b == b':' || b == b'_'
}

/// Recognizes the markup construct starting at `pos` (which holds `<`).
/// Returns `None` when the `<` is literal text.
fn scan_markup(src: &str, pos: usize) -> Option<Markup> {
    let bytes = src.as_bytes();
    let rest = &src[pos..];
    if rest.starts_with("<!--") {
        let end = rest[4..].find("-->").map_or(src.len(), |i| pos + 4 + i + 3);
        return Some(Markup::Skip { end });
    }
    let next = *bytes.get(pos + 1)?;
    if next == b'!' || next == b'?' {
        let end = rest.find('>').map_or(src.len(), |i| pos + i + 1);
        return Some(Markup::Skip { end });
    }
    if next == b'/' {
        let first = *bytes.get(pos + 2)?;
        if !first.is_ascii_alphabetic() {
            return None;
        }
        let mut i = pos + 2;
        while i < bytes.len() && is_name_byte(bytes[i]) {
            i += 1;
        }
        let name = src[pos + 2..i].to_string();
        let end = src[i..].find('>').map(|e| i + e + 1)?;
        return Some(Markup::Close { name, end });
    }
    if !next.is_ascii_alphabetic() {
        return None;
    }
    let mut i = pos + 1;
    while i < bytes.len() && is_name_byte(bytes[i]) {
        i += 1;
    }
    let name = src[pos + 1..i].to_string();
    let (attrs, self_closing, end) = scan_attributes(src, i)?;
    Some(Markup::Open {
        name,
        attrs,
        self_closing,
        end,
    })
}

/// Parses attributes up to the closing `>` of a start tag.
fn scan_attributes(src: &str, mut i: usize) -> Option<(Vec<(String, String)>, bool, usize)> {
    let bytes = src.as_bytes();
    let mut attrs = Vec::new();
    loop {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let &b = bytes.get(i)?;
        match b {
            b'>' => return Some((attrs, false, i + 1)),
            b'/' if bytes.get(i + 1) == Some(&b'>') => return Some((attrs, true, i + 2)),
            b'/' => {
                i += 1;
                continue;
            }
            _ => {}
        }
        let key_start = i;
        while i < bytes.len()
            && !bytes[i].is_ascii_whitespace()
            && !matches!(bytes[i], b'=' | b'>' | b'/')
        {
            i += 1;
        }
        if i == key_start {
            // Lone quote or similar junk.
            i += 1;
            continue;
        }
        let key = src[key_start..i].to_ascii_lowercase();
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if bytes.get(i) == Some(&b'=') {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            match bytes.get(i) {
                Some(&q @ (b'"' | b'\'')) => {
                    let close = src[i + 1..].find(q as char)? + i + 1;
                    value = src[i + 1..close].to_string();
                    i = close + 1;
                }
                Some(_) => {
                    let v_start = i;
                    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                        i += 1;
                    }
                    value = src[v_start..i].to_string();
                }
                None => return None,
            }
        }
        let value = html_escape::decode_html_entities(&value).into_owned();
        attrs.push((key, value));
    }
}

/// Returns the offset just past the end tag of a raw-text element.
fn skip_raw_text(src: &str, from: usize, name: &str) -> usize {
    let lower = src[from..].to_ascii_lowercase();
    let needle = format!("</{name}");
    match lower.find(&needle) {
        Some(i) => {
            let after = from + i + needle.len();
            src[after..].find('>').map_or(src.len(), |e| after + e + 1)
        }
        None => src.len(),
    }
}
