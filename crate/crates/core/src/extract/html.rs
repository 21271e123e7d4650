use super::{
    clip, fragment_from, Candidate, ExtractIssue, Extraction, ExtractionConfig, Method,
    TRIGGER_ANCHOR, TRIGGER_DTDD, TRIGGER_HEADING,
};
use crate::corpus::{decode_bytes, normalize, segment_sentences, NormalizedDoc, PageFetcher, RawPage, Sentence, TagSpan};
use crate::text::term_key;

struct Emitter<'a> {
    term: &'a str,
    cfg: &'a ExtractionConfig,
    out: Extraction,
}

impl Emitter<'_> {
    fn emit(&mut self, doc: &NormalizedDoc, range: std::ops::Range<usize>, trigger: &str) {
        let Some((text, span)) = clip(doc, range, self.cfg.max_fragment_chars) else {
            return;
        };
        let dup = self
            .out
            .candidates
            .iter()
            .any(|c| c.url == doc.url && c.span == span);
        if dup {
            return;
        }
        self.out.candidates.push(Candidate {
            term: self.term.to_string(),
            text,
            url: doc.url.clone(),
            method: Method::Html,
            trigger: trigger.to_string(),
            span,
            perplexity: None,
        });
    }

    fn issue(&mut self, doc: &NormalizedDoc, message: String) {
        self.out.issues.push(ExtractIssue {
            url: doc.url.clone(),
            message,
        });
    }

    /// Fragment starting at the first content char at or after `pos`.
    fn emit_from(&mut self, doc: &NormalizedDoc, sentences: &[Sentence], pos: usize, trigger: &str) {
        let Some(start) = doc.next_content(pos) else {
            return;
        };
        if let Some(range) = fragment_from(doc, sentences, start, self.cfg.window_n) {
            self.emit(doc, range, trigger);
        }
    }
}

fn names_term(doc: &NormalizedDoc, span: &TagSpan, key: &str) -> bool {
    term_key(&doc.plain(span.inner())) == key
}

/// Structural triggers: the term as a heading (fragment after it), as a
/// definition-list term (the following `DD`), or as link text (the fragment
/// at the link target). Cross-page links are followed one hop when enabled
/// and a fetcher is given.
pub fn extract_html(
    doc: &NormalizedDoc,
    term: &str,
    cfg: &ExtractionConfig,
    fetcher: Option<&dyn PageFetcher>,
) -> Extraction {
    let key = term_key(term);
    let mut em = Emitter {
        term,
        cfg,
        out: Extraction::default(),
    };
    if key.is_empty() {
        return em.out;
    }
    let sentences = segment_sentences(doc, &cfg.terminators);
    let next_dd = |after: usize| doc.spans_of("DD").find(|dd| dd.open >= after);

    for span in &doc.tag_spans {
        let is_heading = cfg.heading_tags.contains(&span.tag);
        let relevant = is_heading || span.tag == "DT" || span.tag == "A";
        if !relevant || !names_term(doc, span, &key) {
            continue;
        }
        match span.tag.as_str() {
            "DT" => {
                if let Some(dd) = next_dd(span.end) {
                    em.emit(doc, dd.inner(), TRIGGER_DTDD);
                } else if is_heading {
                    em.emit_from(doc, &sentences, span.end, TRIGGER_HEADING);
                }
            }
            "A" => anchor(&mut em, doc, &sentences, span, fetcher),
            _ => em.emit_from(doc, &sentences, span.end, TRIGGER_HEADING),
        }
    }
    em.out
}

fn anchor(
    em: &mut Emitter<'_>,
    doc: &NormalizedDoc,
    sentences: &[Sentence],
    span: &TagSpan,
    fetcher: Option<&dyn PageFetcher>,
) {
    let Some(href) = span.href.as_deref().map(str::trim).filter(|h| !h.is_empty()) else {
        return;
    };
    let (target_url, fragment) = match href.split_once('#') {
        Some((u, f)) => (u, Some(f)),
        None => (href, None),
    };
    let same_page = target_url.is_empty() || same_document(&doc.url, target_url);
    if same_page {
        let Some(name) = fragment else {
            return;
        };
        match doc.anchors.get(name) {
            Some(&pos) => em.emit_from(doc, sentences, pos, TRIGGER_ANCHOR),
            None => em.issue(doc, format!("dangling anchor `#{name}`")),
        }
        return;
    }
    if !em.cfg.cross_page_anchors {
        return;
    }
    let Some(fetcher) = fetcher else {
        em.issue(doc, format!("cannot follow `{href}`: no fetcher"));
        return;
    };
    let Some(resolved) = resolve(&doc.url, target_url) else {
        em.issue(doc, format!("cannot resolve link `{href}`"));
        return;
    };
    let page = match fetcher.fetch(&resolved) {
        Ok(p) => p,
        Err(e) => {
            em.issue(doc, format!("fetching `{resolved}` failed: {e}"));
            return;
        }
    };
    let (content, _) = decode_bytes(&page.bytes, page.content_type.as_deref());
    let other = normalize(&RawPage::new(resolved, content), &em.cfg.retained_tags);
    let other_sentences = segment_sentences(&other, &em.cfg.terminators);
    let pos = match fragment.filter(|f| !f.is_empty()) {
        Some(name) => match other.anchors.get(name) {
            Some(&pos) => pos,
            None => {
                em.issue(&other, format!("dangling anchor `#{name}`"));
                return;
            }
        },
        None => 0,
    };
    em.emit_from(&other, &other_sentences, pos, TRIGGER_ANCHOR);
}

fn resolve(base: &str, href: &str) -> Option<String> {
    match url::Url::parse(base) {
        Ok(b) => b.join(href).ok().map(String::from),
        Err(_) => url::Url::parse(href).ok().map(String::from),
    }
}

fn same_document(base: &str, href: &str) -> bool {
    let strip = |u: url::Url| {
        let mut u = u;
        u.set_fragment(None);
        u
    };
    match (url::Url::parse(base), resolve(base, href)) {
        (Ok(b), Some(r)) => url::Url::parse(&r).is_ok_and(|r| strip(r) == strip(b)),
        _ => false,
    }
}
