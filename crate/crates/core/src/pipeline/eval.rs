use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::store::DescriptionRecord;
use crate::text::{sha256_hex, term_key};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JudgmentKey {
    /// Normalized with [`term_key`].
    pub term: String,
    pub url: String,
    /// Lowercase hex SHA-256 of the description text.
    pub text_sha256: String,
}

impl JudgmentKey {
    pub fn of(record: &DescriptionRecord) -> Self {
        Self {
            term: term_key(&record.term),
            url: record.url.clone(),
            text_sha256: sha256_hex(&record.text),
        }
    }
}

pub type Judgments = HashMap<JudgmentKey, bool>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn data_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// `term<TAB>url<TAB>sha256(text)<TAB>1|0` lines.
pub fn parse_judgments(content: &str) -> Result<Judgments, ParseError> {
    let mut out = Judgments::new();
    for (line, raw) in data_lines(content) {
        let err = |message: String| ParseError { line, message };
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 tab-separated fields, found {}", f.len())));
        }
        let hash = f[2].trim().to_ascii_lowercase();
        if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(err(format!("`{}` is not a SHA-256 hex digest", f[2])));
        }
        let correct = match f[3].trim() {
            "1" => true,
            "0" => false,
            other => return Err(err(format!("judgment must be 1 or 0, got `{other}`"))),
        };
        let key = JudgmentKey {
            term: term_key(f[0]),
            url: f[1].trim().to_string(),
            text_sha256: hash,
        };
        if out.insert(key, correct).is_some_and(|prev| prev != correct) {
            return Err(err("conflicting judgment for the same description".into()));
        }
    }
    Ok(out)
}

/// `term<TAB>count` lines, in file order.
pub fn parse_page_counts(content: &str) -> Result<Vec<(String, u64)>, ParseError> {
    let mut out: Vec<(String, u64)> = Vec::new();
    for (line, raw) in data_lines(content) {
        let err = |message: String| ParseError { line, message };
        let Some((term, count)) = raw.split_once('\t') else {
            return Err(err("expected term<TAB>count".into()));
        };
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| err(format!("bad page count `{}`", count.trim())))?;
        let term = term.trim();
        if term.is_empty() {
            return Err(err("empty term".into()));
        }
        if out.iter().any(|(t, _)| term_key(t) == term_key(term)) {
            return Err(err(format!("duplicate term `{term}`")));
        }
        out.push((term.to_string(), count));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermEval {
    pub term: String,
    pub pages: u64,
    pub correct: usize,
    pub total: usize,
    pub unjudged: usize,
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

impl TermEval {
    pub fn accuracy(&self) -> Option<f64> {
        percent(self.correct, self.total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_term: Vec<TermEval>,
    pub correct: usize,
    pub total: usize,
    pub unjudged: usize,
    pub terms_with_pages: usize,
    pub terms_with_descriptions: usize,
}

impl EvalReport {
    pub fn accuracy(&self) -> Option<f64> {
        percent(self.correct, self.total)
    }

    pub fn coverage(&self) -> Option<f64> {
        percent(self.terms_with_descriptions, self.terms_with_pages)
    }

    fn find(&self, term: &str) -> Option<&TermEval> {
        let key = term_key(term);
        self.per_term.iter().find(|t| term_key(&t.term) == key)
    }
}

/// Formats a percentage with one decimal, `—` when undefined.
pub fn format_percent(p: Option<f64>) -> String {
    p.map_or_else(|| "—".to_string(), |p| format!("{p:.1}"))
}

/// Scores records against judgments. Unjudged records count toward the
/// total as not correct. Terms come from `page_counts` in order, then any
/// other term with records. Coverage is terms with at least one record
/// among terms with at least one page.
pub fn evaluate(
    records: &[DescriptionRecord],
    judgments: &Judgments,
    page_counts: &[(String, u64)],
) -> EvalReport {
    let mut order: Vec<String> = page_counts.iter().map(|(t, _)| t.clone()).collect();
    let known: BTreeSet<String> = order.iter().map(|t| term_key(t)).collect();
    let mut extra: BTreeSet<(String, String)> = BTreeSet::new();
    for r in records {
        let key = term_key(&r.term);
        if !known.contains(&key) {
            extra.insert((key, r.term.clone()));
        }
    }
    let mut extra_seen = BTreeSet::new();
    for (key, term) in extra {
        if extra_seen.insert(key) {
            order.push(term);
        }
    }
    let pages: HashMap<String, u64> = page_counts.iter().map(|(t, c)| (term_key(t), *c)).collect();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut per_term: Vec<TermEval> = order
        .into_iter()
        .enumerate()
        .map(|(i, term)| {
            index.insert(term_key(&term), i);
            TermEval {
                pages: pages.get(&term_key(&term)).copied().unwrap_or(0),
                term,
                correct: 0,
                total: 0,
                unjudged: 0,
            }
        })
        .collect();
    for r in records {
        let t = &mut per_term[index[&term_key(&r.term)]];
        t.total += 1;
        match judgments.get(&JudgmentKey::of(r)) {
            Some(true) => t.correct += 1,
            Some(false) => {}
            None => t.unjudged += 1,
        }
    }
    EvalReport {
        correct: per_term.iter().map(|t| t.correct).sum(),
        total: per_term.iter().map(|t| t.total).sum(),
        unjudged: per_term.iter().map(|t| t.unjudged).sum(),
        terms_with_pages: per_term.iter().filter(|t| t.pages > 0).count(),
        terms_with_descriptions: per_term.iter().filter(|t| t.pages > 0 && t.total > 0).count(),
        per_term,
    }
}

/// Text table with one `#C #T A` column group per report. Terms follow the
/// first report.
pub fn render_reports(columns: &[(&str, &EvalReport)]) -> String {
    let Some((_, first)) = columns.first() else {
        return String::new();
    };
    let width = first
        .per_term
        .iter()
        .map(|t| t.term.chars().count())
        .chain([5])
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    let _ = write!(out, "{:<width$} {:>8}", "", "");
    for (label, _) in columns {
        let _ = write!(out, " | {label:^20}");
    }
    out.push('\n');
    let _ = write!(out, "{:<width$} {:>8}", "term", "#pages");
    for _ in columns {
        let _ = write!(out, " | {:>5} {:>5} {:>8}", "#C", "#T", "A");
    }
    out.push('\n');
    for t in &first.per_term {
        let _ = write!(out, "{:<width$} {:>8}", t.term, t.pages);
        for (_, report) in columns {
            match report.find(&t.term) {
                Some(r) => {
                    let flag = if r.unjudged > 0 { "*" } else { " " };
                    let _ = write!(
                        out,
                        " | {:>5} {:>5} {:>7}{flag}",
                        r.correct,
                        r.total,
                        format_percent(r.accuracy())
                    );
                }
                None => {
                    let _ = write!(out, " | {:>5} {:>5} {:>8}", 0, 0, "—");
                }
            }
        }
        out.push('\n');
    }
    let total_pages: u64 = first.per_term.iter().map(|t| t.pages).sum();
    let _ = write!(out, "{:<width$} {:>8}", "total", total_pages);
    for (_, r) in columns {
        let _ = write!(out, " | {:>5} {:>5} {:>8}", r.correct, r.total, format_percent(r.accuracy()));
    }
    out.push('\n');
    for (label, r) in columns {
        let _ = writeln!(
            out,
            "coverage ({label}): {}/{} = {}%",
            r.terms_with_descriptions,
            r.terms_with_pages,
            format_percent(r.coverage())
        );
        if r.unjudged > 0 {
            let _ = writeln!(out, "unjudged ({label}): {} records, marked *", r.unjudged);
        }
    }
    out
}
