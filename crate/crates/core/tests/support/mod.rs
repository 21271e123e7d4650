#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use term_scribe::corpus::{SourceKind, SourceSpec};
use term_scribe::langmodel::{save_model, train_lm};
use term_scribe::PipelineConfig;

pub const TERMS: &[&str] = &[
    "thesaurus",
    "data mining",
    "ring network",
    "neural network",
    "digital watermark",
    "optical fiber",
    "genetic algorithm",
    "multicast",
    "groupware",
    "telomere",
];

pub const FORMS: &[&str] = &["P", "UL", "WINDOW", "HEADING", "DTDD", "ANCHOR"];

pub const PATTERNS: &str = "p1\tX is defined as Y.\np2\tX is Y.\np3\tY is called X.\n";

const ADJS: &[&str] = &[
    "controlled", "compact", "layered", "distributed", "statistical", "robust", "shared",
    "adaptive", "formal", "simple",
];
const NOUNS: &[&str] = &[
    "structure", "method", "device", "technique", "resource", "system", "model", "standard",
    "process", "tool",
];
const VERBS: &[&str] = &[
    "organizes", "stores", "transmits", "relates", "groups", "analyzes", "encodes", "connects",
    "protects", "describes",
];
const OBJS: &[&str] = &[
    "words", "signals", "records", "documents", "images", "messages", "patterns", "nodes",
    "genes", "packets",
];
const PLACES: &[&str] = &[
    "libraries", "networks", "databases", "laboratories", "offices", "archives", "studios",
    "factories", "hospitals", "universities",
];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// A sentence a description pattern matches for `term`.
pub fn pattern_sentence(rng: &mut ChaCha8Rng, term: &str) -> String {
    let (a, n, v, o, p) = (
        pick(rng, ADJS),
        pick(rng, NOUNS),
        pick(rng, VERBS),
        pick(rng, OBJS),
        pick(rng, PLACES),
    );
    match rng.gen_range(0..3) {
        0 => format!("{} is a {a} {n} that {v} {o} in {p}.", capitalize(term)),
        1 => format!("{} is defined as a {a} {n} for {o}.", capitalize(term)),
        _ => format!("A {a} {n} that {v} {o} is called {term}."),
    }
}

/// A descriptive sentence without the term.
pub fn plain_sentence(rng: &mut ChaCha8Rng) -> String {
    let (a, n, v, o, p) = (
        pick(rng, ADJS),
        pick(rng, NOUNS),
        pick(rng, VERBS),
        pick(rng, OBJS),
        pick(rng, PLACES),
    );
    match rng.gen_range(0..3) {
        0 => format!("It is a {a} {n} that {v} {o}."),
        1 => format!("The {n} {v} {o} in {p}."),
        _ => format!("Many {p} use a {a} {n} to handle {o}."),
    }
}

#[derive(Debug, Clone)]
pub struct Plant {
    pub term: String,
    pub file: String,
    pub form: &'static str,
    /// Tag-free text the extractor should produce.
    pub text: String,
}

pub struct Synthetic {
    pub dir: tempfile::TempDir,
    pub pages: PathBuf,
    pub plants: Vec<Plant>,
    pub n_pages: usize,
    pub n_distractors: usize,
}

fn filler(rng: &mut ChaCha8Rng) -> String {
    format!("<p>{} {}</p>\n", plain_sentence(rng), plain_sentence(rng))
}

fn planted_page(rng: &mut ChaCha8Rng, term: &str, form: &'static str, idx: usize) -> (String, String) {
    let mut html = String::from("<html><head><title>Notes</title></head><body>\n");
    html.push_str(&filler(rng));
    let expected = match form {
        "P" => {
            let (a, m, b) = (plain_sentence(rng), pattern_sentence(rng, term), plain_sentence(rng));
            html.push_str(&format!("<p>{a} {m} {b}</p>\n"));
            format!("{a} {m} {b}")
        }
        "UL" => {
            let (m, b) = (pattern_sentence(rng, term), plain_sentence(rng));
            html.push_str(&format!("<ul>\n<li>{m}</li>\n<li>{b}</li>\n</ul>\n"));
            format!("{m} {b}")
        }
        "WINDOW" => {
            let s: Vec<String> = (0..5).map(|_| plain_sentence(rng)).collect();
            let m = pattern_sentence(rng, term);
            html.push_str(&format!(
                "<div>{} {} {} {m} {} {}</div>\n",
                s[0], s[1], s[2], s[3], s[4]
            ));
            format!("{} {m} {}", s[2], s[3])
        }
        "HEADING" => {
            let (a, b) = (plain_sentence(rng), plain_sentence(rng));
            html.push_str(&format!("<h3>{}</h3>\n<p>{a} {b}</p>\n", capitalize(term)));
            format!("{a} {b}")
        }
        "DTDD" => {
            let a = plain_sentence(rng);
            html.push_str(&format!("<dl>\n<dt>{term}</dt>\n<dd>{a}</dd>\n</dl>\n"));
            a
        }
        "ANCHOR" => {
            let (a, b) = (plain_sentence(rng), plain_sentence(rng));
            html.push_str(&format!(
                "<p>See <a href=\"#def{idx}\">{term}</a> for details.</p>\n{}<a name=\"def{idx}\"></a><p>{a} {b}</p>\n",
                filler(rng)
            ));
            format!("{a} {b}")
        }
        _ => unreachable!(),
    };
    html.push_str(&filler(rng));
    html.push_str("</body></html>\n");
    (html, expected)
}

fn distractor_page(rng: &mut ChaCha8Rng, idx: usize) -> String {
    let term = TERMS[idx % TERMS.len()];
    let other = TERMS[(idx + 3) % TERMS.len()];
    let body = match idx % 5 {
        0 => format!(
            "<h2>{} news</h2>\n<p>The {term} meeting moved to {}.</p>",
            capitalize(term),
            pick(rng, PLACES)
        ),
        1 => format!(
            "<ul><li><a href=\"/{idx}/a.html\">{term}</a></li><li><a href=\"/{idx}/b.html\">{other}</a></li><li><a href=\"/\">home</a></li></ul>"
        ),
        2 => format!("<p>Home | About | {term} | {other} | Contact</p>"),
        3 => format!("<p>Our {term} is new. Call 555 0100 for the {other} price list.</p>"),
        _ => format!(
            "<p>Topics: {term}, {other}.</p><h3>{} and {}</h3><p>Slides available soon.</p>",
            capitalize(term),
            other
        ),
    };
    format!("<html><body>\n{}{body}\n{}</body></html>\n", filler(rng), filler(rng))
}

/// 50 planted pages (five per term, forms rotating) and 20 distractors.
pub fn synthetic_corpus(seed: u64) -> Synthetic {
    let dir = tempfile::tempdir().unwrap();
    let pages = dir.path().join("pages");
    fs::create_dir(&pages).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plants = Vec::new();
    let mut n = 0;
    for (ti, term) in TERMS.iter().enumerate() {
        for j in 0..5 {
            let form = FORMS[(ti * 5 + j) % FORMS.len()];
            let file = format!("page{n:03}.html");
            let (html, text) = planted_page(&mut rng, term, form, n);
            fs::write(pages.join(&file), html).unwrap();
            plants.push(Plant {
                term: term.to_string(),
                file,
                form,
                text,
            });
            n += 1;
        }
    }
    for k in 0..20 {
        fs::write(pages.join(format!("zz{k:03}.html")), distractor_page(&mut rng, k)).unwrap();
    }
    Synthetic {
        dir,
        pages,
        plants,
        n_pages: n,
        n_distractors: 20,
    }
}

/// In-domain training text in the style of the planted descriptions.
pub fn training_text(seed: u64, sentences: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..sentences {
        let s = if rng.gen_bool(0.5) {
            let term = *TERMS.choose(&mut rng).unwrap();
            pattern_sentence(&mut rng, term)
        } else {
            plain_sentence(&mut rng)
        };
        out.push_str(&s);
        out.push('\n');
    }
    out
}

/// Writes patterns and a trained model next to the pages and returns a
/// config pointing at them.
pub fn pipeline_config(syn: &Synthetic, db_name: &str, workers: usize) -> PipelineConfig {
    let root = syn.dir.path();
    let patterns = root.join("patterns.tsv");
    if !patterns.exists() {
        fs::write(&patterns, PATTERNS).unwrap();
    }
    let model = root.join("model.lm");
    if !model.exists() {
        let m = train_lm(&training_text(7, 3000), 1).unwrap();
        save_model(&m, &model).unwrap();
    }
    PipelineConfig {
        source: SourceSpec {
            kind: SourceKind::CorpusDir,
            location: syn.pages.to_string_lossy().into_owned(),
            ..SourceSpec::default()
        },
        pattern_file: patterns,
        model_file: model,
        db_path: root.join(db_name),
        workers,
        ..PipelineConfig::default()
    }
}

pub fn file_name(url: &str) -> &str {
    Path::new(url).file_name().and_then(|n| n.to_str()).unwrap_or(url)
}

/// One row of the published results: term, pages, then correct, total
/// and printed accuracy without and with the trigram filter.
pub struct TableRow {
    pub term: &'static str,
    pub pages: u64,
    pub all: (usize, usize, f64),
    pub filtered: (usize, usize, f64),
}

macro_rules! rows {
    ($(($t:expr, $p:expr, $c1:expr, $t1:expr, $a1:expr, $c2:expr, $t2:expr, $a2:expr)),* $(,)?) => {
        &[$(TableRow { term: $t, pages: $p, all: ($c1, $t1, $a1), filtered: ($c2, $t2, $a2) }),*]
    };
}

pub const RESULT_ROWS: &[TableRow] = rows![
    ("Zipf's law", 15, 1, 1, 100.0, 1, 1, 100.0),
    ("access control", 6925, 10, 20, 50.0, 10, 20, 50.0),
    ("document image understanding", 43, 1, 1, 100.0, 1, 1, 100.0),
    ("intelligent agent", 323, 3, 5, 60.0, 3, 5, 60.0),
    ("data mining", 3389, 37, 49, 75.5, 30, 40, 75.0),
    ("digital watermark", 2124, 29, 32, 90.6, 29, 32, 90.6),
    ("digital library", 7938, 10, 26, 38.5, 8, 17, 47.1),
    ("image retrieval", 1694, 1, 4, 25.0, 1, 3, 33.3),
    ("groupware", 19760, 14, 40, 35.0, 12, 21, 57.1),
    ("optical fiber", 10078, 17, 25, 68.0, 14, 21, 66.7),
    ("position measurement", 735, 0, 3, 0.0, 0, 3, 0.0),
    ("genetic algorithm", 4686, 24, 31, 77.4, 22, 28, 78.6),
    ("artificial intelligence", 18190, 10, 19, 52.6, 9, 13, 69.2),
    ("autonomous mobile robot", 792, 2, 2, 100.0, 2, 2, 100.0),
    ("next generation Internet", 1963, 6, 10, 60.0, 6, 10, 60.0),
    ("keyword automatic extraction", 25, 1, 1, 100.0, 1, 1, 100.0),
    ("machine translation", 3141, 1, 10, 10.0, 0, 8, 0.0),
    ("collocation", 547, 7, 16, 43.8, 7, 15, 46.7),
    ("fault diagnosis", 1682, 2, 5, 40.0, 2, 4, 50.0),
    ("multicast", 5758, 18, 25, 72.0, 15, 22, 68.2),
    ("media synchronization", 46, 1, 1, 100.0, 1, 1, 100.0),
    ("network topology", 438, 1, 4, 25.0, 0, 3, 0.0),
    ("neural network", 9537, 37, 47, 78.7, 36, 45, 80.0),
    ("ring network", 44, 0, 1, 0.0, 0, 1, 0.0),
    ("thesaurus", 3399, 21, 23, 91.3, 19, 20, 95.0),
    ("solar car", 3698, 12, 21, 57.1, 12, 21, 57.1),
    ("telomere", 873, 26, 36, 72.2, 25, 34, 73.5),
];

pub const REPORTED_TOTAL_PAGES: u64 = 109_049;

/// Terms that had pages but no extracted descriptions.
pub const EXTRA_TERMS_WITH_PAGES: usize = 17;

/// Records, judgments file and page-counts file reproducing the table.
/// Within a row the first `filtered.1` records have perplexity below 1000
/// and the rest at or above it; correct records are spread so each column
/// gets its printed `#C`.
pub fn results_fixture() -> (Vec<term_scribe::DescriptionRecord>, String, String) {
    use term_scribe::text::sha256_hex;
    let when = chrono::DateTime::parse_from_rfc3339("2001-01-01T00:00:00Z").unwrap().into();
    let mut records = Vec::new();
    let mut judgments = String::new();
    let mut pages = String::new();
    for row in RESULT_ROWS {
        pages.push_str(&format!("{}\t{}\n", row.term, row.pages));
        let (c_all, t_all, _) = row.all;
        let (c_f, t_f, _) = row.filtered;
        for i in 0..t_all {
            let below = i < t_f;
            let correct = if below { i < c_f } else { i - t_f < c_all - c_f };
            let perplexity = if below { 100.0 + i as f64 } else { 1000.0 + (i - t_f) as f64 * 250.0 };
            let text = format!("Description {i} of {}.", row.term);
            let url = format!("http://example.org/{}/{i}.html", row.term.replace(' ', "-"));
            judgments.push_str(&format!(
                "{}\t{url}\t{}\t{}\n",
                row.term,
                sha256_hex(&text),
                u8::from(correct)
            ));
            records.push(term_scribe::DescriptionRecord {
                term: row.term.to_string(),
                text,
                url,
                method: term_scribe::Method::Nlp,
                trigger: "p1".to_string(),
                perplexity,
                cluster_id: i % 3,
                representative: i < 3,
                indexed_at: when,
            });
        }
    }
    for k in 0..EXTRA_TERMS_WITH_PAGES {
        pages.push_str(&format!("uncovered term {k}\t{}\n", 3 + k));
    }
    (records, judgments, pages)
}
