//! Building the database for a lexicon, answering queries and scoring the
//! result against human judgments.

mod config;
mod eval;

use std::collections::HashSet;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use chrono::{DateTime, Utc};
use rayon::prelude::*;

pub use config::{ConfigError, PipelineConfig};
pub use eval::{
    evaluate, format_percent, parse_judgments, parse_page_counts, render_reports, EvalReport,
    JudgmentKey, Judgments, ParseError, TermEval,
};

use crate::cluster::{agglomerate, cut_and_represent, vectorize, Stopwords};
use crate::corpus::{
    load_source_with, normalize, HttpFetcher, PageFetcher, RawPage, SourceError, SourceKind,
};
use crate::extract::{extract_all_bound, Candidate};
use crate::langmodel::{filter_candidates, load_model, LmError, NgramModel};
use crate::patterns::{compile_pattern, parse_pattern_file, BoundMatcher, CompiledMatcher, NoPatterns};
use crate::store::{Database, DescriptionRecord, StoreError};
use crate::text::term_key;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Read {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Patterns {
        path: std::path::PathBuf,
        source: NoPatterns,
    },
    #[error(transparent)]
    Model(#[from] LmError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("lexicon is empty")]
    EmptyLexicon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildStatus {
    Ok,
    NoPages,
    NoDescriptions,
}

impl std::fmt::Display for BuildStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BuildStatus::Ok => "OK",
            BuildStatus::NoPages => "NO_PAGES",
            BuildStatus::NoDescriptions => "NO_DESCRIPTIONS",
        })
    }
}

/// What happened to one term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermBuild {
    pub term: String,
    pub status: BuildStatus,
    pub records: Vec<DescriptionRecord>,
    pub pages: usize,
    /// Candidates before and after the perplexity filter.
    pub extracted: usize,
    pub kept: usize,
    pub unvectorizable: usize,
    pub issues: Vec<String>,
}

/// Summary of a lexicon run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackgroundReport {
    pub processed: usize,
    pub with_pages: usize,
    pub with_descriptions: usize,
    pub records: usize,
    pub builds: Vec<TermBuild>,
    /// Terms that failed outright, with the reason.
    pub failures: Vec<(String, String)>,
}

impl BackgroundReport {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Loaded patterns, language model and stopwords plus the page source.
pub struct Pipeline {
    cfg: PipelineConfig,
    matchers: Vec<CompiledMatcher>,
    model: NgramModel,
    stopwords: Stopwords,
    fetcher: Arc<dyn PageFetcher>,
    url_list_cache: OnceLock<Result<Arc<Vec<RawPage>>, String>>,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// One term per line; blank lines and `#` comments skipped, case-insensitive
/// duplicates dropped.
pub fn parse_lexicon(content: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter(|l| seen.insert(term_key(l)))
        .map(str::to_string)
        .collect()
}

impl Pipeline {
    /// Validates the config and loads every input it refers to. Network
    /// sources go through an [`HttpFetcher`].
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        let fetcher = Arc::new(HttpFetcher::new(&cfg.source));
        Self::with_fetcher(cfg, fetcher)
    }

    pub fn with_fetcher(
        cfg: PipelineConfig,
        fetcher: Arc<dyn PageFetcher>,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let patterns = parse_pattern_file(&read(&cfg.pattern_file)?).map_err(|source| {
            PipelineError::Patterns {
                path: cfg.pattern_file.clone(),
                source,
            }
        })?;
        for issue in &patterns.issues {
            log::warn!("{}: {issue}", cfg.pattern_file.display());
        }
        let matchers = patterns
            .patterns
            .iter()
            .map(|p| compile_pattern(p).expect("parsed patterns are valid"))
            .collect();
        let model = load_model(&cfg.model_file)?;
        let stopwords = match &cfg.stopword_file {
            Some(p) => Stopwords::parse(&read(p)?),
            None => Stopwords::english(),
        };
        Ok(Self {
            cfg,
            matchers,
            model,
            stopwords,
            fetcher,
            url_list_cache: OnceLock::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn model(&self) -> &NgramModel {
        &self.model
    }

    pub fn open_database(&self) -> Result<Database, StoreError> {
        Database::open(&self.cfg.db_path)
    }

    /// Pages mentioning `term`. A URL list is fetched once and reused.
    fn pages_for(&self, term: &str) -> Result<(Vec<RawPage>, Vec<String>), SourceError> {
        if self.cfg.source.kind != SourceKind::UrlList {
            let (pages, report) = load_source_with(&self.cfg.source, Some(term), &*self.fetcher)?;
            let issues = report.issues.iter().map(|i| format!("{}: {}", i.url, i.reason)).collect();
            return Ok((pages, issues));
        }
        let all = self
            .url_list_cache
            .get_or_init(|| {
                load_source_with(&self.cfg.source, None, &*self.fetcher)
                    .map(|(pages, _)| Arc::new(pages))
                    .map_err(|e| e.to_string())
            })
            .clone()
            .map_err(SourceError::Config)?;
        let key = term_key(term);
        let pages = all
            .iter()
            .filter(|p| term_key(&p.content).contains(&key))
            .cloned()
            .collect();
        Ok((pages, Vec::new()))
    }

    /// Search, extract, filter, cluster for one term. Records carry
    /// `indexed_at`; everything else depends only on the inputs.
    pub fn build_term(&self, term: &str) -> Result<TermBuild, PipelineError> {
        self.build_term_at(term, Utc::now())
    }

    pub fn build_term_at(&self, term: &str, now: DateTime<Utc>) -> Result<TermBuild, PipelineError> {
        let (pages, issues) = self.pages_for(term)?;
        let mut build = TermBuild {
            term: term.to_string(),
            status: BuildStatus::NoPages,
            records: Vec::new(),
            pages: pages.len(),
            extracted: 0,
            kept: 0,
            unvectorizable: 0,
            issues,
        };
        if pages.is_empty() {
            return Ok(build);
        }
        let bound: Vec<BoundMatcher> = self.matchers.iter().map(|m| m.bind(term)).collect();
        let mut candidates: Vec<Candidate> = Vec::new();
        for page in &pages {
            let doc = normalize(page, &self.cfg.extraction.retained_tags);
            let fetcher = self.cfg.extraction.cross_page_anchors.then_some(&*self.fetcher);
            let out = extract_all_bound(&doc, term, &bound, &self.cfg.extraction, fetcher);
            build.issues.extend(out.issues.iter().map(ToString::to_string));
            candidates.extend(out.candidates);
        }
        candidates.sort_by(|a, b| (&a.url, a.span).cmp(&(&b.url, b.span)));
        let mut seen = HashSet::new();
        candidates.retain(|c| seen.insert((c.url.clone(), c.text.clone())));
        build.extracted = candidates.len();

        let kept = filter_candidates(candidates, &self.model, &self.cfg.filter);
        build.kept = kept.len();

        let mut vectors = Vec::new();
        let mut survivors = Vec::new();
        for c in kept {
            match vectorize(&c.text, &self.stopwords, self.cfg.min_token_len) {
                Ok(v) => {
                    vectors.push(v);
                    survivors.push(c);
                }
                Err(e) => {
                    build.unvectorizable += 1;
                    build.issues.push(format!("{}: {e}", c.url));
                }
            }
        }
        if survivors.is_empty() {
            build.status = BuildStatus::NoDescriptions;
            return Ok(build);
        }
        let dendrogram = agglomerate::<f64>(&vectors);
        let clusters = cut_and_represent(&dendrogram, &vectors, self.cfg.k_clusters);
        let mut assignment = vec![(0usize, false); survivors.len()];
        for (cid, cluster) in clusters.iter().enumerate() {
            for &m in &cluster.member_ids {
                assignment[m] = (cid, m == cluster.representative_id);
            }
        }
        build.records = survivors
            .into_iter()
            .zip(assignment)
            .map(|(c, (cluster_id, representative))| DescriptionRecord {
                term: term.to_string(),
                text: c.text,
                url: c.url,
                method: c.method,
                trigger: c.trigger,
                perplexity: c.perplexity.expect("filtered candidates are scored"),
                cluster_id,
                representative,
                indexed_at: now,
            })
            .collect();
        build.status = BuildStatus::Ok;
        Ok(build)
    }

    /// Builds every term on a pool of `workers` threads and commits each
    /// term's records as it finishes. Terms without descriptions have any
    /// earlier records removed. Per-term failures are collected, not fatal.
    pub fn run_background(
        &self,
        lexicon: &[String],
        db: &mut Database,
    ) -> Result<BackgroundReport, PipelineError> {
        if lexicon.is_empty() {
            return Err(PipelineError::EmptyLexicon);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .expect("thread pool");
        let shared = Mutex::new(db);
        let now = Utc::now();
        let results: Vec<Result<TermBuild, String>> = pool.install(|| {
            lexicon
                .par_iter()
                .map(|term| {
                    let build = self.build_term_at(term, now).map_err(|e| e.to_string())?;
                    let mut db = shared.lock().unwrap_or_else(|e| e.into_inner());
                    let outcome = db
                        .replace_term(term, build.records.clone())
                        .map_err(|e| e.to_string())?;
                    for r in outcome.rejected {
                        log::warn!("{term}: record from {} rejected: {}", r.record.url, r.reason);
                    }
                    Ok(build)
                })
                .collect()
        });
        let mut report = BackgroundReport::default();
        for (term, result) in lexicon.iter().zip(results) {
            report.processed += 1;
            match result {
                Ok(build) => {
                    if build.pages > 0 {
                        report.with_pages += 1;
                    }
                    if build.status == BuildStatus::Ok {
                        report.with_descriptions += 1;
                    }
                    report.records += build.records.len();
                    report.builds.push(build);
                }
                Err(e) => report.failures.push((term.clone(), e)),
            }
        }
        Ok(report)
    }
}

/// Where a query answer came from.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryStatus {
    Indexed,
    /// Built on the spot; carries the build status.
    Dynamic(BuildStatus),
    DynamicFailed(String),
    NotFound,
}

/// Representatives for `term` from the database. When there are none and a
/// pipeline is given, the term is built, indexed and answered from that.
pub fn query(
    db: &mut Database,
    term: &str,
    all: bool,
    dynamic: Option<&Pipeline>,
) -> (Vec<DescriptionRecord>, QueryStatus) {
    let found = db.lookup(term, !all);
    if !found.is_empty() {
        return (found, QueryStatus::Indexed);
    }
    let Some(pipeline) = dynamic else {
        return (Vec::new(), QueryStatus::NotFound);
    };
    let build = match pipeline.build_term(term) {
        Ok(b) => b,
        Err(e) => return (Vec::new(), QueryStatus::DynamicFailed(e.to_string())),
    };
    if let Err(e) = db.replace_term(term, build.records.clone()) {
        return (Vec::new(), QueryStatus::DynamicFailed(e.to_string()));
    }
    (db.lookup(term, !all), QueryStatus::Dynamic(build.status))
}
