use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use term_scribe::corpus::{SourceKind, TagSet};
use term_scribe::langmodel::{save_model, train_lm};
use term_scribe::patterns::{mine_patterns, write_candidates, ChunkerConfig};
use term_scribe::pipeline::{
    evaluate, parse_judgments, parse_lexicon, parse_page_counts, query, render_reports,
    BuildStatus, QueryStatus,
};
use term_scribe::{Database, DescriptionRecord, Pipeline, PipelineConfig};

#[derive(Parser)]
#[command(name = "term-scribe", version, about = "Extract and look up term descriptions from web pages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine candidate description patterns from encyclopedia entries.
    MinePatterns {
        /// `headword<TAB>description` per line.
        #[arg(long)]
        entries: PathBuf,
        /// One term per line.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value_t = 100)]
        top_k: usize,
        /// Function words for the chunker, one per line.
        #[arg(long)]
        function_words: Option<PathBuf>,
        /// Write candidates here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the trigram model on one-sentence-per-line text.
    TrainLm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        cutoff: u64,
    },
    /// Build descriptions for every lexicon term and index them.
    Build {
        #[arg(long)]
        lexicon: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Show the indexed descriptions of a term.
    Query {
        term: String,
        /// Build the term on the spot when it is not indexed.
        #[arg(long)]
        dynamic: bool,
        /// Show every description, not only cluster representatives.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score database records against judgments.
    Eval {
        /// `term<TAB>url<TAB>sha256(text)<TAB>1|0` per line.
        #[arg(long)]
        judgments: PathBuf,
        /// `term<TAB>count` per line.
        #[arg(long)]
        pages: PathBuf,
        /// Also score only the records with perplexity below this.
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print the database as JSON Lines or TSV.
    Export {
        #[arg(long, value_parser = ["jsonl", "tsv"], default_value = "jsonl")]
        format: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// TOML pipeline config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    source_kind: Option<SourceKind>,
    /// Corpus directory, URL list file or fetch URL template.
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    max_pages: Option<usize>,
    /// Requests per second per host.
    #[arg(long)]
    rate_limit: Option<f64>,
    /// Fetch timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    user_agent: Option<String>,
    #[arg(long)]
    no_fetch: bool,
    #[arg(long)]
    patterns: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Perplexity threshold of the filter.
    #[arg(long = "filter-threshold")]
    filter_threshold: Option<f64>,
    #[arg(long)]
    window_n: Option<usize>,
    /// Comma-separated tag names.
    #[arg(long, value_delimiter = ',')]
    retained_tags: Option<Vec<String>>,
    /// Comma-separated tag names.
    #[arg(long, value_delimiter = ',')]
    heading_tags: Option<Vec<String>>,
    #[arg(long)]
    cross_page_anchors: bool,
    #[arg(long)]
    max_fragment_chars: Option<usize>,
    #[arg(long)]
    k_clusters: Option<usize>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    min_token_len: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_kind(s: &str) -> Result<SourceKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

/// Fatal configuration problems exit with 2.
struct Fatal(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.into())
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let src = &mut cfg.source;
        if let Some(k) = self.source_kind {
            src.kind = k;
        }
        if let Some(s) = &self.source {
            src.location = s.clone();
        }
        if let Some(n) = self.max_pages {
            src.max_pages = n;
        }
        if let Some(r) = self.rate_limit {
            src.rate_limit = r;
        }
        if let Some(t) = self.timeout {
            if !(t > 0.0 && t.is_finite()) {
                bail!("timeout must be a positive number of seconds");
            }
            src.timeout = Duration::from_secs_f64(t);
        }
        if let Some(u) = &self.user_agent {
            src.user_agent = u.clone();
        }
        if self.no_fetch {
            src.fetch_enabled = false;
        }
        if let Some(p) = &self.patterns {
            cfg.pattern_file = p.clone();
        }
        if let Some(p) = &self.model {
            cfg.model_file = p.clone();
        }
        if let Some(t) = self.filter_threshold {
            cfg.filter.threshold = t;
        }
        let ex = &mut cfg.extraction;
        if let Some(n) = self.window_n {
            ex.window_n = n;
        }
        if let Some(tags) = &self.retained_tags {
            ex.retained_tags = TagSet::new(tags)?;
        }
        if let Some(tags) = &self.heading_tags {
            ex.heading_tags = TagSet::new(tags)?;
        }
        if self.cross_page_anchors {
            ex.cross_page_anchors = true;
        }
        if let Some(n) = self.max_fragment_chars {
            ex.max_fragment_chars = n;
        }
        if let Some(k) = self.k_clusters {
            cfg.k_clusters = k;
        }
        if let Some(p) = &self.stopwords {
            cfg.stopword_file = Some(p.clone());
        }
        if let Some(n) = self.min_token_len {
            cfg.min_token_len = n;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(db) = &self.db {
            cfg.db_path = db.clone();
        }
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn mine(
    entries: &Path,
    lexicon: &Path,
    top_k: usize,
    function_words: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode, Fatal> {
    let mut parsed = Vec::new();
    for (i, line) in read(entries)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((head, text)) = line.split_once('\t') else {
            return Err(anyhow!("{}:{}: expected headword<TAB>description", entries.display(), i + 1).into());
        };
        parsed.push((head.trim().to_string(), text.trim().to_string()));
    }
    let lexicon: HashSet<String> = parse_lexicon(&read(lexicon)?).into_iter().collect();
    let chunker = match function_words {
        Some(p) => ChunkerConfig::with_function_words(
            read(p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_lowercase),
        ),
        None => ChunkerConfig::default(),
    };
    let outcome = mine_patterns(&parsed, &lexicon, top_k, &chunker);
    if let Some(w) = &outcome.warning {
        log::warn!("{w}");
    }
    let text = write_candidates(&outcome.candidates);
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    eprintln!("{} entries used, {} candidates", outcome.entries_used, outcome.candidates.len());
    Ok(ExitCode::SUCCESS)
}

fn train(corpus: &Path, out: &Path, cutoff: u64) -> Result<ExitCode, Fatal> {
    let model = train_lm(&read(corpus)?, cutoff)?;
    save_model(&model, out)?;
    eprintln!(
        "trained on {} predicted tokens, vocabulary {}",
        model.total_tokens(),
        model.vocab().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn build(lexicon: &Path, args: &ConfigArgs) -> Result<ExitCode, Fatal> {
    let lexicon = parse_lexicon(&read(lexicon)?);
    let pipeline = Pipeline::new(args.resolve()?)?;
    let mut db = pipeline.open_database()?;
    let report = pipeline.run_background(&lexicon, &mut db)?;
    for b in &report.builds {
        eprintln!(
            "{}: {} ({} pages, {} extracted, {} kept, {} records)",
            b.term,
            b.status,
            b.pages,
            b.extracted,
            b.kept,
            b.records.len()
        );
        for issue in &b.issues {
            log::info!("{}: {issue}", b.term);
        }
    }
    for (term, err) in &report.failures {
        eprintln!("{term}: FAILED: {err}");
    }
    println!(
        "terms processed: {}, with pages: {}, with descriptions: {}, records: {}",
        report.processed, report.with_pages, report.with_descriptions, report.records
    );
    Ok(if report.has_failures() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn print_records(records: &[DescriptionRecord]) {
    let mut out = std::io::stdout().lock();
    for r in records {
        let mark = if r.representative { "*" } else { " " };
        let _ = writeln!(
            out,
            "{mark} [{}] {} ({} {}, pp {:.1})\n  {}",
            r.cluster_id, r.url, r.method, r.trigger, r.perplexity, r.text
        );
    }
}

fn run_query(term: &str, dynamic: bool, all: bool, args: &ConfigArgs) -> Result<ExitCode, Fatal> {
    let cfg = args.resolve()?;
    let mut db = Database::open(&cfg.db_path)?;
    let pipeline = if dynamic { Some(Pipeline::new(cfg)?) } else { None };
    let (records, status) = query(&mut db, term, all, pipeline.as_ref());
    print_records(&records);
    match status {
        QueryStatus::Indexed | QueryStatus::Dynamic(BuildStatus::Ok) => Ok(ExitCode::SUCCESS),
        QueryStatus::NotFound => {
            eprintln!("no descriptions indexed for `{term}`");
            Ok(ExitCode::from(1))
        }
        QueryStatus::Dynamic(s) => {
            eprintln!("no descriptions for `{term}`: {s}");
            Ok(ExitCode::from(1))
        }
        QueryStatus::DynamicFailed(e) => {
            eprintln!("building `{term}` failed: {e}");
            Ok(ExitCode::from(1))
        }
    }
}

fn run_eval(judgments: &Path, pages: &Path, threshold: Option<f64>, args: &ConfigArgs) -> Result<ExitCode, Fatal> {
    let judgments = parse_judgments(&read(judgments)?).map_err(|e| anyhow!("{}: {e}", judgments.display()))?;
    let pages = parse_page_counts(&read(pages)?).map_err(|e| anyhow!("{}: {e}", pages.display()))?;
    if threshold.is_some_and(|t| !(t > 0.0)) {
        return Err(anyhow!("threshold must be positive").into());
    }
    let cfg = args.resolve()?;
    let db = Database::open(&cfg.db_path)?;
    let records: Vec<DescriptionRecord> = db.records().cloned().collect();
    let all = evaluate(&records, &judgments, &pages);
    let text = match threshold {
        Some(t) => {
            let kept: Vec<DescriptionRecord> =
                records.into_iter().filter(|r| r.perplexity < t).collect();
            let filtered = evaluate(&kept, &judgments, &pages);
            render_reports(&[("all", &all), (&format!("PP < {t}"), &filtered)])
        }
        None => render_reports(&[("all", &all)]),
    };
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn export(format: &str, args: &ConfigArgs) -> Result<ExitCode, Fatal> {
    let cfg = args.resolve()?;
    let db = Database::open(&cfg.db_path)?;
    let mut out = std::io::stdout().lock();
    if format == "tsv" {
        writeln!(out, "term\turl\tmethod\ttrigger\tperplexity\tcluster_id\trepresentative\ttext")?;
        for r in db.records() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.term,
                r.url,
                r.method,
                r.trigger,
                r.perplexity,
                r.cluster_id,
                u8::from(r.representative),
                r.text.replace(['\t', '\n'], " ")
            )?;
        }
    } else {
        db.write_jsonl(&mut out)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::MinePatterns {
            entries,
            lexicon,
            top_k,
            function_words,
            out,
        } => mine(entries, lexicon, *top_k, function_words.as_deref(), out.as_deref()),
        Command::TrainLm { corpus, out, cutoff } => train(corpus, out, *cutoff),
        Command::Build { lexicon, cfg } => build(lexicon, cfg),
        Command::Query { term, dynamic, all, cfg } => run_query(term, *dynamic, *all, cfg),
        Command::Eval {
            judgments,
            pages,
            threshold,
            cfg,
        } => run_eval(judgments, pages, *threshold, cfg),
        Command::Export { format, cfg } => export(format, cfg),
    };
    match result {
        Ok(code) => code,
        Err(Fatal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
