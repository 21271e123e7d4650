use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use url::Url;

use super::{decode_bytes, RawPage};
use crate::text::term_key;

/// Where pages come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// A directory of `*.html` / `*.htm` files.
    CorpusDir,
    /// A text file with one absolute URL per line.
    UrlList,
    /// A URL template containing `{term}`; the response is a URL list.
    Fetcher,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::CorpusDir => "corpus-dir",
            SourceKind::UrlList => "url-list",
            SourceKind::Fetcher => "fetcher",
        })
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corpus-dir" => Ok(SourceKind::CorpusDir),
            "url-list" => Ok(SourceKind::UrlList),
            "fetcher" => Ok(SourceKind::Fetcher),
            other => Err(format!(
                "unknown source kind `{other}` (expected corpus-dir, url-list or fetcher)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub location: String,
    pub max_pages: usize,
    /// Requests per second per host.
    pub rate_limit: f64,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub user_agent: String,
    /// Static switch for network access.
    pub fetch_enabled: bool,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            kind: SourceKind::CorpusDir,
            location: String::new(),
            max_pages: 1000,
            rate_limit: 1.0,
            timeout: Duration::from_secs(10),
            user_agent: concat!("term-scribe/", env!("CARGO_PKG_VERSION")).to_string(),
            fetch_enabled: true,
        }
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("cannot read source location {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("search request {url} failed: {reason}")]
    Search { url: String, reason: String },
    #[error("invalid source configuration: {0}")]
    Config(String),
}

/// A page that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestIssue {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    /// Pages considered after the cap.
    pub attempted: usize,
    pub loaded: usize,
    /// Set when more pages were available than `max_pages`.
    pub truncated: bool,
    pub issues: Vec<IngestIssue>,
}

impl IngestReport {
    pub fn is_empty(&self) -> bool {
        self.loaded == 0
    }

    fn issue(&mut self, url: impl Into<String>, reason: impl Into<String>) {
        let issue = IngestIssue {
            url: url.into(),
            reason: reason.into(),
        };
        log::warn!("skipping {}: {}", issue.url, issue.reason);
        self.issues.push(issue);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub bytes: Vec<u8>,
    pub content_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("{0}")]
    Transport(String),
    #[error("network fetching is disabled")]
    Disabled,
}

/// Retrieves a single URL.
pub trait PageFetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError>;
}

/// Blocking HTTP GET fetcher with a per-host rate limit.
pub struct HttpFetcher {
    agent: ureq::Agent,
    min_interval: Duration,
    enabled: bool,
    last_request: Mutex<HashMap<String, Instant>>,
}

const MAX_BODY_BYTES: u64 = 8 * 1024 * 1024;

impl HttpFetcher {
    pub fn new(spec: &SourceSpec) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(spec.timeout))
            .user_agent(spec.user_agent.as_str())
            .http_status_as_error(false)
            .build()
            .into();
        let min_interval = if spec.rate_limit > 0.0 {
            Duration::from_secs_f64(1.0 / spec.rate_limit)
        } else {
            Duration::ZERO
        };
        Self {
            agent,
            min_interval,
            enabled: spec.fetch_enabled,
            last_request: Mutex::new(HashMap::new()),
        }
    }

    /// Blocks until a request to `host` is allowed. The lock is held while
    /// waiting, so requests are serialized.
    fn wait_turn(&self, host: &str) {
        let mut last = self.last_request.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = last.get(host) {
            let ready = *prev + self.min_interval;
            let now = Instant::now();
            if ready > now {
                std::thread::sleep(ready - now);
            }
        }
        last.insert(host.to_string(), Instant::now());
    }
}

impl PageFetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        if !self.enabled {
            return Err(FetchError::Disabled);
        }
        let parsed = Url::parse(url).map_err(|e| FetchError::Transport(e.to_string()))?;
        self.wait_turn(parsed.host_str().unwrap_or(""));
        let mut resp = self
            .agent
            .get(url)
            .call()
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(FetchError::Status(status));
        }
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let mut bytes = Vec::new();
        resp.body_mut()
            .as_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut bytes)
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        Ok(FetchedPage {
            bytes,
            content_type,
        })
    }
}

/// Parses a URL list: one absolute URL per line, `#` comments and blank
/// lines ignored. Invalid lines are returned as `(line number, reason)`.
pub fn parse_url_list(content: &str) -> (Vec<String>, Vec<(usize, String)>) {
    let mut urls = Vec::new();
    let mut bad = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match Url::parse(line) {
            Ok(_) => {
                if seen.insert(line.to_string()) {
                    urls.push(line.to_string());
                }
            }
            Err(e) => bad.push((idx + 1, format!("`{line}`: {e}"))),
        }
    }
    (urls, bad)
}

fn mentions(content: &str, key: &str) -> bool {
    term_key(content).contains(key)
}

/// Loads pages described by `spec`, using HTTP for the network kinds.
///
/// With a `term`, only pages mentioning it (case-insensitively) are kept,
/// which is what a search engine would have returned.
pub fn load_source(
    spec: &SourceSpec,
    term: Option<&str>,
) -> Result<(Vec<RawPage>, IngestReport), SourceError> {
    match spec.kind {
        SourceKind::CorpusDir => load_corpus_dir(spec, term),
        _ => load_source_with(spec, term, &HttpFetcher::new(spec)),
    }
}

/// Same as [`load_source`] with an explicit fetcher.
pub fn load_source_with(
    spec: &SourceSpec,
    term: Option<&str>,
    fetcher: &dyn PageFetcher,
) -> Result<(Vec<RawPage>, IngestReport), SourceError> {
    if spec.max_pages == 0 {
        return Err(SourceError::Config("max_pages must be at least 1".into()));
    }
    match spec.kind {
        SourceKind::CorpusDir => load_corpus_dir(spec, term),
        SourceKind::UrlList => {
            let path = Path::new(&spec.location);
            let content = std::fs::read_to_string(path).map_err(|source| SourceError::Unreadable {
                path: path.to_path_buf(),
                source,
            })?;
            let mut report = IngestReport::default();
            let (urls, bad) = parse_url_list(&content);
            for (line, reason) in bad {
                report.issue(format!("{}:{line}", spec.location), reason);
            }
            Ok(fetch_all(spec, term, &urls, fetcher, report))
        }
        SourceKind::Fetcher => {
            let Some(term) = term else {
                return Err(SourceError::Config(
                    "the fetcher source needs a term to search for".into(),
                ));
            };
            if !spec.location.contains("{term}") {
                return Err(SourceError::Config(format!(
                    "fetcher location `{}` has no {{term}} placeholder",
                    spec.location
                )));
            }
            let encoded: String = url::form_urlencoded::byte_serialize(term.as_bytes()).collect();
            let search_url = spec.location.replace("{term}", &encoded);
            let listing = fetcher.fetch(&search_url).map_err(|e| SourceError::Search {
                url: search_url.clone(),
                reason: e.to_string(),
            })?;
            let (content, _) = decode_bytes(&listing.bytes, listing.content_type.as_deref());
            let mut report = IngestReport::default();
            let (urls, bad) = parse_url_list(&content);
            for (line, reason) in bad {
                report.issue(format!("{search_url}#L{line}"), reason);
            }
            Ok(fetch_all(spec, Some(term), &urls, fetcher, report))
        }
    }
}

fn fetch_all(
    spec: &SourceSpec,
    term: Option<&str>,
    urls: &[String],
    fetcher: &dyn PageFetcher,
    mut report: IngestReport,
) -> (Vec<RawPage>, IngestReport) {
    let key = term.map(term_key);
    report.truncated = urls.len() > spec.max_pages;
    let mut pages = Vec::new();
    for url in urls.iter().take(spec.max_pages) {
        report.attempted += 1;
        let fetched = match fetcher.fetch(url) {
            Ok(f) => f,
            Err(e) => {
                report.issue(url.as_str(), e.to_string());
                continue;
            }
        };
        let (content, had_errors) = decode_bytes(&fetched.bytes, fetched.content_type.as_deref());
        if had_errors {
            report.issue(url.as_str(), "malformed byte sequences replaced during decoding");
        }
        if key.as_deref().is_some_and(|k| !mentions(&content, k)) {
            continue;
        }
        pages.push(RawPage::new(url.as_str(), content));
    }
    report.loaded = pages.len();
    (pages, report)
}

fn load_corpus_dir(
    spec: &SourceSpec,
    term: Option<&str>,
) -> Result<(Vec<RawPage>, IngestReport), SourceError> {
    let dir = Path::new(&spec.location);
    let unreadable = |source| SourceError::Unreadable {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(unreadable)? {
        let path = entry.map_err(unreadable)?.path();
        let is_html = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"));
        if is_html && path.is_file() {
            paths.push(path.to_string_lossy().into_owned());
        }
    }
    paths.sort();

    let key = term.map(term_key);
    let mut report = IngestReport::default();
    let mut pages = Vec::new();
    for path in paths {
        if pages.len() == spec.max_pages {
            report.truncated = true;
            break;
        }
        report.attempted += 1;
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) => {
                report.issue(path, e.to_string());
                continue;
            }
        };
        let (content, had_errors) = decode_bytes(&bytes, None);
        if had_errors {
            report.issue(path.as_str(), "malformed byte sequences replaced during decoding");
        }
        if key.as_deref().is_some_and(|k| !mentions(&content, k)) {
            continue;
        }
        pages.push(RawPage::new(path, content));
    }
    report.loaded = pages.len();
    Ok((pages, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct MapFetcher(HashMap<String, Result<String, u16>>);

    impl PageFetcher for MapFetcher {
        fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
            match self.0.get(url) {
                Some(Ok(body)) => Ok(FetchedPage {
                    bytes: body.clone().into_bytes(),
                    content_type: Some("text/html; charset=utf-8".into()),
                }),
                Some(Err(code)) => Err(FetchError::Status(*code)),
                None => Err(FetchError::Status(404)),
            }
        }
    }

    fn dir_spec(dir: &Path) -> SourceSpec {
        SourceSpec {
            location: dir.to_string_lossy().into_owned(),
            ..SourceSpec::default()
        }
    }

    #[test]
    fn corpus_dir_sorted_by_path() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["c.html", "a.htm", "b.html", "notes.txt"] {
            std::fs::write(dir.path().join(name), format!("<p>{name}</p>")).unwrap();
        }
        let (pages, report) = load_source(&dir_spec(dir.path()), None).unwrap();
        let names: Vec<_> = pages
            .iter()
            .map(|p| Path::new(&p.url).file_name().unwrap().to_str().unwrap())
            .collect();
        assert_eq!(names, ["a.htm", "b.html", "c.html"]);
        assert_eq!(report.loaded, 3);
        assert!(report.issues.is_empty());
    }

    #[test]
    fn corpus_dir_empty() {
        let dir = tempfile::tempdir().unwrap();
        let (pages, report) = load_source(&dir_spec(dir.path()), None).unwrap();
        assert!(pages.is_empty());
        assert!(report.is_empty());
    }

    #[test]
    fn corpus_dir_missing_is_fatal() {
        let spec = SourceSpec {
            location: "/definitely/not/here".into(),
            ..SourceSpec::default()
        };
        assert!(matches!(
            load_source(&spec, None),
            Err(SourceError::Unreadable { .. })
        ));
    }

    #[test]
    fn corpus_dir_term_filter_and_cap() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..5 {
            let body = if i % 2 == 0 { "Data\nMining rocks" } else { "nothing" };
            std::fs::write(dir.path().join(format!("p{i}.html")), body).unwrap();
        }
        let mut spec = dir_spec(dir.path());
        let (pages, _) = load_source(&spec, Some("data mining")).unwrap();
        assert_eq!(pages.len(), 3);
        spec.max_pages = 2;
        let (pages, report) = load_source(&spec, Some("data mining")).unwrap();
        assert_eq!(pages.len(), 2);
        assert!(report.truncated);
    }

    #[test]
    fn corpus_dir_reports_bad_encoding() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.html"), b"caf\xe9").unwrap();
        let (pages, report) = load_source(&dir_spec(dir.path()), None).unwrap();
        assert_eq!(pages.len(), 1);
        assert_eq!(report.issues.len(), 1);
    }

    #[test]
    fn url_list_caps_at_max_pages() {
        let dir = tempfile::tempdir().unwrap();
        let mut list = String::from("# search results\n\n");
        let mut bodies = HashMap::new();
        for i in 0..1500 {
            let url = format!("http://example.org/{i}");
            list.push_str(&url);
            list.push('\n');
            bodies.insert(url, Ok(format!("<p>page {i}</p>")));
        }
        let path = dir.path().join("urls.txt");
        std::fs::write(&path, list).unwrap();
        let spec = SourceSpec {
            kind: SourceKind::UrlList,
            location: path.to_string_lossy().into_owned(),
            ..SourceSpec::default()
        };
        let (pages, report) = load_source_with(&spec, None, &MapFetcher(bodies)).unwrap();
        assert_eq!(pages.len(), 1000);
        assert_eq!(pages[0].url, "http://example.org/0");
        assert_eq!(pages[999].url, "http://example.org/999");
        assert!(report.truncated);
    }

    #[test]
    fn url_list_skips_failures() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("urls.txt");
        std::fs::write(&path, "http://a.test/1\nnot a url\nhttp://a.test/2\nhttp://a.test/3\n").unwrap();
        let bodies = HashMap::from([
            ("http://a.test/1".to_string(), Ok("one".to_string())),
            ("http://a.test/2".to_string(), Err(500)),
            ("http://a.test/3".to_string(), Ok("three".to_string())),
        ]);
        let spec = SourceSpec {
            kind: SourceKind::UrlList,
            location: path.to_string_lossy().into_owned(),
            ..SourceSpec::default()
        };
        let (pages, report) = load_source_with(&spec, None, &MapFetcher(bodies)).unwrap();
        assert_eq!(pages.len(), 2);
        assert_eq!(report.issues.len(), 2);
        assert!(report.issues.iter().any(|i| i.reason.contains("500")));
    }

    #[test]
    fn fetcher_uses_search_listing() {
        let bodies = HashMap::from([
            (
                "http://search.test/?q=data+mining".to_string(),
                Ok("http://site.test/a\nhttp://site.test/b\n".to_string()),
            ),
            ("http://site.test/a".to_string(), Ok("<p>Data mining is fun.</p>".to_string())),
            ("http://site.test/b".to_string(), Ok("<p>unrelated</p>".to_string())),
        ]);
        let spec = SourceSpec {
            kind: SourceKind::Fetcher,
            location: "http://search.test/?q={term}".into(),
            ..SourceSpec::default()
        };
        let (pages, report) =
            load_source_with(&spec, Some("data mining"), &MapFetcher(bodies)).unwrap();
        assert_eq!(pages.len(), 1);
        assert_eq!(pages[0].url, "http://site.test/a");
        assert_eq!(report.attempted, 2);
    }

    #[test]
    fn disabled_fetcher_refuses() {
        let spec = SourceSpec {
            fetch_enabled: false,
            ..SourceSpec::default()
        };
        let f = HttpFetcher::new(&spec);
        assert_eq!(f.fetch("http://example.org/").unwrap_err(), FetchError::Disabled);
    }

    #[test]
    fn url_list_parsing() {
        let (urls, bad) = parse_url_list("# c\nhttp://x.test/a\nhttp://x.test/a\n\nftp:/\nrelative/path\n");
        assert_eq!(urls, ["http://x.test/a"]);
        assert_eq!(bad.len(), 2);
        assert_eq!(bad[1].0, 6);
    }
}
