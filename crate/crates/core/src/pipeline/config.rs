use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::{DEFAULT_K, DEFAULT_MIN_TOKEN_LEN};
use crate::corpus::{SourceKind, SourceSpec};
use crate::extract::ExtractionConfig;
use crate::langmodel::FilterConfig;

/// Everything a build needs. Loaded from TOML; relative paths are taken
/// relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub source: SourceSpec,
    pub pattern_file: PathBuf,
    pub model_file: PathBuf,
    pub filter: FilterConfig,
    pub extraction: ExtractionConfig,
    pub k_clusters: usize,
    /// Falls back to a built-in English list when unset.
    pub stopword_file: Option<PathBuf>,
    pub min_token_len: usize,
    pub db_path: PathBuf,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            source: SourceSpec::default(),
            pattern_file: "patterns.tsv".into(),
            model_file: "model.lm".into(),
            filter: FilterConfig::default(),
            extraction: ExtractionConfig::default(),
            k_clusters: DEFAULT_K,
            stopword_file: None,
            min_token_len: DEFAULT_MIN_TOKEN_LEN,
            db_path: "descriptions.jsonl".into(),
            workers: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(content: &str) -> Result<Self, String> {
        toml::from_str(content).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let content = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&content).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    /// Makes relative paths relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        rebase(base, &mut self.pattern_file);
        rebase(base, &mut self.model_file);
        rebase(base, &mut self.db_path);
        if let Some(p) = &mut self.stopword_file {
            rebase(base, p);
        }
        if self.source.kind != SourceKind::Fetcher && !self.source.location.is_empty() {
            let mut loc = PathBuf::from(&self.source.location);
            rebase(base, &mut loc);
            self.source.location = loc.to_string_lossy().into_owned();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks value ranges and that every referenced input file exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.k_clusters == 0 {
            return invalid("k_clusters must be at least 1".into());
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1".into());
        }
        if self.min_token_len == 0 {
            return invalid("min_token_len must be at least 1".into());
        }
        if !(self.filter.threshold > 0.0) {
            return invalid(format!("filter threshold must be positive, got {}", self.filter.threshold));
        }
        if self.source.max_pages == 0 {
            return invalid("source.max_pages must be at least 1".into());
        }
        self.extraction
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut files = vec![("pattern_file", &self.pattern_file), ("model_file", &self.model_file)];
        if let Some(p) = &self.stopword_file {
            files.push(("stopword_file", p));
        }
        for (name, path) in files {
            if !path.is_file() {
                return invalid(format!("{name} {} does not exist", path.display()));
            }
        }
        let loc = Path::new(&self.source.location);
        match self.source.kind {
            SourceKind::CorpusDir if !loc.is_dir() => {
                invalid(format!("source directory {} does not exist", loc.display()))
            }
            SourceKind::UrlList if !loc.is_file() => {
                invalid(format!("URL list {} does not exist", loc.display()))
            }
            _ => Ok(()),
        }
    }
}
