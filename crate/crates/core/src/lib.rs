//! Term description extraction.
//!
//! `term_scribe` turns a collection of HTML pages into a database of short
//! natural-language descriptions for technical terms. The build side runs
//! each term through five stages:
//!
//! 1. [`corpus`]: acquire pages and normalize them to a tagged-text form.
//! 2. [`extract`]: find candidate fragments, either triggered by a two-slot
//!    description pattern (see [`patterns`]) or by document structure
//!    (headings, definition lists, anchors).
//! 3. [`langmodel`]: drop fragments whose trigram perplexity is too high to
//!    be running text.
//! 4. [`cluster`]: group the survivors and pick one representative per group.
//! 5. [`store`]: index the records so they can be looked up later.
//!
//! [`pipeline`] wires the stages together and also hosts the evaluation
//! harness.
//!
//! The numeric parts (language model scoring, similarity and linkage) are
//! generic over a [`Scalar`] so they can run in `f32` or `f64`. The aliases
//! at the crate root fix the scalar to `f64`, which is what the pipeline uses.

pub mod cluster;
pub mod corpus;
pub mod extract;
pub mod langmodel;
pub mod patterns;
pub mod pipeline;
pub mod scalar;
pub mod store;
pub mod text;

pub use scalar::Scalar;

pub use cluster::{Cluster, FeatureVector, Stopwords};
pub use corpus::{NormalizedDoc, RawPage, Sentence, SourceKind, SourceSpec, TagSet};
pub use extract::{Candidate, ExtractionConfig, Method};
pub use langmodel::{FilterConfig, NgramModel};
pub use patterns::{CompiledMatcher, DescriptionPattern, PatternCandidate, PatternMatch};
pub use pipeline::{EvalReport, Pipeline, PipelineConfig};
pub use store::{Database, DescriptionRecord};

/// Dendrogram with `f64` merge similarities.
pub type Dendrogram = cluster::Dendrogram<f64>;
/// A single merge step with an `f64` similarity.
pub type Merge = cluster::Merge<f64>;
/// Log probability in natural-log units.
pub type LogProb = f64;
