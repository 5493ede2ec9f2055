//! Toolkit for building and scoring tool-use datasets in the QAOA
//! (Query–Action–Observation–Answer) conversation format.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`model`] — the QAOA data model, the line-delimited wire format,
//!   model-response parsing, and interaction-structure classification.
//! - [`curation`] — multi-stage tool-pool filtering (exact dedup, temporal
//!   keyword filter, schema validation, semantic dedup) with a stage-by-stage
//!   reduction report.
//! - [`candidates`] — per-instance candidate tool lists: the Hybrid-20
//!   setting (anchors + hard negatives + 5 random easy negatives) and the
//!   ground-truth-only setting.
//! - [`matching`] — cascaded function-call matching: normalized exact
//!   matching plus ROUGE-L semantic matching for string arguments.
//! - [`metrics`] — call alignment and the four macro-averaged metrics
//!   (SP, FP, SPA, FPA) at turn and conversation granularity.
//! - [`synthesis`] — provider-driven trajectory generation for single-hop,
//!   multi-hop (serial/parallel), and multi-turn scenarios, with anchor
//!   linkage enforcement and a rubric-based quality gate.
//! - [`providers`] — chat-completion and embedding provider contracts, an
//!   HTTP implementation, and deterministic mocks for offline runs.
//! - [`stats`] — dataset statistics and ratio-stratified sampling.

pub mod candidates;
pub mod curation;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod providers;
pub mod stats;
pub mod synthesis;
