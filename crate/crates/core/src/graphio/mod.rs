//! Attributed graphs on disk and in memory: loading against a dataset
//! manifest, synthetic anomaly injection, missingness masks and the
//! incomplete-graph bundle archive.

mod bundle;
mod graph;
mod incomplete;
mod inject;
pub mod kv;
mod manifest;
mod mask;
mod synthetic;
pub mod text;

pub use bundle::{load_bundle, save_bundle, Bundle};
pub use graph::{AttributedGraph, EdgeCleanup};
pub use incomplete::{apply_masks, IncompleteGraph};
pub use inject::{inject_anomalies, InjectionSpec};
pub use manifest::{load_graph, reference_stats, DatasetManifest, DatasetStats};
pub use mask::{make_masks, rate_count, MaskMode, ObservationMask};
pub use synthetic::{community_graph, CommunitySpec};
