use std::path::{Path, PathBuf};

use super::{kv, text, AttributedGraph};
use crate::{Error, Result};

/// Where a dataset lives and what it must look like once loaded.
///
/// Manifest files are `key = value` records:
///
/// ```text
/// name = disney
/// features = disney/features.txt   # relative to the manifest
/// edges = disney/edges.txt
/// labels = disney/labels.txt       # omit for injection datasets
/// nodes = 124
/// edge_count = 167
/// feature_dim = 28
/// outliers = 6
/// ```
///
/// `edge_count` is checked against the edge file after self-loops and
/// duplicates are removed. For datasets without a label file, `outliers` is
/// the number of anomalies to inject.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub features: PathBuf,
    pub edges: PathBuf,
    pub labels: Option<PathBuf>,
    pub nodes: usize,
    pub edge_count: usize,
    pub feature_dim: usize,
    pub outliers: usize,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let pairs = kv::parse(&text::read_to_string(path)?, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let num = |key: &str| -> Result<usize> { kv::parse_value(kv::require(&pairs, key, path)?, key, path) };
        Ok(Self {
            name: kv::require(&pairs, "name", path)?.to_string(),
            features: base.join(kv::require(&pairs, "features", path)?),
            edges: base.join(kv::require(&pairs, "edges", path)?),
            labels: kv::get(&pairs, "labels").map(|p| base.join(p)),
            nodes: num("nodes")?,
            edge_count: num("edge_count")?,
            feature_dim: num("feature_dim")?,
            outliers: num("outliers")?,
        })
    }

    /// Datasets without a label file receive synthetic anomalies.
    pub fn needs_injection(&self) -> bool {
        self.labels.is_none()
    }
}

/// Published size statistics of the benchmark graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetStats {
    pub name: &'static str,
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub outliers: usize,
}

const STATS: &[DatasetStats] = &[
    DatasetStats { name: "cora", nodes: 2708, edges: 5803, features: 1433, outliers: 150 },
    DatasetStats { name: "citeseer", nodes: 3327, edges: 5137, features: 3703, outliers: 150 },
    DatasetStats { name: "books", nodes: 1418, edges: 1847, features: 21, outliers: 28 },
    DatasetStats { name: "disney", nodes: 124, edges: 167, features: 28, outliers: 6 },
    DatasetStats { name: "flickr", nodes: 7575, edges: 241_304, features: 12_047, outliers: 450 },
    DatasetStats { name: "acm", nodes: 16_484, edges: 82_175, features: 8337, outliers: 597 },
    DatasetStats { name: "reddit", nodes: 10_984, edges: 84_008, features: 64, outliers: 366 },
];

/// Reference statistics by (case-insensitive) dataset name. Edge counts of
/// injection datasets include the injected clique edges.
pub fn reference_stats(name: &str) -> Option<DatasetStats> {
    STATS.iter().copied().find(|s| s.name.eq_ignore_ascii_case(name))
}

/// Loads and validates a graph against its manifest.
pub fn load_graph(manifest: &DatasetManifest) -> Result<AttributedGraph> {
    let features = text::parse_matrix(&text::read_to_string(&manifest.features)?, &manifest.features)?;
    if features.nrows() != manifest.nodes || features.ncols() != manifest.feature_dim {
        return Err(Error::Dimension(format!(
            "{}: features are {}x{}, manifest says {}x{}",
            manifest.name,
            features.nrows(),
            features.ncols(),
            manifest.nodes,
            manifest.feature_dim
        )));
    }
    let raw_edges = text::parse_edges(&text::read_to_string(&manifest.edges)?, &manifest.edges)?;
    let labels = match &manifest.labels {
        Some(p) => Some(text::parse_labels(&text::read_to_string(p)?, p)?),
        None => None,
    };
    let (graph, cleanup) = AttributedGraph::new(features, raw_edges, labels)?;
    if !cleanup.is_clean() {
        log::warn!(
            "{}: dropped {} self-loops and {} duplicate edges",
            manifest.name,
            cleanup.self_loops,
            cleanup.duplicates
        );
    }
    if graph.edge_count() != manifest.edge_count {
        return Err(Error::Dimension(format!(
            "{}: {} edges loaded, manifest says {}",
            manifest.name,
            graph.edge_count(),
            manifest.edge_count
        )));
    }
    if let Some(k) = graph.outlier_count() {
        if k != manifest.outliers {
            return Err(Error::Dimension(format!(
                "{}: {k} labeled outliers, manifest says {}",
                manifest.name, manifest.outliers
            )));
        }
    }
    Ok(graph)
}
