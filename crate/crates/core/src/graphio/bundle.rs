//! Directory archive of an incomplete graph, its labels and masks.
//!
//! ```text
//! <dir>/features.txt       observed features (zero-filled)
//! <dir>/edges.txt          observed edges
//! <dir>/labels.txt         evaluation labels (optional)
//! <dir>/feature_mask.txt   0/1 feature mask
//! <dir>/masked_edges.txt   hidden edges
//! <dir>/meta.txt           key = value: dims, mask settings, source hash,
//!                          byte size and SHA-256 of every file above
//! ```

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{kv, text, AttributedGraph, IncompleteGraph, MaskMode, ObservationMask};
use crate::{Error, Result};

const FORMAT: &str = "incomplete-gad-bundle 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub graph: IncompleteGraph,
    pub labels: Option<Vec<u8>>,
}

impl Bundle {
    /// Warning text when `g` is not the graph this bundle was derived from.
    pub fn source_mismatch(&self, g: &AttributedGraph) -> Option<String> {
        let h = g.content_hash();
        (h != self.graph.source_hash).then(|| {
            format!(
                "bundle was derived from graph {} but was checked against {}",
                self.graph.source_hash, h
            )
        })
    }

    /// Logs and returns the source-hash warning, if any.
    pub fn check_source(&self, g: &AttributedGraph) -> Option<String> {
        let w = self.source_mismatch(g);
        if let Some(msg) = &w {
            log::warn!("{msg}");
        }
        w
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn save_bundle(dir: &Path, graph: &IncompleteGraph, labels: Option<&[u8]>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let m = &graph.masks;
    let mut files: Vec<(&str, String)> = vec![
        ("features.txt", text::render_matrix(&graph.x_obs)),
        ("edges.txt", text::render_edges(&graph.edges_obs)),
        ("feature_mask.txt", text::render_matrix(&m.feature_mask)),
        ("masked_edges.txt", text::render_edges(&m.masked_edges)),
    ];
    if let Some(l) = labels {
        if l.len() != graph.n() {
            return Err(Error::Dimension(format!("{} labels for {} nodes", l.len(), graph.n())));
        }
        files.push(("labels.txt", text::render_labels(l)));
    }
    let mut meta: Vec<(String, String)> = vec![
        ("format".into(), FORMAT.into()),
        ("n".into(), graph.n().to_string()),
        ("d".into(), graph.d().to_string()),
        ("mode".into(), m.mode.to_string()),
        ("node_rate".into(), m.node_rate.to_string()),
        ("edge_rate".into(), m.edge_rate.to_string()),
        ("seed".into(), m.seed.to_string()),
        ("source_hash".into(), graph.source_hash.clone()),
    ];
    for (name, body) in &files {
        text::write_string(&dir.join(name), body)?;
        meta.push((format!("bytes.{name}"), body.len().to_string()));
        meta.push((format!("sha256.{name}"), digest(body.as_bytes())));
    }
    text::write_string(&dir.join("meta.txt"), &kv::render(&meta))
}

fn read_checked(dir: &Path, name: &str, meta: &[(String, String)], meta_path: &Path) -> Result<Option<(PathBuf, String)>> {
    let Some(expected_len) = kv::get(meta, &format!("bytes.{name}")) else {
        return Ok(None);
    };
    let expected_len: usize = kv::parse_value(expected_len, &format!("bytes.{name}"), meta_path)?;
    let expected_sha = kv::require(meta, &format!("sha256.{name}"), meta_path)?;
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if bytes.len() < expected_len {
        return Err(Error::corrupt(
            &path,
            format!("truncated at byte offset {} (expected {expected_len} bytes)", bytes.len()),
        ));
    }
    if bytes.len() > expected_len {
        return Err(Error::corrupt(
            &path,
            format!("{} unexpected bytes after byte offset {expected_len}", bytes.len() - expected_len),
        ));
    }
    if digest(&bytes) != expected_sha {
        return Err(Error::corrupt(&path, "content digest does not match meta.txt"));
    }
    let body = String::from_utf8(bytes).map_err(|e| {
        Error::corrupt(&path, format!("invalid UTF-8 at byte offset {}", e.utf8_error().valid_up_to()))
    })?;
    Ok(Some((path, body)))
}

/// Loads a bundle, verifying sizes and digests before parsing anything.
pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let meta_path = dir.join("meta.txt");
    let meta = kv::parse(&text::read_to_string(&meta_path)?, &meta_path)?;
    let format = kv::require(&meta, "format", &meta_path)?;
    if format != FORMAT {
        return Err(Error::corrupt(&meta_path, format!("unsupported format {format:?}")));
    }
    let num = |k: &str| -> Result<usize> { kv::parse_value(kv::require(&meta, k, &meta_path)?, k, &meta_path) };
    let (n, d) = (num("n")?, num("d")?);
    let required = |name: &str| -> Result<(PathBuf, String)> {
        read_checked(dir, name, &meta, &meta_path)?
            .ok_or_else(|| Error::corrupt(&meta_path, format!("no entry for {name}")))
    };

    let (p, body) = required("features.txt")?;
    let x_obs = text::parse_matrix(&body, &p)?;
    let (p, body) = required("feature_mask.txt")?;
    let feature_mask = text::parse_matrix(&body, &p)?;
    for (what, m) in [("features", &x_obs), ("feature mask", &feature_mask)] {
        // an all-empty text matrix parses as n x 0
        if m.nrows() != n || (m.ncols() != d && !(d == 0 && m.ncols() == 0)) {
            return Err(Error::corrupt(dir, format!("{what} are {:?}, meta says {n}x{d}", m.dim())));
        }
    }
    let (p, body) = required("edges.txt")?;
    let (edges_obs, _) = super::graph::canonical_edges(n, text::parse_edges(&body, &p)?)?;
    let (p, body) = required("masked_edges.txt")?;
    let (masked_edges, _) = super::graph::canonical_edges(n, text::parse_edges(&body, &p)?)?;
    let labels = match read_checked(dir, "labels.txt", &meta, &meta_path)? {
        Some((p, body)) => {
            let l = text::parse_labels(&body, &p)?;
            if l.len() != n {
                return Err(Error::corrupt(&p, format!("{} labels for {n} nodes", l.len())));
            }
            Some(l)
        }
        None => None,
    };
    let mode: MaskMode = kv::require(&meta, "mode", &meta_path)?.parse()?;
    let masks = ObservationMask {
        feature_mask,
        masked_edges,
        mode,
        node_rate: kv::parse_value(kv::require(&meta, "node_rate", &meta_path)?, "node_rate", &meta_path)?,
        edge_rate: kv::parse_value(kv::require(&meta, "edge_rate", &meta_path)?, "edge_rate", &meta_path)?,
        seed: kv::parse_value(kv::require(&meta, "seed", &meta_path)?, "seed", &meta_path)?,
    };
    Ok(Bundle {
        graph: IncompleteGraph {
            x_obs,
            edges_obs,
            masks,
            source_hash: kv::require(&meta, "source_hash", &meta_path)?.to_string(),
        },
        labels,
    })
}
