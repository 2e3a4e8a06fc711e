use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{Array2, Axis};

use crate::diffmath::Tensor2;
use crate::graphio::{text, IncompleteGraph};
use crate::{Error, Result};

use super::model::ModelBundle;
use super::train::TrainData;

/// Per-node anomaly scores of the real nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub scores: Vec<f64>,
    /// Node ids by descending score, ties by ascending id.
    pub ranking: Vec<usize>,
    /// Filled in by [`ScoreReport::evaluate`]; scoring itself never sees labels.
    pub auroc: Option<f64>,
    pub config_hash: String,
    pub wall_clock: Duration,
}

impl ScoreReport {
    pub fn from_scores(scores: Vec<f64>, config_hash: String, wall_clock: Duration) -> Self {
        let ranking = rank_descending(&scores);
        Self {
            scores,
            ranking,
            auroc: None,
            config_hash,
            wall_clock,
        }
    }

    pub fn evaluate(&mut self, labels: &[u8]) -> Result<f64> {
        let a = auroc(&self.scores, labels)?;
        self.auroc = Some(a);
        Ok(a)
    }

    /// `node_id<TAB>score` lines in ranking order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for &i in &self.ranking {
            s.push_str(&format!("{i}\t{}\n", self.scores[i]));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        text::write_string(path, &self.render())
    }

    /// Reads a score file back into per-node scores.
    pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
        let body = text::read_to_string(path)?;
        let mut pairs = Vec::new();
        let mut offset = 0;
        for (i, line) in body.split_inclusive('\n').enumerate() {
            let t = line.trim();
            if !t.is_empty() {
                let parse_err = |message: String| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    offset,
                    message,
                };
                let (id, score) = t
                    .split_once('\t')
                    .ok_or_else(|| parse_err(format!("expected `node_id<TAB>score`, found {t:?}")))?;
                let id: usize = id.parse().map_err(|e| parse_err(format!("bad node id {id:?}: {e}")))?;
                let score: f64 = score.parse().map_err(|e| parse_err(format!("bad score {score:?}: {e}")))?;
                pairs.push((id, score));
            }
            offset += line.len();
        }
        let n = pairs.len();
        let mut scores = vec![f64::NAN; n];
        for (id, s) in pairs {
            if id >= n || !scores[id].is_nan() {
                return Err(Error::corrupt(path, format!("node ids must be a permutation of 0..{n}, saw {id}")));
            }
            scores[id] = s;
        }
        Ok(scores)
    }
}

pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Row norms.
pub fn latent_norms(z: &Tensor2) -> Vec<f64> {
    z.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

/// Embeddings of the real nodes under the trained networks.
pub fn embed(bundle: &ModelBundle, inc: &IncompleteGraph) -> Result<Tensor2> {
    let nets = bundle.networks()?;
    let cfg = &bundle.config;
    let data = TrainData::real(inc, cfg)?;
    let x_hat = if cfg.no_feature_pathway {
        inc.x_obs.clone()
    } else {
        nets.imputer.eval(&bundle.store, &inc.x_obs)
    };
    nets.projector.eval(&bundle.store, &x_hat, &data.propagation)
}

/// `s_i = ‖z_i‖₂` for every real node.
pub fn score_nodes(bundle: &ModelBundle, inc: &IncompleteGraph) -> Result<ScoreReport> {
    let start = Instant::now();
    let z = embed(bundle, inc)?;
    Ok(ScoreReport::from_scores(latent_norms(&z), bundle.config.hash(), start.elapsed()))
}

/// Rank-based AUROC with midranks for ties.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numerical("AUROC over NaN scores".into()));
    }
    let pos = labels.iter().filter(|&&l| l != 0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("AUROC undefined: labels contain a single class".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] != 0).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Unobserved entries replaced by the mean of the observed entries in their
/// column; columns with nothing observed become 0.
pub fn mean_fill_baseline(x_obs: &Tensor2, mask: &Tensor2) -> Result<Tensor2> {
    crate::diffmath::check_same_shape("mean fill", x_obs, mask)?;
    let sums = (x_obs * mask).sum_axis(Axis(0));
    let counts = mask.sum_axis(Axis(0));
    Ok(Array2::from_shape_fn(x_obs.raw_dim(), |(i, j)| {
        if mask[(i, j)] != 0.0 {
            x_obs[(i, j)]
        } else if counts[j] > 0.0 {
            sums[j] / counts[j]
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.3, 0.1], &[1, 0, 1, 0]).unwrap(), 0.75);
        assert_eq!(auroc(&[5.0, 4.0, 1.0], &[1, 1, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[2.0; 5], &[1, 0, 0, 1, 0]).unwrap(), 0.5);
        assert!(matches!(auroc(&[1.0, 2.0], &[1, 1]), Err(Error::Undefined(_))));
    }

    #[test]
    fn mean_fill_examples() {
        let x = array![[1.0, 5.0], [3.0, 0.0], [0.0, 0.0]];
        let m = array![[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]];
        assert_eq!(mean_fill_baseline(&x, &m).unwrap(), array![[1.0, 0.0], [3.0, 0.0], [2.0, 0.0]]);
        let full = Array2::ones((3, 2));
        assert_eq!(mean_fill_baseline(&x, &full).unwrap(), x);
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        assert_eq!(rank_descending(&[1.0, 3.0, 1.0, 3.0]), vec![1, 3, 0, 2]);
    }
}
