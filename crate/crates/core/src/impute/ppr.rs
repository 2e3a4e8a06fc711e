use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::diffmath::Tensor2;
use crate::{Error, Result};

/// How `A_obs + I` is turned into the propagation matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiffusionNorm {
    /// Random-walk PPR: each row of `A_obs + I` divided by its sum.
    #[default]
    RowStochastic,
    /// `A_obs + I` used as is. May diverge once `β·λ_max > 1`.
    None,
}

impl fmt::Display for DiffusionNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RowStochastic => "row-stochastic",
            Self::None => "none",
        })
    }
}

impl FromStr for DiffusionNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row-stochastic" | "row" => Ok(Self::RowStochastic),
            "none" | "raw" => Ok(Self::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown diffusion normalization {other:?} (expected row-stochastic or none)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionConfig {
    pub beta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub normalization: DiffusionNorm,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            beta: 0.85,
            max_iters: 50,
            tol: 1e-6,
            normalization: DiffusionNorm::RowStochastic,
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidArgument(format!("ppr beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("ppr tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("ppr max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// What happened during diffusion; stored next to the model.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionReport {
    pub config: DiffusionConfig,
    pub iterations: usize,
    /// Max-abs change of the last iteration.
    pub last_change: f64,
    pub converged: bool,
    pub warning: Option<String>,
}

/// Row-compressed `Ã`.
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    fn propagation(a_obs: &Tensor2, norm: DiffusionNorm) -> Self {
        let n = a_obs.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..n {
            let start = indices.len();
            for j in 0..n {
                let w = a_obs[(i, j)] + if i == j { 1.0 } else { 0.0 };
                if w != 0.0 {
                    indices.push(j);
                    values.push(w);
                }
            }
            if norm == DiffusionNorm::RowStochastic {
                let s: f64 = values[start..].iter().sum();
                for v in &mut values[start..] {
                    *v /= s;
                }
            }
            indptr.push(indices.len());
        }
        Self { indptr, indices, values }
    }

    /// `out = β·self·p + (1−β)·I`, returning the max-abs change against `p`.
    fn step(&self, beta: f64, p: &Tensor2, out: &mut Tensor2) -> f64 {
        let n = p.nrows();
        out.fill(0.0);
        for i in 0..n {
            let mut row = out.row_mut(i);
            for k in self.indptr[i]..self.indptr[i + 1] {
                let w = beta * self.values[k];
                row.scaled_add(w, &p.row(self.indices[k]));
            }
            row[i] += 1.0 - beta;
        }
        out.iter().zip(p.iter()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn check_square(what: &str, a: &Tensor2) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!("{what} must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(format!("{what} must be finite and nonnegative")));
    }
    Ok(())
}

/// Iterates `P ← βÃP + (1−β)I` from `P = I` until the max-abs change drops
/// below `tol` or `max_iters` is reached.
pub fn ppr_diffuse(a_obs: &Tensor2, cfg: &DiffusionConfig) -> Result<(Tensor2, DiffusionReport)> {
    cfg.validate()?;
    check_square("observed adjacency", a_obs)?;
    let n = a_obs.nrows();
    let csr = Csr::propagation(a_obs, cfg.normalization);
    let mut p = Array2::eye(n);
    let mut next = Array2::zeros((n, n));
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        change = csr.step(cfg.beta, &p, &mut next);
        std::mem::swap(&mut p, &mut next);
        iterations += 1;
        if !change.is_finite() || change < cfg.tol {
            break;
        }
    }
    if n == 0 {
        change = 0.0;
    }
    let converged = change < cfg.tol;
    let warning = match (converged, cfg.normalization) {
        (false, DiffusionNorm::None) => {
            let msg = format!(
                "unnormalized ppr did not converge after {iterations} iterations (last change {change:e})"
            );
            log::warn!("{msg}");
            Some(msg)
        }
        _ => None,
    };
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "ppr diffusion overflowed after {iterations} iterations (beta {}, normalization {})",
            cfg.beta, cfg.normalization
        )));
    }
    Ok((
        p,
        DiffusionReport {
            config: *cfg,
            iterations,
            last_change: change,
            converged,
            warning,
        },
    ))
}

/// `Â = A_obs + A_ppr`. With `top_k`, each row of `A_ppr` keeps its diagonal and
/// its `k` largest off-diagonal entries (ties to the lower column) before the sum.
pub fn densify_structure(a_obs: &Tensor2, a_ppr: &Tensor2, top_k: Option<usize>) -> Result<Tensor2> {
    crate::diffmath::check_same_shape("densify", a_obs, a_ppr)?;
    let Some(k) = top_k else {
        return Ok(a_obs + a_ppr);
    };
    let n = a_ppr.nrows();
    let mut out = a_obs.clone();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let row = a_ppr.row(i);
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        out[(i, i)] += row[i];
        for &j in order.iter().take(k) {
            out[(i, j)] += row[j];
        }
    }
    Ok(out)
}

/// `(A + Aᵀ)/2`.
pub fn symmetrize(a: &Tensor2) -> Tensor2 {
    (a + &a.t()) * 0.5
}

/// Densified, symmetrized structure plus the imputed features it is paired with.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateGraph {
    pub x_hat: Tensor2,
    pub a_hat: Tensor2,
    pub top_k: Option<usize>,
    pub diffusion: DiffusionReport,
}

/// Runs diffusion, superposition and symmetrization on the observed adjacency.
pub fn surrogate_structure(
    a_obs: &Tensor2,
    cfg: &DiffusionConfig,
    top_k: Option<usize>,
) -> Result<(Tensor2, DiffusionReport)> {
    let (a_ppr, report) = ppr_diffuse(a_obs, cfg)?;
    let a_hat = densify_structure(a_obs, &a_ppr, top_k)?;
    Ok((symmetrize(&a_hat), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tight(beta: f64) -> DiffusionConfig {
        DiffusionConfig {
            beta,
            max_iters: 10_000,
            tol: 1e-14,
            ..Default::default()
        }
    }

    #[test]
    fn isolated_node_is_fixed() {
        let (p, r) = ppr_diffuse(&array![[0.0]], &DiffusionConfig::default()).unwrap();
        assert_eq!(p, array![[1.0]]);
        assert!(r.converged);
    }

    #[test]
    fn two_nodes_match_the_resolvent() {
        let (p, _) = ppr_diffuse(&array![[0.0, 1.0], [1.0, 0.0]], &tight(0.5)).unwrap();
        let want = array![[0.75, 0.25], [0.25, 0.75]];
        for (a, b) in p.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn converged_result_is_a_fixed_point() {
        let a = array![[0.0, 1.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
        let cfg = DiffusionConfig {
            max_iters: 1000,
            ..Default::default()
        };
        let (p, r) = ppr_diffuse(&a, &cfg).unwrap();
        assert!(r.converged);
        let mut at = &a + &Array2::<f64>::eye(4);
        for mut row in at.rows_mut() {
            let s = row.sum();
            row /= s;
        }
        let resid = &p - &(at.dot(&p) * cfg.beta + Array2::<f64>::eye(4) * (1.0 - cfg.beta));
        // the fixed point contracts by β per step, so residual ≤ (1+β)·change
        assert!(resid.iter().all(|v| v.abs() < 2.0 * cfg.tol));
    }

    #[test]
    fn unnormalized_divergence_is_reported() {
        let a = Array2::from_elem((4, 4), 1.0) - Array2::<f64>::eye(4);
        let cfg = DiffusionConfig {
            normalization: DiffusionNorm::None,
            max_iters: 20,
            ..Default::default()
        };
        let (_, r) = ppr_diffuse(&a, &cfg).unwrap();
        assert!(!r.converged);
        assert!(r.warning.is_some());
    }

    #[test]
    fn zero_diffusion_leaves_observed() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(densify_structure(&a, &Array2::zeros((2, 2)), None).unwrap(), a);
    }

    #[test]
    fn top_one_keeps_largest_off_diagonal() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let ppr = array![[0.75, 0.25], [0.25, 0.75]];
        let d = densify_structure(&a, &ppr, Some(1)).unwrap();
        assert_eq!(d, array![[0.75, 1.25], [1.25, 0.75]]);
        let ppr3 = array![[0.5, 0.2, 0.2], [0.1, 0.6, 0.3], [0.3, 0.3, 0.4]];
        let d = densify_structure(&Array2::zeros((3, 3)), &ppr3, Some(1)).unwrap();
        assert_eq!(d, array![[0.5, 0.2, 0.0], [0.0, 0.6, 0.3], [0.3, 0.0, 0.4]]);
    }

    #[test]
    fn bad_beta_is_rejected() {
        for beta in [0.0, 1.0, -0.2, f64::NAN] {
            let cfg = DiffusionConfig { beta, ..Default::default() };
            assert!(matches!(ppr_diffuse(&array![[0.0]], &cfg), Err(Error::InvalidArgument(_))));
        }
    }
}
