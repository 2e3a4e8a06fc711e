//! Debiased entropic optimal transport between uniform point clouds.
//!
//! `S(P,Q) = OT(P,Q) − ½OT(P,P) − ½OT(Q,Q)` with squared Euclidean cost. The
//! dual potentials are updated in the log domain with symmetric averaged steps
//!
//! ```text
//! f ← ½(f + T_a(g)),   g ← ½(g + T_b(f)),   T_a(g)_i = −ε·LSE_j(ln b_j + (g_j − C_ij)/ε)
//! ```
//!
//! for a fixed number of iterations starting from zero, and `OT = ⟨a,f⟩ + ⟨b,g⟩`.
//! Both potentials are updated from the previous iterate, so swapping the clouds
//! swaps `f` and `g` exactly and `OT(P,P)` has `f = g` at every step. Gradients
//! come from replaying the stored iterates in reverse.

use std::rc::Rc;

use ndarray::Array2;

use crate::diffmath::{Tape, Tensor2, Var};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinkhornConfig {
    pub eps: f64,
    pub iters: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self { eps: 0.1, iters: 1000 }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("sinkhorn eps must be positive, got {}", self.eps)));
        }
        if self.iters == 0 {
            return Err(Error::InvalidArgument("sinkhorn iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Row-major `m×k` squared distances.
fn cost(p: &Tensor2, q: &Tensor2) -> Vec<f64> {
    let (m, k) = (p.nrows(), q.nrows());
    let mut c = vec![0.0; m * k];
    for i in 0..m {
        let pi = p.row(i);
        for j in 0..k {
            let qj = q.row(j);
            c[i * k + j] = pi.iter().zip(qj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    c
}

fn transpose(c: &[f64], m: usize, k: usize) -> Vec<f64> {
    let mut t = vec![0.0; m * k];
    for i in 0..m {
        for j in 0..k {
            t[j * m + i] = c[i * k + j];
        }
    }
    t
}

/// `out_i = −ε·LSE_j(ln w + (g_j − C_ij)/ε)` for row-major `C` (`rows×cols`), uniform `w = 1/cols`.
fn soft_min(c: &[f64], rows: usize, cols: usize, g: &[f64], eps: f64, out: &mut [f64]) {
    let ln_w = -(cols as f64).ln();
    for i in 0..rows {
        let row = &c[i * cols..(i + 1) * cols];
        let mut mx = f64::NEG_INFINITY;
        for j in 0..cols {
            mx = mx.max((g[j] - row[j]) / eps);
        }
        let mut s = 0.0;
        for j in 0..cols {
            s += ((g[j] - row[j]) / eps - mx).exp();
        }
        out[i] = -eps * (ln_w + mx + s.ln());
    }
}

fn check_finite(v: &[f64], it: usize, eps: f64) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "sinkhorn potentials became non-finite at iteration {it} (eps {eps} too small for the cost scale?)"
        )));
    }
    Ok(())
}

/// Stored iterates for reverse replay. `fs[t]`, `gs[t]` are the potentials after
/// `t` steps; `ta[t]`, `tb[t]` the soft-min outputs computed during step `t+1`.
struct Trace {
    fs: Vec<Vec<f64>>,
    gs: Vec<Vec<f64>>,
    ta: Vec<Vec<f64>>,
    tb: Vec<Vec<f64>>,
}

struct Cross {
    m: usize,
    k: usize,
    c: Vec<f64>,
    ct: Vec<f64>,
    value: f64,
    trace: Option<Trace>,
}

fn ot_cross(p: &Tensor2, q: &Tensor2, cfg: &SinkhornConfig, keep: bool) -> Result<Cross> {
    let (m, k) = (p.nrows(), q.nrows());
    let c = cost(p, q);
    let ct = transpose(&c, m, k);
    let (mut f, mut g) = (vec![0.0; m], vec![0.0; k]);
    let (mut ta, mut tb) = (vec![0.0; m], vec![0.0; k]);
    let mut trace = keep.then(|| Trace {
        fs: vec![f.clone()],
        gs: vec![g.clone()],
        ta: Vec::with_capacity(cfg.iters),
        tb: Vec::with_capacity(cfg.iters),
    });
    for it in 1..=cfg.iters {
        soft_min(&c, m, k, &g, cfg.eps, &mut ta);
        soft_min(&ct, k, m, &f, cfg.eps, &mut tb);
        for (fi, t) in f.iter_mut().zip(&ta) {
            *fi = 0.5 * (*fi + t);
        }
        for (gj, t) in g.iter_mut().zip(&tb) {
            *gj = 0.5 * (*gj + t);
        }
        check_finite(&f, it, cfg.eps)?;
        check_finite(&g, it, cfg.eps)?;
        if let Some(tr) = trace.as_mut() {
            tr.fs.push(f.clone());
            tr.gs.push(g.clone());
            tr.ta.push(ta.clone());
            tr.tb.push(tb.clone());
        }
    }
    let value = f.iter().sum::<f64>() / m as f64 + g.iter().sum::<f64>() / k as f64;
    Ok(Cross { m, k, c, ct, value, trace })
}

/// Adjoint of the cost matrix (row-major `m×k`) given `∂OT/∂OT = 1`.
fn cross_cost_adjoint(x: &Cross, eps: f64) -> Vec<f64> {
    let (m, k) = (x.m, x.k);
    let tr = x.trace.as_ref().expect("trace kept");
    let mut fbar = vec![1.0 / m as f64; m];
    let mut gbar = vec![1.0 / k as f64; k];
    let mut cbar = vec![0.0; m * k];
    let (ln_a, ln_b) = (-(m as f64).ln(), -(k as f64).ln());
    for t in (0..tr.ta.len()).rev() {
        let (f, g) = (&tr.fs[t], &tr.gs[t]);
        let u: Vec<f64> = fbar.iter().map(|v| 0.5 * v).collect();
        let v: Vec<f64> = gbar.iter().map(|v| 0.5 * v).collect();
        let mut fnew: Vec<f64> = u.clone();
        let mut gnew: Vec<f64> = v.clone();
        // T_a(g)_i: weights over j, softmax(ln b + (g − C_i·)/ε) = exp(… + T_a_i/ε)
        for i in 0..m {
            let lse = tr.ta[t][i] / eps;
            for j in 0..k {
                let w = (ln_b + (g[j] - x.c[i * k + j]) / eps + lse).exp();
                gnew[j] -= u[i] * w;
                cbar[i * k + j] += u[i] * w;
            }
        }
        for j in 0..k {
            let lse = tr.tb[t][j] / eps;
            for i in 0..m {
                let w = (ln_a + (f[i] - x.ct[j * m + i]) / eps + lse).exp();
                fnew[i] -= v[j] * w;
                cbar[i * k + j] += v[j] * w;
            }
        }
        fbar = fnew;
        gbar = gnew;
    }
    cbar
}

struct SelfOt {
    m: usize,
    c: Vec<f64>,
    value: f64,
    trace: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

/// `OT(P,P)` tracking the single shared potential.
fn ot_self(p: &Tensor2, cfg: &SinkhornConfig, keep: bool) -> Result<SelfOt> {
    let m = p.nrows();
    let c = cost(p, p);
    let mut f = vec![0.0; m];
    let mut t = vec![0.0; m];
    let mut trace = keep.then(|| (vec![f.clone()], Vec::with_capacity(cfg.iters)));
    for it in 1..=cfg.iters {
        soft_min(&c, m, m, &f, cfg.eps, &mut t);
        for (fi, ti) in f.iter_mut().zip(&t) {
            *fi = 0.5 * (*fi + ti);
        }
        check_finite(&f, it, cfg.eps)?;
        if let Some((fs, ts)) = trace.as_mut() {
            fs.push(f.clone());
            ts.push(t.clone());
        }
    }
    let half = f.iter().sum::<f64>() / m as f64;
    Ok(SelfOt {
        m,
        c,
        value: half + half,
        trace,
    })
}

fn self_cost_adjoint(x: &SelfOt, eps: f64) -> Vec<f64> {
    let m = x.m;
    let (fs, ts) = x.trace.as_ref().expect("trace kept");
    let ln_a = -(m as f64).ln();
    let mut fbar = vec![2.0 / m as f64; m];
    let mut cbar = vec![0.0; m * m];
    for t in (0..ts.len()).rev() {
        let f = &fs[t];
        let u: Vec<f64> = fbar.iter().map(|v| 0.5 * v).collect();
        let mut fnew = u.clone();
        for i in 0..m {
            let lse = ts[t][i] / eps;
            for j in 0..m {
                let w = (ln_a + (f[j] - x.c[i * m + j]) / eps + lse).exp();
                fnew[j] -= u[i] * w;
                cbar[i * m + j] += u[i] * w;
            }
        }
        fbar = fnew;
    }
    cbar
}

/// `∂/∂P` of `Σ C̄_ij ‖p_i − q_j‖²`.
fn pull_back(cbar: &[f64], p: &Tensor2, q: &Tensor2) -> Tensor2 {
    let (m, k) = (p.nrows(), q.nrows());
    let mut grad = Array2::zeros(p.raw_dim());
    for i in 0..m {
        let mut gi = grad.row_mut(i);
        for j in 0..k {
            let w = 2.0 * cbar[i * k + j];
            if w != 0.0 {
                gi.scaled_add(w, &(&p.row(i) - &q.row(j)));
            }
        }
    }
    grad
}

fn check_clouds(p: &Tensor2, q: &Tensor2) -> Result<()> {
    if p.nrows() == 0 || q.nrows() == 0 {
        return Err(Error::InvalidArgument("sinkhorn needs at least one atom per cloud".into()));
    }
    if p.ncols() != q.ncols() {
        return Err(Error::Shape(format!(
            "sinkhorn clouds live in {} and {} dimensions",
            p.ncols(),
            q.ncols()
        )));
    }
    Ok(())
}

/// Entropic transport cost `OT_ε(P,Q)` without debiasing.
pub fn ot_eps(p: &Tensor2, q: &Tensor2, cfg: &SinkhornConfig) -> Result<f64> {
    cfg.validate()?;
    check_clouds(p, q)?;
    Ok(ot_cross(p, q, cfg, false)?.value)
}

/// Debiased divergence `S_ε(P,Q)`.
pub fn sinkhorn_divergence(p: &Tensor2, q: &Tensor2, cfg: &SinkhornConfig) -> Result<f64> {
    cfg.validate()?;
    check_clouds(p, q)?;
    let pq = ot_cross(p, q, cfg, false)?.value;
    let pp = ot_self(p, cfg, false)?.value;
    let qq = ot_self(q, cfg, false)?.value;
    Ok(pq - 0.5 * pp - 0.5 * qq)
}

/// `S_ε(P,Q)` and its gradient with respect to `P`.
pub fn sinkhorn_divergence_grad(p: &Tensor2, q: &Tensor2, cfg: &SinkhornConfig) -> Result<(f64, Tensor2)> {
    cfg.validate()?;
    check_clouds(p, q)?;
    let pq = ot_cross(p, q, cfg, true)?;
    let pp = ot_self(p, cfg, true)?;
    let qq = ot_self(q, cfg, false)?.value;
    let value = pq.value - 0.5 * pp.value - 0.5 * qq;

    let mut grad = pull_back(&cross_cost_adjoint(&pq, cfg.eps), p, q);
    // C(P,P) depends on P through both indices: symmetrize the adjoint.
    let cb = self_cost_adjoint(&pp, cfg.eps);
    let m = p.nrows();
    let sym: Vec<f64> = (0..m * m).map(|ij| 0.5 * (cb[ij] + cb[(ij % m) * m + ij / m])).collect();
    grad.scaled_add(-1.0, &pull_back(&sym, p, p));
    Ok((value, grad))
}

/// Records `S_ε(P, Q)` on the tape with `Q` held constant.
pub fn sinkhorn_loss(tape: &mut Tape, p: Var, q: &Rc<Tensor2>, cfg: &SinkhornConfig) -> Result<Var> {
    let pv = tape.value(p).clone();
    let (value, grad) = sinkhorn_divergence_grad(&pv, q, cfg)?;
    Ok(tape.custom(
        &[p],
        Array2::from_elem((1, 1), value),
        Box::new(move |out| vec![&grad * out[(0, 0)]]),
    ))
}
