use rand::Rng;

use super::{ParamId, ParamStore};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct GradProbe {
    pub param: String,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub probes: Vec<GradProbe>,
    /// Largest relative error among probes whose gradient exceeds the absolute floor.
    pub max_rel_err: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Absolute agreement below which a probe passes regardless of relative error.
const ABS_FLOOR: f64 = 1e-8;

/// Compares analytic gradients against central differences at `probes`
/// randomly chosen scalar parameters, or at every scalar when `probes` is at
/// least the parameter count.
///
/// `loss` must evaluate the loss at the current parameter values and leave the
/// analytic gradient in the store's gradient buffers (it is called once in
/// that role, then repeatedly for perturbed values).
pub fn grad_check<F>(
    mut loss: F,
    params: &mut ParamStore,
    probes: usize,
    h: f64,
    tol: f64,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParamStore) -> Result<f64>,
{
    params.zero_grad();
    loss(params)?;
    let analytic: Vec<_> = params.ids().map(|id| params.grad(id).clone()).collect();

    let total = params.scalar_count();
    let mut rng = crate::seed::rng(seed);
    // every scalar once when the budget covers them all, else random draws
    let flats: Vec<usize> = if probes >= total {
        (0..total).collect()
    } else {
        (0..probes).map(|_| rng.random_range(0..total)).collect()
    };
    let mut out = Vec::with_capacity(flats.len());
    for mut flat in flats {
        let mut id = ParamId(0);
        for candidate in params.ids() {
            let len = params.value(candidate).len();
            if flat < len {
                id = candidate;
                break;
            }
            flat -= len;
        }
        let cols = params.value(id).ncols();
        let (row, col) = (flat / cols, flat % cols);
        let original = params.value(id)[[row, col]];

        params.value_mut(id)[[row, col]] = original + h;
        let up = loss(params)?;
        params.value_mut(id)[[row, col]] = original - h;
        let down = loss(params)?;
        params.value_mut(id)[[row, col]] = original;

        let numeric = (up - down) / (2.0 * h);
        let a = analytic[id.index()][[row, col]];
        let diff = (a - numeric).abs();
        let scale = a.abs().max(numeric.abs());
        let rel_err = if scale > 0.0 { diff / scale } else { 0.0 };
        out.push(GradProbe {
            param: params.name(id).to_string(),
            row,
            col,
            analytic: a,
            numeric,
            rel_err,
            passed: diff <= ABS_FLOOR || rel_err <= tol,
        });
    }
    params.zero_grad();
    for id in params.ids() {
        params.grad_mut(id).assign(&analytic[id.index()]);
    }
    let max_rel_err = out
        .iter()
        .filter(|p| p.analytic.abs().max(p.numeric.abs()) > ABS_FLOOR)
        .map(|p| p.rel_err)
        .fold(0.0, f64::max);
    let passed = out.iter().all(|p| p.passed);
    Ok(GradCheckReport {
        probes: out,
        max_rel_err,
        tol,
        passed,
    })
}
