use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::special::{ln_gamma_p, log_add_exp};
use crate::diffmath::Tensor2;
use crate::{Error, Result};

/// Radii that must stay strictly inside a support are pulled in by this
/// relative margin so rounding in `ρ·direction` cannot reach a boundary.
const EDGE: f64 = 1e-12;

/// Latent dimension and the radii of the ball prior and the anomaly shell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorSpec {
    pub d_z: usize,
    pub r: f64,
    pub r_a: f64,
    pub r_b: f64,
}

impl PriorSpec {
    /// Shell radii default to `1.2 r` and `2 r`.
    pub fn new(d_z: usize, r: f64) -> Self {
        Self {
            d_z,
            r,
            r_a: 1.2 * r,
            r_b: 2.0 * r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_z == 0 {
            return Err(Error::InvalidArgument("latent dimension must be at least 1".into()));
        }
        if !(self.r > 0.0 && self.r < self.r_a && self.r_a < self.r_b && self.r_b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prior radii must satisfy 0 < r < r_a < r_b, got r={} r_a={} r_b={}",
                self.r, self.r_a, self.r_b
            )));
        }
        Ok(())
    }
}

/// `m` points uniform on the unit sphere in `d` dimensions.
pub fn random_directions<R: Rng>(m: usize, d: usize, rng: &mut R) -> Tensor2 {
    let mut out: Tensor2 = Array2::zeros((m, d));
    for mut row in out.rows_mut() {
        loop {
            row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
                break;
            }
        }
    }
    out
}

/// Log-CDF (unnormalized) of the chi distribution with `d` degrees of freedom.
fn ln_chi_cdf(d: usize, rho: f64) -> f64 {
    ln_gamma_p(0.5 * d as f64, 0.5 * rho * rho)
}

/// Radius with density `∝ ρ^{d−1} e^{−ρ²/2}` restricted to `[lo, hi]`, by inverting
/// the regularized incomplete gamma at quantile `u ∈ [0,1]`. Bisection runs until the
/// bracket is 1e-12 wide or can no longer shrink.
pub fn truncated_chi_radius(d: usize, lo: f64, hi: f64, u: f64) -> f64 {
    let (la, lb) = (ln_chi_cdf(d, lo), ln_chi_cdf(d, hi));
    let target = log_add_exp((1.0 - u).ln() + la, u.ln() + lb);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..400 {
        if b - a <= 1e-12 {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if ln_chi_cdf(d, mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Radius uniform over the volume of the shell `r_a < ρ < r_b` in `d` dimensions.
pub fn shell_uniform_radius(d: usize, r_a: f64, r_b: f64, u: f64) -> f64 {
    let d = d as f64;
    let ln_vol = log_add_exp((1.0 - u).ln() + d * r_a.ln(), u.ln() + d * r_b.ln());
    (ln_vol / d).exp()
}

fn scale_rows(mut dirs: Tensor2, radii: &[f64]) -> Tensor2 {
    for (mut row, rho) in dirs.rows_mut().into_iter().zip(radii) {
        row *= *rho;
    }
    dirs
}

/// Draws from the standard Gaussian truncated to `‖z‖ ≤ r`.
pub fn sample_ball_prior<R: Rng>(m: usize, spec: &PriorSpec, rng: &mut R) -> Tensor2 {
    let dirs = random_directions(m, spec.d_z, rng);
    let hi = spec.r * (1.0 - EDGE);
    let radii: Vec<f64> = (0..m)
        .map(|_| truncated_chi_radius(spec.d_z, 0.0, spec.r, rng.random::<f64>()).min(hi))
        .collect();
    scale_rows(dirs, &radii)
}

/// Draws from the standard Gaussian truncated to `r_a < ‖z‖ ≤ r_b`.
pub fn sample_shell_gaussian<R: Rng>(m: usize, spec: &PriorSpec, rng: &mut R) -> Tensor2 {
    let dirs = random_directions(m, spec.d_z, rng);
    let (lo, hi) = (spec.r_a * (1.0 + EDGE), spec.r_b * (1.0 - EDGE));
    let radii: Vec<f64> = (0..m)
        .map(|_| truncated_chi_radius(spec.d_z, spec.r_a, spec.r_b, rng.random::<f64>()).clamp(lo, hi))
        .collect();
    scale_rows(dirs, &radii)
}

/// Draws uniformly from the open shell `r_a < ‖z‖ < r_b`.
pub fn sample_shell_uniform<R: Rng>(m: usize, spec: &PriorSpec, rng: &mut R) -> Tensor2 {
    let dirs = random_directions(m, spec.d_z, rng);
    let (lo, hi) = (spec.r_a * (1.0 + EDGE), spec.r_b * (1.0 - EDGE));
    let radii: Vec<f64> = (0..m)
        .map(|_| shell_uniform_radius(spec.d_z, spec.r_a, spec.r_b, rng.random::<f64>()).clamp(lo, hi))
        .collect();
    scale_rows(dirs, &radii)
}
