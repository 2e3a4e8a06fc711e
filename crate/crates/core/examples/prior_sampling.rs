//! Radial prior samplers: truncated Gaussian on a ball, Gaussian on a shell,
//! and uniform on a shell.
//!
//!     cargo run --release --example prior_sampling

use incomplete_gad::latentspace::{sample_ball_prior, sample_shell_gaussian, sample_shell_uniform, PriorSpec};
use incomplete_gad::pipeline::latent_norms;
use incomplete_gad::seed;

fn summary(name: &str, norms: &[f64]) {
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().copied().fold(0.0, f64::max);
    println!("  {name:<15} mean {mean:8.4}  min {lo:8.4}  max {hi:8.4}");
}

fn main() -> incomplete_gad::Result<()> {
    for (d_z, r) in [(2, 1.0), (16, 4.0), (256, 8.0)] {
        let spec = PriorSpec::new(d_z, r);
        spec.validate()?;
        println!("d_z {d_z}, r {r}, shell ({}, {}]", spec.r_a, spec.r_b);
        let mut rng = seed::stream(5, "example", d_z as u64);
        summary("ball", &latent_norms(&sample_ball_prior(10_000, &spec, &mut rng)));
        summary("shell gaussian", &latent_norms(&sample_shell_gaussian(10_000, &spec, &mut rng)));
        summary("shell uniform", &latent_norms(&sample_shell_uniform(10_000, &spec, &mut rng)));
    }
    Ok(())
}
