//! Debiased Sinkhorn divergence between point clouds, and gradient descent
//! that moves a cloud onto a truncated Gaussian prior.
//!
//!     cargo run --release --example sinkhorn

use incomplete_gad::latentspace::{sample_ball_prior, sinkhorn_divergence, sinkhorn_divergence_grad, PriorSpec, SinkhornConfig};
use incomplete_gad::pipeline::latent_norms;
use incomplete_gad::seed;
use rand_distr::{Distribution, StandardNormal};

fn main() -> incomplete_gad::Result<()> {
    let cfg = SinkhornConfig { eps: 0.1, iters: 300 };
    let spec = PriorSpec::new(4, 2.0);
    let mut rng = seed::stream(1, "example", 0);
    let q = sample_ball_prior(64, &spec, &mut rng);
    let mut p = ndarray::Array2::from_shape_fn((64, 4), |_| {
        let v: f64 = StandardNormal.sample(&mut rng);
        0.1 * v + 3.0
    });

    println!("S(Q, Q) = {:.3e}", sinkhorn_divergence(&q, &q, &cfg)?);
    println!(
        "S(P, Q) = {:.6}, S(Q, P) = {:.6}",
        sinkhorn_divergence(&p, &q, &cfg)?,
        sinkhorn_divergence(&q, &p, &cfg)?
    );

    let norm = |m: &ndarray::Array2<f64>| latent_norms(m).iter().sum::<f64>() / m.nrows() as f64;
    for step in 0..=200 {
        let (s, g) = sinkhorn_divergence_grad(&p, &q, &cfg)?;
        if step % 40 == 0 {
            println!("step {step:3}: S = {s:.6}, mean norm {:.4} (prior {:.4})", norm(&p), norm(&q));
        }
        // the gradient carries the 1/m atom weight
        let m = p.nrows() as f64;
        p.scaled_add(-0.5 * m, &g);
    }
    Ok(())
}
