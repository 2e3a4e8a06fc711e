mod common;

use std::f64::consts::PI;
use std::rc::Rc;

use common::{gaussian, uniform};
use incomplete_gad::diffmath::{grad_check, BlockDiagonal, ParamStore, Tape, Tensor2};
use incomplete_gad::latentspace::special::{ln_gamma, ln_gamma_p};
use incomplete_gad::latentspace::{
    normalize_adjacency, recon_loss, sample_ball_prior, sample_shell_gaussian, sample_shell_uniform, sinkhorn_divergence,
    sinkhorn_loss, truncated_chi_radius, AdjacencyNorm, Decoder, PriorSpec, Projector, SinkhornConfig,
};
use incomplete_gad::pipeline::latent_norms;
use incomplete_gad::seed;
use ndarray::Axis;
use proptest::prelude::*;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn incomplete_gamma_agrees_with_statrs() {
    for &a in &[0.5, 1.0, 2.5, 8.0, 64.0, 128.0] {
        for &x in &[1e-3, 0.1, 1.0, 5.0, 30.0, 64.0, 127.0, 200.0] {
            let ours = ln_gamma_p(a, x).exp();
            let oracle = statrs::function::gamma::gamma_lr(a, x);
            assert!(
                (ours - oracle).abs() <= 1e-12 + 1e-9 * oracle,
                "P({a}, {x}): {ours} vs {oracle}"
            );
        }
        let lg = statrs::function::gamma::ln_gamma(a);
        assert!((ln_gamma(a) - lg).abs() <= 1e-10 * lg.abs().max(1.0));
    }
}

#[test]
fn log_incomplete_gamma_resolves_deep_tail() {
    // P(128, 32) is near 1e-32: still finite and monotone in log space
    let lo = ln_gamma_p(128.0, 30.0);
    let hi = ln_gamma_p(128.0, 32.0);
    assert!(lo.is_finite() && hi.is_finite() && lo < hi && hi < -60.0);
}

#[test]
fn truncated_radius_inverts_the_cdf() {
    for &(d, lo, hi) in &[(2usize, 0.0, 3.0), (4, 0.5, 2.0), (16, 1.0, 8.0)] {
        let cdf = |r: f64| if r == 0.0 { 0.0 } else { statrs::function::gamma::gamma_lr(d as f64 / 2.0, r * r / 2.0) };
        for &u in &[0.01, 0.25, 0.5, 0.75, 0.99] {
            let r = truncated_chi_radius(d, lo, hi, u);
            let q = (cdf(r) - cdf(lo)) / (cdf(hi) - cdf(lo));
            assert!((q - u).abs() < 1e-9, "d {d} u {u}: quantile {q}");
        }
    }
}

/// Mean of the density `∝ ρ^{d−1} e^{−ρ²/2}` on `[lo, hi]` by composite Simpson
/// quadrature, weights rescaled by the value at `hi` to stay in range.
fn truncated_chi_mean(d: usize, lo: f64, hi: f64) -> f64 {
    let ln_f = |r: f64| (d as f64 - 1.0) * r.ln() - 0.5 * r * r;
    let top = ln_f(hi.min(((d - 1) as f64).sqrt()).max(lo));
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let (mut z, mut m) = (0.0, 0.0);
    for i in 0..=steps {
        let r = lo + i as f64 * h;
        let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let f = (ln_f(r) - top).exp();
        z += w * f;
        m += w * r * f;
    }
    m / z
}

#[test]
fn ball_prior_concentrates_at_the_boundary_in_high_dimension() {
    let spec = PriorSpec::new(256, 8.0);
    let norms = latent_norms(&sample_ball_prior(10_000, &spec, &mut seed::stream(1, "t", 0)));
    let m = mean(&norms);
    assert!((7.8..=8.0).contains(&m), "mean radius {m}");
    assert!(norms.iter().all(|&r| r <= 8.0));
}

#[test]
fn untruncated_two_dimensional_mean_is_rayleigh() {
    let spec = PriorSpec::new(2, 1e6);
    let norms = latent_norms(&sample_ball_prior(100_000, &spec, &mut seed::stream(2, "t", 0)));
    let m = mean(&norms);
    assert!((m - (PI / 2.0).sqrt()).abs() <= 0.02, "mean radius {m}");
}

#[test]
fn shell_samplers_sit_near_the_outer_radius() {
    let spec = PriorSpec::new(256, 8.0);
    assert_eq!((spec.r_a, spec.r_b), (9.6, 16.0));
    let g = latent_norms(&sample_shell_gaussian(10_000, &spec, &mut seed::stream(3, "t", 0)));
    let u = latent_norms(&sample_shell_uniform(10_000, &spec, &mut seed::stream(4, "t", 0)));
    // chi(256) peaks at √255 ≈ 15.97, so the cut at 16 leaves a mean well below 0.97·r_b
    let exact = truncated_chi_mean(256, 9.6, 16.0);
    assert!((exact - 15.4335).abs() < 1e-3, "quadrature mean {exact}");
    // standard error of the mean is about 0.45/√10⁴
    assert!((mean(&g) - exact).abs() < 0.02, "gaussian shell mean {} vs {exact}", mean(&g));
    assert!((0.99 * 16.0..=16.0).contains(&mean(&u)), "uniform shell mean {}", mean(&u));
    assert!(g.iter().all(|&r| r > 9.6 && r <= 16.0));
    assert!(u.iter().all(|&r| r > 9.6 && r < 16.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samplers_respect_supports_and_replay(d_z in 1usize..64, r in 0.1f64..20.0, s in any::<u64>()) {
        let spec = PriorSpec::new(d_z, r);
        let draw = |f: fn(usize, &PriorSpec, &mut rand_chacha::ChaCha8Rng) -> Tensor2| f(200, &spec, &mut seed::stream(s, "t", 0));
        let ball = draw(sample_ball_prior);
        prop_assert_eq!(&ball, &draw(sample_ball_prior));
        prop_assert!(latent_norms(&ball).iter().all(|&n| n < r));
        prop_assert!(latent_norms(&draw(sample_shell_gaussian)).iter().all(|&n| n > spec.r_a && n <= spec.r_b));
        prop_assert!(latent_norms(&draw(sample_shell_uniform)).iter().all(|&n| n > spec.r_a && n < spec.r_b));
    }

    #[test]
    fn sinkhorn_is_nonnegative_symmetric_and_zero_on_identity(m in 1usize..10, k in 1usize..10, d in 1usize..5, s in any::<u64>()) {
        let cfg = SinkhornConfig { eps: 0.1, iters: 200 };
        let p = gaussian(m, d, s);
        let q = gaussian(k, d, s + 1) * 1.5;
        let pq = sinkhorn_divergence(&p, &q, &cfg).unwrap();
        let qp = sinkhorn_divergence(&q, &p, &cfg).unwrap();
        prop_assert!(pq >= -1e-6, "S = {pq}");
        prop_assert!((pq - qp).abs() <= 1e-8 * pq.abs().max(1.0), "{pq} vs {qp}");
        prop_assert!(sinkhorn_divergence(&p, &p, &cfg).unwrap().abs() <= 1e-6);
    }

    #[test]
    fn projection_is_permutation_equivariant(n in 2usize..12, d in 1usize..6, d_z in 1usize..6, s in any::<u64>()) {
        let mut store = ParamStore::new();
        let proj = Projector::new(&mut store, d, d_z, &mut seed::stream(s, "init", 0)).unwrap();
        let x = gaussian(n, d, s);
        let a = uniform(n, n, 0.0, 1.0, s + 1);
        let a = normalize_adjacency(&(&a + &a.t()), AdjacencyNorm::Symmetric);
        let perm: Vec<usize> = (0..n).map(|i| (i + s as usize % n) % n).rev().collect();
        let z = proj.eval(&store, &x, &BlockDiagonal::dense(a.clone()).unwrap()).unwrap();
        let xp = x.select(Axis(0), &perm);
        let ap = a.select(Axis(0), &perm).select(Axis(1), &perm);
        let zp = proj.eval(&store, &xp, &BlockDiagonal::dense(ap).unwrap()).unwrap();
        let expected = z.select(Axis(0), &perm);
        prop_assert!((&zp - &expected).iter().all(|v| v.abs() < 1e-12));
    }
}

/// Gradient of `Sinkhorn(Z, prior) + recon(decode(Z))` through the projector and decoder.
#[test]
fn projector_and_decoder_pass_gradcheck() {
    let (n, d, d_z) = (8, 5, 4);
    let mut store = ParamStore::new();
    let mut rng = seed::stream(6, "init", 0);
    let proj = Projector::new(&mut store, d, d_z, &mut rng).unwrap();
    let dec = Decoder::new(&mut store, d_z, 6, d, &mut rng).unwrap();
    // zero biases put dead latent rows exactly on the ReLU kink
    store.set(dec.mlp.b1, gaussian(1, 6, 12)).unwrap();
    let x = gaussian(n, d, 7);
    let raw = uniform(n, n, 0.0, 1.0, 8);
    let a = Rc::new(BlockDiagonal::dense(normalize_adjacency(&(&raw + &raw.t()), AdjacencyNorm::Symmetric)).unwrap());
    let q = Rc::new(sample_ball_prior(n, &PriorSpec::new(d_z, 2.0), &mut seed::stream(9, "prior", 0)));
    let mask = Rc::new(uniform(n, d, 0.0, 1.0, 10).mapv(|u| (u < 0.7) as u8 as f64));
    let x_obs = Rc::new(&x * &*mask);
    let cfg = SinkhornConfig { eps: 0.1, iters: 200 };
    let report = grad_check(
        |s: &mut ParamStore| {
            let mut t = Tape::new();
            let xv = t.input(x.clone());
            let z = proj.project(&mut t, s, xv, &a)?;
            let dist = sinkhorn_loss(&mut t, z, &q, &cfg)?;
            let xt = dec.decode(&mut t, s, z)?;
            let rec = recon_loss(&mut t, xt, &x_obs, &mask)?;
            let total = t.add(dist, rec)?;
            t.backward(total, s)?;
            Ok(t.scalar(total))
        },
        &mut store,
        usize::MAX,
        1e-5,
        1e-4,
        11,
    )
    .unwrap();
    assert!(report.passed, "max rel err {}", report.max_rel_err);
}

#[test]
fn recon_loss_ignores_unobserved_entries() {
    let x = gaussian(5, 4, 1);
    let mask = Rc::new(uniform(5, 4, 0.0, 1.0, 2).mapv(|u| (u < 0.5) as u8 as f64));
    let x_obs = Rc::new(&x * &*mask);
    let eval = |pred: Tensor2| {
        let mut t = Tape::new();
        let p = t.input(pred);
        let l = recon_loss(&mut t, p, &x_obs, &mask).unwrap();
        t.scalar(l)
    };
    let base = gaussian(5, 4, 3);
    let shifted = &base + &(gaussian(5, 4, 4) * mask.mapv(|m| 1.0 - m));
    assert_eq!(eval(base.clone()), eval(shifted));
    assert_eq!(eval((*x_obs).clone()), 0.0);
}
