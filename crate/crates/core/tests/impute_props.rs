mod common;

use std::rc::Rc;

use common::{gaussian, uniform};
use incomplete_gad::diffmath::{grad_check, ParamStore, Tape, Tensor2};
use incomplete_gad::impute::{
    densify_structure, feature_loss, ppr_diffuse, surrogate_structure, symmetrize, DiffusionConfig, FeatureImputer,
};
use incomplete_gad::seed;
use ndarray::Array2;
use proptest::prelude::*;

fn random_graph(n: usize, p: f64, s: u64) -> Tensor2 {
    let u = uniform(n, n, 0.0, 1.0, s);
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            if u[[i, j]] < p {
                a[[i, j]] = 1.0;
                a[[j, i]] = 1.0;
            }
        }
    }
    a
}

/// `(1−β)(I − βÃ)^{-1}` with `Ã` the row-normalized `A + I`, via LU in nalgebra.
fn resolvent(a: &Tensor2, beta: f64) -> Tensor2 {
    let n = a.nrows();
    let mut m = nalgebra::DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        let deg: f64 = a.row(i).sum() + 1.0;
        for j in 0..n {
            let t = (a[[i, j]] + if i == j { 1.0 } else { 0.0 }) / deg;
            m[(i, j)] -= beta * t;
        }
    }
    let inv = m.try_inverse().expect("I − βÃ is invertible for β < 1");
    Array2::from_shape_fn((n, n), |(i, j)| (1.0 - beta) * inv[(i, j)])
}

fn tight(beta: f64) -> DiffusionConfig {
    DiffusionConfig {
        beta,
        max_iters: 5000,
        tol: 1e-15,
        ..Default::default()
    }
}

fn off_diagonal_mass(p: &Tensor2) -> f64 {
    p.sum() - p.diag().sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn iteration_matches_resolvent(n in 1usize..=10, p in 0.0f64..1.0, beta_idx in 0usize..3, s in any::<u64>()) {
        let beta = [0.3, 0.5, 0.85][beta_idx];
        let a = random_graph(n, p, s);
        let (ppr, report) = ppr_diffuse(&a, &tight(beta)).unwrap();
        let oracle = resolvent(&a, beta);
        let err = (&ppr - &oracle).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(err <= 1e-8, "sup-norm error {err} after {} iterations", report.iterations);
        for row in ppr.rows() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-8);
        }
        prop_assert!(ppr.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn default_settings_are_row_stochastic_and_deterministic(n in 1usize..=30, p in 0.0f64..0.5, s in any::<u64>()) {
        let a = random_graph(n, p, s);
        let (x, _) = ppr_diffuse(&a, &DiffusionConfig::default()).unwrap();
        let (y, _) = ppr_diffuse(&a, &DiffusionConfig::default()).unwrap();
        prop_assert_eq!(&x, &y);
        for row in x.rows() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn densified_structure_dominates_observed(n in 1usize..=20, p in 0.0f64..0.6, k in 0usize..5, s in any::<u64>()) {
        let a = random_graph(n, p, s);
        let (ppr, _) = ppr_diffuse(&a, &DiffusionConfig::default()).unwrap();
        for top_k in [None, Some(k.max(1))] {
            let d = densify_structure(&a, &ppr, top_k).unwrap();
            prop_assert!(d.iter().zip(a.iter()).all(|(x, y)| x >= y));
        }
        let (sym, _) = surrogate_structure(&a, &DiffusionConfig::default(), Some(k.max(1))).unwrap();
        prop_assert_eq!(&sym, &sym.t());
        let asym = gaussian(n, n, s);
        let fixed = symmetrize(&asym);
        prop_assert_eq!(&fixed, &fixed.t());
    }

    #[test]
    fn larger_beta_spreads_more_mass(n in 2usize..=12, p in 0.0f64..0.5, s in any::<u64>()) {
        // path backbone keeps the graph connected
        let mut a = random_graph(n, p, s);
        for i in 0..n - 1 {
            a[[i, i + 1]] = 1.0;
            a[[i + 1, i]] = 1.0;
        }
        let mass: Vec<f64> = [0.3, 0.6, 0.9]
            .iter()
            .map(|&b| off_diagonal_mass(&ppr_diffuse(&a, &tight(b)).unwrap().0))
            .collect();
        prop_assert!(mass[0] < mass[1] && mass[1] < mass[2], "{mass:?}");
    }
}

#[test]
fn zero_diffusion_leaves_observed_structure() {
    let a = random_graph(6, 0.4, 3);
    assert_eq!(densify_structure(&a, &Array2::zeros((6, 6)), None).unwrap(), a);
}

#[test]
fn feature_loss_gradient_passes_gradcheck() {
    let mut store = ParamStore::new();
    let imputer = FeatureImputer::new(&mut store, 5, 7, &mut seed::stream(1, "init", 0)).unwrap();
    let x = gaussian(9, 5, 2);
    let mask = Rc::new(uniform(9, 5, 0.0, 1.0, 3).mapv(|u| (u < 0.7) as u8 as f64));
    let x_obs = Rc::new(&x * &*mask);
    let report = grad_check(
        |s: &mut ParamStore| {
            let mut t = Tape::new();
            let xv = t.input((*x_obs).clone());
            let xh = imputer.impute(&mut t, s, xv)?;
            let l = feature_loss(&mut t, xh, &x_obs, &mask)?;
            t.backward(l, s)?;
            Ok(t.scalar(l))
        },
        &mut store,
        usize::MAX,
        1e-5,
        1e-4,
        4,
    )
    .unwrap();
    assert!(report.passed, "max rel err {}", report.max_rel_err);
}

#[test]
fn feature_loss_ignores_masked_entries() {
    let x = gaussian(4, 3, 1);
    let mask = Rc::new(uniform(4, 3, 0.0, 1.0, 2).mapv(|u| (u < 0.5) as u8 as f64));
    let x_obs = Rc::new(&x * &*mask);
    let perturbed = &*x_obs + &(gaussian(4, 3, 3) * mask.mapv(|m| 1.0 - m));
    let mut t = Tape::new();
    let p = t.input(perturbed);
    let l = feature_loss(&mut t, p, &x_obs, &mask).unwrap();
    assert_eq!(t.scalar(l), 0.0);
}
