use std::path::Path;
use std::process::{Command, Output};

use incomplete_gad::graphio::{community_graph, text, CommunitySpec};

fn igad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igad")).current_dir(dir).env("RUST_LOG", "warn").args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&igad(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&igad(dir.path(), &["--precision", "f32", "gradcheck"])), 1);
    assert_eq!(code(&igad(dir.path(), &["--help"])), 0);
    let missing = igad(dir.path(), &["score", "--bundle", "nope", "--model", "nope.bin"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn default_gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = igad(dir.path(), &["gradcheck"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
}

#[test]
fn inject_mask_train_score_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = community_graph(&CommunitySpec { nodes: 40, feature_dim: 5, ..Default::default() }, 3).unwrap();
    text::write_string(&d.join("x.txt"), &text::render_matrix(g.features())).unwrap();
    text::write_string(&d.join("e.txt"), &text::render_edges(g.edges())).unwrap();
    text::write_string(
        &d.join("toy.manifest"),
        &format!("name = toy\nfeatures = x.txt\nedges = e.txt\nnodes = 40\nedge_count = {}\nfeature_dim = 5\noutliers = 6\n", g.edge_count()),
    )
    .unwrap();
    text::write_string(&d.join("train.cfg"), "d_z = 4\nepochs_pre = 3\nepochs_fine = 2\nsinkhorn_iters = 30\nlr = 0.001\n").unwrap();

    let ok = |args: &[&str]| {
        let o = igad(d, args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8_lossy(&o.stdout).into_owned()
    };
    ok(&["--out", "inj", "inject", "--manifest", "toy.manifest", "--clique-size", "3"]);
    ok(&["--out", "bundle", "mask", "--manifest", "inj/toy.manifest"]);
    ok(&["--out", "model", "--config", "train.cfg", "pretrain", "--bundle", "bundle"]);
    ok(&["--out", "model", "finetune", "--bundle", "bundle", "--model", "model/model.bin"]);
    let scored = ok(&["--out", "model", "score", "--bundle", "bundle", "--model", "model/model.bin"]);
    assert!(scored.contains("AUROC"), "{scored}");
    let eval = ok(&["eval", "--scores", "model/scores.tsv", "--bundle", "bundle"]);
    assert!(eval.contains("AUROC"), "{eval}");
}
