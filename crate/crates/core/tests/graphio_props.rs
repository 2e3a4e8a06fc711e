mod common;

use std::collections::HashSet;

use incomplete_gad::graphio::{
    apply_masks, community_graph, inject_anomalies, load_bundle, load_graph, make_masks, rate_count, save_bundle, text,
    AttributedGraph, CommunitySpec, DatasetManifest, InjectionSpec, MaskMode,
};
use incomplete_gad::Error;
use proptest::prelude::*;

fn graph(nodes: usize, seed: u64) -> AttributedGraph {
    let spec = CommunitySpec {
        nodes,
        communities: 3,
        feature_dim: 5,
        p_in: 0.3,
        p_out: 0.05,
        ..Default::default()
    };
    community_graph(&spec, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn masks_are_pure_and_counted_by_floor(
        nodes in 5usize..60,
        node_rate in 0.0f64..=1.0,
        edge_rate in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let g = graph(nodes, seed);
        let a = make_masks(&g, node_rate, edge_rate, MaskMode::RowWise, seed).unwrap();
        let b = make_masks(&g, node_rate, edge_rate, MaskMode::RowWise, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let hidden_rows = a.feature_mask.rows().into_iter().filter(|r| r.iter().all(|&v| v == 0.0)).count();
        prop_assert!(a.feature_mask.rows().into_iter().all(|r| r.iter().all(|&v| v == 0.0) || r.iter().all(|&v| v == 1.0)));
        prop_assert_eq!(hidden_rows, (node_rate * nodes as f64 + 1e-9).floor() as usize);
        prop_assert_eq!(a.masked_edges.len(), rate_count(edge_rate, g.edge_count()));
    }

    #[test]
    fn masking_never_adds_edges_and_zeroes_hidden_entries(
        nodes in 5usize..60,
        rate in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let g = graph(nodes, seed);
        let m = make_masks(&g, rate, rate, MaskMode::ElementWise, seed).unwrap();
        let inc = apply_masks(&g, &m).unwrap();
        let a = inc.adjacency();
        let full = g.adjacency();
        prop_assert_eq!(&a, &a.t());
        prop_assert!(a.diag().iter().all(|&v| v == 0.0));
        prop_assert!(a.iter().zip(full.iter()).all(|(&o, &f)| o <= f));
        prop_assert_eq!(&(&inc.x_obs * inc.feature_mask()), &inc.x_obs);
        for &(u, v) in &m.masked_edges {
            prop_assert_eq!(a[[u, v]], 0.0);
        }
    }

    #[test]
    fn injection_adds_clique_edges_and_keeps_other_rows(
        nodes in 20usize..60,
        clique_size in 2usize..5,
        clique_count in 0usize..3,
        contextual in 0usize..5,
        seed in any::<u64>(),
    ) {
        let g = graph(nodes, seed);
        let spec = InjectionSpec { clique_size, clique_count, contextual_count: contextual, candidate_pool: 10 };
        let out = inject_anomalies(&g, &spec, seed).unwrap();
        let labels = out.labels().unwrap();
        prop_assert_eq!(labels.iter().filter(|&&l| l == 1).count(), spec.total());

        // clique members are the labeled nodes whose feature rows are unchanged
        // and which gained edges; check the count identity over all new edges
        let before: HashSet<_> = g.edges().iter().copied().collect();
        let added = out.edges().iter().filter(|e| !before.contains(e)).count();
        prop_assert!(added <= clique_count * clique_size * (clique_size - 1) / 2);
        prop_assert!(before.iter().all(|&(u, v)| out.has_edge(u, v)));
        let mut expected_new = 0;
        let labeled: Vec<usize> = (0..nodes).filter(|&i| labels[i] == 1).collect();
        for &u in &labeled {
            for &v in &labeled {
                if u < v && out.has_edge(u, v) && !g.has_edge(u, v) {
                    expected_new += 1;
                }
            }
        }
        prop_assert_eq!(added, expected_new);
        for i in 0..nodes {
            if labels[i] == 0 {
                prop_assert!(out.features().row(i).iter().zip(g.features().row(i)).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
    }
}

#[test]
fn thirty_percent_of_124_rows_is_37() {
    let g = graph(124, 3);
    let m = make_masks(&g, 0.3, 0.0, MaskMode::RowWise, 3).unwrap();
    let hidden = m.feature_mask.rows().into_iter().filter(|r| r.iter().all(|&v| v == 0.0)).count();
    assert_eq!(hidden, 37);
}

#[test]
fn cora_injection_defaults_label_150() {
    let spec = InjectionSpec::for_outliers(150, InjectionSpec::DEFAULT_CLIQUE_SIZE, InjectionSpec::DEFAULT_CANDIDATE_POOL);
    assert_eq!((spec.clique_size, spec.clique_count, spec.contextual_count), (15, 5, 75));
    assert_eq!(spec.total(), 150);
}

#[test]
fn bundle_round_trip_and_corruption() {
    let g = graph(30, 5);
    let labeled = inject_anomalies(&g, &InjectionSpec::for_outliers(6, 3, 5), 5).unwrap();
    let inc = apply_masks(&labeled, &make_masks(&labeled, 0.3, 0.3, MaskMode::RowWise, 5).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_bundle(dir.path(), &inc, labeled.labels()).unwrap();
    let back = load_bundle(dir.path()).unwrap();
    assert_eq!(back.graph, inc);
    assert_eq!(back.graph.adjacency(), inc.adjacency());
    assert_eq!(back.labels.as_deref(), labeled.labels());

    assert!(back.source_mismatch(&labeled).is_none());
    let warning = back.check_source(&g).expect("different source graph must warn");
    assert!(warning.contains(&g.content_hash()));

    let features = dir.path().join("features.txt");
    let body = std::fs::read(&features).unwrap();
    std::fs::write(&features, &body[..body.len() / 2]).unwrap();
    match load_bundle(dir.path()) {
        Err(Error::Corrupt { message, .. }) => assert!(message.contains("offset") || message.contains("bytes"), "{message}"),
        other => panic!("truncated bundle must fail, got {other:?}"),
    }
}

#[test]
fn manifest_checks_dimensions_and_drops_self_loops() {
    let dir = tempfile::tempdir().unwrap();
    text::write_string(&dir.path().join("x.txt"), "1 2\n3 4\n5 6\n").unwrap();
    text::write_string(&dir.path().join("e.txt"), "0 1\n1 1\n1 0\n1 2\n").unwrap();
    let write = |edges: usize, dim: usize| {
        let p = dir.path().join("g.manifest");
        text::write_string(
            &p,
            &format!("name = tiny\nfeatures = x.txt\nedges = e.txt\nnodes = 3\nedge_count = {edges}\nfeature_dim = {dim}\noutliers = 0\n"),
        )
        .unwrap();
        DatasetManifest::load(&p).unwrap()
    };
    let g = load_graph(&write(2, 2)).unwrap();
    assert_eq!(g.edge_count(), 2);
    assert!(g.adjacency().diag().iter().all(|&v| v == 0.0));
    assert!(matches!(load_graph(&write(3, 2)), Err(Error::Dimension(_))));
    assert!(matches!(load_graph(&write(2, 3)), Err(Error::Dimension(_))));
}
