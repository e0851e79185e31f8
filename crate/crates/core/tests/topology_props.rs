mod common;

use fdiab::topology::{build_tree, line_network, two_child_tree, TreeJson, VertexKind};
use fdiab::{DuplexMode, NetworkMatrices};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_tree;

fn tree_from_seed(seed: u64) -> fdiab::RoutingTree {
    random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 6, 5, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn routing_rows_match_routes(seed in any::<u64>()) {
        let tree = tree_from_seed(seed);
        let m = NetworkMatrices::uniform(&tree, DuplexMode::HalfDuplex, 1.0).unwrap();
        let f = m.routing();
        for (col, route) in m.routes().iter().enumerate() {
            let ones: usize = (0..m.num_edges()).filter(|&e| f[(e, col)] == 1.0).count();
            prop_assert_eq!(ones, route.len());
            prop_assert_eq!(route.len(), m.hops()[col]);
            for &e in route {
                prop_assert_eq!(f[(e, col)], 1.0);
            }
        }
    }

    #[test]
    fn every_edge_scheduled_at_least_once(seed in any::<u64>()) {
        let tree = tree_from_seed(seed);
        for mode in [DuplexMode::HalfDuplex, DuplexMode::FullDuplex] {
            let m = NetworkMatrices::uniform(&tree, mode, 1.0).unwrap();
            let g = m.scheduling();
            prop_assert_eq!(g.nrows(), m.num_bs());
            for e in 0..m.num_edges() {
                let n: f64 = (0..g.nrows()).map(|k| g[(k, e)]).sum();
                let expect = match mode {
                    DuplexMode::FullDuplex => 1.0,
                    DuplexMode::HalfDuplex if m.is_backhaul(e) => 2.0,
                    DuplexMode::HalfDuplex => 1.0,
                };
                prop_assert_eq!(n, expect);
            }
        }
    }

    #[test]
    fn fd_rows_are_dominated_by_hd_rows(seed in any::<u64>()) {
        let tree = tree_from_seed(seed);
        let hd = NetworkMatrices::uniform(&tree, DuplexMode::HalfDuplex, 1.0).unwrap();
        let fd = NetworkMatrices::uniform(&tree, DuplexMode::FullDuplex, 1.0).unwrap();
        for k in 0..hd.num_bs() {
            for e in 0..hd.num_edges() {
                prop_assert!(fd.scheduling()[(k, e)] <= hd.scheduling()[(k, e)]);
            }
        }
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let tree = tree_from_seed(seed);
        let s = serde_json::to_string(&tree.to_json()).unwrap();
        let back: TreeJson = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back.into_tree().unwrap().edge_list(), tree.edge_list());
    }
}

#[test]
fn line_network_shape() {
    for k in 0..5 {
        for w in 1..4 {
            let t = line_network(k, w);
            assert_eq!(t.num_iab(), k);
            assert_eq!(t.num_ue(), (k + 1) * w);
            assert_eq!(t.max_depth(), k + 1);
        }
    }
}

#[test]
fn two_child_tree_has_two_branches() {
    let t = two_child_tree(2);
    assert_eq!(
        t.children(0).iter().filter(|&&c| t.kind(c) == VertexKind::Iab).count(),
        2
    );
}

#[test]
fn rejects_cycles_and_ue_parents() {
    use VertexKind::*;
    assert!(build_tree(&[(1, 2), (2, 1)], &[Donor, Iab, Iab]).is_err());
    assert!(build_tree(&[(1, 0), (2, 1)], &[Donor, Ue, Ue]).is_err());
    assert!(build_tree(&[(1, 0)], &[Iab, Ue]).is_err());
}
