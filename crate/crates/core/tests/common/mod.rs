#![allow(dead_code)]

use fdiab::topology::{build_tree, RoutingTree, VertexKind};
use fdiab::{DuplexMode, NetworkMatrices};
use rand::Rng;

/// Random routing tree: up to `max_iab` IAB nodes, UE depth at most
/// `max_ue_depth`, and 1 to `max_w` UEs per BS.
pub fn random_tree<R: Rng>(rng: &mut R, max_iab: usize, max_ue_depth: usize, max_w: usize) -> RoutingTree {
    let mut kinds = vec![VertexKind::Donor];
    let mut depth = vec![0usize];
    let mut edges = Vec::new();
    let n_iab = rng.random_range(0..=max_iab);
    for _ in 0..n_iab {
        let eligible: Vec<usize> = (0..kinds.len()).filter(|&v| depth[v] + 2 <= max_ue_depth).collect();
        if eligible.is_empty() {
            break;
        }
        let parent = eligible[rng.random_range(0..eligible.len())];
        edges.push((kinds.len(), parent));
        depth.push(depth[parent] + 1);
        kinds.push(VertexKind::Iab);
    }
    let n_bs = kinds.len();
    for bs in 0..n_bs {
        for _ in 0..rng.random_range(1..=max_w) {
            edges.push((kinds.len(), bs));
            kinds.push(VertexKind::Ue);
        }
    }
    build_tree(&edges, &kinds).expect("generated tree is valid")
}

/// Capacities log-uniform on `[lo, hi]`.
pub fn log_uniform_capacities<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| (rng.random_range(lo.ln()..hi.ln())).exp()).collect()
}

/// Largest `lambda_min` with a positive closed-form `t*`, from the rows of
/// `G C^-1 F 1` directly.
pub fn lambda_limit(m: &NetworkMatrices) -> f64 {
    let g = m.scheduling();
    let load = m.edge_load();
    let mut best = f64::INFINITY;
    for k in 0..g.nrows() {
        let a: f64 = (0..m.num_edges()).map(|v| g[(k, v)] * load[v] / m.capacity()[v]).sum();
        if a > 0.0 {
            best = best.min(1.0 / a);
        }
    }
    best
}

pub fn both_modes(tree: &RoutingTree, cap: &[f64]) -> (NetworkMatrices, NetworkMatrices) {
    (
        NetworkMatrices::new(tree, DuplexMode::HalfDuplex, cap.to_vec()).unwrap(),
        NetworkMatrices::new(tree, DuplexMode::FullDuplex, cap.to_vec()).unwrap(),
    )
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
