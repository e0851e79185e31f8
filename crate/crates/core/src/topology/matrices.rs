use nalgebra::{DMatrix, DVector};

use super::{DuplexMode, RoutingTree};
use crate::error::{Error, Result};

/// Routing matrix F (|E| x M) with per-UE hop counts and per-edge maximum hop counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingInfo {
    pub routing: DMatrix<f64>,
    /// `hops[m]`: number of edges on the route to UE `m`.
    pub hops: Vec<usize>,
    /// `max_hops[v]`: largest hop count over UEs routed through edge `v`; 0 if none.
    pub max_hops: Vec<usize>,
    /// Edges on each UE route, donor first.
    pub routes: Vec<Vec<usize>>,
}

pub fn routing_matrix(tree: &RoutingTree) -> RoutingInfo {
    let ues = tree.ues();
    let n_edges = tree.num_edges();
    let mut routing = DMatrix::zeros(n_edges, ues.len());
    let mut hops = Vec::with_capacity(ues.len());
    let mut max_hops = vec![0usize; n_edges];
    let mut routes = Vec::with_capacity(ues.len());
    for (m, &ue) in ues.iter().enumerate() {
        let route = tree.route(ue);
        let h = route.len();
        for &e in &route {
            routing[(e, m)] = 1.0;
            max_hops[e] = max_hops[e].max(h);
        }
        hops.push(h);
        routes.push(route);
    }
    RoutingInfo {
        routing,
        hops,
        max_hops,
        routes,
    }
}

/// Scheduling matrix G ((K+1) x |E|).
///
/// Row `k` covers every child edge of BS `k`; in half duplex an IAB node's
/// own parent edge is added as well.
pub fn scheduling_matrix(tree: &RoutingTree, mode: DuplexMode) -> DMatrix<f64> {
    let bss = tree.base_stations();
    let mut g = DMatrix::zeros(bss.len(), tree.num_edges());
    for (row, &bs) in bss.iter().enumerate() {
        for &c in tree.children(bs) {
            g[(row, tree.edge_of(c))] = 1.0;
        }
        if mode == DuplexMode::HalfDuplex && bs != 0 {
            g[(row, tree.edge_of(bs))] = 1.0;
        }
    }
    g
}

/// Everything the optimizers need about one network in one duplex mode.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMatrices {
    mode: DuplexMode,
    routing: DMatrix<f64>,
    scheduling: DMatrix<f64>,
    capacity: Vec<f64>,
    hops: Vec<usize>,
    max_hops: Vec<usize>,
    routes: Vec<Vec<usize>>,
    base_stations: Vec<usize>,
    backhaul: Vec<bool>,
}

impl NetworkMatrices {
    /// `capacity[v]` is the capacity of edge `v` in packets/second.
    pub fn new(tree: &RoutingTree, mode: DuplexMode, capacity: Vec<f64>) -> Result<Self> {
        if capacity.len() != tree.num_edges() {
            return Err(Error::InvalidMatrices(format!(
                "{} capacities for {} edges",
                capacity.len(),
                tree.num_edges()
            )));
        }
        if let Some(v) = capacity.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidMatrices(format!(
                "capacity of edge {v} must be positive and finite, got {}",
                capacity[v]
            )));
        }
        let info = routing_matrix(tree);
        Ok(NetworkMatrices {
            mode,
            routing: info.routing,
            scheduling: scheduling_matrix(tree, mode),
            capacity,
            hops: info.hops,
            max_hops: info.max_hops,
            routes: info.routes,
            base_stations: tree.base_stations(),
            backhaul: (0..tree.num_edges()).map(|e| tree.is_backhaul(e)).collect(),
        })
    }

    /// Same network with every edge at capacity `c`.
    pub fn uniform(tree: &RoutingTree, mode: DuplexMode, c: f64) -> Result<Self> {
        Self::new(tree, mode, vec![c; tree.num_edges()])
    }

    /// Backhaul edges at `backhaul`, access edges at `access`.
    pub fn two_rate(tree: &RoutingTree, mode: DuplexMode, backhaul: f64, access: f64) -> Result<Self> {
        let caps = (0..tree.num_edges())
            .map(|e| if tree.is_backhaul(e) { backhaul } else { access })
            .collect();
        Self::new(tree, mode, caps)
    }

    pub fn mode(&self) -> DuplexMode {
        self.mode
    }

    pub fn routing(&self) -> &DMatrix<f64> {
        &self.routing
    }

    pub fn scheduling(&self) -> &DMatrix<f64> {
        &self.scheduling
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    pub fn hops(&self) -> &[usize] {
        &self.hops
    }

    pub fn max_hops(&self) -> &[usize] {
        &self.max_hops
    }

    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub fn base_stations(&self) -> &[usize] {
        &self.base_stations
    }

    pub fn is_backhaul(&self, edge: usize) -> bool {
        self.backhaul[edge]
    }

    pub fn num_edges(&self) -> usize {
        self.capacity.len()
    }

    pub fn num_ues(&self) -> usize {
        self.hops.len()
    }

    pub fn num_bs(&self) -> usize {
        self.base_stations.len()
    }

    /// `F 1`: number of UEs routed through each edge.
    pub fn edge_load(&self) -> Vec<f64> {
        self.routing.row_iter().map(|r| r.sum()).collect()
    }

    /// `F lambda`: per-edge arrival rate.
    pub fn arrivals(&self, lambda: &[f64]) -> Vec<f64> {
        let l = DVector::from_column_slice(lambda);
        (&self.routing * l).iter().copied().collect()
    }

    /// Replace capacities, keeping the topology and mode.
    pub fn with_capacity(&self, capacity: Vec<f64>) -> Result<Self> {
        if capacity.len() != self.capacity.len() {
            return Err(Error::InvalidMatrices("capacity length mismatch".into()));
        }
        if capacity.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidMatrices("capacities must be positive".into()));
        }
        Ok(NetworkMatrices {
            capacity,
            ..self.clone()
        })
    }

    /// Edges in scheduling row `k`.
    pub fn row_edges(&self, k: usize) -> Vec<usize> {
        (0..self.num_edges())
            .filter(|v| self.scheduling[(k, *v)] != 0.0)
            .collect()
    }
}
