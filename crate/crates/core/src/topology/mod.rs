//! Routing trees for IAB deployments and the matrices derived from them.
//!
//! Vertex 0 is always the donor. Every other vertex has exactly one parent,
//! so edge `(u, v)` is identified by its child `v` and stored at dense
//! index `v - 1`.

mod json;
mod matrices;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use json::{TreeJson, VertexJson};
pub use matrices::{routing_matrix, scheduling_matrix, NetworkMatrices, RoutingInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Donor,
    Iab,
    Ue,
}

impl VertexKind {
    pub fn is_base_station(self) -> bool {
        !matches!(self, VertexKind::Ue)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DuplexMode {
    #[serde(rename = "hd")]
    HalfDuplex,
    #[serde(rename = "fd")]
    FullDuplex,
}

impl DuplexMode {
    pub fn label(self) -> &'static str {
        match self {
            DuplexMode::HalfDuplex => "hd",
            DuplexMode::FullDuplex => "fd",
        }
    }
}

impl std::fmt::Display for DuplexMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for DuplexMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hd" | "half" | "halfduplex" | "half-duplex" => Ok(DuplexMode::HalfDuplex),
            "fd" | "full" | "fullduplex" | "full-duplex" => Ok(DuplexMode::FullDuplex),
            other => Err(Error::InvalidParameter(format!("unknown duplex mode {other:?}"))),
        }
    }
}

/// A validated, immutable routing tree rooted at the donor.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTree {
    kinds: Vec<VertexKind>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    positions: Option<Vec<[f64; 2]>>,
}

/// Validate `(child, parent)` pairs against per-vertex kinds and build a tree.
///
/// Vertex ids are the indices into `kinds`; vertex 0 must be the only donor.
pub fn build_tree(edges: &[(usize, usize)], kinds: &[VertexKind]) -> Result<RoutingTree> {
    let n = kinds.len();
    if n < 2 {
        return Err(Error::InvalidTree(
            "a tree needs a donor and at least one other vertex".into(),
        ));
    }
    if kinds[0] != VertexKind::Donor {
        return Err(Error::InvalidTree("vertex 0 must be the donor".into()));
    }
    if let Some(v) = kinds.iter().skip(1).position(|k| *k == VertexKind::Donor) {
        return Err(Error::InvalidTree(format!("vertex {} is a second donor", v + 1)));
    }

    let mut parent: Vec<Option<usize>> = vec![None; n];
    for &(child, par) in edges {
        if child >= n || par >= n {
            return Err(Error::InvalidTree(format!(
                "edge ({par}, {child}) references an unknown vertex"
            )));
        }
        if child == 0 {
            return Err(Error::InvalidTree("the donor cannot have a parent".into()));
        }
        if parent[child].is_some() {
            return Err(Error::MultipleParents(child));
        }
        parent[child] = Some(par);
    }
    for (v, p) in parent.iter().enumerate().skip(1) {
        match p {
            None => return Err(Error::DisconnectedVertex(v)),
            Some(p) if kinds[*p] == VertexKind::Ue => return Err(Error::UeWithChildren(*p)),
            Some(_) => {}
        }
    }

    // Walk every vertex up to the donor; 0 = unvisited, 1 = on stack, 2 = done.
    let mut state = vec![0u8; n];
    let mut depth = vec![0usize; n];
    state[0] = 2;
    for start in 1..n {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = parent[v].expect("checked above");
        }
        if state[v] == 1 {
            return Err(Error::CycleDetected(v));
        }
        let mut d = depth[v];
        for &u in path.iter().rev() {
            d += 1;
            depth[u] = d;
            state[u] = 2;
        }
    }

    let mut children = vec![Vec::new(); n];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(v);
        }
    }

    Ok(RoutingTree {
        kinds: kinds.to_vec(),
        parent,
        children,
        depth,
        positions: None,
    })
}

/// Donor followed by a chain of `num_iab` IAB nodes; every BS serves `ues_per_bs` UEs.
///
/// Ids: donor 0, IAB nodes `1..=K`, then UEs grouped by serving BS in BS order.
pub fn line_network(num_iab: usize, ues_per_bs: usize) -> RoutingTree {
    let mut kinds = vec![VertexKind::Donor];
    let mut edges = Vec::new();
    for k in 1..=num_iab {
        kinds.push(VertexKind::Iab);
        edges.push((k, k - 1));
    }
    attach_ues(&mut kinds, &mut edges, num_iab + 1, ues_per_bs);
    build_tree(&edges, &kinds).expect("line network is a valid tree")
}

/// Donor with two IAB children, each of which has two IAB children (K = 6).
pub fn two_child_tree(ues_per_bs: usize) -> RoutingTree {
    let mut kinds = vec![VertexKind::Donor];
    kinds.extend([VertexKind::Iab; 6]);
    let mut edges = vec![(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (6, 2)];
    attach_ues(&mut kinds, &mut edges, 7, ues_per_bs);
    build_tree(&edges, &kinds).expect("two-child tree is a valid tree")
}

fn attach_ues(kinds: &mut Vec<VertexKind>, edges: &mut Vec<(usize, usize)>, num_bs: usize, ues_per_bs: usize) {
    for bs in 0..num_bs {
        for _ in 0..ues_per_bs {
            let id = kinds.len();
            kinds.push(VertexKind::Ue);
            edges.push((id, bs));
        }
    }
}

impl RoutingTree {
    pub fn num_vertices(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_edges(&self) -> usize {
        self.kinds.len() - 1
    }

    pub fn num_iab(&self) -> usize {
        self.kinds.iter().filter(|k| **k == VertexKind::Iab).count()
    }

    pub fn num_ue(&self) -> usize {
        self.kinds.iter().filter(|k| **k == VertexKind::Ue).count()
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.kinds[v]
    }

    pub fn kinds(&self) -> &[VertexKind] {
        &self.kinds
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Number of edges between the donor and `v`.
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn edge_of(&self, child: usize) -> usize {
        debug_assert!(child > 0);
        child - 1
    }

    pub fn edge_child(&self, edge: usize) -> usize {
        edge + 1
    }

    pub fn edge_parent(&self, edge: usize) -> usize {
        self.parent[edge + 1].expect("non-donor vertex")
    }

    /// True when the edge feeds an IAB node (a backhaul link).
    pub fn is_backhaul(&self, edge: usize) -> bool {
        self.kinds[edge + 1] == VertexKind::Iab
    }

    /// Donor and IAB nodes in ascending id order; row `k` of G is `base_stations()[k]`.
    pub fn base_stations(&self) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|v| self.kinds[*v].is_base_station())
            .collect()
    }

    /// UEs in ascending id order; column `m` of F is `ues()[m]`.
    pub fn ues(&self) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|v| self.kinds[*v] == VertexKind::Ue)
            .collect()
    }

    /// Edges on the donor-to-`v` route, ordered from the donor outward.
    pub fn route(&self, v: usize) -> Vec<usize> {
        let mut edges = Vec::with_capacity(self.depth[v]);
        let mut x = v;
        while let Some(p) = self.parent[x] {
            edges.push(x - 1);
            x = p;
        }
        edges.reverse();
        edges
    }

    /// The BS serving a UE, or the parent of any non-donor vertex.
    pub fn serving_bs(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// `(child, parent)` pairs for every non-donor vertex.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        (1..self.kinds.len())
            .map(|v| (v, self.parent[v].expect("non-donor")))
            .collect()
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn with_positions(mut self, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != self.kinds.len() {
            return Err(Error::InvalidTree(format!(
                "expected {} positions, got {}",
                self.kinds.len(),
                positions.len()
            )));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidTree("positions must be finite".into()));
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson::from_tree(self)
    }
}

/// BS coordinates of a line network: the donor at the origin, IAB `k` at `k * spacing` on the x axis.
pub fn line_layout(num_iab: usize, spacing_m: f64) -> Vec<[f64; 2]> {
    (0..=num_iab).map(|k| [k as f64 * spacing_m, 0.0]).collect()
}

/// BS coordinates of the two-child tree.
///
/// First-hop nodes sit `spacing_m` from the donor at +/-60 degrees; each
/// places its two children a further `spacing_m` out at +/-30 degrees
/// around its own bearing.
pub fn two_child_layout(spacing_m: f64) -> Vec<[f64; 2]> {
    let at = |from: [f64; 2], bearing: f64| [from[0] + spacing_m * bearing.cos(), from[1] + spacing_m * bearing.sin()];
    let origin = [0.0, 0.0];
    let b1 = PI / 3.0;
    let b2 = -PI / 3.0;
    let n1 = at(origin, b1);
    let n2 = at(origin, b2);
    let spread = PI / 6.0;
    vec![
        origin,
        n1,
        n2,
        at(n1, b1 + spread),
        at(n1, b1 - spread),
        at(n2, b2 + spread),
        at(n2, b2 - spread),
    ]
}

/// Place every BS at the given coordinates and drop each UE uniformly in an
/// annulus `[min_radius_m, radius_m]` around its serving BS.
pub fn drop_ues<R: Rng + ?Sized>(
    tree: &RoutingTree,
    bs_positions: &[[f64; 2]],
    radius_m: f64,
    min_radius_m: f64,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    let bss = tree.base_stations();
    if bss.len() != bs_positions.len() {
        return Err(Error::InvalidParameter(format!(
            "{} BS positions for {} base stations",
            bs_positions.len(),
            bss.len()
        )));
    }
    if !(radius_m > min_radius_m && min_radius_m >= 0.0) {
        return Err(Error::InvalidParameter(
            "UE drop radius must exceed the minimum radius".into(),
        ));
    }
    let slot: BTreeMap<usize, [f64; 2]> = bss.iter().copied().zip(bs_positions.iter().copied()).collect();
    let mut positions = vec![[0.0; 2]; tree.num_vertices()];
    for v in 0..tree.num_vertices() {
        positions[v] = match tree.kind(v) {
            VertexKind::Ue => {
                let bs = tree.parent(v).expect("UE has a parent");
                let c = slot[&bs];
                // area-uniform radius in the annulus
                let r2 = rng.random_range(min_radius_m * min_radius_m..radius_m * radius_m);
                let r = r2.sqrt();
                let phi = rng.random_range(0.0..2.0 * PI);
                [c[0] + r * phi.cos(), c[1] + r * phi.sin()]
            }
            _ => slot[&v],
        };
    }
    Ok(positions)
}
