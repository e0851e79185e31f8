use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{build_tree, RoutingTree, VertexKind};
use crate::error::{Error, Result};

/// On-disk tree format:
/// `{"vertices":[{"id":0,"kind":"donor","pos":[x,y]},...],"parents":{"1":0,...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub vertices: Vec<VertexJson>,
    pub parents: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: usize,
    pub kind: VertexKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<[f64; 2]>,
}

impl TreeJson {
    pub fn from_tree(tree: &RoutingTree) -> Self {
        let vertices = (0..tree.num_vertices())
            .map(|id| VertexJson {
                id,
                kind: tree.kind(id),
                pos: tree.positions().map(|p| p[id]),
            })
            .collect();
        let parents = tree.edge_list().into_iter().map(|(c, p)| (c.to_string(), p)).collect();
        TreeJson { vertices, parents }
    }

    pub fn into_tree(self) -> Result<RoutingTree> {
        let n = self.vertices.len();
        let mut kinds = vec![None; n];
        for v in &self.vertices {
            if v.id >= n || kinds[v.id].is_some() {
                return Err(Error::InvalidTree(format!(
                    "vertex ids must be unique and dense in 0..{n}; bad id {}",
                    v.id
                )));
            }
            kinds[v.id] = Some(v.kind);
        }
        let kinds: Vec<VertexKind> = kinds.into_iter().map(|k| k.expect("dense")).collect();
        let mut edges = Vec::with_capacity(self.parents.len());
        for (child, parent) in &self.parents {
            let child: usize = child
                .parse()
                .map_err(|_| Error::InvalidTree(format!("bad vertex id {child:?}")))?;
            edges.push((child, *parent));
        }
        let tree = build_tree(&edges, &kinds)?;
        let with_pos = self.vertices.iter().filter(|v| v.pos.is_some()).count();
        if with_pos == 0 {
            return Ok(tree);
        }
        if with_pos != n {
            return Err(Error::InvalidTree(
                "positions must be given for all vertices or none".into(),
            ));
        }
        let mut pos = vec![[0.0; 2]; n];
        for v in &self.vertices {
            pos[v.id] = v.pos.expect("checked");
        }
        tree.with_positions(pos)
    }

    pub fn parse(s: &str) -> Result<RoutingTree> {
        let j: TreeJson = serde_json::from_str(s)?;
        j.into_tree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{line_layout, line_network};

    #[test]
    fn parses_documented_format() {
        let s = r#"{"vertices":[{"id":0,"kind":"donor","pos":[0,0]},
                    {"id":1,"kind":"iab","pos":[200,0]},
                    {"id":2,"kind":"ue","pos":[250,10]}],
                    "parents":{"1":0,"2":1}}"#;
        let t = TreeJson::parse(s).unwrap();
        assert_eq!(t.num_edges(), 2);
        assert_eq!(t.positions().unwrap()[2], [250.0, 10.0]);
    }

    #[test]
    fn round_trip() {
        let t = line_network(1, 2);
        let mut pos = line_layout(1, 200.0);
        pos.extend([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]);
        let t = t.with_positions(pos).unwrap();
        let s = serde_json::to_string(&t.to_json()).unwrap();
        assert_eq!(TreeJson::parse(&s).unwrap(), t);
    }
}
