//! Turns functional dependencies into a column dependency graph.
//!
//! An edge `u -> v` means "generate `u` before `v`":
//!
//! * single determinant, single dependent: forward edge `lhs -> rhs` (type 1);
//! * several determinants, single dependent: one backward edge
//!   `rhs -> l` per determinant `l` (type 2);
//! * several dependents: split into one dependency per dependent, keeping
//!   the full determinant set, then apply one of the rules above.
//!
//! Dependencies with an empty determinant (constant columns) add no edges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::FunctionalDependency;
use crate::table::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Type1,
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DependencyGraph {
    m: usize,
    edges: BTreeMap<Edge, Vec<FunctionalDependency>>,
}

impl DependencyGraph {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            edges: BTreeMap::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges in (from, to, kind) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.keys().copied()
    }

    pub fn sources(&self, e: &Edge) -> &[FunctionalDependency] {
        self.edges.get(e).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, from: usize, to: usize, kind: EdgeKind) -> bool {
        self.edges.contains_key(&Edge { from, to, kind })
    }

    /// Adjacency lists, deduplicated across edge kinds, targets ascending.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m];
        for e in self.edges.keys() {
            adj[e.from].push(e.to);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Adds an edge, merging its source into any existing identical edge.
    pub fn add_edge(&mut self, edge: Edge, source: Option<FunctionalDependency>) -> Result<()> {
        for c in [edge.from, edge.to] {
            if c >= self.m {
                return Err(Error::InvalidColumn(c));
            }
        }
        if edge.from == edge.to {
            return Err(Error::OverlappingLhsRhs(format!("self-loop on column {}", edge.from)));
        }
        let sources = self.edges.entry(edge).or_default();
        if let Some(fd) = source {
            if !sources.contains(&fd) {
                sources.push(fd);
            }
        }
        Ok(())
    }
}

fn edges_for(fd: &FunctionalDependency) -> Vec<Edge> {
    let mut out = Vec::new();
    if fd.lhs.is_empty() {
        return out;
    }
    for &r in &fd.rhs {
        if let [single] = fd.lhs[..] {
            out.push(Edge {
                from: single,
                to: r,
                kind: EdgeKind::Type1,
            });
        } else {
            out.extend(fd.lhs.iter().map(|&l| Edge {
                from: r,
                to: l,
                kind: EdgeKind::Type2,
            }));
        }
    }
    out
}

fn validate(fd: &FunctionalDependency, m: usize) -> Result<()> {
    fd.check_columns(m)?;
    if let Some(c) = fd.rhs.iter().find(|c| fd.lhs.contains(c)) {
        return Err(Error::OverlappingLhsRhs(format!("column {c} on both sides")));
    }
    Ok(())
}

pub fn distill(fds: &[FunctionalDependency], m: usize) -> Result<DependencyGraph> {
    merge_declared(&DependencyGraph::new(m), fds)
}

/// Union of `graph` with the edges distilled from `declared`.
pub fn merge_declared(
    graph: &DependencyGraph,
    declared: &[FunctionalDependency],
) -> Result<DependencyGraph> {
    let mut g = graph.clone();
    for fd in declared {
        validate(fd, g.m)?;
    }
    for fd in declared {
        for e in edges_for(fd) {
            g.add_edge(e, Some(fd.clone()))?;
        }
    }
    Ok(g)
}

#[derive(Serialize, Deserialize)]
struct SourceJson {
    lhs: Vec<String>,
    rhs: Vec<String>,
    g3: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    from: String,
    to: String,
    kind: EdgeKind,
    sources: Vec<SourceJson>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    nodes: Vec<String>,
    edges: Vec<EdgeJson>,
}

impl DependencyGraph {
    pub fn to_json_value(&self, schema: &Schema) -> serde_json::Value {
        let name = |c: usize| schema.column(c).name.clone();
        let names = |s: &[usize]| s.iter().map(|&c| name(c)).collect();
        let doc = GraphJson {
            nodes: schema.names().iter().map(|s| s.to_string()).collect(),
            edges: self
                .edges
                .iter()
                .map(|(e, srcs)| EdgeJson {
                    from: name(e.from),
                    to: name(e.to),
                    kind: e.kind,
                    sources: srcs
                        .iter()
                        .map(|fd| SourceJson {
                            lhs: names(&fd.lhs),
                            rhs: names(&fd.rhs),
                            g3: fd.g3,
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("plain data serializes")
    }

    pub fn from_json_value(value: &serde_json::Value, schema: &Schema) -> Result<Self> {
        let doc: GraphJson = serde_json::from_value(value.clone())?;
        if doc.nodes.len() != schema.len()
            || doc.nodes.iter().zip(schema.names()).any(|(a, b)| a != b)
        {
            return Err(Error::SchemaMismatch("graph nodes differ from table columns".into()));
        }
        let idx = |names: &[String]| {
            names
                .iter()
                .map(|n| schema.require(n))
                .collect::<Result<Vec<_>>>()
        };
        let mut g = DependencyGraph::new(schema.len());
        for e in doc.edges {
            let edge = Edge {
                from: schema.require(&e.from)?,
                to: schema.require(&e.to)?,
                kind: e.kind,
            };
            g.add_edge(edge, None)?;
            for s in e.sources {
                let fd = FunctionalDependency::new(idx(&s.lhs)?, idx(&s.rhs)?, s.g3)?;
                g.add_edge(edge, Some(fd))?;
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(lhs: &[usize], rhs: &[usize]) -> FunctionalDependency {
        FunctionalDependency::exact(lhs.to_vec(), rhs.to_vec()).unwrap()
    }

    fn edge_list(g: &DependencyGraph) -> Vec<(usize, usize, EdgeKind)> {
        g.edges().map(|e| (e.from, e.to, e.kind)).collect()
    }

    // Columns: 0 State, 1 Bird, 2 Lat, 3 Long.
    #[test]
    fn single_determinant_gives_forward_edge() {
        let g = distill(&[fd(&[0], &[1])], 4).unwrap();
        assert_eq!(edge_list(&g), vec![(0, 1, EdgeKind::Type1)]);
    }

    #[test]
    fn composite_determinant_gives_backward_edges() {
        let g = distill(&[fd(&[2, 3], &[0])], 4).unwrap();
        assert_eq!(
            edge_list(&g),
            vec![(0, 2, EdgeKind::Type2), (0, 3, EdgeKind::Type2)]
        );
    }

    #[test]
    fn multi_dependent_is_decomposed() {
        let g = distill(&[fd(&[0], &[1, 2])], 3).unwrap();
        assert_eq!(
            edge_list(&g),
            vec![(0, 1, EdgeKind::Type1), (0, 2, EdgeKind::Type1)]
        );
        let g = distill(&[fd(&[0, 1], &[2, 3])], 4).unwrap();
        assert_eq!(
            edge_list(&g),
            vec![
                (2, 0, EdgeKind::Type2),
                (2, 1, EdgeKind::Type2),
                (3, 0, EdgeKind::Type2),
                (3, 1, EdgeKind::Type2)
            ]
        );
    }

    #[test]
    fn constants_and_empty_input_add_nothing() {
        assert!(distill(&[], 3).unwrap().is_empty());
        assert!(distill(&[fd(&[], &[1])], 3).unwrap().is_empty());
    }

    #[test]
    fn duplicate_edges_keep_all_sources() {
        let a = fd(&[0], &[1]);
        let b = FunctionalDependency::new(vec![0], vec![1, 2], 0.0).unwrap();
        let g = distill(&[a.clone(), b.clone()], 3).unwrap();
        let e = Edge {
            from: 0,
            to: 1,
            kind: EdgeKind::Type1,
        };
        assert_eq!(g.sources(&e), &[a, b]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn errors() {
        assert_eq!(
            distill(&[fd(&[0], &[5])], 3).unwrap_err(),
            Error::InvalidColumn(5)
        );
        let bad = FunctionalDependency {
            lhs: vec![0, 1],
            rhs: vec![1],
            g3: 0.0,
        };
        assert!(matches!(
            distill(&[bad], 3).unwrap_err(),
            Error::OverlappingLhsRhs(_)
        ));
    }

    #[test]
    fn merge_is_idempotent_and_unions() {
        let g = distill(&[fd(&[0], &[1])], 2).unwrap();
        assert_eq!(merge_declared(&g, &[fd(&[0], &[1])]).unwrap(), g);
        let empty = DependencyGraph::new(2);
        assert_eq!(
            merge_declared(&empty, &[fd(&[1], &[0])]).unwrap(),
            distill(&[fd(&[1], &[0])], 2).unwrap()
        );
        let both = merge_declared(&g, &[fd(&[1], &[0])]).unwrap();
        assert!(both.contains(0, 1, EdgeKind::Type1));
        assert!(both.contains(1, 0, EdgeKind::Type1));
    }

    #[test]
    fn input_order_does_not_matter_for_edges() {
        let fds = vec![fd(&[0], &[1]), fd(&[2, 3], &[0]), fd(&[1], &[2, 3])];
        let mut rev = fds.clone();
        rev.reverse();
        let a = distill(&fds, 4).unwrap();
        let b = distill(&rev, 4).unwrap();
        assert_eq!(edge_list(&a), edge_list(&b));
    }

    #[test]
    fn json_round_trip() {
        use crate::table::{Column, ColumnKind};
        let schema = Schema::new(
            ["State", "Bird", "Lat", "Long"]
                .iter()
                .map(|n| Column::new(*n, ColumnKind::Categorical))
                .collect(),
        )
        .unwrap();
        let g = distill(&[fd(&[0], &[1]), fd(&[2, 3], &[0])], 4).unwrap();
        let v = g.to_json_value(&schema);
        assert_eq!(v["edges"][0]["from"], "State");
        assert_eq!(v["edges"][0]["kind"], "type1");
        assert_eq!(DependencyGraph::from_json_value(&v, &schema).unwrap(), g);
    }
}
