//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use tabperm_core::distill::{DependencyGraph, Edge, EdgeKind};
use tabperm_core::table::{Column, ColumnKind, Schema, Table};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A categorical table where some columns are functions of earlier ones,
/// optionally with a few corrupted rows.
pub struct FdCase {
    pub table: Table,
    pub max_lhs: usize,
    pub threshold: f64,
}

pub fn random_fd_case(seed: u64, max_cols: usize, max_rows: usize) -> FdCase {
    let mut r = rng(seed);
    let m = r.gen_range(2..=max_cols);
    let n = r.gen_range(2..=max_rows);
    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(m);
    for j in 0..m {
        let planted = j >= 1 && r.gen_bool(0.6);
        let col: Vec<u64> = if planted {
            let k = r.gen_range(1..=j.min(2));
            let mut pool: Vec<usize> = (0..j).collect();
            pool.shuffle(&mut r);
            let lhs = &pool[..k];
            let card = r.gen_range(1..=5u64);
            let salt: u64 = r.gen();
            let noise = [0.0, 0.0, 0.003, 0.02][r.gen_range(0..4)];
            (0..n)
                .map(|i| {
                    let mut h = salt;
                    for &c in lhs {
                        h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(cols[c][i]);
                    }
                    let v = (h >> 7) % card;
                    if r.gen_bool(noise) {
                        r.gen_range(0..card + 1)
                    } else {
                        v
                    }
                })
                .collect()
        } else {
            let card = [1u64, 2, 3, 5, 10, n as u64][r.gen_range(0..6)];
            (0..n).map(|_| r.gen_range(0..card)).collect()
        };
        cols.push(col);
    }
    let schema = Schema::new(
        (0..m)
            .map(|j| Column::new(format!("c{j}"), ColumnKind::Categorical))
            .collect(),
    )
    .unwrap();
    let rows = (0..n)
        .map(|i| cols.iter().map(|c| format!("v{}", c[i])).collect())
        .collect();
    let table = Table::from_strings(schema, rows).unwrap();
    FdCase {
        table,
        max_lhs: r.gen_range(1..m.max(2)),
        threshold: [0.0, 0.01, 0.05][r.gen_range(0..3)],
    }
}

/// Random dependency graph; with `dag` set, every edge follows a hidden
/// topological order.
pub fn random_graph(seed: u64, max_nodes: usize, dag: bool) -> DependencyGraph {
    let mut r = rng(seed);
    let m = r.gen_range(1..=max_nodes);
    let mut topo: Vec<usize> = (0..m).collect();
    topo.shuffle(&mut r);
    let density = r.gen_range(0.05..0.6);
    let mut g = DependencyGraph::new(m);
    for a in 0..m {
        for b in 0..m {
            if a == b || !r.gen_bool(density) {
                continue;
            }
            let (from, to) = if dag {
                let pa = topo.iter().position(|&x| x == a).unwrap();
                let pb = topo.iter().position(|&x| x == b).unwrap();
                if pa < pb {
                    (a, b)
                } else {
                    (b, a)
                }
            } else {
                (a, b)
            };
            let kind = if r.gen_bool(0.5) { EdgeKind::Type1 } else { EdgeKind::Type2 };
            g.add_edge(Edge { from, to, kind }, None).unwrap();
        }
    }
    g
}
