//! Total column order from a dependency graph.
//!
//! Strongly connected components are condensed into supernodes, the
//! resulting DAG is topologically sorted, and each supernode is expanded
//! in ascending column order. Ties everywhere break on the smallest column
//! index, so the result is a pure function of the graph.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::Serialize;

use crate::distill::{DependencyGraph, Edge, EdgeKind};
use crate::error::{Error, Result};
use crate::table::{Permutation, Schema};

pub const BRUTE_FORCE_MAX_COLUMNS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedDag {
    /// Members ascending; supernodes ordered by their smallest member.
    pub supernodes: Vec<Vec<usize>>,
    /// Supernode index of every column.
    pub component_of: Vec<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

/// Tarjan's algorithm, iterative so deep chains cannot blow the stack.
fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    // (node, next child offset)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*child) {
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
        }
    }
    comps
}

pub fn condense_scc(graph: &DependencyGraph) -> CondensedDag {
    let adj = graph.successors();
    let mut supernodes = tarjan(&adj);
    for s in &mut supernodes {
        s.sort_unstable();
    }
    supernodes.sort_unstable_by_key(|s| s[0]);
    let mut component_of = vec![0; graph.n_nodes()];
    for (i, s) in supernodes.iter().enumerate() {
        for &c in s {
            component_of[c] = i;
        }
    }
    let edges = graph
        .edges()
        .map(|e| (component_of[e.from], component_of[e.to]))
        .filter(|(a, b)| a != b)
        .collect();
    CondensedDag {
        supernodes,
        component_of,
        edges,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderResult {
    pub permutation: Permutation,
    /// Edges whose target precedes their source; always intra-supernode.
    pub violated: Vec<Edge>,
}

pub fn total_order(graph: &DependencyGraph) -> OrderResult {
    let m = graph.n_nodes();
    if graph.is_empty() {
        return OrderResult {
            permutation: Permutation::identity(m),
            violated: Vec::new(),
        };
    }
    let dag = condense_scc(graph);
    let c = dag.supernodes.len();
    let mut indegree = vec![0usize; c];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); c];
    for &(a, b) in &dag.edges {
        indegree[b] += 1;
        out[a].push(b);
    }
    // Supernode indices already follow smallest-member order.
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..c).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(m);
    while let Some(Reverse(s)) = ready.pop() {
        order.extend_from_slice(&dag.supernodes[s]);
        for &t in &out[s] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push(Reverse(t));
            }
        }
    }
    debug_assert_eq!(order.len(), m, "condensed graph must be acyclic");
    let permutation = Permutation::new(order).expect("expansion covers every column once");
    let violated = violated_edges(graph, &permutation.positions());
    OrderResult {
        permutation,
        violated,
    }
}

fn violated_edges(graph: &DependencyGraph, pos: &[usize]) -> Vec<Edge> {
    graph.edges().filter(|e| pos[e.to] < pos[e.from]).collect()
}

/// Edges `u -> v` that `k` places with `v` before `u`.
pub fn violation_count(graph: &DependencyGraph, k: &Permutation) -> Result<usize> {
    k.check_len(graph.n_nodes())?;
    Ok(violated_edges(graph, &k.positions()).len())
}

/// Exhaustive minimum over all orders; ties go to the lexicographically
/// smallest order.
pub fn optimal_order_bruteforce(graph: &DependencyGraph) -> Result<(Permutation, usize)> {
    let m = graph.n_nodes();
    if m > BRUTE_FORCE_MAX_COLUMNS {
        return Err(Error::TooManyColumns(m, BRUTE_FORCE_MAX_COLUMNS));
    }
    let edges: Vec<(usize, usize)> = graph.edges().map(|e| (e.from, e.to)).collect();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut pos = vec![0; m];
    let mut best: Option<(Vec<usize>, usize)> = None;
    loop {
        for (j, &c) in perm.iter().enumerate() {
            pos[c] = j;
        }
        let count = edges.iter().filter(|&&(u, v)| pos[v] < pos[u]).count();
        if best.as_ref().is_none_or(|(_, b)| count < *b) {
            best = Some((perm.clone(), count));
            if count == 0 {
                break;
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let (order, count) = best.expect("at least one permutation");
    Ok((Permutation::new(order)?, count))
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Serialize)]
struct EdgeReport<'a> {
    from: &'a str,
    to: &'a str,
    kind: EdgeKind,
}

/// `{"permutation": [names], "violation_count": n, "satisfied": [..], "violated": [..]}`
pub fn order_report_json(graph: &DependencyGraph, result: &OrderResult, schema: &Schema) -> serde_json::Value {
    let name = |c: usize| schema.column(c).name.as_str();
    let report = |e: Edge| EdgeReport {
        from: name(e.from),
        to: name(e.to),
        kind: e.kind,
    };
    let satisfied: Vec<EdgeReport> = graph
        .edges()
        .filter(|e| !result.violated.contains(e))
        .map(report)
        .collect();
    let violated: Vec<EdgeReport> = result.violated.iter().copied().map(report).collect();
    serde_json::json!({
        "permutation": result.permutation.names(schema),
        "violation_count": result.violated.len(),
        "satisfied": satisfied,
        "violated": violated,
    })
}
