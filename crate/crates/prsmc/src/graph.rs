//! Small explicit digraph helpers over edge lists `(src, dst)`.

use std::collections::VecDeque;

use petgraph::graph::{DiGraph, NodeIndex};

/// SCC id per node, considering only edges for which `keep` holds.
pub fn scc_ids(n: usize, edges: &[(usize, usize)], keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, edges.len());
    for _ in 0..n {
        g.add_node(());
    }
    for (e, &(s, t)) in edges.iter().enumerate() {
        if keep(e) {
            g.add_edge(NodeIndex::new(s), NodeIndex::new(t), ());
        }
    }
    let mut id = vec![0; n];
    for (c, comp) in petgraph::algo::tarjan_scc(&g).into_iter().enumerate() {
        for v in comp {
            id[v.index()] = c;
        }
    }
    id
}

pub fn out_lists(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    for (e, &(s, _)) in edges.iter().enumerate() {
        out[s].push(e);
    }
    out
}

/// Shortest edge path `from -> to` over edges accepted by `keep`.
pub fn shortest_path(
    out: &[Vec<usize>],
    edges: &[(usize, usize)],
    keep: impl Fn(usize) -> bool,
    from: usize,
    to: usize,
) -> Option<Vec<usize>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut pred: Vec<Option<usize>> = vec![None; out.len()];
    let mut seen = vec![false; out.len()];
    seen[from] = true;
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        for &e in &out[v] {
            let w = edges[e].1;
            if !keep(e) || seen[w] {
                continue;
            }
            seen[w] = true;
            pred[w] = Some(e);
            if w == to {
                let mut path = Vec::new();
                let mut cur = to;
                while cur != from {
                    let e = pred[cur].expect("bfs predecessor");
                    path.push(e);
                    cur = edges[e].0;
                }
                path.reverse();
                return Some(path);
            }
            q.push_back(w);
        }
    }
    None
}

/// Nonempty closed walk at `at` traversing every edge of `required`, using
/// edges accepted by `keep`; `None` if some leg is disconnected.
pub fn closed_walk(
    out: &[Vec<usize>],
    edges: &[(usize, usize)],
    keep: impl Fn(usize) -> bool + Copy,
    at: usize,
    required: &[usize],
) -> Option<Vec<usize>> {
    let mut walk = Vec::new();
    let mut cur = at;
    let mut req = required.to_vec();
    if req.is_empty() {
        req.push(*out[at].iter().find(|&&e| keep(e) && shortest_path(out, edges, keep, edges[e].1, at).is_some())?);
    }
    for e in req {
        walk.extend(shortest_path(out, edges, keep, cur, edges[e].0)?);
        walk.push(e);
        cur = edges[e].1;
    }
    walk.extend(shortest_path(out, edges, keep, cur, at)?);
    Some(walk)
}

/// Greedy choice of edges among `cands` whose labels jointly cover `target`.
pub fn cover_edges(target: crate::system::KSet, cands: &[usize], label: impl Fn(usize) -> crate::system::KSet) -> Vec<usize> {
    let mut left = target;
    let mut out = Vec::new();
    while !left.is_empty() {
        let Some(&e) = cands.iter().max_by_key(|&&e| (label(e).inter(left).len(), std::cmp::Reverse(e))) else { break };
        if label(e).inter(left).is_empty() {
            break;
        }
        left = left.minus(label(e));
        out.push(e);
    }
    out
}
