//! Exact procedures for sequential systems built from pushes `X -> Y.(Z)` and
//! renames `X -> Y`. Only the innermost variable of such a term is ever
//! rewritable and buried variables never resurface, so the dynamics are those
//! of a finite graph over (innermost variable, touched components).

use std::collections::HashMap;

use crate::par_engine::EngineError;
use crate::graph::{closed_walk, cover_edges, out_lists, scc_ids};
use crate::system::{Derivation, KSet, Lasso, Mbrs, RuleIdx, Shape};
use crate::terms::{Term, Var};
use crate::verdict::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Move {
    Rename(Var),
    Push { bury: Var, top: Var },
}

/// The innermost-variable graph: one edge per rule, from its left-hand
/// variable to the variable it leaves innermost.
#[derive(Clone, Debug)]
pub struct TopGraph {
    pub nvars: usize,
    /// `(from, rule, to)` over variable indices.
    pub edges: Vec<(usize, RuleIdx, usize)>,
    moves: Vec<Move>,
}

impl TopGraph {
    pub fn new(ms: &Mbrs) -> Result<TopGraph, EngineError> {
        let mut g = TopGraph { nvars: ms.vars().len(), edges: Vec::new(), moves: Vec::new() };
        for r in 0..ms.len() {
            let rule = ms.rule(r);
            let (x, mv) = match ms.shape(r) {
                Shape::Push { x, y, z } => (*x, Move::Push { bury: *y, top: *z }),
                Shape::Par => match (rule.lhs.as_var(), rule.rhs.as_var()) {
                    (Some(x), Some(y)) => (x, Move::Rename(y)),
                    _ => return Err(EngineError::UnsupportedRule(rule.id.clone())),
                },
                _ => return Err(EngineError::UnsupportedRule(rule.id.clone())),
            };
            let to = match mv {
                Move::Rename(y) => y,
                Move::Push { top, .. } => top,
            };
            g.edges.push((x.index(), r, to.index()));
            g.moves.push(mv);
        }
        Ok(g)
    }

    /// Concrete derivation from `X` following rule edges.
    fn derivation(&self, ms: &Mbrs, x: Var, rules: &[RuleIdx]) -> Derivation {
        let mut buried: Vec<Var> = Vec::new();
        let mut top: Var;
        let mut d = Derivation::null(Term::var(x));
        for &r in rules {
            match self.moves[r] {
                Move::Rename(y) => top = y,
                Move::Push { bury, top: z } => {
                    buried.push(bury);
                    top = z;
                }
            }
            let term = buried.iter().rev().fold(Term::var(top), |acc, &b| Term::seq(b, acc));
            d.steps.push((r, term));
        }
        debug_assert!(d.replay(ms).is_ok());
        d
    }
}

/// Product search over (variable, touched) from `(X, ∅)` with edges `cmp ⊆ K`.
fn product(
    ms: &Mbrs,
    g: &TopGraph,
    x: Var,
    k: KSet,
    mut stop: impl FnMut(usize, KSet) -> bool,
) -> Option<Vec<RuleIdx>> {
    let pairs: Vec<(usize, usize)> = g.edges.iter().map(|&(s, _, t)| (s, t)).collect();
    let out = out_lists(g.nvars, &pairs);
    let mut index: HashMap<(usize, KSet), usize> = HashMap::from([((x.index(), KSet::EMPTY), 0)]);
    let mut states = vec![(x.index(), KSet::EMPTY)];
    let mut parent: Vec<Option<(usize, RuleIdx)>> = vec![None];
    let mut next = 0;
    while next < states.len() {
        let (v, t) = states[next];
        if stop(v, t) {
            let mut rules = Vec::new();
            let mut at = next;
            while let Some((p, r)) = parent[at] {
                rules.push(r);
                at = p;
            }
            rules.reverse();
            return Some(rules);
        }
        for &e in &out[v] {
            let r = g.edges[e].1;
            if !ms.cmp(r).is_subset(k) {
                continue;
            }
            let key = (pairs[e].1, t.union(ms.cmp(r)));
            if !index.contains_key(&key) {
                index.insert(key, states.len());
                states.push(key);
                parent.push(Some((next, r)));
            }
        }
        next += 1;
    }
    None
}

/// Derivation from `X` to a term `X1.(…Xn.(Y)…)` with finite maximal `K`.
pub fn seq_reachable_var(ms: &Mbrs, x: Var, y: Var, k: KSet) -> Result<Verdict<Derivation>, EngineError> {
    let g = TopGraph::new(ms)?;
    Ok(match product(ms, &g, x, k, |v, t| v == y.index() && t == k) {
        Some(rules) => Verdict::Yes(g.derivation(ms, x, &rules)),
        None => Verdict::No,
    })
}

/// Infinite derivation from `X` with finite maximal `K` and infinite maximal `Kω`.
pub fn seq_infinite_accepting(ms: &Mbrs, x: Var, k: KSet, kw: KSet) -> Result<Verdict<Lasso>, EngineError> {
    let g = TopGraph::new(ms)?;
    if !kw.is_subset(k) {
        return Ok(Verdict::No);
    }
    let pairs: Vec<(usize, usize)> = g.edges.iter().map(|&(s, _, t)| (s, t)).collect();
    let cyc_ok = |e: usize| ms.cmp(g.edges[e].1).is_subset(kw);
    let scc = scc_ids(g.nvars, &pairs, cyc_ok);
    let internal = |e: usize| cyc_ok(e) && scc[pairs[e].0] == scc[pairs[e].1];
    let mut cover: HashMap<usize, KSet> = HashMap::new();
    for e in (0..pairs.len()).filter(|&e| internal(e)) {
        let c = cover.entry(scc[pairs[e].0]).or_default();
        *c = c.union(ms.cmp(g.edges[e].1));
    }
    let Some(stem) = product(ms, &g, x, k, |v, t| cover.get(&scc[v]) == Some(&kw) && t.union(kw) == k) else {
        return Ok(Verdict::No);
    };
    let at = stem.last().map(|&r| g.edges[r].2).unwrap_or(x.index());
    let in_scc: Vec<usize> = (0..pairs.len()).filter(|&e| internal(e) && scc[pairs[e].0] == scc[at]).collect();
    let required = cover_edges(kw, &in_scc, |e| ms.cmp(g.edges[e].1));
    let walk = closed_walk(&out_lists(g.nvars, &pairs), &pairs, internal, at, &required).expect("strongly connected");
    Ok(Verdict::Yes(Lasso { stem: g.derivation(ms, x, &stem), cycle: walk.into_iter().map(|e| g.edges[e].1).collect() }))
}
