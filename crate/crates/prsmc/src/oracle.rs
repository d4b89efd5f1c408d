//! Brute-force ground truth by explicit exploration of the transition
//! system. Every answer here is computed from `Mbrs::successors` alone.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::altl::{eval, in_extended_fragment, AltlError, Formula, LassoRun};
use crate::graph::{closed_walk, out_lists, scc_ids};
use crate::system::{Derivation, KSet, Lasso, Mbrs, RuleIdx};
use crate::terms::{Term, Var};
use crate::verdict::{Budget, Check, Verdict};

/// Explored fragment of the transition system.
#[derive(Clone, Debug)]
pub struct StateGraph {
    pub nodes: Vec<Term>,
    pub edges: Vec<(usize, RuleIdx, usize)>,
    pub closed: bool,
    pub frontier: Vec<Term>,
}

impl StateGraph {
    pub fn index_of(&self, t: &Term) -> Option<usize> {
        self.nodes.iter().position(|n| n == t)
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(s, _, t)| (s, t)).collect()
    }
}

pub fn explore(m: &Mbrs, start: &Term, node_budget: usize) -> StateGraph {
    explore_with(m, start, node_budget, |_| true)
}

/// Terms larger than this end exploration as if the node budget ran out.
pub const MAX_TERM_SIZE: usize = 48;

/// BFS closure of `start` using only rules accepted by `allow`.
pub fn explore_with(m: &Mbrs, start: &Term, node_budget: usize, allow: impl Fn(RuleIdx) -> bool) -> StateGraph {
    let mut index: HashMap<Term, usize> = HashMap::from([(start.clone(), 0)]);
    let mut nodes = vec![start.clone()];
    let mut edges = Vec::new();
    let mut next = 0;
    while next < nodes.len() {
        for (r, t) in m.successors(&nodes[next]) {
            if !allow(r) {
                continue;
            }
            let id = match index.get(&t) {
                Some(&id) => id,
                None if nodes.len() >= node_budget || t.size() > MAX_TERM_SIZE => {
                    let frontier = nodes[next..].to_vec();
                    return StateGraph { nodes, edges, closed: false, frontier };
                }
                None => {
                    index.insert(t.clone(), nodes.len());
                    nodes.push(t);
                    nodes.len() - 1
                }
            };
            edges.push((next, r, id));
        }
        next += 1;
    }
    StateGraph { nodes, edges, closed: true, frontier: Vec::new() }
}

/// Finite derivation from `x` whose finite maximal is exactly `k`.
pub fn bf_finite_accepting(m: &Mbrs, x: Var, k: KSet, budget: Budget) -> Verdict<Derivation> {
    let start = (Term::var(x), KSet::EMPTY);
    if k.is_empty() {
        return Verdict::Yes(Derivation::null(start.0));
    }
    let mut index: HashMap<(Term, KSet), usize> = HashMap::from([(start.clone(), 0)]);
    let mut nodes = vec![start];
    let mut parent: Vec<Option<(usize, RuleIdx)>> = vec![None];
    let mut depth = vec![0usize];
    let mut truncated = false;
    let mut next = 0;
    while next < nodes.len() {
        let (t, touched) = nodes[next].clone();
        for (r, t2) in m.successors(&t) {
            if !m.cmp(r).is_subset(k) {
                continue;
            }
            if depth[next] >= budget.depth {
                truncated = true;
                break;
            }
            let key = (t2, touched.union(m.cmp(r)));
            if index.contains_key(&key) {
                continue;
            }
            if nodes.len() >= budget.nodes {
                return Verdict::Unknown(format!("node budget {} exhausted", budget.nodes));
            }
            let hit = key.1 == k;
            index.insert(key.clone(), nodes.len());
            nodes.push(key);
            parent.push(Some((next, r)));
            depth.push(depth[next] + 1);
            if hit {
                return Verdict::Yes(trace(&nodes, &parent, nodes.len() - 1));
            }
        }
        next += 1;
    }
    if truncated {
        Verdict::Unknown(format!("depth bound {} reached", budget.depth))
    } else {
        Verdict::No
    }
}

fn trace(nodes: &[(Term, KSet)], parent: &[Option<(usize, RuleIdx)>], mut at: usize) -> Derivation {
    let mut steps = Vec::new();
    while let Some((p, r)) = parent[at] {
        steps.push((r, nodes[at].0.clone()));
        at = p;
    }
    steps.reverse();
    Derivation { start: nodes[at].0.clone(), steps }
}

/// Ultimately periodic derivation from `x` with finite maximal `k` and
/// infinite maximal `kw`, searched on the closed restricted state graph.
pub fn bf_infinite_accepting(m: &Mbrs, x: Var, k: KSet, kw: KSet, budget: Budget) -> Verdict<Lasso> {
    if !kw.is_subset(k) {
        return Verdict::No;
    }
    let g = explore_with(m, &Term::var(x), budget.nodes, |r| m.cmp(r).is_subset(k));
    if !g.closed {
        return Verdict::Unknown(format!("state graph exceeds {} nodes", budget.nodes));
    }
    let pairs = g.pairs();
    let cyc_ok = |e: usize| m.cmp(g.edges[e].1).is_subset(kw);
    let scc = scc_ids(g.nodes.len(), &pairs, cyc_ok);
    let internal = |e: usize| cyc_ok(e) && scc[pairs[e].0] == scc[pairs[e].1];
    let mut cover: HashMap<usize, KSet> = HashMap::new();
    for e in (0..pairs.len()).filter(|&e| internal(e)) {
        let c = cover.entry(scc[pairs[e].0]).or_default();
        *c = c.union(m.cmp(g.edges[e].1));
    }
    let good = |v: usize| cover.get(&scc[v]).is_some_and(|c| *c == kw);

    // stem search over (node, touched)
    let out = out_lists(g.nodes.len(), &pairs);
    let mut index: HashMap<(usize, KSet), usize> = HashMap::from([((0, KSet::EMPTY), 0)]);
    let mut prod = vec![(0usize, KSet::EMPTY)];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut next = 0;
    while next < prod.len() {
        let (v, t) = prod[next];
        if good(v) && t.union(kw) == k {
            let mut stem_edges = Vec::new();
            let mut at = next;
            while let Some((p, e)) = parent[at] {
                stem_edges.push(e);
                at = p;
            }
            stem_edges.reverse();
            let required: Vec<usize> = kw
                .iter()
                .map(|i| (0..pairs.len()).find(|&e| internal(e) && scc[pairs[e].0] == scc[v] && m.cmp(g.edges[e].1).contains(i)).expect("covering scc"))
                .collect();
            let walk = closed_walk(&out, &pairs, internal, v, &required).expect("strongly connected");
            let stem = Derivation {
                start: g.nodes[0].clone(),
                steps: stem_edges.iter().map(|&e| (g.edges[e].1, g.nodes[g.edges[e].2].clone())).collect(),
            };
            return Verdict::Yes(Lasso { stem, cycle: walk.iter().map(|&e| g.edges[e].1).collect() });
        }
        for &e in &out[v] {
            let key = (pairs[e].1, t.union(m.cmp(g.edges[e].1)));
            if !index.contains_key(&key) {
                index.insert(key, prod.len());
                prod.push(key);
                parent.push(Some((next, e)));
            }
        }
        next += 1;
    }
    Verdict::No
}

/// Counterexample to a fragment property: a concrete lasso and its run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterRun {
    pub lasso: Lasso,
    pub run: LassoRun,
}

/// Does every infinite run from `x` satisfy `phi`?
///
/// For a fragment formula, truth on an infinite run depends only on the set of
/// actions that occur and the set that occurs infinitely often. Each
/// realizable pair is represented by one lasso, which is evaluated exactly.
pub fn bf_model_check(m: &Mbrs, x: Var, phi: &Formula, budget: Budget) -> Result<Check<CounterRun>, AltlError> {
    if !in_extended_fragment(phi) {
        return Err(AltlError::NotInFragment);
    }
    let g = explore(m, &Term::var(x), budget.nodes);
    if !g.closed {
        return Ok(Check::Unknown(format!("state graph exceeds {} nodes", budget.nodes)));
    }
    let names: Vec<String> = g.edges.iter().map(|&(_, r, _)| m.syms.label(&m.rule(r).label)).collect();
    let alphabet: BTreeMap<&str, usize> = names.iter().map(|s| s.as_str()).collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
    if alphabet.len() > 20 {
        return Ok(Check::Unknown("too many distinct labels".into()));
    }
    let bit: Vec<u32> = names.iter().map(|s| 1u32 << alphabet[s.as_str()]).collect();
    let pairs = g.pairs();
    let out = out_lists(g.nodes.len(), &pairs);

    // (node, labels seen) reachable from the start
    let mut index: HashMap<(usize, u32), usize> = HashMap::from([((0, 0), 0)]);
    let mut prod = vec![(0usize, 0u32)];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut next = 0;
    while next < prod.len() {
        let (v, a) = prod[next];
        for &e in &out[v] {
            let key = (pairs[e].1, a | bit[e]);
            if !index.contains_key(&key) {
                index.insert(key, prod.len());
                prod.push(key);
                parent.push(Some((next, e)));
            }
        }
        next += 1;
    }

    let present = bit.iter().fold(0u32, |a, b| a | b);
    let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut b = present;
    loop {
        // b ranges over nonempty subsets of the present labels
        if b != 0 {
            let keep = |e: usize| bit[e] & !b == 0;
            let scc = scc_ids(g.nodes.len(), &pairs, keep);
            let internal = |e: usize| keep(e) && scc[pairs[e].0] == scc[pairs[e].1];
            let mut labels: HashMap<usize, u32> = HashMap::new();
            for e in (0..pairs.len()).filter(|&e| internal(e)) {
                *labels.entry(scc[pairs[e].0]).or_default() |= bit[e];
            }
            for (p, &(v, a)) in prod.iter().enumerate() {
                if labels.get(&scc[v]) != Some(&b) || !seen.insert((a | b, b)) {
                    continue;
                }
                let required: Vec<usize> = (0..32)
                    .filter(|i| b >> i & 1 == 1)
                    .map(|i| (0..pairs.len()).find(|&e| internal(e) && scc[pairs[e].0] == scc[v] && bit[e] == 1 << i).expect("label in scc"))
                    .collect();
                let walk = closed_walk(&out, &pairs, internal, v, &required).expect("strongly connected");
                let mut stem_edges = Vec::new();
                let mut at = p;
                while let Some((q, e)) = parent[at] {
                    stem_edges.push(e);
                    at = q;
                }
                stem_edges.reverse();
                let run = LassoRun::new(
                    stem_edges.iter().map(|&e| names[e].clone()).collect(),
                    walk.iter().map(|&e| names[e].clone()).collect(),
                );
                if !eval(phi, &run) {
                    let stem = Derivation {
                        start: g.nodes[0].clone(),
                        steps: stem_edges.iter().map(|&e| (g.edges[e].1, g.nodes[g.edges[e].2].clone())).collect(),
                    };
                    let lasso = Lasso { stem, cycle: walk.iter().map(|&e| g.edges[e].1).collect() };
                    return Ok(Check::Violated(CounterRun { lasso, run }));
                }
            }
        }
        if b == 0 {
            break;
        }
        b = (b - 1) & present;
    }
    Ok(Check::Holds)
}

/// Evaluates a formula on a finite run; past the last action the run is the
/// trivial path, whose first action matches no alphabet symbol.
pub fn eval_finite(f: &Formula, word: &[String]) -> bool {
    finite_truth(f, word)[0]
}

fn finite_truth(f: &Formula, w: &[String]) -> Vec<bool> {
    let n = w.len() + 1;
    let suffix_any = |v: &[bool]| {
        let mut out = v.to_vec();
        for i in (0..n - 1).rev() {
            out[i] = out[i] || out[i + 1];
        }
        out
    };
    match f {
        Formula::True => vec![true; n],
        Formula::Diamond(a, g) => {
            let g = finite_truth(g, w);
            (0..n).map(|i| i < w.len() && &w[i] == a && g[i + 1]).collect()
        }
        Formula::Not(g) => finite_truth(g, w).into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => finite_truth(a, w).into_iter().zip(finite_truth(b, w)).map(|(x, y)| x && y).collect(),
        Formula::Or(a, b) => finite_truth(a, w).into_iter().zip(finite_truth(b, w)).map(|(x, y)| x || y).collect(),
        Formula::Until(a, b) => {
            let (a, b) = (finite_truth(a, w), finite_truth(b, w));
            let mut u = b.clone();
            for i in (0..n - 1).rev() {
                u[i] = b[i] || (a[i] && u[i + 1]);
            }
            u
        }
        Formula::F(g) | Formula::FPlus(g) => suffix_any(&finite_truth(g, w)),
        Formula::G(g) => {
            let neg: Vec<bool> = finite_truth(g, w).into_iter().map(|b| !b).collect();
            suffix_any(&neg).into_iter().map(|b| !b).collect()
        }
        // on a finite run both reduce to the truth at the trivial suffix
        Formula::GF(g) | Formula::FG(g) => vec![finite_truth(g, w)[n - 1]; n],
    }
}
