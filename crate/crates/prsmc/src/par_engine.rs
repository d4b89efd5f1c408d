//! Decision procedures for parallel systems, viewed as Petri nets over
//! variable counts.
//!
//! Coverability-style questions are exact through Karp-Miller trees with a
//! finite control. Self-covering cycles are found in nested Karp-Miller trees,
//! one per candidate cycle start. Reachability of an exact marking is exact
//! whenever the restricted marking graph closes within budget; otherwise a
//! trap argument may refute it, and the answer is `Unknown` when neither
//! concludes.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hash;

use thiserror::Error;

use crate::system::{Derivation, KSet, Mbrs, RuleIdx};
use crate::terms::{Term, Var};
use crate::verdict::{Budget, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("system is not parallel")]
    NotParallel,
    #[error("the two systems do not share one rule set")]
    SupportMismatch,
    #[error("rule `{0}` has an unsupported shape")]
    UnsupportedRule(String),
}

/// Count standing for ω in extended markings.
pub const OMEGA: u32 = u32::MAX;

/// A firing sequence of rule indices.
pub type Firing = Vec<RuleIdx>;

/// The rules of a parallel system accepted by a filter, as transitions.
#[derive(Clone, Debug)]
pub struct Net {
    pub nvars: usize,
    pub rules: Vec<RuleIdx>,
    pre: Vec<Vec<(usize, u32)>>,
    post: Vec<Vec<(usize, u32)>>,
}

impl Net {
    pub fn new(mp: &Mbrs, allow: impl Fn(RuleIdx) -> bool) -> Result<Net, EngineError> {
        if !mp.is_parallel() {
            return Err(EngineError::NotParallel);
        }
        let nvars = mp.vars().len();
        let mut net = Net { nvars, rules: Vec::new(), pre: Vec::new(), post: Vec::new() };
        for r in (0..mp.len()).filter(|&r| allow(r)) {
            let rule = mp.rule(r);
            let sparse = |t: &Term| {
                let c = t.counts(nvars).expect("parallel term");
                c.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i, k)).collect::<Vec<_>>()
            };
            net.rules.push(r);
            net.pre.push(sparse(&rule.lhs));
            net.post.push(sparse(&rule.rhs));
        }
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn enabled(&self, m: &[u32], t: usize) -> bool {
        self.pre[t].iter().all(|&(p, k)| m[p] >= k)
    }

    /// Successor marking; ω entries stay ω.
    pub fn fire(&self, m: &[u32], t: usize) -> Vec<u32> {
        let mut m2 = m.to_vec();
        for &(p, k) in &self.pre[t] {
            if m2[p] != OMEGA {
                m2[p] -= k;
            }
        }
        for &(p, k) in &self.post[t] {
            if m2[p] != OMEGA {
                m2[p] = m2[p].saturating_add(k).min(OMEGA - 1);
            }
        }
        m2
    }

    /// The transitions accepted by `keep`, with their indices in `self`.
    fn restrict(&self, keep: impl Fn(usize) -> bool) -> (Net, Vec<usize>) {
        let orig: Vec<usize> = (0..self.len()).filter(|&t| keep(t)).collect();
        let net = Net {
            nvars: self.nvars,
            rules: orig.iter().map(|&t| self.rules[t]).collect(),
            pre: orig.iter().map(|&t| self.pre[t].clone()).collect(),
            post: orig.iter().map(|&t| self.post[t].clone()).collect(),
        };
        (net, orig)
    }

    fn consumes(&self, t: usize, p: usize) -> bool {
        self.pre[t].iter().any(|&(q, _)| q == p)
    }

    fn produces_into(&self, t: usize, set: &[bool]) -> bool {
        self.post[t].iter().any(|&(q, _)| set[q])
    }
}

pub fn marking(nvars: usize, t: &Term) -> Option<Vec<u32>> {
    t.counts(nvars)
}

fn covers(big: &[u32], small: &[u32]) -> bool {
    big.iter().zip(small).all(|(b, s)| b >= s)
}

/// Replays a firing sequence on a parallel start term.
pub fn firing_derivation(mp: &Mbrs, start: &Term, seq: &[RuleIdx]) -> Option<Derivation> {
    let mut d = Derivation::null(start.clone());
    for &r in seq {
        let next = mp.apply(r, d.end()).into_iter().next()?;
        d.steps.push((r, next));
    }
    Some(d)
}

// ---------------------------------------------------------------------------
// Karp-Miller trees with a finite control

#[derive(Clone, Debug)]
pub struct KmNode<C> {
    pub marking: Vec<u32>,
    pub control: C,
    /// Parent node and the local transition fired from it.
    pub parent: Option<(usize, usize)>,
    /// Ancestors whose covering triggered acceleration at this node.
    pub accel: Vec<usize>,
}

impl<C> KmNode<C> {
    pub fn is_omega_free(&self) -> bool {
        !self.marking.contains(&OMEGA)
    }
}

#[derive(Clone, Debug)]
pub struct KarpMiller<C> {
    pub nodes: Vec<KmNode<C>>,
    pub complete: bool,
    pub goal: Option<usize>,
}

/// Builds the tree breadth-first, smallest transition first, stopping at the
/// first node satisfying `goal`. Nodes equal to an earlier node are leaves.
pub fn karp_miller<C: Copy + Eq + Hash>(
    net: &Net,
    m0: Vec<u32>,
    c0: C,
    step: impl Fn(C, usize) -> C,
    goal: impl Fn(&[u32], C) -> bool,
    node_budget: usize,
) -> KarpMiller<C> {
    let mut km = KarpMiller { nodes: vec![KmNode { marking: m0, control: c0, parent: None, accel: vec![] }], complete: true, goal: None };
    if goal(&km.nodes[0].marking, c0) {
        km.goal = Some(0);
        return km;
    }
    let mut seen: HashSet<(Vec<u32>, C)> = HashSet::from([(km.nodes[0].marking.clone(), c0)]);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        for t in 0..net.len() {
            if !net.enabled(&km.nodes[n].marking, t) {
                continue;
            }
            let mut m2 = net.fire(&km.nodes[n].marking, t);
            let c2 = step(km.nodes[n].control, t);
            let mut accel = Vec::new();
            let mut a = Some(n);
            while let Some(i) = a {
                let anc = &km.nodes[i];
                if anc.control == c2 && covers(&m2, &anc.marking) && m2 != anc.marking {
                    for p in 0..m2.len() {
                        if m2[p] > anc.marking[p] {
                            m2[p] = OMEGA;
                        }
                    }
                    accel.push(i);
                }
                a = anc.parent.map(|(p, _)| p);
            }
            if km.nodes.len() >= node_budget {
                km.complete = false;
                return km;
            }
            let fresh = seen.insert((m2.clone(), c2));
            let id = km.nodes.len();
            let hit = goal(&m2, c2);
            km.nodes.push(KmNode { marking: m2, control: c2, parent: Some((n, t)), accel });
            if hit {
                km.goal = Some(id);
                return km;
            }
            if fresh {
                queue.push_back(id);
            }
        }
    }
    km
}

/// Tree path to `node` as transitions, with each acceleration as the
/// half-open range of path steps it repeats, in the order they occur.
fn accel_path<C>(km: &KarpMiller<C>, node: usize) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut path = vec![node];
    while let Some((p, _)) = km.nodes[*path.last().unwrap()].parent {
        path.push(p);
    }
    path.reverse();
    let pos: HashMap<usize, usize> = path.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let trans = path[1..].iter().map(|&n| km.nodes[n].parent.expect("non-root").1).collect();
    let mut events = Vec::new();
    for (i, &n) in path.iter().enumerate().skip(1) {
        for a in &km.nodes[n].accel {
            events.push((pos[a], i));
        }
    }
    (trans, events)
}

const MAX_PUMPED_LEN: usize = 1 << 18;

/// Concrete word for the tree path to `node` with every accelerated segment
/// repeated at least `base` extra times. Segments run short of tokens are
/// repeated more, the latest producing segment first.
fn pump_fit<C: Copy>(
    km: &KarpMiller<C>,
    net: &Net,
    step: impl Fn(C, usize) -> C,
    node: usize,
    base: usize,
) -> Option<(Vec<usize>, Vec<u32>, C)> {
    let (trans, events) = accel_path(km, node);
    let effect = |e: usize, p: usize| -> i64 {
        let (from, to) = events[e];
        trans[from..to]
            .iter()
            .map(|&t| {
                let gain: i64 = net.post[t].iter().filter(|q| q.0 == p).map(|q| q.1 as i64).sum();
                let loss: i64 = net.pre[t].iter().filter(|q| q.0 == p).map(|q| q.1 as i64).sum();
                gain - loss
            })
            .sum()
    };
    let mut counts = vec![base; events.len()];
    let (m0, c0) = (&km.nodes[0].marking, km.nodes[0].control);
    for _ in 0..256 {
        // `done[j]` is the number of events finished before word position j.
        let mut word = Vec::new();
        let mut done = Vec::new();
        let mut ev = 0;
        for (i, &t) in trans.iter().enumerate() {
            word.push(t);
            done.push(ev);
            while ev < events.len() && events[ev].1 == i + 1 {
                let (from, to) = events[ev];
                for _ in 0..counts[ev] {
                    for &u in &trans[from..to] {
                        word.push(u);
                        done.push(ev);
                    }
                }
                ev += 1;
            }
            if word.len() > MAX_PUMPED_LEN {
                return None;
            }
        }
        let (mut m, mut c) = (m0.clone(), c0);
        let mut short = None;
        for (j, &t) in word.iter().enumerate() {
            if let Some(&(p, k)) = net.pre[t].iter().find(|&&(p, k)| m[p] < k) {
                short = Some((j, p, (k - m[p]) as i64));
                break;
            }
            m = net.fire(&m, t);
            c = step(c, t);
        }
        let Some((j, p, deficit)) = short else { return Some((word, m, c)) };
        let e = (0..done[j]).rev().find(|&e| effect(e, p) > 0)?;
        let gain = effect(e, p);
        counts[e] += ((deficit + gain - 1) / gain) as usize;
    }
    None
}

/// Concrete firing sequence (local transitions) realizing a tree node, by
/// pumping accelerated segments; checked by simulation.
fn concretize<C: Copy + Eq>(
    km: &KarpMiller<C>,
    net: &Net,
    step: impl Fn(C, usize) -> C + Copy,
    goal: impl Fn(&[u32], C) -> bool,
    node: usize,
) -> Option<Vec<usize>> {
    (0..9).map(|e| 1usize << e).find_map(|base| {
        let (word, m, c) = pump_fit(km, net, step, node, base)?;
        goal(&m, c).then_some(word)
    })
}

/// Karp-Miller tree of the whole system from `start`, without control.
pub fn km_tree(mp: &Mbrs, start: &Term, node_budget: usize) -> Result<KarpMiller<()>, EngineError> {
    let net = Net::new(mp, |_| true)?;
    let m0 = marking(net.nvars, start).ok_or(EngineError::NotParallel)?;
    Ok(karp_miller(&net, m0, (), |_, _| (), |_, _| false, node_budget))
}

type Touch = (KSet, bool);

fn touch_step<'a>(mp: &'a Mbrs, net: &'a Net) -> impl Fn(Touch, usize) -> Touch + Copy + 'a {
    move |(k, _), t| (k.union(mp.cmp(net.rules[t])), true)
}

fn km_query(
    mp: &Mbrs,
    x: Var,
    k: KSet,
    goal: impl Fn(&[u32], Touch) -> bool + Copy,
    budget: Budget,
) -> Result<Verdict<Firing>, EngineError> {
    let net = Net::new(mp, |r| mp.cmp(r).is_subset(k))?;
    let reachable: KSet = net.rules.iter().map(|&r| mp.cmp(r)).fold(KSet::EMPTY, KSet::union);
    if !k.is_subset(reachable) {
        return Ok(Verdict::No);
    }
    let m0 = marking(net.nvars, &Term::var(x)).expect("variable");
    let step = touch_step(mp, &net);
    let km = karp_miller(&net, m0, (KSet::EMPTY, false), step, goal, budget.nodes);
    Ok(match km.goal {
        Some(g) => match concretize(&km, &net, step, goal, g) {
            Some(word) => Verdict::Yes(word.into_iter().map(|t| net.rules[t]).collect()),
            None => Verdict::Unknown("coverability witness could not be concretized".into()),
        },
        None if km.complete => Verdict::No,
        None => Verdict::Unknown(format!("Karp-Miller tree exceeds {} nodes", budget.nodes)),
    })
}

/// `X -σ-> t || Y` with `|σ| > 0` and finite maximal exactly `k`.
pub fn par_reach_cover(mp: &Mbrs, x: Var, y: Var, k: KSet, budget: Budget) -> Result<Verdict<Firing>, EngineError> {
    let yi = y.index();
    km_query(mp, x, k, move |m: &[u32], (t, ne): Touch| ne && t == k && m[yi] >= 1, budget)
}

/// Finite derivation from `X` with finite maximal exactly `k`.
pub fn par_finite_accepting(mp: &Mbrs, x: Var, k: KSet, budget: Budget) -> Result<Verdict<Firing>, EngineError> {
    if !mp.is_parallel() {
        return Err(EngineError::NotParallel);
    }
    if k.is_empty() {
        return Ok(Verdict::Yes(Vec::new()));
    }
    km_query(mp, x, k, move |_: &[u32], (t, _): Touch| t == k, budget)
}

// ---------------------------------------------------------------------------
// Explicit marking graphs

struct MarkingGraph {
    nodes: Vec<Vec<u32>>,
    edges: Vec<(usize, usize, usize)>,
    out: Vec<Vec<usize>>,
    closed: bool,
}

fn marking_graph(net: &Net, m0: Vec<u32>, node_budget: usize) -> MarkingGraph {
    let mut index: HashMap<Vec<u32>, usize> = HashMap::from([(m0.clone(), 0)]);
    let mut g = MarkingGraph { nodes: vec![m0], edges: Vec::new(), out: vec![Vec::new()], closed: true };
    let mut next = 0;
    'outer: while next < g.nodes.len() {
        for t in 0..net.len() {
            if !net.enabled(&g.nodes[next], t) {
                continue;
            }
            let m2 = net.fire(&g.nodes[next], t);
            let id = match index.get(&m2) {
                Some(&id) => id,
                None if g.nodes.len() >= node_budget => {
                    g.closed = false;
                    break 'outer;
                }
                None => {
                    index.insert(m2.clone(), g.nodes.len());
                    g.nodes.push(m2);
                    g.out.push(Vec::new());
                    g.nodes.len() - 1
                }
            };
            g.out[next].push(g.edges.len());
            g.edges.push((next, t, id));
        }
        next += 1;
    }
    g
}

/// BFS over `(node, control)` pairs; returns states and parent edges.
fn product<C: Copy + Eq + Hash>(
    g: &MarkingGraph,
    c0: C,
    step: impl Fn(C, usize) -> C,
    mut stop: impl FnMut(usize, C) -> bool,
) -> (Vec<(usize, C)>, Vec<Option<(usize, usize)>>, Option<usize>) {
    let mut index: HashMap<(usize, C), usize> = HashMap::from([((0, c0), 0)]);
    let mut states = vec![(0usize, c0)];
    let mut parent = vec![None];
    let mut next = 0;
    while next < states.len() {
        let (v, c) = states[next];
        if stop(v, c) {
            return (states, parent, Some(next));
        }
        for &e in &g.out[v] {
            let (_, t, w) = g.edges[e];
            let key = (w, step(c, t));
            if !index.contains_key(&key) {
                index.insert(key, states.len());
                states.push(key);
                parent.push(Some((next, e)));
            }
        }
        next += 1;
    }
    (states, parent, None)
}

fn edge_path(parent: &[Option<(usize, usize)>], mut at: usize) -> Vec<usize> {
    let mut path = Vec::new();
    while let Some((p, e)) = parent[at] {
        path.push(e);
        at = p;
    }
    path.reverse();
    path
}

/// Largest trap inside the places marked `true`: every transition taking a
/// token from the trap also puts one back into it.
fn max_trap(net: &Net, mut inside: Vec<bool>) -> Vec<bool> {
    loop {
        let mut changed = false;
        for p in 0..inside.len() {
            if inside[p] && (0..net.len()).any(|t| net.consumes(t, p) && !net.produces_into(t, &inside)) {
                inside[p] = false;
                changed = true;
            }
        }
        if !changed {
            return inside;
        }
    }
}

fn reach_exact(
    mp: &Mbrs,
    x: Var,
    target: Vec<u32>,
    k: KSet,
    budget: Budget,
) -> Result<Verdict<Firing>, EngineError> {
    let net = Net::new(mp, |r| mp.cmp(r).is_subset(k))?;
    let m0 = marking(net.nvars, &Term::var(x)).expect("variable");
    let g = marking_graph(&net, m0.clone(), budget.nodes);
    let step = touch_step(mp, &net);
    let (_, parent, hit) = product(&g, (KSet::EMPTY, false), step, |v, (t, ne)| ne && t == k && g.nodes[v] == target);
    if let Some(h) = hit {
        return Ok(Verdict::Yes(edge_path(&parent, h).into_iter().map(|e| net.rules[g.edges[e].1]).collect()));
    }
    if g.closed {
        return Ok(Verdict::No);
    }
    let trap = max_trap(&net, target.iter().map(|&c| c == 0).collect());
    if m0.iter().zip(&trap).any(|(&c, &in_trap)| c > 0 && in_trap) {
        return Ok(Verdict::No);
    }
    Ok(Verdict::Unknown(format!("marking graph exceeds {} nodes", budget.nodes)))
}

/// `X -σ-> ε` with finite maximal exactly `k`.
pub fn par_reach_empty(mp: &Mbrs, x: Var, k: KSet, budget: Budget) -> Result<Verdict<Firing>, EngineError> {
    if par_finite_accepting(mp, x, k, budget)?.is_no() {
        return Ok(Verdict::No);
    }
    reach_exact(mp, x, vec![0; mp.vars().len()], k, budget)
}

/// `X -σ-> Y` (the bare variable) with `|σ| > 0` and finite maximal exactly `k`.
pub fn par_reach_var(mp: &Mbrs, x: Var, y: Var, k: KSet, budget: Budget) -> Result<Verdict<Firing>, EngineError> {
    if par_reach_cover(mp, x, y, k, budget)?.is_no() {
        return Ok(Verdict::No);
    }
    let mut target = vec![0; mp.vars().len()];
    target[y.index()] = 1;
    reach_exact(mp, x, target, k, budget)
}

// ---------------------------------------------------------------------------
// Mixed finite/infinite acceptance over two component assignments

/// Either a finite derivation using a rule outside `rstar`, or a stem followed
/// by a self-covering cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MixedWitness {
    Finite(Firing),
    Infinite { stem: Firing, cycle: Firing },
}

/// `X -σ->` with `maximal1(σ) = K`, `inf_maximal1(σ) ∪ maximal2(σ) = Kω`, and
/// `σ` infinite or using a rule outside `rstar`.
pub fn par_infinite_mixed(
    mp1: &Mbrs,
    mp2: &Mbrs,
    x: Var,
    k: KSet,
    kw: KSet,
    rstar: &BTreeSet<RuleIdx>,
    budget: Budget,
) -> Result<Verdict<MixedWitness>, EngineError> {
    if mp1.len() != mp2.len() || (0..mp1.len()).any(|r| mp1.rule(r) != mp2.rule(r)) {
        return Err(EngineError::SupportMismatch);
    }
    let net = Net::new(mp1, |r| mp1.cmp(r).is_subset(k) && mp2.cmp(r).is_subset(kw))?;
    if !kw.is_subset(k) {
        return Ok(Verdict::No);
    }
    let m0 = marking(net.nvars, &Term::var(x)).expect("variable");
    let c1 = |t: usize| mp1.cmp(net.rules[t]);
    let c2 = |t: usize| mp2.cmp(net.rules[t]);
    let g = marking_graph(&net, m0.clone(), budget.nodes);
    let ids = |ts: Vec<usize>| -> Firing { ts.into_iter().map(|t| net.rules[t]).collect() };

    // finite: touched pair reaches (K, Kω) after a rule outside rstar
    type Fin = (KSet, KSet, bool);
    let fstep = |(a, b, h): Fin, t: usize| (a.union(c1(t)), b.union(c2(t)), h || !rstar.contains(&net.rules[t]));
    let fgoal = |_: &[u32], c: Fin| c == (k, kw, true);
    if g.closed {
        let (_, parent, hit) = product(&g, (KSet::EMPTY, KSet::EMPTY, false), fstep, |_, c| c == (k, kw, true));
        if let Some(h) = hit {
            let word = edge_path(&parent, h).into_iter().map(|e| g.edges[e].1).collect();
            return Ok(Verdict::Yes(MixedWitness::Finite(ids(word))));
        }
        return Ok(match closed_cycle(&g, k, kw, &c1, &c2) {
            Some((stem, cycle)) => Verdict::Yes(MixedWitness::Infinite { stem: ids(stem), cycle: ids(cycle) }),
            None => Verdict::No,
        });
    }
    let km = karp_miller(&net, m0.clone(), (KSet::EMPTY, KSet::EMPTY, false), fstep, fgoal, budget.nodes);
    let finite = match km.goal {
        Some(n) => match concretize(&km, &net, fstep, fgoal, n) {
            Some(word) => return Ok(Verdict::Yes(MixedWitness::Finite(ids(word)))),
            None => Some("finite witness could not be concretized".to_string()),
        },
        None if km.complete => None,
        None => Some(format!("Karp-Miller tree exceeds {} nodes", budget.nodes)),
    };
    match self_covering(&net, m0, k, kw, &c1, &c2, budget.nodes) {
        Search::Found((stem, cycle)) => Ok(Verdict::Yes(MixedWitness::Infinite { stem: ids(stem), cycle: ids(cycle) })),
        Search::Exhausted => Ok(Verdict::Unknown(format!("self-covering search exceeds {} nodes", budget.nodes))),
        Search::Done => Ok(match finite {
            Some(why) => Verdict::Unknown(why),
            None => Verdict::No,
        }),
    }
}

/// Lasso on a closed marking graph: for some `I ⊆ Kω`, a cycle inside an SCC
/// of the `cmp1 ⊆ I` edges whose `cmp1` union is exactly `I`.
fn closed_cycle(
    g: &MarkingGraph,
    k: KSet,
    kw: KSet,
    c1: &dyn Fn(usize) -> KSet,
    c2: &dyn Fn(usize) -> KSet,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let pairs: Vec<(usize, usize)> = g.edges.iter().map(|&(s, _, t)| (s, t)).collect();
    let tr = |e: usize| g.edges[e].1;
    let (states, parent, _) = product(g, (KSet::EMPTY, KSet::EMPTY), |(a, b), t| (a.union(c1(t)), b.union(c2(t))), |_, _| false);
    for i in kw.subsets() {
        let keep = |e: usize| c1(tr(e)).is_subset(i);
        let scc = crate::graph::scc_ids(g.nodes.len(), &pairs, keep);
        let internal = |e: usize| keep(e) && scc[pairs[e].0] == scc[pairs[e].1];
        let mut cover: HashMap<usize, (KSet, KSet)> = HashMap::new();
        for e in (0..pairs.len()).filter(|&e| internal(e)) {
            let c = cover.entry(scc[pairs[e].0]).or_default();
            *c = (c.0.union(c1(tr(e))), c.1.union(c2(tr(e))));
        }
        for (s, &(v, (t1, t2))) in states.iter().enumerate() {
            let Some(&(u1, u2)) = cover.get(&scc[v]) else { continue };
            if u1 != i || t1.union(i) != k || i.union(t2).union(u2) != kw {
                continue;
            }
            let in_scc = |e: usize| internal(e) && scc[pairs[e].0] == scc[v];
            let cands: Vec<usize> = (0..pairs.len()).filter(|&e| in_scc(e)).collect();
            let mut required = crate::graph::cover_edges(i, &cands, |e| c1(tr(e)));
            required.extend(crate::graph::cover_edges(kw.minus(i.union(t2)), &cands, |e| c2(tr(e))));
            let walk = crate::graph::closed_walk(&g.out, &pairs, internal, v, &required)?;
            let stem = edge_path(&parent, s).into_iter().map(tr).collect();
            return Some((stem, walk.into_iter().map(tr).collect()));
        }
    }
    None
}

enum Search<R> {
    Found(R),
    Exhausted,
    Done,
}

/// Stem to a marking `m` followed by `β` with `m -β-> m' ≥ m`, where
/// `cmp1(β) = I`, `T1 ∪ I = K` and `I ∪ T2 ∪ cmp2(β) = Kω`.
///
/// Stems range over a Karp-Miller tree. For each tree node a second tree,
/// rooted at the node's ω-marking, looks for `β`; every real witness from a
/// marking the node covers shows up there, so complete trees without a goal
/// refute. A goal found abstractly is made concrete by pumping the stem and
/// searching again from the resulting marking.
fn self_covering(
    net: &Net,
    m0: Vec<u32>,
    k: KSet,
    kw: KSet,
    c1: &dyn Fn(usize) -> KSet,
    c2: &dyn Fn(usize) -> KSet,
    node_budget: usize,
) -> Search<(Vec<usize>, Vec<usize>)> {
    let mut left = node_budget;
    let stem_step = |(a, b): (KSet, KSet), t: usize| (a.union(c1(t)), b.union(c2(t)));
    let c0 = (KSet::EMPTY, KSet::EMPTY);
    let stem = karp_miller(net, m0.clone(), c0, stem_step, |_, _| false, left);
    left = left.saturating_sub(stem.nodes.len());
    let mut exhausted = !stem.complete;
    let mut seen = HashSet::new();
    for (n, node) in stem.nodes.iter().enumerate() {
        if !seen.insert((node.marking.clone(), node.control)) {
            continue;
        }
        let (t1, t2) = node.control;
        for i in kw.subsets() {
            if t1.union(i) != k {
                continue;
            }
            let (sub, orig) = net.restrict(|t| c1(t).is_subset(i));
            let cstep = |(a, b, _): (KSet, KSet, bool), t: usize| (a.union(c1(orig[t])), b.union(c2(orig[t])), true);
            let goal = |start: &[u32]| {
                let start = start.to_vec();
                move |m: &[u32], (u1, u2, ne): (KSet, KSet, bool)| ne && u1 == i && i.union(t2).union(u2) == kw && covers(m, &start)
            };
            let c0 = (KSet::EMPTY, KSet::EMPTY, false);
            let probe = karp_miller(&sub, node.marking.clone(), c0, cstep, goal(&node.marking), left);
            left = left.saturating_sub(probe.nodes.len());
            if probe.goal.is_none() {
                exhausted |= !probe.complete;
                continue;
            }
            for base in (0..9).map(|e| 1usize << e) {
                let Some((word, ms, c)) = pump_fit(&stem, net, stem_step, n, base) else { continue };
                if c != node.control {
                    continue;
                }
                let cyc = karp_miller(&sub, ms.clone(), c0, cstep, goal(&ms), left);
                left = left.saturating_sub(cyc.nodes.len());
                if let Some(g) = cyc.goal {
                    if let Some(w) = concretize(&cyc, &sub, cstep, goal(&ms), g) {
                        return Search::Found((word, w.into_iter().map(|t| orig[t]).collect()));
                    }
                }
            }
            exhausted = true;
        }
    }
    if exhausted {
        Search::Exhausted
    } else {
        Search::Done
    }
}

/// Replays `stem · cycle^pumps` on markings and checks that each cycle round
/// ends covering the marking it started from.
pub fn validate_self_covering(mp: &Mbrs, x: Var, stem: &[RuleIdx], cycle: &[RuleIdx], pumps: usize) -> bool {
    let Ok(net) = Net::new(mp, |_| true) else { return false };
    let local: HashMap<RuleIdx, usize> = net.rules.iter().enumerate().map(|(t, &r)| (r, t)).collect();
    let mut m = marking(net.nvars, &Term::var(x)).expect("variable");
    let run = |m: &mut Vec<u32>, seq: &[RuleIdx]| {
        seq.iter().all(|r| {
            let t = local[r];
            let en = net.enabled(m, t);
            if en {
                *m = net.fire(m, t);
            }
            en
        })
    };
    if cycle.is_empty() || !run(&mut m, stem) {
        return false;
    }
    for _ in 0..pumps {
        let before = m.clone();
        if !run(&mut m, cycle) || !covers(&m, &before) {
            return false;
        }
    }
    true
}
