//! Saturation of a normal-form system into the parallel and sequential
//! systems used by the acceptance procedures.
//!
//! Every rule added to a constructed system carries a [`Recipe`] naming the
//! original rules and the inner derivation that justify it. Inner firings
//! refer to rules of the same constructed system that were added earlier, so
//! recipes can be unfolded into derivations of the original system.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::par_engine::{par_finite_accepting, par_reach_cover, par_reach_empty, par_reach_var, EngineError, Firing};
use crate::system::{KSet, Label, Mbrs, Rule, RuleIdx, Shape, Symbols};
use crate::terms::{Term, Var};
use crate::verdict::{Budget, Verdict};
use crate::witness::InfCert;

/// Why a rule is present in a constructed system.
#[derive(Clone, Debug)]
pub enum Recipe {
    /// Rule of the original system with this index.
    Original(RuleIdx),
    /// `X -> Zhat_F`: push, then `inner` from the pushed variable, abandoned.
    Abandon { push: RuleIdx, inner: Firing },
    /// `X -> Y`: push, then `inner` empties the pushed variable.
    Return { push: RuleIdx, inner: Firing },
    /// `X -> W'`: push, `inner` turns the pushed variable into `W`, then pop.
    Pop { push: RuleIdx, pop: RuleIdx, inner: Firing },
    /// `X -> Zhat_inf`: push, then the infinite derivation certified by `cert`.
    Infinite { push: RuleIdx, cert: Arc<InfCert> },
    /// Sequential rename `X -> Y` given by a covering firing of `par`.
    Cover { par: Arc<Constructed>, firing: Firing },
}

#[derive(Clone, Debug)]
pub struct Constructed {
    pub mbrs: Mbrs,
    pub recipes: Vec<Recipe>,
    /// 0 for rules copied in, then the position of each addition.
    pub generation: Vec<usize>,
    /// Push left-hand variables for which some saturation query was inconclusive.
    pub unknown: BTreeSet<Var>,
}

impl Constructed {
    pub fn is_complete(&self) -> bool {
        self.unknown.is_empty()
    }

    /// Indices of rules that were added by the construction.
    pub fn added(&self) -> impl Iterator<Item = RuleIdx> + '_ {
        (0..self.recipes.len()).filter(|&r| self.generation[r] > 0)
    }
}

struct Builder {
    syms: Arc<Symbols>,
    n: usize,
    rules: Vec<(Rule, KSet)>,
    recipes: Vec<Recipe>,
    generation: Vec<usize>,
    keys: HashSet<(Var, Label, Var)>,
    ids: HashSet<String>,
    added: usize,
    cache: Option<Mbrs>,
    unknown: BTreeSet<Var>,
}

impl Builder {
    fn new(m: &Mbrs) -> Builder {
        Builder {
            syms: m.syms.clone(),
            n: m.n(),
            rules: Vec::new(),
            recipes: Vec::new(),
            generation: Vec::new(),
            keys: HashSet::new(),
            ids: m.rules().iter().map(|r| r.id.clone()).collect(),
            added: 0,
            cache: None,
            unknown: BTreeSet::new(),
        }
    }

    fn from_constructed(c: &Constructed, m: &Mbrs) -> Builder {
        let mut b = Builder::new(m);
        for (r, rule) in c.mbrs.rules().iter().enumerate() {
            b.ids.insert(rule.id.clone());
            if let (Some(x), Some(y)) = (rule.lhs.as_var(), rule.rhs.as_var()) {
                b.keys.insert((x, rule.label, y));
            }
            b.rules.push((rule.clone(), c.mbrs.cmp(r)));
        }
        b.recipes = c.recipes.clone();
        b.generation = c.generation.clone();
        b.added = c.generation.iter().copied().max().unwrap_or(0);
        b
    }

    fn copy(&mut self, m: &Mbrs, r: RuleIdx) {
        self.rules.push((m.rule(r).clone(), m.cmp(r)));
        self.recipes.push(Recipe::Original(r));
        self.generation.push(0);
        self.cache = None;
    }

    fn has(&self, x: Var, label: Label, y: Var) -> bool {
        self.keys.contains(&(x, label, y))
    }

    fn add(&mut self, x: Var, label: Label, y: Var, cmp: KSet, recipe: Recipe) {
        let id = (self.added + 1..).map(|k| format!("c{k}")).find(|id| !self.ids.contains(id)).expect("fresh id");
        self.ids.insert(id.clone());
        self.keys.insert((x, label, y));
        self.added += 1;
        self.rules.push((Rule { id, lhs: Term::var(x), label, rhs: Term::var(y) }, cmp));
        self.recipes.push(recipe);
        self.generation.push(self.added);
        self.cache = None;
    }

    fn mbrs(&mut self) -> &Mbrs {
        let (syms, n, rules) = (&self.syms, self.n, &self.rules);
        self.cache.get_or_insert_with(|| Mbrs::new(syms.clone(), n, rules.clone()).expect("constructed rules are well formed"))
    }

    fn finish(mut self) -> Constructed {
        let mbrs = self.mbrs().clone();
        Constructed { mbrs, recipes: self.recipes, generation: self.generation, unknown: self.unknown }
    }
}

fn require_normal_form(m: &Mbrs) -> Result<(), EngineError> {
    match (0..m.len()).find(|&r| matches!(m.shape(r), Shape::General)) {
        Some(r) => Err(EngineError::UnsupportedRule(m.rule(r).id.clone())),
        None => Ok(()),
    }
}

fn pushes(m: &Mbrs, k: KSet) -> Vec<(RuleIdx, Var, Var, Var)> {
    (0..m.len())
        .filter_map(|r| match *m.shape(r) {
            Shape::Push { x, y, z } if m.cmp(r).is_subset(k) => Some((r, x, y, z)),
            _ => None,
        })
        .collect()
}

/// The parallel system `M^K_PAR`: the parallel rules of `m` saturated with
/// summaries of pushes that are abandoned, returned from, or popped.
pub fn build_parallel_mbrs(m: &Mbrs, k: KSet, budget: Budget) -> Result<Constructed, EngineError> {
    require_normal_form(m)?;
    let mut b = Builder::new(m);
    for r in 0..m.len() {
        if *m.shape(r) == Shape::Par {
            b.copy(m, r);
        }
    }
    saturate(m, b, k, budget)
}

/// Runs the saturation again on an output of [`build_parallel_mbrs`]; a
/// closed construction comes back with no additions.
pub fn resaturate(m: &Mbrs, c: &Constructed, k: KSet, budget: Budget) -> Result<Constructed, EngineError> {
    require_normal_form(m)?;
    saturate(m, Builder::from_constructed(c, m), k, budget)
}

fn saturate(m: &Mbrs, mut b: Builder, k: KSet, budget: Budget) -> Result<Constructed, EngineError> {
    let pushes = pushes(m, k);
    let pops: Vec<(RuleIdx, Var, Var, Var)> = (0..m.len())
        .filter_map(|r| match *m.shape(r) {
            Shape::Pop { y, w, z } if m.cmp(r).is_subset(k) => Some((r, y, w, z)),
            _ => None,
        })
        .collect();
    loop {
        let before = b.added;
        b.unknown.clear();
        for &(push, x, y, z) in &pushes {
            let k1 = m.cmp(push);
            for k2 in k.subsets() {
                let label = Label::KSet(k1.union(k2));
                if !b.has(x, label, Var::ZHAT_F) {
                    match par_finite_accepting(b.mbrs(), z, k2, budget)? {
                        Verdict::Yes(inner) => b.add(x, label, Var::ZHAT_F, k1.union(k2), Recipe::Abandon { push, inner }),
                        Verdict::Unknown(_) => drop(b.unknown.insert(x)),
                        Verdict::No => {}
                    }
                }
                if !b.has(x, label, y) {
                    match par_reach_empty(b.mbrs(), z, k2, budget)? {
                        Verdict::Yes(inner) => b.add(x, label, y, k1.union(k2), Recipe::Return { push, inner }),
                        Verdict::Unknown(_) => drop(b.unknown.insert(x)),
                        Verdict::No => {}
                    }
                }
            }
            for &(pop, _, w, w2) in pops.iter().filter(|p| p.1 == y) {
                let base = k1.union(m.cmp(pop));
                for k3 in k.subsets() {
                    let kk = base.union(k3);
                    if b.has(x, Label::KSet(kk), w2) {
                        continue;
                    }
                    let v = if z == w && k3.is_empty() {
                        Verdict::Yes(Vec::new())
                    } else {
                        par_reach_var(b.mbrs(), z, w, k3, budget)?
                    };
                    match v {
                        Verdict::Yes(inner) => b.add(x, Label::KSet(kk), w2, kk, Recipe::Pop { push, pop, inner }),
                        Verdict::Unknown(_) => drop(b.unknown.insert(x)),
                        Verdict::No => {}
                    }
                }
            }
        }
        if b.added == before {
            break;
        }
    }
    Ok(b.finish())
}

/// Answers the infinite acceptance problem for a strictly smaller target.
pub type InnerDecider<'a> = dyn FnMut(Var, KSet, KSet) -> Result<Verdict<Arc<InfCert>>, EngineError> + 'a;

/// `M^{K,Kω}_PAR` with its second component assignment: `mk` plus rules
/// `X -> Zhat_inf` for pushes whose pushed variable has an infinite derivation
/// with a smaller target. Copied rules get the empty second component set.
pub fn build_par_omega(
    m: &Mbrs,
    mk: &Constructed,
    k: KSet,
    kw: KSet,
    inner: &mut InnerDecider<'_>,
) -> Result<(Constructed, Mbrs), EngineError> {
    let mut b = Builder::from_constructed(mk, m);
    let mut second = vec![KSet::EMPTY; mk.mbrs.len()];
    let size = k.len() + kw.len();
    for (push, x, _, z) in pushes(m, k) {
        for k1 in k.subsets() {
            for k1w in k1.inter(kw).subsets() {
                if k1.len() + k1w.len() >= size {
                    continue;
                }
                let kbar = k1.union(m.cmp(push));
                let label = Label::KPair(kbar, k1w);
                if b.has(x, label, Var::ZHAT_INF) {
                    continue;
                }
                match inner(z, k1, k1w)? {
                    Verdict::Yes(cert) => {
                        b.add(x, label, Var::ZHAT_INF, kbar, Recipe::Infinite { push, cert });
                        second.push(k1w);
                    }
                    Verdict::Unknown(_) => drop(b.unknown.insert(x)),
                    Verdict::No => {}
                }
            }
        }
    }
    let c = b.finish();
    let minf = c.mbrs.with_components(c.mbrs.n(), second).expect("same rule set");
    Ok((c, minf))
}

/// `M^K_SEQ`: the pushes of `m` plus renames `X -> Y` whenever `mk` covers
/// `Y` from `X` by a nonempty firing.
pub fn build_seq_mbrs(m: &Mbrs, mk: &Arc<Constructed>, k: KSet, budget: Budget) -> Result<Constructed, EngineError> {
    require_normal_form(m)?;
    let mut b = Builder::new(m);
    for r in 0..m.len() {
        if matches!(m.shape(r), Shape::Push { .. }) {
            b.copy(m, r);
        }
    }
    let vars: Vec<Var> = m.vars().user_vars().collect();
    for &x in &vars {
        for &y in &vars {
            for kk in k.subsets() {
                match par_reach_cover(&mk.mbrs, x, y, kk, budget)? {
                    Verdict::Yes(firing) => b.add(x, Label::KSet(kk), y, kk, Recipe::Cover { par: mk.clone(), firing }),
                    Verdict::Unknown(_) => drop(b.unknown.insert(x)),
                    Verdict::No => {}
                }
            }
        }
    }
    Ok(b.finish())
}

/// One comment per rule describing its recipe, for dumps.
pub fn recipe_notes(c: &Constructed, m: &Mbrs) -> BTreeMap<usize, String> {
    let ids = |sys: &Mbrs, f: &[RuleIdx]| -> String {
        if f.is_empty() {
            "null".to_string()
        } else {
            sys.rule_ids(f).join(" ")
        }
    };
    let mut notes = BTreeMap::new();
    for (r, recipe) in c.recipes.iter().enumerate() {
        let g = c.generation[r];
        let mut s = String::new();
        match recipe {
            Recipe::Original(o) => {
                let _ = write!(s, "original {}", m.rule(*o).id);
            }
            Recipe::Abandon { push, inner } => {
                let _ = write!(s, "gen {g}: {} then [{}] abandoned", m.rule(*push).id, ids(&c.mbrs, inner));
            }
            Recipe::Return { push, inner } => {
                let _ = write!(s, "gen {g}: {} then [{}] to eps", m.rule(*push).id, ids(&c.mbrs, inner));
            }
            Recipe::Pop { push, pop, inner } => {
                let _ = write!(s, "gen {g}: {} then [{}] then {}", m.rule(*push).id, ids(&c.mbrs, inner), m.rule(*pop).id);
            }
            Recipe::Infinite { push, cert } => {
                let _ = write!(s, "gen {g}: {} then infinite run with target {}/{}", m.rule(*push).id, cert.k, cert.kw);
            }
            Recipe::Cover { par, firing } => {
                let _ = write!(s, "gen {g}: covered by [{}]", ids(&par.mbrs, firing));
            }
        }
        notes.insert(r, s);
    }
    notes
}
