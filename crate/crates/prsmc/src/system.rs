//! Rewrite systems with accepting components, their transition relation,
//! derivations, and the finite/infinite maximal calculus.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::terms::{Spine, Term, Var, VarTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error("duplicate rule id `{0}`")]
    DuplicateRule(String),
    #[error("rule `{0}` has an empty left-hand side")]
    EmptyLhs(String),
    #[error("unknown rule id `{0}`")]
    UnknownRule(String),
    #[error("component index {0} outside 1..={1}")]
    ComponentRange(usize, usize),
    #[error("interleaving length {0} exceeds bound {1}")]
    BoundExceeded(usize, usize),
    #[error("step {0}: {1}")]
    Replay(usize, String),
    #[error("pivot occurrence not present")]
    PivotMissing,
    #[error("not a single step of the system")]
    NotAStep,
}

pub type RuleIdx = usize;

/// Subset of `{1..n}`; bit `i-1` stands for component `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KSet(pub u64);

impl KSet {
    pub const EMPTY: KSet = KSet(0);

    pub fn full(n: usize) -> KSet {
        if n >= 64 {
            KSet(u64::MAX)
        } else {
            KSet((1u64 << n) - 1)
        }
    }

    pub fn single(i: usize) -> KSet {
        KSet(1 << (i - 1))
    }

    pub fn contains(self, i: usize) -> bool {
        i >= 1 && self.0 >> (i - 1) & 1 == 1
    }

    pub fn with(self, i: usize) -> KSet {
        KSet(self.0 | 1 << (i - 1))
    }

    pub fn union(self, o: KSet) -> KSet {
        KSet(self.0 | o.0)
    }

    pub fn inter(self, o: KSet) -> KSet {
        KSet(self.0 & o.0)
    }

    pub fn minus(self, o: KSet) -> KSet {
        KSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: KSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn max_index(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=64).filter(move |&i| self.contains(i))
    }

    /// All subsets, by increasing cardinality then increasing bit pattern.
    pub fn subsets(self) -> Vec<KSet> {
        let mut v = Vec::with_capacity(1 << self.len());
        let mut s = 0u64;
        loop {
            v.push(KSet(s));
            if s == self.0 {
                break;
            }
            s = (s.wrapping_sub(self.0)) & self.0;
        }
        v.sort_by_key(|k| (k.len(), k.0));
        v
    }
}

impl FromIterator<usize> for KSet {
    fn from_iter<I: IntoIterator<Item = usize>>(it: I) -> Self {
        it.into_iter().fold(KSet::EMPTY, KSet::with)
    }
}

impl fmt::Display for KSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// `⊕` of an eventually periodic succession `prefix · period^ω`:
/// the indices occurring in infinitely many members.
pub fn oplus(_prefix: &[KSet], period: &[KSet]) -> KSet {
    period.iter().fold(KSet::EMPTY, |a, &k| a.union(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Action(u32),
    KSet(KSet),
    KPair(KSet, KSet),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symbols {
    pub vars: VarTable,
    pub actions: Vec<String>,
}

impl Symbols {
    pub fn new(vars: VarTable, mut actions: Vec<String>) -> Self {
        actions.sort();
        actions.dedup();
        Symbols { vars, actions }
    }

    pub fn action(&self, name: &str) -> Option<u32> {
        self.actions.iter().position(|a| a == name).map(|i| i as u32)
    }

    pub fn label(&self, l: &Label) -> String {
        match l {
            Label::Action(a) => self.actions[*a as usize].clone(),
            Label::KSet(k) => k.to_string(),
            Label::KPair(k, kw) => format!("{k}/{kw}"),
        }
    }

    pub fn term(&self, t: &Term) -> String {
        t.display(&self.vars).to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub id: String,
    pub lhs: Term,
    pub label: Label,
    pub rhs: Term,
}

/// Operational shape of a rule, as used by the engines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    /// No sequential composition on either side.
    Par,
    /// `x -> y.(z)`
    Push { x: Var, y: Var, z: Var },
    /// `y.(w) -> z`
    Pop { y: Var, w: Var, z: Var },
    General,
}

impl Rule {
    pub fn is_par(&self) -> bool {
        self.lhs.is_parallel() && self.rhs.is_parallel()
    }

    pub fn is_seq(&self) -> bool {
        !matches!(self.shape(), Shape::General) && self.seq_shape_ok()
    }

    fn seq_shape_ok(&self) -> bool {
        match self.shape() {
            Shape::Par => self.lhs.as_var().is_some() && (self.rhs.is_eps() || self.rhs.as_var().is_some()),
            _ => true,
        }
    }

    pub fn shape(&self) -> Shape {
        if self.is_par() {
            return Shape::Par;
        }
        if let (Some(x), Some(s)) = (self.lhs.as_var(), self.rhs.single_spine()) {
            if let Some(z) = s.tail.as_var() {
                return Shape::Push { x, y: s.head, z };
            }
        }
        if let (Some(s), Some(z)) = (self.lhs.single_spine(), self.rhs.as_var()) {
            if let Some(w) = s.tail.as_var() {
                return Shape::Pop { y: s.head, w, z };
            }
        }
        Shape::General
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemClass {
    Parallel,
    Sequential,
    NormalForm,
    General,
}

/// A rewrite system with `n` accepting components.
#[derive(Clone, Debug)]
pub struct Mbrs {
    pub syms: Arc<Symbols>,
    rules: Vec<Rule>,
    shapes: Vec<Shape>,
    cmps: Vec<KSet>,
    n: usize,
    index: HashMap<String, RuleIdx>,
}

impl Mbrs {
    /// `rules` pairs each rule with its component set `cmp(r)`.
    pub fn new(syms: Arc<Symbols>, n: usize, rules: Vec<(Rule, KSet)>) -> Result<Self, SystemError> {
        let mut index = HashMap::new();
        let mut rs = Vec::with_capacity(rules.len());
        let mut cmps = Vec::with_capacity(rules.len());
        for (i, (r, k)) in rules.into_iter().enumerate() {
            if r.lhs.is_eps() {
                return Err(SystemError::EmptyLhs(r.id));
            }
            if k.max_index() > n {
                return Err(SystemError::ComponentRange(k.max_index(), n));
            }
            if index.insert(r.id.clone(), i).is_some() {
                return Err(SystemError::DuplicateRule(r.id));
            }
            rs.push(r);
            cmps.push(k);
        }
        let shapes = rs.iter().map(Rule::shape).collect();
        Ok(Mbrs { syms, rules: rs, shapes, cmps, n, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, i: RuleIdx) -> &Rule {
        &self.rules[i]
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn shape(&self, i: RuleIdx) -> &Shape {
        &self.shapes[i]
    }

    pub fn cmp(&self, i: RuleIdx) -> KSet {
        self.cmps[i]
    }

    pub fn cmps(&self) -> &[KSet] {
        &self.cmps
    }

    pub fn lookup(&self, id: &str) -> Option<RuleIdx> {
        self.index.get(id).copied()
    }

    pub fn resolve(&self, ids: &[&str]) -> Result<Vec<RuleIdx>, SystemError> {
        ids.iter()
            .map(|id| self.lookup(id).ok_or_else(|| SystemError::UnknownRule(id.to_string())))
            .collect()
    }

    pub fn vars(&self) -> &VarTable {
        &self.syms.vars
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.syms.vars.lookup(name)
    }

    /// `Re_i` as a set of rule indices (1-based `i`).
    pub fn component(&self, i: usize) -> BTreeSet<RuleIdx> {
        (0..self.rules.len()).filter(|&r| self.cmps[r].contains(i)).collect()
    }

    /// Same rules, fresh component assignment.
    pub fn with_components(&self, n: usize, cmps: Vec<KSet>) -> Result<Self, SystemError> {
        let rules = self.rules.iter().cloned().zip(cmps).collect();
        Mbrs::new(self.syms.clone(), n, rules)
    }

    /// The rules accepted by `keep`, with their components, in order.
    pub fn sub_system(&self, keep: impl Fn(RuleIdx) -> bool) -> Mbrs {
        let rules = (0..self.len()).filter(|&r| keep(r)).map(|r| (self.rules[r].clone(), self.cmps[r])).collect();
        Mbrs::new(self.syms.clone(), self.n, rules).expect("subset of a valid system")
    }

    pub fn classify(&self) -> SystemClass {
        let par = self.rules.iter().all(Rule::is_par);
        let seq = self.rules.iter().all(Rule::is_seq);
        let nf = self.rules.iter().all(|r| r.is_par() || r.is_seq());
        if par {
            SystemClass::Parallel
        } else if seq {
            SystemClass::Sequential
        } else if nf {
            SystemClass::NormalForm
        } else {
            SystemClass::General
        }
    }

    pub fn is_normal_form(&self) -> bool {
        self.classify() != SystemClass::General
    }

    pub fn is_parallel(&self) -> bool {
        self.classify() == SystemClass::Parallel
    }

    /// Every `(r, t')` with `t -r-> t'`.
    pub fn successors(&self, t: &Term) -> BTreeSet<(RuleIdx, Term)> {
        let mut out = BTreeSet::new();
        self.succ_into(t, &mut out, None);
        out
    }

    /// Every `t'` with `t -r-> t'`.
    pub fn apply(&self, r: RuleIdx, t: &Term) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.succ_into(t, &mut out, Some(r));
        out.into_iter().map(|(_, t)| t).collect()
    }

    fn succ_into(&self, t: &Term, out: &mut BTreeSet<(RuleIdx, Term)>, only: Option<RuleIdx>) {
        let range = match only {
            Some(r) => r..r + 1,
            None => 0..self.rules.len(),
        };
        for i in range {
            let r = &self.rules[i];
            if let Some(rest) = t.minus(&r.lhs) {
                out.insert((i, rest.par(&r.rhs)));
            }
        }
        for (s, _) in t.spines() {
            if s.is_bare() {
                continue;
            }
            let mut inner = BTreeSet::new();
            self.succ_into(&s.tail, &mut inner, only);
            if inner.is_empty() {
                continue;
            }
            let rest = t.remove_one(s).expect("spine present");
            for (i, s2) in inner {
                out.insert((i, rest.par(&Term::seq(s.head, s2))));
            }
        }
    }

    /// Levels at which `r` rewrites `t` into `t2`.
    pub fn application_levels(&self, t: &Term, r: RuleIdx, t2: &Term) -> Result<BTreeSet<usize>, SystemError> {
        let levels = self.levels(t, r, t2);
        if levels.is_empty() {
            Err(SystemError::NotAStep)
        } else {
            Ok(levels)
        }
    }

    fn levels(&self, t: &Term, r: RuleIdx, t2: &Term) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let rule = &self.rules[r];
        if let Some(rest) = t.minus(&rule.lhs) {
            if &rest.par(&rule.rhs) == t2 {
                out.insert(0);
            }
        }
        for (s, _) in t.spines() {
            if s.is_bare() {
                continue;
            }
            let rest = t.remove_one(s).expect("spine present");
            for s2 in self.apply(r, &s.tail) {
                if &rest.par(&Term::seq(s.head, s2.clone())) == t2 {
                    out.extend(self.levels(&s.tail, r, &s2).into_iter().map(|k| k + 1));
                }
            }
        }
        out
    }

    pub fn maximal(&self, sigma: &[RuleIdx]) -> KSet {
        sigma.iter().fold(KSet::EMPTY, |a, &r| a.union(self.cmps[r]))
    }

    pub fn inf_maximal(&self, l: &LassoSequence) -> KSet {
        self.maximal(&l.cycle)
    }

    pub fn lasso_maximal(&self, l: &LassoSequence) -> KSet {
        self.maximal(&l.stem).union(self.maximal(&l.cycle))
    }

    pub fn rule_ids(&self, sigma: &[RuleIdx]) -> Vec<String> {
        sigma.iter().map(|&r| self.rules[r].id.clone()).collect()
    }
}

/// A finite derivation with every intermediate term recorded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub start: Term,
    pub steps: Vec<(RuleIdx, Term)>,
}

impl Derivation {
    pub fn null(start: Term) -> Self {
        Derivation { start, steps: Vec::new() }
    }

    pub fn end(&self) -> &Term {
        self.steps.last().map(|(_, t)| t).unwrap_or(&self.start)
    }

    pub fn term_at(&self, k: usize) -> &Term {
        if k == 0 {
            &self.start
        } else {
            &self.steps[k - 1].1
        }
    }

    pub fn rules(&self) -> Vec<RuleIdx> {
        self.steps.iter().map(|(r, _)| *r).collect()
    }

    pub fn replay(&self, m: &Mbrs) -> Result<(), SystemError> {
        let mut cur = &self.start;
        for (k, (r, next)) in self.steps.iter().enumerate() {
            if *r >= m.len() {
                return Err(SystemError::Replay(k, "rule index out of range".into()));
            }
            if !m.apply(*r, cur).contains(next) {
                return Err(SystemError::Replay(k, format!("rule {} does not yield the recorded term", m.rule(*r).id)));
            }
            cur = next;
        }
        Ok(())
    }
}

/// `stem · cycle^ω` when `cycle` is nonempty, else the finite `stem`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LassoSequence {
    pub stem: Vec<RuleIdx>,
    pub cycle: Vec<RuleIdx>,
}

impl LassoSequence {
    pub fn is_infinite(&self) -> bool {
        !self.cycle.is_empty()
    }
}

/// A concrete stem derivation followed by a rule cycle that is applicable
/// again and again from the stem's end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Derivation,
    pub cycle: Vec<RuleIdx>,
}

impl Lasso {
    pub fn sequence(&self) -> LassoSequence {
        LassoSequence { stem: self.stem.rules(), cycle: self.cycle.clone() }
    }

    /// Replays the stem exactly and the cycle `pumps` times.
    pub fn validate(&self, m: &Mbrs, pumps: usize) -> Result<(), SystemError> {
        self.stem.replay(m)?;
        if self.cycle.is_empty() {
            return Err(SystemError::Replay(self.stem.steps.len(), "empty cycle".into()));
        }
        let tail = LassoSequence { stem: Vec::new(), cycle: self.cycle.clone() };
        replay_rules(m, self.stem.end(), &tail, pumps, 256)
    }
}

/// Checks that `stem · cycle^pumps` is applicable from `start`, tracking the
/// set of reachable terms (at most `cap` kept per step).
pub fn replay_rules(m: &Mbrs, start: &Term, lasso: &LassoSequence, pumps: usize, cap: usize) -> Result<(), SystemError> {
    let mut frontier = BTreeSet::from([start.clone()]);
    let seq = lasso.stem.iter().chain((0..pumps).flat_map(|_| lasso.cycle.iter()));
    for (k, &r) in seq.enumerate() {
        let mut next = BTreeSet::new();
        for t in &frontier {
            next.extend(m.apply(r, t));
            if next.len() >= cap {
                break;
            }
        }
        if next.is_empty() {
            return Err(SystemError::Replay(k, format!("rule {} not applicable", m.rule(r).id)));
        }
        frontier = next;
    }
    Ok(())
}

/// Occurrence of a spine `head.(tail)` in the term reached after `step` steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pivot {
    pub step: usize,
    pub spine: Spine,
}

/// The subderivation from the pivot's tail, following that occurrence.
pub fn subderivation(m: &Mbrs, d: &Derivation, pivot: &Pivot) -> Result<Derivation, SystemError> {
    if pivot.step > d.steps.len() || d.term_at(pivot.step).count(&pivot.spine) == 0 {
        return Err(SystemError::PivotMissing);
    }
    let head = pivot.spine.head;
    let mut s = pivot.spine.tail.clone();
    let mut out = Derivation::null(s.clone());
    let mut t = d.term_at(pivot.step).clone();
    for (k, (r, t2)) in d.steps.iter().enumerate().skip(pivot.step) {
        if s.is_eps() {
            break;
        }
        let occ = Term::seq(head, s.clone());
        let rest = t.minus(&occ).expect("tracked occurrence present");
        // the step rewrites elsewhere
        if let Some(rest2) = t2.minus(&occ) {
            if m.apply(*r, &rest).contains(&rest2) {
                t = t2.clone();
                continue;
            }
        }
        // the step rewrites inside the tracked tail
        let inner = m.apply(*r, &s).into_iter().find(|s2| rest.par(&Term::seq(head, s2.clone())) == *t2);
        if let Some(s2) = inner {
            out.steps.push((*r, s2.clone()));
            s = s2;
            t = t2.clone();
            continue;
        }
        // the step consumes the tracked occurrence
        if let Some(rest2) = t2.minus(&m.rule(*r).rhs) {
            if m.rule(*r).lhs == occ && rest2 == rest {
                break;
            }
        }
        return Err(SystemError::Replay(k, "step does not act on the tracked occurrence".into()));
    }
    Ok(out)
}

/// All shuffles of `a` and `b`; errors when `|a|+|b| > bound`.
pub fn interleavings(a: &[RuleIdx], b: &[RuleIdx], bound: usize) -> Result<std::vec::IntoIter<Vec<RuleIdx>>, SystemError> {
    let total = a.len() + b.len();
    if total > bound {
        return Err(SystemError::BoundExceeded(total, bound));
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(total);
    shuffle(a, b, &mut cur, &mut out);
    Ok(out.into_iter())
}

fn shuffle(a: &[RuleIdx], b: &[RuleIdx], cur: &mut Vec<RuleIdx>, out: &mut Vec<Vec<RuleIdx>>) {
    if a.is_empty() || b.is_empty() {
        let mut v = cur.clone();
        v.extend_from_slice(a);
        v.extend_from_slice(b);
        out.push(v);
        return;
    }
    cur.push(a[0]);
    shuffle(&a[1..], b, cur, out);
    cur.pop();
    cur.push(b[0]);
    shuffle(a, &b[1..], cur, out);
    cur.pop();
}
