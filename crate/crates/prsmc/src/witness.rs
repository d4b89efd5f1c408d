//! Certificates for infinite acceptance and their unfolding into derivations
//! of the original system.
//!
//! The unfolder keeps the concrete term as a tree of contexts. A context is
//! the parallel tail of one spine `head.(…)`, split into bare variable tokens
//! and nested contexts; the root is the top-level parallel term. Bare tokens
//! of one variable inside one context are interchangeable, so a firing may
//! consume any of them.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::construct::{Constructed, Recipe};
use crate::par_engine::MixedWitness;
use crate::system::{Derivation, KSet, Lasso, Mbrs, RuleIdx, Shape, SystemError};
use crate::terms::{Spine, Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("witness does not unfold: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Replay(#[from] SystemError),
}

fn mismatch<T>(msg: impl Into<String>) -> Result<T, WitnessError> {
    Err(WitnessError::Mismatch(msg.into()))
}

/// Evidence for an infinite derivation from `start` with finite maximal `k`
/// and infinite maximal `kw`.
#[derive(Clone, Debug)]
pub struct InfCert {
    pub start: Var,
    pub k: KSet,
    pub kw: KSet,
    pub body: CertBody,
}

#[derive(Clone, Debug)]
pub enum CertBody {
    /// A lasso of the sequential construction.
    Seq { seq: Arc<Constructed>, stem: Vec<RuleIdx>, cycle: Vec<RuleIdx> },
    /// A derivation of the sequential construction leaving `via` innermost,
    /// then a mixed witness of the parallel construction from `via`.
    Mixed { seq: Arc<Constructed>, prefix: Vec<RuleIdx>, via: Var, par: Arc<Constructed>, witness: MixedWitness },
}

#[derive(Clone, Debug)]
struct Ctx {
    head: Var,
    parent: usize,
    tokens: BTreeMap<Var, u32>,
    kids: BTreeSet<usize>,
}

/// Builds a derivation of the original system step by step.
pub struct Unfolder<'a> {
    m: &'a Mbrs,
    ctxs: Vec<Ctx>,
    pub derivation: Derivation,
}

/// An infinite derivation in progress: `round` extends it by one period.
enum Runner {
    Seq { cert: Arc<InfCert>, ctx: usize, var: Var },
    Mixed { cert: Arc<InfCert>, ctx: usize, pending: Vec<Runner> },
}

impl<'a> Unfolder<'a> {
    pub fn new(m: &'a Mbrs, start: &Term) -> Result<Self, WitnessError> {
        let mut root = Ctx { head: Var(0), parent: 0, tokens: BTreeMap::new(), kids: BTreeSet::new() };
        for (s, n) in start.spines() {
            if !s.is_bare() || s.head.kind() != crate::terms::VarKind::User {
                return mismatch("start term must be a parallel term over user variables");
            }
            *root.tokens.entry(s.head).or_default() += n;
        }
        Ok(Unfolder { m, ctxs: vec![root], derivation: Derivation::null(start.clone()) })
    }

    fn term_of(&self, c: usize) -> Term {
        let ctx = &self.ctxs[c];
        let bare = ctx.tokens.iter().flat_map(|(&v, &n)| (0..n).map(move |_| Spine::bare(v)));
        let nested = ctx.kids.iter().map(|&k| Spine::new(self.ctxs[k].head, self.term_of(k)));
        Term::from_spines(bare.chain(nested))
    }

    fn record(&mut self, r: RuleIdx) {
        let t = self.term_of(0);
        self.derivation.steps.push((r, t));
    }

    fn take(&mut self, c: usize, v: Var) -> Result<(), WitnessError> {
        let name = self.m.vars().name(v).to_string();
        match self.ctxs[c].tokens.get_mut(&v) {
            Some(n) if *n > 0 => {
                *n -= 1;
                if *n == 0 {
                    self.ctxs[c].tokens.remove(&v);
                }
                Ok(())
            }
            _ => mismatch(format!("no `{name}` token to rewrite")),
        }
    }

    fn give(&mut self, c: usize, v: Var) {
        *self.ctxs[c].tokens.entry(v).or_default() += 1;
    }

    fn fire_par(&mut self, c: usize, r: RuleIdx) -> Result<(), WitnessError> {
        let rule = self.m.rule(r).clone();
        if *self.m.shape(r) != Shape::Par {
            return mismatch(format!("`{}` is not a parallel rule", rule.id));
        }
        for (s, n) in rule.lhs.spines() {
            for _ in 0..n {
                self.take(c, s.head)?;
            }
        }
        for (s, n) in rule.rhs.spines() {
            for _ in 0..n {
                self.give(c, s.head);
            }
        }
        self.record(r);
        Ok(())
    }

    fn push(&mut self, c: usize, r: RuleIdx) -> Result<usize, WitnessError> {
        let Shape::Push { x, y, z } = *self.m.shape(r) else {
            return mismatch(format!("`{}` is not a push", self.m.rule(r).id));
        };
        self.take(c, x)?;
        let id = self.ctxs.len();
        self.ctxs.push(Ctx { head: y, parent: c, tokens: BTreeMap::from([(z, 1)]), kids: BTreeSet::new() });
        self.ctxs[c].kids.insert(id);
        self.record(r);
        Ok(id)
    }

    fn detach(&mut self, child: usize) -> usize {
        let p = self.ctxs[child].parent;
        self.ctxs[p].kids.remove(&child);
        p
    }

    fn close(&mut self, child: usize) -> Result<(), WitnessError> {
        let ctx = &self.ctxs[child];
        if !ctx.tokens.is_empty() || !ctx.kids.is_empty() {
            return mismatch("returning push context is not empty");
        }
        let head = ctx.head;
        let p = self.detach(child);
        self.give(p, head);
        Ok(())
    }

    fn pop(&mut self, child: usize, r: RuleIdx) -> Result<(), WitnessError> {
        let Shape::Pop { y, w, z } = *self.m.shape(r) else {
            return mismatch(format!("`{}` is not a pop", self.m.rule(r).id));
        };
        let ctx = &self.ctxs[child];
        if ctx.head != y || ctx.tokens != BTreeMap::from([(w, 1)]) || !ctx.kids.is_empty() {
            return mismatch(format!("pop `{}` does not match its context", self.m.rule(r).id));
        }
        let p = self.detach(child);
        self.give(p, z);
        self.record(r);
        Ok(())
    }

    /// Unfolds a firing of a parallel construction inside context `c`.
    /// Infinite summaries are started and handed back unfinished.
    fn run(&mut self, sys: &Constructed, firing: &[RuleIdx], c: usize) -> Result<Vec<Runner>, WitnessError> {
        let mut pending = Vec::new();
        for &r in firing {
            match &sys.recipes[r] {
                Recipe::Original(o) => self.fire_par(c, *o)?,
                Recipe::Abandon { push, inner } => {
                    let child = self.push(c, *push)?;
                    pending.extend(self.run(sys, inner, child)?);
                }
                Recipe::Return { push, inner } => {
                    let child = self.push(c, *push)?;
                    pending.extend(self.run(sys, inner, child)?);
                    self.close(child)?;
                }
                Recipe::Pop { push, pop, inner } => {
                    let child = self.push(c, *push)?;
                    pending.extend(self.run(sys, inner, child)?);
                    self.pop(child, *pop)?;
                }
                Recipe::Infinite { push, cert } => {
                    let child = self.push(c, *push)?;
                    pending.push(self.start(cert, child)?);
                }
                Recipe::Cover { .. } => return mismatch("sequential rename inside a parallel firing"),
            }
        }
        Ok(pending)
    }

    /// Unfolds rules of a sequential construction from innermost `(c, v)`.
    fn seq_steps(&mut self, seq: &Constructed, rules: &[RuleIdx], (mut c, mut v): (usize, Var)) -> Result<(usize, Var), WitnessError> {
        for &r in rules {
            match &seq.recipes[r] {
                Recipe::Original(o) => {
                    let Shape::Push { x, z, .. } = *self.m.shape(*o) else {
                        return mismatch("sequential step is not a push");
                    };
                    if x != v {
                        return mismatch("push does not apply to the innermost variable");
                    }
                    c = self.push(c, *o)?;
                    v = z;
                }
                Recipe::Cover { par, firing } => {
                    if !self.run(par, firing, c)?.is_empty() {
                        return mismatch("covering firing uses an infinite summary");
                    }
                    v = seq.mbrs.rule(r).rhs.as_var().expect("rename");
                }
                _ => return mismatch("unexpected recipe in a sequential construction"),
            }
        }
        Ok((c, v))
    }

    fn start(&mut self, cert: &Arc<InfCert>, ctx: usize) -> Result<Runner, WitnessError> {
        match &cert.body {
            CertBody::Seq { seq, stem, .. } => {
                let (ctx, var) = self.seq_steps(seq, stem, (ctx, cert.start))?;
                Ok(Runner::Seq { cert: cert.clone(), ctx, var })
            }
            CertBody::Mixed { seq, prefix, via, par, witness } => {
                let (pc, v) = self.seq_steps(seq, prefix, (ctx, cert.start))?;
                if v != *via {
                    return mismatch("sequential prefix ends at the wrong variable");
                }
                let first = match witness {
                    MixedWitness::Finite(f) => f,
                    MixedWitness::Infinite { stem, .. } => stem,
                };
                let pending = self.run(par, first, pc)?;
                if matches!(witness, MixedWitness::Finite(_)) && pending.is_empty() {
                    return mismatch("finite mixed witness without an infinite summary");
                }
                Ok(Runner::Mixed { cert: cert.clone(), ctx: pc, pending })
            }
        }
    }

    fn round(&mut self, runner: &mut Runner) -> Result<(), WitnessError> {
        match runner {
            Runner::Seq { cert, ctx, var } => {
                let CertBody::Seq { seq, cycle, .. } = &cert.body else { unreachable!() };
                (*ctx, *var) = self.seq_steps(seq, cycle, (*ctx, *var))?;
            }
            Runner::Mixed { cert, ctx, pending } => {
                let CertBody::Mixed { par, witness, .. } = &cert.body else { unreachable!() };
                if let MixedWitness::Infinite { cycle, .. } = witness {
                    for mut fresh in self.run(par, cycle, *ctx)? {
                        self.round(&mut fresh)?;
                    }
                }
                for p in pending.iter_mut() {
                    self.round(p)?;
                }
            }
        }
        Ok(())
    }
}

/// Unfolds a derivation of a parallel construction into one of `m` from the
/// same start. Bare variables of the end term are kept; positions of `Zhat_F`
/// and `Zhat_inf` become residual spines.
pub fn expand_witness(m: &Mbrs, c: &Constructed, d: &Derivation) -> Result<Derivation, WitnessError> {
    expand_firing(m, c, &d.start, &d.rules())
}

pub fn expand_firing(m: &Mbrs, c: &Constructed, start: &Term, firing: &[RuleIdx]) -> Result<Derivation, WitnessError> {
    let mut u = Unfolder::new(m, start)?;
    for mut p in u.run(c, firing, 0)? {
        u.round(&mut p)?;
    }
    u.derivation.replay(m)?;
    Ok(u.derivation)
}

/// A lasso of the original system together with its stem followed by a
/// number of explicitly unfolded cycle rounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteLasso {
    pub lasso: Lasso,
    pub unrolled: Derivation,
}

impl ConcreteLasso {
    pub fn maxima(&self, m: &Mbrs) -> (KSet, KSet) {
        let s = self.lasso.sequence();
        (m.lasso_maximal(&s), m.inf_maximal(&s))
    }
}

/// Unfolds a certificate into a lasso of `m`, replaying `pumps >= 1` rounds
/// of the cycle exactly.
pub fn concretize(m: &Mbrs, cert: &Arc<InfCert>, pumps: usize) -> Result<ConcreteLasso, WitnessError> {
    let mut u = Unfolder::new(m, &Term::var(cert.start))?;
    let mut runner = u.start(cert, 0)?;
    let stem_len = u.derivation.steps.len();
    let mut cycle: Option<Vec<RuleIdx>> = None;
    for _ in 0..pumps.max(1) {
        let before = u.derivation.steps.len();
        u.round(&mut runner)?;
        let this: Vec<RuleIdx> = u.derivation.steps[before..].iter().map(|(r, _)| *r).collect();
        if this.is_empty() {
            return mismatch("empty cycle round");
        }
        match &cycle {
            Some(c) if *c != this => return mismatch("cycle rounds differ"),
            Some(_) => {}
            None => cycle = Some(this),
        }
    }
    u.derivation.replay(m)?;
    let stem = Derivation { start: u.derivation.start.clone(), steps: u.derivation.steps[..stem_len].to_vec() };
    Ok(ConcreteLasso { lasso: Lasso { stem, cycle: cycle.expect("at least one round") }, unrolled: u.derivation })
}
