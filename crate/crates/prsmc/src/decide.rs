//! The acceptance problems and fragment model checking for normal-form
//! systems, via the parallel and sequential constructions.
//!
//! Infinite acceptance is decided by induction on `|K| + |Kω|`: the inner
//! answers feed the `Zhat_inf` rules of the next level. All constructions
//! and answers are memoized per [`Decider`].

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::altl::{disjunct_to_mbrs, eval, negate_to_dnf, AltlError, Disjunct, Formula, LassoRun};
use crate::construct::{build_par_omega, build_parallel_mbrs, build_seq_mbrs, Constructed};
use crate::par_engine::{par_finite_accepting, par_infinite_mixed, EngineError};
use crate::seq_engine::{seq_infinite_accepting, seq_reachable_var};
use crate::system::{Derivation, KSet, Mbrs, RuleIdx, Shape};
use crate::terms::{Term, Var};
use crate::verdict::{Budget, Check, Verdict};
use crate::witness::{concretize, expand_firing, CertBody, ConcreteLasso, InfCert, WitnessError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecideError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Altl(#[from] AltlError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error("component {0} out of range 1..={1}")]
    Range(usize, usize),
}

const UNDER_SATURATED: &str = "construction under-saturated for a relevant variable";

/// Variables that can occur in terms reachable from `x`.
pub fn relevant_vars(m: &Mbrs, x: Var) -> BTreeSet<Var> {
    let mut seen = BTreeSet::from([x]);
    loop {
        let before = seen.len();
        for r in m.rules() {
            let mut lhs = BTreeSet::new();
            r.lhs.vars(&mut lhs);
            if lhs.is_subset(&seen) {
                r.rhs.vars(&mut seen);
            }
        }
        if seen.len() == before {
            return seen;
        }
    }
}

pub struct Decider<'a> {
    m: &'a Mbrs,
    pub budget: Budget,
    par: HashMap<KSet, Arc<Constructed>>,
    seq: HashMap<KSet, Arc<Constructed>>,
    omega: HashMap<(KSet, KSet), (Arc<Constructed>, Arc<Mbrs>)>,
    memo: HashMap<(Var, KSet, KSet), Verdict<Arc<InfCert>>>,
}

impl<'a> Decider<'a> {
    pub fn new(m: &'a Mbrs, budget: Budget) -> Result<Self, DecideError> {
        if let Some(r) = (0..m.len()).find(|&r| *m.shape(r) == Shape::General) {
            return Err(EngineError::UnsupportedRule(m.rule(r).id.clone()).into());
        }
        Ok(Decider { m, budget, par: HashMap::new(), seq: HashMap::new(), omega: HashMap::new(), memo: HashMap::new() })
    }

    pub fn system(&self) -> &'a Mbrs {
        self.m
    }

    fn check_range(&self, k: KSet) -> Result<(), DecideError> {
        match k.max_index() > self.m.n() {
            true => Err(DecideError::Range(k.max_index(), self.m.n())),
            false => Ok(()),
        }
    }

    /// `M^K_PAR`.
    pub fn parallel(&mut self, k: KSet) -> Result<Arc<Constructed>, DecideError> {
        self.check_range(k)?;
        if let Some(c) = self.par.get(&k) {
            return Ok(c.clone());
        }
        let c = Arc::new(build_parallel_mbrs(self.m, k, self.budget)?);
        self.par.insert(k, c.clone());
        Ok(c)
    }

    /// `M^K_SEQ`.
    pub fn sequential(&mut self, k: KSet) -> Result<Arc<Constructed>, DecideError> {
        if let Some(c) = self.seq.get(&k) {
            return Ok(c.clone());
        }
        let mk = self.parallel(k)?;
        let c = Arc::new(build_seq_mbrs(self.m, &mk, k, self.budget)?);
        self.seq.insert(k, c.clone());
        Ok(c)
    }

    /// `M^{K,Kω}_PAR` and its second component assignment.
    pub fn par_omega(&mut self, k: KSet, kw: KSet) -> Result<(Arc<Constructed>, Arc<Mbrs>), DecideError> {
        if let Some(p) = self.omega.get(&(k, kw)) {
            return Ok(p.clone());
        }
        let m = self.m;
        let mk = self.parallel(k)?;
        let mut failure = None;
        let mut inner = |z: Var, a: KSet, b: KSet| match self.problem2(z, a, b) {
            Ok(v) => Ok(v),
            Err(DecideError::Engine(e)) => Err(e),
            Err(e) => {
                let why = e.to_string();
                failure = Some(e);
                Ok(Verdict::Unknown(why))
            }
        };
        let built = build_par_omega(m, &mk, k, kw, &mut inner);
        drop(inner);
        let (c, minf) = built?;
        if let Some(e) = failure {
            return Err(e);
        }
        let pair = (Arc::new(c), Arc::new(minf));
        self.omega.insert((k, kw), pair.clone());
        Ok(pair)
    }

    fn degrade<W>(&self, x: Var, v: Verdict<W>, unknown: &BTreeSet<Var>) -> Verdict<W> {
        match v {
            Verdict::No if !relevant_vars(self.m, x).is_disjoint(unknown) => Verdict::Unknown(UNDER_SATURATED.into()),
            v => v,
        }
    }

    /// Is there a finite derivation from `x` with finite maximal exactly `k`?
    pub fn problem1(&mut self, x: Var, k: KSet) -> Result<Verdict<Derivation>, DecideError> {
        let mk = self.parallel(k)?;
        let v = match par_finite_accepting(&mk.mbrs, x, k, self.budget)? {
            Verdict::Yes(f) => Verdict::Yes(expand_firing(self.m, &mk, &Term::var(x), &f)?),
            v => v.map(|_| unreachable!()),
        };
        Ok(self.degrade(x, v, &mk.unknown))
    }

    /// Is there an infinite derivation from `x` with finite maximal exactly
    /// `k` and infinite maximal exactly `kw`?
    pub fn problem2(&mut self, x: Var, k: KSet, kw: KSet) -> Result<Verdict<Arc<InfCert>>, DecideError> {
        self.check_range(k.union(kw))?;
        if !kw.is_subset(k) {
            return Ok(Verdict::No);
        }
        if let Some(v) = self.memo.get(&(x, k, kw)) {
            return Ok(v.clone());
        }
        let v = self.problem2_uncached(x, k, kw)?;
        self.memo.insert((x, k, kw), v.clone());
        Ok(v)
    }

    fn problem2_uncached(&mut self, x: Var, k: KSet, kw: KSet) -> Result<Verdict<Arc<InfCert>>, DecideError> {
        let mk = self.parallel(k)?;
        let ms = self.sequential(k)?;
        let (pk, minf) = self.par_omega(k, kw)?;
        let rstar: BTreeSet<RuleIdx> = (0..mk.mbrs.len()).collect();
        let mut unknown: Option<String> = None;
        let cert = |body| Verdict::Yes(Arc::new(InfCert { start: x, k, kw, body }));
        for y in self.m.vars().user_vars() {
            let prefix = k.subsets().into_iter().find_map(|kk| match seq_reachable_var(&ms.mbrs, x, y, kk) {
                Ok(Verdict::Yes(d)) => Some(Ok(d.rules())),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            });
            let Some(prefix) = prefix.transpose()? else { continue };
            match par_infinite_mixed(&pk.mbrs, &minf, y, k, kw, &rstar, self.budget)? {
                Verdict::Yes(witness) => {
                    return Ok(cert(CertBody::Mixed { seq: ms.clone(), prefix, via: y, par: pk.clone(), witness }));
                }
                Verdict::Unknown(why) => {
                    unknown.get_or_insert(why);
                }
                Verdict::No => {}
            }
        }
        if k == kw {
            if let Verdict::Yes(l) = seq_infinite_accepting(&ms.mbrs, x, k, kw)? {
                return Ok(cert(CertBody::Seq { seq: ms.clone(), stem: l.stem.rules(), cycle: l.cycle }));
            }
        }
        if let Some(why) = unknown {
            return Ok(Verdict::Unknown(why));
        }
        let all: BTreeSet<Var> = mk.unknown.iter().chain(&ms.unknown).chain(&pk.unknown).copied().collect();
        Ok(self.degrade(x, Verdict::No, &all))
    }
}

/// Counterexample to a property: the refuted disjunct of its negation and
/// a lasso of the original system whose run satisfies that disjunct.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub disjunct: Disjunct,
    pub cert: Arc<InfCert>,
    pub witness: ConcreteLasso,
    pub run: LassoRun,
}

/// Number of cycle rounds unfolded and replayed for each certificate.
pub const PUMPS: usize = 3;

/// Do all infinite runs from `x` satisfy `phi`?
pub fn model_check_infinite(m: &Mbrs, x: Var, phi: &Formula, budget: Budget) -> Result<Check<Counterexample>, DecideError> {
    let dnf = negate_to_dnf(phi)?;
    let _ = Decider::new(m, budget)?;
    let mut unknown = None;
    for d in dnf {
        let (md, k, kw) = disjunct_to_mbrs(m, &d)?;
        let mut dec = Decider::new(&md, budget)?;
        match dec.problem2(x, k, kw)? {
            Verdict::Yes(cert) => {
                let witness = concretize(&md, &cert, PUMPS)?;
                let run = LassoRun::from_rules(m, &witness.lasso.stem.rules(), &witness.lasso.cycle);
                if !d.eval(&run) || eval(phi, &run) {
                    return Err(WitnessError::Mismatch(format!("lasso does not refute the property through `{d}`")).into());
                }
                return Ok(Check::Violated(Counterexample { disjunct: d, cert, witness, run }));
            }
            Verdict::Unknown(why) => {
                unknown.get_or_insert(why);
            }
            Verdict::No => {}
        }
    }
    Ok(match unknown {
        Some(why) => Check::Unknown(why),
        None => Check::Holds,
    })
}
