//! Process terms modulo structural congruence.
//!
//! A [`Term`] is a sorted multiset of [`Spine`]s; a spine is a head variable
//! with a (possibly empty) tail term. Canonical construction makes equality
//! coincide with congruence: `t || eps = t`, `X.(eps) = X`, and parallel
//! composition is associative and commutative.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("`{0}` is not a subterm")]
    NotSubterm(String),
    #[error("term is not purely sequential")]
    NotSequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    User,
    ZhatF,
    ZhatInf,
}

/// Index into a [`VarTable`]. Indices 0 and 1 are the two reserved variables;
/// user variables follow in name order, so index order is name order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub const ZHAT_F: Var = Var(0);
    pub const ZHAT_INF: Var = Var(1);

    pub fn kind(self) -> VarKind {
        match self.0 {
            0 => VarKind::ZhatF,
            1 => VarKind::ZhatInf,
            _ => VarKind::User,
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub const ZHAT_F_NAME: &str = "Zhat_F";
pub const ZHAT_INF_NAME: &str = "Zhat_inf";

pub fn valid_ident(name: &str) -> bool {
    let mut cs = name.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarTable {
    names: Vec<String>,
}

impl VarTable {
    /// Builds a table from user variable names (deduplicated and sorted).
    pub fn new<I, S>(user: I) -> Result<Self, TermError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for s in user {
            let s = s.into();
            if !valid_ident(&s) || s == ZHAT_F_NAME || s == ZHAT_INF_NAME {
                return Err(TermError::UnknownVar(s));
            }
            set.insert(s);
        }
        let mut names = vec![ZHAT_F_NAME.to_string(), ZHAT_INF_NAME.to_string()];
        names.extend(set);
        Ok(VarTable { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.index()]
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name).map(|i| Var(i as u32))
    }

    pub fn user_vars(&self) -> impl Iterator<Item = Var> + '_ {
        (2..self.names.len()).map(|i| Var(i as u32))
    }

    pub fn all_vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.names.len()).map(|i| Var(i as u32))
    }
}

/// A head variable applied to a tail; `tail == eps` denotes the bare variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spine {
    pub head: Var,
    pub tail: Term,
}

/// Sorted `(spine, count)` pairs with positive counts; empty means `eps`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    par: Vec<(Spine, u32)>,
}

impl Spine {
    pub fn bare(head: Var) -> Self {
        Spine { head, tail: Term::eps() }
    }

    pub fn new(head: Var, tail: Term) -> Self {
        Spine { head, tail }
    }

    pub fn is_bare(&self) -> bool {
        self.tail.is_eps()
    }

    pub fn to_term(&self) -> Term {
        Term::from_spine(self.clone())
    }

    /// True iff the spine has no parallel composition at any depth.
    pub fn is_sequential(&self) -> bool {
        self.tail.is_eps() || self.tail.single_spine().is_some_and(Spine::is_sequential)
    }

    pub fn depth(&self) -> usize {
        self.tail.spines().map(|(s, _)| s.depth() + 1).max().unwrap_or(0)
    }
}

impl Term {
    pub fn eps() -> Self {
        Term { par: Vec::new() }
    }

    pub fn var(v: Var) -> Self {
        Term::from_spine(Spine::bare(v))
    }

    /// `head.(tail)`.
    pub fn seq(head: Var, tail: Term) -> Self {
        Term::from_spine(Spine::new(head, tail))
    }

    pub fn from_spine(s: Spine) -> Self {
        Term { par: vec![(s, 1)] }
    }

    pub fn from_spines<I: IntoIterator<Item = Spine>>(it: I) -> Self {
        let mut t = Term::eps();
        for s in it {
            t.add_spine(s, 1);
        }
        t
    }

    /// A parallel term from a dense count vector indexed by variable.
    pub fn from_counts(counts: &[u32]) -> Self {
        let par = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (Spine::bare(Var(i as u32)), c))
            .collect();
        Term { par }
    }

    pub fn is_eps(&self) -> bool {
        self.par.is_empty()
    }

    pub fn spines(&self) -> impl Iterator<Item = (&Spine, u32)> {
        self.par.iter().map(|(s, c)| (s, *c))
    }

    /// Number of top-level spine occurrences.
    pub fn width(&self) -> u32 {
        self.par.iter().map(|(_, c)| c).sum()
    }

    /// Total number of variable occurrences.
    pub fn size(&self) -> usize {
        self.par.iter().map(|(s, c)| (*c as usize) * (1 + s.tail.size())).sum()
    }

    pub fn single_spine(&self) -> Option<&Spine> {
        match self.par.as_slice() {
            [(s, 1)] => Some(s),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<Var> {
        self.single_spine().filter(|s| s.is_bare()).map(|s| s.head)
    }

    pub fn count(&self, s: &Spine) -> u32 {
        match self.par.binary_search_by(|(x, _)| x.cmp(s)) {
            Ok(i) => self.par[i].1,
            Err(_) => 0,
        }
    }

    pub fn add_spine(&mut self, s: Spine, n: u32) {
        if n == 0 {
            return;
        }
        match self.par.binary_search_by(|(x, _)| x.cmp(&s)) {
            Ok(i) => self.par[i].1 += n,
            Err(i) => self.par.insert(i, (s, n)),
        }
    }

    pub fn par(&self, other: &Term) -> Term {
        let mut t = self.clone();
        for (s, c) in other.spines() {
            t.add_spine(s.clone(), c);
        }
        t
    }

    /// Multiset inclusion of top-level spines.
    pub fn contains(&self, sub: &Term) -> bool {
        sub.spines().all(|(s, c)| self.count(s) >= c)
    }

    /// `self - sub` if `sub` is a sub-multiset of `self`.
    pub fn minus(&self, sub: &Term) -> Option<Term> {
        if !self.contains(sub) {
            return None;
        }
        let mut par = Vec::with_capacity(self.par.len());
        for (s, c) in &self.par {
            let left = c - sub.count(s);
            if left > 0 {
                par.push((s.clone(), left));
            }
        }
        Some(Term { par })
    }

    pub fn remove_one(&self, s: &Spine) -> Option<Term> {
        self.minus(&Term::from_spine(s.clone()))
    }

    /// True iff no sequential composition occurs.
    pub fn is_parallel(&self) -> bool {
        self.par.iter().all(|(s, _)| s.is_bare())
    }

    /// True iff no parallel composition occurs (`eps` included).
    pub fn is_sequential(&self) -> bool {
        self.is_eps() || self.single_spine().is_some_and(Spine::is_sequential)
    }

    /// Dense variable counts of a parallel term.
    pub fn counts(&self, nvars: usize) -> Option<Vec<u32>> {
        let mut v = vec![0; nvars];
        for (s, c) in &self.par {
            if !s.is_bare() {
                return None;
            }
            v[s.head.index()] += c;
        }
        Some(v)
    }

    pub fn vars(&self, out: &mut BTreeSet<Var>) {
        for (s, _) in &self.par {
            out.insert(s.head);
            s.tail.vars(out);
        }
    }

    pub fn display<'a>(&'a self, table: &'a VarTable) -> TermDisplay<'a> {
        TermDisplay { term: self, table }
    }
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    table: &'a VarTable,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.term.is_eps() {
            return f.write_str("eps");
        }
        let mut first = true;
        for (s, c) in self.term.spines() {
            for _ in 0..c {
                if !first {
                    f.write_str(" || ")?;
                }
                first = false;
                f.write_str(self.table.name(s.head))?;
                if !s.is_bare() {
                    write!(f, ".({})", s.tail.display(self.table))?;
                }
            }
        }
        Ok(())
    }
}

/// Term syntax tree before canonicalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawTerm {
    Eps,
    Var(String),
    Seq(String, Box<RawTerm>),
    Par(Box<RawTerm>, Box<RawTerm>),
}

pub fn canonicalize(raw: &RawTerm, table: &VarTable) -> Result<Term, TermError> {
    let look = |n: &str| table.lookup(n).ok_or_else(|| TermError::UnknownVar(n.to_string()));
    Ok(match raw {
        RawTerm::Eps => Term::eps(),
        RawTerm::Var(n) => Term::var(look(n)?),
        RawTerm::Seq(n, t) => Term::seq(look(n)?, canonicalize(t, table)?),
        RawTerm::Par(a, b) => canonicalize(a, table)?.par(&canonicalize(b, table)?),
    })
}

/// Re-exposes a canonical term as a syntax tree (left-nested `||`).
pub fn encode(t: &Term, table: &VarTable) -> RawTerm {
    let mut acc: Option<RawTerm> = None;
    for (s, c) in t.spines() {
        for _ in 0..c {
            let name = table.name(s.head).to_string();
            let one = if s.is_bare() {
                RawTerm::Var(name)
            } else {
                RawTerm::Seq(name, Box::new(encode(&s.tail, table)))
            };
            acc = Some(match acc {
                None => one,
                Some(a) => RawTerm::Par(Box::new(a), Box::new(one)),
            });
        }
    }
    acc.unwrap_or(RawTerm::Eps)
}

/// All nonempty sub-multisets of the top-level spines.
fn sub_multisets(t: &Term) -> Vec<Term> {
    let mut acc = vec![Term::eps()];
    for (s, c) in t.spines() {
        let mut next = Vec::with_capacity(acc.len() * (c as usize + 1));
        for base in &acc {
            for k in 0..=c {
                let mut b = base.clone();
                b.add_spine(s.clone(), k);
                next.push(b);
            }
        }
        acc = next;
    }
    acc.retain(|x| !x.is_eps());
    acc
}

pub fn subterms(t: &Term) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    if t.is_eps() {
        out.insert(Term::eps());
        return out;
    }
    for sub in sub_multisets(t) {
        out.insert(sub);
    }
    for (s, _) in t.spines() {
        if !s.is_bare() {
            out.extend(subterms(&s.tail));
        }
    }
    out
}

pub fn is_subterm(st: &Term, t: &Term) -> bool {
    if st == t {
        return true;
    }
    if t.is_eps() || st.is_eps() {
        return false;
    }
    t.contains(st) || t.spines().any(|(s, _)| !s.is_bare() && is_subterm(st, &s.tail))
}

/// `t[st -> repl]`: every result of replacing one occurrence of `st`.
pub fn substitute(t: &Term, st: &Term, repl: &Term) -> Result<BTreeSet<Term>, TermError> {
    if !is_subterm(st, t) {
        return Err(TermError::NotSubterm(format!("{st:?}")));
    }
    let mut out = BTreeSet::new();
    subst_into(t, st, repl, &mut out);
    Ok(out)
}

fn subst_into(t: &Term, st: &Term, repl: &Term, out: &mut BTreeSet<Term>) {
    if st.is_eps() {
        out.insert(repl.clone());
        return;
    }
    if let Some(rest) = t.minus(st) {
        out.insert(rest.par(repl));
    }
    for (s, _) in t.spines() {
        if s.is_bare() || !is_subterm(st, &s.tail) {
            continue;
        }
        let rest = t.remove_one(s).expect("spine present");
        let mut inner = BTreeSet::new();
        subst_into(&s.tail, st, repl, &mut inner);
        for s2 in inner {
            out.insert(rest.par(&Term::seq(s.head, s2)));
        }
    }
}

pub fn seq_set(t: &Term) -> BTreeSet<Spine> {
    let mut out = BTreeSet::new();
    for (s, _) in t.spines() {
        if s.is_bare() {
            out.insert(s.clone());
        } else {
            for inner in seq_set(&s.tail) {
                out.insert(Spine::new(s.head, inner.to_term()));
            }
        }
    }
    out
}

pub fn last(s: &Spine) -> Result<Var, TermError> {
    if s.is_bare() {
        return Ok(s.head);
    }
    match s.tail.single_spine() {
        Some(inner) => last(inner),
        None => Err(TermError::NotSequential),
    }
}

/// `s ∘ s2`: `s2` replaces the innermost variable of `s`.
pub fn compose(s: &Spine, s2: &Spine) -> Result<Spine, TermError> {
    if !s.is_sequential() || !s2.is_sequential() {
        return Err(TermError::NotSequential);
    }
    fn go(s: &Spine, s2: &Spine) -> Spine {
        if s.is_bare() {
            return s2.clone();
        }
        let inner = s.tail.single_spine().expect("sequential");
        Spine::new(s.head, go(inner, s2).to_term())
    }
    Ok(go(s, s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn table() -> VarTable {
        VarTable::new(["X", "Y", "Z", "W"]).unwrap()
    }

    fn t(src: &str) -> Term {
        parse_term(src, &table()).unwrap()
    }

    fn sp(src: &str) -> Spine {
        t(src).single_spine().unwrap().clone()
    }

    #[test]
    fn canonical_identities() {
        assert_eq!(t("X || eps"), t("X"));
        assert_eq!(t("X.(eps)"), t("X"));
        assert_eq!(t("Y || X"), t("X || Y"));
        assert_eq!(t("(X || Y) || Z"), t("X || (Y || Z)"));
        assert_eq!(t("W.(Z || Y)"), t("W.(Y || Z)"));
    }

    #[test]
    fn unknown_variable_rejected() {
        let err = canonicalize(&RawTerm::Var("Q".into()), &table()).unwrap_err();
        assert_eq!(err, TermError::UnknownVar("Q".into()));
    }

    #[test]
    fn reserved_names_not_user_vars() {
        assert!(VarTable::new([ZHAT_F_NAME]).is_err());
        assert!(VarTable::new(["1X"]).is_err());
    }

    #[test]
    fn subterm_examples() {
        assert_eq!(subterms(&Term::eps()), BTreeSet::from([Term::eps()]));
        assert_eq!(subterms(&t("X.(Y)")), BTreeSet::from([t("X.(Y)"), t("Y")]));
        assert_eq!(subterms(&t("X || Y")), BTreeSet::from([t("X"), t("Y"), t("X || Y")]));
    }

    #[test]
    fn substitute_examples() {
        let one = |a: &str, b: &str, c: &str| substitute(&t(a), &t(b), &t(c)).unwrap();
        assert_eq!(one("X", "X", "Y.(Z)"), BTreeSet::from([t("Y.(Z)")]));
        assert_eq!(one("X || X", "X", "Y"), BTreeSet::from([t("Y || X")]));
        assert_eq!(one("W.(X)", "X", "eps"), BTreeSet::from([t("W")]));
        assert!(substitute(&t("X"), &t("Y"), &t("Z")).is_err());
    }

    #[test]
    fn seq_set_examples() {
        assert!(seq_set(&Term::eps()).is_empty());
        assert_eq!(seq_set(&t("X.(Y || Z)")), BTreeSet::from([sp("X.(Y)"), sp("X.(Z)")]));
        assert_eq!(seq_set(&t("X || Y")), BTreeSet::from([sp("X"), sp("Y")]));
    }

    #[test]
    fn last_and_compose() {
        let tb = table();
        assert_eq!(last(&sp("X")).unwrap(), tb.lookup("X").unwrap());
        assert_eq!(last(&sp("X.(Y.(Z))")).unwrap(), tb.lookup("Z").unwrap());
        assert!(last(&sp("X.(Y || Z)")).is_err());
        assert_eq!(compose(&sp("X"), &sp("Y")).unwrap(), sp("Y"));
        assert_eq!(compose(&sp("X.(Y)"), &sp("Z.(W)")).unwrap(), sp("X.(Z.(W))"));
        let (a, b, c) = (sp("X.(Y)"), sp("Z.(W)"), sp("Y.(X)"));
        assert_eq!(compose(&compose(&a, &b).unwrap(), &c).unwrap(), compose(&a, &compose(&b, &c).unwrap()).unwrap());
        let sub = substitute(&a.to_term(), &Term::var(last(&a).unwrap()), &b.to_term()).unwrap();
        assert_eq!(sub, BTreeSet::from([compose(&a, &b).unwrap().to_term()]));
        assert!(compose(&sp("X.(Y || Z)"), &sp("Z")).is_err());
    }

    #[test]
    fn display_round_trip() {
        let tb = table();
        for src in ["eps", "X", "X || X || Y.(Z || W.(X))", "W.(Y.(Z))"] {
            let term = t(src);
            let shown = term.display(&tb).to_string();
            assert_eq!(parse_term(&shown, &tb).unwrap(), term);
        }
    }
}
