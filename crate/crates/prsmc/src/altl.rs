//! Action-based LTL: syntax, exact evaluation on lasso runs, the F/GF
//! fragment, and normalization of negated fragment formulas into
//! `F+ ∧ GF ∧ G` disjuncts.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Cursor, ParseError};
use crate::system::{KSet, Label, Mbrs, RuleIdx};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    /// `<a> f`: the next action is `a` and `f` holds afterwards.
    Diamond(String, Box<Formula>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    F(Box<Formula>),
    G(Box<Formula>),
    GF(Box<Formula>),
    FG(Box<Formula>),
    /// Holds somewhere, and only at finitely many positions.
    FPlus(Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AltlError {
    #[error("formula is not in the F/GF fragment")]
    NotInFragment,
    #[error("formula is not propositional")]
    NotPropositional,
    #[error("normal form exceeds {0} disjuncts")]
    TooManyDisjuncts(usize),
}

pub const DEFAULT_DISJUNCT_LIMIT: usize = 256;

impl Formula {
    pub fn act(a: &str) -> Formula {
        Formula::Diamond(a.to_string(), Box::new(Formula::True))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn is_prop(&self) -> bool {
        match self {
            Formula::True => true,
            Formula::Diamond(_, f) => **f == Formula::True,
            Formula::Not(f) => f.is_prop(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_prop() && b.is_prop(),
            _ => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True => 0,
            Formula::Diamond(_, f) if **f == Formula::True => 0,
            Formula::Diamond(_, f)
            | Formula::Not(f)
            | Formula::F(f)
            | Formula::G(f)
            | Formula::GF(f)
            | Formula::FG(f)
            | Formula::FPlus(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Diamond(a, g) if **g == Formula::True => write!(f, "<{a}>"),
            Formula::Diamond(a, g) => write!(f, "<{a}>({g})"),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::F(g) => write!(f, "F {g}"),
            Formula::G(g) => write!(f, "G {g}"),
            Formula::GF(g) => write!(f, "GF {g}"),
            Formula::FG(g) => write!(f, "FG {g}"),
            Formula::FPlus(g) => write!(f, "F+ {g}"),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut c = Cursor::new(text, 1, 0);
    let f = parse_or(&mut c)?;
    if !c.at_end() {
        return Err(c.err("trailing input"));
    }
    Ok(f)
}

fn parse_or(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut acc = parse_and(c)?;
    while c.eat("|") {
        acc = Formula::or(acc, parse_and(c)?);
    }
    Ok(acc)
}

fn parse_and(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut acc = parse_until(c)?;
    while c.eat("&") {
        acc = Formula::and(acc, parse_until(c)?);
    }
    Ok(acc)
}

fn parse_until(c: &mut Cursor) -> Result<Formula, ParseError> {
    let lhs = parse_unary(c)?;
    c.skip_ws();
    if c.peek_ident() == Some("U") {
        c.expect("U")?;
        let rhs = parse_until(c)?;
        return Ok(Formula::Until(Box::new(lhs), Box::new(rhs)));
    }
    Ok(lhs)
}

fn parse_unary(c: &mut Cursor) -> Result<Formula, ParseError> {
    if c.eat("!") {
        return Ok(Formula::not(parse_unary(c)?));
    }
    if c.eat("(") {
        let f = parse_or(c)?;
        c.expect(")")?;
        return Ok(f);
    }
    if c.eat("<") {
        let a = c.ident()?.to_string();
        c.expect(">")?;
        c.skip_ws();
        if c.rest().starts_with('(') {
            c.expect("(")?;
            let body = parse_or(c)?;
            c.expect(")")?;
            return Ok(Formula::Diamond(a, Box::new(body)));
        }
        return Ok(Formula::act(&a));
    }
    c.skip_ws();
    if c.rest().starts_with("F+") {
        c.expect("F+")?;
        return Ok(Formula::FPlus(Box::new(parse_unary(c)?)));
    }
    let kw = c.peek_ident().ok_or_else(|| c.err("expected formula"))?;
    let wrap: fn(Box<Formula>) -> Formula = match kw {
        "true" => {
            c.ident()?;
            return Ok(Formula::True);
        }
        "F" => Formula::F,
        "G" => Formula::G,
        "GF" => Formula::GF,
        "FG" => Formula::FG,
        _ => return Err(c.err(format!("unexpected `{kw}`"))),
    };
    c.ident()?;
    Ok(wrap(Box::new(parse_unary(c)?)))
}

/// The infinite action word `stem · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LassoRun {
    pub stem: Vec<String>,
    pub cycle: Vec<String>,
}

impl LassoRun {
    pub fn new(stem: Vec<String>, cycle: Vec<String>) -> Self {
        assert!(!cycle.is_empty(), "lasso run needs a nonempty cycle");
        LassoRun { stem, cycle }
    }

    pub fn from_rules(m: &Mbrs, stem: &[RuleIdx], cycle: &[RuleIdx]) -> Self {
        let name = |&r: &RuleIdx| m.syms.label(&m.rule(r).label);
        LassoRun::new(stem.iter().map(name).collect(), cycle.iter().map(name).collect())
    }

    fn len(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    fn act(&self, i: usize) -> &str {
        if i < self.stem.len() {
            &self.stem[i]
        } else {
            &self.cycle[i - self.stem.len()]
        }
    }

    fn next(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.stem.len()
        }
    }
}

/// Truth of `f` at every distinct suffix position of the run.
fn truth(f: &Formula, r: &LassoRun) -> Vec<bool> {
    let n = r.len();
    let cyc = r.stem.len()..n;
    match f {
        Formula::True => vec![true; n],
        Formula::Diamond(a, g) => {
            let g = truth(g, r);
            (0..n).map(|i| r.act(i) == a && g[r.next(i)]).collect()
        }
        Formula::Not(g) => truth(g, r).into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => truth(a, r).into_iter().zip(truth(b, r)).map(|(x, y)| x && y).collect(),
        Formula::Or(a, b) => truth(a, r).into_iter().zip(truth(b, r)).map(|(x, y)| x || y).collect(),
        Formula::Until(a, b) => until(&truth(a, r), &truth(b, r), r),
        Formula::F(g) => until(&vec![true; n], &truth(g, r), r),
        Formula::G(g) => {
            let ng: Vec<bool> = truth(g, r).into_iter().map(|b| !b).collect();
            until(&vec![true; n], &ng, r).into_iter().map(|b| !b).collect()
        }
        Formula::GF(g) => {
            let g = truth(g, r);
            vec![g[cyc].iter().any(|&b| b); n]
        }
        Formula::FG(g) => {
            let g = truth(g, r);
            vec![g[cyc].iter().all(|&b| b); n]
        }
        Formula::FPlus(g) => {
            let gt = truth(g, r);
            let recurs = gt[cyc].iter().any(|&b| b);
            until(&vec![true; n], &gt, r).into_iter().map(|b| b && !recurs).collect()
        }
    }
}

fn until(a: &[bool], b: &[bool], r: &LassoRun) -> Vec<bool> {
    let n = r.len();
    let mut u = vec![false; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let v = b[i] || (a[i] && u[r.next(i)]);
            if v != u[i] {
                u[i] = v;
                changed = true;
            }
        }
        if !changed {
            return u;
        }
    }
}

pub fn eval(f: &Formula, r: &LassoRun) -> bool {
    truth(f, r)[0]
}

pub fn in_fragment(f: &Formula) -> bool {
    match f {
        Formula::F(p) | Formula::GF(p) | Formula::G(p) | Formula::FG(p) => p.is_prop(),
        Formula::Not(g) => in_fragment(g),
        Formula::And(a, b) | Formula::Or(a, b) => in_fragment(a) && in_fragment(b),
        _ => false,
    }
}

/// The fragment plus `F+` over propositional formulas: every member is
/// decided by which actions occur and which occur infinitely often.
pub fn in_extended_fragment(f: &Formula) -> bool {
    match f {
        Formula::FPlus(p) => p.is_prop(),
        Formula::Not(g) => in_extended_fragment(g),
        Formula::And(a, b) | Formula::Or(a, b) => in_extended_fragment(a) && in_extended_fragment(b),
        _ => in_fragment(f),
    }
}

/// `[[ψ]]_Σ` over action names.
pub fn prop_denote(psi: &Formula, sigma: &BTreeSet<String>) -> Result<BTreeSet<String>, AltlError> {
    Ok(match psi {
        Formula::True => sigma.clone(),
        Formula::Diamond(a, g) if **g == Formula::True => sigma.iter().filter(|s| *s == a).cloned().collect(),
        Formula::Not(g) => sigma.difference(&prop_denote(g, sigma)?).cloned().collect(),
        Formula::And(a, b) => prop_denote(a, sigma)?.intersection(&prop_denote(b, sigma)?).cloned().collect(),
        Formula::Or(a, b) => prop_denote(a, sigma)?.union(&prop_denote(b, sigma)?).cloned().collect(),
        _ => return Err(AltlError::NotPropositional),
    })
}

/// `AC(ψ)`: rules whose action label satisfies `ψ`.
pub fn ac_rules(m: &Mbrs, psi: &Formula) -> Result<BTreeSet<RuleIdx>, AltlError> {
    let sigma: BTreeSet<String> = m.syms.actions.iter().cloned().collect();
    let den = prop_denote(psi, &sigma)?;
    Ok((0..m.len())
        .filter(|&r| match m.rule(r).label {
            Label::Action(a) => den.contains(&m.syms.actions[a as usize]),
            _ => false,
        })
        .collect())
}

/// `F+ψ1 ∧ … ∧ GFη1 ∧ … ∧ Gζ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Disjunct {
    pub fplus: Vec<Formula>,
    pub gf: Vec<Formula>,
    pub g: Formula,
}

impl Disjunct {
    pub fn to_formula(&self) -> Formula {
        let mut acc = Formula::G(Box::new(self.g.clone()));
        for p in self.fplus.iter().rev() {
            acc = Formula::and(Formula::FPlus(Box::new(p.clone())), acc);
        }
        for p in self.gf.iter().rev() {
            acc = Formula::and(Formula::GF(Box::new(p.clone())), acc);
        }
        acc
    }

    pub fn eval(&self, r: &LassoRun) -> bool {
        let fp = |p: &Formula| eval(&Formula::FPlus(Box::new(p.clone())), r);
        let gf = |p: &Formula| eval(&Formula::GF(Box::new(p.clone())), r);
        self.fplus.iter().all(fp) && self.gf.iter().all(gf) && eval(&Formula::G(Box::new(self.g.clone())), r)
    }
}

impl fmt::Display for Disjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.fplus.iter().map(|p| format!("F+ {p}")).collect();
        parts.extend(self.gf.iter().map(|p| format!("GF {p}")));
        parts.push(format!("G {}", self.g));
        f.write_str(&parts.join(" & "))
    }
}

fn neg_prop(p: &Formula) -> Formula {
    match p {
        Formula::Not(q) => (**q).clone(),
        _ => Formula::not(p.clone()),
    }
}

#[derive(Clone)]
enum Lit {
    FPlus(Formula),
    GF(Formula),
    G(Formula),
}

/// Disjunctive normal form of `¬φ` as a list of conjunctions of literals.
fn dnf(f: &Formula, negated: bool, limit: usize) -> Result<Vec<Vec<Lit>>, AltlError> {
    let one = |l: Lit| Ok(vec![vec![l]]);
    let two = |a: Lit, b: Lit| Ok(vec![vec![a], vec![b]]);
    match (f, negated) {
        (Formula::Not(g), n) => dnf(g, !n, limit),
        (Formula::And(a, b), false) | (Formula::Or(a, b), true) => {
            let (da, db) = (dnf(a, negated, limit)?, dnf(b, negated, limit)?);
            if da.len() * db.len() > limit {
                return Err(AltlError::TooManyDisjuncts(limit));
            }
            let mut out = Vec::with_capacity(da.len() * db.len());
            for x in &da {
                for y in &db {
                    out.push(x.iter().chain(y).cloned().collect());
                }
            }
            Ok(out)
        }
        (Formula::Or(a, b), false) | (Formula::And(a, b), true) => {
            let mut out = dnf(a, negated, limit)?;
            out.extend(dnf(b, negated, limit)?);
            if out.len() > limit {
                return Err(AltlError::TooManyDisjuncts(limit));
            }
            Ok(out)
        }
        // F p ≡ F+ p ∨ GF p ; ¬G p ≡ F ¬p
        (Formula::F(p), false) => two(Lit::FPlus((**p).clone()), Lit::GF((**p).clone())),
        (Formula::G(p), true) => two(Lit::FPlus(neg_prop(p)), Lit::GF(neg_prop(p))),
        // ¬F p ≡ G ¬p
        (Formula::F(p), true) => one(Lit::G(neg_prop(p))),
        (Formula::G(p), false) => one(Lit::G((**p).clone())),
        (Formula::GF(p), false) => one(Lit::GF((**p).clone())),
        // ¬FG p ≡ GF ¬p
        (Formula::FG(p), true) => one(Lit::GF(neg_prop(p))),
        // FG p ≡ F+ ¬p ∨ G p ; ¬GF p ≡ FG ¬p
        (Formula::FG(p), false) => two(Lit::FPlus(neg_prop(p)), Lit::G((**p).clone())),
        (Formula::GF(p), true) => two(Lit::FPlus((**p).clone()), Lit::G(neg_prop(p))),
        _ => Err(AltlError::NotInFragment),
    }
}

pub fn negate_to_dnf(f: &Formula) -> Result<Vec<Disjunct>, AltlError> {
    negate_to_dnf_limit(f, DEFAULT_DISJUNCT_LIMIT)
}

pub fn negate_to_dnf_limit(f: &Formula, limit: usize) -> Result<Vec<Disjunct>, AltlError> {
    if !in_fragment(f) {
        return Err(AltlError::NotInFragment);
    }
    let conj = dnf(f, true, limit)?;
    let mut out: Vec<Disjunct> = Vec::new();
    for c in conj {
        let mut d = Disjunct { fplus: Vec::new(), gf: Vec::new(), g: Formula::True };
        let mut gs: Vec<Formula> = Vec::new();
        for l in c {
            match l {
                Lit::FPlus(p) if !d.fplus.contains(&p) => d.fplus.push(p),
                Lit::GF(p) if !d.gf.contains(&p) => d.gf.push(p),
                Lit::G(p) if !gs.contains(&p) => gs.push(p),
                _ => {}
            }
        }
        // G a ∧ G b ≡ G (a ∧ b)
        if let Some(first) = gs.first() {
            d.g = gs[1..].iter().fold(first.clone(), |a, b| Formula::and(a, b.clone()));
        }
        if !out.contains(&d) {
            out.push(d);
        }
    }
    Ok(out)
}

/// Encodes a disjunct as acceptance: components `AC(ψ_i)`, `AC(η_j)`, `AC(¬ζ)`.
pub fn disjunct_to_mbrs(m: &Mbrs, d: &Disjunct) -> Result<(Mbrs, KSet, KSet), AltlError> {
    let (m1, m2) = (d.fplus.len(), d.gf.len());
    let n = m1 + m2 + 1;
    let mut cmps = vec![KSet::EMPTY; m.len()];
    let props = d.fplus.iter().chain(&d.gf).cloned().chain([neg_prop(&d.g)]);
    for (i, p) in props.enumerate() {
        for r in ac_rules(m, &p)? {
            cmps[r] = cmps[r].with(i + 1);
        }
    }
    let mm = m.with_components(n, cmps).expect("indices within n");
    let k = KSet::full(m1 + m2);
    let kw = k.minus(KSet::full(m1));
    Ok((mm, k, kw))
}
