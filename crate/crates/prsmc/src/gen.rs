//! Seeded random systems, formulas and runs for differential testing.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::altl::{Formula, LassoRun};
use crate::system::{KSet, Label, Mbrs, Rule, RuleIdx, Symbols};
use crate::terms::{Term, Var, VarTable};

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const VAR_NAMES: [&str; 6] = ["X", "Y", "Z", "W", "V", "U"];
const ACTIONS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_vars: usize,
    pub max_rules: usize,
    pub n: usize,
    pub actions: usize,
    /// Probability that a rule belongs to a given component.
    pub density: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_vars: 5, max_rules: 8, n: 2, actions: 3, density: 0.35 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Par,
    Push,
    Pop,
    Rename,
    Erase,
}

fn build(rng: &mut GenRng, cfg: &GenConfig, kinds: &[(Kind, u32)]) -> Mbrs {
    let nv = rng.gen_range(1..=cfg.max_vars.clamp(1, VAR_NAMES.len()));
    let names = &VAR_NAMES[..nv];
    let table = VarTable::new(names.iter().copied()).expect("valid names");
    let acts: Vec<String> = ACTIONS[..cfg.actions.clamp(1, ACTIONS.len())].iter().map(|s| s.to_string()).collect();
    let syms = Arc::new(Symbols::new(table, acts.clone()));
    let vars: Vec<Var> = syms.vars.user_vars().collect();
    let pick = |rng: &mut GenRng| *vars.choose(rng).expect("at least one variable");
    let bag = |rng: &mut GenRng, lo: usize, hi: usize| Term::from_spines((0..rng.gen_range(lo..=hi)).map(|_| crate::terms::Spine::bare(pick(rng))));
    let nr = rng.gen_range(1..=cfg.max_rules.max(1));
    let total: u32 = kinds.iter().map(|k| k.1).sum();
    let mut rules = Vec::new();
    for i in 0..nr {
        let mut roll = rng.gen_range(0..total);
        let kind = kinds.iter().find(|(_, w)| if roll < *w { true } else { roll -= w; false }).expect("weights").0;
        let (lhs, rhs) = match kind {
            Kind::Par => (bag(rng, 1, 2), bag(rng, 0, 2)),
            Kind::Push => {
                let (x, y, z) = (pick(rng), pick(rng), pick(rng));
                (Term::var(x), Term::seq(y, Term::var(z)))
            }
            Kind::Pop => {
                let (y, w, z) = (pick(rng), pick(rng), pick(rng));
                (Term::seq(y, Term::var(w)), Term::var(z))
            }
            Kind::Rename => (Term::var(pick(rng)), Term::var(pick(rng))),
            Kind::Erase => (Term::var(pick(rng)), Term::eps()),
        };
        let label = Label::Action(rng.gen_range(0..acts.len()) as u32);
        let cmp: KSet = (1..=cfg.n).filter(|_| rng.gen_bool(cfg.density)).collect();
        rules.push((Rule { id: format!("r{}", i + 1), lhs, label, rhs }, cmp));
    }
    Mbrs::new(syms, cfg.n, rules).expect("generated system is well formed")
}

/// A random system in normal form mixing parallel and sequential rules.
pub fn normal_form(rng: &mut GenRng, cfg: &GenConfig) -> Mbrs {
    build(rng, cfg, &[(Kind::Par, 3), (Kind::Push, 3), (Kind::Pop, 2), (Kind::Rename, 2), (Kind::Erase, 1)])
}

/// A random system of parallel rules only.
pub fn parallel(rng: &mut GenRng, cfg: &GenConfig) -> Mbrs {
    build(rng, cfg, &[(Kind::Par, 1)])
}

/// A random system of pushes and renames only.
pub fn push_rename(rng: &mut GenRng, cfg: &GenConfig) -> Mbrs {
    build(rng, cfg, &[(Kind::Push, 1), (Kind::Rename, 1)])
}

/// A random rule sequence of `m`, not necessarily applicable.
pub fn rule_sequence(rng: &mut GenRng, m: &Mbrs, max_len: usize) -> Vec<RuleIdx> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..m.len())).collect()
}

/// Propositional formula over `acts` with the given depth bound.
pub fn prop(rng: &mut GenRng, acts: &[&str], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.4) {
        return match rng.gen_range(0..6) {
            0 => Formula::True,
            _ => Formula::act(acts.choose(rng).expect("actions")),
        };
    }
    match rng.gen_range(0..3) {
        0 => Formula::not(prop(rng, acts, depth - 1)),
        1 => Formula::and(prop(rng, acts, depth - 1), prop(rng, acts, depth - 1)),
        _ => Formula::or(prop(rng, acts, depth - 1), prop(rng, acts, depth - 1)),
    }
}

/// Boolean combination of `F ψ`, `GF ψ`, `G ψ` and `FG ψ` with
/// `depth()` at most `depth` (at least 1).
pub fn fragment_formula(rng: &mut GenRng, acts: &[&str], depth: usize) -> Formula {
    let depth = depth.max(1);
    if depth == 1 || rng.gen_bool(0.4) {
        let p = Box::new(prop(rng, acts, (depth - 1).min(2)));
        return match rng.gen_range(0..6) {
            0 | 1 => Formula::F(p),
            2 | 3 => Formula::GF(p),
            4 => Formula::G(p),
            _ => Formula::FG(p),
        };
    }
    match rng.gen_range(0..3) {
        0 => Formula::not(fragment_formula(rng, acts, depth - 1)),
        1 => Formula::and(fragment_formula(rng, acts, depth - 1), fragment_formula(rng, acts, depth - 1)),
        _ => Formula::or(fragment_formula(rng, acts, depth - 1), fragment_formula(rng, acts, depth - 1)),
    }
}

/// A lasso run over `acts` with short stem and nonempty cycle.
pub fn lasso_run(rng: &mut GenRng, acts: &[&str]) -> LassoRun {
    let word = |rng: &mut GenRng, lo: usize, hi: usize| -> Vec<String> {
        (0..rng.gen_range(lo..=hi)).map(|_| acts.choose(rng).expect("actions").to_string()).collect()
    };
    let stem = word(rng, 0, 4);
    let cycle = word(rng, 1, 4);
    LassoRun::new(stem, cycle)
}

pub fn action_names(cfg: &GenConfig) -> Vec<&'static str> {
    ACTIONS[..cfg.actions.clamp(1, ACTIONS.len())].to_vec()
}
