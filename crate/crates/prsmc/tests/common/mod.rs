//! Pinned expectations on the shipped example systems, shared by the
//! regression tests and the acceptance target.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use prsmc::altl::{eval, parse_formula};
use prsmc::construct::{build_parallel_mbrs, build_seq_mbrs, Constructed};
use prsmc::decide::{model_check_infinite, Decider, PUMPS};
use prsmc::fixtures;
use prsmc::seq_engine::{seq_infinite_accepting, seq_reachable_var};
use prsmc::syntax::{same_system, RuleDisplay};
use prsmc::system::{KSet, Mbrs};
use prsmc::verdict::{Budget, Check, Verdict};
use prsmc::witness::{concretize, expand_firing};

pub type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn ks(ix: &[usize]) -> KSet {
    ix.iter().copied().collect()
}

fn rule_text(c: &Constructed, r: usize) -> String {
    RuleDisplay(&c.mbrs, r).to_string().split_once(" : ").map(|p| p.1.to_string()).unwrap_or_default()
}

fn has_rule(c: &Constructed, text: &str) -> bool {
    (0..c.mbrs.len()).any(|r| rule_text(c, r) == text)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn s1_parallel_construction() -> Outcome {
    let m = fixtures::s1();
    let c = build_parallel_mbrs(&m, ks(&[1, 2]), Budget::default()).map_err(err)?;
    let all: BTreeSet<String> = (0..c.mbrs.len()).map(|r| rule_text(&c, r)).collect();
    let expect: BTreeSet<String> =
        ["X -a-> Y", "Z -c-> eps", "W -d-> X", "Y -{1}-> Zhat_F", "Y -{1,2}-> Zhat_F", "Y -{1,2}-> W"]
            .into_iter()
            .map(String::from)
            .collect();
    ensure!(all == expect, "M_PAR rules {all:?}");
    for r in c.added() {
        ensure!(c.mbrs.rule(r).label == prsmc::system::Label::KSet(c.mbrs.cmp(r)), "cmp differs from label on {}", rule_text(&c, r));
    }
    Ok(())
}

pub fn s1_expansion() -> Outcome {
    let m = fixtures::s1();
    let c = build_parallel_mbrs(&m, ks(&[1, 2]), Budget::default()).map_err(err)?;
    let r1 = c.mbrs.lookup("r1").ok_or("r1 missing")?;
    let yw = (0..c.mbrs.len()).find(|&r| rule_text(&c, r) == "Y -{1,2}-> W").ok_or("Y -{1,2}-> W missing")?;
    let x = m.var("X").unwrap();
    let d = expand_firing(&m, &c, &prsmc::terms::Term::var(x), &[r1, yw]).map_err(err)?;
    let ids = m.rule_ids(&d.rules());
    ensure!(ids == ["r1", "r2", "r3"], "expansion {ids:?}");
    ensure!(m.syms.term(d.end()) == "W", "expansion ends at {}", m.syms.term(d.end()));
    Ok(())
}

pub fn pure_parallel_construction() -> Outcome {
    let m = fixtures::s2();
    let c = build_parallel_mbrs(&m, ks(&[1]), Budget::default()).map_err(err)?;
    ensure!(same_system(&c.mbrs, &m), "S2 changed by saturation");
    Ok(())
}

pub fn s1_sequential_construction() -> Outcome {
    let m = fixtures::s1();
    let k = ks(&[1, 2]);
    let mk = Arc::new(build_parallel_mbrs(&m, k, Budget::default()).map_err(err)?);
    let ms = build_seq_mbrs(&m, &mk, k, Budget::default()).map_err(err)?;
    for text in ["Y -b-> W.(Z)", "X -{}-> Y", "W -{}-> X", "Y -{1,2}-> W", "X -{1,2}-> W"] {
        ensure!(has_rule(&ms, text), "M_SEQ lacks {text}");
    }
    let (x, w) = (m.var("X").unwrap(), m.var("W").unwrap());
    ensure!(seq_reachable_var(&ms.mbrs, x, w, k).map_err(err)?.is_yes(), "X does not reach W with {{1,2}}");
    // The rename X -{1,2}-> X closes a loop through both components.
    ensure!(seq_infinite_accepting(&ms.mbrs, x, k, k).map_err(err)?.is_yes(), "no {{1,2}} loop in M_SEQ");
    Ok(())
}

pub fn s1_problem1() -> Outcome {
    let m = fixtures::s1();
    let x = m.var("X").unwrap();
    let mut d = Decider::new(&m, Budget::default()).map_err(err)?;
    let Verdict::Yes(w) = d.problem1(x, ks(&[1])).map_err(err)? else { return Err("K={1} not Yes".into()) };
    w.replay(&m).map_err(err)?;
    ensure!(m.rule_ids(&w.rules()) == ["r1", "r2"], "witness {:?}", m.rule_ids(&w.rules()));
    ensure!(d.problem1(x, ks(&[2])).map_err(err)?.is_no(), "K={{2}} not No");
    ensure!(d.problem1(x, KSet::EMPTY).map_err(err)?.is_yes(), "K={{}} not Yes");
    Ok(())
}

pub fn s1_problem2() -> Outcome {
    let m = fixtures::s1();
    let x = m.var("X").unwrap();
    let mut d = Decider::new(&m, Budget::default()).map_err(err)?;
    let Verdict::Yes(cert) = d.problem2(x, ks(&[1, 2]), ks(&[1, 2])).map_err(err)? else {
        return Err("({1,2},{1,2}) not Yes".into());
    };
    let l = concretize(&m, &cert, PUMPS).map_err(err)?;
    ensure!(l.maxima(&m) == (ks(&[1, 2]), ks(&[1, 2])), "lasso maxima {:?}", l.maxima(&m));
    let mut cycle = m.rule_ids(&l.lasso.cycle);
    cycle.sort();
    ensure!(cycle == ["r1", "r2", "r3", "r5"], "cycle {cycle:?}");
    ensure!(d.problem2(x, ks(&[1]), KSet::EMPTY).map_err(err)?.is_no(), "({{1}},{{}}) not No");
    ensure!(d.problem2(x, ks(&[1]), ks(&[1, 2])).map_err(err)?.is_no(), "Kω outside K not No");
    Ok(())
}

pub fn s1_omega_constructions() -> Outcome {
    let m = fixtures::s1();
    let mut d = Decider::new(&m, Budget::default()).map_err(err)?;
    let mk = d.parallel(ks(&[1, 2])).map_err(err)?;
    let (pk, _) = d.par_omega(ks(&[1, 2]), ks(&[1, 2])).map_err(err)?;
    ensure!(pk.mbrs.len() == mk.mbrs.len(), "S1 gained infinite summaries");
    let (p0, _) = d.par_omega(KSet::EMPTY, KSet::EMPTY).map_err(err)?;
    ensure!(p0.mbrs.len() == d.parallel(KSet::EMPTY).map_err(err)?.mbrs.len(), "empty target gained rules");
    Ok(())
}

pub fn s1_prime_omega_construction() -> Outcome {
    let m = fixtures::s1_prime();
    let x = m.var("X").unwrap();
    let mut d = Decider::new(&m, Budget::default()).map_err(err)?;
    let (pk, minf) = d.par_omega(ks(&[1, 2]), ks(&[1, 2])).map_err(err)?;
    let r = (0..pk.mbrs.len()).find(|&r| rule_text(&pk, r) == "Y -{1}/{}-> Zhat_inf").ok_or("Y -{1}/{}-> Zhat_inf missing")?;
    ensure!(pk.mbrs.cmp(r) == ks(&[1]) && minf.cmp(r).is_empty(), "components of the infinite summary");
    let Verdict::Yes(cert) = d.problem2(x, ks(&[1]), KSet::EMPTY).map_err(err)? else { return Err("({1},{}) not Yes".into()) };
    let l = concretize(&m, &cert, PUMPS).map_err(err)?;
    ensure!(m.rule_ids(&l.lasso.cycle) == ["r6"], "cycle {:?}", m.rule_ids(&l.lasso.cycle));
    Ok(())
}

pub fn s2_problem2() -> Outcome {
    let m = fixtures::s2();
    let x = m.var("X").unwrap();
    let mut d = Decider::new(&m, Budget::default()).map_err(err)?;
    for (k, kw) in [(ks(&[1]), ks(&[1])), (ks(&[1]), KSet::EMPTY), (KSet::EMPTY, KSet::EMPTY)] {
        let Verdict::Yes(cert) = d.problem2(x, k, kw).map_err(err)? else { return Err(format!("({k},{kw}) not Yes")) };
        let l = concretize(&m, &cert, PUMPS).map_err(err)?;
        ensure!(l.maxima(&m) == (k, kw), "({k},{kw}) lasso maxima {:?}", l.maxima(&m));
    }
    Ok(())
}

fn check(m: &Mbrs, phi: &str) -> Result<Check<prsmc::decide::Counterexample>, String> {
    let x = m.var("X").unwrap();
    model_check_infinite(m, x, &parse_formula(phi).map_err(err)?, Budget::default()).map_err(err)
}

pub fn gf_b_checks() -> Outcome {
    ensure!(matches!(check(&fixtures::s1(), "GF <b>")?, Check::Holds), "S1 violates GF <b>");
    let Check::Violated(c) = check(&fixtures::s1_prime(), "GF <b>")? else { return Err("S1' satisfies GF <b>".into()) };
    ensure!(c.run.cycle == ["e"], "counterexample cycle {:?}", c.run.cycle);
    ensure!(!eval(&parse_formula("GF <b>").unwrap(), &c.run), "counterexample satisfies GF <b>");
    ensure!(matches!(check(&fixtures::s1(), "!F <z>")?, Check::Holds), "S1 violates !F <z>");
    Ok(())
}

pub const ALL: [(&str, fn() -> Outcome); 10] = [
    ("S1 parallel construction", s1_parallel_construction),
    ("S1 witness expansion", s1_expansion),
    ("pure parallel construction", pure_parallel_construction),
    ("S1 sequential construction", s1_sequential_construction),
    ("S1 problem 1", s1_problem1),
    ("S1 problem 2", s1_problem2),
    ("S1 infinite-extension constructions", s1_omega_constructions),
    ("S1' infinite-extension construction", s1_prime_omega_construction),
    ("S2 problem 2", s2_problem2),
    ("GF <b> checks", gf_b_checks),
];
