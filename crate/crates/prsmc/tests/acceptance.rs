//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every check is seeded, so reruns print the same counts.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use prsmc::altl::{eval, negate_to_dnf, Formula};
use prsmc::compare::{closes, model_check_round, problem1_round, problem2_round, CompareConfig, Report, Tally};
use prsmc::construct::{build_parallel_mbrs, resaturate, Constructed};
use prsmc::gen::{self, GenConfig, GenRng};
use prsmc::oracle::explore;
use prsmc::par_engine::{km_tree, par_finite_accepting, par_reach_empty, par_reach_var, OMEGA};
use prsmc::system::{interleavings, oplus, KSet, Label, LassoSequence, Mbrs, RuleIdx, Shape};
use prsmc::terms::{Term, Var, VarKind};
use prsmc::verdict::{Budget, Verdict};
use prsmc::witness::expand_firing;

const SEED: u64 = 0x5eed;

struct Line {
    ok: bool,
    text: String,
    details: Vec<String>,
}

fn line(ok: bool, text: String) -> Line {
    Line { ok, text, details: Vec::new() }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn random_sigma(rng: &mut GenRng, m: &Mbrs, lo: usize, hi: usize) -> Vec<RuleIdx> {
    (0..rng.gen_range(lo..=hi)).map(|_| rng.gen_range(0..m.len())).collect()
}

fn subsequence(rng: &mut GenRng, s: &[RuleIdx]) -> Vec<RuleIdx> {
    s.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()
}

fn criterion1() -> Line {
    let t = Instant::now();
    let mut rng = gen::rng(SEED + 1);
    let mut checks = 0;
    let mut fails = Vec::new();
    for i in 0..1_000 {
        let cfg = GenConfig { n: rng.gen_range(1..=4), ..GenConfig::default() };
        let m = gen::normal_form(&mut rng, &cfg);
        let sigma = random_sigma(&mut rng, &m, 0, 8);
        let stem = random_sigma(&mut rng, &m, 0, 4);
        let cycle = random_sigma(&mut rng, &m, 1, 4);
        let lasso = LassoSequence { stem: stem.clone(), cycle: cycle.clone() };
        let mut bad = |what: &str| fails.push(format!("sequence {i}: {what}"));

        let finite = LassoSequence { stem: sigma.clone(), cycle: Vec::new() };
        if !m.inf_maximal(&finite).is_empty() || m.lasso_maximal(&finite) != m.maximal(&sigma) {
            bad("finite sequence with nonempty infinite maximal");
        }

        if !m.maximal(&subsequence(&mut rng, &sigma)).is_subset(m.maximal(&sigma)) {
            bad("subsequence maximal not contained");
        }
        let keep: Vec<bool> = (0..cycle.len()).map(|_| rng.gen_bool(0.6)).collect();
        let mut sub_cycle: Vec<RuleIdx> = cycle.iter().zip(&keep).filter(|p| *p.1).map(|p| *p.0).collect();
        if sub_cycle.is_empty() {
            sub_cycle.push(cycle[0]);
        }
        let sub = LassoSequence { stem: subsequence(&mut rng, &stem), cycle: sub_cycle };
        if !m.inf_maximal(&sub).is_subset(m.inf_maximal(&lasso)) || !m.lasso_maximal(&sub).is_subset(m.lasso_maximal(&lasso)) {
            bad("lasso subsequence maxima not contained");
        }

        let (a, b) = (random_sigma(&mut rng, &m, 0, 4), random_sigma(&mut rng, &m, 0, 4));
        let union = m.maximal(&a).union(m.maximal(&b));
        match interleavings(&a, &b, 8) {
            Ok(all) => {
                for lam in all {
                    if m.maximal(&lam) != union {
                        bad("interleaving maximal differs from the union");
                        break;
                    }
                }
            }
            Err(e) => bad(&e.to_string()),
        }

        let per_rule = |s: &[RuleIdx]| s.iter().map(|&r| m.cmp(r)).collect::<Vec<KSet>>();
        if oplus(&per_rule(&stem), &per_rule(&cycle)) != m.inf_maximal(&lasso)
            || m.maximal(&stem).union(m.maximal(&cycle)) != m.lasso_maximal(&lasso)
        {
            bad("lasso decomposition");
        }

        let mut re = sigma.clone();
        re.shuffle(&mut rng);
        let (mut rs, mut rc) = (stem.clone(), cycle.clone());
        rs.shuffle(&mut rng);
        rc.shuffle(&mut rng);
        let re_lasso = LassoSequence { stem: rs, cycle: rc };
        if m.maximal(&re) != m.maximal(&sigma)
            || m.inf_maximal(&re_lasso) != m.inf_maximal(&lasso)
            || m.lasso_maximal(&re_lasso) != m.lasso_maximal(&lasso)
        {
            bad("reordering changed a maximal");
        }
        checks += 1;
    }
    let el = t.elapsed();
    let ok = fails.is_empty() && checks >= 1_000 && el < Duration::from_secs(10);
    let mut l = line(ok, format!("maximal calculus on {checks} sequences and lassos, {} failures, {}", fails.len(), secs(el)));
    l.details = fails;
    l
}

fn criterion2() -> Line {
    let mut rng = gen::rng(SEED + 2);
    let acts = gen::action_names(&GenConfig::default());
    let mut fails = Vec::new();
    let pairs = 500;
    for _ in 0..pairs {
        let phi = gen::fragment_formula(&mut rng, &acts, 4);
        let run = gen::lasso_run(&mut rng, &acts);
        match negate_to_dnf(&phi) {
            Ok(dnf) => {
                let lhs = eval(&Formula::not(phi.clone()), &run);
                if lhs != dnf.iter().any(|d| d.eval(&run)) {
                    fails.push(format!("`{phi}` on {:?}·({:?})^ω", run.stem, run.cycle));
                }
            }
            Err(e) => fails.push(format!("`{phi}`: {e}")),
        }
    }
    let mut l = line(fails.is_empty(), format!("negation normal form on {pairs} formula/run pairs, {} failures", fails.len()));
    l.details = fails;
    l
}

struct Differential {
    p1: Report,
    p2: Report,
    mc: Report,
    p1_systems: usize,
    closed_systems: usize,
    formulas: usize,
    p1_time: Duration,
    p2_time: Duration,
}

fn differential() -> Differential {
    let cfg = CompareConfig::default();
    let mut rng = gen::rng(SEED + 3);
    let acts = gen::action_names(&cfg.gen);
    let mut d = Differential {
        p1: Report::default(),
        p2: Report::default(),
        mc: Report::default(),
        p1_systems: 0,
        closed_systems: 0,
        formulas: 0,
        p1_time: Duration::ZERO,
        p2_time: Duration::ZERO,
    };
    while d.p1_systems < 200 || d.closed_systems < 100 {
        let m = gen::normal_form(&mut rng, &cfg.gen);
        if d.p1_systems < 200 {
            let t = Instant::now();
            problem1_round(&m, &cfg, &mut d.p1);
            d.p1_time += t.elapsed();
            d.p1_systems += 1;
        }
        if d.closed_systems < 100 && closes(&m, &cfg) {
            let t = Instant::now();
            problem2_round(&m, &cfg, &mut d.p2);
            d.p2_time += t.elapsed();
            d.closed_systems += 1;
            for _ in 0..3 {
                let phi = gen::fragment_formula(&mut rng, &acts, 4);
                model_check_round(&m, &phi, &cfg, &mut d.mc);
                d.formulas += 1;
            }
        }
    }
    d
}

fn agreement(t: &Tally) -> String {
    format!("{}/{} agree, {} oracle-undecided", t.agreed, t.compared, t.skipped)
}

fn answer_failures(r: &Report) -> Vec<String> {
    r.failures.iter().filter(|f| f.contains(": engine ") || f.contains(": error ")).cloned().collect()
}

fn criteria3to6(d: &Differential) -> Vec<Line> {
    let mut out = Vec::new();
    let f3 = answer_failures(&d.p1);
    let ok3 = d.p1.problem1.ok() && f3.is_empty() && d.p1_systems >= 200 && d.p1_time < Duration::from_secs(60);
    let mut l = line(ok3, format!("problem 1 on {} systems: {}, {}", d.p1_systems, agreement(&d.p1.problem1), secs(d.p1_time)));
    l.details = f3;
    out.push(l);

    let f4 = answer_failures(&d.p2);
    let base = f4.iter().filter(|f| f.contains("(base case)")).count();
    let ok4 = d.p2.problem2.ok() && f4.is_empty() && d.closed_systems >= 100 && d.p2_time < Duration::from_secs(120);
    let mut l = line(
        ok4,
        format!("problem 2 on {} closed systems: {}, {base} base-case disagreements, {}", d.closed_systems, agreement(&d.p2.problem2), secs(d.p2_time)),
    );
    l.details = f4;
    out.push(l);

    let f5 = answer_failures(&d.mc);
    let ok5 = d.mc.model_check.ok() && f5.is_empty() && d.formulas >= 300;
    let mut l = line(ok5, format!("model checking on {} formulas: {}", d.formulas, agreement(&d.mc.model_check)));
    l.details = f5;
    out.push(l);

    let reports = [&d.p1, &d.p2, &d.mc];
    let (agreed, compared) = reports.iter().fold((0, 0), |(a, c), r| (a + r.witnesses.agreed, c + r.witnesses.compared));
    let f6: Vec<String> = reports.iter().flat_map(|r| r.failures.iter()).filter(|f| !f.contains(": engine ") && !f.contains(": error ")).cloned().collect();
    let mut l = line(f6.is_empty() && agreed == compared, format!("witnesses: {agreed}/{compared} replay with matching maxima"));
    l.details = f6;
    out.push(l);
    out
}

fn key(m: &Mbrs, r: RuleIdx) -> (Term, Label, Term) {
    let rule = m.rule(r);
    (rule.lhs.clone(), rule.label, rule.rhs.clone())
}

/// Re-queries the closure properties on the final system. `None` when a
/// query is inconclusive.
fn closure_violations(m: &Mbrs, c: &Constructed, k: KSet, budget: Budget) -> Option<Vec<String>> {
    let keys: BTreeSet<(Term, Label, Term)> = (0..c.mbrs.len()).map(|r| key(&c.mbrs, r)).collect();
    let has = |x: Var, l: KSet, y: Var| keys.contains(&(Term::var(x), Label::KSet(l), Term::var(y)));
    let mut v = Vec::new();
    for r in (0..m.len()).filter(|&r| *m.shape(r) == Shape::Par) {
        if !keys.contains(&key(m, r)) {
            v.push(format!("parallel rule {} missing", m.rule(r).id));
        }
    }
    let yes = |verdict: Verdict<Vec<RuleIdx>>| match verdict {
        Verdict::Yes(_) => Some(true),
        Verdict::No => Some(false),
        Verdict::Unknown(_) => None,
    };
    for push in (0..m.len()).filter(|&r| m.cmp(r).is_subset(k)) {
        let Shape::Push { x, y, z } = *m.shape(push) else { continue };
        let k1 = m.cmp(push);
        for k2 in k.subsets() {
            if yes(par_finite_accepting(&c.mbrs, z, k2, budget).ok()?)? && !has(x, k1.union(k2), Var::ZHAT_F) {
                v.push(format!("abandon summary for {} with {k2} missing", m.rule(push).id));
            }
            if yes(par_reach_empty(&c.mbrs, z, k2, budget).ok()?)? && !has(x, k1.union(k2), y) {
                v.push(format!("return summary for {} with {k2} missing", m.rule(push).id));
            }
        }
        for pop in (0..m.len()).filter(|&r| m.cmp(r).is_subset(k)) {
            let Shape::Pop { y: py, w, z: w2 } = *m.shape(pop) else { continue };
            if py != y {
                continue;
            }
            for k3 in k.subsets() {
                let reach = (z == w && k3.is_empty()) || yes(par_reach_var(&c.mbrs, z, w, k3, budget).ok()?)?;
                if reach && !has(x, k1.union(m.cmp(pop)).union(k3), w2) {
                    v.push(format!("pop summary for {}/{} with {k3} missing", m.rule(push).id, m.rule(pop).id));
                }
            }
        }
    }
    Some(v)
}

fn criterion7() -> Line {
    let mut rng = gen::rng(SEED + 7);
    let cfg = GenConfig::default();
    let budget = Budget::default();
    let (mut constructions, mut added, mut skipped) = (0, 0, 0);
    let mut fails = Vec::new();
    for i in 0..200 {
        let m = gen::normal_form(&mut rng, &cfg);
        for k in KSet::full(m.n()).subsets() {
            let c = match build_parallel_mbrs(&m, k, budget) {
                Ok(c) => c,
                Err(e) => {
                    fails.push(format!("system {i} K={k}: {e}"));
                    continue;
                }
            };
            if !c.is_complete() {
                skipped += 1;
                continue;
            }
            constructions += 1;
            match resaturate(&m, &c, k, budget) {
                Ok(again) if again.mbrs.len() == c.mbrs.len() => {}
                Ok(_) => fails.push(format!("system {i} K={k}: resaturation added rules")),
                Err(e) => fails.push(format!("system {i} K={k}: {e}")),
            }
            match closure_violations(&m, &c, k, budget) {
                Some(v) => fails.extend(v.into_iter().map(|s| format!("system {i} K={k}: {s}"))),
                None => skipped += 1,
            }
            for r in c.added() {
                added += 1;
                let rule = c.mbrs.rule(r);
                let x = rule.lhs.as_var().expect("summaries start at a variable");
                let d = match expand_firing(&m, &c, &Term::var(x), &[r]) {
                    Ok(d) => d,
                    Err(e) => {
                        fails.push(format!("system {i} K={k} rule {}: {e}", rule.id));
                        continue;
                    }
                };
                let target = rule.rhs.as_var().filter(|v| v.kind() == VarKind::User);
                if d.steps.is_empty() || m.maximal(&d.rules()) != c.mbrs.cmp(r) || target.is_some_and(|y| *d.end() != Term::var(y)) {
                    fails.push(format!(
                        "system {i} K={k} rule {}: expansion {:?} ends at {}",
                        rule.id,
                        m.rule_ids(&d.rules()),
                        m.syms.term(d.end())
                    ));
                }
            }
        }
    }
    let ok = fails.is_empty() && constructions > 0;
    let mut l = line(
        ok,
        format!("closure on 200 systems: {constructions} constructions, {added} added rules expanded, {skipped} inconclusive, {} failures", fails.len()),
    );
    l.details = fails;
    l
}

fn criterion8() -> Line {
    let mut rng = gen::rng(SEED + 8);
    let cfg = GenConfig::default();
    let (mut nodes, mut skipped) = (0, 0);
    let mut fails = Vec::new();
    for i in 0..100 {
        let m = gen::parallel(&mut rng, &cfg);
        let x = m.vars().user_vars().next().expect("a variable");
        let km = match km_tree(&m, &Term::var(x), 2_000) {
            Ok(km) => km,
            Err(e) => {
                fails.push(format!("system {i}: {e}"));
                continue;
            }
        };
        let graph = explore(&m, &Term::var(x), 20_000);
        let reached: BTreeSet<&Term> = graph.nodes.iter().collect();
        for node in km.nodes.iter().filter(|n| !n.marking.contains(&OMEGA)) {
            let t = Term::from_counts(&node.marking);
            if reached.contains(&t) {
                nodes += 1;
            } else if graph.closed {
                fails.push(format!("system {i}: {} not reachable", m.syms.term(&t)));
            } else {
                skipped += 1;
            }
        }
    }
    let mut l = line(fails.is_empty() && nodes > 0, format!("{nodes} ω-free Karp-Miller nodes reachable, {skipped} beyond oracle budget, {} failures", fails.len()));
    l.details = fails;
    l
}

fn criterion9() -> Line {
    let t = Instant::now();
    let mut fails = Vec::new();
    for (name, f) in common::ALL {
        if let Err(e) = f() {
            fails.push(format!("{name}: {e}"));
        }
    }
    let el = t.elapsed();
    let mut l = line(fails.is_empty() && el < Duration::from_secs(5), format!("{} fixture checks, {} failures, {}", common::ALL.len(), fails.len(), secs(el)));
    l.details = fails;
    l
}

fn main() -> ExitCode {
    let mut lines = vec![criterion1(), criterion2()];
    let d = differential();
    lines.extend(criteria3to6(&d));
    lines.push(criterion7());
    lines.push(criterion8());
    lines.push(criterion9());
    let mut ok = true;
    for (i, l) in lines.iter().enumerate() {
        println!("criterion {}: {} {}", i + 1, if l.ok { "PASS" } else { "FAIL" }, l.text);
        for d in l.details.iter().take(5) {
            println!("    {}", d.replace('\n', "\n    "));
        }
        ok &= l.ok;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
