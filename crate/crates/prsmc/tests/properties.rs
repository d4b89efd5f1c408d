//! Randomized invariants. Systems, formulas and runs come from the seeded
//! generators; proptest supplies and shrinks the seeds.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use prsmc::altl::{disjunct_to_mbrs, eval, negate_to_dnf, Formula};
use prsmc::construct::{build_parallel_mbrs, build_seq_mbrs};
use prsmc::decide::Decider;
use prsmc::gen::{self, GenConfig, GenRng};
use prsmc::oracle::{bf_finite_accepting, bf_infinite_accepting, bf_model_check};
use prsmc::par_engine::par_infinite_mixed;
use prsmc::seq_engine::{seq_reachable_var, TopGraph};
use prsmc::syntax::{dump_system, parse_system, same_system};
use prsmc::system::{interleavings, KSet, Label, Mbrs, Rule, RuleIdx, Symbols};
use prsmc::terms::{canonicalize, compose, encode, last, seq_set, subterms, substitute, RawTerm, Spine, Term, Var, VarTable};
use prsmc::verdict::{Answer, Budget, Check, Verdict};
use prsmc::witness::expand_witness;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn small() -> Budget {
    Budget { nodes: 3_000, depth: 10 }
}

fn random_term(rng: &mut GenRng, vars: &[Var], depth: usize) -> Term {
    let width = rng.gen_range(if depth == 0 { 1..=2 } else { 0..=3 });
    let spines = (0..width).map(|_| {
        let head = *vars.choose(rng).unwrap();
        let tail = if depth > 0 && rng.gen_bool(0.4) { random_term(rng, vars, depth - 1) } else { Term::eps() };
        if !tail.is_eps() {
            Spine::new(head, tail)
        } else {
            Spine::bare(head)
        }
    });
    Term::from_spines(spines.collect::<Vec<_>>())
}

fn random_walk(rng: &mut GenRng, m: &Mbrs, from: &Term, steps: usize) -> (Vec<RuleIdx>, Term) {
    let mut t = from.clone();
    let mut rules = Vec::new();
    for _ in 0..steps {
        let Some((r, t2)) = m.successors(&t).into_iter().choose(rng) else { break };
        rules.push(r);
        t = t2;
    }
    (rules, t)
}

fn reach_by(m: &Mbrs, from: &Term, rules: &[RuleIdx]) -> BTreeSet<Term> {
    rules.iter().fold(BTreeSet::from([from.clone()]), |front, &r| front.iter().flat_map(|t| m.apply(r, t)).collect())
}

fn user_vars(m: &Mbrs) -> Vec<Var> {
    m.vars().user_vars().collect()
}

/// The same system with its variables renamed and its rules reversed.
fn isomorphic_copy(m: &Mbrs) -> (Mbrs, impl Fn(Var) -> Var) {
    let names: Vec<String> = m.vars().user_vars().map(|v| m.vars().name(v).to_string()).collect();
    let renamed: Vec<String> = names.iter().map(|n| format!("Q{n}")).collect();
    let mut order = renamed.clone();
    order.reverse();
    let table = VarTable::new(order.iter().map(String::as_str)).unwrap();
    let fresh = |raw: &RawTerm| -> RawTerm {
        fn go(r: &RawTerm) -> RawTerm {
            match r {
                RawTerm::Eps => RawTerm::Eps,
                RawTerm::Var(n) if n.starts_with("Zhat") => RawTerm::Var(n.clone()),
                RawTerm::Var(n) => RawTerm::Var(format!("Q{n}")),
                RawTerm::Seq(n, t) => RawTerm::Seq(format!("Q{n}"), Box::new(go(t))),
                RawTerm::Par(a, b) => RawTerm::Par(Box::new(go(a)), Box::new(go(b))),
            }
        }
        go(raw)
    };
    let syms = Arc::new(Symbols::new(table.clone(), m.syms.actions.clone()));
    let mut rules: Vec<(Rule, KSet)> = (0..m.len())
        .map(|r| {
            let rule = m.rule(r);
            let lhs = canonicalize(&fresh(&encode(&rule.lhs, m.vars())), &table).unwrap();
            let rhs = canonicalize(&fresh(&encode(&rule.rhs, m.vars())), &table).unwrap();
            (Rule { id: rule.id.clone(), lhs, label: rule.label, rhs }, m.cmp(r))
        })
        .collect();
    rules.reverse();
    let copy = Mbrs::new(syms, m.n(), rules).unwrap();
    let (old, new) = (m.vars().clone(), table);
    (copy, move |v: Var| new.lookup(&format!("Q{}", old.name(v))).unwrap())
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn canonical_form_is_idempotent(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig::default());
        let t = random_term(&mut rng, &user_vars(&m), 3);
        let again = canonicalize(&encode(&t, m.vars()), m.vars()).unwrap();
        prop_assert_eq!(&again, &t);
        prop_assert_eq!(m.successors(&again), m.successors(&t));
    }

    #[test]
    fn seq_set_has_only_sequential_spines(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig::default());
        let t = random_term(&mut rng, &user_vars(&m), 3);
        for s in seq_set(&t) {
            prop_assert!(s.is_sequential() || s.is_bare());
            prop_assert!(!s.to_term().is_eps());
        }
    }

    #[test]
    fn subterm_replay(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig::default());
        let s = random_term(&mut rng, &user_vars(&m), 2);
        let Some(t) = subterms(&s).into_iter().filter(|t| !t.is_eps()).choose(&mut rng) else { return Ok(()) };
        let (rho, t2) = random_walk(&mut rng, &m, &t, 4);
        let reached = reach_by(&m, &s, &rho);
        for s2 in substitute(&s, &t, &t2).unwrap() {
            prop_assert!(reached.contains(&s2), "{} not reached", m.syms.term(&s2));
        }
    }

    #[test]
    fn sequential_replay(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::push_rename(&mut rng, &GenConfig::default());
        let vars = user_vars(&m);
        let t = random_term(&mut rng, &vars, 2);
        let Some(spine) = t.spines().map(|(s, _)| s.clone()).find(Spine::is_sequential) else { return Ok(()) };
        let (rho, t2) = random_walk(&mut rng, &m, &Term::var(last(&spine).unwrap()), 4);
        let Some(s2) = t2.single_spine().cloned() else { return Ok(()) };
        let target = compose(&spine, &s2).unwrap();
        prop_assert!(
            reach_by(&m, &spine.to_term(), &rho).contains(&target.to_term()),
            "{}\nspine {} rho {:?} t2 {} target {} reached {:?}",
            dump_system(&m, &Default::default()),
            m.syms.term(&spine.to_term()),
            m.rule_ids(&rho),
            m.syms.term(&t2),
            m.syms.term(&target.to_term()),
            reach_by(&m, &spine.to_term(), &rho).iter().map(|t| m.syms.term(t)).collect::<Vec<_>>()
        );
        let outer = Spine::new(*vars.choose(&mut rng).unwrap(), spine.to_term());
        let end = compose(&outer, &s2).unwrap();
        prop_assert!(reach_by(&m, &outer.to_term(), &rho).contains(&end.to_term()));
    }

    #[test]
    fn system_text_round_trips(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig { n: 3, ..GenConfig::default() });
        let back = parse_system(&dump_system(&m, &Default::default())).unwrap();
        prop_assert!(same_system(&m, &back));
    }

    #[test]
    fn derivation_labels_match_rules(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig::default());
        let x = user_vars(&m)[0];
        let (rho, _) = random_walk(&mut rng, &m, &Term::var(x), 6);
        let mut t = Term::var(x);
        for &r in &rho {
            let next = m.apply(r, &t).into_iter().next().unwrap();
            prop_assert!(m.successors(&t).contains(&(r, next.clone())));
            t = next;
        }
    }

    #[test]
    fn interleaving_count(a in 0usize..=4, b in 0usize..=4) {
        let left: Vec<RuleIdx> = (0..a).collect();
        let right: Vec<RuleIdx> = (a..a + b).collect();
        let all: BTreeSet<Vec<RuleIdx>> = interleavings(&left, &right, 8).unwrap().collect();
        let binom = (0..a).fold(1usize, |acc, i| acc * (a + b - i) / (i + 1));
        prop_assert_eq!(all.len(), binom);
    }

    #[test]
    fn eval_algebra(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let acts = gen::action_names(&GenConfig::default());
        let (p, q) = (gen::fragment_formula(&mut rng, &acts, 3), gen::fragment_formula(&mut rng, &acts, 3));
        let psi = gen::prop(&mut rng, &acts, 2);
        let run = gen::lasso_run(&mut rng, &acts);
        prop_assert_eq!(eval(&Formula::not(p.clone()), &run), !eval(&p, &run));
        prop_assert_eq!(eval(&Formula::and(p.clone(), q.clone()), &run), eval(&p, &run) && eval(&q, &run));
        let b = Box::new(psi);
        prop_assert_eq!(eval(&Formula::F(b.clone()), &run), eval(&Formula::FPlus(b.clone()), &run) || eval(&Formula::GF(b), &run));
    }

    #[test]
    fn disjuncts_evaluate_by_parts(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let acts = gen::action_names(&GenConfig::default());
        let phi = gen::fragment_formula(&mut rng, &acts, 4);
        let run = gen::lasso_run(&mut rng, &acts);
        for d in negate_to_dnf(&phi).unwrap() {
            prop_assert_eq!(eval(&d.to_formula(), &run), d.eval(&run));
        }
    }
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn oracle_is_invariant_under_isomorphism(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig { max_rules: 6, ..GenConfig::default() });
        let (copy, map) = isomorphic_copy(&m);
        let x = user_vars(&m)[0];
        for k in KSet::full(m.n()).subsets() {
            let a = bf_finite_accepting(&m, x, k, small()).answer();
            prop_assert_eq!(a, bf_finite_accepting(&copy, map(x), k, small()).answer());
            let w = k.subsets()[0];
            let a = bf_infinite_accepting(&m, x, k, w, Budget::nodes(2_000)).answer();
            prop_assert_eq!(a, bf_infinite_accepting(&copy, map(x), k, w, Budget::nodes(2_000)).answer());
        }
    }

    #[test]
    fn oracle_model_check_matches_disjuncts(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let cfg = GenConfig { max_rules: 6, ..GenConfig::default() };
        let m = gen::normal_form(&mut rng, &cfg);
        let x = user_vars(&m)[0];
        let phi = gen::fragment_formula(&mut rng, &gen::action_names(&cfg), 3);
        let direct = bf_model_check(&m, x, &phi, Budget::nodes(2_000)).unwrap();
        if matches!(direct, Check::Unknown(_)) {
            return Ok(());
        }
        let mut any = false;
        for d in negate_to_dnf(&phi).unwrap() {
            let (md, k, kw) = disjunct_to_mbrs(&m, &d).unwrap();
            let v = bf_infinite_accepting(&md, x, k, kw, Budget::nodes(2_000));
            prop_assert!(!v.is_unknown());
            any |= v.is_yes();
        }
        prop_assert_eq!(direct.answer() == Answer::No, any);
    }

    #[test]
    fn top_graph_is_faithful(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::push_rename(&mut rng, &GenConfig { max_rules: 6, ..GenConfig::default() });
        let x = user_vars(&m)[0];
        let g = TopGraph::new(&m).unwrap();
        let mut graph_reach = BTreeSet::from([x.index()]);
        let mut queue = VecDeque::from([x.index()]);
        while let Some(v) = queue.pop_front() {
            for &(s, _, t) in &g.edges {
                if s == v && graph_reach.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        let mut seen = BTreeSet::from([Term::var(x)]);
        let mut layer = vec![Term::var(x)];
        for _ in 0..m.vars().len() {
            layer = layer.iter().flat_map(|t| m.successors(t)).map(|(_, t)| t).filter(|t| seen.insert(t.clone())).collect();
        }
        let tops: BTreeSet<usize> = seen.iter().map(|t| last(t.single_spine().unwrap()).unwrap().index()).collect();
        prop_assert_eq!(tops, graph_reach);
    }

    #[test]
    fn sequential_witnesses_never_unbury(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::push_rename(&mut rng, &GenConfig::default());
        let vars = user_vars(&m);
        let (x, y) = (vars[0], *vars.choose(&mut rng).unwrap());
        let chain = |t: &Term| {
            let mut out = Vec::new();
            let mut s = t.single_spine().unwrap().clone();
            while !s.is_bare() {
                out.push(s.head);
                s = s.tail.single_spine().unwrap().clone();
            }
            out
        };
        for k in KSet::full(m.n()).subsets() {
            if let Verdict::Yes(d) = seq_reachable_var(&m, x, y, k).unwrap() {
                d.replay(&m).unwrap();
                prop_assert_eq!(m.maximal(&d.rules()), k);
                let mut buried = Vec::new();
                for i in 0..=d.steps.len() {
                    let now = chain(d.term_at(i));
                    prop_assert!(now.starts_with(&buried));
                    buried = now;
                }
            }
        }
    }

    #[test]
    fn smaller_rstar_keeps_yes(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let cfg = GenConfig::default();
        let m1 = gen::parallel(&mut rng, &cfg);
        let second: Vec<KSet> = (0..m1.len()).map(|_| (1..=cfg.n).filter(|_| rng.gen_bool(0.3)).collect()).collect();
        let m2 = m1.with_components(m1.n(), second).unwrap();
        let x = user_vars(&m1)[0];
        let big: BTreeSet<RuleIdx> = (0..m1.len()).filter(|_| rng.gen_bool(0.7)).collect();
        let small_set: BTreeSet<RuleIdx> = big.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        for k in KSet::full(m1.n()).subsets() {
            for kw in k.subsets() {
                let wide = par_infinite_mixed(&m1, &m2, x, k, kw, &big, small()).unwrap();
                if wide.is_yes() {
                    prop_assert!(!par_infinite_mixed(&m1, &m2, x, k, kw, &small_set, small()).unwrap().is_no());
                }
            }
        }
    }

    #[test]
    fn constructed_labels_and_components(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig::default());
        let k = KSet::full(m.n());
        let mut dec = Decider::new(&m, Budget::default()).unwrap();
        let mk = dec.parallel(k).unwrap();
        for r in 0..mk.mbrs.len() {
            let original = mk.generation[r] == 0;
            prop_assert_eq!(original, matches!(mk.mbrs.rule(r).label, Label::Action(_)));
            if !original {
                prop_assert_eq!(mk.mbrs.rule(r).label, Label::KSet(mk.mbrs.cmp(r)));
            }
        }
        let ms = dec.sequential(k).unwrap();
        for r in ms.added() {
            prop_assert!(ms.mbrs.cmp(r).is_subset(k));
            prop_assert_eq!(ms.mbrs.rule(r).label, Label::KSet(ms.mbrs.cmp(r)));
        }
        let kw = k.subsets().choose(&mut rng).copied().unwrap();
        let (pk, minf) = dec.par_omega(k, kw).unwrap();
        for r in 0..pk.mbrs.len() {
            if r < mk.mbrs.len() {
                prop_assert_eq!(pk.mbrs.cmp(r), mk.mbrs.cmp(r));
                prop_assert!(minf.cmp(r).is_empty());
            } else {
                prop_assert_eq!(pk.mbrs.rule(r).label, Label::KPair(pk.mbrs.cmp(r), minf.cmp(r)));
            }
        }
    }

    #[test]
    fn expansion_keeps_maximal(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig::default());
        let k = KSet::full(m.n());
        let mk = build_parallel_mbrs(&m, k, Budget::default()).unwrap();
        let x = *user_vars(&m).choose(&mut rng).unwrap();
        let (rho, _) = random_walk(&mut rng, &mk.mbrs, &Term::var(x), 5);
        let mut d = prsmc::system::Derivation::null(Term::var(x));
        let mut t = Term::var(x);
        for &r in &rho {
            t = mk.mbrs.apply(r, &t).into_iter().next().unwrap();
            d.steps.push((r, t.clone()));
        }
        let e = expand_witness(&m, &mk, &d).unwrap();
        prop_assert_eq!(&e.start, &d.start);
        prop_assert_eq!(m.maximal(&e.rules()), mk.mbrs.maximal(&rho));
        let ms = build_seq_mbrs(&m, &Arc::new(mk), k, Budget::default()).unwrap();
        for r in ms.added() {
            prop_assert!(ms.mbrs.cmp(r).is_subset(k));
        }
    }

    #[test]
    fn memoization_is_transparent(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let m = gen::normal_form(&mut rng, &GenConfig { max_rules: 6, ..GenConfig::default() });
        let vars = user_vars(&m);
        let mut queries: Vec<(Var, KSet, KSet)> = Vec::new();
        for &x in &vars {
            for k in KSet::full(m.n()).subsets() {
                for kw in k.subsets() {
                    queries.push((x, k, kw));
                }
            }
        }
        let mut a = Decider::new(&m, small()).unwrap();
        let first: Vec<Answer> = queries.iter().map(|&(x, k, kw)| a.problem2(x, k, kw).unwrap().answer()).collect();
        let mut order: Vec<usize> = (0..queries.len()).collect();
        order.shuffle(&mut rng);
        let mut b = Decider::new(&m, small()).unwrap();
        for i in order {
            let (x, k, kw) = queries[i];
            prop_assert_eq!(b.problem2(x, k, kw).unwrap().answer(), first[i]);
        }
    }
}
