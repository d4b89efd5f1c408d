//! Differential runs of the decision procedures against the oracle on
//! random systems. Any disagreement, engine `Unknown` on an instance the
//! oracle decides, or witness that fails to replay is recorded.

use std::fmt::{self, Write as _};

use crate::altl::{eval, Formula, LassoRun};
use crate::decide::{model_check_infinite, Decider, PUMPS};
use crate::gen::{self, GenConfig};
use crate::oracle::{bf_finite_accepting, bf_infinite_accepting, bf_model_check, explore};
use crate::par_engine::{validate_self_covering, MixedWitness};
use crate::syntax::dump_system;
use crate::system::{KSet, Mbrs};
use crate::terms::{Term, Var};
use crate::verdict::{Budget, Check, Verdict};
use crate::witness::{concretize, CertBody};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub compared: usize,
    pub agreed: usize,
    /// Instances the oracle could not decide.
    pub skipped: usize,
}

impl Tally {
    pub fn ok(&self) -> bool {
        self.compared == self.agreed
    }
}

impl fmt::Display for Tally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} agree, {} skipped", self.agreed, self.compared, self.skipped)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub systems: usize,
    pub problem1: Tally,
    pub problem2: Tally,
    pub model_check: Tally,
    pub witnesses: Tally,
    pub failures: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, m: &Mbrs, what: String) {
        let mut s = what;
        let _ = write!(s, "\n{}", dump_system(m, &Default::default()));
        self.failures.push(s);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "systems: {}", self.systems)?;
        writeln!(f, "problem1: {}", self.problem1)?;
        writeln!(f, "problem2: {}", self.problem2)?;
        writeln!(f, "model_check: {}", self.model_check)?;
        writeln!(f, "witnesses: {}/{} replay", self.witnesses.agreed, self.witnesses.compared)?;
        writeln!(f, "disagreements: {}", self.failures.len())?;
        for d in &self.failures {
            writeln!(f, "---\n{d}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CompareConfig {
    pub gen: GenConfig,
    pub engine: Budget,
    /// Product search bound for finite acceptance.
    pub finite_oracle: Budget,
    /// State graph bound for infinite acceptance and model checking.
    pub closed_nodes: usize,
    pub formulas_per_system: usize,
    pub formula_depth: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            gen: GenConfig::default(),
            engine: Budget::default(),
            finite_oracle: Budget { nodes: 5_000, depth: 12 },
            closed_nodes: 5_000,
            formulas_per_system: 2,
            formula_depth: 4,
        }
    }
}

fn start_var(m: &Mbrs) -> Var {
    m.vars().user_vars().next().expect("generated systems have a variable")
}

/// Compares finite acceptance for every `K`.
pub fn problem1_round(m: &Mbrs, cfg: &CompareConfig, rep: &mut Report) {
    let x = start_var(m);
    let mut dec = Decider::new(m, cfg.engine).expect("normal form");
    for k in KSet::full(m.n()).subsets() {
        let oracle = bf_finite_accepting(m, x, k, cfg.finite_oracle);
        if oracle.is_unknown() {
            rep.problem1.skipped += 1;
            continue;
        }
        rep.problem1.compared += 1;
        let engine = match dec.problem1(x, k) {
            Ok(v) => v,
            Err(e) => {
                rep.fail(m, format!("problem1 K={k}: error {e}"));
                continue;
            }
        };
        if engine.answer() == oracle.answer() {
            rep.problem1.agreed += 1;
        } else {
            rep.fail(m, format!("problem1 K={k}: engine {} oracle {}", engine.answer(), oracle.answer()));
        }
        if let Verdict::Yes(d) = engine {
            rep.witnesses.compared += 1;
            match d.replay(m) {
                Ok(()) if d.start == Term::var(x) && m.maximal(&d.rules()) == k => rep.witnesses.agreed += 1,
                Ok(()) => rep.fail(m, format!("problem1 K={k}: witness maximal {}", m.maximal(&d.rules()))),
                Err(e) => rep.fail(m, format!("problem1 K={k}: witness replay {e}")),
            }
        }
    }
}

/// Whether the whole state graph from the start variable closes.
pub fn closes(m: &Mbrs, cfg: &CompareConfig) -> bool {
    explore(m, &Term::var(start_var(m)), cfg.closed_nodes).closed
}

/// Compares infinite acceptance for every `Kω ⊆ K`.
pub fn problem2_round(m: &Mbrs, cfg: &CompareConfig, rep: &mut Report) {
    let x = start_var(m);
    let mut dec = Decider::new(m, cfg.engine).expect("normal form");
    let oracle_budget = Budget::nodes(cfg.closed_nodes);
    for k in KSet::full(m.n()).subsets() {
        for kw in k.subsets() {
            let oracle = bf_infinite_accepting(m, x, k, kw, oracle_budget);
            if oracle.is_unknown() {
                rep.problem2.skipped += 1;
                continue;
            }
            rep.problem2.compared += 1;
            let engine = match dec.problem2(x, k, kw) {
                Ok(v) => v,
                Err(e) => {
                    rep.fail(m, format!("problem2 K={k} Kω={kw}: error {e}"));
                    continue;
                }
            };
            if engine.answer() == oracle.answer() {
                rep.problem2.agreed += 1;
            } else {
                let base = if k.is_empty() { " (base case)" } else { "" };
                rep.fail(m, format!("problem2 K={k} Kω={kw}{base}: engine {} oracle {}", engine.answer(), oracle.answer()));
            }
            if let Verdict::Yes(cert) = engine {
                rep.witnesses.compared += 1;
                let mut sc_ok = true;
                if let CertBody::Mixed { par, via, witness: MixedWitness::Infinite { stem, cycle }, .. } = &cert.body {
                    sc_ok = validate_self_covering(&par.mbrs, *via, stem, cycle, PUMPS);
                }
                match concretize(m, &cert, PUMPS) {
                    Ok(l) if sc_ok && l.maxima(m) == (k, kw) => rep.witnesses.agreed += 1,
                    Ok(l) => rep.fail(m, format!("problem2 K={k} Kω={kw}: lasso maxima {:?}, self-covering {sc_ok}", l.maxima(m))),
                    Err(e) => rep.fail(m, format!("problem2 K={k} Kω={kw}: {e}")),
                }
            }
        }
    }
}

/// Compares model checking of `phi` from the start variable.
pub fn model_check_round(m: &Mbrs, phi: &Formula, cfg: &CompareConfig, rep: &mut Report) {
    let x = start_var(m);
    let oracle = match bf_model_check(m, x, phi, Budget::nodes(cfg.closed_nodes)) {
        Ok(Check::Unknown(_)) => {
            rep.model_check.skipped += 1;
            return;
        }
        Ok(c) => c.answer(),
        Err(e) => {
            rep.fail(m, format!("oracle rejected `{phi}`: {e}"));
            return;
        }
    };
    rep.model_check.compared += 1;
    let engine = match model_check_infinite(m, x, phi, cfg.engine) {
        Ok(c) => c,
        Err(e) => {
            rep.fail(m, format!("model check `{phi}`: error {e}"));
            return;
        }
    };
    if engine.answer() == oracle {
        rep.model_check.agreed += 1;
    } else {
        rep.fail(m, format!("model check `{phi}`: engine {} oracle {oracle}", engine.answer()));
    }
    if let Check::Violated(c) = engine {
        rep.witnesses.compared += 1;
        let run = LassoRun::from_rules(m, &c.witness.lasso.stem.rules(), &c.witness.lasso.cycle);
        match c.witness.unrolled.replay(m) {
            Ok(()) if !eval(phi, &run) => rep.witnesses.agreed += 1,
            Ok(()) => rep.fail(m, format!("model check `{phi}`: counterexample satisfies the formula")),
            Err(e) => rep.fail(m, format!("model check `{phi}`: counterexample replay {e}")),
        }
    }
}

/// Generates `count` systems from `seed` and runs every comparison on them.
/// Infinite acceptance and model checking only use systems whose state
/// graph closes.
pub fn differential(seed: u64, count: usize, cfg: &CompareConfig) -> Report {
    let mut rng = gen::rng(seed);
    let acts = gen::action_names(&cfg.gen);
    let mut rep = Report::default();
    for _ in 0..count {
        let m = gen::normal_form(&mut rng, &cfg.gen);
        rep.systems += 1;
        problem1_round(&m, cfg, &mut rep);
        if closes(&m, cfg) {
            problem2_round(&m, cfg, &mut rep);
            for _ in 0..cfg.formulas_per_system {
                let phi = gen::fragment_formula(&mut rng, &acts, cfg.formula_depth);
                model_check_round(&m, &phi, cfg, &mut rep);
            }
        } else {
            rep.problem2.skipped += 1;
        }
    }
    rep
}
