//! `prs-mc`: decide, model check and dump constructions for process rewrite
//! systems. Exit status 0/1/2 is the three-valued verdict; 3 is a usage or
//! parse error and 4 an internal failure.

mod witness_json;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use prsmc::altl::{in_fragment, parse_formula};
use prsmc::compare::{differential, CompareConfig};
use prsmc::construct::{recipe_notes, Constructed};
use prsmc::decide::{model_check_infinite, Decider, PUMPS};
use prsmc::gen::GenConfig;
use prsmc::oracle::bf_infinite_accepting;
use prsmc::syntax::{dump_system, parse_system};
use prsmc::system::{KSet, Mbrs};
use prsmc::terms::Var;
use prsmc::verdict::{Answer, Budget, Check, Verdict};
use prsmc::witness::concretize;

#[derive(Parser)]
#[command(name = "prs-mc", version, about = "Decide finite and infinite acceptance and check action properties of process rewrite systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Node budget for each engine search.
    #[arg(long, global = true, env = "PRSMC_BUDGET_NODES", default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    node_budget: u64,
    /// Depth budget for each engine search.
    #[arg(long, global = true, default_value_t = 14, value_parser = clap::value_parser!(u64).range(1..))]
    depth_budget: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that every infinite run from a variable satisfies a formula.
    Check {
        #[arg(short = 's', long)]
        system: PathBuf,
        #[arg(short = 'x', long)]
        start: String,
        #[arg(short = 'f', long)]
        formula: String,
        #[arg(long)]
        json: bool,
    },
    /// Finite acceptance for `--K`, infinite acceptance when `--Komega` is given.
    Decide {
        #[arg(short = 's', long)]
        system: PathBuf,
        #[arg(short = 'x', long, required_unless_present = "validate")]
        start: Option<String>,
        #[arg(long = "K", required_unless_present = "validate")]
        k: Option<String>,
        #[arg(long = "Komega")]
        komega: Option<String>,
        #[arg(long)]
        json: bool,
        /// Replay a witness document against the system instead of deciding.
        #[arg(long, conflicts_with_all = ["start", "k", "komega"])]
        validate: Option<PathBuf>,
    },
    /// Print a constructed system in the input format.
    Dump {
        #[arg(long, value_enum)]
        what: What,
        #[arg(short = 's', long)]
        system: PathBuf,
        #[arg(long = "K")]
        k: String,
        #[arg(long = "Komega")]
        komega: Option<String>,
    },
    /// Compare the engine with the brute-force oracle on random systems.
    OracleCompare {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        max_vars: usize,
        #[arg(long, default_value_t = 8)]
        max_rules: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Par,
    Paromega,
    Seq,
}

/// Bad input from the command line or a file; exit status 3.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn load(path: &Path) -> Result<Mbrs> {
    let src = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    parse_system(&src).map_err(|e| Usage(format!("{}:{e}", path.display())).into())
}

fn start_var(m: &Mbrs, name: &str) -> Result<Var> {
    match m.var(name) {
        Some(v) if m.vars().user_vars().any(|u| u == v) => Ok(v),
        _ => usage(format!("unknown start variable `{name}`")),
    }
}

/// `1,2`, `{1,2}`, or empty for the empty set.
fn kset(m: &Mbrs, flag: &str, text: &str) -> Result<KSet> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut k = KSet::EMPTY;
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let i: usize = part.parse().map_err(|_| Usage(format!("{flag}: `{part}` is not a component index")))?;
        if i == 0 || i > m.n() {
            return usage(format!("{flag}: component {i} out of range 1..={}", m.n()));
        }
        k = k.with(i);
    }
    Ok(k)
}

fn answer_code(a: Answer) -> ExitCode {
    ExitCode::from(match a {
        Answer::Yes => 0,
        Answer::No => 1,
        Answer::Unknown => 2,
    })
}

struct Outcome {
    answer: Answer,
    /// Shown in text after the answer, as in `No (Kω ⊄ K)`.
    note: Option<String>,
    witness: Option<Value>,
}

impl Outcome {
    fn emit(self, label: &str, json_out: bool) -> ExitCode {
        if json_out {
            let doc = json!({"verdict": label, "note": self.note, "witness": self.witness});
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        } else {
            match &self.note {
                Some(n) => println!("{label} ({n})"),
                None => println!("{label}"),
            }
            if let Some(w) = &self.witness {
                println!("{}", serde_json::to_string_pretty(w).expect("serializable"));
            }
        }
        answer_code(self.answer)
    }
}

fn budget(cli: &Cli) -> Budget {
    Budget { nodes: cli.node_budget as usize, depth: cli.depth_budget as usize }
}

fn check(m: &Mbrs, start: &str, formula: &str, budget: Budget, json_out: bool) -> Result<ExitCode> {
    let x = start_var(m, start)?;
    let phi = parse_formula(formula).map_err(|e| Usage(format!("formula:{e}")))?;
    if !in_fragment(&phi) {
        return usage(format!("formula `{phi}` is not in the supported fragment"));
    }
    let (label, out) = match model_check_infinite(m, x, &phi, budget)? {
        Check::Holds => ("Holds", Outcome { answer: Answer::Yes, note: None, witness: None }),
        Check::Violated(c) => {
            let note = Some(format!("run satisfies {}", c.disjunct));
            ("Violated", Outcome { answer: Answer::No, note, witness: Some(witness_json::counterexample(m, &c)) })
        }
        Check::Unknown(why) => ("Unknown", Outcome { answer: Answer::Unknown, note: Some(why), witness: None }),
    };
    Ok(out.emit(label, json_out))
}

fn decide(m: &Mbrs, start: &str, k: KSet, kw: Option<KSet>, budget: Budget) -> Result<Outcome> {
    let x = start_var(m, start)?;
    let mut dec = Decider::new(m, budget)?;
    let Some(kw) = kw else {
        return Ok(match dec.problem1(x, k)? {
            Verdict::Yes(d) => {
                let c = dec.parallel(k)?;
                let w = witness_json::finite(m, &d, &k.to_string(), Some(&c));
                Outcome { answer: Answer::Yes, note: None, witness: Some(w) }
            }
            Verdict::No => Outcome { answer: Answer::No, note: None, witness: None },
            Verdict::Unknown(why) => Outcome { answer: Answer::Unknown, note: Some(why), witness: None },
        });
    };
    if !kw.is_subset(k) {
        return Ok(Outcome { answer: Answer::No, note: Some("Kω ⊄ K".into()), witness: None });
    }
    Ok(match dec.problem2(x, k, kw)? {
        Verdict::Yes(cert) => {
            let l = concretize(m, &cert, PUMPS)?;
            Outcome { answer: Answer::Yes, note: None, witness: Some(witness_json::infinite(m, &l, &cert)) }
        }
        Verdict::No if k.is_empty() => {
            // Without rules every infinite run fires some component, so the
            // empty target rests on a characterization the oracle may confirm.
            let note = match bf_infinite_accepting(m, x, k, kw, Budget::nodes(budget.nodes)) {
                Verdict::No => "base case, confirmed by exhaustive search",
                Verdict::Yes(_) => "base case, exhaustive search disagrees",
                Verdict::Unknown(_) => "base-case, unverified characterization",
            };
            Outcome { answer: Answer::No, note: Some(note.into()), witness: None }
        }
        Verdict::No => Outcome { answer: Answer::No, note: None, witness: None },
        Verdict::Unknown(why) => Outcome { answer: Answer::Unknown, note: Some(why), witness: None },
    })
}

fn validate(m: &Mbrs, path: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Usage(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    let doc = match doc.get("witness") {
        Some(w) if doc.get("verdict").is_some() => w.clone(),
        _ => doc,
    };
    if doc.is_null() {
        return usage(format!("{}: no witness in document", path.display()));
    }
    Ok(match witness_json::validate(m, &doc) {
        Ok(what) => {
            println!("valid: {what}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("invalid: {e:#}");
            ExitCode::from(1)
        }
    })
}

fn warn_incomplete(c: &Constructed, m: &Mbrs) {
    if !c.is_complete() {
        let names: Vec<&str> = c.unknown.iter().map(|v| m.vars().name(*v)).collect();
        eprintln!("warning: construction under-saturated; inconclusive queries below {}", names.join(", "));
    }
}

fn dump(m: &Mbrs, what: What, k: KSet, kw: Option<KSet>, budget: Budget) -> Result<ExitCode> {
    let mut dec = Decider::new(m, budget)?;
    let text = match what {
        What::Par => {
            let c = dec.parallel(k)?;
            warn_incomplete(&c, m);
            dump_system(&c.mbrs, &recipe_notes(&c, m))
        }
        What::Seq => {
            let c = dec.sequential(k)?;
            let mk = dec.parallel(k)?;
            warn_incomplete(&mk, m);
            warn_incomplete(&c, m);
            dump_system(&c.mbrs, &recipe_notes(&c, m))
        }
        What::Paromega => {
            let Some(kw) = kw else { return usage("--what paromega needs --Komega") };
            if !kw.is_subset(k) {
                return usage("--Komega must be a subset of --K");
            }
            let (c, minf) = dec.par_omega(k, kw)?;
            warn_incomplete(&c, m);
            let mut notes = recipe_notes(&c, m);
            for (r, note) in notes.iter_mut() {
                let inf = minf.cmp(*r);
                if !inf.is_empty() {
                    note.push_str(&format!("; infinite components {inf}"));
                }
            }
            dump_system(&c.mbrs, &notes)
        }
    };
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let budget = budget(cli);
    match &cli.cmd {
        Cmd::Check { system, start, formula, json } => check(&load(system)?, start, formula, budget, *json),
        Cmd::Decide { system, validate: Some(w), .. } => validate(&load(system)?, w),
        Cmd::Decide { system, start, k, komega, json, validate: None } => {
            let m = load(system)?;
            let start = start.as_deref().context("missing --start")?;
            let k = kset(&m, "--K", k.as_deref().context("missing --K")?)?;
            let kw = komega.as_deref().map(|t| kset(&m, "--Komega", t)).transpose()?;
            let out = decide(&m, start, k, kw, budget)?;
            let label = out.answer.to_string();
            Ok(out.emit(&label, *json))
        }
        Cmd::Dump { what, system, k, komega } => {
            let m = load(system)?;
            let k = kset(&m, "--K", k)?;
            let kw = komega.as_deref().map(|t| kset(&m, "--Komega", t)).transpose()?;
            dump(&m, *what, k, kw, budget)
        }
        Cmd::OracleCompare { seed, count, max_vars, max_rules, n } => {
            if *max_vars == 0 || *max_rules == 0 {
                return usage("size caps must be positive");
            }
            let cfg = CompareConfig {
                gen: GenConfig { max_vars: *max_vars, max_rules: *max_rules, n: *n, ..GenConfig::default() },
                engine: budget,
                ..CompareConfig::default()
            };
            let rep = differential(*seed, *count, &cfg);
            print!("{rep}");
            Ok(if rep.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) if e.is::<Usage>() => {
            eprintln!("prs-mc: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("prs-mc: {e:#}");
            ExitCode::from(4)
        }
    }
}
