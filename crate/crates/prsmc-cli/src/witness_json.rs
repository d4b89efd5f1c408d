//! Witness documents: `{start, steps:[{rule, term_after}], lasso, certificates}`.
//! Terms use the system file syntax, so a document replays against the system
//! it came from with nothing else.

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use prsmc::construct::Constructed;
use prsmc::decide::{Counterexample, PUMPS};
use prsmc::par_engine::MixedWitness;
use prsmc::syntax::parse_term;
use prsmc::system::{Derivation, Lasso, Mbrs, RuleIdx};
use prsmc::witness::{CertBody, ConcreteLasso, InfCert};

fn ids(m: &Mbrs, rules: &[RuleIdx]) -> Value {
    json!(m.rule_ids(rules))
}

fn steps(m: &Mbrs, d: &Derivation) -> Value {
    Value::Array(d.steps.iter().map(|(r, t)| json!({"rule": m.rule(*r).id, "term_after": m.syms.term(t)})).collect())
}

fn inf_cert(m: &Mbrs, c: &InfCert) -> Value {
    let name = |v| m.vars().name(v).to_string();
    let (kind, body) = match &c.body {
        CertBody::Seq { seq, stem, cycle } => ("sequential", json!({"stem": ids(&seq.mbrs, stem), "cycle": ids(&seq.mbrs, cycle)})),
        CertBody::Mixed { seq, prefix, via, par, witness } => {
            let par_part = match witness {
                MixedWitness::Finite(f) => json!({"finite": ids(&par.mbrs, f)}),
                MixedWitness::Infinite { stem, cycle } => json!({"stem": ids(&par.mbrs, stem), "self_covering": ids(&par.mbrs, cycle)}),
            };
            ("mixed", json!({"prefix": ids(&seq.mbrs, prefix), "via": name(*via), "parallel": par_part}))
        }
    };
    json!({"kind": "infinite", "start": name(c.start), "K": c.k.to_string(), "Komega": c.kw.to_string(), "body": kind, "witness": body})
}

pub fn finite(m: &Mbrs, d: &Derivation, k: &str, constructed: Option<&Constructed>) -> Value {
    let mut cert = json!({"kind": "finite", "K": k});
    if let Some(c) = constructed {
        cert["construction_rules"] = json!(c.mbrs.len());
    }
    json!({"start": m.syms.term(&d.start), "steps": steps(m, d), "lasso": Value::Null, "certificates": [cert]})
}

pub fn infinite(m: &Mbrs, l: &ConcreteLasso, cert: &InfCert) -> Value {
    let stem = &l.lasso.stem;
    json!({
        "start": m.syms.term(&stem.start),
        "steps": steps(m, stem),
        "lasso": {"stem": ids(m, &stem.rules()), "cycle": ids(m, &l.lasso.cycle)},
        "certificates": [inf_cert(m, cert)],
    })
}

pub fn counterexample(m: &Mbrs, c: &Counterexample) -> Value {
    let mut doc = infinite(m, &c.witness, &c.cert);
    let mc = json!({
        "kind": "model_check",
        "disjunct": c.disjunct.to_string(),
        "run": {"stem": c.run.stem, "cycle": c.run.cycle},
    });
    doc["certificates"].as_array_mut().expect("array").insert(0, mc);
    doc
}

fn rule(m: &Mbrs, v: &Value) -> Result<RuleIdx> {
    let id = v.as_str().ok_or_else(|| anyhow!("rule id must be a string"))?;
    m.lookup(id).ok_or_else(|| anyhow!("unknown rule `{id}`"))
}

/// Replays a witness document; the lasso, when present, for a few rounds.
pub fn validate(m: &Mbrs, doc: &Value) -> Result<String> {
    let term = |v: &Value| -> Result<_> {
        let s = v.as_str().ok_or_else(|| anyhow!("term must be a string"))?;
        parse_term(s, m.vars()).map_err(|e| anyhow!("term `{s}`: {e}"))
    };
    let start = term(doc.get("start").ok_or_else(|| anyhow!("missing `start`"))?)?;
    let mut d = Derivation::null(start);
    for (i, s) in doc.get("steps").and_then(Value::as_array).ok_or_else(|| anyhow!("missing `steps`"))?.iter().enumerate() {
        let r = rule(m, &s["rule"]).with_context(|| format!("step {}", i + 1))?;
        let t = term(&s["term_after"]).with_context(|| format!("step {}", i + 1))?;
        d.steps.push((r, t));
    }
    d.replay(m)?;
    match doc.get("lasso") {
        None | Some(Value::Null) => Ok(format!("derivation of {} steps replays", d.steps.len())),
        Some(l) => {
            let list = |key: &str| -> Result<Vec<RuleIdx>> {
                l.get(key).and_then(Value::as_array).ok_or_else(|| anyhow!("lasso lacks `{key}`"))?.iter().map(|v| rule(m, v)).collect()
            };
            if list("stem")? != d.rules() {
                bail!("lasso stem differs from the steps");
            }
            let cycle = list("cycle")?;
            let n = cycle.len();
            Lasso { stem: d, cycle }.validate(m, PUMPS)?;
            Ok(format!("lasso with a {n}-rule cycle replays for {PUMPS} rounds"))
        }
    }
}
