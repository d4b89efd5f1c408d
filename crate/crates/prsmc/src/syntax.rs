//! Concrete syntax: terms, system files, and dumps.
//!
//! ```text
//! alphabet a b c
//! vars X Y
//! rule r1 : X -a-> X || Y
//! rule r2 : Y -b-> eps
//! accepting 1 : r2
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::system::{KSet, Label, Mbrs, Rule, Symbols};
use crate::terms::{canonicalize, valid_ident, RawTerm, Term, VarTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col0: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str, line: usize, col0: usize) -> Self {
        Cursor { src, pos: 0, line, col0 }
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col0 + self.pos + 1, msg: msg.into() }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().map_or(1, char::len_utf8);
        }
    }

    pub(crate) fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    pub(crate) fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    pub(crate) fn peek_ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let r = self.rest();
        let len = r.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(r.len());
        let id = &r[..len];
        valid_ident(id).then_some(id)
    }

    pub(crate) fn ident(&mut self) -> Result<&'a str, ParseError> {
        match self.peek_ident() {
            Some(id) => {
                self.pos += id.len();
                Ok(id)
            }
            None => Err(self.err("expected identifier")),
        }
    }
}

fn parse_raw_term(c: &mut Cursor) -> Result<RawTerm, ParseError> {
    let mut acc = parse_atom(c)?;
    while c.eat("||") {
        let rhs = parse_atom(c)?;
        acc = RawTerm::Par(Box::new(acc), Box::new(rhs));
    }
    Ok(acc)
}

fn parse_atom(c: &mut Cursor) -> Result<RawTerm, ParseError> {
    if c.eat("(") {
        let t = parse_raw_term(c)?;
        c.expect(")")?;
        return Ok(t);
    }
    let id = c.ident()?;
    if id == "eps" {
        return Ok(RawTerm::Eps);
    }
    c.skip_ws();
    if c.rest().starts_with(".") {
        c.expect(".")?;
        c.expect("(")?;
        let t = parse_raw_term(c)?;
        c.expect(")")?;
        return Ok(RawTerm::Seq(id.to_string(), Box::new(t)));
    }
    Ok(RawTerm::Var(id.to_string()))
}

fn term_at(c: &mut Cursor, table: &VarTable) -> Result<Term, ParseError> {
    let start = c.pos;
    let raw = parse_raw_term(c)?;
    canonicalize(&raw, table).map_err(|e| {
        let mut c2 = Cursor::new(c.src, c.line, c.col0);
        c2.pos = start;
        c2.skip_ws();
        c2.err(e.to_string())
    })
}

pub fn parse_raw(src: &str) -> Result<RawTerm, ParseError> {
    let mut c = Cursor::new(src, 1, 0);
    let t = parse_raw_term(&mut c)?;
    if !c.at_end() {
        return Err(c.err("trailing input"));
    }
    Ok(t)
}

pub fn parse_term(src: &str, table: &VarTable) -> Result<Term, ParseError> {
    let mut c = Cursor::new(src, 1, 0);
    let t = term_at(&mut c, table)?;
    if !c.at_end() {
        return Err(c.err("trailing input"));
    }
    Ok(t)
}

fn parse_kset(c: &mut Cursor) -> Result<KSet, ParseError> {
    c.expect("{")?;
    let mut k = KSet::EMPTY;
    if c.eat("}") {
        return Ok(k);
    }
    loop {
        c.skip_ws();
        let digits: String = c.rest().chars().take_while(char::is_ascii_digit).collect();
        let i: usize = digits.parse().map_err(|_| c.err("expected component index"))?;
        if i == 0 || i > 64 {
            return Err(c.err("component index out of range"));
        }
        c.pos += digits.len();
        k = k.with(i);
        if c.eat("}") {
            return Ok(k);
        }
        c.expect(",")?;
    }
}

enum RawLabel<'a> {
    Action(&'a str),
    Constructed(Label),
}

fn parse_label<'a>(c: &mut Cursor<'a>) -> Result<RawLabel<'a>, ParseError> {
    c.skip_ws();
    if c.rest().starts_with('{') {
        let k = parse_kset(c)?;
        if c.eat("/") {
            let kw = parse_kset(c)?;
            return Ok(RawLabel::Constructed(Label::KPair(k, kw)));
        }
        return Ok(RawLabel::Constructed(Label::KSet(k)));
    }
    Ok(RawLabel::Action(c.ident()?))
}

struct Line<'a> {
    no: usize,
    col0: usize,
    text: &'a str,
}

/// Parses a system file.
pub fn parse_system(src: &str) -> Result<Mbrs, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("");
        if !text.trim().is_empty() {
            lines.push(Line { no: i + 1, col0: 0, text });
        }
    }
    let mut var_names = Vec::new();
    let mut actions = Vec::new();
    let mut declared_alphabet = false;
    for l in &lines {
        let mut c = Cursor::new(l.text, l.no, l.col0);
        let kw = c.ident()?;
        match kw {
            "vars" | "alphabet" => {
                while !c.at_end() {
                    let id = c.ident()?;
                    if kw == "vars" {
                        if VarTable::new([id]).is_err() {
                            return Err(c.err(format!("`{id}` is reserved")));
                        }
                        var_names.push(id.to_string());
                    } else {
                        actions.push(id.to_string());
                        declared_alphabet = true;
                    }
                }
            }
            "rule" | "accepting" => {}
            _ => return Err(Cursor::new(l.text, l.no, l.col0).err(format!("unknown directive `{kw}`"))),
        }
    }
    let table = VarTable::new(var_names.iter().cloned()).expect("validated");

    struct PendingRule<'a> {
        id: String,
        lhs: Term,
        label: RawLabel<'a>,
        rhs: Term,
        at: (usize, usize),
    }
    let mut pending = Vec::new();
    let mut accepting: Vec<(usize, Vec<(String, (usize, usize))>)> = Vec::new();
    for l in &lines {
        let mut c = Cursor::new(l.text, l.no, l.col0);
        match c.ident()? {
            "rule" => {
                let id = c.ident()?.to_string();
                c.expect(":")?;
                let lhs = term_at(&mut c, &table)?;
                c.expect("-")?;
                c.skip_ws();
                let at = (l.no, c.col0 + c.pos + 1);
                let label = parse_label(&mut c)?;
                c.expect("->")?;
                let rhs = term_at(&mut c, &table)?;
                if !c.at_end() {
                    return Err(c.err("trailing input"));
                }
                if lhs.is_eps() {
                    return Err(ParseError { line: l.no, col: 1, msg: format!("rule `{id}` has an empty left-hand side") });
                }
                pending.push(PendingRule { id, lhs, label, rhs, at });
            }
            "accepting" => {
                c.skip_ws();
                let digits: String = c.rest().chars().take_while(char::is_ascii_digit).collect();
                let i: usize = digits.parse().map_err(|_| c.err("expected component index"))?;
                if i == 0 || i > 64 {
                    return Err(c.err("component index out of range"));
                }
                c.pos += digits.len();
                c.expect(":")?;
                let mut ids = Vec::new();
                while !c.at_end() {
                    let at = (l.no, c.col0 + c.pos + 1);
                    ids.push((c.ident()?.to_string(), at));
                }
                accepting.push((i, ids));
            }
            _ => {}
        }
    }
    if !declared_alphabet {
        for p in &pending {
            if let RawLabel::Action(a) = p.label {
                actions.push(a.to_string());
            }
        }
    }
    let syms = Arc::new(Symbols::new(table, actions));
    let n = accepting.iter().map(|(i, _)| *i).max().unwrap_or(0);
    let mut index = BTreeMap::new();
    let mut rules = Vec::new();
    for p in pending {
        let label = match p.label {
            RawLabel::Action(a) => Label::Action(syms.action(a).ok_or_else(|| ParseError {
                line: p.at.0,
                col: p.at.1,
                msg: format!("action `{a}` not in the alphabet"),
            })?),
            RawLabel::Constructed(l) => l,
        };
        if index.insert(p.id.clone(), rules.len()).is_some() {
            return Err(ParseError { line: p.at.0, col: 1, msg: format!("duplicate rule id `{}`", p.id) });
        }
        rules.push((Rule { id: p.id, lhs: p.lhs, label, rhs: p.rhs }, KSet::EMPTY));
    }
    for (i, ids) in accepting {
        for (id, at) in ids {
            let &r = index.get(&id).ok_or_else(|| ParseError { line: at.0, col: at.1, msg: format!("unknown rule id `{id}`") })?;
            rules[r].1 = rules[r].1.with(i);
        }
    }
    Mbrs::new(syms, n, rules).map_err(|e| ParseError { line: 1, col: 1, msg: e.to_string() })
}

/// Renders a system in the file format; `notes` adds a comment above a rule.
pub fn dump_system(m: &Mbrs, notes: &BTreeMap<usize, String>) -> String {
    let mut out = String::new();
    let syms = &m.syms;
    let _ = writeln!(out, "alphabet {}", syms.actions.join(" "));
    let vars: Vec<&str> = syms.vars.user_vars().map(|v| syms.vars.name(v)).collect();
    let _ = writeln!(out, "vars {}", vars.join(" "));
    for (i, r) in m.rules().iter().enumerate() {
        if let Some(note) = notes.get(&i) {
            let _ = writeln!(out, "# {note}");
        }
        let _ = writeln!(out, "rule {} : {} -{}-> {}", r.id, syms.term(&r.lhs), syms.label(&r.label), syms.term(&r.rhs));
    }
    for i in 1..=m.n() {
        let ids: Vec<&str> = m.component(i).into_iter().map(|r| m.rule(r).id.as_str()).collect();
        let sep = if ids.is_empty() { "" } else { " " };
        let _ = writeln!(out, "accepting {i} :{sep}{}", ids.join(" "));
    }
    out
}

/// Structural comparison used by round-trip checks.
pub fn same_system(a: &Mbrs, b: &Mbrs) -> bool {
    a.n() == b.n()
        && a.syms == b.syms
        && a.rules() == b.rules()
        && a.cmps() == b.cmps()
}

pub struct RuleDisplay<'a>(pub &'a Mbrs, pub usize);

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0.rule(self.1);
        let s = &self.0.syms;
        write!(f, "{} : {} -{}-> {}", r.id, s.term(&r.lhs), s.label(&r.label), s.term(&r.rhs))
    }
}

pub fn var_names(m: &Mbrs) -> BTreeSet<String> {
    m.vars().user_vars().map(|v| m.vars().name(v).to_string()).collect()
}
