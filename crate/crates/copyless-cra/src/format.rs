//! Line-oriented file formats for the three machine kinds, with
//! line-numbered diagnostics and canonical serialization.
//!
//! CRA files carry `semiring:`, `alphabet:`, `registers:` (in increasing
//! order), `init: r = <value>`, `start:`, `trans: q --a--> q' [ <subst> ]`
//! and `output: q = <expr>` lines. Weighted automata use `state <name>
//! I=<val> F=<val>` and `edge <p> -<a>/<w>-> <q>` lines. Lookahead machines
//! add `lang <name> { states: ...; start: ...; final: ...; trans: p -a-> q }`
//! blocks, guard transitions `trans: q --[<name>]--> q' [ <subst> ]` and an
//! optional `alt-bound:`. Lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::cra::Cra;
use crate::error::{CraError, Result};
use crate::expr::{parse_expr, Expr};
use crate::lookahead::{CraRla, Dfa};
use crate::semiring::{SemiringSpec, SemiringValue};
use crate::subst::{parse_subst, RegisterOrder, Substitution};
use crate::weighted::WeightedAutomaton;

/// A parsed machine file of any of the three kinds.
#[derive(Debug, Clone)]
pub enum AutomatonDoc {
    Cra(Cra),
    Wa(WeightedAutomaton),
    Rla(CraRla),
}

fn perr(line: usize, msg: impl Into<String>) -> CraError {
    CraError::Parse { line, msg: msg.into() }
}

fn at(line: usize, r: Result<impl Sized>) -> Result<()> {
    match r {
        Ok(_) => Ok(()),
        Err(CraError::Parse { .. }) => r.map(|_| ()),
        Err(e) => Err(perr(line, e.to_string())),
    }
}

/// Numbered, non-blank, non-comment lines.
fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

struct Header {
    semiring: Option<(usize, SemiringSpec)>,
    alphabet: Option<(usize, Vec<char>)>,
    registers: Option<(usize, Vec<String>)>,
    init: Vec<(usize, String, SemiringValue)>,
    start: Option<(usize, String)>,
}

impl Header {
    fn semiring(&self) -> Result<SemiringSpec> {
        self.semiring.as_ref().map(|(_, s)| *s).ok_or_else(|| perr(0, "missing `semiring:` line"))
    }

    fn alphabet(&self) -> Result<Vec<char>> {
        self.alphabet.clone().map(|(_, a)| a).ok_or_else(|| perr(0, "missing `alphabet:` line"))
    }

    fn registers(&self) -> Result<Vec<String>> {
        self.registers.clone().map(|(_, r)| r).ok_or_else(|| perr(0, "missing `registers:` line"))
    }

    fn start(&self) -> Result<String> {
        self.start.clone().map(|(_, s)| s).ok_or_else(|| perr(0, "missing `start:` line"))
    }

    fn init_subst(&self, regs: &[String], spec: SemiringSpec) -> Result<Substitution> {
        let mut map = BTreeMap::new();
        for (ln, r, v) in &self.init {
            if !regs.contains(r) {
                return Err(perr(*ln, format!("unknown register `{r}` in init")));
            }
            at(*ln, spec.validate(*v))?;
            if map.insert(r.clone(), Expr::Const(*v)).is_some() {
                return Err(perr(*ln, format!("register `{r}` initialized twice")));
            }
        }
        for r in regs {
            if !map.contains_key(r) {
                return Err(perr(0, format!("register `{r}` has no init line")));
            }
        }
        Substitution::new(regs.to_vec(), map)
    }

    /// Tries to consume a shared header line; reports whether it matched.
    fn take(&mut self, ln: usize, key: &str, value: &str) -> Result<bool> {
        match key {
            "semiring" => {
                let s = SemiringSpec::from_str(value).map_err(|e| perr(ln, e.to_string()))?;
                self.semiring = Some((ln, s));
            }
            "alphabet" => {
                let mut chars = Vec::new();
                for tok in value.split_whitespace() {
                    let mut it = tok.chars();
                    match (it.next(), it.next()) {
                        (Some(c), None) => chars.push(c),
                        _ => return Err(perr(ln, format!("alphabet symbol `{tok}` is not a single character"))),
                    }
                }
                if chars.is_empty() {
                    return Err(perr(ln, "empty alphabet"));
                }
                self.alphabet = Some((ln, chars));
            }
            "registers" => {
                let regs: Vec<String> = value.split_whitespace().map(String::from).collect();
                if regs.is_empty() {
                    return Err(perr(ln, "empty register list"));
                }
                self.registers = Some((ln, regs));
            }
            "init" => {
                let (r, v) = value
                    .split_once('=')
                    .ok_or_else(|| perr(ln, "expected `init: <reg> = <value>`"))?;
                let v = SemiringValue::from_str(v.trim()).map_err(|e| perr(ln, e.to_string()))?;
                self.init.push((ln, r.trim().to_string(), v));
            }
            "start" => self.start = Some((ln, value.to_string())),
            _ => return Ok(false),
        }
        Ok(true)
    }
}

fn empty_header() -> Header {
    Header { semiring: None, alphabet: None, registers: None, init: Vec::new(), start: None }
}

/// Splits `<q> --<label>--> <q2> [ <subst> ]` into its three parts.
fn split_trans(ln: usize, value: &str) -> Result<(String, String, String, String)> {
    let (left, rest) = value
        .split_once("-->")
        .ok_or_else(|| perr(ln, "expected `<q> --<label>--> <q'> [ <subst> ]`"))?;
    let (q, label) = left
        .trim()
        .rsplit_once("--")
        .ok_or_else(|| perr(ln, "expected `--<label>-->` in transition"))?;
    let rest = rest.trim();
    let (q2, subst) = match rest.split_once('[') {
        Some((q2, tail)) => {
            let body = tail
                .strip_suffix(']')
                .ok_or_else(|| perr(ln, "unterminated `[` in transition"))?;
            (q2.trim(), body.trim())
        }
        None => return Err(perr(ln, "missing `[ <subst> ]` in transition")),
    };
    Ok((q.trim().to_string(), label.trim().to_string(), q2.to_string(), subst.to_string()))
}

fn push_state(states: &mut Vec<String>, q: &str) {
    if !states.iter().any(|s| s == q) {
        states.push(q.to_string());
    }
}

pub fn parse_cra(text: &str) -> Result<Cra> {
    let mut header = empty_header();
    let mut trans_lines = Vec::new();
    let mut output_lines = Vec::new();
    for (ln, line) in content_lines(text) {
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| perr(ln, format!("unrecognized line `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if header.take(ln, key, value)? {
            continue;
        }
        match key {
            "trans" => trans_lines.push((ln, value.to_string())),
            "output" => output_lines.push((ln, value.to_string())),
            _ => return Err(perr(ln, format!("unrecognized line `{line}`"))),
        }
    }
    let spec = header.semiring()?;
    let alphabet = header.alphabet()?;
    let regs = header.registers()?;
    let init = header.init_subst(&regs, spec)?;
    let start = header.start()?;

    let mut states = vec![start.clone()];
    let mut delta = BTreeMap::new();
    for (ln, value) in &trans_lines {
        let (q, label, q2, subst_text) = split_trans(*ln, value)?;
        let mut it = label.chars();
        let sym = match (it.next(), it.next()) {
            (Some(c), None) => c,
            _ => return Err(perr(*ln, format!("transition symbol `{label}` is not a single character"))),
        };
        if !alphabet.contains(&sym) {
            return Err(perr(*ln, format!("symbol `{sym}` is not in the alphabet")));
        }
        let sigma = parse_subst(&subst_text, &regs, spec).map_err(|e| perr(*ln, e.to_string()))?;
        push_state(&mut states, &q);
        push_state(&mut states, &q2);
        if delta.insert((q.clone(), sym), (q2, sigma)).is_some() {
            return Err(perr(*ln, format!("duplicate transition for state `{q}` on `{sym}`")));
        }
    }
    let mut output = BTreeMap::new();
    for (ln, value) in &output_lines {
        let (q, e) = value
            .split_once('=')
            .ok_or_else(|| perr(*ln, "expected `output: <state> = <expr>`"))?;
        let q = q.trim().to_string();
        let e = parse_expr(e.trim(), spec).map_err(|err| perr(*ln, err.to_string()))?;
        push_state(&mut states, &q);
        if output.insert(q.clone(), e).is_some() {
            return Err(perr(*ln, format!("duplicate output for state `{q}`")));
        }
    }
    let cra = Cra {
        states,
        alphabet,
        order: RegisterOrder::new(regs),
        delta,
        start,
        init,
        output,
        semiring: spec,
    };
    at(0, cra.check_structure())?;
    Ok(cra)
}

pub fn serialize_cra(a: &Cra) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "semiring: {}", a.semiring.name());
    let _ = writeln!(
        out,
        "alphabet: {}",
        a.alphabet.iter().map(char::to_string).collect::<Vec<_>>().join(" ")
    );
    let _ = writeln!(out, "registers: {}", a.order.registers().join(" "));
    for r in a.order.registers() {
        let v = a.init.image(r).unwrap().evaluate_ground(a.semiring).unwrap();
        let _ = writeln!(out, "init: {r} = {v}");
    }
    let _ = writeln!(out, "start: {}", a.start);
    for q in &a.states {
        for &sym in &a.alphabet {
            if let Some((q2, sigma)) = a.delta.get(&(q.clone(), sym)) {
                let _ = writeln!(out, "trans: {q} --{sym}--> {q2} [ {sigma} ]");
            }
        }
    }
    for q in &a.states {
        if let Some(e) = a.output.get(q) {
            let _ = writeln!(out, "output: {q} = {e}");
        }
    }
    out
}

pub fn parse_wa(text: &str) -> Result<WeightedAutomaton> {
    let mut header = empty_header();
    let mut states = Vec::new();
    let mut initial = BTreeMap::new();
    let mut finals = BTreeMap::new();
    let mut edges = Vec::new();
    for (ln, line) in content_lines(text) {
        if let Some(rest) = line.strip_prefix("state ") {
            let mut name = None;
            let mut i = None;
            let mut f = None;
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("I=") {
                    i = Some(SemiringValue::from_str(v).map_err(|e| perr(ln, e.to_string()))?);
                } else if let Some(v) = tok.strip_prefix("F=") {
                    f = Some(SemiringValue::from_str(v).map_err(|e| perr(ln, e.to_string()))?);
                } else if name.is_none() {
                    name = Some(tok.to_string());
                } else {
                    return Err(perr(ln, format!("unexpected token `{tok}` in state line")));
                }
            }
            let name = name.ok_or_else(|| perr(ln, "missing state name"))?;
            let (i, f) = match (i, f) {
                (Some(i), Some(f)) => (i, f),
                _ => return Err(perr(ln, "state line needs both I= and F=")),
            };
            if states.contains(&name) {
                return Err(perr(ln, format!("duplicate state `{name}`")));
            }
            states.push(name.clone());
            initial.insert(name.clone(), i);
            finals.insert(name, f);
            continue;
        }
        if let Some(rest) = line.strip_prefix("edge ") {
            edges.push((ln, rest.to_string()));
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| perr(ln, format!("unrecognized line `{line}`")))?;
        if !header.take(ln, key.trim(), value.trim())? {
            return Err(perr(ln, format!("unrecognized line `{line}`")));
        }
    }
    let spec = header.semiring()?;
    let alphabet = header.alphabet()?;
    let mut weights = BTreeMap::new();
    for (ln, rest) in edges {
        // edge <p> -<sym>/<w>-> <q>
        let (p, tail) = rest
            .split_once(" -")
            .ok_or_else(|| perr(ln, "expected `edge <p> -<sym>/<w>-> <q>`"))?;
        let (mid, q) = tail
            .split_once("->")
            .ok_or_else(|| perr(ln, "expected `->` in edge"))?;
        let (sym, w) = mid
            .split_once('/')
            .ok_or_else(|| perr(ln, "expected `<sym>/<weight>` in edge"))?;
        let mut it = sym.trim().chars();
        let sym = match (it.next(), it.next()) {
            (Some(c), None) => c,
            _ => return Err(perr(ln, format!("edge symbol `{sym}` is not a single character"))),
        };
        if !alphabet.contains(&sym) {
            return Err(perr(ln, format!("symbol `{sym}` is not in the alphabet")));
        }
        let w = SemiringValue::from_str(w.trim()).map_err(|e| perr(ln, e.to_string()))?;
        let (p, q) = (p.trim().to_string(), q.trim().to_string());
        for s in [&p, &q] {
            if !states.contains(s) {
                return Err(perr(ln, format!("edge mentions undeclared state `{s}`")));
            }
        }
        if weights.insert((p.clone(), sym, q.clone()), w).is_some() {
            return Err(perr(ln, format!("duplicate edge `{p}` -{sym}-> `{q}`")));
        }
    }
    // Zero entries are represented implicitly.
    let zero = spec.zero();
    initial.retain(|_, v| *v != zero);
    finals.retain(|_, v| *v != zero);
    weights.retain(|_, v| *v != zero);
    Ok(WeightedAutomaton { states, alphabet, weights, initial, finals, semiring: spec })
}

pub fn serialize_wa(w: &WeightedAutomaton) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "semiring: {}", w.semiring.name());
    let _ = writeln!(
        out,
        "alphabet: {}",
        w.alphabet.iter().map(char::to_string).collect::<Vec<_>>().join(" ")
    );
    for q in &w.states {
        let _ = writeln!(out, "state {q} I={} F={}", w.initial_weight(q), w.final_weight(q));
    }
    for ((p, sym, q), weight) in &w.weights {
        if *weight != w.semiring.zero() {
            let _ = writeln!(out, "edge {p} -{sym}/{weight}-> {q}");
        }
    }
    out
}

fn parse_lang_block(ln: usize, body: &str, alphabet: &[char]) -> Result<Dfa> {
    let mut states = Vec::new();
    let mut start = None;
    let mut finals = BTreeSet::new();
    let mut trans = BTreeMap::new();
    for stmt in body.split(';') {
        let stmt = stmt.trim();
        if stmt.is_empty() {
            continue;
        }
        let (key, value) = stmt
            .split_once(':')
            .ok_or_else(|| perr(ln, format!("unrecognized language statement `{stmt}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "states" => states = value.split_whitespace().map(String::from).collect(),
            "start" => start = Some(value.to_string()),
            "final" => finals = value.split_whitespace().map(String::from).collect(),
            "trans" => {
                // <p> -<sym>-> <q>
                let (p, tail) = value
                    .split_once(" -")
                    .ok_or_else(|| perr(ln, "expected `trans: <p> -<sym>-> <q>`"))?;
                let (sym, q) = tail
                    .split_once("->")
                    .ok_or_else(|| perr(ln, "expected `->` in language transition"))?;
                let mut it = sym.trim().chars();
                let sym = match (it.next(), it.next()) {
                    (Some(c), None) => c,
                    _ => return Err(perr(ln, "language transition symbol is not a single character")),
                };
                trans.insert((p.trim().to_string(), sym), q.trim().to_string());
            }
            _ => return Err(perr(ln, format!("unrecognized language statement `{stmt}`"))),
        }
    }
    let start = start.ok_or_else(|| perr(ln, "language block has no start"))?;
    let dfa = Dfa { states, alphabet: alphabet.to_vec(), trans, start, finals };
    at(ln, dfa.check_structure())?;
    Ok(dfa)
}

pub fn parse_rla(text: &str) -> Result<CraRla> {
    let mut header = empty_header();
    let mut alt_bound = None;
    let mut lang_lines: Vec<(usize, String)> = Vec::new();
    let mut trans_lines = Vec::new();
    let mut output_lines = Vec::new();

    // Join multi-line `lang` blocks before the line-by-line pass.
    let mut pending: Option<(usize, String)> = None;
    let mut plain = Vec::new();
    for (ln, line) in content_lines(text) {
        if let Some((start_ln, acc)) = &mut pending {
            acc.push(' ');
            acc.push_str(line);
            if line.contains('}') {
                lang_lines.push((*start_ln, acc.clone()));
                pending = None;
            }
            continue;
        }
        if line.starts_with("lang ") {
            if line.contains('}') {
                lang_lines.push((ln, line.to_string()));
            } else {
                pending = Some((ln, line.to_string()));
            }
            continue;
        }
        plain.push((ln, line));
    }
    if let Some((ln, _)) = pending {
        return Err(perr(ln, "unterminated `lang` block"));
    }

    for (ln, line) in plain {
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| perr(ln, format!("unrecognized line `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if header.take(ln, key, value)? {
            continue;
        }
        match key {
            "alt-bound" => {
                alt_bound = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| perr(ln, format!("invalid alternation bound `{value}`")))?,
                )
            }
            "trans" => trans_lines.push((ln, value.to_string())),
            "output" => output_lines.push((ln, value.to_string())),
            _ => return Err(perr(ln, format!("unrecognized line `{line}`"))),
        }
    }
    let spec = header.semiring()?;
    let alphabet = header.alphabet()?;
    let regs = header.registers()?;
    let init = header.init_subst(&regs, spec)?;
    let start = header.start()?;

    let mut langs = BTreeMap::new();
    for (ln, line) in &lang_lines {
        let rest = line.strip_prefix("lang ").unwrap();
        let (name, tail) = rest
            .split_once('{')
            .ok_or_else(|| perr(*ln, "expected `lang <name> { ... }`"))?;
        let body = tail
            .trim()
            .strip_suffix('}')
            .ok_or_else(|| perr(*ln, "unterminated `lang` block"))?;
        let name = name.trim().to_string();
        let dfa = parse_lang_block(*ln, body, &alphabet)?;
        if langs.insert(name.clone(), dfa).is_some() {
            return Err(perr(*ln, format!("duplicate language `{name}`")));
        }
    }

    let mut states = vec![start.clone()];
    let mut trans = BTreeMap::new();
    for (ln, value) in &trans_lines {
        let (q, label, q2, subst_text) = split_trans(*ln, value)?;
        let lang = label
            .strip_prefix('[')
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(|| perr(*ln, "expected `--[<language>]-->` in guard transition"))?
            .trim()
            .to_string();
        if !langs.contains_key(&lang) {
            return Err(perr(*ln, format!("unknown lookahead language `{lang}`")));
        }
        let sigma = parse_subst(&subst_text, &regs, spec).map_err(|e| perr(*ln, e.to_string()))?;
        push_state(&mut states, &q);
        push_state(&mut states, &q2);
        if trans.insert((q.clone(), lang.clone()), (q2, sigma)).is_some() {
            return Err(perr(*ln, format!("duplicate guard transition `{q}` --[{lang}]-->")));
        }
    }
    let mut output = BTreeMap::new();
    for (ln, value) in &output_lines {
        let (q, e) = value
            .split_once('=')
            .ok_or_else(|| perr(*ln, "expected `output: <state> = <expr>`"))?;
        let q = q.trim().to_string();
        let e = parse_expr(e.trim(), spec).map_err(|err| perr(*ln, err.to_string()))?;
        push_state(&mut states, &q);
        if output.insert(q.clone(), e).is_some() {
            return Err(perr(*ln, format!("duplicate output for state `{q}`")));
        }
    }
    let rla = CraRla {
        states,
        alphabet,
        order: RegisterOrder::new(regs),
        langs,
        trans,
        start,
        init,
        output,
        semiring: spec,
        alt_bound,
    };
    at(0, rla.validate())?;
    Ok(rla)
}

pub fn serialize_rla(r: &CraRla) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "semiring: {}", r.semiring.name());
    let _ = writeln!(
        out,
        "alphabet: {}",
        r.alphabet.iter().map(char::to_string).collect::<Vec<_>>().join(" ")
    );
    let _ = writeln!(out, "registers: {}", r.order.registers().join(" "));
    for reg in r.order.registers() {
        let v = r.init.image(reg).unwrap().evaluate_ground(r.semiring).unwrap();
        let _ = writeln!(out, "init: {reg} = {v}");
    }
    let _ = writeln!(out, "start: {}", r.start);
    if let Some(n) = r.alt_bound {
        let _ = writeln!(out, "alt-bound: {n}");
    }
    for (name, dfa) in &r.langs {
        let trans: Vec<String> = dfa
            .trans
            .iter()
            .map(|((p, a), q)| format!("trans: {p} -{a}-> {q}"))
            .collect();
        let finals: Vec<String> = dfa.finals.iter().cloned().collect();
        let _ = writeln!(
            out,
            "lang {name} {{ states: {}; start: {}; final: {}; {} }}",
            dfa.states.join(" "),
            dfa.start,
            finals.join(" "),
            trans.join("; "),
        );
    }
    for ((q, lang), (q2, sigma)) in &r.trans {
        let _ = writeln!(out, "trans: {q} --[{lang}]--> {q2} [ {sigma} ]");
    }
    for q in &r.states {
        if let Some(e) = r.output.get(q) {
            let _ = writeln!(out, "output: {q} = {e}");
        }
    }
    out
}

/// Parses any machine file, detecting the kind from its line shapes.
pub fn parse_doc(text: &str) -> Result<AutomatonDoc> {
    let lines = content_lines(text);
    if lines.iter().any(|(_, l)| l.starts_with("state ") || l.starts_with("edge ")) {
        return Ok(AutomatonDoc::Wa(parse_wa(text)?));
    }
    if lines.iter().any(|(_, l)| l.starts_with("lang ") || l.contains("--[")) {
        return Ok(AutomatonDoc::Rla(parse_rla(text)?));
    }
    Ok(AutomatonDoc::Cra(parse_cra(text)?))
}

pub fn serialize_doc(doc: &AutomatonDoc) -> String {
    match doc {
        AutomatonDoc::Cra(a) => serialize_cra(a),
        AutomatonDoc::Wa(w) => serialize_wa(w),
        AutomatonDoc::Rla(r) => serialize_rla(r),
    }
}

/// The corpus serialized to files, as `(file name, contents)` pairs.
pub fn corpus_files() -> Vec<(String, String)> {
    let c = crate::corpus::build_corpus();
    let note = "# max-plus reading: `+` is max, `*` is numeric addition\n";
    vec![
        ("a1.cra".to_string(), format!("{note}{}", serialize_cra(&c.a1))),
        ("a2.cra".to_string(), format!("{note}{}", serialize_cra(&c.a2))),
        ("b.cra".to_string(), format!("{note}{}", serialize_cra(&c.b))),
        ("waprime.wa".to_string(), format!("{note}{}", serialize_wa(&c.wa_prime))),
        ("r1.rla".to_string(), format!("{note}{}", serialize_rla(&c.r1))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_corpus;

    #[test]
    fn corpus_round_trips() {
        for (name, text) in corpus_files() {
            let doc = parse_doc(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let canon = serialize_doc(&doc);
            let again = parse_doc(&canon).unwrap();
            assert_eq!(serialize_doc(&again), canon, "{name} is not canonical");
        }
    }

    #[test]
    fn parsed_corpus_evaluates() {
        let c = build_corpus();
        let text = serialize_cra(&c.a1);
        let a1 = parse_cra(&text).unwrap();
        assert_eq!(a1.eval("bbabbb").unwrap(), c.a1.eval("bbabbb").unwrap());
        let wa = parse_wa(&serialize_wa(&c.wa_prime)).unwrap();
        assert_eq!(wa.eval("aab#b").unwrap(), c.wa_prime.eval("aab#b").unwrap());
        let r1 = parse_rla(&serialize_rla(&c.r1)).unwrap();
        assert_eq!(
            crate::lookahead::rla_run(&r1, "aaba").unwrap(),
            crate::lookahead::rla_run(&c.r1, "aaba").unwrap()
        );
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let missing = "semiring: max-plus\nalphabet: a\nregisters: x\ninit: x = 0\nstart: q\noutput: q = x\n";
        let err = parse_cra(missing).unwrap_err();
        assert!(err.to_string().contains("transition missing"), "{err}");

        let bad_reg = "semiring: max-plus\nalphabet: a\nregisters: x\ninit: x = 0\nstart: q\n\
                       trans: q --a--> q [ w := 1 ]\noutput: q = x\n";
        match parse_cra(bad_reg).unwrap_err() {
            CraError::Parse { line, msg } => {
                assert_eq!(line, 6);
                assert!(msg.contains("unknown register"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }

        let bad_line = "semiring: nat\nalphabet: a\nwibble\n";
        match parse_cra(bad_line).unwrap_err() {
            CraError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn kind_detection() {
        let (_, wa_text) = &corpus_files()[3];
        assert!(matches!(parse_doc(wa_text).unwrap(), AutomatonDoc::Wa(_)));
        let (_, rla_text) = &corpus_files()[4];
        assert!(matches!(parse_doc(rla_text).unwrap(), AutomatonDoc::Rla(_)));
        let (_, cra_text) = &corpus_files()[0];
        assert!(matches!(parse_doc(cra_text).unwrap(), AutomatonDoc::Cra(_)));
    }
}
