//! The built-in reference machines and the hand-written oracles for the
//! functions they compute. All machines are over the max-plus semiring; in
//! file syntax `+` is max and `*` is numeric addition.

use std::collections::BTreeMap;

use crate::cra::Cra;
use crate::error::{CraError, Result};
use crate::expr::parse_expr;
use crate::lookahead::{CraRla, Dfa};
use crate::semiring::{SemiringSpec, SemiringValue};
use crate::subst::{parse_subst, RegisterOrder, Substitution};
use crate::weighted::WeightedAutomaton;

/// The five reference machines:
/// - `a1` computes the longest substring of b's,
/// - `a2` sums, per `#`-separated block, the larger letter count,
/// - `b` computes `max_j (b's in block j + a's after block j)`,
/// - `wa_prime` is the linearly ambiguous weighted automaton computing the
///   reverse of `b`'s function,
/// - `r1` counts, via lookahead guards, the a's eventually followed by a b.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub a1: Cra,
    pub a2: Cra,
    pub b: Cra,
    pub wa_prime: WeightedAutomaton,
    pub r1: CraRla,
}

const MP: SemiringSpec = SemiringSpec::MaxPlus;

fn subst(text: &str, regs: &[String]) -> Substitution {
    parse_subst(text, regs, MP).expect("corpus substitution")
}

fn expr(text: &str) -> crate::expr::Expr {
    parse_expr(text, MP).expect("corpus expression")
}

fn build_a1() -> Cra {
    let regs: Vec<String> = vec!["y".into(), "x".into()];
    let q = "q".to_string();
    Cra {
        states: vec![q.clone()],
        alphabet: vec!['a', 'b'],
        order: RegisterOrder::new(regs.clone()),
        delta: BTreeMap::from([
            ((q.clone(), 'a'), (q.clone(), subst("x := 0 ; y := x + y", &regs))),
            ((q.clone(), 'b'), (q.clone(), subst("x := x * 1", &regs))),
        ]),
        start: q.clone(),
        init: subst("x := 0 ; y := 0", &regs),
        output: BTreeMap::from([(q, expr("x + y"))]),
        semiring: MP,
    }
}

fn build_a2() -> Cra {
    let regs: Vec<String> = vec!["z".into(), "y".into(), "x".into()];
    let q = "q".to_string();
    Cra {
        states: vec![q.clone()],
        alphabet: vec!['a', 'b', '#'],
        order: RegisterOrder::new(regs.clone()),
        delta: BTreeMap::from([
            ((q.clone(), 'a'), (q.clone(), subst("x := x * 1", &regs))),
            ((q.clone(), 'b'), (q.clone(), subst("y := y * 1", &regs))),
            ((q.clone(), '#'), (q.clone(), subst("x := 0 ; y := 0 ; z := z * (x + y)", &regs))),
        ]),
        start: q.clone(),
        init: subst("x := 0 ; y := 0 ; z := 0", &regs),
        output: BTreeMap::from([(q, expr("z * (x + y)"))]),
        semiring: MP,
    }
}

fn build_b() -> Cra {
    let regs: Vec<String> = vec!["x".into(), "y".into()];
    let q = "q".to_string();
    Cra {
        states: vec![q.clone()],
        alphabet: vec!['a', 'b', '#'],
        order: RegisterOrder::new(regs.clone()),
        delta: BTreeMap::from([
            ((q.clone(), 'a'), (q.clone(), subst("x := x * 1", &regs))),
            ((q.clone(), 'b'), (q.clone(), subst("y := y * 1", &regs))),
            ((q.clone(), '#'), (q.clone(), subst("x := x + y ; y := 0", &regs))),
        ]),
        start: q.clone(),
        init: subst("x := 0 ; y := 0", &regs),
        output: BTreeMap::from([(q, expr("x + y"))]),
        semiring: MP,
    }
}

fn build_wa_prime() -> WeightedAutomaton {
    use SemiringValue::Int;
    let p0 = "p0".to_string();
    let p1 = "p1".to_string();
    let p2 = "p2".to_string();
    let mut weights = BTreeMap::new();
    weights.insert((p0.clone(), 'a', p0.clone()), Int(1));
    weights.insert((p0.clone(), 'b', p0.clone()), Int(0));
    weights.insert((p0.clone(), '#', p0.clone()), Int(0));
    weights.insert((p0.clone(), '#', p1.clone()), Int(0));
    weights.insert((p1.clone(), 'a', p1.clone()), Int(0));
    weights.insert((p1.clone(), 'b', p1.clone()), Int(1));
    weights.insert((p1.clone(), '#', p2.clone()), Int(0));
    weights.insert((p2.clone(), 'a', p2.clone()), Int(0));
    weights.insert((p2.clone(), 'b', p2.clone()), Int(0));
    weights.insert((p2.clone(), '#', p2.clone()), Int(0));
    WeightedAutomaton {
        states: vec![p0.clone(), p1.clone(), p2.clone()],
        alphabet: vec!['a', 'b', '#'],
        weights,
        initial: BTreeMap::from([(p0.clone(), Int(0)), (p1.clone(), Int(0))]),
        finals: BTreeMap::from([(p0, Int(0)), (p1, Int(0)), (p2, Int(0))]),
        semiring: MP,
    }
}

fn dfa(
    states: &[&str],
    alphabet: &[char],
    trans: &[(&str, char, &str)],
    start: &str,
    finals: &[&str],
) -> Dfa {
    Dfa {
        states: states.iter().map(|s| s.to_string()).collect(),
        alphabet: alphabet.to_vec(),
        trans: trans
            .iter()
            .map(|(p, a, q)| ((p.to_string(), *a), q.to_string()))
            .collect(),
        start: start.to_string(),
        finals: finals.iter().map(|s| s.to_string()).collect(),
    }
}

fn build_r1() -> CraRla {
    let regs: Vec<String> = vec!["c".into()];
    let q = "q".to_string();
    // Guards partition the nonempty suffixes: starts with `a` and has a
    // later `b` (the counted case); all a's; starts with `b`.
    let bump = dfa(
        &["s0", "s1", "s2", "d"],
        &['a', 'b'],
        &[
            ("s0", 'a', "s1"), ("s0", 'b', "d"),
            ("s1", 'a', "s1"), ("s1", 'b', "s2"),
            ("s2", 'a', "s2"), ("s2", 'b', "s2"),
            ("d", 'a', "d"), ("d", 'b', "d"),
        ],
        "s0",
        &["s2"],
    );
    let tail = dfa(
        &["s0", "s1", "d"],
        &['a', 'b'],
        &[
            ("s0", 'a', "s1"), ("s0", 'b', "d"),
            ("s1", 'a', "s1"), ("s1", 'b', "d"),
            ("d", 'a', "d"), ("d", 'b', "d"),
        ],
        "s0",
        &["s1"],
    );
    let rest = dfa(
        &["s0", "s1", "d"],
        &['a', 'b'],
        &[
            ("s0", 'a', "d"), ("s0", 'b', "s1"),
            ("s1", 'a', "s1"), ("s1", 'b', "s1"),
            ("d", 'a', "d"), ("d", 'b', "d"),
        ],
        "s0",
        &["s1"],
    );
    CraRla {
        states: vec![q.clone()],
        alphabet: vec!['a', 'b'],
        order: RegisterOrder::new(regs.clone()),
        langs: BTreeMap::from([
            ("bump".to_string(), bump),
            ("tail".to_string(), tail),
            ("rest".to_string(), rest),
        ]),
        trans: BTreeMap::from([
            ((q.clone(), "bump".to_string()), (q.clone(), subst("c := c * 1", &regs))),
            ((q.clone(), "tail".to_string()), (q.clone(), subst("", &regs))),
            ((q.clone(), "rest".to_string()), (q.clone(), subst("", &regs))),
        ]),
        start: q.clone(),
        init: subst("c := 0", &regs),
        output: BTreeMap::from([(q, expr("c"))]),
        semiring: MP,
        alt_bound: None,
    }
}

pub fn build_corpus() -> Corpus {
    Corpus {
        a1: build_a1(),
        a2: build_a2(),
        b: build_b(),
        wa_prime: build_wa_prime(),
        r1: build_r1(),
    }
}

fn check_alphabet(w: &str, alphabet: &[char]) -> Result<()> {
    for c in w.chars() {
        if !alphabet.contains(&c) {
            return Err(CraError::AlphabetError(c));
        }
    }
    Ok(())
}

/// Length of the longest substring of b's.
pub fn ref_f1(w: &str) -> Result<i64> {
    check_alphabet(w, &['a', 'b'])?;
    let mut best = 0i64;
    let mut run = 0i64;
    for c in w.chars() {
        run = if c == 'b' { run + 1 } else { 0 };
        best = best.max(run);
    }
    Ok(best)
}

/// Per `#`-separated block, `(a's, b's)` counts.
fn blocks(w: &str) -> Vec<(i64, i64)> {
    w.split('#')
        .map(|blk| {
            let a = blk.chars().filter(|&c| c == 'a').count() as i64;
            let b = blk.chars().filter(|&c| c == 'b').count() as i64;
            (a, b)
        })
        .collect()
}

/// Sum over blocks of the larger letter count.
pub fn ref_f2(w: &str) -> Result<i64> {
    check_alphabet(w, &['a', 'b', '#'])?;
    Ok(blocks(w).iter().map(|(n, m)| *n.max(m)).sum())
}

/// `max_j (b's in block j + a's in blocks after j)`, including the choice of
/// taking all a's and no b-block (the machine's registers start at 0, so a's
/// count from the very beginning even when no b has been seen).
pub fn ref_fb(w: &str) -> Result<i64> {
    check_alphabet(w, &['a', 'b', '#'])?;
    let bl = blocks(w);
    let mut best: i64 = bl.iter().map(|(n, _)| n).sum();
    let mut after: i64 = 0;
    for (n, m) in bl.iter().rev() {
        best = best.max(m + after);
        after += n;
    }
    Ok(best)
}

/// The reverse function: `max_j (a's in blocks before j + b's in block j)`,
/// again including the all-a's choice.
pub fn ref_fb_rev(w: &str) -> Result<i64> {
    check_alphabet(w, &['a', 'b', '#'])?;
    let bl = blocks(w);
    let mut best: i64 = bl.iter().map(|(n, _)| n).sum();
    let mut before: i64 = 0;
    for (n, m) in &bl {
        best = best.max(before + m);
        before += n;
    }
    Ok(best)
}
