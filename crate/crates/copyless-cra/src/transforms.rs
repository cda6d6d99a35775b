//! Structural transformations on copyless CRA: zero removal, normal-form
//! conversion, stable-register detection, collapse-word synthesis, collapse
//! powers and closed forms for iterated loop substitutions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::cra::Cra;
use crate::error::{CraError, Result};
use crate::expr::{affine_form, Expr};
use crate::semiring::SemiringSpec;
use crate::subst::Substitution;

/// Replaces the registers of `S` inside `e` by the semiring zero and reduces
/// the resulting constants away.
fn zero_out(e: &Expr, s: &BTreeSet<String>, spec: SemiringSpec) -> Expr {
    fn subst(e: &Expr, s: &BTreeSet<String>, spec: SemiringSpec) -> Expr {
        match e {
            Expr::Const(_) => e.clone(),
            Expr::Var(x) if s.contains(x) => Expr::Const(spec.zero()),
            Expr::Var(_) => e.clone(),
            Expr::Op(kind, children) => {
                Expr::Op(*kind, children.iter().map(|c| subst(c, s, spec)).collect())
            }
        }
    }
    subst(e, s, spec).reduce_zeros(spec)
}

fn zero_set_name(q: &str, s: &BTreeSet<String>) -> String {
    if s.is_empty() {
        format!("{q}@-")
    } else {
        format!("{q}@{}", s.iter().cloned().collect::<Vec<_>>().join(","))
    }
}

/// Removes the semiring zero from every substitution, initial value and
/// output of a copyless CRA computing a non-zero function.
///
/// States of the result pair an original state with the set of registers
/// currently holding the zero; zeroed registers carry the semiring one as a
/// placeholder. If some reachable state outputs the constant zero, the input
/// function was not non-zero and the error carries a witness word.
pub fn remove_zeros(a: &Cra) -> Result<Cra> {
    let spec = a.semiring;
    let regs = a.order.registers().to_vec();
    let zero = Expr::Const(spec.zero());
    let one = Expr::Const(spec.one());

    let s0: BTreeSet<String> = regs
        .iter()
        .filter(|r| a.init.image(r).map(|e| e == &zero).unwrap_or(false))
        .cloned()
        .collect();
    let mut init_map = BTreeMap::new();
    for r in &regs {
        let e = if s0.contains(r) { one.clone() } else { a.init.image(r)?.clone() };
        init_map.insert(r.clone(), e);
    }

    let start = (a.start.clone(), s0);
    // Breadth-first closure over (state, zero-set) pairs, remembering a
    // shortest witness word per pair for the non-zero diagnostic.
    let mut words: BTreeMap<(String, BTreeSet<String>), String> =
        BTreeMap::from([(start.clone(), String::new())]);
    let mut queue = VecDeque::from([start.clone()]);
    let mut states = Vec::new();
    let mut delta = BTreeMap::new();
    let mut output = BTreeMap::new();

    while let Some((q, s)) = queue.pop_front() {
        let name = zero_set_name(&q, &s);
        states.push(name.clone());

        let mu = zero_out(&a.output[&q], &s, spec);
        if mu == zero {
            return Err(CraError::NonZeroViolation(words[&(q.clone(), s.clone())].clone()));
        }
        output.insert(name.clone(), mu);

        for &sym in &a.alphabet {
            let (q2, sigma) = &a.delta[&(q.clone(), sym)];
            let mut s2 = BTreeSet::new();
            let mut map = BTreeMap::new();
            for r in &regs {
                let img = zero_out(sigma.image(r)?, &s, spec);
                if img == zero {
                    s2.insert(r.clone());
                    map.insert(r.clone(), one.clone());
                } else {
                    map.insert(r.clone(), img);
                }
            }
            let target = (q2.clone(), s2);
            if !words.contains_key(&target) {
                let mut w = words[&(q.clone(), s.clone())].clone();
                w.push(sym);
                words.insert(target.clone(), w);
                queue.push_back(target.clone());
            }
            delta.insert(
                (name.clone(), sym),
                (zero_set_name(&target.0, &target.1), Substitution::new(regs.clone(), map)?),
            );
        }
    }

    Ok(Cra {
        states,
        alphabet: a.alphabet.clone(),
        order: a.order.clone(),
        delta,
        start: zero_set_name(&start.0, &start.1),
        init: Substitution::new(regs, init_map)?,
        output,
        semiring: spec,
    })
}

/// A permutation of the register set, stored as `original -> renamed`.
type Perm = BTreeMap<String, String>;

fn perm_name(q: &str, perm: &Perm, regs: &[String]) -> String {
    let images: Vec<String> = regs.iter().map(|r| perm[r].clone()).collect();
    format!("{q}@{}", images.join(","))
}

fn rename(e: &Expr, perm: &Perm) -> Expr {
    match e {
        Expr::Const(_) => e.clone(),
        Expr::Var(x) => Expr::Var(perm[x].clone()),
        Expr::Op(kind, children) => {
            Expr::Op(*kind, children.iter().map(|c| rename(c, perm)).collect())
        }
    }
}

/// Converts a copyless CRA into normal form with respect to its declared
/// register order by tracking a register permutation in the state.
pub fn normalize(a: &Cra) -> Result<Cra> {
    let report = a.validate();
    if !report.copyless {
        let w = report.witnesses.first().cloned().unwrap_or_default();
        return Err(CraError::CopylessViolation(w));
    }
    let spec = a.semiring;
    let regs = a.order.registers().to_vec();

    let id: Perm = regs.iter().map(|r| (r.clone(), r.clone())).collect();
    let start = (a.start.clone(), id);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    let mut states = Vec::new();
    let mut delta = BTreeMap::new();
    let mut output = BTreeMap::new();

    while let Some((q, rho)) = queue.pop_front() {
        let name = perm_name(&q, &rho, &regs);
        states.push(name.clone());
        output.insert(name.clone(), rename(&a.output[&q], &rho));

        for &sym in &a.alphabet {
            let (q2, sigma) = &a.delta[&(q.clone(), sym)];
            // Renamed images rho(sigma(x)) drive the new permutation: every
            // register with a non-constant image is sent to the smallest
            // register that image mentions.
            let mut tau: Perm = BTreeMap::new();
            let mut used: BTreeSet<String> = BTreeSet::new();
            let mut renamed: BTreeMap<String, Expr> = BTreeMap::new();
            for r in &regs {
                let img = rename(sigma.image(r)?, &rho);
                let vars = img.vars();
                if !vars.is_empty() {
                    let min = regs
                        .iter()
                        .find(|x| vars.contains(*x))
                        .expect("image variables come from the register set")
                        .clone();
                    used.insert(min.clone());
                    tau.insert(r.clone(), min);
                }
                renamed.insert(r.clone(), img);
            }
            // Extend the partial bijection: leftover registers are matched to
            // leftover targets in increasing order.
            let free_targets: Vec<String> =
                regs.iter().filter(|x| !used.contains(*x)).cloned().collect();
            let mut free_targets = free_targets.into_iter();
            for r in &regs {
                if !tau.contains_key(r) {
                    tau.insert(r.clone(), free_targets.next().expect("bijection extension"));
                }
            }
            // sigma'(x) = rho(sigma(tau^{-1}(x)))
            let inv: Perm = tau.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
            let mut map = BTreeMap::new();
            for x in &regs {
                map.insert(x.clone(), renamed[&inv[x]].clone());
            }
            let target = (q2.clone(), tau);
            if seen.insert(target.clone()) {
                queue.push_back(target.clone());
            }
            delta.insert(
                (name.clone(), sym),
                (perm_name(&target.0, &target.1, &regs), Substitution::new(regs.clone(), map)?),
            );
        }
    }

    let out = Cra {
        states,
        alphabet: a.alphabet.clone(),
        order: a.order.clone(),
        delta,
        start: perm_name(&start.0, &start.1, &regs),
        init: a.init.clone(),
        output,
        semiring: spec,
    };
    debug_assert!(out.validate().normal_form);
    Ok(out)
}

/// Registers stable on every letter-transition substitution of a copyless
/// CRA in normal form; stability under composition makes checking the letter
/// substitutions sufficient.
pub fn stable_registers(a: &Cra) -> Result<BTreeSet<String>> {
    let report = a.validate();
    if !report.normal_form {
        let w = report.witnesses.first().cloned().unwrap_or_default();
        return Err(CraError::NotNormalForm(w));
    }
    let mut stable: BTreeSet<String> = a.order.registers().iter().cloned().collect();
    for ((_, _), (_, sigma)) in &a.delta {
        let sv = sigma.stable_vars();
        stable.retain(|x| sv.contains(x));
    }
    Ok(stable)
}

/// Shortest word from `from` to `to` (breadth-first, ties broken by alphabet
/// order); the empty word when they coincide.
fn connect(a: &Cra, from: &str, to: &str) -> Result<String> {
    let mut prev: BTreeMap<String, String> = BTreeMap::from([(from.to_string(), String::new())]);
    let mut queue = VecDeque::from([from.to_string()]);
    while let Some(q) = queue.pop_front() {
        if q == to {
            return Ok(prev[&q].clone());
        }
        for &sym in &a.alphabet {
            let (q2, _) = &a.delta[&(q.clone(), sym)];
            if !prev.contains_key(q2) {
                let mut w = prev[&q].clone();
                w.push(sym);
                prev.insert(q2.clone(), w);
                queue.push_back(q2.clone());
            }
        }
    }
    Err(CraError::NotStronglyConnected(from.to_string(), to.to_string()))
}

/// Builds a collapse word from `q` to `q2`: the induced substitution maps
/// every non-stable register to a ground expression and the word contains
/// every alphabet letter.
///
/// The word starts with a tour reading each letter once, then fixes the
/// non-stable registers in decreasing register order by visiting, for each
/// register still carrying variables, a transition that destabilizes it.
pub fn collapse_word(a: &Cra, q: &str, q2: &str) -> Result<(String, Substitution)> {
    for s in [q, q2] {
        if !a.states.iter().any(|t| t == s) {
            return Err(CraError::Semantic(format!("unknown state `{s}`")));
        }
    }
    let report = a.validate();
    if !report.copyless {
        let w = report.witnesses.first().cloned().unwrap_or_default();
        return Err(CraError::CopylessViolation(w));
    }
    if !report.normal_form {
        let w = report.witnesses.first().cloned().unwrap_or_default();
        return Err(CraError::NotNormalForm(w));
    }
    if let Some((p, r)) = a.strong_connectivity_witness() {
        return Err(CraError::NotStronglyConnected(p, r));
    }
    let stable = stable_registers(a)?;
    let nonstable: BTreeSet<String> = a
        .order
        .registers()
        .iter()
        .filter(|x| !stable.contains(*x))
        .cloned()
        .collect();

    // Tour: the transition function is total, so reading each letter once from
    // anywhere covers the alphabet.
    let mut word: String = a.alphabet.iter().collect();
    let (mut here, mut sigma) = a.delta_star(q, &word)?;

    for x in a.order.registers().iter().rev() {
        if !nonstable.contains(x) || sigma.image(x)?.vars().is_empty() {
            continue;
        }
        // Some letter-transition destabilizes x; route there and take it.
        let (p, sym) = a
            .delta
            .iter()
            .find(|((_, _), (_, s))| !s.stable_vars().contains(x))
            .map(|((p, sym), _)| (p.clone(), *sym))
            .expect("a non-stable register is non-stable on some letter");
        let v1 = connect(a, &here, &p)?;
        word.push_str(&v1);
        word.push(sym);
        let (next, piece) = a.delta_star(&here, &format!("{v1}{sym}"))?;
        sigma = sigma.compose(&piece)?;
        here = next;
    }

    let v2 = connect(a, &here, q2)?;
    word.push_str(&v2);
    let (end, piece) = a.delta_star(&here, &v2)?;
    debug_assert_eq!(end, q2);
    sigma = sigma.compose(&piece)?;
    debug_assert!(sigma.is_collapse(&nonstable));
    Ok((word, sigma))
}

/// The smallest `N >= 1` with `sigma^N` a collapse substitution with respect
/// to the given stable set; for copyless normal-form substitutions `N` never
/// exceeds the register count.
pub fn collapse_power(sigma: &Substitution, stable: &BTreeSet<String>) -> Result<usize> {
    let nonstable: BTreeSet<String> = sigma
        .domain()
        .iter()
        .filter(|x| !stable.contains(*x))
        .cloned()
        .collect();
    let bound = sigma.domain().len().max(1);
    let mut power = sigma.clone();
    for n in 1..=bound {
        if power.is_collapse(&nonstable) {
            return Ok(n);
        }
        power = power.compose(sigma)?;
    }
    Err(CraError::Semantic(format!(
        "substitution does not collapse within {bound} iterations; \
         expected for copyless normal-form input"
    )))
}

/// Closed form for iterating a collapse substitution on a stable register:
/// `sigma^(i+1)(x) = (c^i (*) sigma(x)) (+) (d (*) sum of c^j for j < i)`
/// where `(c, d)` is the affine form of `sigma(x)` with the other registers
/// replaced by their ground image values.
pub fn iterated_closed_form(
    sigma: &Substitution,
    x: &str,
    i: u32,
    spec: SemiringSpec,
    stable: &BTreeSet<String>,
) -> Result<Expr> {
    let nonstable: BTreeSet<String> = sigma
        .domain()
        .iter()
        .filter(|r| !stable.contains(*r))
        .cloned()
        .collect();
    if !sigma.is_collapse(&nonstable) {
        return Err(CraError::Semantic(format!(
            "substitution is not collapse for register `{x}`'s closed form"
        )));
    }
    if !sigma.stable_vars().contains(x) {
        return Err(CraError::Semantic(format!("register `{x}` is not stable")));
    }

    // sigma(x) with every other register replaced by its ground image value;
    // the collapse property makes those images constants.
    let img = sigma.image(x)?;
    let mut replaced = BTreeMap::new();
    for y in img.vars() {
        if y != x {
            let v = sigma.image(&y)?.evaluate_ground(spec)?;
            replaced.insert(y, Expr::Const(v));
        }
    }
    replaced.insert(x.to_string(), Expr::var(x));
    let mut full = BTreeMap::new();
    for r in sigma.domain() {
        full.insert(
            r.clone(),
            replaced.get(r).cloned().unwrap_or_else(|| Expr::var(r)),
        );
    }
    let univariate = Substitution::new(sigma.domain().to_vec(), full)?
        .apply(img)?
        .reduce_zeros(spec);
    let (c, d) = affine_form(&univariate, x, spec)?;

    let c_pow_i = spec.pow(c, i)?;
    let mut geom = spec.zero();
    for j in 0..i {
        geom = spec.add(geom, spec.pow(c, j)?)?;
    }
    Ok(Expr::add(vec![
        Expr::mul(vec![Expr::Const(c_pow_i), img.clone()]),
        Expr::mul(vec![Expr::Const(d), Expr::Const(geom)]),
    ]))
}
