//! Equivalence-testing harness and seeded random generators for
//! substitutions, expressions and small automata.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::cra::{all_words, Cra};
use crate::error::Result;
use crate::expr::Expr;
use crate::semiring::{SemiringSpec, SemiringValue};
use crate::subst::{RegisterOrder, Substitution};

/// Outcome of an equivalence run: either no disagreement was found, or the
/// first mismatching word together with both computed values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HarnessVerdict {
    Equivalent,
    Mismatch {
        word: String,
        left: String,
        right: String,
    },
}

impl HarnessVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, HarnessVerdict::Equivalent)
    }
}

/// Compares two word functions exhaustively over `Σ^{≤max_len}`, then on
/// `random_count` random words of length `random_len`. Two matching error
/// outcomes count as agreement.
pub fn equiv_harness<F, G>(
    f: F,
    g: G,
    alphabet: &[char],
    max_len: usize,
    random_count: usize,
    random_len: usize,
    seed: u64,
) -> HarnessVerdict
where
    F: Fn(&str) -> Result<SemiringValue>,
    G: Fn(&str) -> Result<SemiringValue>,
{
    let describe = |r: &Result<SemiringValue>| match r {
        Ok(v) => v.to_string(),
        Err(e) => format!("error: {e}"),
    };
    let check = |w: String| -> Option<HarnessVerdict> {
        let left = f(&w);
        let right = g(&w);
        (left != right).then(|| HarnessVerdict::Mismatch {
            word: w,
            left: describe(&left),
            right: describe(&right),
        })
    };
    for w in all_words(alphabet, max_len) {
        if let Some(v) = check(w) {
            return v;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random_count {
        if let Some(v) = check(random_word(&mut rng, alphabet, random_len)) {
            return v;
        }
    }
    HarnessVerdict::Equivalent
}

pub fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], len: usize) -> String {
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// A small non-zero constant of the semiring.
pub fn random_constant(rng: &mut ChaCha8Rng, spec: SemiringSpec) -> SemiringValue {
    match spec {
        SemiringSpec::Nat => SemiringValue::Int(rng.gen_range(1..=5)),
        _ => SemiringValue::Int(rng.gen_range(0..=5)),
    }
}

/// A random copyless expression: each register from `pool` is consumed at
/// most once; `depth` bounds the operator nesting (and so the alternation).
pub fn random_copyless_expr(
    rng: &mut ChaCha8Rng,
    pool: &mut Vec<String>,
    spec: SemiringSpec,
    depth: usize,
) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        if !pool.is_empty() && rng.gen_bool(0.7) {
            let i = rng.gen_range(0..pool.len());
            return Expr::var(pool.swap_remove(i));
        }
        return Expr::Const(random_constant(rng, spec));
    }
    let kind = if rng.gen_bool(0.5) {
        crate::expr::OpKind::Add
    } else {
        crate::expr::OpKind::Mul
    };
    let n = rng.gen_range(2..=3);
    let children: Vec<Expr> = (0..n)
        .map(|_| random_copyless_expr(rng, pool, spec, depth - 1))
        .collect();
    Expr::op(kind, children)
}

/// A random copyless substitution over `order`'s registers. With
/// `normal_form` set, each register may only appear in the images of
/// registers that precede it, so the result is in normal form.
pub fn random_copyless_subst(
    rng: &mut ChaCha8Rng,
    order: &RegisterOrder,
    spec: SemiringSpec,
    normal_form: bool,
) -> Substitution {
    let regs = order.registers();
    let mut buckets: BTreeMap<String, Vec<String>> =
        regs.iter().map(|r| (r.clone(), Vec::new())).collect();
    for (i, y) in regs.iter().enumerate() {
        if rng.gen_bool(0.85) {
            let target = if normal_form {
                regs[rng.gen_range(0..=i)].clone()
            } else {
                regs[rng.gen_range(0..regs.len())].clone()
            };
            buckets.get_mut(&target).unwrap().push(y.clone());
        }
    }
    let mut map = BTreeMap::new();
    for r in regs {
        let mut pool = buckets.remove(r).unwrap();
        let image = random_copyless_expr(rng, &mut pool, spec, 2);
        map.insert(r.clone(), image);
    }
    let s = Substitution::new(regs.to_vec(), map).unwrap();
    debug_assert!(s.is_copyless());
    debug_assert!(!normal_form || s.is_normal_form(order));
    s
}

/// Replaces some subexpressions of a substitution's images by the semiring
/// zero, for exercising zero removal.
fn inject_zeros(rng: &mut ChaCha8Rng, s: &Substitution, spec: SemiringSpec) -> Substitution {
    let mut out = s.clone();
    for r in s.domain().to_vec() {
        if rng.gen_bool(0.35) {
            let image = out.image(&r).unwrap().clone();
            let zeroed = if rng.gen_bool(0.5) {
                Expr::Const(spec.zero())
            } else {
                Expr::mul(vec![image, Expr::Const(spec.zero())])
            };
            out.set_image(&r, zeroed).unwrap();
        }
    }
    out
}

/// A random small copyless CRA: up to 3 states, up to 3 registers, alphabet
/// `{a, b}`. With `with_zeros`, zero constants are injected into some
/// transition images.
pub fn random_copyless_cra(rng: &mut ChaCha8Rng, spec: SemiringSpec, with_zeros: bool) -> Cra {
    let nq = rng.gen_range(1..=3);
    let nx = rng.gen_range(1..=3);
    let states: Vec<String> = (0..nq).map(|i| format!("q{i}")).collect();
    let regs: Vec<String> = (0..nx).map(|i| format!("r{i}")).collect();
    let order = RegisterOrder::new(regs.clone());
    let alphabet = vec!['a', 'b'];
    let mut delta = BTreeMap::new();
    for q in &states {
        for &a in &alphabet {
            let target = states[rng.gen_range(0..nq)].clone();
            let mut s = random_copyless_subst(rng, &order, spec, false);
            if with_zeros {
                s = inject_zeros(rng, &s, spec);
            }
            delta.insert((q.clone(), a), (target, s));
        }
    }
    let mut output = BTreeMap::new();
    for q in &states {
        let mut pool = regs.clone();
        output.insert(q.clone(), random_copyless_expr(rng, &mut pool, spec, 2));
    }
    let init = Substitution::new(
        regs.clone(),
        regs.iter()
            .map(|r| (r.clone(), Expr::Const(random_constant(rng, spec))))
            .collect(),
    )
    .unwrap();
    Cra {
        states,
        alphabet,
        order,
        delta,
        start: "q0".to_string(),
        init,
        output,
        semiring: spec,
    }
}

/// A random collapse substitution together with its stable set and a stable
/// register whose image is affine: the setting of the closed-form iteration.
pub fn random_collapsing_subst(
    rng: &mut ChaCha8Rng,
    spec: SemiringSpec,
) -> (Substitution, BTreeSet<String>, String) {
    let nx = rng.gen_range(1..=3);
    let regs: Vec<String> = (0..nx).map(|i| format!("r{i}")).collect();
    let x = regs[0].clone();
    let c = random_constant(rng, spec);
    let d = random_constant(rng, spec);
    // sigma(x) = (x * c) + d, sometimes with a ground helper register mixed in.
    let mut terms = vec![Expr::mul(vec![Expr::var(&x), Expr::Const(c)]), Expr::Const(d)];
    if nx > 1 && rng.gen_bool(0.5) {
        terms.push(Expr::mul(vec![
            Expr::var(&regs[1]),
            Expr::Const(random_constant(rng, spec)),
        ]));
    }
    let mut map = BTreeMap::new();
    map.insert(x.clone(), Expr::add(terms));
    for r in regs.iter().skip(1) {
        map.insert(r.clone(), Expr::Const(random_constant(rng, spec)));
    }
    let sigma = Substitution::new(regs.clone(), map).unwrap();
    let stable = BTreeSet::from([x.clone()]);
    (sigma, stable, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, ref_f1};
    use crate::semiring::SemiringSpec::{MaxPlus, Nat};
    use crate::semiring::SemiringValue::Int;

    #[test]
    fn harness_verdicts() {
        let c = build_corpus();
        let a1 = c.a1.clone();
        let verdict = equiv_harness(
            |w| a1.eval(w),
            |w| ref_f1(w).map(Int),
            &['a', 'b'],
            8,
            50,
            20,
            7,
        );
        assert!(verdict.is_equivalent(), "{verdict:?}");

        let b = c.b.clone();
        let verdict = equiv_harness(
            |w| b.eval(w),
            |w| ref_f1(w).map(Int),
            &['a', 'b'],
            4,
            0,
            0,
            7,
        );
        assert!(matches!(verdict, HarnessVerdict::Mismatch { .. }), "{verdict:?}");

        let same = equiv_harness(
            |w| Ok(Int(w.len() as i64)),
            |w| Ok(Int(w.len() as i64)),
            &['a', 'b'],
            5,
            10,
            10,
            7,
        );
        assert_eq!(same, HarnessVerdict::Equivalent);
    }

    #[test]
    fn generated_substitutions_are_wellformed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let order = RegisterOrder::new(vec!["r0".into(), "r1".into(), "r2".into()]);
        for _ in 0..200 {
            let plain = random_copyless_subst(&mut rng, &order, MaxPlus, false);
            assert!(plain.is_copyless());
            let normal = random_copyless_subst(&mut rng, &order, Nat, true);
            assert!(normal.is_copyless() && normal.is_normal_form(&order));
        }
    }

    #[test]
    fn generated_cras_are_wellformed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..30 {
            let a = random_copyless_cra(&mut rng, MaxPlus, i % 2 == 0);
            a.check_structure().unwrap();
            let report = a.validate();
            assert!(report.copyless && report.total, "{:?}", report.witnesses);
            a.eval("abab").unwrap();
        }
    }

    #[test]
    fn generated_collapsing_substitutions_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let (sigma, stable, x) = random_collapsing_subst(&mut rng, MaxPlus);
            let nonstable: BTreeSet<String> = sigma
                .domain()
                .iter()
                .filter(|r| !stable.contains(*r))
                .cloned()
                .collect();
            assert!(sigma.is_collapse(&nonstable));
            crate::transforms::iterated_closed_form(&sigma, &x, 3, MaxPlus, &stable).unwrap();
        }
    }
}
