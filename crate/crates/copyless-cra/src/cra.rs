//! Deterministic cost register automata: runs, iterated transition
//! substitutions, ground output expressions, validation and graph analysis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{CraError, Result};
use crate::expr::{Expr, Valuation};
use crate::semiring::{SemiringSpec, SemiringValue};
use crate::subst::{RegisterOrder, Substitution};

/// A deterministic, complete cost register automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cra {
    pub states: Vec<String>,
    pub alphabet: Vec<char>,
    /// Registers listed in increasing order (the normal-form order).
    pub order: RegisterOrder,
    /// Total transition map `(state, symbol) -> (state, substitution)`.
    pub delta: BTreeMap<(String, char), (String, Substitution)>,
    pub start: String,
    /// Initial valuation as a ground substitution.
    pub init: Substitution,
    /// Output expression per state.
    pub output: BTreeMap<String, Expr>,
    pub semiring: SemiringSpec,
}

/// Validation report for the copyless, normal-form and totality properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub copyless: bool,
    pub normal_form: bool,
    pub total: bool,
    /// Human-readable witnesses for each failing property.
    pub witnesses: Vec<String>,
}

impl Cra {
    /// Checks structural well-formedness (totality, known states/registers);
    /// copylessness and normal form are reported by `validate`, not enforced.
    pub fn check_structure(&self) -> Result<()> {
        let regs = self.order.registers();
        if !self.states.contains(&self.start) {
            return Err(CraError::Semantic(format!("unknown start state `{}`", self.start)));
        }
        if !self.init.is_ground() {
            return Err(CraError::Semantic("initial valuation must be ground".into()));
        }
        if self.init.domain() != regs {
            return Err(CraError::Semantic("initial valuation domain mismatch".into()));
        }
        for q in &self.states {
            for &a in &self.alphabet {
                match self.delta.get(&(q.clone(), a)) {
                    None => {
                        return Err(CraError::Semantic(format!(
                            "transition missing for state `{q}` on `{a}`"
                        )))
                    }
                    Some((q2, sigma)) => {
                        if !self.states.contains(q2) {
                            return Err(CraError::Semantic(format!(
                                "transition from `{q}` on `{a}` targets unknown state `{q2}`"
                            )));
                        }
                        if sigma.domain() != regs {
                            return Err(CraError::Semantic(format!(
                                "substitution on `{q}` --{a}--> has wrong register set"
                            )));
                        }
                    }
                }
            }
            let mu = self
                .output
                .get(q)
                .ok_or_else(|| CraError::Semantic(format!("no output for state `{q}`")))?;
            for v in mu.vars() {
                if self.order.rank(&v).is_none() {
                    return Err(CraError::Semantic(format!(
                        "output of `{q}` uses unknown register `{v}`"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_word(&self, w: &str) -> Result<()> {
        for c in w.chars() {
            if !self.alphabet.contains(&c) {
                return Err(CraError::AlphabetError(c));
            }
        }
        Ok(())
    }

    /// The output of the automaton on `w`.
    pub fn eval(&self, w: &str) -> Result<SemiringValue> {
        self.check_word(w)?;
        let mut q = self.start.clone();
        let mut val: Valuation = self.init.to_valuation(self.semiring)?;
        for a in w.chars() {
            let (q2, sigma) = &self.delta[&(q, a)];
            let mut next = Valuation::new();
            for r in self.order.registers() {
                next.insert(r.clone(), sigma.image(r)?.evaluate(self.semiring, &val)?);
            }
            val = next;
            q = q2.clone();
        }
        self.output[&q].evaluate(self.semiring, &val)
    }

    /// Iterated transition: the end state and the composed substitution of
    /// reading `w` from `q`. Reading nothing yields the identity.
    pub fn delta_star(&self, q: &str, w: &str) -> Result<(String, Substitution)> {
        self.check_word(w)?;
        let mut state = q.to_string();
        let mut acc = Substitution::identity(self.order.registers().to_vec());
        for a in w.chars() {
            let (q2, sigma) = &self.delta[&(state, a)];
            acc = acc.compose(sigma)?;
            state = q2.clone();
        }
        Ok((state, acc))
    }

    /// The ground expression whose evaluation is `eval(w)`, built without
    /// intermediate evaluation (used for alternation measurement).
    pub fn ground_output_expr(&self, w: &str) -> Result<Expr> {
        let (q, sigma) = self.delta_star(&self.start, w)?;
        let with_run = sigma.apply(&self.output[&q])?;
        self.init.apply(&with_run)
    }

    /// Reports copylessness, normal form (w.r.t. the declared register
    /// order) and totality, with witnesses for failures.
    pub fn validate(&self) -> ValidationReport {
        let mut witnesses = Vec::new();
        let mut copyless = true;
        let mut normal_form = true;
        let mut total = true;

        for q in &self.states {
            for &a in &self.alphabet {
                match self.delta.get(&(q.clone(), a)) {
                    None => {
                        total = false;
                        witnesses.push(format!("no transition for ({q}, {a})"));
                    }
                    Some((_, sigma)) => {
                        if let Some(x) = sigma.copyless_witness() {
                            copyless = false;
                            witnesses.push(format!(
                                "transition {q} --{a}--> reuses register `{x}`"
                            ));
                        }
                        if !sigma.is_normal_form(&self.order) {
                            normal_form = false;
                            witnesses.push(format!(
                                "transition {q} --{a}--> breaks the register order"
                            ));
                        }
                    }
                }
            }
            if let Some(mu) = self.output.get(q) {
                if let Some(x) = mu.copyless_witness() {
                    copyless = false;
                    witnesses.push(format!("output of `{q}` reuses register `{x}`"));
                }
            }
        }
        ValidationReport { copyless, normal_form, total, witnesses }
    }

    /// States reachable from the start state.
    pub fn accessible(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([self.start.clone()]);
        let mut queue = VecDeque::from([self.start.clone()]);
        while let Some(q) = queue.pop_front() {
            for &a in &self.alphabet {
                if let Some((q2, _)) = self.delta.get(&(q.clone(), a)) {
                    if seen.insert(q2.clone()) {
                        queue.push_back(q2.clone());
                    }
                }
            }
        }
        seen
    }

    /// Restricts the automaton to its accessible states.
    pub fn trim(&self) -> Cra {
        let keep = self.accessible();
        Cra {
            states: self.states.iter().filter(|q| keep.contains(*q)).cloned().collect(),
            alphabet: self.alphabet.clone(),
            order: self.order.clone(),
            delta: self
                .delta
                .iter()
                .filter(|((q, _), _)| keep.contains(q))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            start: self.start.clone(),
            init: self.init.clone(),
            output: self
                .output
                .iter()
                .filter(|(q, _)| keep.contains(*q))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            semiring: self.semiring,
        }
    }

    fn successors(&self, q: &str) -> BTreeSet<String> {
        self.alphabet
            .iter()
            .filter_map(|&a| self.delta.get(&(q.to_string(), a)).map(|(q2, _)| q2.clone()))
            .collect()
    }

    /// Strongly connected components of the transition graph, as sets.
    pub fn sccs(&self) -> Vec<BTreeSet<String>> {
        // Kosaraju: forward finish order, then reverse-graph sweeps.
        let mut order = Vec::new();
        let mut seen = BTreeSet::new();
        for q in &self.states {
            self.finish_order(q, &mut seen, &mut order);
        }
        let mut reverse: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for q in &self.states {
            for q2 in self.successors(q) {
                reverse.entry(q2).or_default().insert(q.clone());
            }
        }
        let mut assigned = BTreeSet::new();
        let mut comps = Vec::new();
        for q in order.iter().rev() {
            if assigned.contains(q) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![q.clone()];
            while let Some(p) = stack.pop() {
                if !assigned.insert(p.clone()) {
                    continue;
                }
                comp.insert(p.clone());
                if let Some(preds) = reverse.get(&p) {
                    stack.extend(preds.iter().cloned());
                }
            }
            comps.push(comp);
        }
        comps
    }

    fn finish_order(&self, q: &str, seen: &mut BTreeSet<String>, order: &mut Vec<String>) {
        if !seen.insert(q.to_string()) {
            return;
        }
        for q2 in self.successors(q) {
            self.finish_order(&q2, seen, order);
        }
        order.push(q.to_string());
    }

    /// Bottom SCCs: components with no edge leaving them.
    pub fn bsccs(&self) -> Vec<BTreeSet<String>> {
        self.sccs()
            .into_iter()
            .filter(|comp| {
                comp.iter().all(|q| self.successors(q).iter().all(|q2| comp.contains(q2)))
            })
            .collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.sccs().len() == 1
    }

    /// A witness pair `(p, q)` with `q` unreachable from `p`, if one exists.
    pub fn strong_connectivity_witness(&self) -> Option<(String, String)> {
        for p in &self.states {
            let mut seen = BTreeSet::from([p.clone()]);
            let mut queue = VecDeque::from([p.clone()]);
            while let Some(r) = queue.pop_front() {
                for q2 in self.successors(&r) {
                    if seen.insert(q2.clone()) {
                        queue.push_back(q2);
                    }
                }
            }
            for q in &self.states {
                if !seen.contains(q) {
                    return Some((p.clone(), q.clone()));
                }
            }
        }
        None
    }

    /// Max alternation of the ground output expression over all words of
    /// length at most `max_len` — an empirical lower bound on the BAC bound.
    pub fn max_alternation(&self, max_len: usize) -> Result<usize> {
        let mut best = 0;
        for w in all_words(&self.alphabet, max_len) {
            best = best.max(self.ground_output_expr(&w)?.alternation());
        }
        Ok(best)
    }
}

/// All words over `alphabet` of length at most `max_len`, shortest first.
pub fn all_words(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for w in &layer {
            for &a in alphabet {
                let mut w2 = w.clone();
                w2.push(a);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::subst::parse_subst;
    use SemiringSpec::MaxPlus;
    use SemiringValue::Int;

    /// Single-state max-plus automaton computing the longest run of b's:
    /// on `a` the running count is folded into the best-so-far, on `b` it
    /// grows by one.
    fn a1() -> Cra {
        let regs = vec!["y".to_string(), "x".to_string()];
        let spec = MaxPlus;
        let mut delta = BTreeMap::new();
        delta.insert(
            ("q".to_string(), 'a'),
            ("q".to_string(), parse_subst("y := x + y ; x := 0", &regs, spec).unwrap()),
        );
        delta.insert(
            ("q".to_string(), 'b'),
            ("q".to_string(), parse_subst("x := x * 1", &regs, spec).unwrap()),
        );
        Cra {
            states: vec!["q".to_string()],
            alphabet: vec!['a', 'b'],
            order: RegisterOrder::new(regs.clone()),
            delta,
            start: "q".to_string(),
            init: parse_subst("x := 0 ; y := 0", &regs, spec).unwrap(),
            output: BTreeMap::from([("q".to_string(), parse_expr("x + y", spec).unwrap())]),
            semiring: spec,
        }
    }

    #[test]
    fn eval_longest_b_run() {
        let a = a1();
        a.check_structure().unwrap();
        assert_eq!(a.eval("bbabbb").unwrap(), Int(3));
        assert_eq!(a.eval("").unwrap(), Int(0));
        assert_eq!(a.eval("aaa").unwrap(), Int(0));
        assert_eq!(a.eval("c"), Err(CraError::AlphabetError('c')));
    }

    #[test]
    fn delta_star_basics() {
        let a = a1();
        let (q, sigma) = a.delta_star("q", "").unwrap();
        assert_eq!(q, "q");
        assert_eq!(sigma, Substitution::identity(a.order.registers().to_vec()));

        let (_, sigma_b) = a.delta_star("q", "b").unwrap();
        assert_eq!(sigma_b.image("x").unwrap(), &parse_expr("x * 1", MaxPlus).unwrap());
        assert_eq!(sigma_b.image("y").unwrap(), &Expr::var("y"));
    }

    #[test]
    fn ground_expr_matches_eval() {
        let a = a1();
        for w in all_words(&a.alphabet, 6) {
            let g = a.ground_output_expr(&w).unwrap();
            assert!(g.vars().is_empty());
            assert_eq!(g.evaluate_ground(a.semiring).unwrap(), a.eval(&w).unwrap(), "word {w}");
        }
    }

    #[test]
    fn validation_report() {
        let a = a1();
        let report = a.validate();
        assert!(report.copyless && report.normal_form && report.total);

        let mut bad = a.clone();
        bad.output
            .insert("q".to_string(), parse_expr("x + x", MaxPlus).unwrap());
        assert!(!bad.validate().copyless);
    }

    #[test]
    fn graph_analysis() {
        let a = a1();
        assert_eq!(a.bsccs(), vec![BTreeSet::from(["q".to_string()])]);
        assert!(a.is_strongly_connected());

        // chain q0 -> q1 with no way back
        let regs = vec!["x".to_string()];
        let id = Substitution::identity(regs.clone());
        let mut delta = BTreeMap::new();
        delta.insert(("q0".to_string(), 'a'), ("q1".to_string(), id.clone()));
        delta.insert(("q1".to_string(), 'a'), ("q1".to_string(), id.clone()));
        let chain = Cra {
            states: vec!["q0".to_string(), "q1".to_string()],
            alphabet: vec!['a'],
            order: RegisterOrder::new(regs.clone()),
            delta,
            start: "q0".to_string(),
            init: parse_subst("x := 0", &regs, MaxPlus).unwrap(),
            output: BTreeMap::from([
                ("q0".to_string(), Expr::var("x")),
                ("q1".to_string(), Expr::var("x")),
            ]),
            semiring: MaxPlus,
        };
        assert_eq!(chain.bsccs(), vec![BTreeSet::from(["q1".to_string()])]);
        assert!(!chain.is_strongly_connected());
        assert!(chain.strong_connectivity_witness().is_some());
        assert_eq!(chain.trim().states.len(), 2);
    }

    #[test]
    fn alternation_bound() {
        let a = a1();
        assert_eq!(a.max_alternation(8).unwrap(), 2);
    }

    #[test]
    fn word_enumeration() {
        assert_eq!(all_words(&['a', 'b'], 2).len(), 7);
        assert_eq!(all_words(&['a'], 0), vec![String::new()]);
    }
}
