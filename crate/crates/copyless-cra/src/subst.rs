//! Substitutions over a fixed register set: application, composition, and the
//! copyless, normal-form, stability and collapse predicates.
//!
//! A valuation is just a substitution whose images are all constants, so
//! composing a valuation with a substitution needs no separate machinery.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{CraError, Result};
use crate::expr::{Expr, Valuation};
use crate::semiring::SemiringSpec;

/// A total linear order on the register set: position in the list is the
/// rank, the first register is the minimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterOrder {
    regs: Vec<String>,
}

impl RegisterOrder {
    pub fn new(regs: Vec<String>) -> RegisterOrder {
        RegisterOrder { regs }
    }

    pub fn registers(&self) -> &[String] {
        &self.regs
    }

    pub fn rank(&self, r: &str) -> Option<usize> {
        self.regs.iter().position(|x| x == r)
    }

    /// `a` precedes-or-equals `b` in the order.
    pub fn le(&self, a: &str, b: &str) -> bool {
        match (self.rank(a), self.rank(b)) {
            (Some(i), Some(j)) => i <= j,
            _ => false,
        }
    }
}

/// A total mapping from a register set to expressions over that set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    domain: Vec<String>,
    map: BTreeMap<String, Expr>,
}

impl Substitution {
    /// Builds a substitution; registers missing from `map` default to the
    /// identity `r := r`.
    pub fn new(domain: Vec<String>, map: BTreeMap<String, Expr>) -> Result<Substitution> {
        for k in map.keys() {
            if !domain.contains(k) {
                return Err(CraError::Semantic(format!(
                    "substitution assigns unknown register `{k}`"
                )));
            }
        }
        let mut full = BTreeMap::new();
        for r in &domain {
            let e = map.get(r).cloned().unwrap_or_else(|| Expr::var(r));
            full.insert(r.clone(), e);
        }
        Ok(Substitution { domain, map: full })
    }

    pub fn identity(domain: Vec<String>) -> Substitution {
        Substitution::new(domain, BTreeMap::new()).unwrap()
    }

    /// A constant substitution (a valuation in substitution form).
    pub fn from_valuation(domain: Vec<String>, v: &Valuation) -> Result<Substitution> {
        let mut map = BTreeMap::new();
        for r in &domain {
            let val = v
                .get(r)
                .copied()
                .ok_or_else(|| CraError::MissingBinding(r.clone()))?;
            map.insert(r.clone(), Expr::Const(val));
        }
        Substitution::new(domain, map)
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn image(&self, r: &str) -> Result<&Expr> {
        self.map.get(r).ok_or_else(|| CraError::MissingBinding(r.to_string()))
    }

    pub fn set_image(&mut self, r: &str, e: Expr) -> Result<()> {
        if !self.domain.contains(&r.to_string()) {
            return Err(CraError::MissingBinding(r.to_string()));
        }
        self.map.insert(r.to_string(), e);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.map.iter()
    }

    /// Replaces every variable occurrence in `e` by its image.
    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        match e {
            Expr::Const(_) => Ok(e.clone()),
            Expr::Var(x) => self.image(x).cloned(),
            Expr::Op(kind, children) => {
                let mapped: Result<Vec<Expr>> = children.iter().map(|c| self.apply(c)).collect();
                Ok(Expr::Op(*kind, mapped?))
            }
        }
    }

    /// Like `apply`, but variables outside the domain pass through unchanged
    /// (used where expressions mention auxiliary registers).
    pub fn apply_partial(&self, e: &Expr) -> Expr {
        match e {
            Expr::Const(_) => e.clone(),
            Expr::Var(x) => self.map.get(x).cloned().unwrap_or_else(|| e.clone()),
            Expr::Op(kind, children) => {
                Expr::Op(*kind, children.iter().map(|c| self.apply_partial(c)).collect())
            }
        }
    }

    /// Composition via `apply_partial`: out-of-domain variables in the later
    /// substitution's images survive untouched.
    pub fn compose_partial(&self, later: &Substitution) -> Result<Substitution> {
        if self.domain != later.domain {
            return Err(CraError::DomainMismatch);
        }
        let mut map = BTreeMap::new();
        for r in &self.domain {
            map.insert(r.clone(), self.apply_partial(later.image(r)?));
        }
        Substitution::new(self.domain.clone(), map)
    }

    /// `(self o later)(x) = self.apply(later(x))`: `self` is the earlier
    /// substitution and is substituted into the later one's expressions.
    pub fn compose(&self, later: &Substitution) -> Result<Substitution> {
        if self.domain != later.domain {
            return Err(CraError::DomainMismatch);
        }
        let mut map = BTreeMap::new();
        for r in &self.domain {
            map.insert(r.clone(), self.apply(later.image(r)?)?);
        }
        Substitution::new(self.domain.clone(), map)
    }

    /// True iff every image is copyless and images have pairwise-disjoint
    /// variable sets.
    pub fn is_copyless(&self) -> bool {
        self.copyless_witness().is_none()
    }

    /// A register occurring twice (within one image or across two), if any.
    pub fn copyless_witness(&self) -> Option<String> {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for r in &self.domain {
            let e = self.map.get(r)?;
            if let Some(x) = e.copyless_witness() {
                return Some(x);
            }
            for v in e.vars() {
                if !seen.insert(v.clone()) {
                    return Some(v);
                }
            }
        }
        None
    }

    /// Normal form w.r.t. `order`: `x` precedes every register in `Var(σ(x))`.
    pub fn is_normal_form(&self, order: &RegisterOrder) -> bool {
        self.domain.iter().all(|x| {
            self.map[x].vars().iter().all(|y| order.le(x, y))
        })
    }

    /// Registers `x` with `x ∈ Var(σ(x))`.
    pub fn stable_vars(&self) -> BTreeSet<String> {
        self.domain
            .iter()
            .filter(|x| self.map[*x].vars().contains(*x))
            .cloned()
            .collect()
    }

    /// True iff every register in `nonstable` maps to a ground expression.
    pub fn is_collapse(&self, nonstable: &BTreeSet<String>) -> bool {
        nonstable.iter().all(|x| match self.map.get(x) {
            Some(e) => e.vars().is_empty(),
            None => true,
        })
    }

    /// True iff every image is a constant.
    pub fn is_ground(&self) -> bool {
        self.map.values().all(|e| e.vars().is_empty())
    }

    /// Evaluates a ground substitution to a numeric valuation.
    pub fn to_valuation(&self, spec: SemiringSpec) -> Result<Valuation> {
        let mut out = Valuation::new();
        for (r, e) in &self.map {
            out.insert(r.clone(), e.evaluate_ground(spec)?);
        }
        Ok(out)
    }

    /// Zero-reduces every image.
    pub fn reduce_zeros(&self, spec: SemiringSpec) -> Substitution {
        let map = self
            .map
            .iter()
            .map(|(r, e)| (r.clone(), e.reduce_zeros(spec)))
            .collect();
        Substitution::new(self.domain.clone(), map).unwrap()
    }
}

impl fmt::Display for Substitution {
    /// Textual form `x := <expr> ; y := <expr>`; identity assignments are
    /// omitted, so the identity substitution prints as the empty string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in &self.domain {
            let e = &self.map[r];
            if e == &Expr::var(r) {
                continue;
            }
            if !first {
                f.write_str(" ; ")?;
            }
            write!(f, "{r} := {e}")?;
            first = false;
        }
        Ok(())
    }
}

/// Parses `x := <expr> ; y := <expr>`; omitted registers default to identity.
pub fn parse_subst(input: &str, domain: &[String], spec: SemiringSpec) -> Result<Substitution> {
    let mut map = BTreeMap::new();
    for part in input.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (lhs, rhs) = part
            .split_once(":=")
            .ok_or_else(|| CraError::Semantic(format!("expected `reg := expr`, got `{part}`")))?;
        let reg = lhs.trim().to_string();
        if !domain.contains(&reg) {
            return Err(CraError::Semantic(format!("unknown register `{reg}`")));
        }
        let e = crate::expr::parse_expr(rhs.trim(), spec)?;
        for v in e.vars() {
            if !domain.iter().any(|d| *d == v) {
                return Err(CraError::Semantic(format!("unknown register `{v}`")));
            }
        }
        if map.insert(reg.clone(), e).is_some() {
            return Err(CraError::Semantic(format!("register `{reg}` assigned twice")));
        }
    }
    Substitution::new(domain.to_vec(), map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::semiring::SemiringValue::Int;
    use SemiringSpec::{MaxPlus, Nat};

    fn dom(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn sub(domain: &[&str], text: &str, spec: SemiringSpec) -> Substitution {
        parse_subst(text, &dom(domain), spec).unwrap()
    }

    #[test]
    fn apply_examples() {
        let s = sub(&["x", "y"], "x := 2 * x ; y := 3 * y", Nat);
        let e = parse_expr("x + y", Nat).unwrap();
        assert_eq!(s.apply(&e).unwrap(), parse_expr("(2 * x) + (3 * y)", Nat).unwrap());

        let id = Substitution::identity(dom(&["x", "y"]));
        assert_eq!(id.apply(&e).unwrap(), e);

        let c = sub(&["x"], "x := 5", Nat);
        let sq = parse_expr("x * x", Nat).unwrap();
        assert_eq!(c.apply(&sq).unwrap(), parse_expr("5 * 5", Nat).unwrap());
    }

    #[test]
    fn compose_orientation() {
        // earlier σ1(x) = x * 1, later σ2(y) = x + y:
        // (σ1 o σ2)(y) = σ1(x + y) = (x * 1) + y
        let s1 = sub(&["x", "y"], "x := x * 1", MaxPlus);
        let s2 = sub(&["x", "y"], "y := x + y", MaxPlus);
        let c = s1.compose(&s2).unwrap();
        assert_eq!(c.image("y").unwrap(), &parse_expr("(x * 1) + y", MaxPlus).unwrap());

        let id = Substitution::identity(dom(&["x", "y"]));
        assert_eq!(id.compose(&s2).unwrap(), s2);

        let v1 = sub(&["x", "y"], "x := 1 ; y := 2", Nat);
        let v2 = sub(&["x", "y"], "x := 3 ; y := 4", Nat);
        assert!(v1.compose(&v2).unwrap().is_ground());

        let other = Substitution::identity(dom(&["z"]));
        assert_eq!(s1.compose(&other), Err(CraError::DomainMismatch));
    }

    #[test]
    fn composition_matches_nested_application() {
        let s1 = sub(&["x", "y"], "x := x * 2 ; y := y + 1", Nat);
        let s2 = sub(&["x", "y"], "x := x + y", Nat);
        let c = s1.compose(&s2).unwrap();
        let e = parse_expr("x * y", Nat).unwrap();
        let v: Valuation = [("x".to_string(), Int(3)), ("y".to_string(), Int(4))].into();
        assert_eq!(
            c.apply(&e).unwrap().evaluate(Nat, &v).unwrap(),
            s1.apply(&s2.apply(&e).unwrap()).unwrap().evaluate(Nat, &v).unwrap()
        );
    }

    #[test]
    fn copyless_predicate() {
        // Example 1's a-update
        assert!(sub(&["y", "x"], "y := x + y ; x := 0", MaxPlus).is_copyless());
        assert!(!sub(&["x", "y"], "x := x ; y := x", Nat).is_copyless());
        assert!(!sub(&["x", "y"], "x := y + y ; y := x", Nat).is_copyless());
    }

    #[test]
    fn normal_form_predicate() {
        let order_yx = RegisterOrder::new(dom(&["y", "x"]));
        assert!(sub(&["y", "x"], "y := x + y ; x := 0", MaxPlus).is_normal_form(&order_yx));
        let order_xy = RegisterOrder::new(dom(&["x", "y"]));
        assert!(!sub(&["x", "y"], "x := y ; y := x", Nat).is_normal_form(&order_xy));
        assert!(Substitution::identity(dom(&["x", "y"])).is_normal_form(&order_xy));
    }

    #[test]
    fn stability_and_collapse() {
        let a_update = sub(&["y", "x"], "y := x + y ; x := 0", MaxPlus);
        assert_eq!(a_update.stable_vars(), BTreeSet::from(["y".to_string()]));
        let id = Substitution::identity(dom(&["x", "y"]));
        assert_eq!(id.stable_vars(), BTreeSet::from(["x".to_string(), "y".to_string()]));
        let consts = sub(&["x", "y"], "x := 1 ; y := 2", Nat);
        assert_eq!(consts.stable_vars(), BTreeSet::new());

        assert!(a_update.is_collapse(&BTreeSet::new()));
        assert!(sub(&["x"], "x := 3", Nat).is_collapse(&BTreeSet::from(["x".to_string()])));
        assert!(!sub(&["x"], "x := x * 1", Nat).is_collapse(&BTreeSet::from(["x".to_string()])));
    }

    #[test]
    fn display_round_trip() {
        let s = sub(&["x", "y"], "x := x * 2", Nat);
        let text = s.to_string();
        assert_eq!(text, "x := x * 2");
        assert_eq!(parse_subst(&text, &dom(&["x", "y"]), Nat).unwrap(), s);
        assert_eq!(Substitution::identity(dom(&["x"])).to_string(), "");
    }
}
