//! Expressions over registers and semiring constants.
//!
//! An expression is a tree of constants, register names and n-ary `(+)`/`(*)`
//! nodes. The module provides evaluation, the copyless check, zero-reduction,
//! flattening into reduced parse trees, the alternation measure, monomial
//! normal form and the single-variable affine form.
//!
//! The concrete syntax maps `+` to the semiring sum and `*` to the semiring
//! product regardless of the instance: under max-plus, `+` means `max` and
//! `*` means numeric addition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CraError, Result};
use crate::semiring::{SemiringSpec, SemiringValue};

/// The two semiring operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Add,
    Mul,
}

impl OpKind {
    pub fn symbol(self) -> char {
        match self {
            OpKind::Add => '+',
            OpKind::Mul => '*',
        }
    }
}

/// An expression over a register set, with n-ary operator nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(SemiringValue),
    Var(String),
    Op(OpKind, Vec<Expr>),
}

/// A valuation: register name to semiring value.
pub type Valuation = BTreeMap<String, SemiringValue>;

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(SemiringValue::Int(n))
    }

    /// An `(+)` node; collapses to the single child when given one operand.
    pub fn add(children: Vec<Expr>) -> Expr {
        Expr::op(OpKind::Add, children)
    }

    /// A `(*)` node; collapses to the single child when given one operand.
    pub fn mul(children: Vec<Expr>) -> Expr {
        Expr::op(OpKind::Mul, children)
    }

    pub fn op(kind: OpKind, mut children: Vec<Expr>) -> Expr {
        assert!(!children.is_empty(), "operator node needs operands");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Expr::Op(kind, children)
        }
    }

    /// The set of registers mentioned anywhere in the expression.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Op(_, children) => {
                for c in children {
                    c.collect_vars(out);
                }
            }
        }
    }

    /// True iff every register occurs at most once in the expression.
    pub fn is_copyless(&self) -> bool {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Const(_) => {}
                Expr::Var(x) => {
                    let c = counts.entry(x).or_insert(0);
                    *c += 1;
                    if *c > 1 {
                        return false;
                    }
                }
                Expr::Op(_, children) => stack.extend(children),
            }
        }
        true
    }

    /// The first register that occurs more than once, if any.
    pub fn copyless_witness(&self) -> Option<String> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Const(_) => {}
                Expr::Var(x) => {
                    let c = counts.entry(x).or_insert(0);
                    *c += 1;
                    if *c > 1 {
                        return Some(x.clone());
                    }
                }
                Expr::Op(_, children) => stack.extend(children),
            }
        }
        None
    }

    /// Recursive evaluation under a valuation.
    pub fn evaluate(&self, spec: SemiringSpec, valuation: &Valuation) -> Result<SemiringValue> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(x) => valuation
                .get(x)
                .copied()
                .ok_or_else(|| CraError::MissingBinding(x.clone())),
            Expr::Op(kind, children) => {
                let mut acc = match kind {
                    OpKind::Add => spec.zero(),
                    OpKind::Mul => spec.one(),
                };
                for c in children {
                    let v = c.evaluate(spec, valuation)?;
                    acc = match kind {
                        OpKind::Add => spec.add(acc, v)?,
                        OpKind::Mul => spec.mul(acc, v)?,
                    };
                }
                Ok(acc)
            }
        }
    }

    /// Evaluate a ground expression (no registers).
    pub fn evaluate_ground(&self, spec: SemiringSpec) -> Result<SemiringValue> {
        self.evaluate(spec, &Valuation::new())
    }

    /// Removes the semiring zero using `e (+) 0 = e` and `e (*) 0 = 0`.
    ///
    /// The result either is `Const(zero)` or contains no zero constant, and
    /// evaluates identically to the input everywhere.
    pub fn reduce_zeros(&self, spec: SemiringSpec) -> Expr {
        let zero = spec.zero();
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Op(kind, children) => {
                let reduced: Vec<Expr> = children.iter().map(|c| c.reduce_zeros(spec)).collect();
                match kind {
                    OpKind::Add => {
                        let kept: Vec<Expr> =
                            reduced.into_iter().filter(|c| *c != Expr::Const(zero)).collect();
                        if kept.is_empty() {
                            Expr::Const(zero)
                        } else {
                            Expr::op(OpKind::Add, kept)
                        }
                    }
                    OpKind::Mul => {
                        if reduced.iter().any(|c| *c == Expr::Const(zero)) {
                            Expr::Const(zero)
                        } else {
                            Expr::op(OpKind::Mul, reduced)
                        }
                    }
                }
            }
        }
    }

    /// Flattens nested same-kind operators into a reduced parse tree.
    pub fn to_reduced_parse_tree(&self) -> ParseTree {
        ParseTree(flatten(self))
    }

    /// Alternation: the depth of the reduced parse tree of the expression.
    pub fn alternation(&self) -> usize {
        self.to_reduced_parse_tree().depth()
    }
}

fn flatten(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Op(kind, children) => {
            let mut flat = Vec::new();
            for c in children {
                match flatten(c) {
                    Expr::Op(k2, grandchildren) if k2 == *kind => flat.extend(grandchildren),
                    other => flat.push(other),
                }
            }
            Expr::op(*kind, flat)
        }
    }
}

/// A reduced, complete parse tree: no operator node has a child with the same
/// operator, and every operator node has at least two children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree(Expr);

impl ParseTree {
    pub fn expr(&self) -> &Expr {
        &self.0
    }

    pub fn into_expr(self) -> Expr {
        self.0
    }

    /// Edge count to the deepest leaf; leaves score 0.
    pub fn depth(&self) -> usize {
        fn go(e: &Expr) -> usize {
            match e {
                Expr::Const(_) | Expr::Var(_) => 0,
                Expr::Op(_, children) => 1 + children.iter().map(go).max().unwrap_or(0),
            }
        }
        go(&self.0)
    }

    pub fn is_reduced(&self) -> bool {
        fn go(e: &Expr) -> bool {
            match e {
                Expr::Const(_) | Expr::Var(_) => true,
                Expr::Op(kind, children) => {
                    children.len() >= 2
                        && children.iter().all(|c| {
                            !matches!(c, Expr::Op(k2, _) if k2 == kind) && go(c)
                        })
                }
            }
        }
        go(&self.0)
    }
}

/// One `c (*) x_1 (*) ... (*) x_k` term of a monomial normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: SemiringValue,
    pub vars: BTreeSet<String>,
}

impl Monomial {
    /// Rebuilds the expression `coeff (*) x_1 (*) ... (*) x_k`.
    pub fn to_expr(&self) -> Expr {
        let mut factors = vec![Expr::Const(self.coeff)];
        factors.extend(self.vars.iter().map(Expr::var));
        Expr::op(OpKind::Mul, factors)
    }
}

/// Rebuilds the sum-of-monomials expression for a monomial list.
pub fn monomials_to_expr(ms: &[Monomial], spec: SemiringSpec) -> Expr {
    if ms.is_empty() {
        return Expr::Const(spec.zero());
    }
    Expr::op(OpKind::Add, ms.iter().map(Monomial::to_expr).collect())
}

/// Monomial normal form of a copyless expression: a sum of terms
/// `c_i (*) prod(X_i)` with pairwise-distinct variable sets.
pub fn monomial_form(e: &Expr, spec: SemiringSpec) -> Result<Vec<Monomial>> {
    if let Some(x) = e.copyless_witness() {
        return Err(CraError::CopylessViolation(x));
    }
    let reduced = e.reduce_zeros(spec);
    let raw = monomials_of(&reduced, spec)?;
    merge_monomials(raw, spec)
}

fn monomials_of(e: &Expr, spec: SemiringSpec) -> Result<Vec<Monomial>> {
    match e {
        Expr::Const(v) => Ok(vec![Monomial { coeff: *v, vars: BTreeSet::new() }]),
        Expr::Var(x) => Ok(vec![Monomial {
            coeff: spec.one(),
            vars: BTreeSet::from([x.clone()]),
        }]),
        Expr::Op(OpKind::Add, children) => {
            let mut out = Vec::new();
            for c in children {
                out.extend(monomials_of(c, spec)?);
            }
            Ok(out)
        }
        Expr::Op(OpKind::Mul, children) => {
            let mut acc = vec![Monomial { coeff: spec.one(), vars: BTreeSet::new() }];
            for c in children {
                let rhs = monomials_of(c, spec)?;
                let mut next = Vec::with_capacity(acc.len() * rhs.len());
                for m1 in &acc {
                    for m2 in &rhs {
                        // Copylessness makes the two variable sets disjoint.
                        let mut vars = m1.vars.clone();
                        vars.extend(m2.vars.iter().cloned());
                        next.push(Monomial {
                            coeff: spec.mul(m1.coeff, m2.coeff)?,
                            vars,
                        });
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
    }
}

fn merge_monomials(raw: Vec<Monomial>, spec: SemiringSpec) -> Result<Vec<Monomial>> {
    let mut merged: BTreeMap<BTreeSet<String>, SemiringValue> = BTreeMap::new();
    for m in raw {
        match merged.get_mut(&m.vars) {
            Some(c) => *c = spec.add(*c, m.coeff)?,
            None => {
                merged.insert(m.vars, m.coeff);
            }
        }
    }
    Ok(merged
        .into_iter()
        .map(|(vars, coeff)| Monomial { coeff, vars })
        .collect())
}

/// Puts a copyless expression over at most the single register `x` into the
/// affine shape `(c (*) x) (+) d`, returning `(c, d)`.
///
/// If `x` actually occurs then `c` is not the semiring zero, provided the
/// input is zero-reduced.
pub fn affine_form(e: &Expr, x: &str, spec: SemiringSpec) -> Result<(SemiringValue, SemiringValue)> {
    let vs = e.vars();
    if vs.iter().any(|v| v != x) {
        return Err(CraError::NotUnivariate(x.to_string()));
    }
    affine_fold(e, x, spec)
}

fn affine_fold(e: &Expr, x: &str, spec: SemiringSpec) -> Result<(SemiringValue, SemiringValue)> {
    match e {
        Expr::Const(v) => Ok((spec.zero(), *v)),
        Expr::Var(_) => Ok((spec.one(), spec.zero())),
        Expr::Op(OpKind::Add, children) => {
            let mut c = spec.zero();
            let mut d = spec.zero();
            for ch in children {
                let (c2, d2) = affine_fold(ch, x, spec)?;
                c = spec.add(c, c2)?;
                d = spec.add(d, d2)?;
            }
            Ok((c, d))
        }
        Expr::Op(OpKind::Mul, children) => {
            // Copylessness: at most one factor mentions x; the rest are ground.
            let mut c = spec.zero();
            let mut d = spec.one();
            let mut seen_x = false;
            for ch in children {
                if ch.vars().contains(x) {
                    seen_x = true;
                    let (c2, d2) = affine_fold(ch, x, spec)?;
                    c = c2;
                    d = spec.mul(d, d2)?;
                } else {
                    let k = ch.evaluate_ground(spec)?;
                    d = spec.mul(d, k)?;
                }
            }
            if seen_x {
                // d currently holds the full ground product times d2; the
                // coefficient picks up the ground product as well.
                let ground = ground_product(children, x, spec)?;
                c = spec.mul(c, ground)?;
            }
            Ok((c, d))
        }
    }
}

fn ground_product(children: &[Expr], x: &str, spec: SemiringSpec) -> Result<SemiringValue> {
    let mut acc = spec.one();
    for ch in children {
        if !ch.vars().contains(x) {
            acc = spec.mul(acc, ch.evaluate_ground(spec)?)?;
        }
    }
    Ok(acc)
}

/// Outcome of sampled expression-equivalence checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivVerdict {
    Equivalent,
    Counterexample(Valuation),
}

/// Compares two expressions under pseudo-random valuations: `samples` draws
/// from `[0, 10^6]` plus, for each variable in turn, a valuation pinning it to
/// the semiring zero. Agreeing overflow counts as agreement.
pub fn equiv_check(
    e1: &Expr,
    e2: &Expr,
    spec: SemiringSpec,
    samples: usize,
    seed: u64,
) -> EquivVerdict {
    let mut vars: BTreeSet<String> = e1.vars();
    vars.extend(e2.vars());
    let vars: Vec<String> = vars.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut trials: Vec<Valuation> = Vec::new();
    for _ in 0..samples {
        let mut val = Valuation::new();
        for v in &vars {
            val.insert(v.clone(), SemiringValue::Int(rng.gen_range(0..=1_000_000)));
        }
        trials.push(val);
    }
    for i in 0..vars.len() {
        let mut val = Valuation::new();
        for (j, v) in vars.iter().enumerate() {
            let x = if i == j {
                spec.zero()
            } else {
                SemiringValue::Int(rng.gen_range(0..=1_000_000))
            };
            val.insert(v.clone(), x);
        }
        trials.push(val);
    }
    if vars.is_empty() && trials.is_empty() {
        trials.push(Valuation::new());
    }

    for val in trials {
        if e1.evaluate(spec, &val) != e2.evaluate(spec, &val) {
            return EquivVerdict::Counterexample(val);
        }
    }
    EquivVerdict::Equivalent
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(v) => write!(f, "{v}"),
        Expr::Var(x) => write!(f, "{x}"),
        Expr::Op(kind, children) => {
            let sep = match kind {
                OpKind::Add => " + ",
                OpKind::Mul => " * ",
            };
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                if matches!(c, Expr::Op(..)) {
                    write!(f, "({c})")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Ok(())
        }
    }
}

/// Parses the concrete expression grammar:
/// `expr := term ('+' term)*; term := factor ('*' factor)*;
/// factor := integer | '-inf' | '+inf' | 'ZERO' | 'ONE' | ident | '(' expr ')'`.
pub fn parse_expr(input: &str, spec: SemiringSpec) -> Result<Expr> {
    let tokens = tokenize(input)?;
    let mut p = Parser { tokens, pos: 0, spec };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(CraError::Semantic(format!(
            "unexpected trailing token `{}` in expression `{input}`",
            p.tokens[p.pos]
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Plus,
    Star,
    LParen,
    RParen,
    Int(i64),
    MinusInf,
    PlusInf,
    Zero,
    One,
    Ident(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Plus => write!(f, "+"),
            Token::Star => write!(f, "*"),
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
            Token::Int(n) => write!(f, "{n}"),
            Token::MinusInf => write!(f, "-inf"),
            Token::PlusInf => write!(f, "+inf"),
            Token::Zero => write!(f, "ZERO"),
            Token::One => write!(f, "ONE"),
            Token::Ident(s) => write!(f, "{s}"),
        }
    }
}

fn tokenize(input: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '+' => {
                if chars[i..].starts_with(&['+', 'i', 'n', 'f']) {
                    out.push(Token::PlusInf);
                    i += 4;
                } else {
                    out.push(Token::Plus);
                    i += 1;
                }
            }
            '-' => {
                if chars[i..].starts_with(&['-', 'i', 'n', 'f']) {
                    out.push(Token::MinusInf);
                    i += 4;
                } else if i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    let start = i;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    let n = text
                        .parse::<i64>()
                        .map_err(|_| CraError::Semantic(format!("bad integer `{text}`")))?;
                    out.push(Token::Int(n));
                } else {
                    return Err(CraError::Semantic("stray `-` in expression".into()));
                }
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text
                    .parse::<i64>()
                    .map_err(|_| CraError::Semantic(format!("bad integer `{text}`")))?;
                out.push(Token::Int(n));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(match text.as_str() {
                    "ZERO" => Token::Zero,
                    "ONE" => Token::One,
                    _ => Token::Ident(text),
                });
            }
            _ => {
                return Err(CraError::Semantic(format!(
                    "unexpected character `{c}` in expression"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    spec: SemiringSpec,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Token::Plus) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(Expr::op(OpKind::Add, terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Token::Star) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(Expr::op(OpKind::Mul, factors))
    }

    fn factor(&mut self) -> Result<Expr> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| CraError::Semantic("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Int(n) => Ok(Expr::int(n)),
            Token::MinusInf => Ok(Expr::Const(SemiringValue::MinusInf)),
            Token::PlusInf => Ok(Expr::Const(SemiringValue::PlusInf)),
            Token::Zero => Ok(Expr::Const(self.spec.zero())),
            Token::One => Ok(Expr::Const(self.spec.one())),
            Token::Ident(name) => Ok(Expr::Var(name)),
            Token::LParen => {
                let e = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(CraError::Semantic("missing `)` in expression".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            other => Err(CraError::Semantic(format!(
                "unexpected token `{other}` in expression"
            ))),
        }
    }
}
