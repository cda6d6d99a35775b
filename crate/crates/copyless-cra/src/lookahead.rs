//! CRA with regular lookahead and its elimination: subset tracking into an
//! unambiguous CRA, then determinization of bounded-alternation machines by
//! substitution trees with X-reductions and the extend/prune/shrink/reduce
//! step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::cra::Cra;
use crate::error::{CraError, Result};
use crate::expr::{Expr, Valuation};
use crate::semiring::SemiringValue;
use crate::subst::{RegisterOrder, Substitution};

/// A deterministic, total finite automaton used as a lookahead language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    pub states: Vec<String>,
    pub alphabet: Vec<char>,
    /// Total transition map `(state, symbol) -> state`.
    pub trans: BTreeMap<(String, char), String>,
    pub start: String,
    pub finals: BTreeSet<String>,
}

impl Dfa {
    pub fn check_structure(&self) -> Result<()> {
        if !self.states.contains(&self.start) {
            return Err(CraError::Semantic(format!("unknown DFA start state `{}`", self.start)));
        }
        for f in &self.finals {
            if !self.states.contains(f) {
                return Err(CraError::Semantic(format!("unknown DFA final state `{f}`")));
            }
        }
        for p in &self.states {
            for &a in &self.alphabet {
                match self.trans.get(&(p.clone(), a)) {
                    None => {
                        return Err(CraError::Semantic(format!(
                            "DFA transition missing for state `{p}` on `{a}`"
                        )))
                    }
                    Some(p2) if !self.states.contains(p2) => {
                        return Err(CraError::Semantic(format!(
                            "DFA transition from `{p}` on `{a}` targets unknown state `{p2}`"
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn step(&self, p: &str, a: char) -> Result<&String> {
        self.trans
            .get(&(p.to_string(), a))
            .ok_or_else(|| CraError::Semantic(format!("DFA has no transition from `{p}` on `{a}`")))
    }

    pub fn accepts(&self, w: &str) -> bool {
        let mut p = &self.start;
        for a in w.chars() {
            match self.trans.get(&(p.clone(), a)) {
                Some(p2) => p = p2,
                None => return false,
            }
        }
        self.finals.contains(p)
    }

    /// The one-state automaton accepting every word over `alphabet`.
    pub fn sigma_star(alphabet: &[char]) -> Dfa {
        let s = "s".to_string();
        Dfa {
            states: vec![s.clone()],
            alphabet: alphabet.to_vec(),
            trans: alphabet.iter().map(|&a| ((s.clone(), a), s.clone())).collect(),
            start: s.clone(),
            finals: BTreeSet::from([s]),
        }
    }
}

/// True iff `L(d1) ∩ L(d2) = ∅`, by reachability in the product automaton.
/// Both automata must share one alphabet.
pub fn check_disjoint(d1: &Dfa, d2: &Dfa) -> bool {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([(d1.start.clone(), d2.start.clone())]);
    seen.insert((d1.start.clone(), d2.start.clone()));
    while let Some((p1, p2)) = queue.pop_front() {
        if d1.finals.contains(&p1) && d2.finals.contains(&p2) {
            return false;
        }
        for &a in &d1.alphabet {
            if let (Some(q1), Some(q2)) = (
                d1.trans.get(&(p1.clone(), a)),
                d2.trans.get(&(p2.clone(), a)),
            ) {
                if seen.insert((q1.clone(), q2.clone())) {
                    queue.push_back((q1.clone(), q2.clone()));
                }
            }
        }
    }
    true
}

/// A CRA with regular lookahead: transitions are guarded by named regular
/// languages tested against the suffix starting at the current letter, and
/// the guards on each state are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CraRla {
    pub states: Vec<String>,
    pub alphabet: Vec<char>,
    pub order: RegisterOrder,
    /// Named lookahead languages.
    pub langs: BTreeMap<String, Dfa>,
    /// Partial transition map `(state, language name) -> (state, substitution)`.
    pub trans: BTreeMap<(String, String), (String, Substitution)>,
    pub start: String,
    pub init: Substitution,
    pub output: BTreeMap<String, Expr>,
    pub semiring: crate::semiring::SemiringSpec,
    /// Declared alternation bound, if any.
    pub alt_bound: Option<usize>,
}

impl CraRla {
    pub fn check_word(&self, w: &str) -> Result<()> {
        for c in w.chars() {
            if !self.alphabet.contains(&c) {
                return Err(CraError::AlphabetError(c));
            }
        }
        Ok(())
    }

    /// Structural checks plus pairwise disjointness of the guard languages
    /// on each state.
    pub fn validate(&self) -> Result<()> {
        if !self.states.contains(&self.start) {
            return Err(CraError::Semantic(format!("unknown start state `{}`", self.start)));
        }
        if !self.init.is_ground() || self.init.domain() != self.order.registers() {
            return Err(CraError::Semantic("initial valuation must be ground over the registers".into()));
        }
        for (name, dfa) in &self.langs {
            dfa.check_structure()?;
            if dfa.alphabet != self.alphabet {
                return Err(CraError::Semantic(format!(
                    "lookahead `{name}` uses a different alphabet"
                )));
            }
        }
        for ((q, l), (q2, sigma)) in &self.trans {
            if !self.states.contains(q) || !self.states.contains(q2) {
                return Err(CraError::Semantic(format!(
                    "transition `{q}` --[{l}]--> `{q2}` mentions an unknown state"
                )));
            }
            if !self.langs.contains_key(l) {
                return Err(CraError::Semantic(format!("unknown lookahead language `{l}`")));
            }
            if sigma.domain() != self.order.registers() {
                return Err(CraError::Semantic(format!(
                    "substitution on `{q}` --[{l}]--> has wrong register set"
                )));
            }
        }
        for q in &self.states {
            if !self.output.contains_key(q) {
                return Err(CraError::Semantic(format!("no output for state `{q}`")));
            }
            let guards: Vec<&String> = self
                .trans
                .keys()
                .filter(|(p, _)| p == q)
                .map(|(_, l)| l)
                .collect();
            for i in 0..guards.len() {
                for j in i + 1..guards.len() {
                    if !check_disjoint(&self.langs[guards[i]], &self.langs[guards[j]]) {
                        return Err(CraError::DisjointnessViolation(
                            guards[i].clone(),
                            guards[j].clone(),
                            q.clone(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs the lookahead machine directly: at position `i` the unique guard
/// containing the suffix `a_i a_{i+1} ... a_n` fires.
pub fn rla_run(r: &CraRla, w: &str) -> Result<SemiringValue> {
    r.check_word(w)?;
    let letters: Vec<char> = w.chars().collect();
    let mut q = r.start.clone();
    let mut val: Valuation = r.init.to_valuation(r.semiring)?;
    for i in 0..letters.len() {
        let suffix: String = letters[i..].iter().collect();
        let mut hits: Vec<(&String, &String, &Substitution)> = Vec::new();
        for ((p, l), (q2, sigma)) in &r.trans {
            if p == &q && r.langs[l].accepts(&suffix) {
                hits.push((l, q2, sigma));
            }
        }
        match hits.len() {
            0 => return Err(CraError::StuckRun(i + 1)),
            1 => {
                let (_, q2, sigma) = hits[0];
                let mut next = Valuation::new();
                for reg in r.order.registers() {
                    next.insert(reg.clone(), sigma.image(reg)?.evaluate(r.semiring, &val)?);
                }
                val = next;
                q = q2.clone();
            }
            _ => {
                return Err(CraError::DisjointnessViolation(
                    hits[0].0.clone(),
                    hits[1].0.clone(),
                    q,
                ))
            }
        }
    }
    r.output[&q].evaluate(r.semiring, &val)
}

/// A nondeterministic CRA intended to have exactly one accepting run per
/// word; violations are detected and reported, not assumed away.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnambiguousCra {
    pub states: Vec<String>,
    pub alphabet: Vec<char>,
    pub order: RegisterOrder,
    /// Transition relation `(state, symbol) -> successors with substitutions`.
    pub delta: BTreeMap<(String, char), Vec<(String, Substitution)>>,
    pub start: String,
    pub init: Substitution,
    pub finals: BTreeSet<String>,
    pub output: BTreeMap<String, Expr>,
    pub semiring: crate::semiring::SemiringSpec,
    pub alt_bound: Option<usize>,
}

impl UnambiguousCra {
    /// Views a deterministic CRA as the degenerate unambiguous machine in
    /// which every state accepts.
    pub fn from_cra(a: &Cra) -> UnambiguousCra {
        UnambiguousCra {
            states: a.states.clone(),
            alphabet: a.alphabet.clone(),
            order: a.order.clone(),
            delta: a
                .delta
                .iter()
                .map(|(k, v)| (k.clone(), vec![v.clone()]))
                .collect(),
            start: a.start.clone(),
            init: a.init.clone(),
            finals: a.states.iter().cloned().collect(),
            output: a.output.clone(),
            semiring: a.semiring,
            alt_bound: None,
        }
    }

    pub fn check_word(&self, w: &str) -> Result<()> {
        for c in w.chars() {
            if !self.alphabet.contains(&c) {
                return Err(CraError::AlphabetError(c));
            }
        }
        Ok(())
    }

    /// All active runs on `w`: final state and the composed substitution of
    /// the run.
    pub fn runs(&self, w: &str) -> Result<Vec<(String, Substitution)>> {
        self.check_word(w)?;
        let identity = Substitution::identity(self.order.registers().to_vec());
        let mut frontier = vec![(self.start.clone(), identity)];
        for a in w.chars() {
            let mut next = Vec::new();
            for (q, acc) in &frontier {
                if let Some(succs) = self.delta.get(&(q.clone(), a)) {
                    for (q2, sigma) in succs {
                        next.push((q2.clone(), acc.compose(sigma)?));
                    }
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }

    pub fn accepting_runs(&self, w: &str) -> Result<Vec<(String, Substitution)>> {
        Ok(self
            .runs(w)?
            .into_iter()
            .filter(|(q, _)| self.finals.contains(q))
            .collect())
    }

    /// Output on `w`; the word must have exactly one accepting run.
    pub fn eval(&self, w: &str) -> Result<SemiringValue> {
        let accepting = self.accepting_runs(w)?;
        if accepting.len() != 1 {
            return Err(CraError::AcceptanceCount(w.to_string(), accepting.len()));
        }
        let (q, sigma) = &accepting[0];
        let ground = self.init.apply(&sigma.apply(&self.output[q])?)?;
        ground.evaluate_ground(self.semiring)
    }

    /// Empirical alternation bound: the maximum alternation over all
    /// register contents and accepting outputs of runs on words of length at
    /// most `max_len`.
    pub fn max_alternation(&self, max_len: usize) -> Result<usize> {
        let mut best = 0;
        for w in crate::cra::all_words(&self.alphabet, max_len) {
            for (q, sigma) in self.runs(&w)? {
                for reg in self.order.registers() {
                    let e = sigma.image(reg)?.reduce_zeros(self.semiring);
                    best = best.max(e.alternation());
                }
                if self.finals.contains(&q) {
                    let out = sigma.apply(&self.output[&q])?.reduce_zeros(self.semiring);
                    best = best.max(out.alternation());
                }
            }
        }
        Ok(best)
    }

    /// Restricts to states that are both reachable from the start and able
    /// to reach an accepting state, so that every surviving run is a prefix
    /// of some accepting run. The start state is always kept.
    pub fn trim(&self) -> UnambiguousCra {
        let mut forward: BTreeSet<String> = BTreeSet::from([self.start.clone()]);
        let mut queue = VecDeque::from([self.start.clone()]);
        while let Some(q) = queue.pop_front() {
            for &a in &self.alphabet {
                for (q2, _) in self.delta.get(&(q.clone(), a)).into_iter().flatten() {
                    if forward.insert(q2.clone()) {
                        queue.push_back(q2.clone());
                    }
                }
            }
        }
        let mut reverse: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
        for ((q, _), succs) in &self.delta {
            for (q2, _) in succs {
                reverse.entry(q2).or_default().push(q);
            }
        }
        let mut backward: BTreeSet<String> = self.finals.clone();
        let mut queue: VecDeque<String> = self.finals.iter().cloned().collect();
        while let Some(q) = queue.pop_front() {
            for &p in reverse.get(&q).into_iter().flatten() {
                if backward.insert(p.clone()) {
                    queue.push_back(p.clone());
                }
            }
        }
        let keep: BTreeSet<String> = forward
            .intersection(&backward)
            .cloned()
            .chain(std::iter::once(self.start.clone()))
            .collect();
        UnambiguousCra {
            states: self.states.iter().filter(|q| keep.contains(*q)).cloned().collect(),
            alphabet: self.alphabet.clone(),
            order: self.order.clone(),
            delta: self
                .delta
                .iter()
                .filter(|((q, _), _)| keep.contains(q))
                .map(|(k, succs)| {
                    (
                        k.clone(),
                        succs.iter().filter(|(q2, _)| keep.contains(q2)).cloned().collect(),
                    )
                })
                .filter(|(_, succs): &(_, Vec<(String, Substitution)>)| !succs.is_empty())
                .collect(),
            start: self.start.clone(),
            init: self.init.clone(),
            finals: self.finals.intersection(&keep).cloned().collect(),
            output: self
                .output
                .iter()
                .filter(|(q, _)| keep.contains(*q))
                .map(|(q, e)| (q.clone(), e.clone()))
                .collect(),
            semiring: self.semiring,
            alt_bound: self.alt_bound,
        }
    }
}

fn tracking_name(q: &str, set: &BTreeSet<(String, String)>) -> String {
    if set.is_empty() {
        return format!("{q}@-");
    }
    let items: Vec<String> = set.iter().map(|(l, p)| format!("{l}:{p}")).collect();
    format!("{q}@{}", items.join(","))
}

/// Removes the lookahead guards by guessing them and tracking every pending
/// guess in a set of language states, verified at the end of the word. The
/// result has exactly one accepting run per word.
pub fn to_unambiguous(r: &CraRla) -> Result<UnambiguousCra> {
    r.validate()?;
    type Tracking = BTreeSet<(String, String)>;
    let initial: (String, Tracking) = (r.start.clone(), BTreeSet::new());
    let mut known: BTreeMap<(String, Tracking), String> = BTreeMap::new();
    known.insert(initial.clone(), tracking_name(&initial.0, &initial.1));
    let mut queue = VecDeque::from([initial]);
    let mut states = vec![tracking_name(&r.start, &BTreeSet::new())];
    let mut delta: BTreeMap<(String, char), Vec<(String, Substitution)>> = BTreeMap::new();
    let mut finals = BTreeSet::new();
    let mut output = BTreeMap::new();
    while let Some((q, set)) = queue.pop_front() {
        let name = known[&(q.clone(), set.clone())].clone();
        if set.iter().all(|(l, p)| r.langs[l].finals.contains(p)) {
            finals.insert(name.clone());
        }
        output.insert(name.clone(), r.output[&q].clone());
        for &a in &r.alphabet {
            for ((p, l), (q2, sigma)) in &r.trans {
                if p != &q {
                    continue;
                }
                let mut seeded = set.clone();
                seeded.insert((l.clone(), r.langs[l].start.clone()));
                let mut stepped: Tracking = BTreeSet::new();
                for (lname, dstate) in &seeded {
                    stepped.insert((lname.clone(), r.langs[lname].step(dstate, a)?.clone()));
                }
                let target = (q2.clone(), stepped);
                let target_name = known.entry(target.clone()).or_insert_with(|| {
                    let n = tracking_name(&target.0, &target.1);
                    states.push(n.clone());
                    queue.push_back(target.clone());
                    n
                });
                delta
                    .entry((name.clone(), a))
                    .or_default()
                    .push((target_name.clone(), sigma.clone()));
            }
        }
    }
    let full = UnambiguousCra {
        states,
        alphabet: r.alphabet.clone(),
        order: r.order.clone(),
        delta,
        start: tracking_name(&r.start, &BTreeSet::new()),
        init: r.init.clone(),
        finals,
        output,
        semiring: r.semiring,
        alt_bound: r.alt_bound,
    };
    // Drop states whose tracked guesses can no longer all be verified;
    // otherwise doomed runs survive and may merge into shared states.
    Ok(full.trim())
}

/// A node of a substitution tree: an update over the source registers whose
/// images may mention the target registers, an optional state label (labeled
/// nodes are exactly the live leaves), and the children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetNode {
    pub subst: Substitution,
    pub children: Vec<DetNode>,
    pub leaf: Option<String>,
}

impl DetNode {
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(DetNode::node_count).sum::<usize>()
    }

    /// All leaves, as `(path from the root, node)` pairs.
    pub fn leaves(&self) -> Vec<(Vec<usize>, &DetNode)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut Vec::new(), &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a DetNode)>) {
        if self.children.is_empty() {
            out.push((path.clone(), self));
            return;
        }
        for (i, c) in self.children.iter().enumerate() {
            path.push(i);
            c.collect_leaves(path, out);
            path.pop();
        }
    }

    fn for_each_node<'a>(&'a self, f: &mut impl FnMut(&'a DetNode)) {
        f(self);
        for c in &self.children {
            c.for_each_node(f);
        }
    }
}

/// A determinization state: a complete, copyless, constants-free
/// substitution tree together with its injective leaf labeling, plus the
/// canonical serialization used for state identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetState {
    pub root: DetNode,
    pub key: String,
}

impl DetState {
    pub fn new(root: DetNode) -> DetState {
        let key = serialize_node(&root);
        DetState { root, key }
    }
}

/// Composes the substitutions along the branch from the root to the leaf at
/// `path`, earliest first; target-register variables pass through as
/// constants.
pub fn tree_collapse(root: &DetNode, path: &[usize]) -> Result<Substitution> {
    let mut node = root;
    let mut acc = root.subst.clone();
    for &i in path {
        node = node.children.get(i).ok_or(CraError::NotALeaf)?;
        acc = acc.compose_partial(&node.subst)?;
    }
    if !node.children.is_empty() {
        return Err(CraError::NotALeaf);
    }
    Ok(acc)
}

/// A bounded supply of fresh auxiliary register names.
#[derive(Debug, Clone)]
pub struct FreshPool {
    prefix: String,
    next: usize,
    budget: usize,
}

impl FreshPool {
    pub fn new(prefix: impl Into<String>, budget: usize) -> FreshPool {
        FreshPool { prefix: prefix.into(), next: 0, budget }
    }

    pub fn fresh(&mut self) -> Result<String> {
        if self.next >= self.budget {
            return Err(CraError::RegisterBudget(self.budget));
        }
        let name = format!("{}{}", self.prefix, self.next);
        self.next += 1;
        Ok(name)
    }

    pub fn issued(&self) -> usize {
        self.next
    }
}

/// The result of an X-reduction: a constants-free copyless tree over the
/// source registers plus fresh auxiliaries, and the partial substitution
/// giving each auxiliary its factored-out content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XReduction {
    pub tree: Expr,
    pub subst: BTreeMap<String, Expr>,
}

fn mentions_any(e: &Expr, vars: &BTreeSet<String>) -> bool {
    match e {
        Expr::Const(_) => false,
        Expr::Var(v) => vars.contains(v),
        Expr::Op(_, children) => children.iter().any(|c| mentions_any(c, vars)),
    }
}

/// Factors every maximal subtree free of `x_vars` into one fresh auxiliary
/// register, leaving a constants-free tree that mentions each auxiliary
/// exactly once and is equivalent to the input under the emitted partial
/// substitution.
pub fn x_reduction(p: &Expr, x_vars: &BTreeSet<String>, pool: &mut FreshPool) -> Result<XReduction> {
    if !mentions_any(p, x_vars) {
        if let Expr::Var(v) = p {
            if x_vars.contains(v) {
                unreachable!();
            }
        }
        let y = pool.fresh()?;
        return Ok(XReduction {
            tree: Expr::var(&y),
            subst: BTreeMap::from([(y, p.clone())]),
        });
    }
    match p {
        Expr::Var(_) => Ok(XReduction { tree: p.clone(), subst: BTreeMap::new() }),
        Expr::Const(_) => unreachable!("constants are free of x_vars"),
        Expr::Op(kind, children) => {
            let mut reduced = Vec::new();
            let mut kept = Vec::new();
            let mut subst = BTreeMap::new();
            for c in children {
                if mentions_any(c, x_vars) {
                    let r = x_reduction(c, x_vars, pool)?;
                    reduced.push(r.tree);
                    subst.extend(r.subst);
                } else {
                    kept.push(c.clone());
                }
            }
            if !kept.is_empty() {
                let y = pool.fresh()?;
                reduced.push(Expr::var(&y));
                subst.insert(y, Expr::op(*kind, kept));
            }
            Ok(XReduction { tree: Expr::op(*kind, reduced), subst })
        }
    }
}

fn expr_signature(e: &Expr, x_vars: &BTreeSet<String>, anonymize: bool) -> String {
    match e {
        Expr::Const(c) => c.to_string(),
        Expr::Var(v) => {
            if anonymize && !x_vars.contains(v) {
                "?".to_string()
            } else {
                v.clone()
            }
        }
        Expr::Op(kind, children) => {
            let parts: Vec<String> = children
                .iter()
                .map(|c| expr_signature(c, x_vars, anonymize))
                .collect();
            format!("({})", parts.join(&kind.symbol().to_string()))
        }
    }
}

fn subst_signature(s: &Substitution, x_vars: &BTreeSet<String>, anonymize: bool) -> String {
    let parts: Vec<String> = s
        .iter()
        .map(|(r, e)| format!("{r}:={}", expr_signature(e, x_vars, anonymize)))
        .collect();
    parts.join(";")
}

/// Sorts every child list by the auxiliary-register-anonymized subtree
/// serialization and returns that serialization. Leaf labels are part of the
/// key, so distinct siblings never compare equal on a valid state.
fn canonical_sort(node: &mut DetNode, x_vars: &BTreeSet<String>) -> String {
    let mut keyed: Vec<(String, DetNode)> = std::mem::take(&mut node.children)
        .into_iter()
        .map(|mut c| {
            let k = canonical_sort(&mut c, x_vars);
            (k, c)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let child_keys: Vec<String> = keyed.iter().map(|(k, _)| k.clone()).collect();
    node.children = keyed.into_iter().map(|(_, c)| c).collect();
    format!(
        "[{}|{}|{}]",
        subst_signature(&node.subst, x_vars, true),
        node.leaf.as_deref().unwrap_or(""),
        child_keys.join(",")
    )
}

fn serialize_node(node: &DetNode) -> String {
    let empty = BTreeSet::new();
    let children: Vec<String> = node.children.iter().map(serialize_node).collect();
    format!(
        "[{}|{}|{}]",
        subst_signature(&node.subst, &empty, false),
        node.leaf.as_deref().unwrap_or(""),
        children.join(",")
    )
}

fn rename_expr(e: &Expr, renaming: &BTreeMap<String, String>) -> Expr {
    match e {
        Expr::Const(_) => e.clone(),
        Expr::Var(v) => match renaming.get(v) {
            Some(n) => Expr::var(n),
            None => e.clone(),
        },
        Expr::Op(kind, children) => {
            Expr::Op(*kind, children.iter().map(|c| rename_expr(c, renaming)).collect())
        }
    }
}

fn vars_in_order(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Const(_) => {}
        Expr::Var(v) => out.push(v.clone()),
        Expr::Op(_, children) => children.iter().for_each(|c| vars_in_order(c, out)),
    }
}

fn extend_leaves(node: &mut DetNode, a: char, u: &UnambiguousCra) {
    if let Some(q) = node.leaf.take() {
        if let Some(succs) = u.delta.get(&(q, a)) {
            node.children = succs
                .iter()
                .map(|(q2, sigma)| DetNode {
                    subst: sigma.clone(),
                    children: Vec::new(),
                    leaf: Some(q2.clone()),
                })
                .collect();
        }
        return;
    }
    for c in &mut node.children {
        extend_leaves(c, a, u);
    }
}

fn prune(node: DetNode) -> Option<DetNode> {
    if node.children.is_empty() {
        return node.leaf.is_some().then_some(node);
    }
    let children: Vec<DetNode> = node.children.into_iter().filter_map(prune).collect();
    if children.is_empty() {
        return None;
    }
    Some(DetNode { children, ..node })
}

fn shrink(node: &mut DetNode) -> Result<()> {
    while node.children.len() == 1 {
        let child = node.children.pop().unwrap();
        node.subst = node.subst.compose_partial(&child.subst)?;
        node.leaf = child.leaf;
        node.children = child.children;
    }
    for c in &mut node.children {
        shrink(c)?;
    }
    Ok(())
}

/// Checks every structural invariant of a determinization state: complete
/// tree of at most `2 |Q|` nodes, constants-free copyless labels with each
/// auxiliary register used at most once overall, injective leaf labeling
/// touching exactly one accepting state, and the register budget.
pub fn check_det_state(
    s: &DetState,
    u: &UnambiguousCra,
    y_budget: usize,
) -> Result<()> {
    let x_vars: BTreeSet<String> = u.order.registers().iter().cloned().collect();
    let fail = |msg: String| Err(CraError::Semantic(format!("invalid determinization state: {msg}")));
    if s.root.node_count() > 2 * u.states.len() {
        return fail(format!("{} nodes exceeds the 2|Q| bound", s.root.node_count()));
    }
    let mut y_seen: BTreeSet<String> = BTreeSet::new();
    let mut problem: Option<String> = None;
    s.root.for_each_node(&mut |n| {
        if problem.is_some() {
            return;
        }
        if n.children.len() == 1 {
            problem = Some("internal node with a single child".into());
        }
        if n.children.is_empty() && n.leaf.is_none() {
            problem = Some("unlabeled leaf".into());
        }
        if !n.subst.is_copyless() {
            problem = Some("node substitution is not copyless".into());
        }
        for (_, e) in n.subst.iter() {
            let mut vs = Vec::new();
            vars_in_order(e, &mut vs);
            if has_constant(e) {
                problem = Some("node substitution mentions a constant".into());
            }
            for v in vs {
                if !x_vars.contains(&v) && !y_seen.insert(v.clone()) {
                    problem = Some(format!("auxiliary register `{v}` used twice in the tree"));
                }
            }
        }
    });
    if let Some(msg) = problem {
        return fail(msg);
    }
    if y_seen.len() > y_budget {
        return fail(format!("{} auxiliary registers exceed the budget {y_budget}", y_seen.len()));
    }
    let leaves = s.root.leaves();
    let labels: Vec<&String> = leaves.iter().filter_map(|(_, n)| n.leaf.as_ref()).collect();
    let distinct: BTreeSet<&String> = labels.iter().copied().collect();
    if distinct.len() != labels.len() {
        return fail("leaf labeling is not injective".into());
    }
    let final_count = labels.iter().filter(|q| u.finals.contains(**q)).count();
    if final_count != 1 {
        return fail(format!("{final_count} accepting leaves instead of exactly 1"));
    }
    Ok(())
}

fn has_constant(e: &Expr) -> bool {
    match e {
        Expr::Const(_) => true,
        Expr::Var(_) => false,
        Expr::Op(_, children) => children.iter().any(has_constant),
    }
}

/// One determinization transition from state `s` on `a`: extend every leaf
/// by the successor relation, prune dead branches, shrink unary chains by
/// composition, factor constants and consumed auxiliaries out of every node
/// by X-reduction, and canonicalize. Returns the successor state and the
/// update over the auxiliary registers. `prefix` is the witness word that
/// reaches `s` and is only used in diagnostics.
pub fn determinize_step(
    s: &DetState,
    a: char,
    u: &UnambiguousCra,
    y_regs: &[String],
    prefix: &str,
) -> Result<(DetState, Substitution)> {
    let word = format!("{prefix}{a}");
    let x_vars: BTreeSet<String> = u.order.registers().iter().cloned().collect();

    let mut root = s.root.clone();
    extend_leaves(&mut root, a, u);
    let mut root = match prune(root) {
        Some(r) => r,
        None => return Err(CraError::AcceptanceCount(word, 0)),
    };
    shrink(&mut root)?;

    let labels: Vec<String> = root
        .leaves()
        .iter()
        .filter_map(|(_, n)| n.leaf.clone())
        .collect();
    let mut seen = BTreeSet::new();
    for q in &labels {
        if !seen.insert(q.clone()) {
            return Err(CraError::Ambiguity(word, q.clone()));
        }
    }
    let final_count = labels.iter().filter(|q| u.finals.contains(*q)).count();
    if final_count != 1 {
        return Err(CraError::AcceptanceCount(word, final_count));
    }

    // Reduce: factor each node image; the collected partial substitution
    // becomes the emitted register update.
    let mut pool = FreshPool::new("#", y_regs.len());
    let mut collected: BTreeMap<String, Expr> = BTreeMap::new();
    reduce_node(&mut root, &x_vars, &mut pool, &mut collected)?;

    canonical_sort(&mut root, &x_vars);
    let mut renaming: BTreeMap<String, String> = BTreeMap::new();
    assign_canonical(&root, &x_vars, y_regs, &mut renaming)?;
    apply_renaming(&mut root, &renaming);

    let zero = Expr::Const(u.semiring.zero());
    let mut map: BTreeMap<String, Expr> = y_regs.iter().map(|y| (y.clone(), zero.clone())).collect();
    for (fresh, canon) in &renaming {
        map.insert(canon.clone(), collected[fresh].clone());
    }
    let update = Substitution::new(y_regs.to_vec(), map)?;
    Ok((DetState::new(root), update))
}

fn reduce_node(
    node: &mut DetNode,
    x_vars: &BTreeSet<String>,
    pool: &mut FreshPool,
    collected: &mut BTreeMap<String, Expr>,
) -> Result<()> {
    for r in node.subst.domain().to_vec() {
        // Work on the reduced parse tree so that repeated composition does
        // not pile up nested same-operator nodes: all factored-out content
        // at one level merges into a single auxiliary register.
        let flat = node.subst.image(&r)?.to_reduced_parse_tree().into_expr();
        let red = x_reduction(&flat, x_vars, pool)?;
        node.subst.set_image(&r, red.tree)?;
        collected.extend(red.subst);
    }
    for c in &mut node.children {
        reduce_node(c, x_vars, pool, collected)?;
    }
    Ok(())
}

fn assign_canonical(
    node: &DetNode,
    x_vars: &BTreeSet<String>,
    y_regs: &[String],
    renaming: &mut BTreeMap<String, String>,
) -> Result<()> {
    for (_, e) in node.subst.iter() {
        let mut vs = Vec::new();
        vars_in_order(e, &mut vs);
        for v in vs {
            if !x_vars.contains(&v) && !renaming.contains_key(&v) {
                let idx = renaming.len();
                if idx >= y_regs.len() {
                    return Err(CraError::RegisterBudget(y_regs.len()));
                }
                renaming.insert(v, y_regs[idx].clone());
            }
        }
    }
    for c in &node.children {
        assign_canonical(c, x_vars, y_regs, renaming)?;
    }
    Ok(())
}

fn apply_renaming(node: &mut DetNode, renaming: &BTreeMap<String, String>) {
    for r in node.subst.domain().to_vec() {
        let renamed = rename_expr(node.subst.image(&r).unwrap(), renaming);
        node.subst.set_image(&r, renamed).unwrap();
    }
    for c in &mut node.children {
        apply_renaming(c, renaming);
    }
}

/// A determinized machine together with the substitution tree behind each of
/// its states, for instrumentation and diagnostics.
#[derive(Debug, Clone)]
pub struct Determinization {
    pub cra: Cra,
    pub det_states: BTreeMap<String, DetState>,
    pub y_regs: Vec<String>,
    pub alt_bound: usize,
}

fn y_register_names(u: &UnambiguousCra, count: usize) -> Vec<String> {
    let mut prefix = "y".to_string();
    while u.order.registers().iter().any(|x| x.starts_with(&prefix)) {
        prefix.push('_');
    }
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

/// Determinizes an unambiguous machine by the lazy substitution-tree
/// construction, keeping the per-state trees.
pub fn determinize_full(u: &UnambiguousCra, max_states: usize) -> Result<Determinization> {
    let n = match u.alt_bound {
        Some(n) => n.max(1),
        None => (u.max_alternation(8)? * 2).max(1),
    };
    let x_len = u.order.registers().len();
    let budget = 2 * u.states.len() * x_len * (x_len * n + 1);
    let y_regs = y_register_names(u, budget.max(x_len));

    // The single-node initial tree maps each register to its dedicated copy.
    let seed = Substitution::new(
        u.order.registers().to_vec(),
        u.order
            .registers()
            .iter()
            .enumerate()
            .map(|(i, x)| (x.clone(), Expr::var(&y_regs[i])))
            .collect(),
    )?;
    let initial = DetState::new(DetNode {
        subst: seed,
        children: Vec::new(),
        leaf: Some(u.start.clone()),
    });
    if !u.finals.contains(&u.start) {
        return Err(CraError::AcceptanceCount(String::new(), 0));
    }
    check_det_state(&initial, u, budget.max(x_len))?;

    let mut names: BTreeMap<String, String> = BTreeMap::new();
    names.insert(initial.key.clone(), "t0".to_string());
    let mut det_states = BTreeMap::from([("t0".to_string(), initial.clone())]);
    let mut states = vec!["t0".to_string()];
    let mut delta: BTreeMap<(String, char), (String, Substitution)> = BTreeMap::new();
    let mut queue = VecDeque::from([("t0".to_string(), initial, String::new())]);
    while let Some((name, state, witness)) = queue.pop_front() {
        for &a in &u.alphabet {
            let (next, update) = determinize_step(&state, a, u, &y_regs, &witness)?;
            let next_name = match names.get(&next.key) {
                Some(n) => n.clone(),
                None => {
                    check_det_state(&next, u, budget.max(x_len))?;
                    let n = format!("t{}", states.len());
                    names.insert(next.key.clone(), n.clone());
                    states.push(n.clone());
                    det_states.insert(n.clone(), next.clone());
                    if states.len() > max_states {
                        return Err(CraError::Explosion {
                            explored: states.len(),
                            frontier: queue.len() + 1,
                            limit: max_states,
                        });
                    }
                    queue.push_back((n.clone(), next, format!("{witness}{a}")));
                    n
                }
            };
            delta.insert((name.clone(), a), (next_name, update));
        }
    }

    let mut output = BTreeMap::new();
    for name in &states {
        let state = &det_states[name];
        let (path, node) = state
            .root
            .leaves()
            .into_iter()
            .find(|(_, n)| n.leaf.as_ref().is_some_and(|q| u.finals.contains(q)))
            .expect("every state keeps exactly one accepting leaf");
        let q = node.leaf.clone().unwrap();
        let branch = tree_collapse(&state.root, &path)?;
        output.insert(name.clone(), branch.apply(&u.output[&q])?);
    }

    let zero = Expr::Const(u.semiring.zero());
    let mut init_map: BTreeMap<String, Expr> =
        y_regs.iter().map(|y| (y.clone(), zero.clone())).collect();
    for (i, x) in u.order.registers().iter().enumerate() {
        init_map.insert(y_regs[i].clone(), u.init.image(x)?.clone());
    }
    let cra = Cra {
        states,
        alphabet: u.alphabet.clone(),
        order: RegisterOrder::new(y_regs.clone()),
        delta,
        start: "t0".to_string(),
        init: Substitution::new(y_regs.clone(), init_map)?,
        output,
        semiring: u.semiring,
    };
    cra.check_structure()?;
    debug_assert!(cra.validate().copyless);
    Ok(Determinization { cra, det_states, y_regs, alt_bound: n })
}

pub fn determinize(u: &UnambiguousCra, max_states: usize) -> Result<Cra> {
    Ok(determinize_full(u, max_states)?.cra)
}

/// Full pipeline: remove the lookahead guards, then determinize.
pub fn eliminate_lookahead(r: &CraRla, max_states: usize) -> Result<Cra> {
    determinize(&to_unambiguous(r)?, max_states)
}
