//! Weighted automata over the same semirings: dynamic-programming
//! evaluation, accepting-run enumeration and ambiguity profiling.

use std::collections::BTreeMap;

use crate::error::{CraError, Result};
use crate::semiring::{SemiringSpec, SemiringValue};

/// A weighted automaton `(Q, Σ, E, I, F)`; absent edges, initial and final
/// entries carry the semiring zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedAutomaton {
    pub states: Vec<String>,
    pub alphabet: Vec<char>,
    pub weights: BTreeMap<(String, char, String), SemiringValue>,
    pub initial: BTreeMap<String, SemiringValue>,
    pub finals: BTreeMap<String, SemiringValue>,
    pub semiring: SemiringSpec,
}

/// One accepting run: the visited states and the run's weight
/// `I(q_0) (*) w_1 (*) ... (*) w_n (*) F(q_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<String>,
    pub weight: SemiringValue,
}

impl WeightedAutomaton {
    fn zero(&self) -> SemiringValue {
        self.semiring.zero()
    }

    pub fn initial_weight(&self, q: &str) -> SemiringValue {
        self.initial.get(q).copied().unwrap_or_else(|| self.zero())
    }

    pub fn final_weight(&self, q: &str) -> SemiringValue {
        self.finals.get(q).copied().unwrap_or_else(|| self.zero())
    }

    pub fn edge_weight(&self, p: &str, a: char, q: &str) -> SemiringValue {
        self.weights
            .get(&(p.to_string(), a, q.to_string()))
            .copied()
            .unwrap_or_else(|| self.zero())
    }

    pub fn check_word(&self, w: &str) -> Result<()> {
        for c in w.chars() {
            if !self.alphabet.contains(&c) {
                return Err(CraError::AlphabetError(c));
            }
        }
        Ok(())
    }

    /// `(+)` over all accepting runs on `w` of the run weights, computed by a
    /// vector-matrix fold; the empty run set yields the semiring zero.
    pub fn eval(&self, w: &str) -> Result<SemiringValue> {
        self.check_word(w)?;
        let mut vec: BTreeMap<&String, SemiringValue> =
            self.states.iter().map(|q| (q, self.initial_weight(q))).collect();
        for a in w.chars() {
            let mut next: BTreeMap<&String, SemiringValue> =
                self.states.iter().map(|q| (q, self.zero())).collect();
            for p in &self.states {
                let vp = vec[p];
                if vp == self.zero() {
                    continue;
                }
                for q in &self.states {
                    let e = self.edge_weight(p, a, q);
                    if e == self.zero() {
                        continue;
                    }
                    let add = self.semiring.mul(vp, e)?;
                    let slot = next.get_mut(q).unwrap();
                    *slot = self.semiring.add(*slot, add)?;
                }
            }
            vec = next;
        }
        let mut out = self.zero();
        for q in &self.states {
            let f = self.final_weight(q);
            if f == self.zero() {
                continue;
            }
            out = self.semiring.add(out, self.semiring.mul(vec[q], f)?)?;
        }
        Ok(out)
    }

    /// Depth-first enumeration of all accepting runs on `w`, using only
    /// transitions, initial and final weights different from the zero.
    pub fn enumerate_runs(&self, w: &str, max_len: usize) -> Result<Vec<Run>> {
        self.check_word(w)?;
        if w.chars().count() > max_len {
            return Err(CraError::LimitExceeded(max_len));
        }
        let letters: Vec<char> = w.chars().collect();
        let mut out = Vec::new();
        for q0 in &self.states {
            let i = self.initial_weight(q0);
            if i == self.zero() {
                continue;
            }
            self.dfs_runs(&letters, 0, q0, i, &mut vec![q0.clone()], &mut out)?;
        }
        Ok(out)
    }

    fn dfs_runs(
        &self,
        letters: &[char],
        pos: usize,
        q: &str,
        weight: SemiringValue,
        path: &mut Vec<String>,
        out: &mut Vec<Run>,
    ) -> Result<()> {
        if pos == letters.len() {
            let f = self.final_weight(q);
            if f != self.zero() {
                out.push(Run {
                    states: path.clone(),
                    weight: self.semiring.mul(weight, f)?,
                });
            }
            return Ok(());
        }
        for q2 in &self.states {
            let e = self.edge_weight(q, letters[pos], q2);
            if e == self.zero() {
                continue;
            }
            path.push(q2.clone());
            self.dfs_runs(letters, pos + 1, q2, self.semiring.mul(weight, e)?, path, out)?;
            path.pop();
        }
        Ok(())
    }

    /// Maximum number of accepting runs over any word, per word length
    /// `0..=max_len`, computed by a counting walk of the word prefix tree.
    pub fn ambiguity_profile(&self, max_len: usize) -> Vec<u64> {
        let mut profile = vec![0u64; max_len + 1];
        let counts: Vec<u64> = self
            .states
            .iter()
            .map(|q| u64::from(self.initial_weight(q) != self.zero()))
            .collect();
        self.profile_walk(&counts, 0, max_len, &mut profile);
        profile
    }

    fn profile_walk(&self, counts: &[u64], len: usize, max_len: usize, profile: &mut Vec<u64>) {
        let accepting: u64 = self
            .states
            .iter()
            .zip(counts)
            .filter(|(q, _)| self.final_weight(q) != self.zero())
            .map(|(_, c)| *c)
            .sum();
        profile[len] = profile[len].max(accepting);
        if len == max_len || counts.iter().all(|&c| c == 0) {
            return;
        }
        for &a in &self.alphabet {
            let mut next = vec![0u64; self.states.len()];
            for (i, p) in self.states.iter().enumerate() {
                if counts[i] == 0 {
                    continue;
                }
                for (j, q) in self.states.iter().enumerate() {
                    if self.edge_weight(p, a, q) != self.zero() {
                        next[j] += counts[i];
                    }
                }
            }
            self.profile_walk(&next, len + 1, max_len, profile);
        }
    }
}
