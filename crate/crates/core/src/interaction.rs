//! Finite state spaces, binary interactions and their conserved quantities.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::configspace::Configuration;
use crate::error::{Error, Result};
use crate::linalg;
use crate::locale::Vertex;
use crate::rational::{q, to_i64, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    pub labels: Vec<i64>,
    pub base: usize,
}

impl StateSpace {
    pub fn new(labels: Vec<i64>, base: usize) -> Result<Self> {
        if labels.is_empty() || base >= labels.len() {
            return Err(Error::InvalidInput("state space needs a valid base index".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::InvalidInput("duplicate states".into()));
        }
        Ok(StateSpace { labels, base })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

/// A map `φ: S×S → S×S` on state indices.
#[derive(Clone, Debug)]
pub struct Interaction {
    pub name: String,
    pub states: StateSpace,
    table: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Letter {
    /// Apply `e = (x,y)`.
    Phi,
    /// Apply `ē = (y,x)`.
    PhiBar,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidityReport {
    pub strict: bool,
    pub strict_witness: Option<[i64; 2]>,
    pub relaxed: bool,
    pub relaxed_witness: Option<[[i64; 2]; 2]>,
}

#[derive(Clone, Debug)]
pub struct ExchangeTable {
    k: usize,
    words: Vec<Option<Vec<Letter>>>,
}

impl ExchangeTable {
    pub fn word(&self, a: usize, b: usize) -> Option<&[Letter]> {
        self.words[a * self.k + b].as_deref()
    }

    pub fn is_exchangeable(&self) -> bool {
        self.words.iter().all(Option::is_some)
    }

    pub fn first_failure(&self) -> Option<(usize, usize)> {
        let i = self.words.iter().position(Option::is_none)?;
        Some((i / self.k, i % self.k))
    }
}

/// Integer basis of the conserved quantities, `vectors[i][s] = ξ⁽ⁱ⁾(s)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsvBasis {
    pub vectors: Vec<Vec<i64>>,
}

/// A total quantity vector; basis vectors are integral so totals are too.
pub type QVec = Vec<i64>;

impl ConsvBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn of_state(&self, s: usize) -> QVec {
        self.vectors.iter().map(|v| v[s]).collect()
    }

    pub fn zero(&self) -> QVec {
        vec![0; self.dim()]
    }

    /// `ξ_W(η)`, summing over `region` or over the whole support.
    pub fn quantity_of(&self, eta: &Configuration, region: Option<&[Vertex]>) -> QVec {
        let mut out = self.zero();
        for (v, &s) in eta.iter() {
            if region.map_or(true, |r| r.contains(v)) {
                add_assign(&mut out, &self.of_state(s));
            }
        }
        out
    }

    pub fn quantity_of_states(&self, states: impl IntoIterator<Item = usize>) -> QVec {
        let mut out = self.zero();
        for s in states {
            add_assign(&mut out, &self.of_state(s));
        }
        out
    }
}

pub fn add_assign(a: &mut QVec, b: &[i64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

pub fn add(a: &[i64], b: &[i64]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl Interaction {
    /// Builds from label quadruples `[s1,s2,t1,t2]`; unlisted pairs are fixed.
    pub fn from_map(name: &str, states: StateSpace, map: &[[i64; 4]]) -> Result<Self> {
        let k = states.len();
        let mut table: Vec<(usize, usize)> = (0..k * k).map(|i| (i / k, i % k)).collect();
        let mut seen: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for entry in map {
            let idx: Vec<usize> = entry
                .iter()
                .map(|&l| states.index_of(l).ok_or_else(|| Error::NonTotalTable(format!("unknown state {l}"))))
                .collect::<Result<_>>()?;
            let (src, dst) = ((idx[0], idx[1]), (idx[2], idx[3]));
            if let Some(prev) = seen.insert(src, dst) {
                if prev != dst {
                    return Err(Error::NonTotalTable(format!("conflicting images for ({}, {})", entry[0], entry[1])));
                }
            }
            table[src.0 * k + src.1] = dst;
        }
        Ok(Interaction { name: name.to_string(), states, table, warnings: vec![] })
    }

    fn from_fn(name: &str, states: StateSpace, f: impl Fn(i64, i64) -> (i64, i64)) -> Self {
        let k = states.len();
        let table = (0..k * k)
            .map(|i| {
                let (a, b) = f(states.labels[i / k], states.labels[i % k]);
                (states.index_of(a).unwrap(), states.index_of(b).unwrap())
            })
            .collect();
        Interaction { name: name.to_string(), states, table, warnings: vec![] }
    }

    /// Built-in catalog: `exclusion`, `multispecies:k`, `generalized-exclusion:k`,
    /// `lattice-gas:k`, `spin3`, `glauber`, `pair-creation`.
    pub fn builtin(name: &str) -> Result<Self> {
        let (head, param) = match name.split_once(':') {
            Some((h, p)) => {
                let k: i64 = p.parse().map_err(|_| Error::InvalidInput(format!("bad parameter in {name:?}")))?;
                (h, Some(k))
            }
            None => (name, None),
        };
        let range = |k: i64| StateSpace::new((0..=k).collect(), 0);
        let need = |min: i64| match param {
            Some(k) if k >= min => Ok(k),
            _ => Err(Error::InvalidInput(format!("{name:?} needs a parameter ≥ {min}"))),
        };
        let truncation = |k: i64| format!("state space ℕ truncated to {{0..{k}}}");
        let inter = match head {
            "exclusion" => Self::from_fn(name, range(1)?, |a, b| (b, a)),
            "multispecies" => Self::from_fn(name, range(need(1)?)?, |a, b| (b, a)),
            "generalized-exclusion" => {
                let k = need(1)?;
                let mut i = Self::from_fn(name, range(k)?, move |a, b| if a >= 1 && b < k { (a - 1, b + 1) } else { (a, b) });
                i.warnings.push(truncation(k));
                i
            }
            "lattice-gas" => {
                let k = need(2)?;
                let mut i = Self::from_fn(name, range(k)?, move |a, b| {
                    if a > 0 && b == 0 {
                        (b, a)
                    } else if a > 1 && b > 0 && b < k {
                        (a - 1, b + 1)
                    } else {
                        (a, b)
                    }
                });
                i.warnings.push(truncation(k));
                i
            }
            "spin3" => Self::from_fn(name, StateSpace::new(vec![-1, 0, 1], 1)?, |a, b| match (a, b) {
                (0, 0) => (-1, 1),
                (-1, 1) => (1, -1),
                (1, -1) => (0, 0),
                _ if a + b != 0 => (b, a),
                _ => (a, b),
            }),
            "glauber" => Self::from_fn(name, range(1)?, |a, b| (1 - a, b)),
            "pair-creation" => Self::from_fn(name, range(1)?, |a, b| match (a, b) {
                (0, 0) => (1, 1),
                (1, 1) => (0, 0),
                _ => (a, b),
            }),
            _ => return Err(Error::InvalidInput(format!("unknown interaction {name:?}"))),
        };
        Ok(inter)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn base(&self) -> usize {
        self.states.base
    }

    pub fn phi(&self, a: usize, b: usize) -> (usize, usize) {
        self.table[a * self.n_states() + b]
    }

    /// `φ̄ = î∘φ∘î`.
    pub fn phi_bar(&self, a: usize, b: usize) -> (usize, usize) {
        let (c, d) = self.phi(b, a);
        (d, c)
    }

    /// Non-identity entries as label quadruples.
    pub fn entries(&self) -> Vec<[i64; 4]> {
        let l = &self.states.labels;
        let k = self.n_states();
        (0..k * k)
            .filter_map(|i| {
                let (a, b) = (i / k, i % k);
                let (c, d) = self.table[i];
                ((c, d) != (a, b)).then(|| [l[a], l[b], l[c], l[d]])
            })
            .collect()
    }

    pub fn validate(&self) -> ValidityReport {
        let k = self.n_states();
        let l = &self.states.labels;
        let mut strict_witness = None;
        let mut relaxed_witness = None;
        for a in 0..k {
            for b in 0..k {
                let (c, d) = self.phi(a, b);
                if strict_witness.is_none() && (c, d) != (a, b) {
                    let (e, f) = self.phi(d, c);
                    if (f, e) != (a, b) {
                        strict_witness = Some([l[a], l[b]]);
                    }
                }
                if relaxed_witness.is_none() {
                    for img in [self.phi(a, b), self.phi_bar(a, b)] {
                        if img != (a, b) && self.phi(img.0, img.1) != (a, b) && self.phi_bar(img.0, img.1) != (a, b) {
                            relaxed_witness = Some([[l[a], l[b]], [l[img.0], l[img.1]]]);
                            break;
                        }
                    }
                }
            }
        }
        ValidityReport {
            strict: strict_witness.is_none(),
            strict_witness,
            relaxed: relaxed_witness.is_none(),
            relaxed_witness,
        }
    }

    /// Exact nullspace of `ξ(*)=0` and `ξ(s₁)+ξ(s₂)=ξ(s₁′)+ξ(s₂′)`.
    pub fn conserved_quantities(&self) -> ConsvBasis {
        let k = self.n_states();
        let mut rows: Vec<Vec<Q>> = Vec::new();
        let mut base_row = vec![q(0); k];
        base_row[self.base()] = q(1);
        rows.push(base_row);
        for a in 0..k {
            for b in 0..k {
                let (c, d) = self.phi(a, b);
                let mut row = vec![q(0); k];
                row[a] += q(1);
                row[b] += q(1);
                row[c] -= q(1);
                row[d] -= q(1);
                if row.iter().any(|x| *x != q(0)) {
                    rows.push(row);
                }
            }
        }
        let vectors = linalg::nullspace(&rows, k)
            .into_iter()
            .map(|v| v.iter().map(|x| to_i64(x).expect("integral basis")).collect())
            .collect();
        ConsvBasis { vectors }
    }

    /// For each pair, the shortest word in `φ, φ̄` mapping `(a,b)` to `(b,a)`.
    pub fn exchange_table(&self) -> ExchangeTable {
        let k = self.n_states();
        let mut words = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                words.push(self.exchange_word(a, b));
            }
        }
        ExchangeTable { k, words }
    }

    fn exchange_word(&self, a: usize, b: usize) -> Option<Vec<Letter>> {
        if a == b {
            return Some(vec![]);
        }
        let mut prev: BTreeMap<(usize, usize), ((usize, usize), Letter)> = BTreeMap::new();
        let mut queue = VecDeque::from([(a, b)]);
        let start = (a, b);
        while let Some(p) = queue.pop_front() {
            for (letter, next) in [(Letter::Phi, self.phi(p.0, p.1)), (Letter::PhiBar, self.phi_bar(p.0, p.1))] {
                if next == start || prev.contains_key(&next) {
                    continue;
                }
                prev.insert(next, (p, letter));
                if next == (b, a) {
                    let mut word = vec![];
                    let mut cur = next;
                    while cur != start {
                        let (p, l) = prev[&cur];
                        word.push(l);
                        cur = p;
                    }
                    word.reverse();
                    return Some(word);
                }
                queue.push_back(next);
            }
        }
        None
    }

    /// `c_φ = 1` and `ξ(S)` generates a monoid isomorphic to ℕ or ℤ.
    pub fn is_simple(&self, basis: &ConsvBasis) -> bool {
        if basis.dim() != 1 {
            return false;
        }
        let vals: Vec<i64> = basis.vectors[0].iter().copied().filter(|&x| x != 0).collect();
        let pos = vals.iter().any(|&x| x > 0);
        let neg = vals.iter().any(|&x| x < 0);
        if pos && neg {
            return true;
        }
        let g = vals.iter().map(|x| x.abs()).min().unwrap_or(0);
        g > 0 && vals.iter().all(|x| x % g == 0)
    }

    /// Applies a word of `φ, φ̄` to a state pair.
    pub fn apply_word(&self, pair: (usize, usize), word: &[Letter]) -> (usize, usize) {
        word.iter().fold(pair, |p, l| match l {
            Letter::Phi => self.phi(p.0, p.1),
            Letter::PhiBar => self.phi_bar(p.0, p.1),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(name: &str) -> usize {
        Interaction::builtin(name).unwrap().conserved_quantities().dim()
    }

    #[test]
    fn catalog_dimensions() {
        assert_eq!(dim("exclusion"), 1);
        assert_eq!(dim("multispecies:2"), 2);
        assert_eq!(dim("multispecies:3"), 3);
        assert_eq!(dim("generalized-exclusion:2"), 1);
        assert_eq!(dim("lattice-gas:2"), 2);
        assert_eq!(dim("lattice-gas:3"), 2);
        assert_eq!(dim("spin3"), 1);
        assert_eq!(dim("glauber"), 0);
        assert_eq!(dim("pair-creation"), 0);
    }

    #[test]
    fn exclusion_basis_is_occupation() {
        let b = Interaction::builtin("exclusion").unwrap().conserved_quantities();
        assert_eq!(b.vectors, vec![vec![0, 1]]);
    }

    #[test]
    fn validity_of_examples() {
        let g = Interaction::builtin("glauber").unwrap().validate();
        assert!(!g.strict && g.relaxed);
        assert!(Interaction::builtin("exclusion").unwrap().validate().strict);
        let bad = Interaction::from_map("bad", StateSpace::new(vec![0, 1], 0).unwrap(), &[[0, 0, 1, 0]]).unwrap();
        assert!(!bad.validate().relaxed);
    }

    #[test]
    fn exchangeability() {
        let ex = Interaction::builtin("exclusion").unwrap().exchange_table();
        assert!(ex.is_exchangeable());
        assert_eq!(ex.word(0, 1), Some(&[Letter::Phi][..]));
        assert!(Interaction::builtin("generalized-exclusion:2").unwrap().exchange_table().is_exchangeable());
        let r = Interaction::builtin("pair-creation").unwrap().exchange_table();
        assert!(!r.is_exchangeable());
        assert_eq!(r.first_failure(), Some((0, 1)));
    }

    #[test]
    fn simplicity() {
        let s = |n: &str| {
            let i = Interaction::builtin(n).unwrap();
            i.is_simple(&i.conserved_quantities())
        };
        assert!(s("exclusion"));
        assert!(s("spin3"));
        assert!(s("generalized-exclusion:3"));
        assert!(!s("multispecies:2"));
        assert!(!s("glauber"));
    }

    #[test]
    fn conflicting_entries_rejected() {
        let st = StateSpace::new(vec![0, 1], 0).unwrap();
        assert!(Interaction::from_map("x", st.clone(), &[[0, 1, 1, 0], [0, 1, 0, 1]]).is_err());
        assert!(Interaction::from_map("x", st, &[[0, 7, 1, 0]]).is_err());
    }
}
