//! Local functions, exact-support expansions, forms, the differential,
//! closedness and integration.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, VecDeque};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::configspace::{apply_edge, connect, Coder, Configuration, PathSeq, TransitionGraph, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::interaction::{ConsvBasis, ExchangeTable, Interaction, QVec};
use crate::locale::{diameter, Edge, Locale, Vertex, Window};
use crate::rational::{fmt_q, parse_q, Q};

/// A function of `η|_Λ`, tabulated over `S^Λ` in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalFunction {
    support: Vec<Vertex>,
    values: Vec<Q>,
    k: usize,
    base: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalFunctionJson {
    pub support: Vec<Vertex>,
    pub values: Vec<String>,
}

impl LocalFunction {
    pub fn new(support: Vec<Vertex>, k: usize, base: usize, values: Vec<Q>) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("support must be sorted and distinct".into()));
        }
        let expected = (k as u128).checked_pow(support.len() as u32);
        if expected != Some(values.len() as u128) {
            return Err(Error::InvalidInput(format!(
                "table has {} values, expected {k}^{}",
                values.len(),
                support.len()
            )));
        }
        Ok(LocalFunction { support, values, k, base })
    }

    pub fn constant(c: Q, k: usize, base: usize) -> Self {
        LocalFunction { support: vec![], values: vec![c], k, base }
    }

    pub fn zero(k: usize, base: usize) -> Self {
        Self::constant(Q::zero(), k, base)
    }

    /// Tabulates `f` over digit vectors in support order.
    pub fn from_digits(mut support: Vec<Vertex>, k: usize, base: usize, mut f: impl FnMut(&[usize]) -> Q) -> Result<Self> {
        support.sort();
        support.dedup();
        let coder = Coder::new(support.len(), k, base, DEFAULT_BUDGET)?;
        let values = (0..coder.total()).map(|i| f(&coder.digits(i))).collect();
        Ok(LocalFunction { support, values, k, base })
    }

    /// Tabulates a function of configurations supported in `support`.
    pub fn tabulate(support: Vec<Vertex>, k: usize, base: usize, mut f: impl FnMut(&Configuration) -> Q) -> Result<Self> {
        let mut sorted = support;
        sorted.sort();
        sorted.dedup();
        let sites = sorted.clone();
        Self::from_digits(sorted, k, base, |d| f(&Configuration::from_pairs(sites.iter().cloned().zip(d.iter().copied()), base)))
    }

    pub fn try_tabulate(support: Vec<Vertex>, k: usize, base: usize, mut f: impl FnMut(&Configuration) -> Result<Q>) -> Result<Self> {
        let mut err = None;
        let out = Self::tabulate(support, k, base, |eta| match f(eta) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                Q::zero()
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn support(&self) -> &[Vertex] {
        &self.support
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn index_of(&self, eta: &Configuration) -> usize {
        self.support.iter().fold(0, |acc, v| acc * self.k + eta.get(v, self.base))
    }

    pub fn index_of_digits(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, d| acc * self.k + d)
    }

    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut d = vec![0; self.support.len()];
        for slot in d.iter_mut().rev() {
            *slot = idx % self.k;
            idx /= self.k;
        }
        d
    }

    pub fn config_at(&self, idx: usize) -> Configuration {
        Configuration::from_pairs(self.support.iter().cloned().zip(self.digits(idx)), self.base)
    }

    pub fn eval(&self, eta: &Configuration) -> &Q {
        &self.values[self.index_of(eta)]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    /// `ι^Λ f`, as a function with support `Λ`.
    pub fn restrict(&self, region: &[Vertex]) -> Result<LocalFunction> {
        Self::tabulate(region.to_vec(), self.k, self.base, |eta| self.eval(eta).clone())
    }

    /// The same function tabulated over a larger support.
    pub fn extend(&self, support: &[Vertex]) -> Result<LocalFunction> {
        let mut all: Vec<Vertex> = support.iter().chain(&self.support).cloned().collect();
        all.sort();
        all.dedup();
        Self::tabulate(all, self.k, self.base, |eta| self.eval(eta).clone())
    }

    pub fn combine(&self, other: &LocalFunction, f: impl Fn(&Q, &Q) -> Q) -> Result<LocalFunction> {
        if self.support == other.support {
            let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
            return Ok(LocalFunction { values, ..self.clone() });
        }
        let all: Vec<Vertex> = self.support.iter().chain(&other.support).cloned().collect();
        Self::tabulate(all, self.k, self.base, |eta| f(self.eval(eta), other.eval(eta)))
    }

    pub fn add(&self, other: &LocalFunction) -> Result<LocalFunction> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &LocalFunction) -> Result<LocalFunction> {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Q) -> LocalFunction {
        LocalFunction { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Vertices on which the value actually depends.
    pub fn essential_support(&self) -> Vec<Vertex> {
        let n = self.support.len();
        let mut pow = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            pow[i] = pow[i + 1] * self.k;
        }
        (0..n)
            .filter(|&i| {
                (0..self.values.len()).any(|idx| {
                    let d = (idx / pow[i]) % self.k;
                    d == 0 && (1..self.k).any(|s| self.values[idx + s * pow[i]] != self.values[idx])
                })
            })
            .map(|i| self.support[i].clone())
            .collect()
    }

    /// Drops vertices the value does not depend on.
    pub fn trimmed(&self) -> LocalFunction {
        let ess = self.essential_support();
        if ess.len() == self.support.len() {
            return self.clone();
        }
        self.restrict(&ess).expect("restriction to fewer sites fits the budget")
    }

    /// Relabels support vertices: the result `g` satisfies
    /// `g(η) = f(η ∘ map)`, i.e. site `map(x)` of `g` reads site `x` of `f`.
    pub fn relabel(&self, map: impl Fn(&Vertex) -> Vertex) -> Result<LocalFunction> {
        let images: Vec<Vertex> = self.support.iter().map(&map).collect();
        let mut sorted = images.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != images.len() {
            return Err(Error::InvalidInput("relabeling is not injective on the support".into()));
        }
        let pos: Vec<usize> = images.iter().map(|v| sorted.binary_search(v).unwrap()).collect();
        Self::from_digits(sorted, self.k, self.base, |d| {
            let orig: Vec<usize> = pos.iter().map(|&p| d[p]).collect();
            self.values[self.index_of_digits(&orig)].clone()
        })
    }

    pub fn to_json(&self) -> LocalFunctionJson {
        LocalFunctionJson { support: self.support.clone(), values: self.values.iter().map(fmt_q).collect() }
    }

    /// Parses the JSON form; the support is re-sorted if needed.
    pub fn from_json(j: &LocalFunctionJson, k: usize, base: usize) -> Result<Self> {
        let values = j.values.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
        let raw = LocalFunction { support: j.support.clone(), values, k, base };
        let expected = (k as u128).checked_pow(raw.support.len() as u32);
        if expected != Some(raw.values.len() as u128) {
            return Err(Error::InvalidInput("table length does not match support".into()));
        }
        let mut sorted = raw.support.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != raw.support.len() {
            return Err(Error::InvalidInput("support has repeated vertices".into()));
        }
        if sorted == raw.support {
            return Ok(raw);
        }
        raw.relabel(|v| v.clone())
    }
}

/// `ι^Λ f` evaluated on every subset, combined by inclusion–exclusion at a
/// single configuration: the value of the exact-support term `f_Λ` at `η`.
pub fn exact_part_at(f: &mut impl FnMut(&Configuration) -> Result<Q>, sites: &[Vertex], eta: &Configuration, base: usize) -> Result<Q> {
    let n = sites.len();
    let mut acc = Q::zero();
    for mask in 0u64..(1 << n) {
        let sub = Configuration::from_pairs(
            (0..n).filter(|i| mask >> i & 1 == 1).map(|i| (sites[i].clone(), eta.get(&sites[i], base))),
            base,
        );
        let v = f(&sub)?;
        if (n - mask.count_ones() as usize) % 2 == 0 {
            acc += v;
        } else {
            acc -= v;
        }
    }
    Ok(acc)
}

/// The family `{f_{Λ′}}_{Λ′⊆Λ}`, indexed by bitmasks over the support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactSupportExpansion {
    pub support: Vec<Vertex>,
    pub terms: Vec<LocalFunction>,
}

const MAX_EXPANSION_SITES: usize = 16;

fn sub_support(support: &[Vertex], mask: usize) -> Vec<Vertex> {
    (0..support.len()).filter(|i| mask >> i & 1 == 1).map(|i| support[i].clone()).collect()
}

/// Digits of a superset configuration restricted to the sites in `sub`.
fn restrict_digits(digits: &[usize], mask: usize, sub: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut pos = 0;
    for i in 0..usize::BITS as usize {
        if mask >> i & 1 == 1 {
            if sub >> i & 1 == 1 {
                out.push(digits[pos]);
            }
            pos += 1;
        }
        if mask >> i == 0 {
            break;
        }
    }
    out
}

fn check_expansion_size(f: &LocalFunction) -> Result<()> {
    if f.support.len() > MAX_EXPANSION_SITES {
        return Err(Error::BudgetExceeded { needed: 1u128 << f.support.len(), budget: 1 << MAX_EXPANSION_SITES });
    }
    Ok(())
}

/// Bottom-up: `f_Λ = ι^Λ f − Σ_{Λ′⊊Λ} f_{Λ′}`.
pub fn expand(f: &LocalFunction) -> Result<ExactSupportExpansion> {
    check_expansion_size(f)?;
    let n = f.support.len();
    let mut terms: Vec<LocalFunction> = Vec::with_capacity(1 << n);
    for mask in 0..1usize << n {
        let sup = sub_support(&f.support, mask);
        let term = LocalFunction::from_digits(sup.clone(), f.k, f.base, |d| {
            let eta = Configuration::from_pairs(sup.iter().cloned().zip(d.iter().copied()), f.base);
            let mut v = f.eval(&eta).clone();
            let mut sub = mask;
            while sub != 0 {
                sub = (sub - 1) & mask;
                let t: &LocalFunction = &terms[sub];
                v -= &t.values[t.index_of_digits(&restrict_digits(d, mask, sub))];
            }
            v
        })?;
        terms.push(term);
    }
    Ok(ExactSupportExpansion { support: f.support.clone(), terms })
}

/// Closed form: `f_Λ(η) = Σ_{Λ′⊆Λ} (−1)^{|Λ∖Λ′|} f(η|_{Λ′})`.
pub fn expand_mobius(f: &LocalFunction) -> Result<ExactSupportExpansion> {
    check_expansion_size(f)?;
    let n = f.support.len();
    let mut terms = Vec::with_capacity(1 << n);
    for mask in 0..1usize << n {
        let sup = sub_support(&f.support, mask);
        let size = mask.count_ones();
        terms.push(LocalFunction::from_digits(sup.clone(), f.k, f.base, |d| {
            let mut acc = Q::zero();
            let mut sub = mask;
            loop {
                let eta = Configuration::from_pairs(
                    sub_support(&f.support, sub).into_iter().zip(restrict_digits(d, mask, sub)),
                    f.base,
                );
                if (size - sub.count_ones()) % 2 == 0 {
                    acc += f.eval(&eta);
                } else {
                    acc -= f.eval(&eta);
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            acc
        })?);
    }
    Ok(ExactSupportExpansion { support: f.support.clone(), terms })
}

impl ExactSupportExpansion {
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &LocalFunction)> {
        self.terms.iter().enumerate().filter(|(_, t)| !t.is_zero())
    }

    /// `Σ_{Λ′⊆Λ} f_{Λ′}` tabulated over the full support.
    pub fn reconstruct(&self) -> Result<LocalFunction> {
        let k = self.terms[0].k;
        let base = self.terms[0].base;
        LocalFunction::tabulate(self.support.clone(), k, base, |eta| self.terms.iter().map(|t| t.eval(eta)).sum())
    }

    /// Checks the exact-support property of every term.
    pub fn terms_vanish_at_base(&self) -> bool {
        self.terms.iter().all(|t| {
            (0..t.values.len()).all(|i| t.values[i].is_zero() || t.digits(i).iter().all(|&d| d != t.base))
        })
    }

    pub fn max_diameter(&self, locale: &Locale) -> u64 {
        self.nonzero().map(|(_, t)| diameter(locale, &t.support)).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformityCertificate {
    pub radius: u64,
    pub max_diameter: u64,
    pub passes: bool,
    pub scope: String,
}

pub fn uniformity(f: &LocalFunction, locale: &Locale, radius: u64) -> Result<UniformityCertificate> {
    let max_diameter = expand(f)?.max_diameter(locale);
    Ok(UniformityCertificate {
        radius,
        max_diameter,
        passes: max_diameter <= radius,
        scope: format!("uniform at scale {radius} relative to a support of {} vertices", f.support.len()),
    })
}

/// Edge-indexed family of local functions on a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    pub radius: u64,
    pub edges: BTreeMap<Edge, LocalFunction>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormEdgeJson {
    pub e: [Vertex; 2],
    #[serde(rename = "fn")]
    pub f: LocalFunctionJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormJson {
    #[serde(default)]
    pub radius: u64,
    pub edges: Vec<FormEdgeJson>,
}

fn edge_distance(locale: &Locale, v: &Vertex, e: &Edge) -> u64 {
    let d = |w| locale.distance_unchecked(v, w).unwrap_or(u64::MAX);
    d(&e.0).min(d(&e.1))
}

impl Form {
    /// Builds a form and sets its radius from the essential supports.
    pub fn new(locale: &Locale, edges: BTreeMap<Edge, LocalFunction>) -> Self {
        let edges: BTreeMap<Edge, LocalFunction> = edges.into_iter().map(|(e, f)| (e, f.trimmed())).collect();
        let radius = edges
            .iter()
            .flat_map(|(e, f)| f.support.iter().map(move |v| edge_distance(locale, v, e)))
            .max()
            .unwrap_or(0);
        Form { radius, edges }
    }

    pub fn zero(window: &Window, k: usize, base: usize) -> Self {
        Form { radius: 0, edges: window.edges().into_iter().map(|e| (e, LocalFunction::zero(k, base))).collect() }
    }

    /// Tabulates `value(e, η)` over `support(e)` for every window edge.
    pub fn from_fn(
        window: &Window,
        k: usize,
        base: usize,
        support: impl Fn(&Edge) -> Vec<Vertex>,
        value: impl Fn(&Edge, &Configuration) -> Q,
    ) -> Result<Self> {
        let mut edges = BTreeMap::new();
        for e in window.edges() {
            let f = LocalFunction::tabulate(support(&e), k, base, |eta| value(&e, eta))?;
            edges.insert(e, f);
        }
        Ok(Form::new(window.locale(), edges))
    }

    /// `ω_e(η)`; edges outside the stored set contribute zero.
    pub fn eval(&self, e: &Edge, eta: &Configuration) -> Q {
        self.edges.get(e).map(|f| f.eval(eta).clone()).unwrap_or_else(Q::zero)
    }

    pub fn combine(&self, other: &Form, locale: &Locale, f: impl Fn(&Q, &Q) -> Q) -> Result<Form> {
        let mut edges = BTreeMap::new();
        for e in self.edges.keys().chain(other.edges.keys()) {
            if edges.contains_key(e) {
                continue;
            }
            let (a, b) = match (self.edges.get(e), other.edges.get(e)) {
                (Some(a), Some(b)) => (a.clone(), b.clone()),
                (Some(a), None) => (a.clone(), LocalFunction::zero(a.k, a.base)),
                (None, Some(b)) => (LocalFunction::zero(b.k, b.base), b.clone()),
                (None, None) => unreachable!(),
            };
            edges.insert(e.clone(), a.combine(&b, &f)?);
        }
        Ok(Form::new(locale, edges))
    }

    pub fn add(&self, other: &Form, locale: &Locale) -> Result<Form> {
        self.combine(other, locale, |a, b| a + b)
    }

    pub fn sub(&self, other: &Form, locale: &Locale) -> Result<Form> {
        self.combine(other, locale, |a, b| a - b)
    }

    /// Checks `ω_e(η)=0` when `η^e=η`, `ω_e(η)=−ω_r(η^e)` for the edge
    /// `r ∈ {ē, e}` that undoes the transition, and agreement of `ω_e` and
    /// `ω_ē` where `η^e = η^ē`. Returns the first violation.
    pub fn check_alternation(&self, inter: &Interaction) -> Result<Option<String>> {
        let (k, base) = (inter.n_states(), inter.base());
        for (e, f) in &self.edges {
            let rev = e.reversed();
            let g = self.edges.get(&rev).cloned().unwrap_or_else(|| LocalFunction::zero(k, base));
            let sites: Vec<Vertex> = f.support.iter().chain(&g.support).chain([&e.0, &e.1]).cloned().collect();
            let probe = LocalFunction::tabulate(sites, k, base, |_| Q::zero())?;
            for i in 0..probe.values.len() {
                let eta = probe.config_at(i);
                let next = apply_edge(&eta, e, inter);
                let w = f.eval(&eta);
                if next == eta && !w.is_zero() {
                    return Ok(Some(format!("ω_{e:?} nonzero at fixed configuration {eta:?}")));
                }
                if next != eta {
                    let back = if apply_edge(&next, &rev, inter) == eta {
                        Some(g.eval(&next))
                    } else if apply_edge(&next, e, inter) == eta {
                        Some(f.eval(&next))
                    } else {
                        None
                    };
                    if back.is_some_and(|b| *w != -b.clone()) {
                        return Ok(Some(format!("ω_{e:?}(η) ≠ −ω_r(η^e) at {eta:?}")));
                    }
                    if apply_edge(&eta, &rev, inter) == next && w != g.eval(&eta) {
                        return Ok(Some(format!("ω_{e:?} and ω_ē differ at {eta:?} where η^e = η^ē")));
                    }
                }
            }
        }
        Ok(None)
    }

    pub fn to_json(&self) -> FormJson {
        FormJson {
            radius: self.radius,
            edges: self
                .edges
                .iter()
                .map(|(e, f)| FormEdgeJson { e: [e.0.clone(), e.1.clone()], f: f.to_json() })
                .collect(),
        }
    }

    pub fn from_json(j: &FormJson, locale: &Locale, k: usize, base: usize) -> Result<Self> {
        let mut edges = BTreeMap::new();
        for fe in &j.edges {
            let e = Edge(fe.e[0].clone(), fe.e[1].clone());
            if !locale.is_adjacent(&e.0, &e.1) {
                return Err(Error::InvalidInput(format!("{e:?} is not an edge")));
            }
            edges.insert(e, LocalFunction::from_json(&fe.f, k, base)?);
        }
        Ok(Form::new(locale, edges))
    }
}

/// `∂f = (∇_e f)_e` on the given edges, `∇_e f(η) = f(η^e) − f(η)`.
pub fn differential_on(f: &LocalFunction, edges: &[Edge], window: &Window, inter: &Interaction) -> Result<Form> {
    let mut out = BTreeMap::new();
    for e in edges {
        let touches = f.support.contains(&e.0) || f.support.contains(&e.1);
        let g = if touches {
            let sites: Vec<Vertex> = f.support.iter().chain([&e.0, &e.1]).cloned().collect();
            LocalFunction::tabulate(sites, f.k, f.base, |eta| f.eval(&apply_edge(eta, e, inter)) - f.eval(eta))?
        } else {
            LocalFunction::zero(f.k, f.base)
        };
        out.insert(e.clone(), g);
    }
    Ok(Form::new(window.locale(), out))
}

/// `∂f` on every window edge.
pub fn differential(f: &LocalFunction, window: &Window, inter: &Interaction) -> Result<Form> {
    differential_on(f, &window.edges(), window, inter)
}

/// `∫_γ ω = Σ_i ω_{e_i}(η_i)`.
pub fn integrate_path(form: &Form, path: &PathSeq, inter: &Interaction) -> Q {
    path.transitions(inter).iter().map(|(eta, e)| form.eval(e, eta)).sum()
}

#[derive(Clone, Debug)]
pub struct ClosedWitness {
    pub path: PathSeq,
    pub integral: Q,
}

#[derive(Clone, Debug)]
pub struct ClosedReport {
    pub closed: bool,
    pub components: usize,
    pub configurations: u64,
    pub witness: Option<ClosedWitness>,
}

struct Potential {
    graph: TransitionGraph,
    values: Vec<Q>,
    roots: Vec<u64>,
    conflict: Option<ClosedWitness>,
}

fn tree_path(prev: &[(u64, usize)], mut idx: u64, graph: &TransitionGraph) -> Vec<(u64, Edge)> {
    let mut steps = Vec::new();
    while prev[idx as usize].0 != idx {
        let (p, ei) = prev[idx as usize];
        steps.push((p, graph.edge(ei)));
        idx = p;
    }
    steps.reverse();
    steps
}

/// The edge among `ē, e` that takes `after` back to `before`.
fn undo(e: &Edge, before: &Configuration, after: &Configuration, inter: &Interaction) -> Edge {
    let rev = e.reversed();
    if apply_edge(after, &rev, inter) == *before {
        rev
    } else {
        e.clone()
    }
}

/// Closes the tree paths to `u` and `w` through the conflicting transition.
/// When that loop integrates to zero the defect sits on a tree step and its
/// back-and-forth loop is returned instead.
#[allow(clippy::too_many_arguments)]
fn cycle_witness(
    form: &Form,
    graph: &TransitionGraph,
    prev: &[(u64, usize)],
    root: u64,
    u: u64,
    ei: usize,
    w: u64,
    inter: &Interaction,
) -> ClosedWitness {
    let mut edges: Vec<Edge> = tree_path(prev, u, graph).into_iter().map(|(_, e)| e).collect();
    edges.push(graph.edge(ei));
    let mut child = w;
    for (p, e) in tree_path(prev, w, graph).into_iter().rev() {
        edges.push(undo(&e, &graph.config(p), &graph.config(child), inter));
        child = p;
    }
    let start = graph.config(root);
    let path = PathSeq { start: start.clone(), edges, end: start };
    let integral = integrate_path(form, &path, inter);
    if !integral.is_zero() {
        return ClosedWitness { path, integral };
    }
    for (eta, e) in path.transitions(inter) {
        let after = apply_edge(&eta, &e, inter);
        let back = undo(&e, &eta, &after, inter);
        let loop2 = PathSeq { start: eta.clone(), edges: vec![e, back], end: eta };
        let integral = integrate_path(form, &loop2, inter);
        if !integral.is_zero() {
            return ClosedWitness { path: loop2, integral };
        }
    }
    ClosedWitness { path, integral }
}

/// Breadth-first potential per component; stops at the first inconsistent edge.
fn potential(form: &Form, window: &Window, inter: &Interaction, budget: u64) -> Result<Potential> {
    let graph = TransitionGraph::build(window, inter, budget)?;
    let total = graph.coder.total();
    let edge_fns: Vec<Option<(&LocalFunction, Vec<Option<usize>>)>> = (0..graph.edge_count())
        .map(|ei| {
            form.edges.get(&graph.edge(ei)).map(|f| (f, f.support.iter().map(|v| window.index_of(v)).collect()))
        })
        .collect();
    let omega = |idx: u64, ei: usize| -> Q {
        match &edge_fns[ei] {
            None => Q::zero(),
            Some((f, pos)) => {
                let li = pos
                    .iter()
                    .fold(0, |acc, p| acc * f.k + p.map(|p| graph.coder.digit(idx, p)).unwrap_or(f.base));
                f.values[li].clone()
            }
        }
    };
    let mut values: Vec<Option<Q>> = vec![None; total as usize];
    let mut prev: Vec<(u64, usize)> = vec![(u64::MAX, 0); total as usize];
    let base_idx = graph.coder.base_index();
    let base_label = graph.labels[base_idx as usize];
    let mut roots = Vec::new();
    let mut conflict = None;
    for start in 0..total {
        if values[start as usize].is_some() {
            continue;
        }
        let root = if graph.labels[start as usize] == base_label { base_idx } else { start };
        roots.push(root);
        values[root as usize] = Some(Q::zero());
        prev[root as usize] = (root, 0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let vu = values[u as usize].clone().unwrap();
            for (ei, w) in graph.transitions(u, inter) {
                let target = &vu + omega(u, ei);
                match &values[w as usize] {
                    None => {
                        values[w as usize] = Some(target);
                        prev[w as usize] = (u, ei);
                        queue.push_back(w);
                    }
                    Some(vw) if *vw != target && conflict.is_none() => {
                        conflict = Some(cycle_witness(form, &graph, &prev, root, u, ei, w, inter));
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(Potential { graph, values: values.into_iter().map(|v| v.unwrap()).collect(), roots, conflict })
}

/// Closedness on the window's transition graph, with a closed witness path
/// of nonzero integral on failure.
pub fn is_closed(form: &Form, window: &Window, inter: &Interaction, budget: u64) -> Result<ClosedReport> {
    let p = potential(form, window, inter, budget)?;
    Ok(ClosedReport {
        closed: p.conflict.is_none(),
        components: p.graph.n_components,
        configurations: p.graph.coder.total(),
        witness: p.conflict,
    })
}

#[derive(Clone, Debug)]
pub struct Integral {
    /// The potential, tabulated over the window.
    pub function: LocalFunction,
    /// The configuration pinned to zero in each component.
    pub pins: Vec<Configuration>,
}

/// A potential `f` with `∂f = ω` on the window; `f(★)=0` and each other
/// component vanishes at its lexicographically least configuration.
pub fn integrate(form: &Form, window: &Window, inter: &Interaction, budget: u64) -> Result<Integral> {
    let p = potential(form, window, inter, budget)?;
    if let Some(w) = p.conflict {
        return Err(Error::NotClosed { integral: fmt_q(&w.integral) });
    }
    let pins = p.roots.iter().map(|&r| p.graph.config(r)).collect();
    let function = LocalFunction::new(window.vertices().to_vec(), inter.n_states(), inter.base(), p.values)?;
    Ok(Integral { function, pins })
}

/// Potential of a closed form evaluated lazily along constructed paths from
/// one representative per quantity value; `★` represents the zero quantity.
pub struct PathPotential<'a> {
    form: &'a Form,
    inter: &'a Interaction,
    basis: &'a ConsvBasis,
    window: &'a Window,
    table: ExchangeTable,
    budget: u64,
    reps: RefCell<BTreeMap<QVec, Configuration>>,
    cache: RefCell<HashMap<Configuration, Q>>,
}

impl<'a> PathPotential<'a> {
    pub fn new(form: &'a Form, inter: &'a Interaction, basis: &'a ConsvBasis, window: &'a Window, budget: u64) -> Self {
        let reps = BTreeMap::from([(basis.zero(), Configuration::empty())]);
        PathPotential {
            form,
            inter,
            basis,
            window,
            table: inter.exchange_table(),
            budget,
            reps: RefCell::new(reps),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn eval(&self, eta: &Configuration) -> Result<Q> {
        if let Some(v) = self.cache.borrow().get(eta) {
            return Ok(v.clone());
        }
        let alpha = self.basis.quantity_of(eta, None);
        let rep = self.reps.borrow_mut().entry(alpha).or_insert_with(|| eta.clone()).clone();
        let path = connect(&rep, eta, self.inter, self.basis, self.window, &self.table, self.budget)?;
        let v = integrate_path(self.form, &path, self.inter);
        self.cache.borrow_mut().insert(eta.clone(), v.clone());
        Ok(v)
    }

    pub fn representatives(&self) -> BTreeMap<QVec, Configuration> {
        self.reps.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn v(c: &[i64]) -> Vertex {
        Vertex::new(c)
    }

    #[test]
    fn restrict_to_empty_is_constant_at_base() {
        let f = LocalFunction::from_digits(vec![v(&[0]), v(&[1])], 2, 0, |d| q((d[0] * 2 + d[1] + 5) as i64)).unwrap();
        let r = f.restrict(&[]).unwrap();
        assert_eq!(r.values(), &[q(5)]);
        assert_eq!(f.restrict(f.support()).unwrap(), f);
    }

    #[test]
    fn indicator_pair_has_exact_support_pair() {
        let f = LocalFunction::from_digits(vec![v(&[0]), v(&[3])], 3, 0, |d| q(i64::from(d[0] == 1 && d[1] == 2))).unwrap();
        let ex = expand(&f).unwrap();
        let nz: Vec<usize> = ex.nonzero().map(|(m, _)| m).collect();
        assert_eq!(nz, vec![0b11]);
        assert_eq!(ex, expand_mobius(&f).unwrap());
        assert_eq!(uniformity(&f, &Locale::euclidean(1), 2).unwrap().max_diameter, 3);
    }

    #[test]
    fn exclusion_gradient() {
        let ex = Interaction::builtin("exclusion").unwrap();
        let w = Window::from_box(&Locale::euclidean(1), &[0], &[1]).unwrap();
        let f = LocalFunction::from_digits(vec![v(&[0])], 2, 0, |d| q(d[0] as i64)).unwrap();
        let form = differential(&f, &w, &ex).unwrap();
        let g = &form.edges[&Edge(v(&[0]), v(&[1]))];
        for i in 0..4 {
            let eta = g.config_at(i);
            let want = q(eta.get(&v(&[1]), 0) as i64 - eta.get(&v(&[0]), 0) as i64);
            assert_eq!(*g.eval(&eta), want);
        }
        assert_eq!(form.check_alternation(&ex).unwrap(), None);
    }

    #[test]
    fn perturbed_form_is_not_closed() {
        let ex = Interaction::builtin("exclusion").unwrap();
        let w = Window::from_box(&Locale::euclidean(1), &[0], &[2]).unwrap();
        let f = LocalFunction::from_digits(w.vertices().to_vec(), 2, 0, |d| q((d[0] * 3 + d[2]) as i64)).unwrap();
        let mut form = differential(&f, &w, &ex).unwrap();
        assert!(is_closed(&form, &w, &ex, DEFAULT_BUDGET).unwrap().closed);
        let e = Edge(v(&[0]), v(&[1]));
        let old = form.edges[&e].clone();
        let bumped = LocalFunction::tabulate(vec![v(&[0]), v(&[1])], 2, 0, |eta| {
            old.eval(eta) + q(i64::from(eta.get(&v(&[0]), 0) == 1 && eta.get(&v(&[1]), 0) == 0))
        })
        .unwrap();
        form.edges.insert(e, bumped);
        let rep = is_closed(&form, &w, &ex, DEFAULT_BUDGET).unwrap();
        let wit = rep.witness.unwrap();
        assert!(!rep.closed && wit.path.verify(&ex) && wit.path.start == wit.path.end);
        assert!(!wit.integral.is_zero());
        assert_eq!(integrate_path(&form, &wit.path, &ex), wit.integral);
    }

    #[test]
    fn integrate_recovers_potential() {
        let ex = Interaction::builtin("exclusion").unwrap();
        let w = Window::from_box(&Locale::euclidean(1), &[0], &[2]).unwrap();
        let f = LocalFunction::from_digits(w.vertices().to_vec(), 2, 0, |d| q((d[0] * 3 + d[1] * d[2] + 1) as i64)).unwrap();
        let form = differential(&f, &w, &ex).unwrap();
        let integral = integrate(&form, &w, &ex, DEFAULT_BUDGET).unwrap();
        assert_eq!(integral.pins.len(), 4);
        assert!(integral.function.eval(&Configuration::empty()).is_zero());
        let diff = differential(&integral.function, &w, &ex).unwrap();
        assert_eq!(diff.sub(&form, w.locale()).unwrap().edges.values().filter(|g| !g.is_zero()).count(), 0);
    }

    #[test]
    fn path_potential_matches_integral() {
        let ex = Interaction::builtin("exclusion").unwrap();
        let basis = ex.conserved_quantities();
        let w = Window::from_box(&Locale::euclidean(1), &[0], &[3]).unwrap();
        let f = LocalFunction::from_digits(w.vertices().to_vec(), 2, 0, |d| q((d[0] * 3 + d[1] * d[3]) as i64)).unwrap();
        let form = differential(&f, &w, &ex).unwrap();
        let pp = PathPotential::new(&form, &ex, &basis, &w, DEFAULT_BUDGET);
        for i in 0..16 {
            let eta = f.config_at(i);
            let rep = pp.representatives().get(&basis.quantity_of(&eta, None)).cloned().unwrap_or_else(|| eta.clone());
            assert_eq!(pp.eval(&eta).unwrap(), f.eval(&eta) - f.eval(&rep));
        }
    }
}
