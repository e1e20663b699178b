//! Configurations, transitions `η ↦ η^e`, window transition graphs and
//! explicit path constructions.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::{ConsvBasis, ExchangeTable, Interaction, Letter, QVec};
use crate::locale::{Edge, Vertex, Window};

/// Default bound on `|S|^|Λ|` for full enumerations.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// Finite-support configuration; vertices absent from the map are at base.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Configuration(BTreeMap<Vertex, usize>);

impl Configuration {
    pub fn empty() -> Self {
        Configuration(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Vertex, usize)>, base: usize) -> Self {
        let mut c = Configuration::empty();
        for (v, s) in pairs {
            c.set(v, s, base);
        }
        c
    }

    pub fn get(&self, v: &Vertex, base: usize) -> usize {
        self.0.get(v).copied().unwrap_or(base)
    }

    pub fn set(&mut self, v: Vertex, s: usize, base: usize) {
        if s == base {
            self.0.remove(&v);
        } else {
            self.0.insert(v, s);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vertex, &usize)> {
        self.0.iter()
    }

    pub fn support(&self) -> Vec<Vertex> {
        self.0.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `η|_W`: entries outside `region` reset to base.
    pub fn restrict(&self, region: &[Vertex]) -> Self {
        Configuration(self.0.iter().filter(|(v, _)| region.contains(v)).map(|(v, s)| (v.clone(), *s)).collect())
    }

    /// `η^{x,y}`: the states at `x` and `y` exchanged.
    pub fn swapped(&self, x: &Vertex, y: &Vertex, base: usize) -> Self {
        let mut c = self.clone();
        let (a, b) = (self.get(x, base), self.get(y, base));
        c.set(x.clone(), b, base);
        c.set(y.clone(), a, base);
        c
    }
}

/// `η^e`.
pub fn apply_edge(eta: &Configuration, e: &Edge, inter: &Interaction) -> Configuration {
    let base = inter.base();
    let (a, b) = (eta.get(&e.0, base), eta.get(&e.1, base));
    let (c, d) = inter.phi(a, b);
    if (c, d) == (a, b) {
        return eta.clone();
    }
    let mut out = eta.clone();
    out.set(e.0.clone(), c, base);
    out.set(e.1.clone(), d, base);
    out
}

/// Dense lexicographic indexing of `S^Λ` for an ordered vertex list.
#[derive(Clone, Debug)]
pub struct Coder {
    pub k: usize,
    pub base: usize,
    pow: Vec<u64>,
    total: u64,
}

impl Coder {
    pub fn new(n_sites: usize, k: usize, base: usize, budget: u64) -> Result<Self> {
        let needed = (k as u128).checked_pow(n_sites as u32).unwrap_or(u128::MAX);
        if needed > budget as u128 {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let mut pow = vec![1u64; n_sites];
        for i in (0..n_sites.saturating_sub(1)).rev() {
            pow[i] = pow[i + 1] * k as u64;
        }
        Ok(Coder { k, base, pow, total: needed as u64 })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n_sites(&self) -> usize {
        self.pow.len()
    }

    pub fn digit(&self, idx: u64, i: usize) -> usize {
        ((idx / self.pow[i]) % self.k as u64) as usize
    }

    pub fn digits(&self, idx: u64) -> Vec<usize> {
        (0..self.n_sites()).map(|i| self.digit(idx, i)).collect()
    }

    pub fn encode(&self, digits: &[usize]) -> u64 {
        digits.iter().zip(&self.pow).map(|(d, p)| *d as u64 * p).sum()
    }

    pub fn with_digit(&self, idx: u64, i: usize, d: usize) -> u64 {
        idx - self.digit(idx, i) as u64 * self.pow[i] + d as u64 * self.pow[i]
    }

    /// The index of the all-base configuration.
    pub fn base_index(&self) -> u64 {
        self.encode(&vec![self.base; self.n_sites()])
    }

    pub fn to_config(&self, sites: &[Vertex], idx: u64) -> Configuration {
        Configuration::from_pairs(sites.iter().cloned().zip(self.digits(idx)), self.base)
    }

    pub fn from_config(&self, sites: &[Vertex], eta: &Configuration) -> u64 {
        self.encode(&sites.iter().map(|v| eta.get(v, self.base)).collect::<Vec<_>>())
    }
}

pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// All configurations supported in a window, with component labels.
pub struct TransitionGraph {
    pub window: Window,
    pub coder: Coder,
    edges: Vec<(usize, usize)>,
    /// Component of each configuration, numbered in order of least member.
    pub labels: Vec<u32>,
    pub n_components: usize,
}

impl TransitionGraph {
    pub fn build(window: &Window, inter: &Interaction, budget: u64) -> Result<Self> {
        let coder = Coder::new(window.len(), inter.n_states(), inter.base(), budget)?;
        let edges = window.edge_indices();
        let mut g = TransitionGraph { window: window.clone(), coder, edges, labels: vec![], n_components: 0 };
        let n = g.coder.total() as usize;
        let mut uf = UnionFind::new(n);
        for idx in 0..n as u64 {
            for (_, t) in g.transitions(idx, inter) {
                uf.union(idx as u32, t as u32);
            }
        }
        let mut relabel: HashMap<u32, u32> = HashMap::new();
        let mut labels = Vec::with_capacity(n);
        for i in 0..n as u32 {
            let r = uf.find(i);
            let next = relabel.len() as u32;
            labels.push(*relabel.entry(r).or_insert(next));
        }
        g.n_components = relabel.len();
        g.labels = labels;
        Ok(g)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, i: usize) -> Edge {
        let (a, b) = self.edges[i];
        let vs = self.window.vertices();
        Edge(vs[a].clone(), vs[b].clone())
    }

    pub fn edge_sites(&self, i: usize) -> (usize, usize) {
        self.edges[i]
    }

    /// Non-trivial transitions out of `idx` as `(edge index, target)`.
    pub fn transitions(&self, idx: u64, inter: &Interaction) -> Vec<(usize, u64)> {
        let mut out = Vec::new();
        for (ei, &(i, j)) in self.edges.iter().enumerate() {
            let (a, b) = (self.coder.digit(idx, i), self.coder.digit(idx, j));
            let (c, d) = inter.phi(a, b);
            if (c, d) != (a, b) {
                out.push((ei, self.coder.with_digit(self.coder.with_digit(idx, i, c), j, d)));
            }
        }
        out
    }

    pub fn config(&self, idx: u64) -> Configuration {
        self.coder.to_config(self.window.vertices(), idx)
    }

    pub fn index(&self, eta: &Configuration) -> u64 {
        self.coder.from_config(self.window.vertices(), eta)
    }

    pub fn quantity(&self, idx: u64, basis: &ConsvBasis) -> QVec {
        basis.quantity_of_states(self.coder.digits(idx))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IrreducibilityReport {
    pub consistent: bool,
    pub configurations: u64,
    pub components: usize,
    pub fibers: usize,
    pub witness: Option<(Configuration, Configuration)>,
    pub scope: String,
}

impl Serialize for Configuration {
    /// `{"sites": [[coords]], "states": [index]}` over the non-base sites.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut m = s.serialize_struct("Configuration", 2)?;
        m.serialize_field("sites", &self.0.keys().map(|v| v.coords()).collect::<Vec<_>>())?;
        m.serialize_field("states", &self.0.values().collect::<Vec<_>>())?;
        m.end()
    }
}

impl Serialize for PathSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut m = s.serialize_struct("PathSeq", 3)?;
        m.serialize_field("start", &self.start)?;
        m.serialize_field("edges", &self.edges.iter().map(|e| [e.0.coords(), e.1.coords()]).collect::<Vec<_>>())?;
        m.serialize_field("end", &self.end)?;
        m.end()
    }
}

/// Groups window configurations by quantity and checks each fiber is one component.
pub fn check_irreducible_quantification(
    inter: &Interaction,
    basis: &ConsvBasis,
    window: &Window,
    budget: u64,
) -> Result<IrreducibilityReport> {
    let g = TransitionGraph::build(window, inter, budget)?;
    let mut fiber: BTreeMap<QVec, (u32, u64)> = BTreeMap::new();
    let mut witness = None;
    for idx in 0..g.coder.total() {
        let alpha = g.quantity(idx, basis);
        let label = g.labels[idx as usize];
        match fiber.get(&alpha) {
            None => {
                fiber.insert(alpha, (label, idx));
            }
            Some(&(l, first)) if l != label && witness.is_none() => witness = Some((g.config(first), g.config(idx))),
            _ => {}
        }
    }
    Ok(IrreducibilityReport {
        consistent: witness.is_none(),
        configurations: g.coder.total(),
        components: g.n_components,
        fibers: fiber.len(),
        witness,
        scope: format!("consistent up to a window of {} vertices", window.len()),
    })
}

/// A sequence of transitions from `start`, one edge per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSeq {
    pub start: Configuration,
    pub edges: Vec<Edge>,
    pub end: Configuration,
}

impl PathSeq {
    pub fn empty(start: Configuration) -> Self {
        PathSeq { end: start.clone(), start, edges: vec![] }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Source configuration and edge of every step.
    pub fn transitions(&self, inter: &Interaction) -> Vec<(Configuration, Edge)> {
        let mut cur = self.start.clone();
        let mut out = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let next = apply_edge(&cur, e, inter);
            out.push((std::mem::replace(&mut cur, next), e.clone()));
        }
        out
    }

    pub fn append(&mut self, other: PathSeq) {
        assert_eq!(self.end, other.start, "paths must compose");
        self.edges.extend(other.edges);
        self.end = other.end;
    }

    /// Replays the edges and checks `end` and that every step is a transition.
    pub fn verify(&self, inter: &Interaction) -> bool {
        let mut cur = self.start.clone();
        for e in &self.edges {
            let next = apply_edge(&cur, e, inter);
            if next == cur {
                return false;
            }
            cur = next;
        }
        cur == self.end
    }
}

struct Builder<'a> {
    inter: &'a Interaction,
    path: PathSeq,
}

impl<'a> Builder<'a> {
    fn new(inter: &'a Interaction, start: Configuration) -> Self {
        Builder { inter, path: PathSeq::empty(start) }
    }

    fn cur(&self) -> &Configuration {
        &self.path.end
    }

    fn step(&mut self, e: Edge) {
        let next = apply_edge(&self.path.end, &e, self.inter);
        if next != self.path.end {
            self.path.edges.push(e);
            self.path.end = next;
        }
    }

    fn swap_adjacent(&mut self, x: &Vertex, y: &Vertex, table: &ExchangeTable) -> Result<()> {
        let base = self.inter.base();
        let (a, b) = (self.cur().get(x, base), self.cur().get(y, base));
        let word = table.word(a, b).ok_or(Error::NotExchangeable(a, b))?.to_vec();
        for l in word {
            match l {
                Letter::Phi => self.step(Edge(x.clone(), y.clone())),
                Letter::PhiBar => self.step(Edge(y.clone(), x.clone())),
            }
        }
        Ok(())
    }

    /// Forward sweep along the path, then the reverse sweep over all but the last edge.
    fn exchange_along(&mut self, path: &[Vertex], table: &ExchangeTable) -> Result<()> {
        if path.len() < 2 {
            return Ok(());
        }
        for w in path.windows(2) {
            self.swap_adjacent(&w[0], &w[1], table)?;
        }
        for i in (0..path.len() - 2).rev() {
            self.swap_adjacent(&path[i], &path[i + 1], table)?;
        }
        Ok(())
    }

    fn move_along(&mut self, path: &[Vertex], table: &ExchangeTable) -> Result<()> {
        let n = path.len();
        let (xp, y) = (&path[n - 2], &path[n - 1]);
        self.exchange_along(&path[..n - 1], table)?;
        self.step(Edge(xp.clone(), y.clone()));
        self.exchange_along(&path[..n - 1], table)
    }
}

fn window_path(window: &Window, x: &Vertex, y: &Vertex) -> Result<Vec<Vertex>> {
    window
        .shortest_path(x, y)
        .ok_or_else(|| Error::NoPathInWindow(format!("{x:?} to {y:?}")))
}

/// Path from `η` to `η^{x,y}`, following the forward-then-reverse sweep.
pub fn exchange_path(
    eta: &Configuration,
    x: &Vertex,
    y: &Vertex,
    inter: &Interaction,
    window: &Window,
    table: &ExchangeTable,
) -> Result<PathSeq> {
    let mut b = Builder::new(inter, eta.clone());
    if x != y {
        b.exchange_along(&window_path(window, x, y)?, table)?;
    }
    debug_assert_eq!(b.path.end, eta.swapped(x, y, inter.base()));
    Ok(b.path)
}

/// Path from `η` to `η^{x→y}`: swap `x` with the predecessor `x′` of `y`,
/// interact across `(x′,y)`, swap back.
pub fn move_path(
    eta: &Configuration,
    x: &Vertex,
    y: &Vertex,
    inter: &Interaction,
    window: &Window,
    table: &ExchangeTable,
) -> Result<PathSeq> {
    if x == y {
        return Err(Error::InvalidInput("move_path needs distinct vertices".into()));
    }
    let mut b = Builder::new(inter, eta.clone());
    b.move_along(&window_path(window, x, y)?, table)?;
    Ok(b.path)
}

/// `η^{x→y}` computed directly.
pub fn moved(eta: &Configuration, x: &Vertex, y: &Vertex, inter: &Interaction) -> Configuration {
    let base = inter.base();
    let (c, d) = inter.phi(eta.get(x, base), eta.get(y, base));
    let mut out = eta.clone();
    out.set(x.clone(), c, base);
    out.set(y.clone(), d, base);
    out
}

fn multiset_path(inter: &Interaction, from: &[usize], to: &[usize]) -> Option<Vec<(usize, usize)>> {
    let k = inter.n_states();
    let mut prev: HashMap<Vec<usize>, (Vec<usize>, (usize, usize))> = HashMap::new();
    let mut queue = VecDeque::from([from.to_vec()]);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::from([from.to_vec()]);
    while let Some(m) = queue.pop_front() {
        if m == to {
            let mut moves = vec![];
            let mut cur = m;
            while cur != from {
                let (p, mv) = prev[&cur].clone();
                moves.push(mv);
                cur = p;
            }
            moves.reverse();
            return Some(moves);
        }
        for a in 0..k {
            for b in 0..k {
                let enough = if a == b { m[a] >= 2 } else { m[a] >= 1 && m[b] >= 1 };
                if !enough {
                    continue;
                }
                let (c, d) = inter.phi(a, b);
                let mut n = m.clone();
                n[a] -= 1;
                n[b] -= 1;
                n[c] += 1;
                n[d] += 1;
                if seen.insert(n.clone()) {
                    prev.insert(n.clone(), (m.clone(), (a, b)));
                    queue.push_back(n);
                }
            }
        }
    }
    None
}

/// A path between two configurations with equal quantities, built from
/// exchange and move paths. Non-exchangeable interactions fall back to a
/// bounded breadth-first search near the supports.
pub fn connect(
    from: &Configuration,
    to: &Configuration,
    inter: &Interaction,
    basis: &ConsvBasis,
    window: &Window,
    table: &ExchangeTable,
    budget: u64,
) -> Result<PathSeq> {
    if from == to {
        return Ok(PathSeq::empty(from.clone()));
    }
    if basis.quantity_of(from, None) != basis.quantity_of(to, None) {
        return Err(Error::NoPathInWindow("configurations carry different quantities".into()));
    }
    for v in from.support().iter().chain(to.support().iter()) {
        if !window.contains(v) {
            return Err(Error::SupportLeavesWindow(format!("{v:?}")));
        }
    }
    if !table.is_exchangeable() {
        return fiber_search(from, to, inter, window, budget);
    }
    let base = inter.base();
    let k = inter.n_states();
    let mut sites: Vec<Vertex> = from.support().into_iter().chain(to.support()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut spare: Vec<Vertex> = sites
        .iter()
        .flat_map(|v| window.neighbors_idx(window.index_of(v).unwrap()).iter().map(|&i| window.vertices()[i].clone()))
        .filter(|v| !sites.contains(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    spare.reverse();
    for _slack in 0..=2 {
        let counts = |c: &Configuration| {
            let mut m = vec![0usize; k];
            for v in &sites {
                m[c.get(v, base)] += 1;
            }
            m
        };
        if let Some(moves) = multiset_path(inter, &counts(from), &counts(to)) {
            let mut b = Builder::new(inter, from.clone());
            for (a, s) in moves {
                let x = sites.iter().find(|v| b.cur().get(v, base) == a).unwrap().clone();
                let y = sites
                    .iter()
                    .filter(|v| **v != x && b.cur().get(v, base) == s)
                    .min_by_key(|v| (window.locale().distance_unchecked(&x, v), (*v).clone()))
                    .unwrap()
                    .clone();
                b.move_along(&window_path(window, &x, &y)?, table)?;
            }
            for i in 0..sites.len() {
                let want = to.get(&sites[i], base);
                if b.cur().get(&sites[i], base) == want {
                    continue;
                }
                let p = sites[i].clone();
                let qv = sites[i + 1..]
                    .iter()
                    .filter(|v| b.cur().get(v, base) == want)
                    .min_by_key(|v| (window.locale().distance_unchecked(&p, v), (*v).clone()))
                    .ok_or_else(|| Error::NoPathInWindow("multiset realization failed".into()))?
                    .clone();
                b.exchange_along(&window_path(window, &p, &qv)?, table)?;
            }
            if &b.path.end != to {
                return Err(Error::NoPathInWindow("constructed path missed its target".into()));
            }
            return Ok(b.path);
        }
        match spare.pop() {
            Some(v) => sites.push(v),
            None => break,
        }
    }
    Err(Error::NoPathInWindow(format!("no multiset path between {from:?} and {to:?}")))
}

fn fiber_search(
    from: &Configuration,
    to: &Configuration,
    inter: &Interaction,
    window: &Window,
    budget: u64,
) -> Result<PathSeq> {
    let mut region: BTreeSet<Vertex> = from.support().into_iter().chain(to.support()).collect();
    for v in region.clone() {
        for &i in window.neighbors_idx(window.index_of(&v).unwrap()) {
            region.insert(window.vertices()[i].clone());
        }
    }
    let sub = window.sub(region.into_iter().collect())?;
    let edges = sub.edges();
    let mut prev: HashMap<Configuration, (Configuration, Edge)> = HashMap::new();
    let mut queue = VecDeque::from([from.clone()]);
    let mut seen: BTreeSet<Configuration> = BTreeSet::from([from.clone()]);
    while let Some(c) = queue.pop_front() {
        if &c == to {
            let mut steps = vec![];
            let mut cur = c;
            while &cur != from {
                let (p, e) = prev[&cur].clone();
                steps.push(e);
                cur = p;
            }
            steps.reverse();
            return Ok(PathSeq { start: from.clone(), edges: steps, end: to.clone() });
        }
        for e in &edges {
            let n = apply_edge(&c, e, inter);
            if n != c && seen.insert(n.clone()) {
                if seen.len() as u64 > budget {
                    return Err(Error::BudgetExceeded { needed: seen.len() as u128, budget });
                }
                prev.insert(n.clone(), (c.clone(), e.clone()));
                queue.push_back(n);
            }
        }
    }
    Err(Error::NoPathInWindow(format!("{from:?} and {to:?} are disconnected near their supports")))
}
