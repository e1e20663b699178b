//! Locales presented by coordinate rules, finite windows, balls, group
//! actions and transferability.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{q, to_i64, Q};

/// A vertex encoding: integer coordinates, or a reduced word whose letters
/// are `±(j+1)` for free generator `j`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(pub SmallVec<[i64; 3]>);

impl Vertex {
    pub fn new(coords: &[i64]) -> Self {
        Vertex(SmallVec::from_slice(coords))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Vertex::new(&Vec::<i64>::deserialize(d)?))
    }
}

/// A directed edge `(o(e), t(e))`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Edge(pub Vertex, pub Vertex);

impl Edge {
    pub fn reversed(&self) -> Edge {
        Edge(self.1.clone(), self.0.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubShape {
    /// `{x ∈ ℤ² : x₁x₂ = 0}`.
    Cross,
    /// `{x₁ ≥ 0} ∪ {x₂ = 0}` in ℤ².
    HalfPlaneWithLine,
    /// An explicit finite vertex set.
    Vertices(Vec<Vertex>),
}

fn one_u32() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Locale {
    /// ℤ^d with edges `0 < |x−y|₁ ≤ n`.
    Euclidean {
        d: usize,
        #[serde(default = "one_u32")]
        n: u32,
    },
    /// Axial coordinates, neighbors `±(1,0), ±(0,1), ±(1,−1)`.
    Triangular,
    /// Honeycomb: cell `(x,y)` with sublattice `b`; `(x,y,0)` is adjacent to
    /// `(x,y,1)`, `(x−1,y,1)` and `(x,y−1,1)`.
    Hexagonal,
    FreeGroup { rank: usize },
    Product { left: Box<Locale>, right: Box<Locale> },
    Sublocale { parent: Box<Locale>, shape: SubShape },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transferability {
    StronglyTransferable,
    Transferable,
    WeaklyTransferableNotTransferable,
    Unknown,
}

fn reduce_word(word: impl IntoIterator<Item = i64>) -> SmallVec<[i64; 3]> {
    let mut out: SmallVec<[i64; 3]> = SmallVec::new();
    for a in word {
        if out.last() == Some(&-a) {
            out.pop();
        } else {
            out.push(a);
        }
    }
    out
}

fn invert_word(w: &[i64]) -> impl Iterator<Item = i64> + '_ {
    w.iter().rev().map(|a| -a)
}

fn l1(x: &[i64], y: &[i64]) -> u64 {
    x.iter().zip(y).map(|(a, b)| a.abs_diff(*b)).sum()
}

impl Locale {
    pub fn euclidean(d: usize) -> Self {
        Locale::Euclidean { d, n: 1 }
    }

    pub fn cross() -> Self {
        Locale::Sublocale { parent: Box::new(Locale::euclidean(2)), shape: SubShape::Cross }
    }

    pub fn half_plane_with_line() -> Self {
        Locale::Sublocale { parent: Box::new(Locale::euclidean(2)), shape: SubShape::HalfPlaneWithLine }
    }

    fn split_product<'a>(&self, v: &'a Vertex) -> Result<(Vertex, Vertex)> {
        let c = v.coords();
        let k = *c.first().ok_or_else(|| Error::InvalidVertex(format!("{v:?}")))?;
        if k < 0 || k as usize + 1 > c.len() {
            return Err(Error::InvalidVertex(format!("{v:?}")));
        }
        let k = k as usize;
        Ok((Vertex::new(&c[1..=k]), Vertex::new(&c[k + 1..])))
    }

    pub fn product_vertex(a: &Vertex, b: &Vertex) -> Vertex {
        let mut c: SmallVec<[i64; 3]> = SmallVec::new();
        c.push(a.0.len() as i64);
        c.extend_from_slice(&a.0);
        c.extend_from_slice(&b.0);
        Vertex(c)
    }

    pub fn validate(&self, v: &Vertex) -> Result<()> {
        let bad = || Error::InvalidVertex(format!("{v:?} for {self:?}"));
        let c = v.coords();
        match self {
            Locale::Euclidean { d, .. } => (c.len() == *d).then_some(()).ok_or_else(bad),
            Locale::Triangular => (c.len() == 2).then_some(()).ok_or_else(bad),
            Locale::Hexagonal => (c.len() == 3 && (c[2] == 0 || c[2] == 1)).then_some(()).ok_or_else(bad),
            Locale::FreeGroup { rank } => {
                let ok = c.iter().all(|&a| a != 0 && a.unsigned_abs() as usize <= *rank)
                    && c.windows(2).all(|w| w[0] != -w[1]);
                ok.then_some(()).ok_or_else(bad)
            }
            Locale::Product { left, right } => {
                let (a, b) = self.split_product(v)?;
                left.validate(&a)?;
                right.validate(&b)
            }
            Locale::Sublocale { parent, shape } => {
                parent.validate(v)?;
                self.in_shape(shape, v).then_some(()).ok_or_else(bad)
            }
        }
    }

    fn in_shape(&self, shape: &SubShape, v: &Vertex) -> bool {
        let c = v.coords();
        match shape {
            SubShape::Cross => c.len() == 2 && (c[0] == 0 || c[1] == 0),
            SubShape::HalfPlaneWithLine => c.len() == 2 && (c[0] >= 0 || c[1] == 0),
            SubShape::Vertices(vs) => vs.contains(v),
        }
    }

    pub fn origin(&self) -> Vertex {
        match self {
            Locale::Euclidean { d, .. } => Vertex::new(&vec![0; *d]),
            Locale::Triangular => Vertex::new(&[0, 0]),
            Locale::Hexagonal => Vertex::new(&[0, 0, 0]),
            Locale::FreeGroup { .. } => Vertex::new(&[]),
            Locale::Product { left, right } => Locale::product_vertex(&left.origin(), &right.origin()),
            Locale::Sublocale { parent, shape } => match shape {
                SubShape::Vertices(vs) => vs.iter().min().cloned().unwrap_or_else(|| parent.origin()),
                _ => parent.origin(),
            },
        }
    }

    /// Neighbors of `v` in sorted order. Assumes `v` is valid.
    pub fn neighbors(&self, v: &Vertex) -> Vec<Vertex> {
        let c = v.coords();
        let mut out = Vec::new();
        match self {
            Locale::Euclidean { d, n } => {
                let n = *n as i64;
                let mut off = vec![-n; *d];
                loop {
                    let norm: i64 = off.iter().map(|x| x.abs()).sum();
                    if norm > 0 && norm <= n {
                        out.push(Vertex(c.iter().zip(&off).map(|(a, b)| a + b).collect()));
                    }
                    let mut i = 0;
                    while i < *d {
                        off[i] += 1;
                        if off[i] <= n {
                            break;
                        }
                        off[i] = -n;
                        i += 1;
                    }
                    if i == *d {
                        break;
                    }
                }
            }
            Locale::Triangular => {
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)] {
                    out.push(Vertex::new(&[c[0] + dx, c[1] + dy]));
                }
            }
            Locale::Hexagonal => {
                let (x, y) = (c[0], c[1]);
                if c[2] == 0 {
                    out.extend([Vertex::new(&[x, y, 1]), Vertex::new(&[x - 1, y, 1]), Vertex::new(&[x, y - 1, 1])]);
                } else {
                    out.extend([Vertex::new(&[x, y, 0]), Vertex::new(&[x + 1, y, 0]), Vertex::new(&[x, y + 1, 0])]);
                }
            }
            Locale::FreeGroup { rank } => {
                for j in 1..=*rank as i64 {
                    for a in [j, -j] {
                        out.push(Vertex(reduce_word(c.iter().copied().chain([a]))));
                    }
                }
            }
            Locale::Product { left, right } => {
                let (a, b) = self.split_product(v).expect("valid product vertex");
                for na in left.neighbors(&a) {
                    out.push(Locale::product_vertex(&na, &b));
                }
                for nb in right.neighbors(&b) {
                    out.push(Locale::product_vertex(&a, &nb));
                }
            }
            Locale::Sublocale { parent, shape } => {
                out = parent.neighbors(v).into_iter().filter(|w| self.in_shape(shape, w)).collect();
            }
        }
        out.sort();
        out
    }

    pub fn is_adjacent(&self, x: &Vertex, y: &Vertex) -> bool {
        self.neighbors(x).binary_search(y).is_ok()
    }

    /// Graph distance; `None` if `y` is unreachable from `x`.
    pub fn distance(&self, x: &Vertex, y: &Vertex) -> Result<Option<u64>> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &Vertex, y: &Vertex) -> Option<u64> {
        let (a, b) = (x.coords(), y.coords());
        match self {
            Locale::Euclidean { n, .. } => Some(l1(a, b).div_ceil(*n as u64)),
            Locale::Triangular => {
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                Some((dx.unsigned_abs() + dy.unsigned_abs() + (dx + dy).unsigned_abs()) / 2)
            }
            Locale::FreeGroup { .. } => Some(reduce_word(invert_word(a).chain(b.iter().copied())).len() as u64),
            Locale::Product { left, right } => {
                let (xa, xb) = self.split_product(x).ok()?;
                let (ya, yb) = self.split_product(y).ok()?;
                Some(left.distance_unchecked(&xa, &ya)? + right.distance_unchecked(&xb, &yb)?)
            }
            Locale::Sublocale { shape: SubShape::Cross | SubShape::HalfPlaneWithLine, .. } => Some(l1(a, b)),
            _ => self.bfs_distance(x, y),
        }
    }

    fn bfs_distance(&self, x: &Vertex, y: &Vertex) -> Option<u64> {
        if x == y {
            return Some(0);
        }
        let mut seen: HashMap<Vertex, u64> = HashMap::from([(x.clone(), 0)]);
        let mut queue = VecDeque::from([x.clone()]);
        while let Some(v) = queue.pop_front() {
            let dv = seen[&v];
            for w in self.neighbors(&v) {
                if seen.contains_key(&w) {
                    continue;
                }
                if &w == y {
                    return Some(dv + 1);
                }
                seen.insert(w.clone(), dv + 1);
                queue.push_back(w);
            }
        }
        None
    }

    /// `B(x,R)` as a window.
    pub fn ball(&self, x: &Vertex, r: u64) -> Result<Window> {
        self.validate(x)?;
        let mut seen: BTreeMap<Vertex, u64> = BTreeMap::from([(x.clone(), 0)]);
        let mut queue = VecDeque::from([x.clone()]);
        while let Some(v) = queue.pop_front() {
            let dv = seen[&v];
            if dv == r {
                continue;
            }
            for w in self.neighbors(&v) {
                if !seen.contains_key(&w) {
                    seen.insert(w.clone(), dv + 1);
                    queue.push_back(w);
                }
            }
        }
        Window::new(self.clone(), seen.into_keys().collect())
    }

    /// True for one-dimensional locales, where pairings carry an orientation.
    pub fn is_line(&self) -> bool {
        matches!(self, Locale::Euclidean { d: 1, .. } | Locale::FreeGroup { rank: 1 })
    }

    /// Position along a line locale.
    pub fn line_position(&self, v: &Vertex) -> Option<i64> {
        match self {
            Locale::Euclidean { d: 1, .. } => Some(v.0[0]),
            Locale::FreeGroup { rank: 1 } => Some(v.0.iter().sum()),
            _ => None,
        }
    }

    pub fn catalog_transferability(&self) -> Option<Transferability> {
        use Transferability::*;
        match self {
            Locale::Euclidean { d: 1, .. } | Locale::FreeGroup { rank: 1 } => Some(WeaklyTransferableNotTransferable),
            Locale::Euclidean { .. } | Locale::Triangular | Locale::Hexagonal => Some(StronglyTransferable),
            Locale::FreeGroup { .. } => Some(Transferable),
            Locale::Sublocale { shape: SubShape::Cross | SubShape::HalfPlaneWithLine, .. } => Some(Transferable),
            _ => None,
        }
    }

    fn is_vertex_transitive(&self) -> bool {
        matches!(self, Locale::Euclidean { .. } | Locale::Triangular | Locale::FreeGroup { .. })
    }

    /// The translation (or left-multiplication) action of the lattice group.
    pub fn default_action(&self) -> Option<GroupAction> {
        let unit = |d: usize| (0..d).map(|j| (0..d).map(|i| i64::from(i == j)).collect()).collect();
        match self {
            Locale::Euclidean { d, .. } => Some(GroupAction::Translations { dim: *d, generators: unit(*d) }),
            Locale::Triangular | Locale::Hexagonal => Some(GroupAction::Translations { dim: 2, generators: unit(2) }),
            Locale::FreeGroup { rank } => Some(GroupAction::FreeLeft { rank: *rank }),
            _ => None,
        }
    }

    pub fn default_fundamental_domain(&self) -> Vec<Vertex> {
        match self {
            Locale::Hexagonal => vec![Vertex::new(&[0, 0, 0]), Vertex::new(&[0, 0, 1])],
            _ => vec![self.origin()],
        }
    }
}

/// A finite vertex set with its induced directed edges.
#[derive(Clone, Debug)]
pub struct Window {
    locale: Locale,
    vertices: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    adj: Vec<Vec<usize>>,
}

impl Window {
    pub fn new(locale: Locale, mut vertices: Vec<Vertex>) -> Result<Window> {
        for v in &vertices {
            locale.validate(v)?;
        }
        vertices.sort();
        vertices.dedup();
        let index: HashMap<Vertex, usize> = vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let adj = vertices
            .iter()
            .map(|v| locale.neighbors(v).iter().filter_map(|w| index.get(w).copied()).collect())
            .collect();
        Ok(Window { locale, vertices, index, adj })
    }

    /// Lattice box `lo ≤ x ≤ hi` coordinatewise; for the honeycomb both
    /// sublattices of every cell are included.
    pub fn from_box(locale: &Locale, lo: &[i64], hi: &[i64]) -> Result<Window> {
        if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidInput("box bounds".into()));
        }
        let mut pts: Vec<Vec<i64>> = vec![vec![]];
        for (a, b) in lo.iter().zip(hi) {
            pts = pts.into_iter().flat_map(|p| (*a..=*b).map(move |x| [p.clone(), vec![x]].concat())).collect();
        }
        let verts = match locale {
            Locale::Hexagonal => pts.iter().flat_map(|p| [0, 1].map(|b| Vertex::new(&[p[0], p[1], b]))).collect(),
            Locale::Euclidean { .. } | Locale::Triangular => pts.iter().map(|p| Vertex::new(p)).collect(),
            Locale::Sublocale { shape, .. } => {
                pts.iter().map(|p| Vertex::new(p)).filter(|v| locale.in_shape(shape, v)).collect()
            }
            _ => return Err(Error::UnsupportedLocale("box windows need lattice coordinates".into())),
        };
        Window::new(locale.clone(), verts)
    }

    pub fn locale(&self) -> &Locale {
        &self.locale
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.index.contains_key(v)
    }

    pub fn neighbors_idx(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Directed edges as index pairs, in lexicographic order.
    pub fn edge_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, ns) in self.adj.iter().enumerate() {
            for &j in ns {
                out.push((i, j));
            }
        }
        out.sort();
        out
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.edge_indices()
            .into_iter()
            .map(|(i, j)| Edge(self.vertices[i].clone(), self.vertices[j].clone()))
            .collect()
    }

    /// `B(Λ,R) = ∪_{x∈Λ} B(x,R)`.
    pub fn thicken(&self, r: u64) -> Result<Window> {
        let mut all = BTreeSet::new();
        for v in &self.vertices {
            all.extend(self.locale.ball(v, r)?.vertices);
        }
        Window::new(self.locale.clone(), all.into_iter().collect())
    }

    pub fn sub(&self, vertices: Vec<Vertex>) -> Result<Window> {
        Window::new(self.locale.clone(), vertices)
    }

    /// Shortest vertex path inside the window.
    pub fn shortest_path(&self, x: &Vertex, y: &Vertex) -> Option<Vec<Vertex>> {
        let (s, t) = (self.index_of(x)?, self.index_of(y)?);
        let mut prev = vec![usize::MAX; self.len()];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            if v == t {
                break;
            }
            for &w in &self.adj[v] {
                if prev[w] == usize::MAX {
                    prev[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if prev[t] == usize::MAX {
            return None;
        }
        let mut path = vec![t];
        while *path.last().unwrap() != s {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Some(path.into_iter().map(|i| self.vertices[i].clone()).collect())
    }

    pub fn is_connected(&self) -> bool {
        match self.vertices.first() {
            None => true,
            Some(v) => self.vertices.iter().all(|w| self.shortest_path(v, w).is_some()),
        }
    }

    /// Distance from `v` to the nearest vertex of `set`.
    pub fn set_distance(&self, v: &Vertex, set: &[Vertex]) -> Option<u64> {
        set.iter().filter_map(|w| self.locale.distance_unchecked(v, w)).min()
    }

    /// Vertices `x` with `B(x, margin) ⊆ Λ`.
    pub fn interior(&self, margin: u64) -> Result<Vec<Vertex>> {
        let mut out = Vec::new();
        for v in &self.vertices {
            if self.locale.ball(v, margin)?.vertices.iter().all(|w| self.contains(w)) {
                out.push(v.clone());
            }
        }
        Ok(out)
    }

    /// Directed edges `e` with `B(e, margin) ⊆ Λ`.
    pub fn interior_edges(&self, margin: u64) -> Result<Vec<Edge>> {
        let inner: BTreeSet<Vertex> = self.interior(margin)?.into_iter().collect();
        Ok(self.edges().into_iter().filter(|e| inner.contains(&e.0) && inner.contains(&e.1)).collect())
    }

    /// The vertex of least eccentricity (ties broken lexicographically).
    pub fn center(&self) -> Option<Vertex> {
        self.vertices
            .iter()
            .map(|v| {
                let ecc = self.vertices.iter().filter_map(|w| self.locale.distance_unchecked(v, w)).max();
                (ecc, v)
            })
            .min()
            .map(|(_, v)| v.clone())
    }

    pub fn diameter_of(&self, set: &[Vertex]) -> u64 {
        diameter(&self.locale, set)
    }
}

pub fn diameter(locale: &Locale, set: &[Vertex]) -> u64 {
    let mut d = 0;
    for (i, x) in set.iter().enumerate() {
        for y in &set[i + 1..] {
            d = d.max(locale.distance_unchecked(x, y).unwrap_or(u64::MAX));
        }
    }
    d
}

#[derive(Clone, Debug)]
pub struct ProbeOptions {
    pub r_max: u64,
    /// Defaults to `2·r_max + 2`.
    pub margin: Option<u64>,
    pub centers: Option<Vec<Vertex>>,
    /// Largest probe window, in vertices.
    pub budget: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { r_max: 2, margin: None, centers: None, budget: 250_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRecord {
    pub center: Vertex,
    pub radius: u64,
    pub components: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferabilityReport {
    pub verdict: Transferability,
    pub source: &'static str,
    pub margin: u64,
    pub probes: Vec<ProbeRecord>,
}

/// Counts components of `B(c, r+m) ∖ B(c, r)` that reach the outer sphere.
fn probe_once(locale: &Locale, c: &Vertex, r: u64, m: u64, budget: usize) -> Result<usize> {
    let mut dist: HashMap<Vertex, u64> = HashMap::from([(c.clone(), 0)]);
    let mut queue = VecDeque::from([c.clone()]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[&v];
        if dv == r + m {
            continue;
        }
        for w in locale.neighbors(&v) {
            if !dist.contains_key(&w) {
                dist.insert(w.clone(), dv + 1);
                if dist.len() > budget {
                    return Err(Error::BudgetExceeded { needed: dist.len() as u128, budget: budget as u64 });
                }
                queue.push_back(w);
            }
        }
    }
    let mut outside: Vec<&Vertex> = dist.iter().filter(|(_, d)| **d > r).map(|(v, _)| v).collect();
    outside.sort();
    let mut label: HashMap<&Vertex, usize> = HashMap::new();
    let mut touching = BTreeSet::new();
    let mut next = 0;
    for &start in &outside {
        if label.contains_key(start) {
            continue;
        }
        label.insert(start, next);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if dist[v] == r + m {
                touching.insert(next);
            }
            for w in locale.neighbors(v) {
                if let Some((k, d)) = dist.get_key_value(&w) {
                    if *d > r && !label.contains_key(k) {
                        label.insert(k, next);
                        stack.push(k);
                    }
                }
            }
        }
        next += 1;
    }
    Ok(touching.len())
}

/// Bounded-window evidence for transferability; never a proof.
pub fn probe_transferability(locale: &Locale, opts: &ProbeOptions) -> Result<TransferabilityReport> {
    let m = opts.margin.unwrap_or(2 * opts.r_max + 2);
    let centers = match &opts.centers {
        Some(c) => c.clone(),
        None if locale.is_vertex_transitive() => vec![locale.origin()],
        None if matches!(locale, Locale::Hexagonal) => locale.default_fundamental_domain(),
        None => locale.ball(&locale.origin(), opts.r_max + 1)?.vertices,
    };
    let mut probes = Vec::new();
    for c in &centers {
        locale.validate(c)?;
        for r in 0..=opts.r_max {
            probes.push(ProbeRecord { center: c.clone(), radius: r, components: probe_once(locale, c, r, m, opts.budget)? });
        }
    }
    use Transferability::*;
    let counts: Vec<usize> = probes.iter().map(|p| p.components).collect();
    let verdict = if counts.iter().any(|&k| k == 0) {
        Unknown
    } else if counts.iter().all(|&k| k == 1) {
        StronglyTransferable
    } else if counts.iter().any(|&k| k >= 3) {
        Transferable
    } else if (0..=opts.r_max).all(|r| probes.iter().any(|p| p.radius == r && p.components == 1)) {
        Transferable
    } else if counts.iter().all(|&k| k == 2) {
        WeaklyTransferableNotTransferable
    } else {
        Unknown
    };
    Ok(TransferabilityReport { verdict, source: "probe", margin: m, probes })
}

/// Catalog answer for built-in families, probe evidence otherwise.
pub fn classify_transferability(locale: &Locale, opts: &ProbeOptions) -> Result<TransferabilityReport> {
    match locale.catalog_transferability() {
        Some(verdict) => Ok(TransferabilityReport {
            verdict,
            source: "catalog",
            margin: opts.margin.unwrap_or(2 * opts.r_max + 2),
            probes: vec![],
        }),
        None => probe_transferability(locale, opts),
    }
}

/// Element of ℤ^d (coefficients on the generators) or a reduced word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct GroupElement(pub Vec<i64>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupAction {
    /// Translations of the first `dim` coordinates by integer combinations
    /// of `generators`.
    Translations { dim: usize, generators: Vec<Vec<i64>> },
    /// Left multiplication on a free-group Cayley graph.
    FreeLeft { rank: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct Tile {
    pub element: GroupElement,
    pub vertices: Vec<Vertex>,
    pub full: bool,
}

impl GroupAction {
    /// Number of generators, i.e. the rank of the abelianization.
    pub fn rank(&self) -> usize {
        match self {
            GroupAction::Translations { generators, .. } => generators.len(),
            GroupAction::FreeLeft { rank } => *rank,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupAction::Translations { generators, .. } => GroupElement(vec![0; generators.len()]),
            GroupAction::FreeLeft { .. } => GroupElement(vec![]),
        }
    }

    pub fn generator(&self, j: usize) -> GroupElement {
        match self {
            GroupAction::Translations { generators, .. } => {
                GroupElement((0..generators.len()).map(|i| i64::from(i == j)).collect())
            }
            GroupAction::FreeLeft { .. } => GroupElement(vec![j as i64 + 1]),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> GroupElement {
        match self {
            GroupAction::Translations { .. } => GroupElement(g.0.iter().map(|x| -x).collect()),
            GroupAction::FreeLeft { .. } => GroupElement(invert_word(&g.0).collect()),
        }
    }

    /// The product `g·h` (apply `h` first).
    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match self {
            GroupAction::Translations { .. } => GroupElement(g.0.iter().zip(&h.0).map(|(a, b)| a + b).collect()),
            GroupAction::FreeLeft { .. } => GroupElement(reduce_word(g.0.iter().chain(&h.0).copied()).to_vec()),
        }
    }

    pub fn apply(&self, g: &GroupElement, x: &Vertex) -> Vertex {
        match self {
            GroupAction::Translations { dim, generators } => {
                let mut c = x.0.clone();
                for (k, gen) in g.0.iter().zip(generators) {
                    for i in 0..*dim {
                        c[i] += k * gen[i];
                    }
                }
                Vertex(c)
            }
            GroupAction::FreeLeft { .. } => Vertex(reduce_word(g.0.iter().chain(x.0.iter()).copied())),
        }
    }

    pub fn apply_edge(&self, g: &GroupElement, e: &Edge) -> Edge {
        Edge(self.apply(g, &e.0), self.apply(g, &e.1))
    }

    /// Image in ℤ^rank.
    pub fn abelianize(&self, g: &GroupElement) -> Vec<i64> {
        match self {
            GroupAction::Translations { .. } => g.0.clone(),
            GroupAction::FreeLeft { rank } => {
                let mut out = vec![0; *rank];
                for &a in &g.0 {
                    out[a.unsigned_abs() as usize - 1] += a.signum();
                }
                out
            }
        }
    }

    /// Largest distance moved by a generator or its inverse on the given vertices.
    pub fn max_displacement(&self, locale: &Locale, at: &[Vertex]) -> u64 {
        let mut m = 0;
        for j in 0..self.rank() {
            let g = self.generator(j);
            for h in [g.clone(), self.inverse(&g)] {
                for x in at {
                    m = m.max(locale.distance_unchecked(x, &self.apply(&h, x)).unwrap_or(0));
                }
            }
        }
        m
    }

    /// The unique `(τ, i)` with `x = τ(Λ₀[i])`.
    pub fn locate(&self, x: &Vertex, domain: &[Vertex]) -> Result<(GroupElement, usize)> {
        let mut hits = Vec::new();
        for (i, x0) in domain.iter().enumerate() {
            match self {
                GroupAction::Translations { dim, generators } => {
                    if x.0.len() != x0.0.len() || x.0[*dim..] != x0.0[*dim..] {
                        continue;
                    }
                    let k = generators.len();
                    let rows: Vec<Vec<Q>> = (0..*dim)
                        .map(|r| {
                            let mut row: Vec<Q> = generators.iter().map(|g| q(g[r])).collect();
                            row.push(q(x.0[r] - x0.0[r]));
                            row
                        })
                        .collect();
                    let mut m = rows;
                    let pivots = linalg::rref(&mut m, k + 1);
                    if pivots.contains(&k) {
                        continue;
                    }
                    let mut coeffs = vec![0; k];
                    let mut ok = true;
                    for (r, &p) in pivots.iter().enumerate() {
                        match to_i64(&m[r][k]) {
                            Some(c) => coeffs[p] = c,
                            None => ok = false,
                        }
                    }
                    if ok {
                        hits.push((GroupElement(coeffs), i));
                    }
                }
                GroupAction::FreeLeft { .. } => {
                    hits.push((GroupElement(reduce_word(x.0.iter().copied().chain(invert_word(&x0.0))).to_vec()), i));
                }
            }
        }
        match hits.len() {
            1 => Ok(hits.pop().unwrap()),
            0 => Err(Error::NotATiling(format!("{x:?} is not in the orbit of the domain"))),
            _ => Err(Error::NotATiling(format!("{x:?} is covered by {} translates of the domain", hits.len()))),
        }
    }

    /// Covers the window by translates `τ(Λ₀)`, flagging partial tiles.
    pub fn orbit_decompose(&self, window: &Window, domain: &[Vertex]) -> Result<Vec<Tile>> {
        let mut tiles: BTreeMap<GroupElement, Vec<Vertex>> = BTreeMap::new();
        for v in window.vertices() {
            let (g, _) = self.locate(v, domain)?;
            tiles.entry(g).or_default().push(v.clone());
        }
        Ok(tiles
            .into_iter()
            .map(|(element, vertices)| {
                let full = domain.iter().all(|x0| window.contains(&self.apply(&element, x0)));
                Tile { element, vertices, full }
            })
            .collect())
    }
}
