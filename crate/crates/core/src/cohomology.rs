//! The pairing `h_f` on quantity vectors, its cocycle and symmetry checks,
//! the splitting `h`, and uniformization `g = f + h∘𝛏_X`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::calculus::{uniformity, LocalFunction, UniformityCertificate};
use crate::configspace::{Coder, Configuration, TransitionGraph, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::interaction::{add, ConsvBasis, Interaction, QVec};
use crate::linalg::{self, Equation, Solve};
use crate::locale::{Vertex, Window};
use crate::rational::{fmt_q, Q};

/// Above this many configurations on `Λ∪Λ′` a probe uses per-quantity
/// representatives instead of full enumeration.
pub const FULL_ENUMERATION_LIMIT: u64 = 20_000;
const REPRESENTATIVES_PER_QUANTITY: usize = 2;

/// Pairs `(Λ, Λ′)` of vertex sets at which the pairing is evaluated.
#[derive(Clone, Debug, Serialize)]
pub struct ProbePlan {
    pub pairs: Vec<(Vec<Vertex>, Vec<Vertex>)>,
    /// On line locales, order every pair left-to-right before use.
    pub oriented: bool,
}

impl ProbePlan {
    pub fn new(pairs: Vec<(Vec<Vertex>, Vec<Vertex>)>) -> Self {
        ProbePlan { pairs, oriented: true }
    }

    /// Radius-`r` balls inside the window whose centers are more than
    /// `2r + R` apart, at most `limit` pairs in lexicographic order.
    pub fn balls(window: &Window, radius: u64, r: u64, limit: usize) -> Result<Self> {
        let locale = window.locale();
        let centers = window.interior(r)?;
        let mut pairs = Vec::new();
        'outer: for (i, a) in centers.iter().enumerate() {
            for b in &centers[i + 1..] {
                if locale.distance_unchecked(a, b).is_some_and(|d| d > 2 * r + radius) {
                    pairs.push((locale.ball(a, r)?.vertices().to_vec(), locale.ball(b, r)?.vertices().to_vec()));
                    if pairs.len() == limit {
                        break 'outer;
                    }
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::WindowTooSmall(format!("no radius-{r} ball pair at distance > {radius}")));
        }
        Ok(ProbePlan::new(pairs))
    }

    /// `(region, {y})` for up to `partners` window vertices `y` farther than
    /// `R` from the region; on a line only vertices to the right are used.
    pub fn anchored(window: &Window, region: &[Vertex], radius: u64, partners: usize) -> Result<Self> {
        let locale = window.locale();
        let right_of = |y: &Vertex| match (locale.line_position(y), region.iter().filter_map(|v| locale.line_position(v)).max()) {
            (Some(p), Some(m)) => p > m,
            _ => true,
        };
        let mut cands: Vec<(u64, Vertex)> = window
            .vertices()
            .iter()
            .filter(|y| right_of(y))
            .filter_map(|y| window.set_distance(y, region).filter(|d| *d > radius).map(|d| (d, y.clone())))
            .collect();
        cands.sort();
        let pairs: Vec<_> = cands.into_iter().take(partners).map(|(_, y)| (region.to_vec(), vec![y])).collect();
        if pairs.is_empty() {
            return Err(Error::WindowTooSmall(format!("no partner vertex farther than {radius} from the region")));
        }
        Ok(ProbePlan::new(pairs))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeUse {
    pub first: Vec<Vertex>,
    pub second: Vec<Vertex>,
    pub swapped: bool,
    pub configurations: u64,
    pub enumeration: &'static str,
}

/// `h_f(α,β)` on the probed cells.
#[derive(Clone, Debug, Default)]
pub struct PairingTable {
    pub cells: BTreeMap<(QVec, QVec), Q>,
    pub probes: Vec<ProbeUse>,
}

impl PairingTable {
    pub fn get(&self, a: &[i64], b: &[i64]) -> Option<&Q> {
        self.cells.get(&(a.to_vec(), b.to_vec()))
    }

    pub fn is_zero(&self) -> bool {
        self.cells.values().all(Zero::is_zero)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cells": self.cells.iter().map(|((a, b), v)| serde_json::json!({"a": a, "b": b, "v": fmt_q(v)})).collect::<Vec<_>>(),
            "probes": self.probes,
        })
    }
}

/// Configurations on `sites`, with up to `per` representatives per quantity
/// when full enumeration is over budget.
fn site_configurations(sites: &[Vertex], inter: &Interaction, basis: &ConsvBasis, per: Option<usize>) -> Result<Vec<(QVec, Configuration)>> {
    let coder = Coder::new(sites.len(), inter.n_states(), inter.base(), DEFAULT_BUDGET)?;
    let mut out = Vec::new();
    let mut seen: BTreeMap<QVec, usize> = BTreeMap::new();
    for idx in 0..coder.total() {
        let digits = coder.digits(idx);
        let alpha = basis.quantity_of_states(digits.iter().copied());
        let c = seen.entry(alpha.clone()).or_insert(0);
        if per.is_some_and(|p| *c >= p) {
            continue;
        }
        *c += 1;
        out.push((alpha, coder.to_config(sites, idx)));
    }
    if let Some(p) = per {
        // Also take the last configuration of each quantity for variety.
        let mut last: BTreeMap<QVec, u64> = BTreeMap::new();
        for idx in 0..coder.total() {
            last.insert(basis.quantity_of_states(coder.digits(idx)), idx);
        }
        for (alpha, idx) in last {
            let c = coder.to_config(sites, idx);
            if seen[&alpha] >= p && !out.iter().any(|(_, o)| *o == c) {
                out.push((alpha, c));
            }
        }
    }
    Ok(out)
}

fn union(a: &Configuration, b: &Configuration, base: usize) -> Configuration {
    Configuration::from_pairs(a.iter().chain(b.iter()).map(|(v, s)| (v.clone(), *s)), base)
}

/// Evaluates `ι^{Λ∪Λ′}f − ι^Λ f − ι^{Λ′}f` on every probe and tabulates it
/// by `(𝛏_Λ, 𝛏_{Λ′})`, failing if a cell receives two values.
pub fn compute_pairing(
    f: &mut impl FnMut(&Configuration) -> Result<Q>,
    inter: &Interaction,
    basis: &ConsvBasis,
    window: &Window,
    radius: u64,
    plan: &ProbePlan,
) -> Result<PairingTable> {
    let locale = window.locale();
    let base = inter.base();
    let mut table = PairingTable::default();
    let mut origin: BTreeMap<(QVec, QVec), Configuration> = BTreeMap::new();
    for (a, b) in &plan.pairs {
        for v in a.iter().chain(b) {
            if !window.contains(v) {
                return Err(Error::WindowTooSmall(format!("probe vertex {v:?} outside the window")));
            }
        }
        let gap = a.iter().filter_map(|v| window.set_distance(v, b)).min().unwrap_or(u64::MAX);
        if gap <= radius {
            return Err(Error::WindowTooSmall(format!("probe sets at distance {gap} ≤ {radius}")));
        }
        let mut swapped = false;
        let (mut first, mut second) = (a.clone(), b.clone());
        if plan.oriented && locale.is_line() {
            let pos = |s: &[Vertex]| s.iter().filter_map(|v| locale.line_position(v)).collect::<Vec<_>>();
            let (pa, pb) = (pos(a), pos(b));
            let a_left = pa.iter().max() < pb.iter().min();
            let b_left = pb.iter().max() < pa.iter().min();
            if !a_left && !b_left {
                return Err(Error::InvalidInput("probe sets interleave on the line".into()));
            }
            if b_left {
                std::mem::swap(&mut first, &mut second);
                swapped = true;
            }
        }
        let k = inter.n_states() as u128;
        let full = k.checked_pow((first.len() + second.len()) as u32).is_some_and(|n| n <= FULL_ENUMERATION_LIMIT as u128);
        let per = if full { None } else { Some(REPRESENTATIVES_PER_QUANTITY) };
        let left = site_configurations(&first, inter, basis, per)?;
        let right = site_configurations(&second, inter, basis, per)?;
        for (alpha, x) in &left {
            let fx = f(x)?;
            for (beta, y) in &right {
                let eta = union(x, y, base);
                let v = f(&eta)? - &fx - f(y)?;
                let key = (alpha.clone(), beta.clone());
                match table.cells.get(&key) {
                    None => {
                        table.cells.insert(key.clone(), v);
                        origin.insert(key, eta);
                    }
                    Some(old) if *old != v => {
                        return Err(Error::IllDefinedPairing(format!(
                            "cell ({alpha:?}, {beta:?}) takes {} at {:?} and {} at {eta:?}",
                            fmt_q(old),
                            origin[&key],
                            fmt_q(&v)
                        )));
                    }
                    _ => {}
                }
            }
        }
        table.probes.push(ProbeUse {
            first,
            second,
            swapped,
            configurations: (left.len() * right.len()) as u64,
            enumeration: if full { "full" } else { "representatives" },
        });
    }
    Ok(table)
}

#[derive(Clone, Debug, Serialize)]
pub struct CocycleReport {
    pub cocycle: bool,
    pub triples: usize,
    pub violations: Vec<String>,
    pub symmetric: bool,
    pub symmetry_witness: Option<(QVec, QVec, String, String)>,
}

/// Checks `h(α,β)+h(α+β,γ) = h(β,γ)+h(α,β+γ)` on every triple whose four
/// cells are present, and `h(α,β)=h(β,α)` where both cells are present.
pub fn check_cocycle_and_symmetry(table: &PairingTable) -> CocycleReport {
    let values: BTreeSet<QVec> = table.cells.keys().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let mut triples = 0;
    let mut violations = Vec::new();
    for ((a, b), hab) in &table.cells {
        for c in &values {
            let (Some(h1), Some(h2), Some(h3)) =
                (table.get(&add(a, b), c), table.get(b, c), table.get(a, &add(b, c)))
            else {
                continue;
            };
            triples += 1;
            if hab + h1 != h2 + h3 && violations.len() < 10 {
                violations.push(format!("α={a:?} β={b:?} γ={c:?}"));
            }
        }
    }
    let symmetry_witness = table.cells.iter().find_map(|((a, b), v)| match table.get(b, a) {
        Some(w) if w != v => Some((a.clone(), b.clone(), fmt_q(v), fmt_q(w))),
        _ => None,
    });
    CocycleReport { cocycle: violations.is_empty(), triples, violations, symmetric: symmetry_witness.is_none(), symmetry_witness }
}

#[derive(Clone, Debug)]
pub enum Splitting {
    Solved { h: BTreeMap<QVec, Q>, method: &'static str },
    /// Multipliers on cells whose combination of equations reads `0 = c ≠ 0`.
    Infeasible { certificate: Vec<((QVec, QVec), Q)> },
}

impl Splitting {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Splitting::Solved { h, method } => serde_json::json!({
                "feasible": true,
                "method": method,
                "h": h.iter().map(|(a, v)| serde_json::json!({"a": a, "v": fmt_q(v)})).collect::<Vec<_>>(),
            }),
            Splitting::Infeasible { certificate } => serde_json::json!({
                "feasible": false,
                "certificate": certificate.iter().map(|((a, b), y)| serde_json::json!({"a": a, "b": b, "y": fmt_q(y)})).collect::<Vec<_>>(),
            }),
        }
    }
}

/// Checks `h(α)+h(β)−h(α+β) = h_f(α,β)` on every cell.
pub fn splits(table: &PairingTable, h: &BTreeMap<QVec, Q>) -> bool {
    table.cells.iter().all(|((a, b), v)| match (h.get(a), h.get(b), h.get(&add(a, b))) {
        (Some(x), Some(y), Some(z)) => &(x + y - z) == v,
        _ => false,
    })
}

fn rank_one_iteration(table: &PairingTable) -> Option<BTreeMap<QVec, Q>> {
    let zero = vec![0i64];
    let h00 = table.get(&zero, &zero)?.clone();
    let ht = |a: i64, b: i64| table.get(&[a], &[b]).map(|v| v - &h00);
    let g = table.cells.keys().flat_map(|(a, b)| [a[0], b[0]]).filter(|x| *x > 0).min()?;
    let mut out: BTreeMap<i64, Q> = BTreeMap::from([(0, Q::zero()), (g, Q::zero())]);
    let mut n = 1;
    while let Some(hng) = ht(n * g, g) {
        let next = &out[&(n * g)] + &out[&g] - hng;
        out.insert((n + 1) * g, next);
        n += 1;
    }
    if let Some(hneg) = ht(g, -g) {
        out.insert(-g, hneg);
        let mut n = 1;
        while let Some(h) = ht(-n * g, -g) {
            let next = &out[&(-n * g)] + &out[&-g] - h;
            out.insert(-(n + 1) * g, next);
            n += 1;
        }
    }
    let mut h: BTreeMap<QVec, Q> = out.into_iter().map(|(a, v)| (vec![a], v + &h00)).collect();
    loop {
        let mut grew = false;
        for ((a, b), v) in &table.cells {
            let s = add(a, b);
            if h.contains_key(&s) {
                continue;
            }
            if let (Some(x), Some(y)) = (h.get(a), h.get(b)) {
                let val = x + y - v;
                h.insert(s, val);
                grew = true;
            }
        }
        if !grew {
            return Some(h);
        }
    }
}

/// Solves `h(α)+h(β)−h(α+β) = h_f(α,β)` on the table's domain.
pub fn solve_splitting(table: &PairingTable) -> Result<Splitting> {
    let report = check_cocycle_and_symmetry(table);
    if !report.cocycle {
        return Err(Error::CocycleViolated(report.violations.join("; ")));
    }
    let rank = table.cells.keys().next().map(|(a, _)| a.len()).unwrap_or(0);
    if rank == 1 {
        if let Some(h) = rank_one_iteration(table) {
            if splits(table, &h) {
                return Ok(Splitting::Solved { h, method: "rank-one iteration" });
            }
        }
    }
    let domain: Vec<QVec> = table
        .cells
        .keys()
        .flat_map(|(a, b)| [a.clone(), b.clone(), add(a, b)])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let var = |a: &QVec| domain.binary_search(a).unwrap();
    let keys: Vec<&(QVec, QVec)> = table.cells.keys().collect();
    let mut eqs: Vec<Equation> = keys
        .iter()
        .map(|(a, b)| {
            Equation::new(
                [(var(a), Q::from_integer(1.into())), (var(b), Q::from_integer(1.into())), (var(&add(a, b)), Q::from_integer((-1).into()))],
                table.cells[&(a.clone(), b.clone())].clone(),
            )
        })
        .collect();
    let zero = vec![0i64; rank];
    if let Ok(z) = domain.binary_search(&zero) {
        let pin = table.get(&zero, &zero).cloned().unwrap_or_else(Q::zero);
        eqs.push(Equation::new([(z, Q::from_integer(1.into()))], pin));
    }
    match linalg::solve(&eqs, domain.len()) {
        Solve::Solution(x) => Ok(Splitting::Solved { h: domain.into_iter().zip(x).collect(), method: "linear solve" }),
        Solve::Infeasible(y) => Ok(Splitting::Infeasible {
            certificate: y.into_iter().filter(|(i, _)| *i < keys.len()).map(|(i, c)| (keys[i].clone(), c)).collect(),
        }),
    }
}

#[derive(Clone, Debug)]
pub struct UniformizeReport {
    pub pairing: PairingTable,
    pub h: BTreeMap<QVec, Q>,
    /// `g = f + h∘𝛏` tabulated over the region.
    pub g: LocalFunction,
    pub pairing_of_g_vanishes: bool,
    pub criterion_checks: usize,
    pub criterion_violation: Option<String>,
    pub certificate: UniformityCertificate,
}

fn splitting_value(h: &BTreeMap<QVec, Q>, alpha: &QVec) -> Result<Q> {
    h.get(alpha)
        .cloned()
        .ok_or_else(|| Error::WindowTooSmall(format!("quantity {alpha:?} outside the probed domain")))
}

/// `g = f + h∘𝛏_X` for the splitting `h` of `h_f`, with the local
/// uniformity criterion checked on the region.
pub fn uniformize(
    f: &mut impl FnMut(&Configuration) -> Result<Q>,
    inter: &Interaction,
    basis: &ConsvBasis,
    window: &Window,
    radius: u64,
    region: &[Vertex],
    plan: Option<ProbePlan>,
) -> Result<UniformizeReport> {
    let plan = match plan {
        Some(p) => p,
        None => ProbePlan::anchored(window, region, radius, 2)?,
    };
    let pairing = compute_pairing(f, inter, basis, window, radius, &plan)?;
    let h = match solve_splitting(&pairing)? {
        Splitting::Solved { h, .. } => h,
        Splitting::Infeasible { certificate } => {
            return Err(Error::SplittingInfeasible(format!("certificate over {} cells", certificate.len())));
        }
    };
    let mut g = |eta: &Configuration| -> Result<Q> { Ok(f(eta)? + splitting_value(&h, &basis.quantity_of(eta, None))?) };
    let pairing_of_g_vanishes = compute_pairing(&mut g, inter, basis, window, radius, &plan)?.is_zero();
    let table = LocalFunction::try_tabulate(region.to_vec(), inter.n_states(), inter.base(), &mut g)?;
    let (checks, violation) = locality_criterion(&table, window, radius)?;
    let certificate = uniformity(&table, window.locale(), radius)?;
    Ok(UniformizeReport {
        pairing,
        h,
        g: table,
        pairing_of_g_vanishes,
        criterion_checks: checks,
        criterion_violation: violation,
        certificate,
    })
}

/// `ι^Λ g − ι^{Λ∖{x}} g = ι^{Λ∩B(x,R)} g − ι^{Λ∩B*(x,R)} g` for `Λ` the
/// support of `g` and every `x ∈ Λ`.
pub fn locality_criterion(g: &LocalFunction, window: &Window, radius: u64) -> Result<(usize, Option<String>)> {
    let locale = window.locale();
    let lam = g.support().to_vec();
    let mut checks = 0;
    for x in &lam {
        let near: Vec<Vertex> = lam.iter().filter(|y| locale.distance_unchecked(x, y).is_some_and(|d| d <= radius)).cloned().collect();
        for i in 0..g.values().len() {
            let eta = g.config_at(i);
            let without = |s: &[Vertex]| eta.restrict(&s.iter().filter(|y| *y != x).cloned().collect::<Vec<_>>());
            let lhs = g.eval(&eta) - g.eval(&without(&lam));
            let rhs = g.eval(&eta.restrict(&near)) - g.eval(&without(&near));
            checks += 1;
            if lhs != rhs {
                return Ok((checks, Some(format!("x={x:?} η={eta:?}"))));
            }
        }
    }
    Ok((checks, None))
}

#[derive(Clone, Debug, Serialize)]
pub struct H0Report {
    pub components: usize,
    pub quantity_values: usize,
    pub constant_on_components: bool,
    pub separates_components: bool,
    pub witness: Option<(Configuration, Configuration)>,
    pub table: Vec<(usize, QVec)>,
}

/// Compares window components with the values of `𝛏_X`.
pub fn h0_report(window: &Window, inter: &Interaction, basis: &ConsvBasis, budget: u64) -> Result<H0Report> {
    let g = TransitionGraph::build(window, inter, budget)?;
    let mut comp: BTreeMap<u32, (QVec, u64)> = BTreeMap::new();
    let mut by_quantity: BTreeMap<QVec, u64> = BTreeMap::new();
    let mut constant = true;
    let mut witness = None;
    for idx in 0..g.coder.total() {
        let alpha = g.quantity(idx, basis);
        let label = g.labels[idx as usize];
        match comp.get(&label) {
            None => {
                comp.insert(label, (alpha.clone(), idx));
            }
            Some((a, _)) if *a != alpha => constant = false,
            _ => {}
        }
        let first = *by_quantity.entry(alpha).or_insert(idx);
        if g.labels[first as usize] != label && witness.is_none() {
            witness = Some((g.config(first), g.config(idx)));
        }
    }
    Ok(H0Report {
        components: g.n_components,
        quantity_values: by_quantity.len(),
        constant_on_components: constant,
        separates_components: witness.is_none(),
        witness,
        table: comp.into_iter().map(|(l, (a, _))| (l as usize, a)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locale::Locale;
    use crate::rational::q;

    fn table_from(f: impl Fn(i64, i64) -> i64, range: std::ops::RangeInclusive<i64>) -> PairingTable {
        let mut t = PairingTable::default();
        for a in range.clone() {
            for b in range.clone() {
                t.cells.insert((vec![a], vec![b]), q(f(a, b)));
            }
        }
        t
    }

    #[test]
    fn zero_table_splits_to_zero() {
        let t = table_from(|_, _| 0, 0..=3);
        let rep = check_cocycle_and_symmetry(&t);
        assert!(rep.cocycle && rep.symmetric && rep.triples > 0);
        match solve_splitting(&t).unwrap() {
            Splitting::Solved { h, .. } => assert!(h.values().all(Zero::is_zero)),
            Splitting::Infeasible { .. } => panic!(),
        }
    }

    #[test]
    fn product_table_on_naturals() {
        let t = table_from(|a, b| a * b, 0..=4);
        let rep = check_cocycle_and_symmetry(&t);
        assert!(rep.cocycle && rep.symmetric);
        match solve_splitting(&t).unwrap() {
            Splitting::Solved { h, method } => {
                assert_eq!(method, "rank-one iteration");
                for n in 0..=8 {
                    assert_eq!(h[&vec![n]], q(-n * (n - 1) / 2));
                }
                assert!(splits(&t, &h));
            }
            Splitting::Infeasible { .. } => panic!(),
        }
    }

    #[test]
    fn asymmetric_table_is_infeasible() {
        let mut t = PairingTable::default();
        for a1 in 0..=2 {
            for a2 in 0..=2 {
                for b1 in 0..=2 {
                    for b2 in 0..=2 {
                        t.cells.insert((vec![a1, a2], vec![b1, b2]), q(a1 * b2));
                    }
                }
            }
        }
        let rep = check_cocycle_and_symmetry(&t);
        assert!(rep.cocycle && !rep.symmetric);
        match solve_splitting(&t).unwrap() {
            Splitting::Infeasible { certificate } => assert!(!certificate.is_empty()),
            Splitting::Solved { .. } => panic!(),
        }
    }

    #[test]
    fn broken_cocycle_is_rejected() {
        let t = table_from(|a, b| a * a * b, 0..=2);
        assert!(matches!(solve_splitting(&t), Err(Error::CocycleViolated(_))));
    }

    #[test]
    fn h0_on_exclusion_path() {
        let ex = Interaction::builtin("exclusion").unwrap();
        let w = Window::from_box(&Locale::euclidean(1), &[0], &[2]).unwrap();
        let rep = h0_report(&w, &ex, &ex.conserved_quantities(), DEFAULT_BUDGET).unwrap();
        assert_eq!((rep.components, rep.quantity_values), (4, 4));
        assert!(rep.constant_on_components && rep.separates_components);
    }

    #[test]
    fn local_function_pairing_vanishes() {
        let ex = Interaction::builtin("exclusion").unwrap();
        let basis = ex.conserved_quantities();
        let w = Window::from_box(&Locale::euclidean(1), &[0], &[9]).unwrap();
        let v = |x| Vertex::new(&[x]);
        let mut f = |eta: &Configuration| -> Result<Q> {
            Ok((0..9).map(|x| q((eta.get(&v(x), 0) * eta.get(&v(x + 1), 0)) as i64)).sum())
        };
        let plan = ProbePlan::balls(&w, 1, 1, 6).unwrap();
        let t = compute_pairing(&mut f, &ex, &basis, &w, 1, &plan).unwrap();
        assert!(t.is_zero());
    }
}
