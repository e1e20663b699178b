//! Group cocycles with values in conserved quantities, the forms `θ_ρ` and
//! `ω_ρ`, the boundary map `δ`, and the decomposition `ω = ∂F + ω_ρ`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::calculus::{
    differential_on, exact_part_at, expand, integrate, is_closed, Form, LocalFunction, PathPotential,
};
use crate::cohomology::{check_cocycle_and_symmetry, compute_pairing, solve_splitting, PairingTable, ProbePlan, Splitting};
use crate::configspace::{apply_edge, Configuration, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::interaction::{ConsvBasis, Interaction, QVec};
use crate::linalg::{self, Equation, Solve};
use crate::locale::{diameter, Edge, GroupAction, GroupElement, Locale, Vertex, Window};
use crate::rational::{fmt_q, max_abs, parse_q, q, Q};

/// `ρ(τ) = Σ_j τ_j Σ_i a_{ij} ξ⁽ⁱ⁾`, stored as the `c_φ × d` matrix `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cocycle {
    pub a: Vec<Vec<Q>>,
    pub generators: usize,
}

impl Cocycle {
    pub fn zero(c: usize, d: usize) -> Self {
        Cocycle { a: vec![vec![Q::zero(); d]; c], generators: d }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().flatten().all(Zero::is_zero)
    }

    /// `ρ(τ)(s)` for `τ` given by its abelianization.
    pub fn value(&self, tau: &[i64], s: usize, basis: &ConsvBasis) -> Q {
        let xi = basis.of_state(s);
        let mut acc = Q::zero();
        for (i, row) in self.a.iter().enumerate() {
            if xi[i] == 0 {
                continue;
            }
            for (j, aij) in row.iter().enumerate() {
                if tau[j] != 0 {
                    acc += aij * q(tau[j] * xi[i]);
                }
            }
        }
        acc
    }

    pub fn to_json(&self, basis_name: &str) -> serde_json::Value {
        serde_json::json!({
            "basis": basis_name,
            "generators": self.generators,
            "a": self.a.iter().map(|r| r.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value, c: usize, d: usize) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cocycle must be a {c}×{d} matrix of rationals"));
        let rows = v.get("a").and_then(|a| a.as_array()).ok_or_else(bad)?;
        if rows.len() != c {
            return Err(bad());
        }
        let mut a = Vec::new();
        for r in rows {
            let r = r.as_array().ok_or_else(bad)?;
            if r.len() != d {
                return Err(bad());
            }
            a.push(
                r.iter()
                    .map(|x| match x {
                        serde_json::Value::String(s) => parse_q(s),
                        serde_json::Value::Number(n) => parse_q(&n.to_string()),
                        _ => Err(bad()),
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Cocycle { a, generators: d })
    }
}

/// `σ(f) = f∘σ`: the support moves to `σ(Λ)`.
pub fn act_on_function(action: &GroupAction, g: &GroupElement, f: &LocalFunction) -> Result<LocalFunction> {
    f.relabel(|x| action.apply(g, x))
}

/// `η∘σ`, i.e. `(η∘σ)_x = η_{σ(x)}`.
pub fn compose_config(action: &GroupAction, g: &GroupElement, eta: &Configuration, base: usize) -> Configuration {
    let inv = action.inverse(g);
    Configuration::from_pairs(eta.iter().map(|(v, s)| (action.apply(&inv, v), *s)), base)
}

/// `σ(ω)_e = σ(ω_{σ⁻¹e})`, on the window edges whose preimage is stored.
pub fn act_on_form(action: &GroupAction, g: &GroupElement, form: &Form, window: &Window) -> Result<Form> {
    let inv = action.inverse(g);
    let mut edges = BTreeMap::new();
    for e in window.edges() {
        if let Some(f) = form.edges.get(&action.apply_edge(&inv, &e)) {
            let moved = act_on_function(action, g, f)?;
            if moved.support().iter().any(|v| !window.contains(v)) {
                return Err(Error::SupportLeavesWindow(format!("translate of ω at {e:?}")));
            }
            edges.insert(e, moved);
        }
    }
    Ok(Form::new(window.locale(), edges))
}

fn same_function(a: &LocalFunction, b: &LocalFunction) -> Result<bool> {
    Ok(a.sub(b)?.is_zero())
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub margin: u64,
    pub edges_checked: usize,
    pub witness: Option<String>,
}

/// Compares `ω_{σe}` with `σ(ω_e)` for every generator and inverse on
/// edges at distance at least `margin` from the window boundary.
pub fn is_shift_invariant(form: &Form, action: &GroupAction, window: &Window, margin: u64) -> Result<InvarianceReport> {
    let interior = window.interior_edges(margin)?;
    if interior.is_empty() {
        return Err(Error::WindowTooSmall(format!("no edges at interior margin {margin}")));
    }
    let mut checked = 0;
    for e in &interior {
        let Some(we) = form.edges.get(e) else { continue };
        for j in 0..action.rank() {
            let g = action.generator(j);
            for s in [g.clone(), action.inverse(&g)] {
                let se = action.apply_edge(&s, e);
                let Some(wse) = form.edges.get(&se) else { continue };
                checked += 1;
                if !same_function(wse, &act_on_function(action, &s, we)?)? {
                    return Ok(InvarianceReport {
                        invariant: false,
                        margin,
                        edges_checked: checked,
                        witness: Some(format!("ω at {se:?} differs from the translate of ω at {e:?}")),
                    });
                }
            }
        }
    }
    Ok(InvarianceReport { invariant: true, margin, edges_checked: checked, witness: None })
}

/// Abelianized group element carrying each window vertex into `Λ₀`.
fn tile_map(action: &GroupAction, domain: &[Vertex], vertices: &[Vertex]) -> Result<BTreeMap<Vertex, Vec<i64>>> {
    vertices.iter().map(|v| Ok((v.clone(), action.abelianize(&action.locate(v, domain)?.0)))).collect()
}

/// `θ_ρ(η) = Σ_x ρ(τ_x)(η_x)` where `x ∈ τ_x(Λ₀)`.
pub fn theta(rho: &Cocycle, action: &GroupAction, domain: &[Vertex], basis: &ConsvBasis, eta: &Configuration) -> Result<Q> {
    let mut acc = Q::zero();
    for (v, s) in eta.iter() {
        let tau = action.abelianize(&action.locate(v, domain)?.0);
        acc += rho.value(&tau, *s, basis);
    }
    Ok(acc)
}

/// `ω_ρ = ∂θ_ρ` on the window edges; each `(ω_ρ)_e` is supported on `e`.
pub fn build_omega_rho(
    rho: &Cocycle,
    action: &GroupAction,
    domain: &[Vertex],
    window: &Window,
    inter: &Interaction,
    basis: &ConsvBasis,
) -> Result<Form> {
    let tiles = tile_map(action, domain, window.vertices())?;
    Form::from_fn(
        window,
        inter.n_states(),
        inter.base(),
        |e| vec![e.0.clone(), e.1.clone()],
        |e, eta| {
            let next = apply_edge(eta, e, inter);
            [&e.0, &e.1]
                .iter()
                .map(|z| {
                    let tau = &tiles[*z];
                    rho.value(tau, next.get(z, inter.base()), basis) - rho.value(tau, eta.get(z, inter.base()), basis)
                })
                .sum()
        },
    )
}

/// Group elements `τ` with `τ(x₀) = z`.
fn carrying(action: &GroupAction, x0: &Vertex, z: &Vertex) -> Option<GroupElement> {
    action.locate(z, std::slice::from_ref(x0)).ok().map(|(g, _)| g)
}

/// Translates `τ` for which `τ(supp f)` meets `e`.
fn touching_translates(action: &GroupAction, support: &[Vertex], e: &Edge) -> BTreeSet<GroupElement> {
    support
        .iter()
        .flat_map(|x0| [&e.0, &e.1].into_iter().filter_map(move |z| carrying(action, x0, z)))
        .collect()
}

/// `∂(Σ_τ τ(f))` on the window edges.
pub fn orbit_sum_differential(f: &LocalFunction, action: &GroupAction, window: &Window, inter: &Interaction) -> Result<Form> {
    let mut edges = BTreeMap::new();
    for e in window.edges() {
        let mut acc = LocalFunction::zero(inter.n_states(), inter.base());
        for tau in touching_translates(action, f.support(), &e) {
            let tf = act_on_function(action, &tau, f)?;
            let d = differential_on(&tf, std::slice::from_ref(&e), window, inter)?;
            acc = acc.add(&d.edges[&e])?;
        }
        edges.insert(e, acc);
    }
    Ok(Form::new(window.locale(), edges))
}

/// `R + diam Λ₀ + max generator displacement`.
pub fn interior_margin(form_radius: u64, action: &GroupAction, domain: &[Vertex], locale: &Locale) -> u64 {
    form_radius + diameter(locale, domain) + action.max_displacement(locale, domain)
}

#[derive(Clone, Debug)]
pub struct CocycleExtraction {
    pub rho: Cocycle,
    pub center: Vertex,
    pub closed_on: usize,
    pub invariance: InvarianceReport,
    pub cross_checks: usize,
}

fn closedness_subwindow(window: &Window, center: &Vertex, k: usize) -> Result<Window> {
    let mut best = window.sub(vec![center.clone()])?;
    for r in 1.. {
        let ball: Vec<Vertex> = window.locale().ball(center, r)?.vertices().iter().filter(|v| window.contains(v)).cloned().collect();
        let fits = (k as u128).checked_pow(ball.len() as u32).is_some_and(|n| n <= 20_000);
        if !fits || ball.len() == best.len() {
            break;
        }
        best = window.sub(ball)?;
    }
    Ok(best)
}

/// `δ(ω)`: integrates `ω` along constructed paths and reads `(1−σ_j)v` off
/// single-site configurations at the window center.
pub fn extract_cocycle(
    form: &Form,
    window: &Window,
    inter: &Interaction,
    basis: &ConsvBasis,
    action: &GroupAction,
    domain: &[Vertex],
    budget: u64,
) -> Result<CocycleExtraction> {
    let locale = window.locale();
    let base = inter.base();
    let center = window.center().ok_or_else(|| Error::WindowTooSmall("empty window".into()))?;
    let sub = closedness_subwindow(window, &center, inter.n_states())?;
    let closed = is_closed(form, &sub, inter, budget)?;
    if let Some(w) = closed.witness {
        return Err(Error::NotClosed { integral: fmt_q(&w.integral) });
    }
    let margin = interior_margin(form.radius, action, domain, locale);
    let invariance = is_shift_invariant(form, action, window, margin)?;
    if !invariance.invariant {
        return Err(Error::NotInvariant(invariance.witness.clone().unwrap_or_default()));
    }
    let v = PathPotential::new(form, inter, basis, window, budget);
    let (c, d) = (basis.dim(), action.rank());
    let mut rho = Cocycle::zero(c, d);
    let mut cross_checks = 0;
    let neighbor = window
        .neighbors_idx(window.index_of(&center).unwrap())
        .first()
        .map(|&i| window.vertices()[i].clone());
    for j in 0..d {
        let g = action.generator(j);
        let shifted = |eta: &Configuration| compose_config(action, &g, eta, base);
        let delta = |eta: &Configuration| -> Result<Q> {
            let moved = shifted(eta);
            for (x, _) in moved.iter() {
                if !window.contains(x) {
                    return Err(Error::WindowTooSmall(format!("{x:?} leaves the window")));
                }
            }
            Ok(v.eval(eta)? - v.eval(&moved)?)
        };
        let mut eqs = Vec::new();
        for s in (0..inter.n_states()).filter(|&s| s != base) {
            let eta = Configuration::from_pairs([(center.clone(), s)], base);
            let xi = basis.of_state(s);
            eqs.push(Equation::new((0..c).map(|i| (i, q(xi[i]))), delta(&eta)?));
        }
        let col = match linalg::solve(&eqs, c) {
            Solve::Solution(x) => x,
            Solve::Infeasible(_) => {
                return Err(Error::InconsistentCocycle(format!("generator {j}: (1−σ)v is not a conserved quantity")));
            }
        };
        for (i, x) in col.into_iter().enumerate() {
            rho.a[i][j] = x;
        }
        if let Some(nb) = &neighbor {
            for s in (0..inter.n_states()).filter(|&s| s != base) {
                for t in (0..inter.n_states()).filter(|&t| t != base) {
                    let eta = Configuration::from_pairs([(center.clone(), s), (nb.clone(), t)], base);
                    let xi: QVec = basis.quantity_of(&eta, None);
                    let want: Q = (0..c).map(|i| &rho.a[i][j] * q(xi[i])).sum();
                    cross_checks += 1;
                    if delta(&eta)? != want {
                        return Err(Error::InconsistentCocycle(format!(
                            "generator {j}: two-site check fails at {eta:?}"
                        )));
                    }
                }
            }
        }
    }
    Ok(CocycleExtraction { rho, center, closed_on: sub.len(), invariance, cross_checks })
}

#[derive(Clone, Debug)]
pub struct DecomposeOptions {
    pub budget: u64,
    pub partners: usize,
    pub retries: u64,
    pub max_subsets: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { budget: DEFAULT_BUDGET, partners: 2, retries: 2, max_subsets: 50_000 }
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub rho: Cocycle,
    /// Exact-support pieces whose sum is `f̂`; `Σ_τ τ(f̂) + θ_ρ̂` integrates `ω`.
    pub fhat: Vec<LocalFunction>,
    pub uniform_radius: u64,
    pub margin: u64,
    pub edges_checked: usize,
    pub residual: Q,
    pub pairing: PairingTable,
    pub plan: ProbePlan,
}

impl DecompositionResult {
    /// `f̂` as one table, when its support is small enough.
    pub fn fhat_total(&self, k: usize, base: usize) -> Result<LocalFunction> {
        let mut acc = LocalFunction::zero(k, base);
        for p in &self.fhat {
            acc = acc.add(p)?;
        }
        Ok(acc)
    }
}

/// Nonempty subsets of `pool` with diameter at most `r` that meet `anchor`.
fn bounded_subsets(locale: &Locale, pool: &[Vertex], anchor: &[Vertex], r: u64, cap: usize) -> Result<Vec<Vec<Vertex>>> {
    let mut out = Vec::new();
    let near = |a: &Vertex, b: &Vertex| locale.distance_unchecked(a, b).is_some_and(|d| d <= r);
    fn grow(
        cur: &mut Vec<Vertex>,
        start: usize,
        pool: &[Vertex],
        near: &dyn Fn(&Vertex, &Vertex) -> bool,
        anchor: &[Vertex],
        out: &mut Vec<Vec<Vertex>>,
        cap: usize,
    ) -> Result<()> {
        if !cur.is_empty() && cur.iter().any(|v| anchor.contains(v)) {
            out.push(cur.clone());
            if out.len() > cap {
                return Err(Error::BudgetExceeded { needed: out.len() as u128, budget: cap as u64 });
            }
        }
        for i in start..pool.len() {
            if cur.iter().all(|c| near(c, &pool[i])) {
                cur.push(pool[i].clone());
                grow(cur, i + 1, pool, near, anchor, out, cap)?;
                cur.pop();
            }
        }
        Ok(())
    }
    grow(&mut vec![], 0, pool, &near, anchor, &mut out, cap)?;
    Ok(out)
}

/// Expansion terms of `f`, added into `acc` keyed by support.
fn accumulate_terms(acc: &mut BTreeMap<Vec<Vertex>, LocalFunction>, f: &LocalFunction, sign: &Q) -> Result<()> {
    for (_, t) in expand(f)?.nonzero() {
        let t = t.scale(sign);
        match acc.get_mut(t.support()) {
            Some(old) => *old = old.add(&t)?,
            None => {
                acc.insert(t.support().to_vec(), t);
            }
        }
    }
    Ok(())
}

/// Largest coefficient of `∂(Σ_τ τ(f̂)) + ω_ρ − ω` over the given edges,
/// compared through exact-support expansions.
fn residual_on(
    pieces: &[LocalFunction],
    omega: &Form,
    omega_rho: &Form,
    edges: &[Edge],
    action: &GroupAction,
    window: &Window,
    inter: &Interaction,
) -> Result<Q> {
    let mut worst = Q::zero();
    let one = q(1);
    let minus = q(-1);
    for e in edges {
        let mut acc: BTreeMap<Vec<Vertex>, LocalFunction> = BTreeMap::new();
        for p in pieces {
            for tau in touching_translates(action, p.support(), e) {
                let tp = act_on_function(action, &tau, p)?;
                let d = differential_on(&tp, std::slice::from_ref(e), window, inter)?;
                accumulate_terms(&mut acc, &d.edges[e], &one)?;
            }
        }
        if let Some(w) = omega_rho.edges.get(e) {
            accumulate_terms(&mut acc, w, &one)?;
        }
        if let Some(w) = omega.edges.get(e) {
            accumulate_terms(&mut acc, w, &minus)?;
        }
        for t in acc.values() {
            let m = max_abs(t.values());
            if m > worst {
                worst = m;
            }
        }
    }
    Ok(worst)
}

/// Decomposes a closed shift-invariant form on a window as
/// `ω = ∂(Σ_τ τ(f̂)) + ω_ρ̂`, verified on the interior margin.
pub fn varadhan_decompose(
    form: &Form,
    window: &Window,
    inter: &Interaction,
    basis: &ConsvBasis,
    action: &GroupAction,
    domain: &[Vertex],
    opts: &DecomposeOptions,
) -> Result<DecompositionResult> {
    let locale = window.locale();
    let base = inter.base();
    let k = inter.n_states();
    let extraction = extract_cocycle(form, window, inter, basis, action, domain, opts.budget)?;
    let rho = extraction.rho;
    let omega_rho = build_omega_rho(&rho, action, domain, window, inter, basis)?;
    let reduced = form.sub(&omega_rho, locale)?;
    let potential = PathPotential::new(&reduced, inter, basis, window, opts.budget);
    let margin = interior_margin(form.radius.max(omega_rho.radius), action, domain, locale);
    let check_edges = window.interior_edges(margin)?;
    if check_edges.is_empty() {
        return Err(Error::WindowTooSmall(format!("no edges at interior margin {margin}")));
    }
    let (center_tau, _) = action.locate(&extraction.center, domain)?;
    let tile: Vec<Vertex> = domain.iter().map(|x| action.apply(&center_tau, x)).collect();
    let back = action.inverse(&center_tau);
    let start = reduced.radius.max(1);
    let mut last = None;
    for r in start..=start + opts.retries {
        let pool: Vec<Vertex> = {
            let t = window.sub(tile.clone())?.thicken(r)?;
            t.vertices().iter().filter(|v| window.contains(v)).cloned().collect()
        };
        let plan = match ProbePlan::anchored(window, &pool, r, opts.partners) {
            Ok(p) => p,
            Err(e) => {
                last = Some(e);
                break;
            }
        };
        let mut v = |eta: &Configuration| potential.eval(eta);
        let pairing = compute_pairing(&mut v, inter, basis, window, r, &plan)?;
        let report = check_cocycle_and_symmetry(&pairing);
        if !report.cocycle {
            return Err(Error::CocycleViolated(report.violations.join("; ")));
        }
        let h = match solve_splitting(&pairing)? {
            Splitting::Solved { h, .. } => h,
            Splitting::Infeasible { certificate } => {
                return Err(Error::SplittingInfeasible(format!(
                    "pairing of the potential has no splitting; certificate over {} cells",
                    certificate.len()
                )));
            }
        };
        let mut g = |eta: &Configuration| -> Result<Q> {
            let alpha = basis.quantity_of(eta, None);
            let hv = h
                .get(&alpha)
                .ok_or_else(|| Error::WindowTooSmall(format!("quantity {alpha:?} outside the probed domain")))?;
            Ok(potential.eval(eta)? + hv)
        };
        let mut pieces = Vec::new();
        for lam in bounded_subsets(locale, &pool, &tile, r, opts.max_subsets)? {
            let tiles: BTreeSet<GroupElement> =
                lam.iter().map(|x| action.locate(x, domain).map(|t| t.0)).collect::<Result<_>>()?;
            let weight = Q::new(1.into(), (tiles.len() as i64).into());
            let piece = LocalFunction::try_tabulate(lam.clone(), k, base, |eta| {
                if eta.len() < lam.len() {
                    return Ok(Q::zero());
                }
                Ok(exact_part_at(&mut g, &lam, eta, base)? * &weight)
            })?;
            if !piece.is_zero() {
                pieces.push(act_on_function(action, &back, &piece)?);
            }
        }
        let residual = residual_on(&pieces, form, &omega_rho, &check_edges, action, window, inter)?;
        if residual.is_zero() {
            return Ok(DecompositionResult {
                rho,
                fhat: pieces,
                uniform_radius: r,
                margin,
                edges_checked: check_edges.len(),
                residual,
                pairing,
                plan,
            });
        }
        last = Some(Error::DecompositionResidual(fmt_q(&residual)));
    }
    Err(last.unwrap_or_else(|| Error::DecompositionResidual("no radius attempted".into())))
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub window: Vec<Vertex>,
    pub closed: bool,
    pub potential_matches: bool,
    pub cells: Vec<(QVec, QVec, String)>,
    pub product_formula: bool,
    pub cocycle: bool,
    pub symmetric: bool,
    pub asymmetry: (String, String),
    pub splitting_feasible: bool,
    pub certificate: Vec<(QVec, QVec, String)>,
    pub certificate_valid: bool,
}

/// The nearest-neighbor form `ω_e = 1{η_o=2,η_t=1} − 1{η_o=1,η_t=2}` for
/// `t(e) ≥ o(e)` on a line window, with `ω_ē = ω_e`.
pub fn counterexample_form(window: &Window, inter: &Interaction) -> Result<Form> {
    let locale = window.locale();
    Form::from_fn(
        window,
        inter.n_states(),
        inter.base(),
        |e| vec![e.0.clone(), e.1.clone()],
        |e, eta| {
            let (lo, hi) = if locale.line_position(&e.1) >= locale.line_position(&e.0) { (&e.0, &e.1) } else { (&e.1, &e.0) };
            let (a, b) = (eta.get(lo, 0), eta.get(hi, 0));
            q(i64::from(a == 2 && b == 1) - i64::from(a == 1 && b == 2))
        },
    )
}

/// `f = Σ_{x<y} 1{η_x=1, η_y=2}`.
pub fn counterexample_potential(eta: &Configuration, locale: &Locale) -> Q {
    let sites: Vec<(i64, usize)> = eta.iter().map(|(v, s)| (locale.line_position(v).unwrap_or(0), *s)).collect();
    let mut n = 0;
    for (x, a) in &sites {
        for (y, b) in &sites {
            if y > x && *a == 1 && *b == 2 {
                n += 1;
            }
        }
    }
    q(n)
}

/// The two-species exchange on a line window of the given length: the form
/// above is closed, its pairing is `α₁β₂` and admits no splitting.
pub fn counterexample_z_multispecies(len: i64) -> Result<CounterexampleReport> {
    let locale = Locale::euclidean(1);
    let window = Window::from_box(&locale, &[0], &[len - 1])?;
    let inter = Interaction::builtin("multispecies:2")?;
    let basis = inter.conserved_quantities();
    let form = counterexample_form(&window, &inter)?;
    let closed = is_closed(&form, &window, &inter, DEFAULT_BUDGET)?.closed;
    let integral = integrate(&form, &window, &inter, DEFAULT_BUDGET)?;
    let mut offsets: BTreeMap<QVec, Q> = BTreeMap::new();
    let mut potential_matches = true;
    for i in 0..integral.function.values().len() {
        let eta = integral.function.config_at(i);
        let diff = counterexample_potential(&eta, &locale) - &integral.function.values()[i];
        let alpha = basis.quantity_of(&eta, None);
        match offsets.get(&alpha) {
            None => {
                offsets.insert(alpha, diff);
            }
            Some(o) if *o != diff => potential_matches = false,
            _ => {}
        }
    }
    let plan = ProbePlan::balls(&window, 1, 1, 12)?;
    let mut f = |eta: &Configuration| Ok(counterexample_potential(eta, &locale));
    let pairing = compute_pairing(&mut f, &inter, &basis, &window, 1, &plan)?;
    let product_formula = pairing.cells.iter().all(|((a, b), v)| *v == q(a[0] * b[1]));
    let report = check_cocycle_and_symmetry(&pairing);
    let show = |a: &[i64], b: &[i64]| pairing.get(a, b).map(fmt_q).unwrap_or_else(|| "absent".into());
    let asymmetry = (show(&[1, 0], &[0, 1]), show(&[0, 1], &[1, 0]));
    let (splitting_feasible, certificate, certificate_valid) = match solve_splitting(&pairing)? {
        Splitting::Solved { .. } => (true, vec![], false),
        Splitting::Infeasible { certificate } => {
            let valid = certificate_is_valid(&pairing, &certificate);
            let cert = certificate.iter().map(|((a, b), y)| (a.clone(), b.clone(), fmt_q(y))).collect();
            (false, cert, valid)
        }
    };
    Ok(CounterexampleReport {
        window: window.vertices().to_vec(),
        closed,
        potential_matches,
        cells: pairing.cells.iter().map(|((a, b), v)| (a.clone(), b.clone(), fmt_q(v))).collect(),
        product_formula,
        cocycle: report.cocycle,
        symmetric: report.symmetric,
        asymmetry,
        splitting_feasible,
        certificate,
        certificate_valid,
    })
}

/// Replays a splitting certificate: the combination of the equations
/// `h(α)+h(β)−h(α+β) = h_f(α,β)` must cancel every unknown but not the
/// right-hand side.
pub fn certificate_is_valid(table: &PairingTable, certificate: &[((QVec, QVec), Q)]) -> bool {
    let mut lhs: BTreeMap<QVec, Q> = BTreeMap::new();
    let mut rhs = Q::zero();
    for ((a, b), y) in certificate {
        let Some(v) = table.cells.get(&(a.clone(), b.clone())) else { return false };
        let s = crate::interaction::add(a, b);
        for (key, c) in [(a.clone(), y.clone()), (b.clone(), y.clone()), (s, -y.clone())] {
            *lhs.entry(key).or_insert_with(Q::zero) += c;
        }
        rhs += y * v;
    }
    lhs.values().all(Zero::is_zero) && !rhs.is_zero()
}
