//! Acceptance run: one PASS/FAIL line per criterion, with wall time against
//! its limit. Exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use uniform_cohomology::calculus::{
    differential, expand, expand_mobius, integrate, integrate_path, is_closed, LocalFunction, PathPotential,
};
use uniform_cohomology::cohomology::{check_cocycle_and_symmetry, compute_pairing, ProbePlan};
use uniform_cohomology::configspace::{
    apply_edge, check_irreducible_quantification, Configuration, TransitionGraph, DEFAULT_BUDGET,
};
use uniform_cohomology::decomposition::{
    build_omega_rho, counterexample_potential, counterexample_z_multispecies, extract_cocycle, varadhan_decompose,
    DecomposeOptions,
};
use uniform_cohomology::interaction::Interaction;
use uniform_cohomology::locale::{
    classify_transferability, probe_transferability, Locale, ProbeOptions, Transferability, Vertex, Window,
};
use uniform_cohomology::rational::{q, Q};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn line(n: i64) -> Window {
    Window::from_box(&Locale::euclidean(1), &[0], &[n - 1]).unwrap()
}

fn rect(w: i64, h: i64) -> Window {
    Window::from_box(&Locale::euclidean(2), &[0, 0], &[w - 1, h - 1]).unwrap()
}

const CATALOG: &[&str] = &[
    "exclusion",
    "multispecies:2",
    "multispecies:3",
    "generalized-exclusion:2",
    "generalized-exclusion:3",
    "lattice-gas:2",
    "spin3",
    "glauber",
    "pair-creation",
];

fn conserved_dimensions() -> Outcome {
    let expected = [
        ("exclusion", 1),
        ("multispecies:2", 2),
        ("multispecies:3", 3),
        ("generalized-exclusion:2", 1),
        ("generalized-exclusion:3", 1),
        ("lattice-gas:2", 2),
        ("spin3", 1),
        ("glauber", 0),
        ("pair-creation", 0),
    ];
    for (name, dim) in expected {
        let got = Interaction::builtin(name).map_err(err)?.conserved_quantities().dim();
        ensure(got == dim, || format!("{name}: c_phi {got}, expected {dim}"))?;
    }
    Ok(format!("{} interactions", expected.len()))
}

fn expansion_uniqueness() -> Outcome {
    let mut r = rng(2);
    let host = rect(3, 3);
    let mut cases = 0;
    for _ in 0..150 {
        let k = r.gen_range(2..=3);
        let max = if k == 2 { 7 } else { 5 };
        let n = r.gen_range(0..=max);
        let mut support: Vec<Vertex> = host.vertices().choose_multiple(&mut r, n).cloned().collect();
        support.sort();
        let f = LocalFunction::from_digits(support, k, 0, |_| small_rational(&mut r)).map_err(err)?;
        let rec = expand(&f).map_err(err)?;
        ensure(rec == expand_mobius(&f).map_err(err)?, || format!("recursion and closed form differ on {:?}", f.support()))?;
        ensure(rec.reconstruct().map_err(err)? == f, || "reconstruction differs".into())?;
        ensure(rec.terms_vanish_at_base(), || "a term fails the exact-support property".into())?;
        cases += 1;
    }
    Ok(format!("{cases} random functions, |S|^|Λ| ≤ 243"))
}

fn constant_on_components(f: &LocalFunction, g: &LocalFunction, w: &Window, inter: &Interaction) -> Result<bool, String> {
    let graph = TransitionGraph::build(w, inter, DEFAULT_BUDGET).map_err(err)?;
    let mut offsets: Vec<Option<Q>> = vec![None; graph.n_components];
    for i in 0..graph.coder.total() {
        let eta = graph.config(i);
        let d = f.eval(&eta) - g.eval(&eta);
        let slot = &mut offsets[graph.labels[i as usize] as usize];
        match slot {
            Some(c) if *c != d => return Ok(false),
            Some(_) => {}
            None => *slot = Some(d),
        }
    }
    Ok(true)
}

fn closed_iff_exact() -> Outcome {
    let mut r = rng(3);
    let names = ["exclusion", "multispecies:2", "generalized-exclusion:2", "spin3", "glauber"];
    let windows = [line(3), line(4), rect(2, 2)];
    let (mut exact, mut perturbed) = (0, 0);
    for i in 0..60 {
        let inter = Interaction::builtin(names[i % names.len()]).map_err(err)?;
        let w = &windows[i % windows.len()];
        let (k, base) = (inter.n_states(), inter.base());
        let f = LocalFunction::from_digits(w.vertices().to_vec(), k, base, |_| small_rational(&mut r)).map_err(err)?;
        let form = differential(&f, w, &inter).map_err(err)?;
        ensure(is_closed(&form, w, &inter, DEFAULT_BUDGET).map_err(err)?.closed, || format!("∂f not closed for {}", inter.name))?;
        let integral = integrate(&form, w, &inter, DEFAULT_BUDGET).map_err(err)?;
        ensure(constant_on_components(&integral.function, &f, w, &inter)?, || "integral differs from f by a non-constant".into())?;
        exact += 1;

        // Perturb ω_e at one configuration where the transition acts.
        let edges = w.edges();
        let mut bumped = form.clone();
        let (e, eta0) = loop {
            let e = edges[r.gen_range(0..edges.len())].clone();
            let eta = f.config_at(r.gen_range(0..f.values().len()));
            if apply_edge(&eta, &e, &inter) != eta {
                break (e, eta);
            }
        };
        let old = form.edges[&e].clone();
        let bump = q(r.gen_range(1..4));
        let new = LocalFunction::tabulate(w.vertices().to_vec(), k, base, |eta| {
            old.eval(eta) + if *eta == eta0 { bump.clone() } else { q(0) }
        })
        .map_err(err)?;
        bumped.edges.insert(e, new);
        let rep = is_closed(&bumped, w, &inter, DEFAULT_BUDGET).map_err(err)?;
        let wit = rep.witness.ok_or("perturbed form reported closed")?;
        ensure(!rep.closed && wit.path.verify(&inter) && wit.path.start == wit.path.end, || "invalid witness cycle".into())?;
        ensure(!wit.integral.is_zero() && integrate_path(&bumped, &wit.path, &inter) == wit.integral, || {
            "witness integral mismatch".into()
        })?;
        perturbed += 1;
    }
    Ok(format!("{exact} exact forms closed and integrated, {perturbed} perturbations caught"))
}

fn horizontality() -> Outcome {
    let mut edges = 0;
    for name in CATALOG {
        let inter = Interaction::builtin(name).map_err(err)?;
        let basis = inter.conserved_quantities();
        for w in [line(5), rect(2, 2)] {
            for i in 0..basis.dim() {
                let xi = LocalFunction::tabulate(w.vertices().to_vec(), inter.n_states(), inter.base(), |eta| {
                    q(basis.quantity_of(eta, None)[i])
                })
                .map_err(err)?;
                let form = differential(&xi, &w, &inter).map_err(err)?;
                ensure(form.edges.values().all(LocalFunction::is_zero), || format!("{name}: ∂ξ{i} ≠ 0"))?;
                edges += form.edges.len();
            }
        }
    }
    Ok(format!("{edges} edge functions vanish exactly"))
}

fn irreducibility() -> Outcome {
    let windows = [line(3), line(4), line(5), rect(2, 2), rect(3, 2)];
    let names = ["exclusion", "multispecies:2", "generalized-exclusion:2", "lattice-gas:2", "spin3", "glauber"];
    let mut checked = 0;
    for name in names {
        let inter = Interaction::builtin(name).map_err(err)?;
        let basis = inter.conserved_quantities();
        for w in &windows {
            let rep = check_irreducible_quantification(&inter, &basis, w, DEFAULT_BUDGET).map_err(err)?;
            ensure(rep.consistent, || format!("{name} on {} sites: disconnected fiber", w.len()))?;
            checked += 1;
        }
    }
    let pc = Interaction::builtin("pair-creation").map_err(err)?;
    let rep = check_irreducible_quantification(&pc, &pc.conserved_quantities(), &line(2), DEFAULT_BUDGET).map_err(err)?;
    ensure(!rep.consistent && rep.witness.is_some(), || "pair-creation: no disconnection witness".into())?;
    Ok(format!("{checked} (interaction, window) fibers connected; pair-creation witness found"))
}

fn pairing_laws() -> Outcome {
    let mut cells = 0;
    let mut triples = 0;
    for (dim, side) in [(1usize, 10i64), (2, 6)] {
        for seed in 0..4u64 {
            let name = if seed % 2 == 0 { "exclusion" } else { "lattice-gas:2" };
            let inter = Interaction::builtin(name).map_err(err)?;
            let basis = inter.conserved_quantities();
            let w = cube(dim, side);
            let mut r = rng(60 + seed);
            let f = random_local(&mut r, dim, &inter);
            let rho = random_cocycle(&mut r, basis.dim(), dim);
            let form = synthesize(&f, &rho, &w, &inter);
            let pot = PathPotential::new(&form, &inter, &basis, &w, DEFAULT_BUDGET);
            let mut eval = |eta: &Configuration| pot.eval(eta);
            let plan = ProbePlan::balls(&w, 1, 0, 10).map_err(err)?;
            let t = compute_pairing(&mut eval, &inter, &basis, &w, 1, &plan).map_err(err)?;
            let laws = check_cocycle_and_symmetry(&t);
            ensure(laws.cocycle, || format!("{name} dim {dim}: cocycle identity fails"))?;
            if dim == 2 {
                ensure(laws.symmetric, || format!("{name} on ℤ²: asymmetric pairing"))?;
            }
            cells += t.cells.len();
            triples += laws.triples;
        }
    }
    let inter = Interaction::builtin("multispecies:2").map_err(err)?;
    let basis = inter.conserved_quantities();
    let w = line(9);
    let locale = w.locale().clone();
    let mut f = |eta: &Configuration| Ok(counterexample_potential(eta, &locale));
    let left = vec![Vertex::new(&[1]), Vertex::new(&[2])];
    let right = vec![Vertex::new(&[5]), Vertex::new(&[6])];
    let t = compute_pairing(&mut f, &inter, &basis, &w, 1, &ProbePlan::new(vec![(left, right)])).map_err(err)?;
    for ((a, b), v) in &t.cells {
        ensure(*v == q(a[0] * b[1]), || format!("cell ({a:?}, {b:?}) = {v}, expected α₁β₂"))?;
    }
    let laws = check_cocycle_and_symmetry(&t);
    ensure(laws.cocycle && !laws.symmetric, || "ordered-pair table: expected cocycle without symmetry".into())?;
    ensure(t.get(&[1, 0], &[0, 1]) == Some(&q(1)) && t.get(&[0, 1], &[1, 0]) == Some(&q(0)), || "orientation values".into())?;
    Ok(format!("{cells} cells, {triples} closed triples; ordered-pair table is α₁β₂ and asymmetric"))
}

fn decomposition_roundtrip() -> Outcome {
    let cases: Vec<(&str, usize, i64)> = [
        ("exclusion", 1, 9),
        ("exclusion", 1, 11),
        ("multispecies:2", 1, 9),
        ("generalized-exclusion:2", 1, 9),
        ("lattice-gas:2", 1, 9),
        ("spin3", 1, 9),
        ("exclusion", 2, 7),
        ("multispecies:2", 2, 7),
        ("lattice-gas:2", 2, 7),
        ("exclusion", 2, 8),
    ]
    .into_iter()
    .cycle()
    .take(20)
    .collect();
    for (i, (name, dim, side)) in cases.iter().enumerate() {
        let inter = Interaction::builtin(name).map_err(err)?;
        let basis = inter.conserved_quantities();
        let window = cube(*dim, *side);
        let locale = window.locale().clone();
        let action = locale.default_action().unwrap();
        let domain = locale.default_fundamental_domain();
        let mut r = rng(700 + i as u64);
        let f = random_local(&mut r, *dim, &inter);
        let rho = random_cocycle(&mut r, basis.dim(), *dim);
        let form = synthesize(&f, &rho, &window, &inter);
        let res = varadhan_decompose(&form, &window, &inter, &basis, &action, &domain, &DecomposeOptions::default())
            .map_err(|e| format!("{name} dim {dim} case {i}: {e}"))?;
        ensure(res.rho == rho, || format!("{name} dim {dim} case {i}: ρ not recovered"))?;
        ensure(res.residual.is_zero() && res.edges_checked > 0, || format!("{name} dim {dim} case {i}: residual {}", res.residual))?;
    }
    Ok(format!("{} synthesized forms on ℤ and ℤ² windows of side ≥ 7", cases.len()))
}

fn delta_section() -> Outcome {
    let names = ["exclusion", "multispecies:2", "lattice-gas:2", "spin3", "multispecies:3"];
    let mut r = rng(8);
    let mut n = 0;
    for i in 0..25 {
        let inter = Interaction::builtin(names[i % names.len()]).map_err(err)?;
        let basis = inter.conserved_quantities();
        let dim = 1 + i % 2;
        let side = if dim == 1 { r.gen_range(7..=11) } else { r.gen_range(5..=7) };
        let window = cube(dim, side);
        let locale = window.locale().clone();
        let action = locale.default_action().unwrap();
        let domain = locale.default_fundamental_domain();
        let rho = random_cocycle(&mut r, basis.dim(), dim);
        let form = build_omega_rho(&rho, &action, &domain, &window, &inter, &basis).map_err(err)?;
        let ex = extract_cocycle(&form, &window, &inter, &basis, &action, &domain, DEFAULT_BUDGET).map_err(err)?;
        ensure(ex.rho == rho, || format!("{} dim {dim}: δ(ω_ρ) ≠ ρ", inter.name))?;
        n += 1;
    }
    Ok(format!("{n} random cocycles recovered"))
}

fn counterexample() -> Outcome {
    let rep = counterexample_z_multispecies(9).map_err(err)?;
    ensure(rep.closed, || "form not closed".into())?;
    ensure(rep.product_formula && rep.cocycle, || "pairing is not the α₁β₂ cocycle".into())?;
    ensure(!rep.symmetric, || "pairing symmetric".into())?;
    ensure(!rep.splitting_feasible && rep.certificate_valid, || "splitting not certified infeasible".into())?;
    Ok(format!("closed, asymmetric ({} vs {}), splitting infeasible with certificate", rep.asymmetry.0, rep.asymmetry.1))
}

fn transferability() -> Outcome {
    use Transferability::*;
    let opts = ProbeOptions::default();
    let cases = [
        ("ℤ", Locale::euclidean(1), WeaklyTransferableNotTransferable),
        ("ℤ²", Locale::euclidean(2), StronglyTransferable),
        ("ℤ³", Locale::euclidean(3), StronglyTransferable),
        ("cross", Locale::cross(), Transferable),
        ("half-plane with line", Locale::half_plane_with_line(), Transferable),
        ("free group of rank 2", Locale::FreeGroup { rank: 2 }, Transferable),
    ];
    let mut agreeing = BTreeSet::new();
    for (label, locale, want) in &cases {
        let got = classify_transferability(locale, &opts).map_err(err)?.verdict;
        ensure(got == *want, || format!("{label}: {got:?}, expected {want:?}"))?;
        let probe = probe_transferability(locale, &opts).map_err(err)?.verdict;
        ensure(probe == *want || probe == Unknown, || format!("{label}: probe says {probe:?}"))?;
        if probe == *want {
            agreeing.insert(*label);
        }
    }
    Ok(format!("{} locales; bounded probes agree on {}", cases.len(), agreeing.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("conserved-quantity dimensions", conserved_dimensions, 1),
        ("expansion uniqueness and reconstruction", expansion_uniqueness, 30),
        ("closed forms are exact on windows", closed_iff_exact, 60),
        ("conserved quantities are horizontal", horizontality, 60),
        ("irreducibility evidence", irreducibility, 300),
        ("pairing laws", pairing_laws, 120),
        ("decomposition roundtrip", decomposition_roundtrip, 600),
        ("boundary map is a section", delta_section, 120),
        ("ordered-pair counterexample", counterexample, 60),
        ("transferability catalog", transferability, 60),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = t.elapsed();
        let within = elapsed <= Duration::from_secs(*limit);
        let (status, detail) = match (&outcome, within) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {limit}s limit")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {:>2} {status} [{:.2}s / {limit}s] {name}: {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
