#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uniform_cohomology::calculus::{Form, LocalFunction};
use uniform_cohomology::decomposition::{build_omega_rho, orbit_sum_differential, Cocycle};
use uniform_cohomology::interaction::Interaction;
use uniform_cohomology::locale::{Locale, Vertex, Window};
use uniform_cohomology::rational::{qf, Q};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rational(rng: &mut impl Rng) -> Q {
    qf(rng.gen_range(-4..=4), rng.gen_range(1..=3))
}

/// A random function on `{0}` or `{0, e_j}` with `f(★) = 0`.
pub fn random_local(rng: &mut impl Rng, dim: usize, inter: &Interaction) -> LocalFunction {
    let origin = Vertex::new(&vec![0; dim]);
    let mut support = vec![origin];
    if rng.gen_bool(0.7) {
        let mut c = vec![0; dim];
        c[rng.gen_range(0..dim)] = 1;
        support.push(Vertex::new(&c));
    }
    let base = inter.base();
    LocalFunction::from_digits(support, inter.n_states(), base, |d| {
        if d.iter().all(|&s| s == base) {
            Q::from_integer(0.into())
        } else {
            small_rational(rng)
        }
    })
    .unwrap()
}

pub fn random_cocycle(rng: &mut impl Rng, c: usize, d: usize) -> Cocycle {
    Cocycle { a: (0..c).map(|_| (0..d).map(|_| small_rational(rng)).collect()).collect(), generators: d }
}

pub fn cube(dim: usize, side: i64) -> Window {
    Window::from_box(&Locale::euclidean(dim), &vec![0; dim], &vec![side - 1; dim]).unwrap()
}

/// `∂(Σ_τ τ(f)) + ω_ρ` on the window edges, with `Λ₀ = {0}`.
pub fn synthesize(f: &LocalFunction, rho: &Cocycle, window: &Window, inter: &Interaction) -> Form {
    let locale = window.locale();
    let action = locale.default_action().unwrap();
    let basis = inter.conserved_quantities();
    let exact = orbit_sum_differential(f, &action, window, inter).unwrap();
    let omega_rho = build_omega_rho(rho, &action, &locale.default_fundamental_domain(), window, inter, &basis).unwrap();
    exact.add(&omega_rho, locale).unwrap()
}
