use num_traits::Zero;
use proptest::prelude::*;
use uniform_cohomology::configspace::Configuration;
use uniform_cohomology::interaction::{Interaction, StateSpace};
use uniform_cohomology::locale::Vertex;
use uniform_cohomology::rational::{q, Q};

const CATALOG: &[&str] = &[
    "exclusion",
    "multispecies:2",
    "multispecies:3",
    "generalized-exclusion:2",
    "generalized-exclusion:3",
    "lattice-gas:2",
    "lattice-gas:3",
    "spin3",
    "glauber",
    "pair-creation",
];

fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &rows[r][c];
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        r += 1;
    }
    r
}

/// Rows of the linear system `ξ(s₁)+ξ(s₂) = ξ(φ₁)+ξ(φ₂)`, `ξ(★)=0`.
fn constraints(inter: &Interaction) -> Vec<Vec<Q>> {
    let k = inter.n_states();
    let mut rows = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let (c, d) = inter.phi(a, b);
            let mut row = vec![q(0); k];
            row[a] += q(1);
            row[b] += q(1);
            row[c] -= q(1);
            row[d] -= q(1);
            rows.push(row);
        }
    }
    let mut pin = vec![q(0); k];
    pin[inter.base()] = q(1);
    rows.push(pin);
    rows
}

fn check_basis(inter: &Interaction) -> Result<(), TestCaseError> {
    let basis = inter.conserved_quantities();
    let k = inter.n_states();
    prop_assert_eq!(basis.dim(), k - rank(constraints(inter)), "{}", inter.name);
    for xi in &basis.vectors {
        prop_assert_eq!(xi[inter.base()], 0);
        for a in 0..k {
            for b in 0..k {
                let (c, d) = inter.phi(a, b);
                prop_assert_eq!(xi[a] + xi[b], xi[c] + xi[d]);
            }
        }
    }
    let as_q: Vec<Vec<Q>> = basis.vectors.iter().map(|v| v.iter().map(|&x| q(x)).collect()).collect();
    prop_assert_eq!(rank(as_q), basis.dim());
    Ok(())
}

#[test]
fn catalog_bases_are_conserved_and_complete() {
    for name in CATALOG {
        check_basis(&Interaction::builtin(name).unwrap()).unwrap();
    }
}

#[test]
fn catalog_dimensions() {
    let dims: Vec<usize> = CATALOG.iter().map(|n| Interaction::builtin(n).unwrap().conserved_quantities().dim()).collect();
    assert_eq!(dims, [1, 2, 3, 1, 1, 2, 2, 1, 0, 0]);
}

#[test]
fn exclusion_basis() {
    let b = Interaction::builtin("exclusion").unwrap().conserved_quantities();
    assert_eq!(b.vectors, vec![vec![0, 1]]);
}

#[test]
fn lattice_gas_spans_particle_number_and_occupancy() {
    let inter = Interaction::builtin("lattice-gas:2").unwrap();
    let basis = inter.conserved_quantities();
    let reference: Vec<Vec<Q>> = vec![vec![q(0), q(1), q(2)], vec![q(0), q(1), q(1)]];
    let ours: Vec<Vec<Q>> = basis.vectors.iter().map(|v| v.iter().map(|&x| q(x)).collect()).collect();
    assert_eq!(rank(reference.clone()), 2);
    assert_eq!(rank([reference, ours].concat()), 2);

    let eta = Configuration::from_pairs([(Vertex::new(&[0]), 2), (Vertex::new(&[1]), 1)], 0);
    let total = basis.quantity_of(&eta, None);
    // Particle number and occupancy expressed in the returned coordinates.
    let particles: i64 = (0..3).map(|s| s as i64 * count(&eta, s)).sum();
    let occupied: i64 = (1..3).map(|s| count(&eta, s)).sum();
    assert_eq!((particles, occupied), (3, 2));
    let recon = |xi: &[i64]| -> i64 { (0..3).map(|s| xi[s] * count(&eta, s)).sum() };
    assert_eq!(total, basis.vectors.iter().map(|xi| recon(xi)).collect::<Vec<_>>());
}

fn count(eta: &Configuration, s: usize) -> i64 {
    eta.iter().filter(|(_, &t)| t == s).count() as i64
}

#[test]
fn quantity_of_base_is_zero() {
    let inter = Interaction::builtin("multispecies:3").unwrap();
    let b = inter.conserved_quantities();
    assert_eq!(b.quantity_of(&Configuration::empty(), None), vec![0, 0, 0]);
    let two = Configuration::from_pairs([(Vertex::new(&[0]), 1), (Vertex::new(&[3]), 1)], 0);
    assert_eq!(Interaction::builtin("exclusion").unwrap().conserved_quantities().quantity_of(&two, None), vec![2]);
}

#[test]
fn validity_examples() {
    let ex = Interaction::builtin("exclusion").unwrap().validate();
    assert!(ex.strict && ex.relaxed);
    let gl = Interaction::builtin("glauber").unwrap().validate();
    assert!(!gl.strict && gl.relaxed);
    let bad = Interaction::from_map("bad", StateSpace::new(vec![0, 1], 0).unwrap(), &[[0, 0, 1, 0], [1, 0, 1, 0]]).unwrap();
    let rep = bad.validate();
    assert!(!rep.relaxed);
    assert!(rep.relaxed_witness.is_some());
    for name in CATALOG {
        assert!(Interaction::builtin(name).unwrap().validate().relaxed, "{name}");
    }
}

#[test]
fn exchangeability_and_simplicity() {
    let ex = Interaction::builtin("exclusion").unwrap();
    let t = ex.exchange_table();
    assert!(t.is_exchangeable());
    assert!(t.word(0, 1).is_some_and(|w| w.len() == 1));
    assert!(Interaction::builtin("generalized-exclusion:2").unwrap().exchange_table().is_exchangeable());
    assert!(!Interaction::builtin("pair-creation").unwrap().exchange_table().is_exchangeable());
    assert!(ex.is_simple(&ex.conserved_quantities()));
    let spin = Interaction::builtin("spin3").unwrap();
    assert!(spin.is_simple(&spin.conserved_quantities()));
    let ms = Interaction::builtin("multispecies:2").unwrap();
    assert!(!ms.is_simple(&ms.conserved_quantities()));
}

#[test]
fn exchange_words_swap_pairs() {
    for name in CATALOG {
        let inter = Interaction::builtin(name).unwrap();
        let t = inter.exchange_table();
        let k = inter.n_states();
        for a in 0..k {
            for b in 0..k {
                if let Some(w) = t.word(a, b) {
                    assert_eq!(inter.apply_word((a, b), w), (b, a), "{name} ({a},{b})");
                }
            }
        }
    }
}

fn random_interaction() -> impl Strategy<Value = Interaction> {
    (2usize..=3).prop_flat_map(|k| {
        prop::collection::vec((0..k, 0..k), k * k).prop_map(move |images| {
            let labels: Vec<i64> = (0..k as i64).collect();
            let map: Vec<[i64; 4]> = images
                .iter()
                .enumerate()
                .map(|(i, &(c, d))| [(i / k) as i64, (i % k) as i64, c as i64, d as i64])
                .collect();
            Interaction::from_map("random", StateSpace::new(labels, 0).unwrap(), &map).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(128) })]

    #[test]
    fn random_tables_have_complete_conserved_bases(inter in random_interaction()) {
        check_basis(&inter)?;
    }

    #[test]
    fn exchange_words_realize_swaps(inter in random_interaction()) {
        let t = inter.exchange_table();
        let k = inter.n_states();
        for a in 0..k {
            for b in 0..k {
                if let Some(w) = t.word(a, b) {
                    prop_assert_eq!(inter.apply_word((a, b), w), (b, a));
                }
            }
        }
    }
}
