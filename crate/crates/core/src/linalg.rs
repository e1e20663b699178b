//! Exact rational linear algebra: nullspaces and sparse solves with
//! infeasibility certificates.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::Q;

/// Reduces `rows` to reduced row echelon form in place, returning pivot columns.
pub fn rref(rows: &mut Vec<Vec<Q>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Basis of `{x : A x = 0}`, one vector per free column, each scaled by
/// [`integer_normalize`].
pub fn nullspace(a: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let mut rows: Vec<Vec<Q>> = a.to_vec();
    let pivots = rref(&mut rows, ncols);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Q::zero(); ncols];
        v[free] = Q::one();
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[i][free].clone();
        }
        basis.push(integer_normalize(&v));
    }
    basis
}

/// Scales a nonzero vector to coprime integers with positive leading entry.
pub fn integer_normalize(v: &[Q]) -> Vec<Q> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter().map(|x| Q::from_integer(x / &g * &sign)).collect()
}

/// Sparse linear equation `Σ coeffs[j]·x_j = rhs`.
#[derive(Clone, Debug)]
pub struct Equation {
    pub coeffs: BTreeMap<usize, Q>,
    pub rhs: Q,
}

impl Equation {
    pub fn new(terms: impl IntoIterator<Item = (usize, Q)>, rhs: Q) -> Self {
        let mut coeffs: BTreeMap<usize, Q> = BTreeMap::new();
        for (j, c) in terms {
            *coeffs.entry(j).or_insert_with(Q::zero) += c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        Equation { coeffs, rhs }
    }
}

#[derive(Clone, Debug)]
pub enum Solve {
    /// A solution with every free variable set to zero.
    Solution(Vec<Q>),
    /// Multipliers `y` over the input equations with `Σ y_i A_i = 0` and
    /// `Σ y_i b_i ≠ 0`.
    Infeasible(Vec<(usize, Q)>),
}

struct Row {
    eq: Equation,
    combo: BTreeMap<usize, Q>,
}

fn axpy(dst: &mut BTreeMap<usize, Q>, f: &Q, src: &BTreeMap<usize, Q>) {
    for (j, c) in src {
        let e = dst.entry(*j).or_insert_with(Q::zero);
        *e -= f * c;
        if e.is_zero() {
            dst.remove(j);
        }
    }
}

/// Solves a sparse system over `nvars` unknowns exactly.
pub fn solve(eqs: &[Equation], nvars: usize) -> Solve {
    let mut rows: Vec<Row> = eqs
        .iter()
        .enumerate()
        .map(|(i, e)| Row { eq: e.clone(), combo: BTreeMap::from([(i, Q::one())]) })
        .collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; nvars];
    let mut used = vec![false; rows.len()];
    for c in 0..nvars {
        let p = (0..rows.len())
            .filter(|&i| !used[i] && rows[i].eq.coeffs.contains_key(&c))
            .min_by_key(|&i| (rows[i].eq.coeffs.len(), i));
        let Some(p) = p else { continue };
        used[p] = true;
        let inv = rows[p].eq.coeffs[&c].recip();
        let row = &mut rows[p];
        for v in row.eq.coeffs.values_mut() {
            *v = &*v * &inv;
        }
        row.eq.rhs = &row.eq.rhs * &inv;
        for v in row.combo.values_mut() {
            *v = &*v * &inv;
        }
        let pc = rows[p].eq.coeffs.clone();
        let pr = rows[p].eq.rhs.clone();
        let pcombo = rows[p].combo.clone();
        for i in 0..rows.len() {
            if i == p {
                continue;
            }
            let Some(f) = rows[i].eq.coeffs.get(&c).cloned() else { continue };
            axpy(&mut rows[i].eq.coeffs, &f, &pc);
            rows[i].eq.rhs -= &f * &pr;
            axpy(&mut rows[i].combo, &f, &pcombo);
        }
        pivot_of_col[c] = Some(p);
    }
    if let Some(bad) = rows.iter().find(|r| r.eq.coeffs.is_empty() && !r.eq.rhs.is_zero()) {
        return Solve::Infeasible(bad.combo.iter().map(|(i, c)| (*i, c.clone())).collect());
    }
    let mut x = vec![Q::zero(); nvars];
    for (c, p) in pivot_of_col.iter().enumerate() {
        if let Some(p) = p {
            x[c] = rows[*p].eq.rhs.clone();
        }
    }
    Solve::Solution(x)
}

/// Checks that `y` certifies infeasibility of `eqs`.
pub fn verify_certificate(eqs: &[Equation], y: &[(usize, Q)]) -> bool {
    let mut lhs: BTreeMap<usize, Q> = BTreeMap::new();
    let mut rhs = Q::zero();
    for (i, c) in y {
        let Some(e) = eqs.get(*i) else { return false };
        axpy(&mut lhs, &-c.clone(), &e.coeffs);
        rhs += c * &e.rhs;
    }
    lhs.is_empty() && !rhs.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    #[test]
    fn nullspace_of_single_constraint() {
        let a = vec![vec![q(1), q(1), q(-2)]];
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let s: Q = a[0].iter().zip(v).map(|(x, y)| x * y).sum();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn normalization_is_integral_and_positive() {
        assert_eq!(integer_normalize(&[q(0), qf(-1, 2), qf(-3, 4)]), vec![q(0), q(2), q(3)]);
    }

    #[test]
    fn solve_and_certificate() {
        let eqs = vec![
            Equation::new([(0, q(1)), (1, q(1))], q(3)),
            Equation::new([(0, q(1)), (1, q(-1))], q(1)),
        ];
        match solve(&eqs, 2) {
            Solve::Solution(x) => assert_eq!(x, vec![q(2), q(1)]),
            Solve::Infeasible(_) => panic!(),
        }
        let bad = vec![
            Equation::new([(0, q(1)), (1, q(2))], q(1)),
            Equation::new([(0, q(2)), (1, q(4))], q(3)),
        ];
        match solve(&bad, 2) {
            Solve::Infeasible(y) => assert!(verify_certificate(&bad, &y)),
            Solve::Solution(_) => panic!(),
        }
    }
}
