//! Dense exact linear algebra over rationals.

use num_traits::{One, Signed, Zero};

use crate::Rational;

pub(crate) type Matrix = Vec<Vec<Rational>>;

/// Solves `a x = b` by Gaussian elimination with partial pivoting (largest
/// absolute value). Returns `None` if `a` is singular.
pub(crate) fn solve(mut a: Matrix, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| a[r][col].abs().cmp(&a[s][col].abs()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

pub(crate) fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect()
}

pub(crate) fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![Rational::zero(); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    out
}

/// Maximum absolute row sum.
pub(crate) fn inf_norm(a: &Matrix) -> Rational {
    a.iter()
        .map(|row| row.iter().map(|x| x.abs()).fold(Rational::zero(), |s, x| s + x))
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Sound test for spectral radius below one: some `‖A^(2^j)‖∞ < 1`.
pub(crate) fn is_contraction(a: &Matrix, max_squarings: usize) -> bool {
    let mut p = a.clone();
    for _ in 0..=max_squarings {
        if inf_norm(&p) < Rational::one() {
            return true;
        }
        p = mul(&p, &p);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn solves_and_checks() {
        let a = vec![vec![r(0, 1), r(2, 1)], vec![r(1, 1), r(1, 1)]];
        let b = vec![r(4, 1), r(3, 1)];
        let x = solve(a.clone(), b.clone()).unwrap();
        assert_eq!(x, vec![r(1, 1), r(2, 1)]);
        let singular = vec![vec![r(1, 1), r(2, 1)], vec![r(2, 1), r(4, 1)]];
        assert!(solve(singular, b).is_none());
    }

    #[test]
    fn contraction() {
        // Row sums 1 but nilpotent part makes the square small.
        let a = vec![vec![r(1, 2), r(1, 2)], vec![r(0, 1), r(1, 2)]];
        assert!(is_contraction(&a, 6));
        let rot = vec![vec![r(0, 1), r(1, 1)], vec![r(1, 1), r(0, 1)]];
        assert!(!is_contraction(&rot, 6));
        assert_eq!(mul(&identity(2), &a), a);
    }

    proptest::proptest! {
        #[test]
        fn solution_substitutes_back(
            cells in proptest::collection::vec((-9i64..=9, 1i64..=5), 1..=25),
            rhs in proptest::collection::vec(-9i64..=9, 5),
        ) {
            let n = (cells.len() as f64).sqrt() as usize;
            let a: Matrix = (0..n)
                .map(|i| (0..n).map(|j| r(cells[i * n + j].0, cells[i * n + j].1)).collect())
                .collect();
            let b: Vec<Rational> = rhs[..n].iter().map(|&v| r(v, 1)).collect();
            if let Some(x) = solve(a.clone(), b.clone()) {
                let col: Matrix = x.into_iter().map(|v| vec![v]).collect();
                let back: Vec<Rational> = mul(&a, &col).into_iter().map(|row| row[0].clone()).collect();
                proptest::prop_assert_eq!(back, b);
            }
        }
    }
}
