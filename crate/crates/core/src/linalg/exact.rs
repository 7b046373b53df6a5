//! Exact rank and null space over the rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Mat;
use crate::scalar::{content, Rational};

/// Row `i` of `m` scaled by the lcm of its denominators.
fn integer_row(m: &Mat<Rational>, i: usize) -> Vec<BigInt> {
    let lcm = m
        .row(i)
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    m.row(i)
        .iter()
        .map(|v| v.numer() * (&lcm / v.denom()))
        .collect()
}

/// Rank by fraction-free (Bareiss) elimination on integer-scaled rows.
pub(crate) fn bareiss_rank(m: &Mat<Rational>) -> usize {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<BigInt>> = (0..rows).map(|i| integer_row(m, i)).collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][c].clone();
        for i in rank + 1..rows {
            let lead = a[i][c].clone();
            let (upper, lower) = a.split_at_mut(i);
            let row = &mut lower[0];
            for (x, y) in row[c + 1..cols].iter_mut().zip(&upper[rank][c + 1..cols]) {
                *x = (&pivot * &*x - &lead * y) / &prev;
            }
            row[c] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// Scales a rational vector to integers with content 1 and a positive first
/// nonzero entry.
pub(crate) fn canonical_integer(v: &[Rational]) -> Vec<Rational> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let g = content(&ints);
    if g.is_zero() {
        return v.to_vec();
    }
    let sign = ints
        .iter()
        .find(|x| !x.is_zero())
        .map_or(BigInt::one(), |x| x.signum());
    ints.into_iter()
        .map(|x| Rational::from_integer(x / &g * &sign))
        .collect()
}

/// Null-space basis from the reduced row echelon form, one column per free
/// variable, each scaled canonically.
pub(crate) fn nullspace(m: &Mat<Rational>) -> Mat<Rational> {
    let cols = m.cols();
    let (r, pivots) = m.rref(0.0);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let basis: Vec<Vec<Rational>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -r[(row, f)].clone();
            }
            canonical_integer(&v)
        })
        .collect();
    Mat::from_fn(cols, basis.len(), |i, j| basis[j][i].clone())
}
