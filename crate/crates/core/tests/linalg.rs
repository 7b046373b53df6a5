mod common;

use common::oracle::{rank_by_minors, rows_of};
use common::{load, qm, qv};
use monotrack::linalg::sum_dim;
use monotrack::{Mat, Rational, Scalar, Subspace};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

type Q = Rational;

fn small_matrix(max: usize) -> impl Strategy<Value = Mat<Q>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3i64..=3, r * c)
            .prop_map(move |v| Mat::from_fn(r, c, |i, j| Q::from_i64(v[i * c + j])))
    })
}

/// Low-rank integer matrices: products of thin random factors.
fn low_rank_matrix() -> impl Strategy<Value = Mat<Q>> {
    (1usize..=5).prop_flat_map(low_rank_with_rows)
}

fn low_rank_with_rows(r: usize) -> impl Strategy<Value = Mat<Q>> {
    (1usize..=5, 1usize..=3).prop_flat_map(move |(c, k)| {
        (
            prop::collection::vec(-2i64..=2, r * k),
            prop::collection::vec(-2i64..=2, k * c),
        )
            .prop_map(move |(a, b)| {
                let left = Mat::from_fn(r, k, |i, j| Q::from_i64(a[i * k + j]));
                let right = Mat::from_fn(k, c, |i, j| Q::from_i64(b[i * c + j]));
                left.mul(&right)
            })
    })
}

#[test]
fn identity_has_full_rank() {
    assert_eq!(Mat::<Q>::identity(3).rank_default(), 3);
}

#[test]
fn exe0_input_stack_has_full_column_rank() {
    let sys = load::<Q>("exe0");
    let bd = Mat::vcat(4, &[sys.b(), sys.d()]).unwrap();
    assert_eq!(bd.shape(), (8, 4));
    assert_eq!(bd.rank_default(), rank_by_minors(&rows_of(&bd), 4));
    assert_eq!(bd.rank_default(), 4);
}

#[test]
fn exe0_pencil_drops_rank_at_the_minimum_phase_zero() {
    let sys = load::<Q>("exe0");
    let p = sys.pencil(&Q::from_i64(-6));
    assert_eq!(p.rank_default(), 7);
    assert_eq!(p.nullspace_default().cols(), 2);
}

#[test]
fn nullspace_of_one_equation() {
    let n = qm(&[&["1", "1"]]).nullspace_default();
    assert_eq!(n, qm(&[&["1"], &["-1"]]));
}

#[test]
fn exe0_kernel_at_minus_one() {
    let sys = load::<Q>("exe0");
    let n = sys.pencil(&Q::from_i64(-1)).nullspace_default();
    assert_eq!(n.cols(), 1);
    let expected = qv(&["0", "0", "0", "1", "0", "-1", "0", "0", "0"]);
    let col = n.col(0);
    // Canonical scaling makes the first nonzero entry positive.
    assert_eq!(col, expected);
}

#[test]
fn esaggiunto2_kernel_at_minus_seven() {
    let sys = load::<Q>("esaggiunto2");
    let n = sys.pencil(&Q::from_i64(-7)).nullspace_default();
    assert_eq!(n.cols(), 1);
    let expected = qv(&["8", "0", "3", "59/8", "-45/2"]);
    let scale = &expected[0] / &n.col(0)[0];
    let scaled: Vec<Q> = n.col(0).iter().map(|x| x * &scale).collect();
    assert_eq!(scaled, expected);
}

#[test]
fn float_rank_tolerance_is_relative() {
    let m = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { 1e6 } else { 0.0 });
    assert_eq!(m.rank_default(), 2);
    let nearly = Mat::<f64>::from_fn(2, 2, |i, j| [[1.0, 1.0], [1.0, 1.0 + 1e-13]][i][j]);
    assert_eq!(nearly.rank_default(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rank_matches_minor_enumeration(m in small_matrix(5)) {
        prop_assert_eq!(m.rank_default(), rank_by_minors(&rows_of(&m), m.cols()));
    }

    #[test]
    fn low_rank_products_match_minor_enumeration(m in low_rank_matrix()) {
        prop_assert_eq!(m.rank_default(), rank_by_minors(&rows_of(&m), m.cols()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nullspace_is_an_independent_annihilating_basis(m in low_rank_matrix()) {
        let n = m.nullspace_default();
        prop_assert_eq!(n.rows(), m.cols());
        prop_assert_eq!(n.cols(), m.cols() - m.rank_default());
        prop_assert!(m.mul(&n).is_zero());
        prop_assert_eq!(n.rank_default(), n.cols());
    }

    #[test]
    fn rational_nullspace_columns_are_canonical(m in low_rank_matrix()) {
        let n = m.nullspace_default();
        for j in 0..n.cols() {
            let col = n.col(j);
            prop_assert!(col.iter().all(|x| x.is_integer()));
            let g = col.iter().fold(num_bigint::BigInt::zero(), |g, x| g.gcd(x.numer()));
            prop_assert_eq!(g, num_bigint::BigInt::from(1));
            prop_assert!(col.iter().find(|x| !x.is_zero()).unwrap().is_positive());
        }
    }

    #[test]
    fn float_and_rational_ranks_agree(m in low_rank_matrix()) {
        prop_assert_eq!(m.to_f64().rank_default(), m.rank_default());
    }

    #[test]
    fn float_nullspace_residual_is_small(m in small_matrix(5)) {
        let f = m.to_f64();
        let n = f.nullspace_default();
        prop_assert_eq!(n.cols(), f.cols() - f.rank_default());
        prop_assert!(f.mul(&n).max_abs() <= 1e-9 * (1.0 + f.max_abs()));
    }

    #[test]
    fn subspace_sum_dimension_bounds((a, b) in (1usize..=5).prop_flat_map(|r| (low_rank_with_rows(r), low_rank_with_rows(r)))) {
        let sa = Subspace::span(&a, 0.0);
        let sb = Subspace::span(&b, 0.0);
        let sum = sum_dim(&[&sa, &sb]).unwrap();
        prop_assert!(sum <= sa.dim() + sb.dim());
        prop_assert!(sum >= sa.dim().max(sb.dim()));
        prop_assert_eq!(sum_dim(&[&sa, &sa]).unwrap(), sa.dim());
    }
}

#[test]
fn sum_dimension_rejects_mismatched_ambient_spaces() {
    let a = Subspace::<Q>::full(3, 0.0);
    let b = Subspace::<Q>::full(2, 0.0);
    assert!(sum_dim(&[&a, &b]).is_err());
}
