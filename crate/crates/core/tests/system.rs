mod common;

use common::oracle::plants;
use common::{load, q, qm, qv};
use monotrack::system::{steady_state, steady_state_residual, validate};
use monotrack::{LtiSystem, Mat, Rational, Scalar, TimeDomain};
use num_traits::Zero;
use proptest::prelude::*;

type Q = Rational;

fn all_zero(v: &[Q]) -> bool {
    v.iter().all(Zero::is_zero)
}

#[test]
fn exe0_passes_validation() {
    assert!(validate(&load::<Q>("exe0")).passed());
}

#[test]
fn duplicated_input_column_fails_validation() {
    let sys = LtiSystem::new(
        Mat::<Q>::identity(2),
        Mat::from_i64_rows(&[&[1, 1], &[0, 0]]),
        Mat::from_i64_rows(&[&[1, 0]]),
        Mat::zeros(1, 2),
        TimeDomain::Continuous,
    )
    .unwrap();
    let report = validate(&sys);
    assert!(!report.input_rank_ok);
    assert!(report.output_rank_ok);
}

#[test]
fn zero_output_row_fails_validation() {
    let sys = LtiSystem::new(
        Mat::<Q>::identity(2),
        Mat::from_i64_rows(&[&[1], &[0]]),
        Mat::from_i64_rows(&[&[1, 0], &[0, 0]]),
        Mat::zeros(2, 1),
        TimeDomain::Continuous,
    )
    .unwrap();
    assert!(!validate(&sys).output_rank_ok);
}

#[test]
fn esaggiunto3_pencil_has_full_row_rank_off_the_zeros() {
    let sys = load::<Q>("esaggiunto3");
    for x in [-2, -4] {
        assert_eq!(sys.pencil(&q(x, 1)).rank_default(), sys.n() + sys.p());
    }
}

#[test]
fn exe0_output_deletion() {
    let sys = load::<Q>("exe0");
    let sub = sys.delete_output(0).unwrap();
    assert_eq!(sub.c(), &sys.c().select_rows(&[1, 2]));
    assert_eq!(sub.d(), &sys.d().select_rows(&[1, 2]));
    assert_eq!((sub.n(), sub.m(), sub.p()), (5, 4, 2));
    assert_eq!(sub.pencil(&q(-1, 1)).nullspace_default().cols(), 2);
}

#[test]
fn esaggiunto2_second_deleted_pencil_kernel_has_no_state_part() {
    let sys = load::<Q>("esaggiunto2");
    let kernel = sys.delete_output(1).unwrap().pencil(&q(-2, 1)).nullspace_default();
    assert_eq!(kernel.cols(), 1);
    assert!(all_zero(&kernel.col(0)[..3]));
    assert_eq!(&kernel.col(0)[3..], &qv(&["0", "1"])[..]);
}

#[test]
fn exe0_published_equilibrium_has_zero_residual() {
    let sys = load::<Q>("exe0");
    let x_ss = qv(&["0", "-2", "10/3", "0", "-7/15"]);
    let u_ss = qv(&["-48/5", "-14/15", "-1", "-2"]);
    let (state, output) = steady_state_residual(&sys, &x_ss, &u_ss, &qv(&["2", "2", "2"]));
    assert!(all_zero(&state) && all_zero(&output));
}

#[test]
fn computed_equilibria_have_zero_residual() {
    for (name, r) in [("exe0", vec!["2", "2", "2"]), ("esprimo", vec!["1", "1"])] {
        let sys = load::<Q>(name);
        let r = qv(&r);
        let ss = steady_state(&sys, &r).unwrap();
        let (state, output) = steady_state_residual(&sys, &ss.x_ss, &ss.u_ss, &r);
        assert!(all_zero(&state) && all_zero(&output), "{name}");
    }
}

#[test]
fn untrackable_reference_is_reported() {
    // y = s/(s+1) u: the equilibrium equations force 0 = r.
    let sys = LtiSystem::new(
        Mat::<Q>::from_i64_rows(&[&[-1]]),
        Mat::from_i64_rows(&[&[1]]),
        Mat::from_i64_rows(&[&[-1]]),
        Mat::from_i64_rows(&[&[1]]),
        TimeDomain::Continuous,
    )
    .unwrap();
    assert!(matches!(
        steady_state(&sys, &[q(1, 1)]),
        Err(monotrack::Error::NotTrackable)
    ));
}

#[test]
fn discrete_equilibrium_is_a_fixed_point() {
    let sys = LtiSystem::new(
        qm(&[&["1/2", "0"], &["1", "1/4"]]),
        Mat::from_i64_rows(&[&[1], &[0]]),
        Mat::from_i64_rows(&[&[0, 1]]),
        Mat::zeros(1, 1),
        TimeDomain::Discrete,
    )
    .unwrap();
    let ss = steady_state(&sys, &[q(3, 1)]).unwrap();
    let next: Vec<Q> = sys
        .a()
        .mul_vec(&ss.x_ss)
        .into_iter()
        .zip(sys.b().mul_vec(&ss.u_ss))
        .map(|(a, b)| a + b)
        .collect();
    assert_eq!(next, ss.x_ss);
}

#[test]
fn float_equilibrium_residual_is_within_tolerance() {
    let sys = load::<f64>("exe0");
    let r = [2.0, 2.0, 2.0];
    let ss = steady_state(&sys, &r).unwrap();
    let (state, output) = steady_state_residual(&sys, &ss.x_ss, &ss.u_ss, &r);
    let worst = state.iter().chain(&output).fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst <= 1e-9 * 3.0, "{worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pencil_at_zero_is_the_block_matrix(seed in 0usize..50) {
        let sys = &plants()[seed].sys;
        let top = Mat::hcat(sys.n(), &[sys.a(), sys.b()]).unwrap();
        let bottom = Mat::hcat(sys.p(), &[sys.c(), sys.d()]).unwrap();
        let block = Mat::vcat(sys.n() + sys.m(), &[&top, &bottom]).unwrap();
        prop_assert_eq!(sys.pencil(&Q::zero()), block);
    }

    #[test]
    fn deleting_an_output_keeps_the_state_and_input_sizes(seed in 0usize..50, j in 0usize..3) {
        let sys = &plants()[seed].sys;
        prop_assume!(j < sys.p());
        let sub = sys.delete_output(j).unwrap();
        prop_assert_eq!((sub.n(), sub.m(), sub.p()), (sys.n(), sys.m(), sys.p() - 1));
        prop_assert_eq!(sub.a(), sys.a());
        prop_assert_eq!(sub.b(), sys.b());
    }

    #[test]
    fn equilibria_solve_the_steady_state_equations(seed in 0usize..50, r in prop::collection::vec(-9i64..=9, 3)) {
        let sys = &plants()[seed].sys;
        let r: Vec<Q> = r[..sys.p()].iter().map(|&x| Q::from_i64(x)).collect();
        let ss = steady_state(sys, &r).unwrap();
        let (state, output) = steady_state_residual(sys, &ss.x_ss, &ss.u_ss, &r);
        prop_assert!(all_zero(&state) && all_zero(&output));
    }

    #[test]
    fn equilibria_are_valid_after_permuting_outputs(seed in 0usize..50, r in prop::collection::vec(-9i64..=9, 3), shift in 0usize..3) {
        let sys = &plants()[seed].sys;
        let p = sys.p();
        let perm: Vec<usize> = (0..p).map(|i| (i + shift) % p).collect();
        let permuted = LtiSystem::new(
            sys.a().clone(),
            sys.b().clone(),
            sys.c().select_rows(&perm),
            sys.d().select_rows(&perm),
            sys.domain(),
        )
        .unwrap();
        let r: Vec<Q> = perm.iter().map(|&i| Q::from_i64(r[i])).collect();
        let ss = steady_state(&permuted, &r).unwrap();
        let (state, output) = steady_state_residual(&permuted, &ss.x_ss, &ss.u_ss, &r);
        prop_assert!(all_zero(&state) && all_zero(&output));
    }
}
