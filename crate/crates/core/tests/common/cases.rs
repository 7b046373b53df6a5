//! The worked examples as ready-to-synthesize cases with explicit selectors.

use monotrack::geometry::{structural_report, StructuralReport};
use monotrack::synthesis::{candidate_space, ColumnStrategy, ModeSelection, ParameterSet};
use monotrack::{LtiSystem, Mat, Rational};

use monotrack::Scalar;

use super::{col, ints, load, q, qm, selectors_for, Column};

pub struct Case {
    pub name: &'static str,
    pub sys: LtiSystem<Rational>,
    pub report: StructuralReport<Rational>,
    pub modes: ModeSelection<Rational>,
    pub params: ParameterSet<Rational>,
    /// Columns expected to be retained, in any order.
    pub retained: Vec<Column>,
    /// Feedback printed with the worked example.
    pub reference_f: Mat<Rational>,
    /// Expected closed-loop eigenvalues with multiplicity.
    pub spectrum: Vec<Rational>,
}

#[allow(clippy::too_many_arguments)]
fn build(
    name: &'static str,
    fixture: &str,
    modes: ModeSelection<Rational>,
    invariant: &[Column],
    visible: &[Option<Column>],
    strategy: ColumnStrategy,
    retained: Vec<Column>,
    reference_f: Mat<Rational>,
    spectrum: Vec<Rational>,
) -> Case {
    let sys = load::<Rational>(fixture);
    let report = structural_report(&sys, 0).unwrap();
    let resolved = modes.resolve(&report, 0).unwrap();
    let space = candidate_space(&sys, &report, &resolved).unwrap();
    let params = selectors_for(&space, invariant, visible, strategy);
    Case {
        name,
        sys,
        report,
        modes,
        params,
        retained,
        reference_f,
        spectrum,
    }
}

pub fn exe0() -> Case {
    let invariant = [
        col(&["0", "0", "0", "1", "0"], &["-1", "0", "0", "0"]),
        // The z = -6 column taken as a genuine kernel vector.
        col(&["-132", "44", "-123", "132", "-6"], &["-462", "216", "66", "0"]),
    ];
    let visible = [
        col(&["0", "27", "-80", "116", "12"], &["116", "36", "36", "36"]),
        col(&["0", "0", "28", "-37", "-6"], &["-37", "-18", "0", "0"]),
        col(&["0", "-27", "28", "-55", "-6"], &["-55", "-18", "0", "-36"]),
    ];
    build(
        "exe0",
        "exe0",
        ModeSelection::new(ints(&[-1, -1, -1])).with_invisible(ints(&[-1])),
        &invariant,
        &visible.clone().map(Some),
        ColumnStrategy::PreferInvariant,
        invariant.iter().chain(&visible).cloned().collect(),
        qm(&[
            &["925/198", "4/3", "-2", "-1", "3"],
            &["-39/22", "0", "0", "0", "3"],
            &["107/88", "0", "-3/2", "0", "-7"],
            &["4/9", "4/3", "0", "0", "0"],
        ]),
        ints(&[-6, -1, -1, -1, -1]),
    )
}

pub fn esprimo() -> Case {
    let invariant = [
        col(&["1", "2", "1", "0"], &["0", "-3/2", "0"]),
        col(&["0", "0", "0", "1"], &["0", "1/2", "-1"]),
    ];
    let visible = [
        col(&["3", "0", "0", "1"], &["3/2", "-5/2", "-1/2"]),
        col(&["-12", "24", "-12", "2"], &["12", "-5", "-1"]),
    ];
    build(
        "esprimo",
        "esprimo",
        ModeSelection::new(ints(&[-1, -1])).with_invisible(ints(&[-3])),
        &invariant,
        &visible.clone().map(Some),
        ColumnStrategy::PreferInvariant,
        invariant.iter().chain(&visible).cloned().collect(),
        qm(&[
            &["1/2", "1/4", "-1", "0"],
            &["-1", "-1/2", "1/2", "1/2"],
            &["1/6", "-1/16", "-3/8", "-1"],
        ]),
        ints(&[-3, -3, -1, -1]),
    )
}

fn es2_invariant() -> [Column; 2] {
    [
        col(&["8", "0", "3"], &["59/8", "-45/2"]),
        col(&["0", "1", "0"], &["3/8", "5/4"]),
    ]
}

fn es2_case(name: &'static str, lambda: i64, visible: Column, reference_f: Mat<Rational>) -> Case {
    let invariant = es2_invariant();
    let mut spectrum = ints(&[-9, -7, lambda]);
    spectrum.sort();
    build(
        name,
        "esaggiunto2",
        ModeSelection::new(ints(&[lambda, lambda])),
        &invariant,
        &[Some(visible.clone()), None],
        ColumnStrategy::PreferInvariant,
        vec![invariant[0].clone(), invariant[1].clone(), visible],
        reference_f,
        spectrum,
    )
}

pub fn esaggiunto2() -> Case {
    es2_case(
        "esaggiunto2",
        -2,
        col(&["-8", "0", "-8"], &["-13", "30"]),
        qm(&[&["4/8", "3/8", "9/8"], &["-18/8", "10/8", "-12/8"]]),
    )
}

/// Visible mode -10 for the first output; the second output is
/// instantaneous.
pub fn esaggiunto2_at_minus_10() -> Case {
    es2_case(
        "esaggiunto2 at -10",
        -10,
        col(&["-16", "0", "0"], &["-2", "36"]),
        qm(&[&["1/8", "3/8", "17/8"], &["-9/4", "5/4", "-3/2"]]),
    )
}

/// The three variants: second output instantaneous, first output
/// instantaneous, both outputs visible.
pub fn esaggiunto3() -> Vec<Case> {
    let modes = || ModeSelection::new(ints(&[-2, -2]));
    let z1 = col(&["-9", "13", "0"], &["0", "-2"]);
    let z2 = col(&["-3", "0", "0"], &["0", "8"]);
    let v1 = col(&["-6", "0", "-2"], &["0", "10"]);
    let v2 = col(&["146", "100", "80"], &["10", "-356"]);
    let invariant = [z1.clone(), z2.clone()];
    vec![
        build(
            "esaggiunto3 second output instantaneous",
            "esaggiunto3",
            modes(),
            &invariant,
            &[Some(v1.clone()), Some(v2.clone())],
            ColumnStrategy::PreferInvariant,
            vec![z1.clone(), z2.clone(), v1.clone()],
            qm(&[&["0", "0", "0"], &["-8/3", "-2", "3"]]),
            vec![q(-16, 3), q(-2, 1), q(-1, 1)],
        ),
        build(
            "esaggiunto3 first output instantaneous",
            "esaggiunto3",
            modes(),
            &invariant,
            &[None, Some(v2.clone())],
            // Candidate columns are [z = -16/3, z = -1, visible 1, visible 2].
            ColumnStrategy::Explicit(vec![0, 1, 3]),
            vec![z1.clone(), z2.clone(), v2.clone()],
            qm(&[&["0", "0", "1/8"], &["-8/3", "-2", "35/12"]]),
            vec![q(-16, 3), q(-2, 1), q(-1, 1)],
        ),
        build(
            "esaggiunto3 both outputs visible",
            "esaggiunto3",
            modes(),
            &invariant,
            &[Some(v1.clone()), Some(v2.clone())],
            ColumnStrategy::ForceVisible(vec![0, 1]),
            vec![z2, v1, v2],
            qm(&[&["0", "1/10", "0"], &["-8/3", "-31/15", "3"]]),
            vec![q(-16, 3), q(-2, 1), q(-2, 1)],
        ),
    ]
}

pub fn all() -> Vec<Case> {
    let mut cases = vec![exe0(), esprimo(), esaggiunto2(), esaggiunto2_at_minus_10()];
    cases.extend(esaggiunto3());
    cases
}

/// `W V⁻¹` for the expected retained columns, by Gauss-Jordan elimination
/// written independently of the library.
pub fn oracle_feedback(case: &Case) -> Mat<Rational> {
    let n = case.retained.len();
    let m = case.retained[0].1.len();
    // Solve Vᵀ Fᵀ = Wᵀ: augmented rows are [v_k | w_k].
    let mut rows: Vec<Vec<Rational>> = case
        .retained
        .iter()
        .map(|(v, w)| v.iter().chain(w).cloned().collect())
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| rows[r][c] != Rational::from_i64(0)).expect("invertible");
        rows.swap(c, p);
        let pivot = rows[c][c].clone();
        rows[c] = rows[c].iter().map(|x| x / &pivot).collect();
        for r in 0..n {
            if r != c {
                let f = rows[r][c].clone();
                let pivot_row = rows[c].clone();
                for (x, y) in rows[r].iter_mut().zip(pivot_row) {
                    *x = x.clone() - f.clone() * y;
                }
            }
        }
    }
    // Row k now holds e_k^T | (V^{-T} W^T) row k, i.e. column k of F.
    Mat::from_fn(m, n, |i, k| rows[k][n + i].clone())
}
