#![allow(dead_code)]

pub mod cases;
pub mod oracle;

use monotrack::io::parse_system;
use monotrack::{LtiSystem, Mat, Rational, Scalar};

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

pub fn load<S: Scalar>(name: &str) -> LtiSystem<S> {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture exists");
    parse_system(&text).expect("fixture parses")
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

/// Parses a vector of literals such as `["-7/15", "0", "3"]`.
pub fn qv(items: &[&str]) -> Vec<Rational> {
    items.iter().map(|s| Rational::parse_entry(s).unwrap()).collect()
}

pub fn qm(rows: &[&[&str]]) -> Mat<Rational> {
    Mat::parse(rows).unwrap()
}

pub fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| Rational::from_i64(x)).collect()
}

use monotrack::synthesis::{CandidateSpace, ColumnStrategy, ParameterSet};

/// A state column with its companion input column.
pub type Column = (Vec<Rational>, Vec<Rational>);

pub fn col(v: &[&str], w: &[&str]) -> Column {
    (qv(v), qv(w))
}

/// Selectors reproducing given columns: each invariant block takes the
/// first unused column lying in its kernel; `None` visible entries get the
/// first unit selector.
pub fn selectors_for(
    space: &CandidateSpace<Rational>,
    invariant: &[Column],
    visible: &[Option<Column>],
    strategy: ColumnStrategy,
) -> ParameterSet<Rational> {
    let mut used = vec![false; invariant.len()];
    let invariant_selectors = space
        .blocks
        .iter()
        .map(|block| {
            let (i, sel) = invariant
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .find_map(|(i, (v, w))| block.kernel.selector_for(v, w).map(|s| (i, s)))
                .expect("column lies in the block kernel");
            used[i] = true;
            sel
        })
        .collect();
    let visible_selectors = space
        .visible
        .iter()
        .zip(visible)
        .map(|(k, c)| match c {
            Some((v, w)) => k.as_kernel().selector_for(v, w).expect("column lies in the visible kernel"),
            None => (0..k.v.cols()).map(|i| Rational::from_i64((i == 0) as i64)).collect(),
        })
        .collect();
    ParameterSet {
        invariant_selectors,
        visible_selectors,
        strategy,
        seed: 0,
    }
}
