use super::Mat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A subspace held as a full-column-rank basis matrix.
///
/// The zero subspace has a basis with no columns. `tol` is the relative rank
/// tolerance used for all later rank decisions (ignored for exact scalars).
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<S> {
    basis: Mat<S>,
    tol: f64,
}

impl<S: Scalar> Subspace<S> {
    /// Wraps a basis, checking that its columns are independent.
    pub fn new(basis: Mat<S>, tol: f64) -> Result<Self> {
        if basis.rank(tol) != basis.cols() {
            return Err(Error::Dimension(format!(
                "basis with {} columns has rank {}",
                basis.cols(),
                basis.rank(tol)
            )));
        }
        Ok(Subspace { basis, tol })
    }

    /// Span of arbitrary columns; dependent columns are discarded.
    pub fn span(columns: &Mat<S>, tol: f64) -> Self {
        let keep = columns.independent_columns(tol);
        Subspace {
            basis: columns.select_cols(&keep),
            tol,
        }
    }

    pub fn zero(ambient: usize, tol: f64) -> Self {
        Subspace {
            basis: Mat::zeros(ambient, 0),
            tol,
        }
    }

    pub fn full(ambient: usize, tol: f64) -> Self {
        Subspace {
            basis: Mat::identity(ambient),
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Mat<S> {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn contains_vector(&self, v: &[S]) -> bool {
        let col = Mat::column_vector(v.to_vec());
        let joined = Mat::hcat(self.ambient_dim(), &[&self.basis, &col]).expect("ambient mismatch");
        joined.rank(self.tol) == self.dim()
    }

    pub fn contains(&self, other: &Subspace<S>) -> bool {
        sum_dim(&[self, other]).is_ok_and(|d| d == self.dim())
    }

    /// Same column span.
    pub fn same_span(&self, other: &Subspace<S>) -> bool {
        self.dim() == other.dim() && self.contains(other)
    }

    /// The sum of subspaces, as a new subspace.
    pub fn sum(parts: &[&Subspace<S>]) -> Result<Subspace<S>> {
        let joined = concat(parts)?;
        let tol = parts.first().map_or(S::DEFAULT_TOL, |p| p.tol);
        Ok(Subspace::span(&joined, tol))
    }
}

fn concat<S: Scalar>(parts: &[&Subspace<S>]) -> Result<Mat<S>> {
    let Some(first) = parts.first() else {
        return Err(Error::Dimension("sum of no subspaces".into()));
    };
    let n = first.ambient_dim();
    if let Some(p) = parts.iter().find(|p| p.ambient_dim() != n) {
        return Err(Error::Dimension(format!(
            "ambient dimension {} does not match {n}",
            p.ambient_dim()
        )));
    }
    let mats: Vec<&Mat<S>> = parts.iter().map(|p| &p.basis).collect();
    Mat::hcat(n, &mats)
}

/// Dimension of the sum of subspaces sharing one ambient space.
pub fn sum_dim<S: Scalar>(parts: &[&Subspace<S>]) -> Result<usize> {
    let joined = concat(parts)?;
    let tol = parts[0].tol;
    Ok(joined.rank(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn sum_is_idempotent_and_checks_ambient() {
        let s = Subspace::<Rational>::span(&Mat::from_i64_rows(&[&[1, 2], &[0, 0], &[1, 2]]), 0.0);
        assert_eq!(s.dim(), 1);
        assert_eq!(sum_dim(&[&s, &s]).unwrap(), 1);
        let other = Subspace::<Rational>::zero(2, 0.0);
        assert!(sum_dim(&[&s, &other]).is_err());
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let m = Mat::<Rational>::from_i64_rows(&[&[1, 2], &[2, 4]]);
        assert!(Subspace::new(m, 0.0).is_err());
    }
}
