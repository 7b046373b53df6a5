//! The scalar abstraction shared by every module.
//!
//! A computation runs over exactly one scalar kind: exact rationals
//! ([`Rational`]) or IEEE floats (`f64`, `f32`). Rank and null-space
//! computation are dispatched through the trait because the two kinds need
//! different algorithms (fraction-free elimination versus SVD).

use std::fmt::{Debug, Display};

use nalgebra::{DMatrix, RealField};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::linalg::Mat;

/// Arbitrary-precision rational number, always in lowest terms.
pub type Rational = BigRational;

/// Field element usable by the whole pipeline.
pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// True when arithmetic is exact and tolerances are ignored.
    const EXACT: bool;
    /// Relative rank tolerance used when callers do not supply one.
    const DEFAULT_TOL: f64;

    fn from_i64(v: i64) -> Self;

    /// `num / den`; panics when `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Converts a float. Rationals receive the exact binary value.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// `|self| <= abs_tol` for floats, `self == 0` for exact scalars.
    fn is_negligible(&self, abs_tol: f64) -> bool;

    /// Rank with the documented tolerance policy.
    fn rank_of(m: &Mat<Self>, tol: f64) -> usize;

    /// Basis of the right null space.
    fn nullspace_of(m: &Mat<Self>, tol: f64) -> Mat<Self>;

    /// Parses `"p/q"`, integers and decimal literals such as `"-1.25e-2"`.
    fn parse_entry(s: &str) -> Option<Self>;

    /// JSON form: `"p/q"` strings for rationals, numbers for floats.
    fn to_json(&self) -> serde_json::Value;

    /// Small-denominator candidates close to `v`, best first. Floats return
    /// `v` itself.
    fn rational_candidates(v: f64) -> Vec<Self>;

    /// Square root when it is representable (exactly, for rationals).
    fn sqrt_exact(&self) -> Option<Self>;
}

/// Parses an exact decimal literal with optional exponent into a rational.
fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = all_digits.parse().ok()?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

fn parse_rational(s: &str) -> Option<Rational> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p = parse_decimal(p)?;
            let q = parse_decimal(q)?;
            if q.is_zero() {
                None
            } else {
                Some(p / q)
            }
        }
        None => parse_decimal(s),
    }
}

/// Continued-fraction convergents of `v` with denominators up to 10^7 that
/// approximate `v` to within `1e-6 * (1 + |v|)`.
fn convergents(v: f64) -> Vec<Rational> {
    if !v.is_finite() {
        return Vec::new();
    }
    let tol = 1e-6 * (1.0 + v.abs());
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut x = v;
    let mut out = Vec::new();
    for _ in 0..40 {
        let a = x.floor();
        let Some(a_int) = BigInt::from_f64(a) else {
            break;
        };
        let h_next = &a_int * &h + &h_prev;
        let k_next = &a_int * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        if k > BigInt::from(10_000_000) {
            break;
        }
        let cand = Rational::new(h.clone(), k.clone());
        if (Scalar::to_f64(&cand) - v).abs() <= tol {
            out.push(cand);
        }
        let frac = x - a;
        if frac.abs() < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    out
}

fn perfect_square_root(n: &BigInt) -> Option<BigInt> {
    if n.sign() == Sign::Minus {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const DEFAULT_TOL: f64 = 0.0;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_f64(v: f64) -> Option<Self> {
        Rational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self, _abs_tol: f64) -> bool {
        self.is_zero()
    }

    fn rank_of(m: &Mat<Self>, _tol: f64) -> usize {
        crate::linalg::exact::bareiss_rank(m)
    }

    fn nullspace_of(m: &Mat<Self>, _tol: f64) -> Mat<Self> {
        crate::linalg::exact::nullspace(m)
    }

    fn parse_entry(s: &str) -> Option<Self> {
        parse_rational(s)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }

    fn rational_candidates(v: f64) -> Vec<Self> {
        convergents(v)
    }

    fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = perfect_square_root(self.numer())?;
        let d = perfect_square_root(self.denom())?;
        Some(Rational::new(n, d))
    }
}

/// Float rank: singular values above `tol * max(rows, cols) * sigma_max`.
fn float_rank<T>(m: &Mat<T>, tol: f64) -> usize
where
    T: Scalar + RealField + Copy + ToPrimitive,
{
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let sv = dm.singular_values();
    let smax = sv.iter().fold(0.0_f64, |acc, s| acc.max(Scalar::to_f64(s)));
    if smax == 0.0 {
        return 0;
    }
    let thresh = tol * m.rows().max(m.cols()) as f64 * smax;
    sv.iter().filter(|s| Scalar::to_f64(*s) > thresh).count()
}

/// Float null space from the SVD of the matrix padded to at least square.
fn float_nullspace<T>(m: &Mat<T>, tol: f64) -> Mat<T>
where
    T: Scalar + RealField + Copy,
{
    let n = m.cols();
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let rows = m.rows().max(n);
    let mut dm = DMatrix::<T>::zeros(rows, n);
    for i in 0..m.rows() {
        for j in 0..n {
            dm[(i, j)] = m[(i, j)];
        }
    }
    let svd = dm.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, s| acc.max(Scalar::to_f64(s)));
    let thresh = tol * m.rows().max(n) as f64 * smax;
    let null_rows: Vec<usize> = (0..n)
        .filter(|&i| smax == 0.0 || Scalar::to_f64(&svd.singular_values[i]) <= thresh)
        .collect();
    Mat::from_fn(n, null_rows.len(), |i, j| v_t[(null_rows[j], i)])
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;
            const DEFAULT_TOL: f64 = $tol;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn from_f64(v: f64) -> Option<Self> {
                Some(v as $t)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn is_negligible(&self, abs_tol: f64) -> bool {
                (*self as f64).abs() <= abs_tol
            }

            fn rank_of(m: &Mat<Self>, tol: f64) -> usize {
                float_rank(m, tol)
            }

            fn nullspace_of(m: &Mat<Self>, tol: f64) -> Mat<Self> {
                float_nullspace(m, tol)
            }

            fn parse_entry(s: &str) -> Option<Self> {
                match s.split_once('/') {
                    Some((p, q)) => {
                        let p: $t = p.trim().parse().ok()?;
                        let q: $t = q.trim().parse().ok()?;
                        (q != 0.0).then(|| p / q)
                    }
                    None => s.trim().parse().ok(),
                }
            }

            fn to_json(&self) -> serde_json::Value {
                serde_json::Number::from_f64(*self as f64)
                    .map(serde_json::Value::Number)
                    .unwrap_or(serde_json::Value::Null)
            }

            fn rational_candidates(v: f64) -> Vec<Self> {
                vec![v as $t]
            }

            fn sqrt_exact(&self) -> Option<Self> {
                (*self >= 0.0).then(|| self.sqrt())
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-4);

/// Greatest common divisor of a slice of integers (0 for an all-zero slice).
pub(crate) fn content(values: &[BigInt]) -> BigInt {
    values.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v))
}
