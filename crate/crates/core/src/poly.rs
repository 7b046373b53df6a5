//! Univariate polynomials: interpolation, exact division, square-free
//! factorisation and root finding with exact recovery of rational roots.

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};

use crate::scalar::Scalar;

/// Polynomial with coefficients in ascending degree order.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    coeffs: Vec<S>,
}

/// A root with its multiplicity. Conjugate pairs are listed as two roots.
#[derive(Clone, Debug, PartialEq)]
pub struct Root<S> {
    /// Float approximation (always present).
    pub approx: Complex64,
    /// The value in the scalar type, when representable. For floats this is
    /// the polished approximation itself.
    pub exact: Option<Complex<S>>,
    pub multiplicity: usize,
}

impl<S: Scalar> Poly<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::new(vec![S::one()])
    }

    /// `x - a`.
    pub fn linear(a: S) -> Self {
        Poly::new(vec![-a, S::one()])
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[S]) -> Self {
        roots
            .iter()
            .fold(Poly::one(), |acc, r| acc.mul(&Poly::linear(r.clone())))
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&S> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c.to_f64())
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * S::from_i64(k as i64))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    let a = self.coeffs.get(k).cloned().unwrap_or_else(S::zero);
                    let b = other.coeffs.get(k).cloned().unwrap_or_else(S::zero);
                    a + b
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: &S) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![S::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }

    /// Euclidean division: `(quotient, remainder)`. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let d = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.coeffs[d].clone();
        let mut rem = self.coeffs.clone();
        let Some(n) = self.degree().filter(|&n| n >= d) else {
            return (Poly::zero(), self.clone());
        };
        let mut quot = vec![S::zero(); n - d + 1];
        for k in (0..=n - d).rev() {
            let c = rem[k + d].clone() / lead.clone();
            for (i, dc) in divisor.coeffs.iter().enumerate() {
                rem[k + i] = rem[k + i].clone() - c.clone() * dc.clone();
            }
            rem[k + d] = S::zero();
            quot[k] = c;
        }
        rem.truncate(d);
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => Poly::zero(),
            Some(l) => {
                let inv = S::one() / l.clone();
                self.scale(&inv)
            }
        }
    }

    /// Monic greatest common divisor (exact scalars).
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Yun's square-free decomposition: pairs `(factor, multiplicity)` whose
    /// product (with multiplicities) is the monic version of `self`.
    pub fn square_free(&self) -> Vec<(Self, usize)> {
        let f = self.monic();
        if f.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let df = f.derivative();
        let mut a = f.gcd(&df);
        let mut b = f.div_rem(&a).0;
        let mut c = df.div_rem(&a).0;
        let mut d = c.add(&b.derivative().scale(&-S::one()));
        let mut out = Vec::new();
        let mut i = 1;
        loop {
            a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            b = b.div_rem(&a).0;
            if b.degree().unwrap_or(0) == 0 {
                break;
            }
            c = d.div_rem(&a).0;
            d = c.add(&b.derivative().scale(&-S::one()));
            i += 1;
        }
        out
    }

    /// Interpolating polynomial of degree `< xs.len()` through the points.
    pub fn interpolate(xs: &[S], ys: &[S]) -> Self {
        assert_eq!(xs.len(), ys.len(), "interpolation data mismatch");
        let n = xs.len();
        let mut dd = ys.to_vec();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (dd[i].clone() - dd[i - 1].clone())
                    / (xs[i].clone() - xs[i - level].clone());
            }
        }
        let mut p = Poly::zero();
        for k in (0..n).rev() {
            p = p.mul(&Poly::linear(xs[k].clone())).add(&Poly::new(vec![dd[k].clone()]));
        }
        p
    }

    /// All roots with multiplicities. Exact scalars use square-free
    /// factorisation and recover rational roots and rational quadratic
    /// factors exactly; floats cluster numerical roots.
    pub fn roots(&self) -> Vec<Root<S>> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        if S::EXACT {
            self.square_free()
                .into_iter()
                .flat_map(|(f, mult)| exact_roots(&f, mult))
                .collect()
        } else {
            float_roots(self)
        }
    }
}

/// Numerical roots of a polynomial through its companion matrix, polished
/// by Newton steps. Real eigenvalues come back with zero imaginary part.
pub fn numeric_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|v| *v == 0.0) {
        c.pop();
    }
    let Some(deg) = c.len().checked_sub(1).filter(|&d| d > 0) else {
        return Vec::new();
    };
    let lead = c[deg];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -monic[i];
    }
    let eig = comp.complex_eigenvalues();
    eig.iter()
        .map(|&z| {
            let z = if z.im == 0.0 { Complex64::new(z.re, 0.0) } else { z };
            polish(&monic, z)
        })
        .collect()
}

fn polish(monic: &[f64], mut z: Complex64) -> Complex64 {
    let eval = |z: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    let real = z.im == 0.0;
    for _ in 0..8 {
        let (p, dp) = eval(z);
        if dp.norm() == 0.0 {
            break;
        }
        let mut next = z - p / dp;
        if real {
            next.im = 0.0;
        }
        if !next.re.is_finite() || !next.im.is_finite() || eval(next).0.norm() >= p.norm() {
            break;
        }
        z = next;
    }
    z
}

fn exact_roots<S: Scalar>(factor: &Poly<S>, multiplicity: usize) -> Vec<Root<S>> {
    let coeffs: Vec<f64> = factor.coeffs().iter().map(Scalar::to_f64).collect();
    let approx = numeric_roots(&coeffs);
    let mut remaining = factor.clone();
    let mut out = Vec::new();
    for z in approx.iter().filter(|z| z.im == 0.0) {
        let hit = S::rational_candidates(z.re)
            .into_iter()
            .find(|q| remaining.eval(q).is_zero());
        match hit {
            Some(q) => {
                remaining = remaining.div_rem(&Poly::linear(q.clone())).0;
                out.push(Root {
                    approx: Complex64::new(q.to_f64(), 0.0),
                    exact: Some(Complex::new(q, S::zero())),
                    multiplicity,
                });
            }
            None => out.push(Root {
                approx: *z,
                exact: None,
                multiplicity,
            }),
        }
    }
    for z in approx.iter().filter(|z| z.im > 0.0) {
        let exact = exact_quadratic(&remaining, *z).and_then(|(quad, re, im_sq)| {
            remaining = remaining.div_rem(&quad).0;
            im_sq.sqrt_exact().map(|im| (re, im))
        });
        let (conj_exact, exact) = match exact {
            Some((re, im)) => (
                Some(Complex::new(re.clone(), -im.clone())),
                Some(Complex::new(re, im)),
            ),
            None => (None, None),
        };
        out.push(Root {
            approx: *z,
            exact,
            multiplicity,
        });
        out.push(Root {
            approx: z.conj(),
            exact: conj_exact,
            multiplicity,
        });
    }
    out
}

/// Finds a rational quadratic `x^2 + b x + c` dividing `p` exactly with
/// roots near `z`. Returns the factor, the real part and the squared
/// imaginary part.
fn exact_quadratic<S: Scalar>(p: &Poly<S>, z: Complex64) -> Option<(Poly<S>, S, S)> {
    let bs = S::rational_candidates(-2.0 * z.re);
    let cs = S::rational_candidates(z.norm_sqr());
    for b in &bs {
        for c in &cs {
            let quad = Poly::new(vec![c.clone(), b.clone(), S::one()]);
            if p.div_rem(&quad).1.is_zero() {
                let re = -b.clone() / S::from_i64(2);
                let im_sq = c.clone() - re.clone() * re.clone();
                if im_sq > S::zero() {
                    return Some((quad, re, im_sq));
                }
            }
        }
    }
    None
}

fn float_roots<S: Scalar>(p: &Poly<S>) -> Vec<Root<S>> {
    let coeffs: Vec<f64> = p.coeffs().iter().map(Scalar::to_f64).collect();
    let approx = numeric_roots(&coeffs);
    // Multiple roots split into nearby clusters; merge them.
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in approx {
        let tol = 1e-5 * (1.0 + z.norm());
        match clusters.iter_mut().find(|c| (c[0] - z).norm() <= tol) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    clusters
        .into_iter()
        .map(|c| {
            let n = c.len();
            let mean = c.iter().sum::<Complex64>() / n as f64;
            let mean = if mean.im.abs() <= 1e-8 * (1.0 + mean.norm()) {
                Complex64::new(mean.re, 0.0)
            } else {
                mean
            };
            let exact = S::from_f64(mean.re)
                .zip(S::from_f64(mean.im))
                .map(|(re, im)| Complex::new(re, im));
            Root {
                approx: mean,
                exact,
                multiplicity: n,
            }
        })
        .collect()
}
