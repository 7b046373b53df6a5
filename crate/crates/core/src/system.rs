//! The plant model, its Rosenbrock pencil, output deletion, validation and
//! steady-state solutions.

use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Continuous time (`dx/dt = Ax + Bu`) or discrete time (`x[k+1] = Ax + Bu`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

impl TimeDomain {
    /// Membership in the open stability region, on an approximation.
    pub fn is_stable(self, z: Complex64) -> bool {
        match self {
            TimeDomain::Continuous => z.re < 0.0,
            TimeDomain::Discrete => z.norm_sqr() < 1.0,
        }
    }

    /// Exact membership in the open stability region.
    pub fn is_stable_exact<S: Scalar>(self, z: &Complex<S>) -> bool {
        match self {
            TimeDomain::Continuous => z.re < S::zero(),
            TimeDomain::Discrete => z.re.clone() * z.re.clone() + z.im.clone() * z.im.clone() < S::one(),
        }
    }

    /// Admissible real visible mode: negative (continuous) or in `[0, 1)`
    /// (discrete).
    pub fn admits_visible<S: Scalar>(self, lambda: &S) -> bool {
        match self {
            TimeDomain::Continuous => *lambda < S::zero(),
            TimeDomain::Discrete => *lambda >= S::zero() && *lambda < S::one(),
        }
    }

    /// The point whose presence among the zeros blocks step tracking
    /// (0 in continuous time, 1 in discrete time).
    pub fn dc_point<S: Scalar>(self) -> S {
        match self {
            TimeDomain::Continuous => S::zero(),
            TimeDomain::Discrete => S::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeDomain::Continuous => "continuous",
            TimeDomain::Discrete => "discrete",
        }
    }
}

/// State-space quadruple `(A, B, C, D)` with its time domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LtiSystem<S> {
    a: Mat<S>,
    b: Mat<S>,
    c: Mat<S>,
    d: Mat<S>,
    domain: TimeDomain,
}

impl<S: Scalar> LtiSystem<S> {
    /// Checks only dimensional consistency; rank conditions are reported by
    /// [`validate`].
    pub fn new(a: Mat<S>, b: Mat<S>, c: Mat<S>, d: Mat<S>, domain: TimeDomain) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Dimension(format!("A is {}x{}, not square", n, a.cols())));
        }
        if b.rows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.rows())));
        }
        if c.cols() != n {
            return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.cols())));
        }
        if d.rows() != c.rows() || d.cols() != b.cols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.rows(),
                d.cols(),
                c.rows(),
                b.cols()
            )));
        }
        Ok(LtiSystem { a, b, c, d, domain })
    }

    pub fn a(&self) -> &Mat<S> {
        &self.a
    }

    pub fn b(&self) -> &Mat<S> {
        &self.b
    }

    pub fn c(&self) -> &Mat<S> {
        &self.c
    }

    pub fn d(&self) -> &Mat<S> {
        &self.d
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.rows()
    }

    /// `[[A - λI, B], [C, D]]`.
    pub fn pencil(&self, lambda: &S) -> Mat<S> {
        let (n, m) = (self.n(), self.m());
        Mat::from_fn(n + self.p(), n + m, |i, j| match (i < n, j < n) {
            (true, true) if i == j => self.a[(i, j)].clone() - lambda.clone(),
            (true, true) => self.a[(i, j)].clone(),
            (true, false) => self.b[(i, j - n)].clone(),
            (false, true) => self.c[(i - n, j)].clone(),
            (false, false) => self.d[(i - n, j - n)].clone(),
        })
    }

    /// Real form of the pencil at `re + i·im`, acting on stacked real and
    /// imaginary parts: `[[P(re), im·E], [-im·E, P(re)]]` with `E` the state
    /// selector.
    pub fn pencil_doubled(&self, re: &S, im: &S) -> Mat<S> {
        let p = self.pencil(re);
        let (r, c) = p.shape();
        let n = self.n();
        Mat::from_fn(2 * r, 2 * c, |i, j| {
            let (bi, bj) = (i / r, j / c);
            let (li, lj) = (i % r, j % c);
            if bi == bj {
                p[(li, lj)].clone()
            } else if li == lj && li < n {
                // P(z) = P(re) - i·im·E, so the real form has -Im on the
                // lower-left and +Im on the upper-right.
                if bi == 0 {
                    im.clone()
                } else {
                    -im.clone()
                }
            } else {
                S::zero()
            }
        })
    }

    /// `[A - λI, B]`, the controllability pencil.
    pub fn control_pencil(&self, lambda: &S) -> Mat<S> {
        let n = self.n();
        Mat::from_fn(n, n + self.m(), |i, j| {
            if j < n {
                let v = self.a[(i, j)].clone();
                if i == j {
                    v - lambda.clone()
                } else {
                    v
                }
            } else {
                self.b[(i, j - n)].clone()
            }
        })
    }

    /// The system with output row `j` (zero-based) removed. Rank conditions
    /// are deliberately not re-checked.
    pub fn delete_output(&self, j: usize) -> Result<Self> {
        if j >= self.p() {
            return Err(Error::Precondition(format!(
                "output index {} out of range 1..={}",
                j + 1,
                self.p()
            )));
        }
        let keep: Vec<usize> = (0..self.p()).filter(|&i| i != j).collect();
        Ok(LtiSystem {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.select_rows(&keep),
            d: self.d.select_rows(&keep),
            domain: self.domain,
        })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LtiSystem<T> {
        LtiSystem {
            a: self.a.map(&f),
            b: self.b.map(&f),
            c: self.c.map(&f),
            d: self.d.map(&f),
            domain: self.domain,
        }
    }

    pub fn to_f64(&self) -> LtiSystem<f64> {
        self.map(Scalar::to_f64)
    }

    /// `A + BF` and `C + DF`.
    pub fn closed_loop_matrices(&self, f: &Mat<S>) -> (Mat<S>, Mat<S>) {
        (self.a.add(&self.b.mul(f)), self.c.add(&self.d.mul(f)))
    }
}

/// Outcome of the standing rank checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub dims_consistent: bool,
    /// `[B; D]` has full column rank.
    pub input_rank_ok: bool,
    /// `[C D]` has full row rank.
    pub output_rank_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.dims_consistent && self.input_rank_ok && self.output_rank_ok
    }
}

pub fn validate<S: Scalar>(sys: &LtiSystem<S>) -> ValidationReport {
    let bd = Mat::vcat(sys.m(), &[sys.b(), sys.d()]);
    let cd = Mat::hcat(sys.p(), &[sys.c(), sys.d()]);
    let dims_consistent = bd.is_ok() && cd.is_ok();
    ValidationReport {
        dims_consistent,
        input_rank_ok: bd.is_ok_and(|m| m.rank_default() == sys.m()),
        output_rank_ok: cd.is_ok_and(|m| m.rank_default() == sys.p()),
    }
}

/// An equilibrium `(x_ss, u_ss)` producing output `reference`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState<S> {
    pub x_ss: Vec<S>,
    pub u_ss: Vec<S>,
    pub reference: Vec<S>,
}

/// Residuals of the steady-state equations for a candidate pair.
pub fn steady_state_residual<S: Scalar>(
    sys: &LtiSystem<S>,
    x_ss: &[S],
    u_ss: &[S],
    r: &[S],
) -> (Vec<S>, Vec<S>) {
    let mut state = sys.a().mul_vec(x_ss);
    let bu = sys.b().mul_vec(u_ss);
    for (i, s) in state.iter_mut().enumerate() {
        *s = s.clone() + bu[i].clone();
        if sys.domain() == TimeDomain::Discrete {
            *s = s.clone() - x_ss[i].clone();
        }
    }
    let cx = sys.c().mul_vec(x_ss);
    let du = sys.d().mul_vec(u_ss);
    let output = (0..sys.p())
        .map(|i| cx[i].clone() + du[i].clone() - r[i].clone())
        .collect();
    (state, output)
}

/// Minimum-norm solution of the steady-state equations for reference `r`.
pub fn steady_state<S: Scalar>(sys: &LtiSystem<S>, r: &[S]) -> Result<SteadyState<S>> {
    if r.len() != sys.p() {
        return Err(Error::Dimension(format!(
            "reference has {} entries, expected {}",
            r.len(),
            sys.p()
        )));
    }
    let m = sys.pencil(&sys.domain().dc_point());
    let rhs: Vec<S> = std::iter::repeat_n(S::zero(), sys.n())
        .chain(r.iter().cloned())
        .collect();
    let sol = m.min_norm_solve(&rhs, S::DEFAULT_TOL).ok_or(Error::NotTrackable)?;
    let n = sys.n();
    let out = SteadyState {
        x_ss: sol[..n].to_vec(),
        u_ss: sol[n..].to_vec(),
        reference: r.to_vec(),
    };
    if !S::EXACT {
        let (st, o) = steady_state_residual(sys, &out.x_ss, &out.u_ss, r);
        let scale = 1.0 + crate::linalg::vec_max_abs(r);
        let worst = crate::linalg::vec_max_abs(&st).max(crate::linalg::vec_max_abs(&o));
        if worst > 1e-9 * scale * (1.0 + m.max_abs()) {
            return Err(Error::NotTrackable);
        }
    }
    Ok(out)
}
