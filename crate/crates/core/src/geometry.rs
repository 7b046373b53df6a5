//! Structural analysis: normal rank, invariant zeros, stabilizability and the
//! output-nulling subspaces built from pencil kernels.

use num_complex::{Complex, Complex64};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{sum_dim, Mat, Subspace};
use crate::poly::{Poly, Root};
use crate::rng::{self, streams};
use crate::scalar::Scalar;
use crate::system::{validate, LtiSystem, TimeDomain};

/// Relative rank tolerance for rank-drop tests at approximate zeros.
const APPROX_RANK_TOL: f64 = 1e-7;

/// A value where the pencil drops below its normal rank.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantZero<S> {
    pub approx: Complex64,
    /// The zero in the scalar type when representable.
    pub exact: Option<Complex<S>>,
    pub geometric_multiplicity: usize,
    pub algebraic_multiplicity: usize,
    pub minimum_phase: bool,
}

impl<S: Scalar> InvariantZero<S> {
    pub fn is_real(&self) -> bool {
        self.approx.im == 0.0
    }

    /// Whether the real value `x` is this zero.
    pub fn matches_real(&self, x: &S) -> bool {
        if !self.is_real() {
            return false;
        }
        match (&self.exact, S::EXACT) {
            (Some(z), true) => z.re == *x,
            _ => {
                let xf = x.to_f64();
                (self.approx.re - xf).abs() <= 1e-7 * (1.0 + xf.abs())
            }
        }
    }
}

/// Label of an assignable mode: a real value or a conjugate pair `re ± i·im`
/// with `im > 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Mode<S> {
    Real(S),
    Pair { re: S, im: S },
}

impl<S: Scalar> Mode<S> {
    /// The eigenvalues this label stands for.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        match self {
            Mode::Real(v) => vec![Complex64::new(v.to_f64(), 0.0)],
            Mode::Pair { re, im } => {
                let z = Complex64::new(re.to_f64(), im.to_f64());
                vec![z, z.conj()]
            }
        }
    }

    /// Monic polynomial vanishing at the eigenvalues of the label.
    pub fn polynomial(&self) -> Poly<S> {
        match self {
            Mode::Real(v) => Poly::linear(v.clone()),
            Mode::Pair { re, im } => Poly::new(vec![
                re.clone() * re.clone() + im.clone() * im.clone(),
                -(re.clone() + re.clone()),
                S::one(),
            ]),
        }
    }

    /// Real part, used to order modes by stability margin.
    pub fn real_part(&self) -> S {
        match self {
            Mode::Real(v) => v.clone(),
            Mode::Pair { re, .. } => re.clone(),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Mode::Real(_) => 1,
            Mode::Pair { .. } => 2,
        }
    }
}

/// Where a kernel block comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Kernel at a free mode; contributes to R*.
    Reachability,
    /// Kernel at a minimum-phase invariant zero.
    ZeroDirection,
}

/// Kernel of the pencil at one mode, split into state and input parts. For
/// a conjugate pair the real and imaginary parts of a complex kernel basis
/// are kept.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel<S> {
    Real { v: Mat<S>, w: Mat<S> },
    Pair { v_re: Mat<S>, v_im: Mat<S>, w_re: Mat<S>, w_im: Mat<S> },
}

impl<S: Scalar> Kernel<S> {
    /// Number of basis columns (the selector length).
    pub fn len(&self) -> usize {
        match self {
            Kernel::Real { v, .. } => v.cols(),
            Kernel::Pair { v_re, .. } => v_re.cols(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Columns `(v, w)` picked out by `selector`: one for a real kernel,
    /// `(2 Re(N h), 2 Im(N h))` for a pair.
    pub fn select(&self, selector: &[S]) -> Vec<(Vec<S>, Vec<S>)> {
        assert_eq!(selector.len(), self.len(), "selector length mismatch");
        match self {
            Kernel::Real { v, w } => vec![(v.mul_vec(selector), w.mul_vec(selector))],
            Kernel::Pair { v_re, v_im, w_re, w_im } => {
                let two = S::from_i64(2);
                let dbl = |m: &Mat<S>| -> Vec<S> {
                    m.mul_vec(selector).into_iter().map(|x| x * two.clone()).collect()
                };
                vec![(dbl(v_re), dbl(w_re)), (dbl(v_im), dbl(w_im))]
            }
        }
    }

    /// Selector reproducing a given real column `(v, w)` of a real kernel,
    /// when it lies in the kernel.
    pub fn selector_for(&self, v: &[S], w: &[S]) -> Option<Vec<S>> {
        let Kernel::Real { v: kv, w: kw } = self else {
            return None;
        };
        let stacked = Mat::vcat(kv.cols(), &[kv, kw]).ok()?;
        let target: Vec<S> = v.iter().chain(w).cloned().collect();
        let x = stacked.solve_consistent(&target, S::DEFAULT_TOL)?;
        let resid = stacked.mul_vec(&x);
        let ok = resid
            .iter()
            .zip(&target)
            .all(|(a, b)| (a.clone() - b.clone()).is_negligible(1e-9 * (1.0 + b.to_f64().abs())));
        ok.then_some(x)
    }

    /// Selector reproducing a state column alone (the input part follows
    /// from the kernel), when unique.
    pub fn selector_for_state(&self, v: &[S]) -> Option<Vec<S>> {
        let Kernel::Real { v: kv, .. } = self else {
            return None;
        };
        let x = kv.solve_consistent(v, S::DEFAULT_TOL)?;
        let resid = kv.mul_vec(&x);
        let ok = resid
            .iter()
            .zip(v)
            .all(|(a, b)| (a.clone() - b.clone()).is_negligible(1e-9 * (1.0 + b.to_f64().abs())));
        ok.then_some(x)
    }
}

/// A pencil kernel together with the mode it was computed at.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBlock<S> {
    pub mode: Mode<S>,
    pub kind: BlockKind,
    pub kernel: Kernel<S>,
}

/// Which part of a block a V*g column came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairPart {
    Single,
    Re,
    Im,
}

/// Mode label of one invariant-subspace column.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantColumn<S> {
    pub block: usize,
    pub mode: Mode<S>,
    pub kind: BlockKind,
    pub part: PairPart,
}

/// R* obtained by stacking kernels at free modes.
#[derive(Clone, Debug, PartialEq)]
pub struct RStar<S> {
    pub span: Subspace<S>,
    /// Modes used for the stacking, in order.
    pub modes: Vec<S>,
    /// Stacked state parts of all kernel columns.
    pub v: Mat<S>,
    /// Matching input parts.
    pub w: Mat<S>,
}

impl<S: Scalar> RStar<S> {
    pub fn dim(&self) -> usize {
        self.span.dim()
    }
}

/// V*g with the kernel blocks it was assembled from and a default choice of
/// selectors achieving full rank.
#[derive(Clone, Debug, PartialEq)]
pub struct VStarG<S> {
    pub blocks: Vec<KernelBlock<S>>,
    pub selectors: Vec<Vec<S>>,
    /// Selected state columns (n × h).
    pub v: Mat<S>,
    /// Companion input columns (m × h).
    pub w: Mat<S>,
    pub labels: Vec<InvariantColumn<S>>,
    pub span: Subspace<S>,
}

impl<S: Scalar> VStarG<S> {
    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    /// Columns, companion inputs and labels for explicit selectors.
    pub fn columns_for(&self, selectors: &[Vec<S>]) -> Result<BlockColumns<S>> {
        block_columns(&self.blocks, selectors)
    }
}

/// State columns, input columns and labels selected from kernel blocks.
pub type BlockColumns<S> = (Vec<Vec<S>>, Vec<Vec<S>>, Vec<InvariantColumn<S>>);

/// Applies one selector per kernel block. Zero selectors are rejected.
pub fn block_columns<S: Scalar>(
    blocks: &[KernelBlock<S>],
    selectors: &[Vec<S>],
) -> Result<BlockColumns<S>> {
    if selectors.len() != blocks.len() {
        return Err(Error::Precondition(format!(
            "{} invariant selectors for {} kernel blocks",
            selectors.len(),
            blocks.len()
        )));
    }
    let mut vs = Vec::new();
    let mut ws = Vec::new();
    let mut labels = Vec::new();
    for (bi, (block, sel)) in blocks.iter().zip(selectors).enumerate() {
        if sel.len() != block.kernel.len() {
            return Err(Error::Precondition(format!(
                "selector {} has length {}, kernel block has {} columns",
                bi + 1,
                sel.len(),
                block.kernel.len()
            )));
        }
        if sel.iter().all(|x| x.is_zero()) {
            return Err(Error::Precondition(format!("selector {} is zero", bi + 1)));
        }
        let cols = block.kernel.select(sel);
        let parts: &[PairPart] = if cols.len() == 1 {
            &[PairPart::Single]
        } else {
            &[PairPart::Re, PairPart::Im]
        };
        for ((v, w), part) in cols.into_iter().zip(parts) {
            vs.push(v);
            ws.push(w);
            labels.push(InvariantColumn {
                block: bi,
                mode: block.mode.clone(),
                kind: block.kind,
                part: *part,
            });
        }
    }
    Ok((vs, ws, labels))
}

/// Kernel of a pencil of Σ_j at a visible mode, with visibility coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct VisibleKernel<S> {
    pub output: usize,
    pub lambda: S,
    /// State parts (n × k).
    pub v: Mat<S>,
    /// Input parts (m × k).
    pub w: Mat<S>,
    /// `C_j v + D_j w` for each kernel column.
    pub beta: Vec<S>,
    pub span: Subspace<S>,
}

impl<S: Scalar> VisibleKernel<S> {
    pub fn as_kernel(&self) -> Kernel<S> {
        Kernel::Real {
            v: self.v.clone(),
            w: self.w.clone(),
        }
    }
}

/// Uncontrollable eigenvalues of `A` and the stabilizability verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Stabilizability<S> {
    pub stabilizable: bool,
    pub uncontrollable_modes: Vec<Root<S>>,
}

/// Everything the synthesis stage needs to know about a plant.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralReport<S> {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub domain: TimeDomain,
    pub normal_rank: usize,
    pub right_invertible: bool,
    pub stabilizable: bool,
    pub zeros: Vec<InvariantZero<S>>,
    pub uncontrollable_modes: Vec<Root<S>>,
    pub assumption1: bool,
    pub assumption2: bool,
    pub r_star: RStar<S>,
    /// Absent when assumption 2 fails.
    pub v_star_g: Option<VStarG<S>>,
    pub seed: u64,
}

impl<S: Scalar> StructuralReport<S> {
    pub fn r(&self) -> usize {
        self.r_star.dim()
    }

    pub fn h(&self) -> Option<usize> {
        self.v_star_g.as_ref().map(VStarG::dim)
    }

    pub fn minimum_phase_zeros(&self) -> impl Iterator<Item = &InvariantZero<S>> {
        self.zeros.iter().filter(|z| z.minimum_phase)
    }

    pub fn is_zero(&self, x: &S) -> bool {
        self.zeros.iter().any(|z| z.matches_real(x))
    }

    pub fn is_minimum_phase_zero(&self, x: &S) -> bool {
        self.minimum_phase_zeros().any(|z| z.matches_real(x))
    }
}

fn stacked_rank_tol<S: Scalar>() -> f64 {
    S::DEFAULT_TOL
}

/// Maximum pencil rank over `2(n+1)` seeded random rational probes.
pub fn normal_rank<S: Scalar>(sys: &LtiSystem<S>, seed: u64) -> usize {
    let mut rng = rng::stream(seed, streams::NORMAL_RANK);
    let mut probes: Vec<S> = Vec::new();
    while probes.len() < 2 * (sys.n() + 1) {
        let x: S = rng::small_rational(&mut rng, -97, 97, 13);
        if !probes.contains(&x) {
            probes.push(x);
        }
    }
    probes
        .iter()
        .map(|x| sys.pencil(x).rank_default())
        .max()
        .unwrap_or(0)
}

/// Rank of a pencil-like family at a possibly complex, possibly inexact
/// point. `real` builds the matrix at a real value, `doubled` its real form
/// at `re + i·im` (whose rank is twice the complex rank).
fn rank_at<S: Scalar>(
    approx: Complex64,
    exact: Option<&Complex<S>>,
    real: impl Fn(&S) -> Mat<S>,
    doubled: impl Fn(&S, &S) -> Mat<S>,
    real_f: impl Fn(f64) -> Mat<f64>,
    doubled_f: impl Fn(f64, f64) -> Mat<f64>,
) -> usize {
    match exact.filter(|_| S::EXACT) {
        Some(z) if z.im.is_zero() => real(&z.re).rank(0.0),
        Some(z) => doubled(&z.re, &z.im).rank(0.0) / 2,
        None if approx.im == 0.0 => real_f(approx.re).rank(APPROX_RANK_TOL),
        None => doubled_f(approx.re, approx.im).rank(APPROX_RANK_TOL) / 2,
    }
}

fn pencil_rank_at<S: Scalar>(
    sys: &LtiSystem<S>,
    sys_f: &LtiSystem<f64>,
    approx: Complex64,
    exact: Option<&Complex<S>>,
) -> usize {
    rank_at(
        approx,
        exact,
        |x| sys.pencil(x),
        |re, im| sys.pencil_doubled(re, im),
        |x| sys_f.pencil(&x),
        |re, im| sys_f.pencil_doubled(&re, &im),
    )
}

/// Determinant polynomial of one random square compression of the pencil.
fn compressed_determinant<S: Scalar>(
    sys: &LtiSystem<S>,
    rank: usize,
    rng: &mut impl Rng,
) -> Poly<S> {
    let (rows, cols) = (sys.n() + sys.p(), sys.n() + sys.m());
    let left: Mat<S> = if rank == rows {
        Mat::identity(rows)
    } else {
        Mat::from_fn(rank, rows, |_, _| S::from_i64(rng.gen_range(-5..=5)))
    };
    let right: Mat<S> = if rank == cols {
        Mat::identity(cols)
    } else {
        Mat::from_fn(cols, rank, |_, _| S::from_i64(rng.gen_range(-5..=5)))
    };
    let n = sys.n() as i64;
    let xs: Vec<S> = (0..=n).map(|k| S::from_i64(k - n / 2)).collect();
    let ys: Vec<S> = xs
        .iter()
        .map(|x| left.mul(&sys.pencil(x)).mul(&right).det())
        .collect();
    Poly::interpolate(&xs, &ys)
}

fn same_root<S: Scalar>(a: &Root<S>, b: &Root<S>) -> bool {
    match (&a.exact, &b.exact) {
        (Some(x), Some(y)) if S::EXACT => x == y,
        _ => (a.approx - b.approx).norm() <= 1e-6 * (1.0 + a.approx.norm()),
    }
}

/// Invariant zeros from two independently squared-down pencils, each root
/// confirmed by a rank drop of the original pencil.
pub fn invariant_zeros<S: Scalar>(sys: &LtiSystem<S>, seed: u64) -> Result<Vec<InvariantZero<S>>> {
    let rank = normal_rank(sys, seed);
    if rank == 0 {
        return Ok(Vec::new());
    }
    let sys_f = sys.to_f64();
    let mut rng = rng::stream(seed, streams::COMPRESSION);
    let mut dets = Vec::new();
    let mut attempts = 0;
    while dets.len() < 2 {
        attempts += 1;
        if attempts > 10 + 1 {
            return Err(Error::DegenerateCompression(10));
        }
        let d = compressed_determinant(sys, rank, &mut rng);
        if !d.is_zero() {
            dets.push(d);
        }
    }
    let confirmed = |poly: &Poly<S>| -> Vec<(Root<S>, usize)> {
        poly.roots()
            .into_iter()
            .filter_map(|r| {
                let rk = pencil_rank_at(sys, &sys_f, r.approx, r.exact.as_ref());
                (rk < rank).then_some((r, rank - rk))
            })
            .collect()
    };
    let first = confirmed(&dets[0]);
    let second = confirmed(&dets[1]);
    let domain = sys.domain();
    let mut zeros: Vec<InvariantZero<S>> = first
        .into_iter()
        .filter_map(|(r, geo)| {
            let other = second.iter().find(|(o, _)| same_root(&r, o))?;
            let minimum_phase = match (&r.exact, S::EXACT) {
                (Some(z), true) => domain.is_stable_exact(z),
                _ => domain.is_stable(r.approx),
            };
            Some(InvariantZero {
                approx: r.approx,
                exact: r.exact.clone(),
                geometric_multiplicity: geo,
                algebraic_multiplicity: r.multiplicity.min(other.0.multiplicity),
                minimum_phase,
            })
        })
        .collect();
    zeros.sort_by(|a, b| {
        (a.approx.re, a.approx.im)
            .partial_cmp(&(b.approx.re, b.approx.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(zeros)
}

/// Characteristic polynomial `det(xI - A)` by interpolation.
pub fn characteristic_polynomial<S: Scalar>(a: &Mat<S>) -> Poly<S> {
    let n = a.rows() as i64;
    let xs: Vec<S> = (0..=n).map(|k| S::from_i64(k - n / 2)).collect();
    let ys: Vec<S> = xs
        .iter()
        .map(|x| Mat::identity(a.rows()).scale(x).sub(a).det())
        .collect();
    Poly::interpolate(&xs, &ys)
}

/// Eigenvalues of `A` that fail the rank test on `[A - λI, B]`.
pub fn stabilizability<S: Scalar>(sys: &LtiSystem<S>) -> Stabilizability<S> {
    let sys_f = sys.to_f64();
    let n = sys.n();
    let uncontrollable: Vec<Root<S>> = characteristic_polynomial(sys.a())
        .roots()
        .into_iter()
        .filter(|r| {
            let rk = rank_at(
                r.approx,
                r.exact.as_ref(),
                |x| sys.control_pencil(x),
                |re, im| doubled_control(sys, re, im),
                |x| sys_f.control_pencil(&x),
                |re, im| doubled_control(&sys_f, &re, &im),
            );
            rk < n
        })
        .collect();
    let domain = sys.domain();
    let stabilizable = uncontrollable.iter().all(|r| match (&r.exact, S::EXACT) {
        (Some(z), true) => domain.is_stable_exact(z),
        _ => domain.is_stable(r.approx),
    });
    Stabilizability {
        stabilizable,
        uncontrollable_modes: uncontrollable,
    }
}

fn doubled_control<S: Scalar>(sys: &LtiSystem<S>, re: &S, im: &S) -> Mat<S> {
    let p = sys.control_pencil(re);
    let (r, c) = p.shape();
    let n = sys.n();
    Mat::from_fn(2 * r, 2 * c, |i, j| {
        let (bi, bj, li, lj) = (i / r, j / c, i % r, j % c);
        if bi == bj {
            p[(li, lj)].clone()
        } else if li == lj && lj < n {
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

/// Deterministic, unbounded supply of distinct admissible free modes that
/// avoid the invariant zeros: negative rationals in continuous time,
/// rationals in (0, 1) in discrete time.
pub struct ModePool<S> {
    rng: rand_chacha::ChaCha8Rng,
    domain: TimeDomain,
    avoid: Vec<Complex64>,
    issued: Vec<S>,
}

impl<S: Scalar> ModePool<S> {
    pub fn new(domain: TimeDomain, zeros: &[InvariantZero<S>], seed: u64) -> Self {
        ModePool {
            rng: rng::stream(seed, streams::MU_POOL),
            domain,
            avoid: zeros.iter().map(|z| z.approx).collect(),
            issued: Vec::new(),
        }
    }

    /// Also avoid `x` from now on.
    pub fn exclude(&mut self, x: &S) {
        self.avoid.push(Complex64::new(x.to_f64(), 0.0));
    }
}

impl<S: Scalar> Iterator for ModePool<S> {
    type Item = S;

    fn next(&mut self) -> Option<S> {
        loop {
            let x: S = match self.domain {
                TimeDomain::Continuous => rng::small_rational(&mut self.rng, -60, -1, 7),
                TimeDomain::Discrete => {
                    let den = self.rng.gen_range(2..=17);
                    S::from_ratio(self.rng.gen_range(1..den), den)
                }
            };
            let xf = x.to_f64();
            let near_zero = self
                .avoid
                .iter()
                .any(|z| (z - Complex64::new(xf, 0.0)).norm() <= 1e-6);
            if !near_zero && !self.issued.contains(&x) {
                self.issued.push(x.clone());
                return Some(x);
            }
        }
    }
}

fn split_kernel<S: Scalar>(kernel: &Mat<S>, n: usize, m: usize) -> (Mat<S>, Mat<S>) {
    let k = kernel.cols();
    (kernel.block(0, n, 0, k), kernel.block(n, n + m, 0, k))
}

fn nullspace_at<S: Scalar>(mat: &Mat<S>) -> Mat<S> {
    mat.nullspace(if S::EXACT { 0.0 } else { APPROX_RANK_TOL })
}

/// Kernel of the pencil of `sys` at real `x`.
pub fn real_kernel<S: Scalar>(sys: &LtiSystem<S>, x: &S) -> Kernel<S> {
    let (v, w) = split_kernel(&nullspace_at(&sys.pencil(x)), sys.n(), sys.m());
    Kernel::Real { v, w }
}

/// Complex kernel of the pencil at `re + i·im`, as real and imaginary parts
/// of a complex basis extracted from the doubled real system.
pub fn pair_kernel<S: Scalar>(sys: &LtiSystem<S>, re: &S, im: &S) -> Kernel<S> {
    let k = nullspace_at(&sys.pencil_doubled(re, im));
    let half = sys.n() + sys.m();
    let tol = if S::EXACT { 0.0 } else { APPROX_RANK_TOL };
    let mut span: Mat<S> = Mat::zeros(2 * half, 0);
    let mut chosen: Vec<usize> = Vec::new();
    for j in 0..k.cols() {
        let col = Mat::column_vector(k.col(j));
        let trial = Mat::hcat(2 * half, &[&span, &col]).expect("same height");
        if trial.rank(tol) > span.cols() {
            // Multiplication by i maps (x_re, x_im) to (-x_im, x_re).
            let rotated: Vec<S> = (0..2 * half)
                .map(|i| {
                    if i < half {
                        -k[(i + half, j)].clone()
                    } else {
                        k[(i - half, j)].clone()
                    }
                })
                .collect();
            span = Mat::hcat(2 * half, &[&trial, &Mat::column_vector(rotated)]).expect("same height");
            chosen.push(j);
        }
    }
    let basis = k.select_cols(&chosen);
    let (n, m) = (sys.n(), sys.m());
    let g = chosen.len();
    Kernel::Pair {
        v_re: basis.block(0, n, 0, g),
        w_re: basis.block(n, n + m, 0, g),
        v_im: basis.block(half, half + n, 0, g),
        w_im: basis.block(half + n, half + n + m, 0, g),
    }
}

/// Grows a stacked basis kernel by kernel until one more mode adds nothing.
fn stack_until_stable<S: Scalar>(
    n: usize,
    m: usize,
    modes: &mut dyn Iterator<Item = S>,
    kernel_at: impl Fn(&S) -> (Mat<S>, Mat<S>),
) -> (Vec<S>, Mat<S>, Mat<S>) {
    let tol = stacked_rank_tol::<S>();
    let mut v: Mat<S> = Mat::zeros(n, 0);
    let mut w: Mat<S> = Mat::zeros(m, 0);
    let mut used = Vec::new();
    let mut dim = 0;
    for mu in modes {
        let (kv, kw) = kernel_at(&mu);
        let next_v = Mat::hcat(n, &[&v, &kv]).expect("same height");
        let next_dim = next_v.rank(tol);
        if next_dim == dim {
            break;
        }
        v = next_v;
        w = Mat::hcat(m, &[&w, &kw]).expect("same height");
        used.push(mu);
        dim = next_dim;
        if dim == n {
            break;
        }
    }
    (used, v, w)
}

/// R* by stacking kernels of the pencil at modes drawn from `pool`.
pub fn r_star<S: Scalar>(sys: &LtiSystem<S>, pool: &mut dyn Iterator<Item = S>) -> RStar<S> {
    let (n, m) = (sys.n(), sys.m());
    let (modes, v, w) = stack_until_stable(n, m, pool, |mu| {
        split_kernel(&nullspace_at(&sys.pencil(mu)), n, m)
    });
    RStar {
        span: Subspace::span(&v, stacked_rank_tol::<S>()),
        modes,
        v,
        w,
    }
}

fn require_exact_zero<S: Scalar>(z: &InvariantZero<S>) -> Result<&Complex<S>> {
    z.exact
        .as_ref()
        .ok_or_else(|| Error::InexactZero(format!("{:.12}{:+.12}i", z.approx.re, z.approx.im)))
}

/// Kernel blocks of V*g: one per free mode in `mu_assign`, then one per
/// minimum-phase zero (one per conjugate pair).
pub fn v_star_g_blocks<S: Scalar>(
    sys: &LtiSystem<S>,
    zeros: &[InvariantZero<S>],
    mu_assign: &[S],
) -> Result<Vec<KernelBlock<S>>> {
    let domain = sys.domain();
    if zeros
        .iter()
        .any(|z| z.minimum_phase && z.algebraic_multiplicity > 1)
    {
        return Err(Error::CoincidentZeros);
    }
    for (i, mu) in mu_assign.iter().enumerate() {
        if !domain.is_stable_exact(&Complex::new(mu.clone(), S::zero())) {
            return Err(Error::Precondition(format!("free mode {mu} is not stable and real")));
        }
        if mu_assign[..i].contains(mu) {
            return Err(Error::Precondition(format!("free mode {mu} repeated")));
        }
        if zeros.iter().any(|z| !z.minimum_phase && z.matches_real(mu)) {
            return Err(Error::Precondition(format!("free mode {mu} is an invariant zero")));
        }
    }
    let mut blocks: Vec<KernelBlock<S>> = mu_assign
        .iter()
        .map(|mu| KernelBlock {
            mode: Mode::Real(mu.clone()),
            kind: BlockKind::Reachability,
            kernel: real_kernel(sys, mu),
        })
        .collect();
    for z in zeros.iter().filter(|z| z.minimum_phase && z.approx.im >= 0.0) {
        let value = require_exact_zero(z)?;
        let block = if z.is_real() {
            KernelBlock {
                mode: Mode::Real(value.re.clone()),
                kind: BlockKind::ZeroDirection,
                kernel: real_kernel(sys, &value.re),
            }
        } else {
            KernelBlock {
                mode: Mode::Pair {
                    re: value.re.clone(),
                    im: value.im.clone(),
                },
                kind: BlockKind::ZeroDirection,
                kernel: pair_kernel(sys, &value.re, &value.im),
            }
        };
        blocks.push(block);
    }
    Ok(blocks)
}

/// V*g from kernels at the free modes `mu_assign` (one per dimension of R*)
/// and at the minimum-phase zeros, with random selectors resampled until the
/// selected columns reach the full dimension.
pub fn v_star_g<S: Scalar>(
    sys: &LtiSystem<S>,
    zeros: &[InvariantZero<S>],
    mu_assign: &[S],
    seed: u64,
) -> Result<VStarG<S>> {
    let blocks = v_star_g_blocks(sys, zeros, mu_assign)?;
    let n = sys.n();
    let tol = stacked_rank_tol::<S>();
    let all: Vec<Mat<S>> = blocks
        .iter()
        .flat_map(|b| match &b.kernel {
            Kernel::Real { v, .. } => vec![v.clone()],
            Kernel::Pair { v_re, v_im, .. } => vec![v_re.clone(), v_im.clone()],
        })
        .collect();
    let refs: Vec<&Mat<S>> = all.iter().collect();
    let h = Mat::hcat(n, &refs)?.rank(tol);
    let columns: usize = blocks.iter().map(|b| b.mode.width()).sum();
    if columns != h {
        return Err(Error::Precondition(format!(
            "{columns} selected columns cannot span V*g of dimension {h}; supply one free mode per dimension of R*"
        )));
    }
    let mut shell = VStarG {
        blocks,
        selectors: Vec::new(),
        v: Mat::zeros(n, 0),
        w: Mat::zeros(sys.m(), 0),
        labels: Vec::new(),
        span: Subspace::zero(n, tol),
    };
    let mut rng = rng::stream(seed, streams::SELECTORS);
    for _ in 0..100 {
        let selectors: Vec<Vec<S>> = shell
            .blocks
            .iter()
            .map(|b| rng::selector(&mut rng, b.kernel.len()))
            .collect();
        if selectors.iter().any(Vec::is_empty) {
            return Err(Error::Precondition("empty kernel block in V*g".into()));
        }
        let (vs, ws, labels) = shell.columns_for(&selectors)?;
        let v = Mat::from_fn(n, vs.len(), |i, j| vs[j][i].clone());
        if v.rank(tol) == h {
            shell.w = Mat::from_fn(sys.m(), ws.len(), |i, j| ws[j][i].clone());
            shell.span = Subspace::new(v.clone(), tol)?;
            shell.v = v;
            shell.labels = labels;
            shell.selectors = selectors;
            return Ok(shell);
        }
    }
    Err(Error::RetriesExhausted(
        "no selector choice reached full V*g rank in 100 tries".into(),
    ))
}

/// Kernel of the pencil of Σ_j (output `j` removed) at the real mode
/// `lambda`, with the visibility coefficient of every kernel column.
pub fn r_star_j_at<S: Scalar>(
    sys: &LtiSystem<S>,
    zeros: &[InvariantZero<S>],
    j: usize,
    lambda: &S,
) -> Result<VisibleKernel<S>> {
    if zeros.iter().any(|z| z.matches_real(lambda)) {
        return Err(Error::Precondition(format!("{lambda} is an invariant zero")));
    }
    let sub = sys.delete_output(j)?;
    let (v, w) = split_kernel(&nullspace_at(&sub.pencil(lambda)), sys.n(), sys.m());
    let beta = visibility(sys, j, &v, &w);
    let span = Subspace::span(&v, stacked_rank_tol::<S>());
    Ok(VisibleKernel {
        output: j,
        lambda: lambda.clone(),
        v,
        w,
        beta,
        span,
    })
}

/// `C_j v + D_j w` column by column.
pub fn visibility<S: Scalar>(sys: &LtiSystem<S>, j: usize, v: &Mat<S>, w: &Mat<S>) -> Vec<S> {
    (0..v.cols())
        .map(|k| {
            let cv = (0..sys.n()).fold(S::zero(), |acc, i| acc + sys.c()[(j, i)].clone() * v[(i, k)].clone());
            (0..sys.m()).fold(cv, |acc, i| acc + sys.d()[(j, i)].clone() * w[(i, k)].clone())
        })
        .collect()
}

/// R*_j by stacking kernels of the Σ_j pencil at pool modes.
pub fn r_star_j_full<S: Scalar>(
    sys: &LtiSystem<S>,
    j: usize,
    pool: &mut dyn Iterator<Item = S>,
) -> Result<Subspace<S>> {
    let sub = sys.delete_output(j)?;
    let (n, m) = (sys.n(), sys.m());
    let (_, v, _) = stack_until_stable(n, m, pool, |mu| {
        split_kernel(&nullspace_at(&sub.pencil(mu)), n, m)
    });
    Ok(Subspace::span(&v, stacked_rank_tol::<S>()))
}

/// Full structural analysis. Inexact minimum-phase zeros are an error in
/// exact mode; a failed assumption 2 leaves `v_star_g` empty.
pub fn structural_report<S: Scalar>(sys: &LtiSystem<S>, seed: u64) -> Result<StructuralReport<S>> {
    let validation = validate(sys);
    if !validation.passed() {
        return Err(Error::Precondition(format!(
            "system fails validation: [B;D] full column rank = {}, [C D] full row rank = {}",
            validation.input_rank_ok, validation.output_rank_ok
        )));
    }
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let normal_rank = normal_rank(sys, seed);
    let zeros = invariant_zeros(sys, seed)?;
    let stab = stabilizability(sys);
    let right_invertible = normal_rank == n + p;
    let dc = sys.domain().dc_point::<S>();
    let assumption1 = right_invertible && stab.stabilizable && !zeros.iter().any(|z| z.matches_real(&dc));
    let assumption2 = zeros
        .iter()
        .filter(|z| z.minimum_phase)
        .all(|z| z.algebraic_multiplicity == 1);
    let mut pool = ModePool::new(sys.domain(), &zeros, seed);
    let r_star = r_star(sys, &mut pool);
    let v_star_g = if assumption2 {
        let mu: Vec<S> = ModePool::new(sys.domain(), &zeros, seed).take(r_star.dim()).collect();
        Some(v_star_g(sys, &zeros, &mu, seed)?)
    } else {
        None
    };
    Ok(StructuralReport {
        n,
        m,
        p,
        domain: sys.domain(),
        normal_rank,
        right_invertible,
        stabilizable: stab.stabilizable,
        zeros,
        uncontrollable_modes: stab.uncontrollable_modes,
        assumption1,
        assumption2,
        r_star,
        v_star_g,
        seed,
    })
}

/// Dimension of V*g plus a list of subspaces.
pub fn sum_with<S: Scalar>(base: &Subspace<S>, parts: &[&Subspace<S>]) -> Result<usize> {
    let mut all = vec![base];
    all.extend_from_slice(parts);
    sum_dim(&all)
}
