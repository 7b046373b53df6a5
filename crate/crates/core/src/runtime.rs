//! Closed-loop error dynamics: construction, simulation and monotonicity
//! checks.
//!
//! With `u = u_ss + F (x - x_ss)` the error state `ξ = x - x_ss` obeys
//! `ξ' = (A + BF) ξ` (or `ξ[k+1] = (A + BF) ξ[k]`) and the tracking error is
//! `ε = y - r = (C + DF) ξ`.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::characteristic_polynomial;
use crate::linalg::Mat;
use crate::poly::{numeric_roots, Poly, Root};
use crate::rng;
use crate::scalar::Scalar;
use crate::system::{steady_state, LtiSystem, SteadyState, TimeDomain};

/// Samples per default horizon.
pub const DEFAULT_SAMPLES: usize = 400;
/// Default horizon in slowest time constants.
pub const HORIZON_TIME_CONSTANTS: f64 = 8.0;
/// Relative slack of the sampled monotonicity test.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Relative slack of the envelope test.
pub const ENVELOPE_SLACK: f64 = 1e-6;
/// Cap on discrete horizons for modes close to the unit circle.
const MAX_STEPS: usize = 100_000;

/// The autonomous error system. Construction guarantees a stable `Acl`.
#[derive(Clone, Debug)]
pub struct ClosedLoop<S> {
    pub acl: Mat<S>,
    pub ccl: Mat<S>,
    pub domain: TimeDomain,
    pub steady: SteadyState<S>,
    /// Eigenvalues of `Acl` with multiplicities.
    pub spectrum: Vec<Root<S>>,
}

impl<S: Scalar> ClosedLoop<S> {
    pub fn n(&self) -> usize {
        self.acl.rows()
    }

    pub fn p(&self) -> usize {
        self.ccl.rows()
    }

    /// Distinct real eigenvalues, as floats.
    pub fn real_modes(&self) -> Vec<f64> {
        let mut modes: Vec<f64> = self
            .spectrum
            .iter()
            .filter(|r| r.approx.im == 0.0)
            .map(|r| r.approx.re)
            .collect();
        modes.sort_by(f64::total_cmp);
        modes.dedup();
        modes
    }

    /// The slowest eigenvalue's rate: largest real part (continuous) or
    /// largest modulus (discrete).
    pub fn slowest_rate(&self) -> f64 {
        let rate = |z: &Complex64| match self.domain {
            TimeDomain::Continuous => z.re,
            TimeDomain::Discrete => z.norm(),
        };
        self.spectrum
            .iter()
            .map(|r| rate(&r.approx))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Horizon and sampling step used when the caller gives none.
    pub fn default_grid(&self) -> Grid {
        match self.domain {
            TimeDomain::Continuous => {
                let slowest = self.slowest_rate();
                let horizon = if slowest.is_finite() && slowest < 0.0 {
                    HORIZON_TIME_CONSTANTS / slowest.abs()
                } else {
                    HORIZON_TIME_CONSTANTS
                };
                Grid {
                    horizon,
                    dt: horizon / DEFAULT_SAMPLES as f64,
                }
            }
            TimeDomain::Discrete => {
                let slowest = self.slowest_rate().max(0.0);
                let steps = if slowest > 0.0 {
                    (HORIZON_TIME_CONSTANTS / slowest.ln().abs()).ceil() as usize
                } else {
                    0
                };
                let steps = steps.clamp(self.n().max(1), MAX_STEPS);
                Grid {
                    horizon: steps as f64,
                    dt: 1.0,
                }
            }
        }
    }
}

/// Builds the error system for feedback `f` and step reference `r`.
pub fn closed_loop<S: Scalar>(sys: &LtiSystem<S>, f: &Mat<S>, r: &[S]) -> Result<ClosedLoop<S>> {
    if f.shape() != (sys.m(), sys.n()) {
        return Err(Error::Dimension(format!(
            "feedback is {}x{}, expected {}x{}",
            f.rows(),
            f.cols(),
            sys.m(),
            sys.n()
        )));
    }
    let steady = steady_state(sys, r)?;
    let (acl, ccl) = sys.closed_loop_matrices(f);
    let charpoly = characteristic_polynomial(&acl);
    if !is_stable_polynomial(&charpoly, sys.domain()) {
        return Err(Error::NotStabilizing);
    }
    Ok(ClosedLoop {
        spectrum: charpoly.roots(),
        acl,
        ccl,
        domain: sys.domain(),
        steady,
    })
}

/// Whether every root lies in the open stability region. Exact scalars use
/// the Routh array (after the bilinear map in discrete time); floats use
/// numerical roots.
pub fn is_stable_polynomial<S: Scalar>(p: &Poly<S>, domain: TimeDomain) -> bool {
    if p.is_zero() {
        return false;
    }
    if !S::EXACT {
        let coeffs: Vec<f64> = p.coeffs().iter().map(Scalar::to_f64).collect();
        return numeric_roots(&coeffs).into_iter().all(|z| domain.is_stable(z));
    }
    match domain {
        TimeDomain::Continuous => routh_hurwitz(p),
        TimeDomain::Discrete => {
            let mapped = bilinear(p);
            mapped.degree() == p.degree() && routh_hurwitz(&mapped)
        }
    }
}

/// `(1 - s)^n p((1 + s) / (1 - s))`: the unit disc maps onto the open left
/// half plane. A root at `z = -1` lowers the degree.
fn bilinear<S: Scalar>(p: &Poly<S>) -> Poly<S> {
    let n = p.degree().unwrap_or(0);
    let one_plus = Poly::new(vec![S::one(), S::one()]);
    let one_minus = Poly::new(vec![S::one(), -S::one()]);
    let pow = |base: &Poly<S>, k: usize| (0..k).fold(Poly::one(), |acc, _| acc.mul(base));
    p.coeffs()
        .iter()
        .enumerate()
        .fold(Poly::zero(), |acc, (k, a)| {
            acc.add(&pow(&one_plus, k).mul(&pow(&one_minus, n - k)).scale(a))
        })
}

/// Hurwitz test: all first-column entries of the Routh array are nonzero
/// with one sign.
fn routh_hurwitz<S: Scalar>(p: &Poly<S>) -> bool {
    let Some(deg) = p.degree() else {
        return false;
    };
    let desc: Vec<S> = p.coeffs().iter().rev().cloned().collect();
    let width = deg / 2 + 1;
    let row = |start: usize| -> Vec<S> {
        (0..width)
            .map(|j| desc.get(start + 2 * j).cloned().unwrap_or_else(S::zero))
            .collect()
    };
    let mut prev = row(0);
    let mut cur = row(1);
    let positive = prev[0] > S::zero();
    for k in 1..=deg {
        if cur[0].is_zero() || (cur[0] > S::zero()) != positive {
            return false;
        }
        if k == deg {
            break;
        }
        let next: Vec<S> = (0..width)
            .map(|j| {
                let a = prev.get(j + 1).cloned().unwrap_or_else(S::zero);
                let b = cur.get(j + 1).cloned().unwrap_or_else(S::zero);
                (cur[0].clone() * a - prev[0].clone() * b) / cur[0].clone()
            })
            .collect();
        prev = std::mem::replace(&mut cur, next);
    }
    true
}

/// Simulation horizon and step. Discrete systems ignore `dt` and run
/// `horizon` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub horizon: f64,
    pub dt: f64,
}

impl Grid {
    fn times(&self, domain: TimeDomain) -> Result<Vec<f64>> {
        match domain {
            TimeDomain::Continuous => {
                if !(self.dt > 0.0 && self.horizon > 0.0) {
                    return Err(Error::Precondition("dt and horizon must be positive".into()));
                }
                let steps = (self.horizon / self.dt).round().max(1.0) as usize;
                Ok((0..=steps).map(|k| k as f64 * self.dt).collect())
            }
            TimeDomain::Discrete => {
                let steps = self.horizon.round();
                if steps < 1.0 {
                    return Err(Error::Precondition("horizon must be at least one step".into()));
                }
                Ok((0..=steps as usize).map(|k| k as f64).collect())
            }
        }
    }
}

/// Least-squares fit of one component to `gamma * envelope(mode, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeFit {
    pub gamma: f64,
    /// `None` for an identically zero component.
    pub mode: Option<f64>,
    /// `|ε - γ·envelope| / |ε|` in the 2-norm over the samples.
    pub residual: f64,
}

/// `e^{λt}` or `λ^t`.
pub fn envelope(domain: TimeDomain, lambda: f64, t: f64) -> f64 {
    match domain {
        TimeDomain::Continuous => (lambda * t).exp(),
        TimeDomain::Discrete => lambda.powi(t.round() as i32),
    }
}

/// Best single-mode fit of `values` over the candidate modes. Components
/// with `max |ε| <= zero_tol` are identically zero.
pub fn fit_single_mode(
    domain: TimeDomain,
    times: &[f64],
    values: &[f64],
    candidates: &[f64],
    zero_tol: f64,
) -> ModeFit {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if values.iter().all(|v| v.abs() <= zero_tol) {
        return ModeFit {
            gamma: 0.0,
            mode: None,
            residual: 0.0,
        };
    }
    let mut best = ModeFit {
        gamma: 0.0,
        mode: None,
        residual: 1.0,
    };
    for &lambda in candidates {
        let e: Vec<f64> = times.iter().map(|&t| envelope(domain, lambda, t)).collect();
        let ee: f64 = e.iter().map(|x| x * x).sum();
        if ee == 0.0 {
            continue;
        }
        let gamma = e.iter().zip(values).map(|(x, v)| x * v).sum::<f64>() / ee;
        let miss = e
            .iter()
            .zip(values)
            .map(|(x, v)| (v - gamma * x).powi(2))
            .sum::<f64>()
            .sqrt();
        let residual = miss / norm;
        if residual < best.residual || best.mode.is_none() {
            best = ModeFit {
                gamma,
                mode: Some(lambda),
                residual,
            };
        }
    }
    best
}

/// Sampled error trajectory with per-component single-mode fits.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationTrace {
    pub domain: TimeDomain,
    pub times: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub eps: Vec<Vec<f64>>,
    pub fits: Vec<ModeFit>,
}

impl SimulationTrace {
    /// Builds a trace from error samples alone (no state), fitting each
    /// component against `candidates`.
    pub fn from_samples(
        domain: TimeDomain,
        times: Vec<f64>,
        eps: Vec<Vec<f64>>,
        candidates: &[f64],
    ) -> Self {
        let p = eps.first().map_or(0, Vec::len);
        let scale = eps.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let fits = (0..p)
            .map(|k| {
                let column: Vec<f64> = eps.iter().map(|row| row[k]).collect();
                fit_single_mode(domain, &times, &column, candidates, 1e-12 * scale.max(1e-300))
            })
            .collect();
        SimulationTrace {
            domain,
            xi: vec![Vec::new(); times.len()],
            times,
            eps,
            fits,
        }
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.eps.iter().map(|row| row[k]).collect()
    }

    /// CSV with header `t,xi_1..xi_n,eps_1..eps_p`, numbers with 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.xi.first().map_or(0, Vec::len);
        let p = self.eps.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("xi_{i}")))
            .chain((1..=p).map(|k| format!("eps_{k}")))
            .collect();
        w.write_record(&header).map_err(std::io::Error::from)?;
        for (i, t) in self.times.iter().enumerate() {
            let record: Vec<String> = std::iter::once(t)
                .chain(&self.xi[i])
                .chain(&self.eps[i])
                .map(|v| format!("{v:.16e}"))
                .collect();
            w.write_record(&record).map_err(std::io::Error::from)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates from the plant state `x0`.
pub fn simulate<S: Scalar>(cl: &ClosedLoop<S>, x0: &[S], grid: Option<Grid>) -> Result<SimulationTrace> {
    if x0.len() != cl.n() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, expected {}",
            x0.len(),
            cl.n()
        )));
    }
    let xi0: Vec<S> = x0
        .iter()
        .zip(&cl.steady.x_ss)
        .map(|(x, s)| x.clone() - s.clone())
        .collect();
    simulate_error(cl, &xi0, grid)
}

/// Simulates from the error state `ξ(0)`.
pub fn simulate_error<S: Scalar>(
    cl: &ClosedLoop<S>,
    xi0: &[S],
    grid: Option<Grid>,
) -> Result<SimulationTrace> {
    if xi0.len() != cl.n() {
        return Err(Error::Dimension(format!(
            "error state has {} entries, expected {}",
            xi0.len(),
            cl.n()
        )));
    }
    let grid = grid.unwrap_or_else(|| cl.default_grid());
    let times = grid.times(cl.domain)?;
    let xi: Vec<Vec<f64>> = match cl.domain {
        // Iterated in the scalar type so exact runs stay exact.
        TimeDomain::Discrete => {
            let mut state = xi0.to_vec();
            let mut out = Vec::with_capacity(times.len());
            for k in 0..times.len() {
                if k > 0 {
                    state = cl.acl.mul_vec(&state);
                }
                out.push(state.iter().map(Scalar::to_f64).collect());
            }
            out
        }
        TimeDomain::Continuous => {
            let a = to_dmatrix(&cl.acl);
            let x0: Vec<f64> = xi0.iter().map(Scalar::to_f64).collect();
            match ModalSolution::new(&a, &x0) {
                Some(modal) => times.iter().map(|&t| modal.at(t)).collect(),
                None => times.iter().map(|&t| expm_apply(&a, t, &x0)).collect(),
            }
        }
    };
    let ccl = cl.ccl.to_f64();
    let eps: Vec<Vec<f64>> = xi.iter().map(|x| ccl.mul_vec(x)).collect();
    let xi_scale = xi0.iter().map(Scalar::to_f64).fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tol = 1e-9 * (1.0 + ccl.max_abs()) * xi_scale.max(f64::MIN_POSITIVE);
    let candidates = cl.real_modes();
    let fits = (0..cl.p())
        .map(|k| {
            let column: Vec<f64> = eps.iter().map(|row| row[k]).collect();
            fit_single_mode(cl.domain, &times, &column, &candidates, zero_tol)
        })
        .collect();
    Ok(SimulationTrace {
        domain: cl.domain,
        times,
        xi,
        eps,
        fits,
    })
}

fn to_dmatrix<S: Scalar>(m: &Mat<S>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].to_f64())
}

/// `ξ(t) = Σ c_i e^{λ_i t} v_i` from a well-conditioned eigenbasis.
struct ModalSolution {
    lambdas: Vec<Complex64>,
    vectors: DMatrix<Complex64>,
    coeffs: Vec<Complex64>,
}

impl ModalSolution {
    fn new(a: &DMatrix<f64>, x0: &[f64]) -> Option<Self> {
        let n = a.nrows();
        if n == 0 {
            return None;
        }
        let scale = 1.0 + a.amax();
        let mut eig: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
        eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        let mut clusters: Vec<(Complex64, usize)> = Vec::new();
        for z in eig {
            match clusters
                .iter_mut()
                .find(|(c, _)| (c - z).norm() <= 1e-6 * scale)
            {
                Some((c, k)) => {
                    *c = (*c * *k as f64 + z) / (*k as f64 + 1.0);
                    *k += 1;
                }
                None => clusters.push((z, 1)),
            }
        }
        let ac = a.map(|x| Complex64::new(x, 0.0));
        let mut lambdas = Vec::with_capacity(n);
        let mut columns = Vec::with_capacity(n);
        for (lambda, k) in clusters {
            let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * lambda;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
            for &i in order.iter().take(k) {
                if svd.singular_values[i] > 1e-8 * scale {
                    return None;
                }
                lambdas.push(lambda);
                columns.push(v_t.row(i).adjoint());
            }
        }
        let vectors = DMatrix::from_columns(&columns);
        let sv = vectors.clone().svd(false, false).singular_values;
        let (lo, hi) = sv
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
        if lo.is_nan() || lo <= 1e-10 * hi {
            return None;
        }
        let rhs = DMatrix::from_fn(n, 1, |i, _| Complex64::new(x0[i], 0.0));
        let coeffs = vectors.clone().lu().solve(&rhs)?;
        Some(ModalSolution {
            lambdas,
            coeffs: coeffs.iter().copied().collect(),
            vectors,
        })
    }

    fn at(&self, t: f64) -> Vec<f64> {
        let n = self.vectors.nrows();
        (0..n)
            .map(|i| {
                self.lambdas
                    .iter()
                    .zip(&self.coeffs)
                    .enumerate()
                    .map(|(j, (l, c))| c * (l * t).exp() * self.vectors[(i, j)])
                    .sum::<Complex64>()
                    .re
            })
            .collect()
    }
}

/// `exp(A t) x` by a Taylor series on `A t / 2^s` with unit norm, squared
/// back `s` times.
fn expm_apply(a: &DMatrix<f64>, t: f64, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let at = a * t;
    let norm = at.lp_norm(1);
    let squarings = if norm > 1.0 { norm.log2().ceil() as i32 } else { 0 };
    let scaled = at / 2f64.powi(squarings);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.amax() <= 1e-18 * sum.amax() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    let v = nalgebra::DVector::from_column_slice(x);
    (sum * v).iter().copied().collect()
}

/// Why a component failed the sampled check.
#[derive(Clone, Debug, PartialEq)]
pub enum MonotoneFailure {
    /// `|ε|` grew or `ε` crossed zero at this sample.
    NotMonotone { sample: usize },
    /// `|ε|` exceeded the envelope at this sample.
    EnvelopeExceeded { sample: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    /// Identically zero component.
    Instantaneous,
    Fail(MonotoneFailure),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Fail(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Instantaneous => "PASS-instantaneous",
            Verdict::Fail(_) => "FAIL",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentCheck {
    pub verdict: Verdict,
    pub fit: ModeFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub components: Vec<ComponentCheck>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.components.iter().all(|c| c.verdict.passed())
    }

    pub fn worst_residual(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.fit.residual)
            .fold(0.0, f64::max)
    }
}

/// Sampled monotonicity test per error component, with the envelope bound
/// `|ε_k(t)| <= |ε_k(0)| envelope(ρ, t)` when `mode_bound` is given.
pub fn check_monotone(trace: &SimulationTrace, mode_bound: Option<f64>) -> MonotonicityReport {
    let components = trace
        .fits
        .iter()
        .enumerate()
        .map(|(k, fit)| {
            let values = trace.component(k);
            let verdict = if fit.mode.is_none() {
                Verdict::Instantaneous
            } else {
                sampled_verdict(trace, &values, mode_bound)
            };
            ComponentCheck { verdict, fit: *fit }
        })
        .collect();
    MonotonicityReport { components }
}

fn sampled_verdict(trace: &SimulationTrace, values: &[f64], mode_bound: Option<f64>) -> Verdict {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = MONOTONE_SLACK * peak;
    let sign = values
        .iter()
        .find(|v| v.abs() > slack)
        .map_or(1.0, |v| v.signum());
    for i in 1..values.len() {
        let grew = values[i].abs() > values[i - 1].abs() + slack;
        let crossed = values[i] * sign < -slack;
        if grew || crossed {
            return Verdict::Fail(MonotoneFailure::NotMonotone { sample: i });
        }
    }
    if let Some(rho) = mode_bound {
        let start = values[0].abs();
        for (i, (&t, v)) in trace.times.iter().zip(values).enumerate() {
            let bound = start * envelope(trace.domain, rho, t) * (1.0 + ENVELOPE_SLACK) + slack;
            if v.abs() > bound {
                return Verdict::Fail(MonotoneFailure::EnvelopeExceeded { sample: i });
            }
        }
    }
    Verdict::Pass
}

/// Aggregate of a batch of random starts for one component.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSummary {
    pub passed: usize,
    pub failed: usize,
    pub instantaneous: usize,
    pub worst_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport {
    pub trials: usize,
    pub seed: u64,
    pub components: Vec<ComponentSummary>,
    /// `(trial, component, failure)` for every failing component.
    pub failures: Vec<(usize, usize, MonotoneFailure)>,
}

impl BatchReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn worst_residual(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.worst_residual)
            .fold(0.0, f64::max)
    }
}

/// Random error state with entries `k / 1000`, `k` in `-1000..=1000`.
pub fn random_start<S: Scalar>(n: usize, seed: u64) -> Vec<S> {
    let mut rng = rng::stream(seed, rng::streams::TRIALS);
    (0..n)
        .map(|_| S::from_ratio(rng.gen_range(-1000..=1000), 1000))
        .collect()
}

/// Simulates `trials` seeded random starts in parallel and checks each.
pub fn check_batch<S: Scalar>(
    cl: &ClosedLoop<S>,
    trials: usize,
    seed: u64,
    grid: Option<Grid>,
    mode_bound: Option<f64>,
) -> Result<BatchReport> {
    let reports = (0..trials)
        .into_par_iter()
        .map(|i| {
            let xi0 = random_start::<S>(cl.n(), rng::sub_seed(seed, i as u64));
            simulate_error(cl, &xi0, grid).map(|trace| check_monotone(&trace, mode_bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut components = vec![
        ComponentSummary {
            passed: 0,
            failed: 0,
            instantaneous: 0,
            worst_residual: 0.0,
        };
        cl.p()
    ];
    let mut failures = Vec::new();
    for (trial, report) in reports.iter().enumerate() {
        for (k, check) in report.components.iter().enumerate() {
            let summary = &mut components[k];
            summary.worst_residual = summary.worst_residual.max(check.fit.residual);
            match &check.verdict {
                Verdict::Pass => summary.passed += 1,
                Verdict::Instantaneous => summary.instantaneous += 1,
                Verdict::Fail(why) => {
                    summary.failed += 1;
                    failures.push((trial, k, why.clone()));
                }
            }
        }
    }
    Ok(BatchReport {
        trials,
        seed,
        components,
        failures,
    })
}
