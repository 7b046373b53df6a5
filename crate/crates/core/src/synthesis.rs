//! Solvability checks and construction of feedback matrices under which every
//! tracking-error component evolves along a single real mode or vanishes.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, FailedSubset, Result};
use crate::geometry::{
    block_columns, characteristic_polynomial, r_star_j_at, r_star_j_full, v_star_g_blocks,
    BlockKind, InvariantColumn, KernelBlock, Mode, ModePool, PairPart, StructuralReport,
    VisibleKernel,
};
use crate::linalg::{Mat, Subspace};
use crate::poly::Poly;
use crate::rng::{self, streams};
use crate::scalar::Scalar;
use crate::system::{LtiSystem, TimeDomain};

/// Largest output count for which subset conditions are enumerated.
pub const MAX_OUTPUTS: usize = 20;

/// Attempts made by the randomized drivers before giving up.
pub const MAX_RETRIES: usize = 100;

/// Visibility coefficients at or below this magnitude count as zero in
/// float mode.
const BETA_TOL: f64 = 1e-9;

/// Requested closed-loop modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSelection<S> {
    /// One real visible mode per output; repetitions are allowed.
    pub visible: Vec<S>,
    /// Distinct real stable modes for the R* part. Left empty, defaults are
    /// chosen by [`ModeSelection::resolve`].
    pub invisible_free: Vec<S>,
    /// Minimum-phase zeros of the plant, filled in by `resolve`.
    pub zero_modes: Vec<Mode<S>>,
    /// Optional bound on the visible modes.
    pub rate: Option<S>,
}

impl<S: Scalar> ModeSelection<S> {
    pub fn new(visible: Vec<S>) -> Self {
        ModeSelection {
            visible,
            invisible_free: Vec::new(),
            zero_modes: Vec::new(),
            rate: None,
        }
    }

    pub fn with_invisible(mut self, invisible: Vec<S>) -> Self {
        self.invisible_free = invisible;
        self
    }

    pub fn with_rate(mut self, rate: S) -> Self {
        self.rate = Some(rate);
        self
    }

    /// Validates against the plant and fills in the zero modes and, when
    /// none were given, one free mode per dimension of R*: the distinct
    /// visible modes first, then seeded pool values.
    pub fn resolve(&self, report: &StructuralReport<S>, seed: u64) -> Result<Self> {
        let domain = report.domain;
        if self.visible.len() != report.p {
            return Err(Error::Precondition(format!(
                "{} visible modes given for {} outputs",
                self.visible.len(),
                report.p
            )));
        }
        if let Some(rate) = &self.rate {
            if !domain.admits_visible(rate) {
                return Err(Error::Precondition(format!(
                    "rate bound {rate} is outside the admissible region"
                )));
            }
        }
        for (j, lambda) in self.visible.iter().enumerate() {
            if !domain.admits_visible(lambda) {
                return Err(Error::Precondition(format!(
                    "visible mode {lambda} of output {} is not admissible in {} time",
                    j + 1,
                    domain.name()
                )));
            }
            if report.is_zero(lambda) {
                return Err(Error::Precondition(format!(
                    "visible mode {lambda} of output {} is an invariant zero",
                    j + 1
                )));
            }
            if self.rate.as_ref().is_some_and(|rate| lambda > rate) {
                return Err(Error::Precondition(format!(
                    "visible mode {lambda} of output {} exceeds the rate bound",
                    j + 1
                )));
            }
        }
        let r = report.r();
        let invisible_free = if self.invisible_free.is_empty() {
            let mut chosen: Vec<S> = Vec::new();
            for lambda in &self.visible {
                if chosen.len() < r && !chosen.contains(lambda) {
                    chosen.push(lambda.clone());
                }
            }
            let mut pool = ModePool::new(domain, &report.zeros, seed);
            while chosen.len() < r {
                let mu = pool.next().expect("pool is unbounded");
                if !chosen.contains(&mu) {
                    chosen.push(mu);
                }
            }
            chosen
        } else if self.invisible_free.len() != r {
            return Err(Error::Precondition(format!(
                "{} free invisible modes given, R* has dimension {r}",
                self.invisible_free.len()
            )));
        } else {
            self.invisible_free.clone()
        };
        let zero_modes = report
            .minimum_phase_zeros()
            .filter(|z| z.approx.im >= 0.0)
            .filter_map(|z| z.exact.as_ref())
            .map(|z| {
                if z.im.is_zero() {
                    Mode::Real(z.re.clone())
                } else {
                    Mode::Pair {
                        re: z.re.clone(),
                        im: z.im.clone(),
                    }
                }
            })
            .collect();
        Ok(ModeSelection {
            visible: self.visible.clone(),
            invisible_free,
            zero_modes,
            rate: self.rate.clone(),
        })
    }
}

/// How the square set of retained columns is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColumnStrategy {
    /// Keep every invariant column, then visible columns in output order
    /// while the rank grows.
    PreferInvariant,
    /// Keep the listed outputs (zero-based) visible, then invariant columns
    /// by decreasing stability margin, then the remaining visible columns.
    ForceVisible(Vec<usize>),
    /// Zero-based column indices into the assembled candidate.
    Explicit(Vec<usize>),
}

/// Free parameters of the feedback family.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet<S> {
    /// One selector per kernel block of V*g: the free-mode blocks, then the
    /// zero-direction blocks.
    pub invariant_selectors: Vec<Vec<S>>,
    /// One selector per output for its visible kernel.
    pub visible_selectors: Vec<Vec<S>>,
    pub strategy: ColumnStrategy,
    pub seed: u64,
}

/// Which solvability question was asked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// Visible modes fixed in advance.
    FixedModes,
    /// Visible modes free (almost all choices).
    Structural,
}

/// One evaluated subset condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetCheck {
    /// Zero-based output indices.
    pub outputs: Vec<usize>,
    pub achieved: usize,
    pub required: usize,
}

impl SubsetCheck {
    pub fn passed(&self) -> bool {
        self.achieved >= self.required
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolvabilityReport {
    pub problem: Problem,
    pub solvable: bool,
    /// Dimension of V*g.
    pub h: usize,
    /// `n - p`.
    pub baseline: usize,
    pub checked: Vec<SubsetCheck>,
    pub failed_subsets: Vec<FailedSubset>,
}

impl SolvabilityReport {
    /// Human-readable reason for an unsolvable verdict.
    pub fn reason(&self) -> String {
        if self.solvable {
            return "solvable".into();
        }
        if self.h < self.baseline {
            return format!(
                "dim V*g = {} < n - p = {}: some error component must mix modes",
                self.h, self.baseline
            );
        }
        let list: Vec<String> = self
            .failed_subsets
            .iter()
            .map(|f| {
                let outs: Vec<String> = f.outputs.iter().map(|j| (j + 1).to_string()).collect();
                format!("{{{}}}: {} < {}", outs.join(","), f.achieved, f.required)
            })
            .collect();
        format!("subset dimension conditions fail: {}", list.join("; "))
    }

    pub fn into_error(self) -> Error {
        Error::Unsolvable {
            reason: self.reason(),
            failed_subsets: self.failed_subsets,
        }
    }
}

fn require_assumptions<S: Scalar>(report: &StructuralReport<S>) -> Result<usize> {
    if !report.assumption1 {
        return Err(Error::Precondition(
            "the plant must be right invertible, stabilizable and free of zeros at the DC point"
                .into(),
        ));
    }
    if !report.assumption2 {
        return Err(Error::Precondition(
            "minimum-phase invariant zeros must be simple".into(),
        ));
    }
    Ok(report.h().expect("V*g present when assumption 2 holds"))
}

/// Evaluates `dim(V*g + Σ_{j∈S} subspaces[j]) >= (n - p) + |S|` for every
/// subset larger than `h - (n - p)`.
fn subset_conditions<S: Scalar>(
    problem: Problem,
    report: &StructuralReport<S>,
    v_star_g: &Subspace<S>,
    subspaces: &[Subspace<S>],
) -> Result<SolvabilityReport> {
    let (n, p) = (report.n, report.p);
    let h = v_star_g.dim();
    let baseline = n.saturating_sub(p);
    if h < baseline {
        return Ok(SolvabilityReport {
            problem,
            solvable: false,
            h,
            baseline,
            checked: Vec::new(),
            failed_subsets: vec![FailedSubset {
                outputs: Vec::new(),
                achieved: h,
                required: baseline,
            }],
        });
    }
    let excess = h - baseline;
    let mut subsets: Vec<Vec<usize>> = (1u32..(1u32 << p))
        .map(|mask| (0..p).filter(|j| mask & (1 << j) != 0).collect::<Vec<_>>())
        .filter(|s| s.len() > excess)
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut checked = Vec::with_capacity(subsets.len());
    for outputs in subsets {
        let mut parts = vec![v_star_g];
        parts.extend(outputs.iter().map(|&j| &subspaces[j]));
        let achieved = crate::linalg::sum_dim(&parts)?;
        checked.push(SubsetCheck {
            required: baseline + outputs.len(),
            outputs,
            achieved,
        });
    }
    let failed_subsets: Vec<FailedSubset> = checked
        .iter()
        .filter(|c| !c.passed())
        .map(|c| FailedSubset {
            outputs: c.outputs.clone(),
            achieved: c.achieved,
            required: c.required,
        })
        .collect();
    Ok(SolvabilityReport {
        problem,
        solvable: failed_subsets.is_empty(),
        h,
        baseline,
        checked,
        failed_subsets,
    })
}

fn check_output_count<S: Scalar>(report: &StructuralReport<S>) -> Result<()> {
    if report.p > MAX_OUTPUTS {
        Err(Error::TooManyOutputs(report.p))
    } else {
        Ok(())
    }
}

/// Visible kernels at the requested visible modes.
pub fn visible_kernels<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
    visible: &[S],
) -> Result<Vec<VisibleKernel<S>>> {
    visible
        .iter()
        .enumerate()
        .map(|(j, lambda)| r_star_j_at(sys, &report.zeros, j, lambda))
        .collect()
}

/// Solvability with the visible modes fixed.
pub fn check_fixed_modes<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
    modes: &ModeSelection<S>,
) -> Result<SolvabilityReport> {
    check_output_count(report)?;
    require_assumptions(report)?;
    let modes = modes.resolve(report, report.seed)?;
    let vg = &report.v_star_g.as_ref().expect("checked above").span;
    let spans: Vec<Subspace<S>> = visible_kernels(sys, report, &modes.visible)?
        .into_iter()
        .map(|k| k.span)
        .collect();
    subset_conditions(Problem::FixedModes, report, vg, &spans)
}

/// Solvability for almost all choices of visible modes.
pub fn check_structural<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
) -> Result<SolvabilityReport> {
    check_output_count(report)?;
    require_assumptions(report)?;
    let vg = &report.v_star_g.as_ref().expect("checked above").span;
    let spans = (0..report.p)
        .map(|j| {
            let mut pool = ModePool::new(report.domain, &report.zeros, report.seed);
            r_star_j_full(sys, j, &mut pool)
        })
        .collect::<Result<Vec<_>>>()?;
    subset_conditions(Problem::Structural, report, vg, &spans)
}

/// What a candidate column stands for.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnLabel<S> {
    /// A column of V*g.
    Invariant(InvariantColumn<S>),
    /// The visible column of output `output` with visibility coefficient
    /// `beta`.
    Visible { output: usize, lambda: S, beta: S },
}

impl<S: Scalar> ColumnLabel<S> {
    fn is_pair_start(&self) -> bool {
        matches!(self, ColumnLabel::Invariant(c) if c.part == PairPart::Re)
    }
}

/// Every candidate column: V*g columns first, then one visible column per
/// output.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<S> {
    pub v: Mat<S>,
    pub w: Mat<S>,
    pub labels: Vec<ColumnLabel<S>>,
}

impl<S: Scalar> Candidate<S> {
    /// Number of V*g columns.
    pub fn invariant_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| matches!(l, ColumnLabel::Invariant(_)))
            .count()
    }
}

/// Kernels that the candidate columns are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSpace<S> {
    pub blocks: Vec<KernelBlock<S>>,
    pub visible: Vec<VisibleKernel<S>>,
}

/// Kernel blocks for the resolved `modes`.
pub fn candidate_space<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
    modes: &ModeSelection<S>,
) -> Result<CandidateSpace<S>> {
    Ok(CandidateSpace {
        blocks: v_star_g_blocks(sys, &report.zeros, &modes.invisible_free)?,
        visible: visible_kernels(sys, report, &modes.visible)?,
    })
}

fn columns_to_mat<S: Scalar>(rows: usize, cols: &[Vec<S>]) -> Mat<S> {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i].clone())
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

impl<S: Scalar> CandidateSpace<S> {
    /// Assembles the candidate columns for explicit selectors.
    pub fn assemble(&self, sys: &LtiSystem<S>, params: &ParameterSet<S>) -> Result<Candidate<S>> {
        let (n, m) = (sys.n(), sys.m());
        let (mut vs, mut ws, inv) = block_columns(&self.blocks, &params.invariant_selectors)?;
        let mut labels: Vec<ColumnLabel<S>> = inv.into_iter().map(ColumnLabel::Invariant).collect();
        if params.visible_selectors.len() != self.visible.len() {
            return Err(Error::Precondition(format!(
                "{} visible selectors for {} outputs",
                params.visible_selectors.len(),
                self.visible.len()
            )));
        }
        for (kernel, k) in self.visible.iter().zip(&params.visible_selectors) {
            let j = kernel.output;
            if k.len() != kernel.v.cols() {
                return Err(Error::Precondition(format!(
                    "visible selector {} has length {}, kernel has {} columns",
                    j + 1,
                    k.len(),
                    kernel.v.cols()
                )));
            }
            if !k.is_empty() && k.iter().all(|x| x.is_zero()) {
                return Err(Error::Precondition(format!("visible selector {} is zero", j + 1)));
            }
            vs.push(kernel.v.mul_vec(k));
            ws.push(kernel.w.mul_vec(k));
            labels.push(ColumnLabel::Visible {
                output: j,
                lambda: kernel.lambda.clone(),
                beta: dot(&kernel.beta, k),
            });
        }
        Ok(Candidate {
            v: columns_to_mat(n, &vs),
            w: columns_to_mat(m, &ws),
            labels,
        })
    }

    /// Random nonzero integer selectors for every block.
    pub fn random_parameters(
        &self,
        rng: &mut impl rand::Rng,
        strategy: &ColumnStrategy,
        seed: u64,
    ) -> ParameterSet<S> {
        ParameterSet {
            invariant_selectors: self
                .blocks
                .iter()
                .map(|b| rng::selector(rng, b.kernel.len()))
                .collect(),
            visible_selectors: self
                .visible
                .iter()
                .map(|k| rng::selector(rng, k.v.cols()))
                .collect(),
            strategy: strategy.clone(),
            seed,
        }
    }
}

/// Candidate columns for explicit parameters.
pub fn assemble_candidate<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
    modes: &ModeSelection<S>,
    params: &ParameterSet<S>,
) -> Result<Candidate<S>> {
    let modes = modes.resolve(report, params.seed)?;
    candidate_space(sys, report, &modes)?.assemble(sys, params)
}

fn beta_is_zero<S: Scalar>(beta: &S) -> bool {
    beta.is_negligible(BETA_TOL)
}

/// Ordering key for the stability margin: larger margin sorts first.
fn margin_key<S: Scalar>(mode: &Mode<S>, domain: TimeDomain) -> S {
    match (domain, mode) {
        (TimeDomain::Continuous, m) => m.real_part(),
        (TimeDomain::Discrete, Mode::Real(x)) => x.clone() * x.clone(),
        (TimeDomain::Discrete, Mode::Pair { re, im }) => re.clone() * re.clone() + im.clone() * im.clone(),
    }
}

/// Column groups: conjugate-pair columns travel together.
fn column_groups<S: Scalar>(labels: &[ColumnLabel<S>]) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        if labels[i].is_pair_start() {
            groups.push(vec![i, i + 1]);
            i += 2;
        } else {
            groups.push(vec![i]);
            i += 1;
        }
    }
    groups
}

/// Picks `n` columns of `v` forming an invertible matrix. Visible columns
/// with a zero visibility coefficient are never picked by the greedy
/// strategies.
pub fn select_columns<S: Scalar>(
    v: &Mat<S>,
    labels: &[ColumnLabel<S>],
    strategy: &ColumnStrategy,
    domain: TimeDomain,
) -> Result<Vec<usize>> {
    let n = v.rows();
    let tol = S::DEFAULT_TOL;
    let groups = column_groups(labels);
    let visible_group = |j: usize| {
        groups.iter().find(|g| {
            matches!(&labels[g[0]], ColumnLabel::Visible { output, .. } if *output == j)
        })
    };
    let usable = |g: &Vec<usize>| match &labels[g[0]] {
        ColumnLabel::Visible { beta, .. } => !beta_is_zero(beta),
        ColumnLabel::Invariant(_) => true,
    };
    let invariant: Vec<&Vec<usize>> = groups
        .iter()
        .filter(|g| matches!(labels[g[0]], ColumnLabel::Invariant(_)))
        .collect();
    let visible: Vec<&Vec<usize>> = groups
        .iter()
        .filter(|g| matches!(labels[g[0]], ColumnLabel::Visible { .. }))
        .collect();

    let mut chosen: Vec<usize> = Vec::new();
    let mut rank = 0;
    let mut try_add = |g: &Vec<usize>, chosen: &mut Vec<usize>| -> bool {
        if rank + g.len() > n {
            return false;
        }
        let mut trial = chosen.clone();
        trial.extend(g);
        let r = v.select_cols(&trial).rank(tol);
        if r == rank + g.len() {
            *chosen = trial;
            rank = r;
            true
        } else {
            false
        }
    };

    match strategy {
        ColumnStrategy::PreferInvariant => {
            for g in invariant.iter().copied().chain(visible.iter().copied().filter(|g| usable(g))) {
                try_add(g, &mut chosen);
            }
        }
        ColumnStrategy::ForceVisible(outputs) => {
            let mut forced = Vec::new();
            for &j in outputs {
                let g = visible_group(j).ok_or_else(|| {
                    Error::Precondition(format!("output {} does not exist", j + 1))
                })?;
                if !usable(g) {
                    return Err(Error::Precondition(format!(
                        "output {} has a zero visibility coefficient",
                        j + 1
                    )));
                }
                if !try_add(g, &mut chosen) {
                    return Err(Error::Precondition(format!(
                        "visible column of output {} is dependent on the other forced columns",
                        j + 1
                    )));
                }
                forced.push(g[0]);
            }
            let mut ordered = invariant.clone();
            ordered.sort_by(|a, b| {
                let key = |g: &Vec<usize>| match &labels[g[0]] {
                    ColumnLabel::Invariant(c) => margin_key(&c.mode, domain),
                    ColumnLabel::Visible { .. } => unreachable!(),
                };
                key(a).partial_cmp(&key(b)).unwrap_or(Ordering::Equal)
            });
            let rest = visible
                .iter()
                .copied()
                .filter(|g| !forced.contains(&g[0]) && usable(g));
            for g in ordered.into_iter().chain(rest) {
                try_add(g, &mut chosen);
            }
        }
        ColumnStrategy::Explicit(psi) => {
            let mut sorted = psi.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != psi.len() || psi.iter().any(|&i| i >= labels.len()) {
                return Err(Error::Precondition(format!(
                    "column selection {psi:?} has repeated or out-of-range indices"
                )));
            }
            for g in groups.iter().filter(|g| g.len() == 2) {
                if sorted.contains(&g[0]) != sorted.contains(&g[1]) {
                    return Err(Error::Precondition(
                        "column selection splits a conjugate pair".into(),
                    ));
                }
            }
            if sorted.len() != n || v.select_cols(&sorted).rank(tol) != n {
                return Err(Error::Precondition(format!(
                    "column selection {psi:?} is not an invertible {n} x {n} choice"
                )));
            }
            return Ok(sorted);
        }
    }
    if rank != n {
        return Err(Error::Precondition(format!(
            "retained columns span dimension {rank}, need {n}"
        )));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Behaviour of one tracking-error component.
#[derive(Clone, Debug, PartialEq)]
pub enum OutputBehaviour<S> {
    /// `ε_j(t) = γ · mode^t`-type single mode with coefficient `beta`.
    Visible { mode: S, beta: S },
    /// Identically zero error.
    Instantaneous,
}

/// A feedback matrix with the eigenstructure it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisResult<S> {
    pub f: Mat<S>,
    /// Mode labels of the retained columns; a pair stands for two
    /// eigenvalues.
    pub closed_loop_modes: Vec<Mode<S>>,
    pub per_output: Vec<OutputBehaviour<S>>,
    /// Retained state columns.
    pub v: Mat<S>,
    /// Retained input columns (`F v = w`).
    pub w: Mat<S>,
    pub labels: Vec<ColumnLabel<S>>,
    /// Retained indices into the candidate columns.
    pub psi: Vec<usize>,
    pub params: ParameterSet<S>,
    pub domain: TimeDomain,
}

impl<S: Scalar> SynthesisResult<S> {
    /// `Π (x - mode)` over the retained labels.
    pub fn expected_polynomial(&self) -> Poly<S> {
        self.closed_loop_modes
            .iter()
            .fold(Poly::one(), |acc, m| acc.mul(&m.polynomial()))
    }

    /// Largest visible mode, the natural rate bound for the error envelope.
    pub fn slowest_visible(&self) -> Option<S> {
        self.per_output
            .iter()
            .filter_map(|o| match o {
                OutputBehaviour::Visible { mode, .. } => Some(mode.clone()),
                OutputBehaviour::Instantaneous => None,
            })
            .fold(None, |acc: Option<S>, x| match acc {
                Some(a) if a >= x => Some(a),
                _ => Some(x),
            })
    }
}

/// Residuals of the eigenstructure relations a synthesized feedback must
/// satisfy.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenstructureReport {
    /// `max |(C + DF) v|` over retained V*g columns.
    pub output_nulling: f64,
    /// Largest residual of the eigenvector and rotation relations of the
    /// retained V*g columns.
    pub invariance: f64,
    /// Largest residual of `(A + BF) v_j = λ_j v_j` and
    /// `(C + DF) v_j = β_j e_j`.
    pub visibility: f64,
    /// Every retained visible column has `β_j ≠ 0`.
    pub visibility_nonzero: bool,
    /// The characteristic polynomial of `A + BF` equals the product over
    /// the retained labels.
    pub spectrum_matches: bool,
    /// Residuals at or below this pass (0 in exact mode).
    pub tolerance: f64,
}

impl EigenstructureReport {
    pub fn passed(&self) -> bool {
        self.output_nulling <= self.tolerance
            && self.invariance <= self.tolerance
            && self.visibility <= self.tolerance
            && self.visibility_nonzero
            && self.spectrum_matches
    }

    pub fn summary(&self) -> String {
        format!(
            "output-nulling residual {:e}, invariance residual {:e}, visibility residual {:e}, nonzero visibility {}, spectrum match {}",
            self.output_nulling,
            self.invariance,
            self.visibility,
            self.visibility_nonzero,
            self.spectrum_matches
        )
    }
}

/// Residual magnitude. In exact mode any nonzero entry counts as infinite
/// so that tiny rationals cannot slip under the float conversion.
fn residual<S: Scalar>(v: &[S]) -> f64 {
    if S::EXACT {
        if v.iter().all(|x| x.is_zero()) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        crate::linalg::vec_max_abs(v)
    }
}

fn sub_scaled<S: Scalar>(a: &[S], b: &[S], s: &S) -> Vec<S> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() - s.clone() * y.clone())
        .collect()
}

fn polys_match<S: Scalar>(a: &Poly<S>, b: &Poly<S>) -> bool {
    if S::EXACT {
        return a == b;
    }
    let (ca, cb) = (a.coeffs(), b.coeffs());
    let scale = ca.iter().chain(cb).map(|c| c.to_f64().abs()).fold(1.0, f64::max);
    (0..ca.len().max(cb.len())).all(|i| {
        let x = ca.get(i).map_or(0.0, |c| c.to_f64());
        let y = cb.get(i).map_or(0.0, |c| c.to_f64());
        (x - y).abs() <= 1e-6 * scale
    })
}

/// Checks output nulling, the eigen/rotation relations, visibility and the
/// characteristic polynomial.
pub fn verify_eigenstructure<S: Scalar>(
    sys: &LtiSystem<S>,
    result: &SynthesisResult<S>,
) -> EigenstructureReport {
    let (acl, ccl) = sys.closed_loop_matrices(&result.f);
    let av = acl.mul(&result.v);
    let cv = ccl.mul(&result.v);
    let mut output_nulling: f64 = 0.0;
    let mut invariance: f64 = 0.0;
    let mut visibility: f64 = 0.0;
    let mut visibility_nonzero = true;
    for (k, label) in result.labels.iter().enumerate() {
        let ak = av.col(k);
        let vk = result.v.col(k);
        match label {
            ColumnLabel::Invariant(col) => {
                output_nulling = output_nulling.max(residual(&cv.col(k)));
                let r = match (&col.mode, col.part) {
                    (Mode::Real(mu), _) => sub_scaled(&ak, &vk, mu),
                    // (A+BF)(a + ib) = (re + i im)(a + ib)
                    (Mode::Pair { re, im }, PairPart::Re) => {
                        let other = result.v.col(k + 1);
                        sub_scaled(&sub_scaled(&ak, &vk, re), &other, &-im.clone())
                    }
                    (Mode::Pair { re, im }, _) => {
                        let other = result.v.col(k - 1);
                        sub_scaled(&sub_scaled(&ak, &vk, re), &other, im)
                    }
                };
                invariance = invariance.max(residual(&r));
            }
            ColumnLabel::Visible { output, lambda, beta } => {
                visibility = visibility.max(residual(&sub_scaled(&ak, &vk, lambda)));
                let target: Vec<S> = (0..sys.p())
                    .map(|i| if i == *output { beta.clone() } else { S::zero() })
                    .collect();
                let r: Vec<S> = cv
                    .col(k)
                    .into_iter()
                    .zip(target)
                    .map(|(x, y)| x - y)
                    .collect();
                visibility = visibility.max(residual(&r));
                if beta_is_zero(beta) {
                    visibility_nonzero = false;
                }
            }
        }
    }
    let tolerance = if S::EXACT {
        0.0
    } else {
        1e-7 * (1.0 + acl.max_abs()) * (1.0 + result.v.max_abs())
    };
    let spectrum_matches = polys_match(
        &characteristic_polynomial(&acl),
        &result.expected_polynomial(),
    );
    EigenstructureReport {
        output_nulling,
        invariance,
        visibility,
        visibility_nonzero,
        spectrum_matches,
        tolerance,
    }
}

/// Builds `F` from an assembled space and explicit parameters, then
/// verifies it.
fn build_feedback<S: Scalar>(
    sys: &LtiSystem<S>,
    space: &CandidateSpace<S>,
    params: &ParameterSet<S>,
) -> Result<SynthesisResult<S>> {
    let candidate = space.assemble(sys, params)?;
    let psi = select_columns(&candidate.v, &candidate.labels, &params.strategy, sys.domain())?;
    let labels: Vec<ColumnLabel<S>> = psi.iter().map(|&i| candidate.labels[i].clone()).collect();
    for label in &labels {
        if let ColumnLabel::Visible { output, beta, .. } = label {
            if beta_is_zero(beta) {
                return Err(Error::Precondition(format!(
                    "cannot realize nonzero visibility coefficient for output {}",
                    output + 1
                )));
            }
        }
    }
    let v = candidate.v.select_cols(&psi);
    let w = candidate.w.select_cols(&psi);
    // F V = W  <=>  V^T F^T = W^T
    let f = v
        .transpose()
        .solve(&w.transpose())
        .ok_or_else(|| Error::Precondition("retained columns are not independent".into()))?
        .transpose();
    let closed_loop_modes = labels
        .iter()
        .filter_map(|l| match l {
            ColumnLabel::Invariant(c) if c.part != PairPart::Im => Some(c.mode.clone()),
            ColumnLabel::Invariant(_) => None,
            ColumnLabel::Visible { lambda, .. } => Some(Mode::Real(lambda.clone())),
        })
        .collect();
    let per_output = (0..sys.p())
        .map(|j| {
            labels
                .iter()
                .find_map(|l| match l {
                    ColumnLabel::Visible { output, lambda, beta } if *output == j => {
                        Some(OutputBehaviour::Visible {
                            mode: lambda.clone(),
                            beta: beta.clone(),
                        })
                    }
                    _ => None,
                })
                .unwrap_or(OutputBehaviour::Instantaneous)
        })
        .collect();
    let result = SynthesisResult {
        f,
        closed_loop_modes,
        per_output,
        v,
        w,
        labels,
        psi,
        params: params.clone(),
        domain: sys.domain(),
    };
    let check = verify_eigenstructure(sys, &result);
    if !check.passed() {
        return Err(Error::Verification(check.summary()));
    }
    Ok(result)
}

/// `F = W̃ Ṽ⁻¹` for explicit parameters.
pub fn synthesize_feedback<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
    modes: &ModeSelection<S>,
    params: &ParameterSet<S>,
) -> Result<SynthesisResult<S>> {
    let modes = modes.resolve(report, params.seed)?;
    let solvability = check_fixed_modes(sys, report, &modes)?;
    if !solvability.solvable {
        return Err(solvability.into_error());
    }
    let space = candidate_space(sys, report, &modes)?;
    build_feedback(sys, &space, params)
}

/// Full pipeline with random parameters, resampled on rank or visibility
/// failures.
pub fn synthesize_auto<S: Scalar>(
    sys: &LtiSystem<S>,
    modes: &ModeSelection<S>,
    strategy: &ColumnStrategy,
    seed: u64,
) -> Result<SynthesisResult<S>> {
    let report = crate::geometry::structural_report(sys, seed)?;
    synthesize_with_report(sys, &report, modes, strategy, seed)
}

/// [`synthesize_auto`] reusing an existing structural report.
pub fn synthesize_with_report<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
    modes: &ModeSelection<S>,
    strategy: &ColumnStrategy,
    seed: u64,
) -> Result<SynthesisResult<S>> {
    let modes = modes.resolve(report, seed)?;
    let solvability = check_fixed_modes(sys, report, &modes)?;
    if !solvability.solvable {
        return Err(solvability.into_error());
    }
    let space = candidate_space(sys, report, &modes)?;
    let mut rng = rng::stream(seed, streams::SELECTORS);
    let mut last = String::new();
    for _ in 0..MAX_RETRIES {
        let params = space.random_parameters(&mut rng, strategy, seed);
        match build_feedback(sys, &space, &params) {
            Ok(result) => return Ok(result),
            Err(e @ (Error::Precondition(_) | Error::Verification(_))) => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted(format!(
        "no parameter choice succeeded in {MAX_RETRIES} tries; last failure: {last}"
    )))
}

/// Outcome at one grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepOutcome<S> {
    Success(Box<SynthesisResult<S>>),
    Failure(String),
    /// The point violates the visible-mode constraints.
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint<S> {
    pub visible: Vec<S>,
    pub seed: u64,
    pub outcome: SweepOutcome<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport<S> {
    pub points: Vec<SweepPoint<S>>,
}

impl<S> SweepReport<S> {
    pub fn successes(&self) -> usize {
        self.points
            .iter()
            .filter(|p| matches!(p.outcome, SweepOutcome::Success(_)))
            .count()
    }

    pub fn attempted(&self) -> usize {
        self.points
            .iter()
            .filter(|p| !matches!(p.outcome, SweepOutcome::Skipped(_)))
            .count()
    }

    /// Fraction of attempted points that succeeded.
    pub fn success_rate(&self) -> f64 {
        match self.attempted() {
            0 => 0.0,
            a => self.successes() as f64 / a as f64,
        }
    }
}

/// Runs the automatic synthesis at every visible-mode assignment of the
/// grid, in parallel. Point `i` uses its own sub-seed, so the result equals
/// sequential evaluation.
pub fn structural_sweep<S: Scalar>(
    sys: &LtiSystem<S>,
    report: &StructuralReport<S>,
    grid: &[Vec<S>],
    strategy: &ColumnStrategy,
    seed: u64,
) -> Result<SweepReport<S>> {
    let solvability = check_structural(sys, report)?;
    if !solvability.solvable {
        return Err(solvability.into_error());
    }
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(i, visible)| {
            let point_seed = rng::sub_seed(seed, i as u64);
            let modes = ModeSelection::new(visible.clone());
            let outcome = match modes.resolve(report, point_seed) {
                Err(e) => SweepOutcome::Skipped(e.to_string()),
                Ok(_) => match synthesize_with_report(sys, report, &modes, strategy, point_seed) {
                    Ok(r) => SweepOutcome::Success(Box::new(r)),
                    Err(e) => SweepOutcome::Failure(e.to_string()),
                },
            };
            SweepPoint {
                visible: visible.clone(),
                seed: point_seed,
                outcome,
            }
        })
        .collect();
    Ok(SweepReport { points })
}

/// Kind of a retained column, for reporting.
pub fn column_kind<S: Scalar>(label: &ColumnLabel<S>) -> &'static str {
    match label {
        ColumnLabel::Invariant(c) if c.kind == BlockKind::Reachability => "free",
        ColumnLabel::Invariant(_) => "zero",
        ColumnLabel::Visible { .. } => "visible",
    }
}
