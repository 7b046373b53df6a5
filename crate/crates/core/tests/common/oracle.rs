//! Reference computations written without the library's linear algebra:
//! Gauss-Jordan elimination, minor enumeration, the classical subspace
//! recursions and a brute-force witness search for the subset conditions.

use monotrack::geometry::structural_report;
use monotrack::synthesis::ModeSelection;
use monotrack::{LtiSystem, Mat, Rational, Scalar, TimeDomain};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<Vec<Rational>>;

pub fn rows_of(m: &Mat<Rational>) -> Rows {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Reduced row echelon form and pivot columns.
pub fn rref(mut a: Rows, cols: usize) -> (Rows, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    (a, pivots)
}

pub fn rank_rows(a: &Rows, cols: usize) -> usize {
    rref(a.clone(), cols).1.len()
}

pub fn rank(m: &Mat<Rational>) -> usize {
    rank_rows(&rows_of(m), m.cols())
}

/// Null-space basis as column vectors.
pub fn nullspace(a: &Rows, cols: usize) -> Vec<Vec<Rational>> {
    let (r, pivots) = rref(a.clone(), cols);
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Rational::zero(); cols];
            v[free] = Rational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[i][free].clone();
            }
            v
        })
        .collect()
}

/// Rank of the matrix whose columns are `columns` (each of length `dim`).
pub fn column_rank(columns: &[Vec<Rational>], dim: usize) -> usize {
    let rows: Rows = (0..dim).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
    rank_rows(&rows, columns.len())
}

/// A basis of the span of `columns`.
pub fn span_basis(columns: &[Vec<Rational>], dim: usize) -> Vec<Vec<Rational>> {
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    for c in columns {
        let mut trial = basis.clone();
        trial.push(c.clone());
        if column_rank(&trial, dim) > basis.len() {
            basis = trial;
        }
    }
    basis
}

fn det_cofactor(a: &Rows) -> Rational {
    let n = a.len();
    if n == 0 {
        return Rational::one();
    }
    if n == 1 {
        return a[0][0].clone();
    }
    (0..n)
        .filter(|&j| !a[0][j].is_zero())
        .map(|j| {
            let minor: Rows = a[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect())
                .collect();
            let term = &a[0][j] * det_cofactor(&minor);
            if j % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .fold(Rational::zero(), |acc, t| acc + t)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Largest order of a nonzero minor.
pub fn rank_by_minors(a: &Rows, cols: usize) -> usize {
    let rows = a.len();
    for k in (1..=rows.min(cols)).rev() {
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                let minor: Rows = rs.iter().map(|&i| cs.iter().map(|&j| a[i][j].clone()).collect()).collect();
                if !det_cofactor(&minor).is_zero() {
                    return k;
                }
            }
        }
    }
    0
}

fn block_rows(blocks: &[&[Rows]]) -> Rows {
    // Each entry of `blocks` is one block row given as horizontally adjacent
    // blocks with equal row counts.
    let mut out = Vec::new();
    for row_blocks in blocks {
        let height = row_blocks[0].len();
        for i in 0..height {
            out.push(row_blocks.iter().flat_map(|b| b[i].iter().cloned()).collect());
        }
    }
    out
}

fn from_columns(columns: &[Vec<Rational>], dim: usize) -> Rows {
    (0..dim).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect()
}

fn zero_rows(rows: usize, cols: usize) -> Rows {
    vec![vec![Rational::zero(); cols]; rows]
}

fn mat_vec(a: &Rows, x: &[Rational]) -> Vec<Rational> {
    a.iter()
        .map(|row| row.iter().zip(x).fold(Rational::zero(), |acc, (p, q)| acc + p * q))
        .collect()
}

/// Largest output-nulling controlled invariant subspace by the fixed-point
/// recursion `V ← {x : ∃u, Ax + Bu ∈ V, Cx + Du = 0}`.
pub fn v_star(sys: &LtiSystem<Rational>) -> Vec<Vec<Rational>> {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let (a, b, c, d) = (rows_of(sys.a()), rows_of(sys.b()), rows_of(sys.c()), rows_of(sys.d()));
    let mut basis: Vec<Vec<Rational>> = (0..n)
        .map(|k| (0..n).map(|i| if i == k { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    loop {
        let k = basis.len();
        let neg_v: Vec<Vec<Rational>> = basis.iter().map(|v| v.iter().map(|x| -x.clone()).collect()).collect();
        let system = block_rows(&[
            &[a.clone(), b.clone(), from_columns(&neg_v, n)],
            &[c.clone(), d.clone(), zero_rows(p, k)],
        ]);
        let kernel = nullspace(&system, n + m + k);
        let states: Vec<Vec<Rational>> = kernel.iter().map(|z| z[..n].to_vec()).collect();
        let next = span_basis(&states, n);
        if next.len() == basis.len() {
            return next;
        }
        basis = next;
    }
}

/// Strongly reachable subspace by `S ← {Ax + Bu : x ∈ S, Cx + Du = 0}`
/// from `S = {0}`.
pub fn s_star(sys: &LtiSystem<Rational>) -> Vec<Vec<Rational>> {
    let (n, m) = (sys.n(), sys.m());
    let (a, b, c, d) = (rows_of(sys.a()), rows_of(sys.b()), rows_of(sys.c()), rows_of(sys.d()));
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    loop {
        let k = basis.len();
        let s = from_columns(&basis, n);
        // Unknowns [y; u] with x = S y.
        let cs: Rows = c
            .iter()
            .map(|row| (0..k).map(|j| (0..n).fold(Rational::zero(), |acc, i| acc + &row[i] * &s[i][j])).collect())
            .collect();
        let constraint = block_rows(&[&[cs, d.clone()]]);
        let kernel = nullspace(&constraint, k + m);
        let images: Vec<Vec<Rational>> = kernel
            .iter()
            .map(|z| {
                let x: Vec<Rational> = if k == 0 { vec![Rational::zero(); n] } else { mat_vec(&s, &z[..k]) };
                let ax = mat_vec(&a, &x);
                let bu = mat_vec(&b, &z[k..]);
                ax.into_iter().zip(bu).map(|(p, q)| p + q).collect()
            })
            .collect();
        let mut all = basis.clone();
        all.extend(images);
        let next = span_basis(&all, n);
        if next.len() == basis.len() {
            return next;
        }
        basis = next;
    }
}

/// `dim R* = dim(V* ∩ S*)`.
pub fn r_star_dim(sys: &LtiSystem<Rational>) -> usize {
    let v = v_star(sys);
    let s = s_star(sys);
    let mut both = v.clone();
    both.extend(s.iter().cloned());
    v.len() + s.len() - column_rank(&both, sys.n())
}

/// Output `j` removed.
fn delete_row(rows: &Rows, j: usize) -> Rows {
    rows.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, r)| r.clone()).collect()
}

/// Kernel of the pencil of the plant without output `j` at `lambda`, as
/// `(v, w)` pairs.
pub fn deleted_output_kernel(sys: &LtiSystem<Rational>, j: usize, lambda: &Rational) -> Vec<(Vec<Rational>, Vec<Rational>)> {
    let n = sys.n();
    let m = sys.m();
    let mut a = rows_of(sys.a());
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = &row[i] - lambda;
    }
    let pencil = block_rows(&[
        &[a, rows_of(sys.b())],
        &[delete_row(&rows_of(sys.c()), j), delete_row(&rows_of(sys.d()), j)],
    ]);
    nullspace(&pencil, n + m)
        .into_iter()
        .map(|z| (z[..n].to_vec(), z[n..].to_vec()))
        .collect()
}

/// Outcome of the witness search.
#[derive(Debug, PartialEq, Eq)]
pub enum Witness {
    Found { after: usize },
    NotFound,
}

/// Samples random selector vectors for each output kernel and reports
/// whether the V*g basis plus the sampled visible columns with nonzero
/// visibility coefficient span the state space.
pub fn rado_witness(
    sys: &LtiSystem<Rational>,
    v_star_g: &[Vec<Rational>],
    visible: &[Rational],
    budget: usize,
    seed: u64,
) -> Witness {
    let n = sys.n();
    let kernels: Vec<_> = (0..sys.p()).map(|j| deleted_output_kernel(sys, j, &visible[j])).collect();
    let c = rows_of(sys.c());
    let d = rows_of(sys.d());
    // One column per output: too few columns can never reach rank n.
    if v_star_g.len() + kernels.iter().filter(|k| !k.is_empty()).count() < n {
        return Witness::NotFound;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..budget {
        let mut columns = v_star_g.to_vec();
        for (j, kernel) in kernels.iter().enumerate() {
            if kernel.is_empty() {
                continue;
            }
            let k: Vec<i64> = kernel.iter().map(|_| rng.gen_range(-5..=5)).collect();
            let mut v = vec![Rational::zero(); n];
            let mut w = vec![Rational::zero(); sys.m()];
            for ((kv, kw), &s) in kernel.iter().zip(&k) {
                let s = Rational::from_i64(s);
                for (x, y) in v.iter_mut().zip(kv) {
                    *x = &*x + &s * y;
                }
                for (x, y) in w.iter_mut().zip(kw) {
                    *x = &*x + &s * y;
                }
            }
            let beta = c[j].iter().zip(&v).chain(d[j].iter().zip(&w)).fold(Rational::zero(), |acc, (p, q)| acc + p * q);
            if !beta.is_zero() {
                columns.push(v);
            }
        }
        if column_rank(&columns, n) == n {
            return Witness::Found { after: trial + 1 };
        }
    }
    Witness::NotFound
}

/// A random plant meeting the standing assumptions, exact in rational mode,
/// with `n <= 6`, `p <= 3`, `p <= m <= 4`.
pub struct RandomPlant {
    pub sys: LtiSystem<Rational>,
    pub report: monotrack::geometry::StructuralReport<Rational>,
    pub seed: u64,
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Mat<Rational> {
    Mat::from_fn(rows, cols, |_, _| {
        if rng.gen_bool(density) {
            Rational::from_i64(rng.gen_range(-3..=3))
        } else {
            Rational::zero()
        }
    })
}

pub fn random_plant(seed: u64) -> RandomPlant {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p = rng.gen_range(1..=3);
        let m = rng.gen_range(p..=4);
        let n = rng.gen_range((p + 1)..=6);
        let density = rng.gen_range(0.3..0.7);
        let a = random_matrix(&mut rng, n, n, density);
        let b = random_matrix(&mut rng, n, m, density);
        let c = random_matrix(&mut rng, p, n, density);
        let d = if rng.gen_bool(0.3) {
            random_matrix(&mut rng, p, m, 0.3)
        } else {
            Mat::zeros(p, m)
        };
        let Ok(sys) = LtiSystem::new(a, b, c, d, TimeDomain::Continuous) else {
            continue;
        };
        let Ok(report) = structural_report(&sys, seed) else {
            continue;
        };
        if report.right_invertible && report.assumption1 && report.assumption2 {
            return RandomPlant { sys, report, seed };
        }
    }
}

/// Visible modes for a random plant: drawn from a small set, avoiding
/// invariant zeros, with repetitions.
pub fn random_visible_modes(plant: &RandomPlant, seed: u64) -> ModeSelection<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let options: Vec<Rational> = [(-1, 1), (-2, 1), (-3, 1), (-1, 2), (-5, 2)]
        .iter()
        .map(|&(a, b)| Rational::from_ratio(a, b))
        .filter(|x| !plant.report.is_zero(x))
        .collect();
    ModeSelection::new((0..plant.sys.p()).map(|_| options[rng.gen_range(0..options.len())].clone()).collect())
}

/// Number of random plants shared by the property suites.
pub const PLANTS: u64 = 50;

/// Plants for seeds `0..PLANTS`, generated once per test binary.
pub fn plants() -> &'static [RandomPlant] {
    use rayon::prelude::*;
    static CACHE: std::sync::OnceLock<Vec<RandomPlant>> = std::sync::OnceLock::new();
    CACHE.get_or_init(|| (0..PLANTS).into_par_iter().map(random_plant).collect())
}

/// Witness sampling budget per verdict; "solvable" verdicts without a
/// witness are retried at ten times this budget.
pub const WITNESS_BUDGET: usize = 10_000;

/// One fixed-mode verdict compared with the witness search.
pub struct VerdictComparison {
    pub plant: usize,
    pub draw: u64,
    pub solvable: bool,
    pub witness: bool,
    pub reason: String,
}

/// Compares `check_fixed_modes` with the witness search on every cached
/// plant, for two draws of visible modes each.
pub fn compare_fixed_mode_verdicts() -> Vec<VerdictComparison> {
    use monotrack::synthesis::check_fixed_modes;
    use rayon::prelude::*;
    plants()
        .par_iter()
        .enumerate()
        .flat_map_iter(|(index, plant)| {
            let vg = plant.report.v_star_g.as_ref().unwrap();
            let basis: Vec<Vec<Rational>> = (0..vg.span.dim()).map(|j| vg.span.basis().col(j)).collect();
            (0..2u64).map(move |draw| {
                let seed = plant.seed * 2 + draw;
                let modes = random_visible_modes(plant, seed);
                let verdict = check_fixed_modes(&plant.sys, &plant.report, &modes).unwrap();
                let mut witness = rado_witness(&plant.sys, &basis, &modes.visible, WITNESS_BUDGET, seed);
                if verdict.solvable && witness == Witness::NotFound {
                    witness = rado_witness(&plant.sys, &basis, &modes.visible, 10 * WITNESS_BUDGET, seed + 1);
                }
                VerdictComparison {
                    plant: index,
                    draw,
                    solvable: verdict.solvable,
                    witness: matches!(witness, Witness::Found { .. }),
                    reason: verdict.reason(),
                }
            })
        })
        .collect()
}
