//! Catalog of ready-made composite problems.
//!
//! Randomized instances are drawn from a `ChaCha8` stream seeded by the spec,
//! so a spec always builds the same problem bit for bit.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, SmoothPart, Vector};
use crate::prox::{prox_indicator_box, prox_indicator_nonneg, prox_l1, prox_quadratic, prox_zero};

const POWER_ITERATION_CAP: usize = 10_000;
const POWER_ITERATION_TOL: f64 = 1e-10;
/// Relative inflation applied to the power-iteration estimate, which
/// approaches `‖AᵀA‖` from below.
const LIPSCHITZ_INFLATION: f64 = 1e-6;

/// A box bound: one value for every coordinate, or one per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Bound {
    fn expand(&self, n: usize, what: &str) -> Result<Vector> {
        match self {
            Bound::Scalar(v) => Ok(Vector::from_element(n, *v)),
            Bound::Vector(v) if v.len() == n => Ok(Vector::from_column_slice(v)),
            Bound::Vector(v) => Err(malformed(format!("{what} has {} entries, expected {n}", v.len()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `½|Ax - b|² + λ|x|₁`. Give `a` and `b`, or `rows`, `cols` and `seed`.
    Lasso {
        #[serde(default)]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        rows: Option<usize>,
        #[serde(default)]
        cols: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        lambda: f64,
    },
    /// `Σ|x_i|^{1+p}/(1+p)` over the nonnegative orthant.
    PPowerNonneg {
        p: f64,
        #[serde(default = "one")]
        dimension: usize,
    },
    /// `½|Ax - b|²` over `[lower, upper]`.
    BoxLeastSquares {
        #[serde(default)]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        rows: Option<usize>,
        #[serde(default)]
        cols: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        lower: Bound,
        upper: Bound,
    },
    /// `½xᵀQx - bᵀx`, plus `(w/2)|x|²` when `regularization = w` is given.
    /// Give `q` and `b`, or `dimension`, the eigenvalue range and `seed`.
    StronglyConvexQuadratic {
        #[serde(default)]
        q: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        dimension: Option<usize>,
        #[serde(default)]
        min_eigenvalue: Option<f64>,
        #[serde(default)]
        max_eigenvalue: Option<f64>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        regularization: Option<f64>,
    },
    /// `exp(x)` on the real line: bounded below, no minimizer.
    ExpUnbounded,
}

fn one() -> usize {
    1
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedProblem(msg.into())
}

impl ProblemSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::Lasso { .. } => "lasso",
            ProblemSpec::PPowerNonneg { .. } => "p_power_nonneg",
            ProblemSpec::BoxLeastSquares { .. } => "box_least_squares",
            ProblemSpec::StronglyConvexQuadratic { .. } => "strongly_convex_quadratic",
            ProblemSpec::ExpUnbounded => "exp_unbounded",
        }
    }

    pub fn lasso(a: Vec<Vec<f64>>, b: Vec<f64>, lambda: f64) -> Self {
        ProblemSpec::Lasso { a: Some(a), b: Some(b), rows: None, cols: None, seed: None, lambda }
    }

    pub fn random_lasso(rows: usize, cols: usize, seed: u64, lambda: f64) -> Self {
        ProblemSpec::Lasso { a: None, b: None, rows: Some(rows), cols: Some(cols), seed: Some(seed), lambda }
    }

    pub fn p_power(p: f64) -> Self {
        ProblemSpec::PPowerNonneg { p, dimension: 1 }
    }

    pub fn quadratic(q: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        ProblemSpec::StronglyConvexQuadratic {
            q: Some(q),
            b: Some(b),
            dimension: None,
            min_eigenvalue: None,
            max_eigenvalue: None,
            seed: None,
            regularization: None,
        }
    }

    pub fn random_quadratic(dimension: usize, min_eigenvalue: f64, max_eigenvalue: f64, seed: u64) -> Self {
        ProblemSpec::StronglyConvexQuadratic {
            q: None,
            b: None,
            dimension: Some(dimension),
            min_eigenvalue: Some(min_eigenvalue),
            max_eigenvalue: Some(max_eigenvalue),
            seed: Some(seed),
            regularization: None,
        }
    }

    /// Starting point used when a run does not supply one.
    pub fn default_start(&self) -> Result<Vector> {
        Ok(match self {
            ProblemSpec::Lasso { .. } => Vector::zeros(self.dimension()?),
            ProblemSpec::PPowerNonneg { dimension, .. } => Vector::from_element(*dimension, 1.0),
            ProblemSpec::BoxLeastSquares { lower, upper, .. } => {
                let n = self.dimension()?;
                let lo = lower.expand(n, "lower")?;
                let hi = upper.expand(n, "upper")?;
                Vector::zeros(n).zip_zip_map(&lo, &hi, |z, l, u| z.max(l).min(u))
            }
            ProblemSpec::StronglyConvexQuadratic { .. } => Vector::from_element(self.dimension()?, 1.0),
            ProblemSpec::ExpUnbounded => Vector::zeros(1),
        })
    }

    pub fn dimension(&self) -> Result<usize> {
        match self {
            ProblemSpec::Lasso { a, cols, .. } | ProblemSpec::BoxLeastSquares { a, cols, .. } => match (a, cols) {
                (Some(a), _) => a.first().map(|r| r.len()).ok_or_else(|| malformed("empty matrix a")),
                (None, Some(c)) => Ok(*c),
                (None, None) => Err(malformed("give either a and b, or rows, cols and seed")),
            },
            ProblemSpec::PPowerNonneg { dimension, .. } => Ok(*dimension),
            ProblemSpec::StronglyConvexQuadratic { q, dimension, .. } => match (q, dimension) {
                (Some(q), _) => Ok(q.len()),
                (None, Some(n)) => Ok(*n),
                (None, None) => Err(malformed("give either q and b, or dimension and seed")),
            },
            ProblemSpec::ExpUnbounded => Ok(1),
        }
    }
}

/// Entry of [`catalog`].
#[derive(Clone, Copy, Debug)]
pub struct CatalogEntry {
    pub family: &'static str,
    pub summary: &'static str,
    pub metadata: &'static str,
}

pub fn catalog() -> &'static [CatalogEntry] {
    &[
        CatalogEntry {
            family: "lasso",
            summary: "½|Ax-b|² + λ|x|₁; explicit a/b or random rows/cols/seed",
            metadata: "L; x*, F* when AᵀA is diagonal",
        },
        CatalogEntry {
            family: "p_power_nonneg",
            summary: "Σ|x_i|^(1+p)/(1+p) over x >= 0, 0 < p < 1",
            metadata: "x* = 0, F* = 0; no global L",
        },
        CatalogEntry {
            family: "box_least_squares",
            summary: "½|Ax-b|² over lower <= x <= upper",
            metadata: "L; x*, F* when AᵀA is diagonal",
        },
        CatalogEntry {
            family: "strongly_convex_quadratic",
            summary: "½xᵀQx - bᵀx (+ w|x|²/2); explicit q/b or random spectrum",
            metadata: "x*, F*, L = λmax(Q), μ = λmin(Q)",
        },
        CatalogEntry {
            family: "exp_unbounded",
            summary: "exp(x) on the real line",
            metadata: "no minimizer; infimum 0",
        },
    ]
}

pub fn build_problem(spec: &ProblemSpec) -> Result<CompositeProblem> {
    match spec {
        ProblemSpec::Lasso { a, b, rows, cols, seed, lambda } => {
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(malformed(format!("lasso requires lambda > 0, got {lambda}")));
            }
            let (a, b) = least_squares_data(a, b, rows, cols, seed)?;
            build_lasso(a, b, *lambda)
        }
        ProblemSpec::PPowerNonneg { p, dimension } => build_p_power(*p, *dimension),
        ProblemSpec::BoxLeastSquares { a, b, rows, cols, seed, lower, upper } => {
            let (a, b) = least_squares_data(a, b, rows, cols, seed)?;
            let n = a.ncols();
            build_box_least_squares(a, b, lower.expand(n, "lower")?, upper.expand(n, "upper")?)
        }
        ProblemSpec::StronglyConvexQuadratic {
            q,
            b,
            dimension,
            min_eigenvalue,
            max_eigenvalue,
            seed,
            regularization,
        } => {
            let (q, b, spectrum) = match (q, b, dimension) {
                (Some(q), Some(b), None) => {
                    let q = dense(q, "q")?;
                    if q.nrows() != q.ncols() {
                        return Err(malformed("q must be square"));
                    }
                    if b.len() != q.nrows() {
                        return Err(malformed("b length does not match q"));
                    }
                    (q, Vector::from_column_slice(b), None)
                }
                (None, None, Some(n)) => {
                    let (lo, hi, seed) = match (min_eigenvalue, max_eigenvalue, seed) {
                        (Some(lo), Some(hi), Some(seed)) => (*lo, *hi, *seed),
                        _ => return Err(malformed("random quadratic needs min_eigenvalue, max_eigenvalue and seed")),
                    };
                    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                        return Err(malformed("eigenvalues must satisfy 0 < min <= max"));
                    }
                    let (q, b) = random_quadratic(*n, lo, hi, seed)?;
                    (q, b, Some((lo, hi)))
                }
                _ => return Err(malformed("give either q and b, or dimension and seed")),
            };
            build_quadratic(q, b, spectrum, *regularization)
        }
        ProblemSpec::ExpUnbounded => {
            let f = SmoothPart::new(|x: &Vector| x[0].exp(), |x: &Vector| x.map(f64::exp));
            Ok(CompositeProblem::new(f, prox_zero(), 1)?.with_infimum(0.0))
        }
    }
}

fn dense(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    if n == 0 || m == 0 {
        return Err(malformed(format!("{name} must be nonempty")));
    }
    if rows.iter().any(|r| r.len() != m) {
        return Err(malformed(format!("{name} has ragged rows")));
    }
    let mat = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(malformed(format!("{name} has non-finite entries")));
    }
    Ok(mat)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    // Row-major fill so the draw order matches the printed layout.
    let values: Vec<f64> = (0..rows * cols).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

fn least_squares_data(
    a: &Option<Vec<Vec<f64>>>,
    b: &Option<Vec<f64>>,
    rows: &Option<usize>,
    cols: &Option<usize>,
    seed: &Option<u64>,
) -> Result<(DMatrix<f64>, Vector)> {
    match (a, b, rows, cols, seed) {
        (Some(a), Some(b), None, None, None) => {
            let a = dense(a, "a")?;
            if b.len() != a.nrows() {
                return Err(malformed("b length does not match the rows of a"));
            }
            let b = Vector::from_column_slice(b);
            if b.iter().any(|v| !v.is_finite()) {
                return Err(malformed("b has non-finite entries"));
            }
            Ok((a, b))
        }
        (None, None, Some(m), Some(n), Some(seed)) => {
            if *m == 0 || *n == 0 {
                return Err(malformed("rows and cols must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let a = gaussian_matrix(&mut rng, *m, *n, 1.0 / (*m as f64).sqrt());
            let b = Vector::from_iterator(*m, (0..*m).map(|_| rng.sample::<f64, _>(StandardNormal)));
            Ok((a, b))
        }
        _ => Err(malformed("give either a and b, or rows, cols and seed")),
    }
}

/// Largest eigenvalue of the positive semidefinite `m`, estimated by power
/// iteration from the all-ones vector.
pub fn power_iteration(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    let mut v = Vector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_CAP {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - estimate).abs() <= POWER_ITERATION_TOL * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

fn least_squares_smooth(a: DMatrix<f64>, b: Vector) -> (SmoothPart, DMatrix<f64>, Vector) {
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let (a_f, b_f) = (a.clone(), b.clone());
    let (a_g, b_g) = (a, b);
    let smooth = SmoothPart::new(
        move |x: &Vector| 0.5 * (&a_f * x - &b_f).norm_squared(),
        move |x: &Vector| a_g.transpose() * (&a_g * x - &b_g),
    );
    (smooth, ata, atb)
}

fn build_lasso(a: DMatrix<f64>, b: Vector, lambda: f64) -> Result<CompositeProblem> {
    let n = a.ncols();
    let (smooth, ata, atb) = least_squares_smooth(a, b);
    let l = power_iteration(&ata) * (1.0 + LIPSCHITZ_INFLATION);
    let smooth = if l > 0.0 { smooth.with_lipschitz(l) } else { smooth };
    let problem = CompositeProblem::new(smooth, prox_l1(lambda)?, n)?;
    let diagonal = ata.diagonal();
    if is_diagonal(&ata) && diagonal.iter().all(|&d| d > 0.0) {
        let x = Vector::from_fn(n, |i, _| {
            let z = atb[i];
            z.signum() * (z.abs() - lambda).max(0.0) / diagonal[i]
        });
        return problem.with_solution(x, None);
    }
    Ok(problem)
}

fn build_box_least_squares(a: DMatrix<f64>, b: Vector, lower: Vector, upper: Vector) -> Result<CompositeProblem> {
    let n = a.ncols();
    let (smooth, ata, atb) = least_squares_smooth(a, b);
    let l = power_iteration(&ata) * (1.0 + LIPSCHITZ_INFLATION);
    let smooth = if l > 0.0 { smooth.with_lipschitz(l) } else { smooth };
    let problem = CompositeProblem::new(smooth, prox_indicator_box(lower.clone(), upper.clone())?, n)?;
    let diagonal = ata.diagonal();
    if is_diagonal(&ata) && diagonal.iter().all(|&d| d > 0.0) {
        let x = Vector::from_fn(n, |i, _| (atb[i] / diagonal[i]).max(lower[i]).min(upper[i]));
        return problem.with_solution(x, None);
    }
    Ok(problem)
}

fn build_p_power(p: f64, dimension: usize) -> Result<CompositeProblem> {
    if !(p > 0.0 && p < 1.0) {
        return Err(malformed(format!("p_power_nonneg requires 0 < p < 1, got {p}")));
    }
    if dimension == 0 {
        return Err(malformed("dimension must be positive"));
    }
    let f = SmoothPart::new(
        move |x: &Vector| x.iter().map(|v| v.abs().powf(1.0 + p)).sum::<f64>() / (1.0 + p),
        move |x: &Vector| x.map(|v| if v == 0.0 { 0.0 } else { v.signum() * v.abs().powf(p) }),
    );
    CompositeProblem::new(f, prox_indicator_nonneg(), dimension)?.with_solution(Vector::zeros(dimension), Some(0.0))
}

fn random_quadratic(n: usize, lo: f64, hi: f64, seed: u64) -> Result<(DMatrix<f64>, Vector)> {
    if n == 0 {
        return Err(malformed("dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(&mut rng, n, n, 1.0);
    let u = g.qr().q();
    // Geometric spacing puts eigenvalues at both ends of the range.
    let eig = Vector::from_fn(n, |i, _| if n == 1 { lo } else { lo * (hi / lo).powf(i as f64 / (n - 1) as f64) });
    let q = &u * DMatrix::from_diagonal(&eig) * u.transpose();
    let q = (&q + q.transpose()) * 0.5;
    let b = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    Ok((q, b))
}

fn build_quadratic(
    q: DMatrix<f64>,
    b: Vector,
    spectrum: Option<(f64, f64)>,
    regularization: Option<f64>,
) -> Result<CompositeProblem> {
    let n = q.nrows();
    if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
        return Err(malformed("q must be symmetric"));
    }
    let (mu, l) = match spectrum {
        Some(s) => s,
        None => {
            let eig = SymmetricEigen::new(q.clone()).eigenvalues;
            (eig.min(), eig.max())
        }
    };
    if !(mu > 0.0) {
        return Err(malformed(format!("q must be positive definite, smallest eigenvalue {mu}")));
    }
    let w = regularization.unwrap_or(0.0);
    let nonsmooth = match regularization {
        Some(w) => prox_quadratic(w)?,
        None => prox_zero(),
    };
    let shifted = &q + DMatrix::identity(n, n) * w;
    let x_star = shifted.cholesky().ok_or_else(|| malformed("q + wI is not positive definite"))?.solve(&b);
    let (q_f, b_f) = (q.clone(), b.clone());
    let smooth =
        SmoothPart::new(move |x: &Vector| 0.5 * x.dot(&(&q_f * x)) - b_f.dot(x), move |x: &Vector| &q * x - &b)
            .with_lipschitz(l)
            .with_strong_convexity(mu);
    CompositeProblem::new(smooth, nonsmooth, n)?.with_solution(x_star, None)
}
