#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use fbls::problem::{CompositeProblem, NonsmoothPart, SmoothPart, Vector};
use fbls::problems::{build_problem, Bound, ProblemSpec};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn catalog_specs() -> Vec<ProblemSpec> {
    vec![
        ProblemSpec::random_lasso(20, 10, 17, 0.1),
        ProblemSpec::p_power(0.5),
        ProblemSpec::BoxLeastSquares {
            a: None,
            b: None,
            rows: Some(15),
            cols: Some(8),
            seed: Some(5),
            lower: Bound::Scalar(-0.5),
            upper: Bound::Scalar(0.5),
        },
        ProblemSpec::random_quadratic(5, 0.5, 20.0, 3),
        ProblemSpec::ExpUnbounded,
    ]
}

/// A random point of `dom g` for the catalog problem `spec`.
pub fn random_start(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> Vector {
    let n = spec.dimension().unwrap();
    match spec {
        ProblemSpec::PPowerNonneg { .. } => Vector::from_fn(n, |_, _| rng.random_range(1e-3..3.0)),
        ProblemSpec::BoxLeastSquares { .. } => Vector::from_fn(n, |_, _| rng.random_range(-0.5..=0.5)),
        _ => Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0)),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Default)]
pub struct Counters {
    pub f: Arc<AtomicUsize>,
    pub grad: Arc<AtomicUsize>,
    pub prox: Arc<AtomicUsize>,
}

impl Counters {
    pub fn get(&self) -> (usize, usize, usize) {
        (self.prox.load(Ordering::SeqCst), self.grad.load(Ordering::SeqCst), self.f.load(Ordering::SeqCst))
    }
}

/// Wraps the oracles of `spec` with call counters. `g` evaluations are not
/// counted: they come with each `f` evaluation.
pub fn instrumented(spec: &ProblemSpec) -> (CompositeProblem, Counters) {
    let inner = Arc::new(build_problem(spec).unwrap());
    let c = Counters::default();
    let (i1, i2, i3, i4, i5, i6) =
        (inner.clone(), inner.clone(), inner.clone(), inner.clone(), inner.clone(), inner.clone());
    let (cf, cg, cp) = (c.f.clone(), c.grad.clone(), c.prox.clone());
    let mut smooth = SmoothPart::new(
        move |x: &Vector| {
            cf.fetch_add(1, Ordering::SeqCst);
            i1.smooth.value(x)
        },
        move |x: &Vector| {
            cg.fetch_add(1, Ordering::SeqCst);
            i2.smooth.gradient(x)
        },
    );
    smooth.lipschitz_constant = inner.lipschitz_constant();
    smooth.strong_convexity = inner.strong_convexity();
    let nonsmooth = NonsmoothPart::new(
        move |x: &Vector| i3.nonsmooth.value(x),
        move |alpha, z: &Vector| {
            cp.fetch_add(1, Ordering::SeqCst);
            i4.nonsmooth.prox(alpha, z).unwrap()
        },
        move |x: &Vector| i5.nonsmooth.in_domain(x),
    )
    .with_projection(move |x: &Vector| i6.nonsmooth.project_domain(x).unwrap());
    let mut problem = CompositeProblem::new(smooth, nonsmooth, inner.dimension()).unwrap();
    if let Some(x) = inner.known_solution() {
        problem = problem.with_solution(x.clone(), inner.known_optimal_value()).unwrap();
    }
    (problem, c)
}

/// `J(x, α)` from the raw oracles.
pub fn fb(problem: &CompositeProblem, x: &Vector, alpha: f64) -> Vector {
    let z = x - problem.smooth.gradient(x) * alpha;
    problem.nonsmooth.prox(alpha, &z).unwrap()
}

pub fn total(problem: &CompositeProblem, x: &Vector) -> f64 {
    problem.smooth.value(x) + problem.nonsmooth.value(x).to_f64()
}

/// Rejection test of the first linesearch at stepsize `alpha`.
pub fn ls1_rejects(problem: &CompositeProblem, x: &Vector, alpha: f64, delta: f64) -> bool {
    let j = fb(problem, x, alpha);
    alpha * (problem.smooth.gradient(&j) - problem.smooth.gradient(x)).norm() > delta * (&j - x).norm()
}

/// Rejection test of the second linesearch at `beta`.
pub fn ls2_rejects(problem: &CompositeProblem, x: &Vector, beta: f64) -> bool {
    let j = fb(problem, x, 1.0);
    let d = x - &j;
    let trial = x - &d * beta;
    let g_x = problem.nonsmooth.value(x).to_f64();
    let g_j = problem.nonsmooth.value(&j).to_f64();
    let rhs = total(problem, x) - beta * (g_x - g_j) - beta * problem.smooth.gradient(x).dot(&d)
        + beta / 2.0 * d.norm_squared();
    total(problem, &trial) > rhs
}

/// The trial sequence `initial, initial·θ, …` as the linesearches build it.
pub fn trial(initial: f64, theta: f64, j: usize) -> f64 {
    (0..j).fold(initial, |a, _| a * theta)
}
