mod common;

use common::*;
use fbls::linesearch::{linesearch1, linesearch2, linesearch_descent_lemma};
use fbls::problem::{LinesearchParams, Vector};
use fbls::problems::{build_problem, ProblemSpec};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = LinesearchParams> {
    (0.1f64..5.0, 0.1f64..0.9, 0.05f64..0.49)
        .prop_map(|(sigma, theta, delta)| LinesearchParams::new(sigma, theta, delta, 60).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_linesearch_returns_first_acceptable_trial(which in 0usize..5, seed in any::<u64>(), p in params()) {
        let spec = &catalog_specs()[which];
        let problem = build_problem(spec).unwrap();
        let x = random_start(spec, &mut rng(seed));
        let out = linesearch1(&problem, &x, &p, p.sigma).unwrap();
        prop_assert_eq!(out.stepsize, trial(p.sigma, p.theta, out.trials));
        prop_assert!(!ls1_rejects(&problem, &x, out.stepsize, p.delta));
        for j in 0..out.trials {
            prop_assert!(ls1_rejects(&problem, &x, trial(p.sigma, p.theta, j), p.delta));
        }
        prop_assert_eq!(&out.accepted_point, &fb(&problem, &x, out.stepsize));
    }

    #[test]
    fn second_linesearch_returns_first_acceptable_trial(which in 0usize..5, seed in any::<u64>(), p in params()) {
        let spec = &catalog_specs()[which];
        let problem = build_problem(spec).unwrap();
        let x = random_start(spec, &mut rng(seed));
        let out = linesearch2(&problem, &x, &p).unwrap();
        prop_assert_eq!(out.stepsize, trial(1.0, p.theta, out.trials));
        prop_assert!(!ls2_rejects(&problem, &x, out.stepsize));
        for j in 0..out.trials {
            prop_assert!(ls2_rejects(&problem, &x, trial(1.0, p.theta, j)));
        }
        prop_assert_eq!(out.prox_calls, 1);
    }

    #[test]
    fn stepsize_floors_with_lipschitz_gradient(seed in 0u64..1000, p in params()) {
        let spec = ProblemSpec::random_quadratic(4, 0.1, 8.0, seed);
        let problem = build_problem(&spec).unwrap();
        let l = problem.lipschitz_constant().unwrap();
        let x = random_start(&spec, &mut rng(seed));
        let a = linesearch1(&problem, &x, &p, p.sigma).unwrap().stepsize;
        prop_assert!(a >= p.sigma.min(p.delta * p.theta / l) - 1e-12);
        let b = linesearch2(&problem, &x, &p).unwrap().stepsize;
        prop_assert!(b >= 1f64.min(p.theta / (2.0 * l)) - 1e-12);
    }

    #[test]
    fn oracle_counts_match_reported_counts(which in 0usize..5, seed in any::<u64>(), p in params()) {
        let spec = &catalog_specs()[which];
        let (problem, counters) = instrumented(spec);
        let x = random_start(spec, &mut rng(seed));

        let before = counters.get();
        let out = linesearch1(&problem, &x, &p, p.sigma).unwrap();
        let after = counters.get();
        prop_assert_eq!(after.0 - before.0, out.prox_calls);
        prop_assert_eq!(after.1 - before.1, out.grad_calls);
        prop_assert_eq!(out.prox_calls, out.trials + 1);

        let before = counters.get();
        let out = linesearch2(&problem, &x, &p).unwrap();
        let after = counters.get();
        prop_assert_eq!(after.0 - before.0, 1);
        prop_assert_eq!(after.1 - before.1, out.grad_calls);
        prop_assert_eq!(after.2 - before.2, out.f_calls);
        prop_assert_eq!(out.f_calls, out.trials + 2);
    }
}

#[test]
fn finite_termination_from_random_starts() {
    let p = LinesearchParams::new(1.0, 0.5, 0.4, 60).unwrap();
    let mut r = rng(77);
    for spec in catalog_specs() {
        let problem = build_problem(&spec).unwrap();
        for _ in 0..100 {
            let x = random_start(&spec, &mut r);
            linesearch1(&problem, &x, &p, p.sigma).unwrap();
            linesearch2(&problem, &x, &p).unwrap();
        }
    }
}

#[test]
fn descent_lemma_baseline_accepts_sufficient_decrease() {
    let p = LinesearchParams::default();
    let mut r = rng(9);
    for spec in catalog_specs() {
        let problem = build_problem(&spec).unwrap();
        for _ in 0..20 {
            let x = random_start(&spec, &mut r);
            let out = linesearch_descent_lemma(&problem, &x, &p).unwrap();
            let j = &out.accepted_point;
            let step = j - &x;
            let model = problem.smooth.value(&x)
                + problem.smooth.gradient(&x).dot(&step)
                + step.norm_squared() / (2.0 * out.stepsize);
            assert!(problem.smooth.value(j) <= model);
        }
    }
}

#[test]
fn minimizer_short_circuits_every_linesearch() {
    let problem = build_problem(&ProblemSpec::lasso(vec![vec![1.0]], vec![1.0], 0.5)).unwrap();
    let x = Vector::from_element(1, 0.5);
    let p = LinesearchParams::new(3.0, 0.5, 0.4, 60).unwrap();
    let out = linesearch1(&problem, &x, &p, p.sigma).unwrap();
    assert_eq!((out.stepsize, out.trials), (3.0, 0));
    let out = linesearch2(&problem, &x, &p).unwrap();
    assert_eq!((out.stepsize, out.trials), (1.0, 0));
}
