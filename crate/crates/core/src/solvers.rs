//! The forward-backward iterations and their traces.
//!
//! Every solver evaluates a linesearch (or a fixed step) at each record `k`
//! and stops when the residual drops to `residual_tolerance` or after
//! `max_iterations` steps. A stopped run does not take its last step:
//! the terminal record describes the point returned as `final_point`,
//! except for [`Method::Method3`] whose stopping test certifies the new
//! point `x^{k+1} = J(ỹ^k, α_k)` rather than `x^k`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linesearch::{
    linesearch1_at, linesearch2_at, linesearch_descent_lemma_at, nonsmooth_value, LinesearchFailure, OracleCalls,
};
use crate::problem::{norm, CompositeProblem, Method, SolverConfig, Vector};
use crate::prox::forward_backward_with_gradient;

/// Objective growth (relative to `max(|F(x^0)|, 1)`) at which the fixed-step
/// baseline is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    /// `α_k` (or `β_k` for Method 2).
    pub stepsize: f64,
    /// `|x^k - J(x^k, α_k)|`; `|x^k - J_k|` for Method 2 and
    /// `|x^{k+1} - ỹ^k|` for Method 3.
    pub residual: f64,
    /// `|x^{k+1} - x^k|`, zero on a record where no step was taken.
    pub step_norm: f64,
    pub ls_trials: usize,
    pub cum_prox: usize,
    pub cum_grad: usize,
    pub cum_f: usize,
    #[serde(default)]
    pub t_k: Option<f64>,
    #[serde(default)]
    pub dist_to_solution: Option<f64>,
}

impl IterationRecord {
    pub fn point(&self) -> Option<Vector> {
        self.x.as_ref().map(|x| Vector::from_column_slice(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualTolerance,
    MaxIterations,
    LinesearchFailure,
    /// Fixed-step baseline only.
    Diverged,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::ResidualTolerance => "residual_tolerance",
            Termination::MaxIterations => "max_iterations",
            Termination::LinesearchFailure => "linesearch_failure",
            Termination::Diverged => "diverged",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Termination::LinesearchFailure | Termination::Diverged)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub method: Method,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub final_point: Vec<f64>,
    /// Description of the linesearch failure, when there was one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl SolverTrace {
    /// Iterative steps executed, counting the one that triggered termination.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_point(&self) -> Vector {
        Vector::from_column_slice(&self.final_point)
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("traces are never empty")
    }

    pub fn min_stepsize(&self) -> f64 {
        self.records.iter().map(|r| r.stepsize).fold(f64::INFINITY, f64::min)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    pub fn total_calls(&self) -> OracleCalls {
        let last = self.last();
        OracleCalls { prox: last.cum_prox, grad: last.cum_grad, f: last.cum_f }
    }

    pub fn has_iterates(&self) -> bool {
        self.records.iter().all(|r| r.x.is_some())
    }
}

struct Recorder<'a> {
    problem: &'a CompositeProblem,
    config: &'a SolverConfig,
    records: Vec<IterationRecord>,
    calls: OracleCalls,
}

struct Step {
    stepsize: f64,
    residual: f64,
    step_norm: f64,
    trials: usize,
    t_k: Option<f64>,
}

impl<'a> Recorder<'a> {
    fn new(problem: &'a CompositeProblem, config: &'a SolverConfig) -> Self {
        Recorder { problem, config, records: Vec::new(), calls: OracleCalls::default() }
    }

    fn gradient(&mut self, x: &Vector) -> Result<Vector> {
        self.calls.grad += 1;
        self.problem.gradient_checked(x)
    }

    fn objective(&mut self, x: &Vector) -> Result<f64> {
        self.calls.f += 1;
        let f = self.problem.smooth_value_checked(x)?;
        Ok(f + nonsmooth_value(self.problem, x)?)
    }

    fn push(&mut self, k: usize, x: &Vector, objective: f64, step: Step) {
        let dist = self.problem.known_solution().map(|s| norm(&(x - s)));
        self.records.push(IterationRecord {
            k,
            x: self.config.record_iterates.then(|| x.as_slice().to_vec()),
            objective,
            stepsize: step.stepsize,
            residual: step.residual,
            step_norm: step.step_norm,
            ls_trials: step.trials,
            cum_prox: self.calls.prox,
            cum_grad: self.calls.grad,
            cum_f: self.calls.f,
            t_k: step.t_k,
            dist_to_solution: dist,
        });
    }

    fn finish(self, termination: Termination, final_point: Vector) -> SolverTrace {
        SolverTrace {
            method: self.config.method,
            records: self.records,
            termination,
            final_point: final_point.as_slice().to_vec(),
            failure: None,
        }
    }

    fn fail(
        mut self,
        k: usize,
        x: &Vector,
        objective: f64,
        t_k: Option<f64>,
        failure: LinesearchFailure,
    ) -> SolverTrace {
        self.calls += failure.calls;
        let residual = norm(&(x - &failure.last_point));
        self.push(
            k,
            x,
            objective,
            Step { stepsize: failure.last_stepsize, residual, step_norm: 0.0, trials: failure.trials, t_k },
        );
        let mut trace = self.finish(Termination::LinesearchFailure, x.clone());
        trace.failure = Some(failure.to_string());
        trace
    }
}

fn check_start(problem: &CompositeProblem, config: &SolverConfig, x0: &Vector, method: Method) -> Result<()> {
    if config.method != method {
        return Err(invalid(format!("config selects {}, solver is {method}", config.method)));
    }
    config.validate_for(problem)?;
    problem.check_dimension(x0)?;
    if !problem.nonsmooth.in_domain(x0) {
        return Err(Error::OutsideDomain);
    }
    Ok(())
}

/// Runs the method selected by `config.method`.
pub fn solve(problem: &CompositeProblem, config: &SolverConfig, x0: &Vector) -> Result<SolverTrace> {
    match config.method {
        Method::Method1 => solve_method1(problem, config, x0),
        Method::Method2 => solve_method2(problem, config, x0),
        Method::Method3 => solve_method3(problem, config, x0),
        Method::FixedStep => solve_fixed_step(problem, config, x0),
        Method::DescentLemmaLs => solve_descent_lemma(problem, config, x0),
    }
}

/// `x^{k+1} = J(x^k, α_k)` with `α_k` from the first linesearch started at
/// `σ`. The point and gradient computed on the accepted trial are reused.
pub fn solve_method1(problem: &CompositeProblem, config: &SolverConfig, x0: &Vector) -> Result<SolverTrace> {
    check_start(problem, config, x0, Method::Method1)?;
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.clone();
    let mut grad = rec.gradient(&x)?;
    let mut value = rec.objective(&x)?;
    for k in 0.. {
        let ls = match linesearch1_at(problem, &x, &grad, &config.params, config.params.sigma) {
            Ok(ls) => ls,
            Err(Error::Linesearch(failure)) => return Ok(rec.fail(k, &x, value, None, failure)),
            Err(e) => return Err(e),
        };
        rec.calls += ls.calls();
        let residual = norm(&(&x - &ls.accepted_point));
        let mut step = Step { stepsize: ls.stepsize, residual, step_norm: 0.0, trials: ls.trials, t_k: None };
        if residual <= config.residual_tolerance {
            rec.push(k, &x, value, step);
            return Ok(rec.finish(Termination::ResidualTolerance, x));
        }
        let next = ls.accepted_point;
        let next_value = rec.objective(&next)?;
        step.step_norm = residual;
        rec.push(k, &x, value, step);
        grad = ls.accepted_gradient.expect("first linesearch returns the accepted gradient");
        x = next;
        value = next_value;
        if k + 1 == config.max_iterations {
            break;
        }
    }
    Ok(rec.finish(Termination::MaxIterations, x))
}

/// `J_k = prox_g(x^k - ∇f(x^k))`, `x^{k+1} = x^k - β_k(x^k - J_k)` with
/// `β_k` from the second linesearch. One prox per iteration.
pub fn solve_method2(problem: &CompositeProblem, config: &SolverConfig, x0: &Vector) -> Result<SolverTrace> {
    check_start(problem, config, x0, Method::Method2)?;
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.clone();
    rec.calls.f += 1;
    let mut f_x = problem.smooth_value_checked(&x)?;
    let mut g_x = nonsmooth_value(problem, &x)?;
    for k in 0.. {
        let grad = rec.gradient(&x)?;
        let ls = match linesearch2_at(problem, &x, &grad, (f_x, g_x), &config.params) {
            Ok(ls) => ls,
            Err(Error::Linesearch(failure)) => return Ok(rec.fail(k, &x, f_x + g_x, None, failure)),
            Err(e) => return Err(e),
        };
        rec.calls += ls.calls();
        let d = &x - &ls.accepted_point;
        let residual = norm(&d);
        let mut step = Step { stepsize: ls.stepsize, residual, step_norm: 0.0, trials: ls.trials, t_k: None };
        if residual <= config.residual_tolerance {
            rec.push(k, &x, f_x + g_x, step);
            return Ok(rec.finish(Termination::ResidualTolerance, x));
        }
        let next = &x - &d * ls.stepsize;
        let (f_n, g_n) = match ls.trial_values {
            Some(values) => values,
            None => {
                rec.calls.f += 1;
                (problem.smooth_value_checked(&next)?, nonsmooth_value(problem, &next)?)
            }
        };
        step.step_norm = norm(&(&next - &x));
        rec.push(k, &x, f_x + g_x, step);
        x = next;
        f_x = f_n;
        g_x = g_n;
        if k + 1 == config.max_iterations {
            break;
        }
    }
    Ok(rec.finish(Termination::MaxIterations, x))
}

/// `t_{k+1} = (1 + sqrt(1 + 4 t_k²))/2`.
pub fn next_momentum(t: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
}

/// Accelerated forward-backward:
/// `y^k = x^k + ((t_k - 1)/t_{k+1})(x^k - x^{k-1})`, `ỹ^k = P(y^k)`,
/// `x^{k+1} = J(ỹ^k, α_k)` with `α_k` from the first linesearch started at
/// `α_{k-1}` (`α_{-1} = σ`, `x^{-1} = x^0`, `t_0 = 1`).
pub fn solve_method3(problem: &CompositeProblem, config: &SolverConfig, x0: &Vector) -> Result<SolverTrace> {
    check_start(problem, config, x0, Method::Method3)?;
    let mut rec = Recorder::new(problem, config);
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut t = 1.0;
    let mut alpha = config.params.sigma;
    let mut value = rec.objective(&x)?;
    for k in 0.. {
        let t_next = next_momentum(t);
        let y = &x + (&x - &x_prev) * ((t - 1.0) / t_next);
        let y = problem.nonsmooth.project_domain(&y).expect("validated: projection present");
        let grad_y = rec.gradient(&y)?;
        let ls = match linesearch1_at(problem, &y, &grad_y, &config.params, alpha) {
            Ok(ls) => ls,
            Err(Error::Linesearch(failure)) => return Ok(rec.fail(k, &x, value, Some(t), failure)),
            Err(e) => return Err(e),
        };
        rec.calls += ls.calls();
        let next = ls.accepted_point;
        let residual = norm(&(&next - &y));
        let mut step = Step { stepsize: ls.stepsize, residual, step_norm: 0.0, trials: ls.trials, t_k: Some(t) };
        if residual <= config.residual_tolerance {
            rec.push(k, &x, value, step);
            return Ok(rec.finish(Termination::ResidualTolerance, next));
        }
        let next_value = rec.objective(&next)?;
        step.step_norm = norm(&(&next - &x));
        rec.push(k, &x, value, step);
        alpha = ls.stepsize;
        t = t_next;
        x_prev = std::mem::replace(&mut x, next);
        value = next_value;
        if k + 1 == config.max_iterations {
            break;
        }
    }
    Ok(rec.finish(Termination::MaxIterations, x))
}

/// Classical iteration with a constant stepsize. Divergence (objective above
/// [`DIVERGENCE_FACTOR`]` · max(|F(x^0)|, 1)` or non-finite) ends the run.
pub fn solve_fixed_step(problem: &CompositeProblem, config: &SolverConfig, x0: &Vector) -> Result<SolverTrace> {
    check_start(problem, config, x0, Method::FixedStep)?;
    let alpha = config.fixed_stepsize.expect("validated: fixed_stepsize present");
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.clone();
    let mut value = rec.objective(&x)?;
    let limit = DIVERGENCE_FACTOR * value.abs().max(1.0);
    for k in 0.. {
        let grad = rec.gradient(&x)?;
        let next = forward_backward_with_gradient(problem, &x, &grad, alpha)?;
        rec.calls.prox += 1;
        let residual = norm(&(&x - &next));
        let mut step = Step { stepsize: alpha, residual, step_norm: 0.0, trials: 0, t_k: None };
        if residual <= config.residual_tolerance {
            rec.push(k, &x, value, step);
            return Ok(rec.finish(Termination::ResidualTolerance, x));
        }
        rec.calls.f += 1;
        let next_value = problem.smooth.value(&next) + nonsmooth_value(problem, &next)?;
        step.step_norm = residual;
        rec.push(k, &x, value, step);
        if !next_value.is_finite() || next_value > limit {
            return Ok(rec.finish(Termination::Diverged, next));
        }
        x = next;
        value = next_value;
        if k + 1 == config.max_iterations {
            break;
        }
    }
    Ok(rec.finish(Termination::MaxIterations, x))
}

/// `x^{k+1} = J(x^k, α_k)` with `α_k` from the descent-lemma linesearch.
pub fn solve_descent_lemma(problem: &CompositeProblem, config: &SolverConfig, x0: &Vector) -> Result<SolverTrace> {
    check_start(problem, config, x0, Method::DescentLemmaLs)?;
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.clone();
    rec.calls.f += 1;
    let mut f_x = problem.smooth_value_checked(&x)?;
    let mut g_x = nonsmooth_value(problem, &x)?;
    for k in 0.. {
        let grad = rec.gradient(&x)?;
        let ls = match linesearch_descent_lemma_at(problem, &x, &grad, f_x, &config.params) {
            Ok(ls) => ls,
            Err(Error::Linesearch(failure)) => return Ok(rec.fail(k, &x, f_x + g_x, None, failure)),
            Err(e) => return Err(e),
        };
        rec.calls += ls.calls();
        let residual = norm(&(&x - &ls.accepted_point));
        let mut step = Step { stepsize: ls.stepsize, residual, step_norm: 0.0, trials: ls.trials, t_k: None };
        if residual <= config.residual_tolerance {
            rec.push(k, &x, f_x + g_x, step);
            return Ok(rec.finish(Termination::ResidualTolerance, x));
        }
        let (f_n, g_n) = ls.trial_values.expect("descent-lemma linesearch returns trial values");
        step.step_norm = residual;
        rec.push(k, &x, f_x + g_x, step);
        x = ls.accepted_point;
        f_x = f_n;
        g_x = g_n;
        if k + 1 == config.max_iterations {
            break;
        }
    }
    Ok(rec.finish(Termination::MaxIterations, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LinesearchParams, SmoothPart};
    use crate::prox::{prox_indicator_nonneg, prox_l1, prox_zero};

    fn scalar(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    fn half_square() -> CompositeProblem {
        let f = SmoothPart::new(|x: &Vector| 0.5 * x.norm_squared(), |x: &Vector| x.clone());
        CompositeProblem::new(f, prox_zero(), 1).unwrap().with_solution(scalar(0.0), Some(0.0)).unwrap()
    }

    fn scalar_lasso() -> CompositeProblem {
        let f = SmoothPart::new(|x: &Vector| 0.5 * (x[0] - 1.0).powi(2), |x: &Vector| scalar(x[0] - 1.0));
        CompositeProblem::new(f, prox_l1(0.5).unwrap(), 1).unwrap().with_solution(scalar(0.5), Some(0.375)).unwrap()
    }

    fn p_power() -> CompositeProblem {
        let f = SmoothPart::new(
            |x: &Vector| x[0].abs().powf(1.5) / 1.5,
            |x: &Vector| scalar(if x[0] == 0.0 { 0.0 } else { x[0].signum() * x[0].abs().sqrt() }),
        );
        CompositeProblem::new(f, prox_indicator_nonneg(), 1).unwrap()
    }

    fn config(method: Method) -> SolverConfig {
        SolverConfig::new(method)
            .with_params(LinesearchParams::new(1.0, 0.5, 0.4, 60).unwrap())
            .with_tolerance(1e-10)
            .with_max_iterations(10_000)
    }

    #[test]
    fn method1_solves_scalar_lasso() {
        let trace = solve(&scalar_lasso(), &config(Method::Method1), &scalar(0.0)).unwrap();
        assert_eq!(trace.termination, Termination::ResidualTolerance);
        assert!((trace.final_point[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn every_method_stops_immediately_at_the_minimizer() {
        for method in [Method::Method1, Method::Method2, Method::Method3, Method::DescentLemmaLs] {
            let trace = solve(&half_square(), &config(method), &scalar(0.0)).unwrap();
            assert_eq!(trace.records.len(), 1, "{method}");
            assert_eq!(trace.last().k, 0);
            assert_eq!(trace.last().residual, 0.0);
            assert_eq!(trace.termination, Termination::ResidualTolerance);
        }
    }

    #[test]
    fn method1_p_power_iterates_decrease() {
        let mut cfg = config(Method::Method1).with_max_iterations(200).with_tolerance(1e-300);
        cfg.params.max_backtracks = 200;
        let trace = solve(&p_power(), &cfg, &scalar(1.0)).unwrap();
        assert_eq!(trace.termination, Termination::MaxIterations);
        let xs: Vec<f64> = trace.records.iter().map(|r| r.x.as_ref().unwrap()[0]).collect();
        assert!(xs.windows(2).all(|w| 0.0 < w[1] && w[1] < w[0]));
        let first = trace.records[0].stepsize;
        assert!(trace.last().stepsize < 1e-10 * first);
    }

    #[test]
    fn method2_half_square_single_step() {
        let trace = solve(&half_square(), &config(Method::Method2), &scalar(1.0)).unwrap();
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.records[0].stepsize, 1.0);
        assert_eq!(trace.final_point, vec![0.0]);
        assert_eq!(trace.last().k, 1);
    }

    #[test]
    fn method2_solves_scalar_lasso_with_one_prox_per_iteration() {
        let trace = solve(&scalar_lasso(), &config(Method::Method2), &scalar(0.0)).unwrap();
        assert!((trace.final_point[0] - 0.5).abs() < 1e-8);
        assert_eq!(trace.total_calls().prox, trace.iterations());
    }

    #[test]
    fn method3_momentum_prefix() {
        let t1 = next_momentum(1.0);
        assert!((t1 - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((next_momentum(t1) - 2.193_527).abs() < 1e-6);
    }

    #[test]
    fn method3_records_momentum_and_nonincreasing_steps() {
        let trace = solve(&scalar_lasso(), &config(Method::Method3), &scalar(3.0)).unwrap();
        assert_eq!(trace.records[0].t_k, Some(1.0));
        assert!(trace.records.windows(2).all(|w| w[1].stepsize <= w[0].stepsize));
        assert!((trace.final_point[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn fixed_step_examples() {
        let cfg = config(Method::FixedStep).with_fixed_stepsize(1.0);
        let trace = solve(&half_square(), &cfg, &scalar(5.0)).unwrap();
        assert_eq!(trace.records[1].x.as_ref().unwrap()[0], 0.0);

        let trace = solve(&scalar_lasso(), &cfg, &scalar(0.0)).unwrap();
        assert_eq!(trace.records[1].x.as_ref().unwrap()[0], 0.5);

        let cfg = config(Method::FixedStep).with_fixed_stepsize(2.5);
        let trace = solve(&half_square(), &cfg, &scalar(1.0)).unwrap();
        assert_eq!(trace.termination, Termination::Diverged);
        let xs: Vec<f64> = trace.records.iter().map(|r| r.x.as_ref().unwrap()[0].abs()).collect();
        assert!(xs.windows(2).all(|w| (w[1] / w[0] - 1.5).abs() < 1e-12));
    }

    #[test]
    fn linesearch_failure_keeps_partial_trace() {
        let mut cfg = config(Method::Method1).with_max_iterations(100);
        cfg.params.max_backtracks = 5;
        let trace = solve(&p_power(), &cfg, &scalar(1.0)).unwrap();
        assert_eq!(trace.termination, Termination::LinesearchFailure);
        assert!(trace.records.len() > 1);
        assert!(trace.failure.is_some());
    }

    #[test]
    fn mismatched_method_is_rejected() {
        assert!(solve_method2(&half_square(), &config(Method::Method1), &scalar(1.0)).is_err());
    }

    #[test]
    fn start_outside_domain_is_rejected() {
        assert!(matches!(solve(&p_power(), &config(Method::Method1), &scalar(-1.0)), Err(Error::OutsideDomain)));
    }

    #[test]
    fn iterates_can_be_omitted() {
        let cfg = config(Method::Method1).with_record_iterates(false);
        let trace = solve(&scalar_lasso(), &cfg, &scalar(0.0)).unwrap();
        assert!(trace.records.iter().all(|r| r.x.is_none()));
        assert!(trace.records.iter().all(|r| r.dist_to_solution.is_some()));
    }

    #[test]
    fn counters_are_nondecreasing() {
        for method in [Method::Method1, Method::Method2, Method::Method3, Method::DescentLemmaLs] {
            let trace = solve(&scalar_lasso(), &config(method), &scalar(4.0)).unwrap();
            assert!(trace.records.windows(2).all(|w| {
                w[0].cum_prox <= w[1].cum_prox && w[0].cum_grad <= w[1].cum_grad && w[0].cum_f <= w[1].cum_f
            }));
        }
    }
}
