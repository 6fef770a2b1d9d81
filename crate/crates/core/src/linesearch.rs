//! Backtracking linesearches.
//!
//! * [`linesearch1`] shrinks `α` until
//!   `α|∇f(J(x,α)) - ∇f(x)| <= δ|J(x,α) - x|`. Each trial costs one prox and
//!   one gradient.
//! * [`linesearch2`] computes `J_x = J(x, 1)` once and shrinks `β` along the
//!   segment `x - β(x - J_x)` until the objective decreases enough. Each trial
//!   costs one evaluation of `f` (and `g`), never a prox.
//! * [`linesearch_descent_lemma`] is the usual sufficient-decrease test on `f`
//!   used with Lipschitz gradients; it is kept as a baseline.
//!
//! All three continue while the rejection inequality holds strictly, so ties
//! accept the current trial. Stepsizes are generated by repeated
//! multiplication: the `j`-th trial is `initial·θ·θ···θ`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::error::{invalid, Error, Result};
use crate::problem::{norm, CompositeProblem, LinesearchParams, Vector};
use crate::prox::forward_backward_with_gradient;

/// Residuals at or below `ZERO_RESIDUAL · max(|x|, tiny)` are treated as zero
/// on the first trial.
pub const ZERO_RESIDUAL: f64 = 1e-14;

/// The cutoff scales with `|x|` so that iterates converging to a minimizer at
/// the origin are not snapped onto it.
pub fn is_zero_residual(gap: f64, x: &Vector) -> bool {
    gap <= ZERO_RESIDUAL * norm(x).max(f64::MIN_POSITIVE)
}

/// Oracle evaluations made by one linesearch call or accumulated by a solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleCalls {
    pub prox: usize,
    pub grad: usize,
    pub f: usize,
}

impl std::ops::AddAssign for OracleCalls {
    fn add_assign(&mut self, rhs: Self) {
        self.prox += rhs.prox;
        self.grad += rhs.grad;
        self.f += rhs.f;
    }
}

#[derive(Clone, Debug)]
pub struct LinesearchOutcome {
    /// Accepted `α` (or `β` for the second linesearch).
    pub stepsize: f64,
    /// `J(x, α)` for the first linesearch and the descent-lemma baseline,
    /// `J_x = J(x, 1)` for the second.
    pub accepted_point: Vector,
    /// Number of backtracks.
    pub trials: usize,
    pub prox_calls: usize,
    pub grad_calls: usize,
    pub f_calls: usize,
    /// `∇f(accepted_point)`, evaluated by the first linesearch.
    pub accepted_gradient: Option<Vector>,
    /// `(f, g)` at the last evaluated trial point: `x - β(x - J_x)` for the
    /// second linesearch, `J(x, α)` for the descent-lemma baseline.
    pub trial_values: Option<(f64, f64)>,
}

impl LinesearchOutcome {
    pub fn calls(&self) -> OracleCalls {
        OracleCalls { prox: self.prox_calls, grad: self.grad_calls, f: self.f_calls }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// More than `max_backtracks` reductions were needed.
    MaxBacktracks,
    /// A trial point of the second linesearch left `dom g`.
    DomainViolation,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::MaxBacktracks => f.write_str("backtrack limit exceeded"),
            FailureKind::DomainViolation => f.write_str("trial point left dom g"),
        }
    }
}

/// The state of a linesearch that did not terminate, kept for post-mortem.
#[derive(Clone, Debug, Error)]
#[error("linesearch failed: {kind} after {trials} backtrack(s), last stepsize {last_stepsize:e}")]
pub struct LinesearchFailure {
    pub kind: FailureKind,
    pub trials: usize,
    pub last_stepsize: f64,
    /// Last forward-backward point (or trial point on a domain violation).
    pub last_point: Vector,
    pub calls: OracleCalls,
}

fn check_start(problem: &CompositeProblem, x: &Vector, params: &LinesearchParams) -> Result<()> {
    problem.check_dimension(x)?;
    params.validate()?;
    if !problem.nonsmooth.in_domain(x) {
        return Err(Error::OutsideDomain);
    }
    Ok(())
}

/// First linesearch started at `initial` (Method 1 passes `σ`, the
/// accelerated method passes the previous stepsize).
pub fn linesearch1(
    problem: &CompositeProblem,
    x: &Vector,
    params: &LinesearchParams,
    initial: f64,
) -> Result<LinesearchOutcome> {
    check_start(problem, x, params)?;
    let gradient = problem.gradient_checked(x)?;
    let mut out = linesearch1_at(problem, x, &gradient, params, initial)
        .map_err(|e| with_extra_calls(e, OracleCalls { grad: 1, ..Default::default() }))?;
    out.grad_calls += 1;
    Ok(out)
}

/// [`linesearch1`] with `∇f(x)` supplied; the returned counts cover only the
/// trials, so `prox_calls == grad_calls == trials + 1`.
pub fn linesearch1_at(
    problem: &CompositeProblem,
    x: &Vector,
    grad_x: &Vector,
    params: &LinesearchParams,
    initial: f64,
) -> Result<LinesearchOutcome> {
    if !(initial > 0.0 && initial.is_finite()) {
        return Err(invalid(format!("initial stepsize must be positive, got {initial}")));
    }
    let mut alpha = initial;
    let mut trials = 0;
    let mut calls = OracleCalls::default();
    loop {
        let j = forward_backward_with_gradient(problem, x, grad_x, alpha)?;
        calls.prox += 1;
        let grad_j = problem.gradient_checked(&j)?;
        calls.grad += 1;
        let gap = norm(&(&j - x));
        let zero_branch = trials == 0 && is_zero_residual(gap, x);
        if zero_branch || !(alpha * norm(&(&grad_j - grad_x)) > params.delta * gap) {
            return Ok(LinesearchOutcome {
                stepsize: alpha,
                accepted_point: j,
                trials,
                prox_calls: calls.prox,
                grad_calls: calls.grad,
                f_calls: 0,
                accepted_gradient: Some(grad_j),
                trial_values: None,
            });
        }
        if trials == params.max_backtracks {
            return Err(LinesearchFailure {
                kind: FailureKind::MaxBacktracks,
                trials,
                last_stepsize: alpha,
                last_point: j,
                calls,
            }
            .into());
        }
        alpha *= params.theta;
        trials += 1;
    }
}

/// Second linesearch. One prox call in total.
pub fn linesearch2(problem: &CompositeProblem, x: &Vector, params: &LinesearchParams) -> Result<LinesearchOutcome> {
    check_start(problem, x, params)?;
    let gradient = problem.gradient_checked(x)?;
    let f_x = problem.smooth_value_checked(x)?;
    let g_x = nonsmooth_value(problem, x)?;
    let extra = OracleCalls { prox: 0, grad: 1, f: 1 };
    let mut out = linesearch2_at(problem, x, &gradient, (f_x, g_x), params).map_err(|e| with_extra_calls(e, extra))?;
    out.grad_calls += extra.grad;
    out.f_calls += extra.f;
    Ok(out)
}

/// [`linesearch2`] with `∇f(x)` and `(f(x), g(x))` supplied.
pub fn linesearch2_at(
    problem: &CompositeProblem,
    x: &Vector,
    grad_x: &Vector,
    (f_x, g_x): (f64, f64),
    params: &LinesearchParams,
) -> Result<LinesearchOutcome> {
    let j = forward_backward_with_gradient(problem, x, grad_x, 1.0)?;
    let mut calls = OracleCalls { prox: 1, ..Default::default() };
    let d = x - &j;
    let d_sq = d.norm_squared();
    if is_zero_residual(d_sq.sqrt(), x) {
        return Ok(LinesearchOutcome {
            stepsize: 1.0,
            accepted_point: j,
            trials: 0,
            prox_calls: calls.prox,
            grad_calls: 0,
            f_calls: 0,
            accepted_gradient: None,
            trial_values: None,
        });
    }
    let g_j = nonsmooth_value(problem, &j)?;
    let slope = grad_x.dot(&d);
    let value_x = f_x + g_x;

    let mut beta: f64 = 1.0;
    let mut trials = 0;
    loop {
        let point = x - &d * beta;
        if !problem.nonsmooth.in_domain(&point) {
            return Err(LinesearchFailure {
                kind: FailureKind::DomainViolation,
                trials,
                last_stepsize: beta,
                last_point: point,
                calls,
            }
            .into());
        }
        let f_p = problem.smooth_value_checked(&point)?;
        calls.f += 1;
        let g_p = nonsmooth_value(problem, &point)?;
        let bound = value_x - beta * (g_x - g_j) - beta * slope + 0.5 * beta * d_sq;
        if !(f_p + g_p > bound) {
            return Ok(LinesearchOutcome {
                stepsize: beta,
                accepted_point: j,
                trials,
                prox_calls: calls.prox,
                grad_calls: 0,
                f_calls: calls.f,
                accepted_gradient: None,
                trial_values: Some((f_p, g_p)),
            });
        }
        if trials == params.max_backtracks {
            return Err(LinesearchFailure {
                kind: FailureKind::MaxBacktracks,
                trials,
                last_stepsize: beta,
                last_point: j,
                calls,
            }
            .into());
        }
        beta *= params.theta;
        trials += 1;
    }
}

/// Sufficient-decrease baseline started at `σ`:
/// accept when `f(J) <= f(x) + <∇f(x), J - x> + |x - J|²/(2α)`.
pub fn linesearch_descent_lemma(
    problem: &CompositeProblem,
    x: &Vector,
    params: &LinesearchParams,
) -> Result<LinesearchOutcome> {
    check_start(problem, x, params)?;
    let gradient = problem.gradient_checked(x)?;
    let f_x = problem.smooth_value_checked(x)?;
    let extra = OracleCalls { prox: 0, grad: 1, f: 1 };
    let mut out =
        linesearch_descent_lemma_at(problem, x, &gradient, f_x, params).map_err(|e| with_extra_calls(e, extra))?;
    out.grad_calls += extra.grad;
    out.f_calls += extra.f;
    Ok(out)
}

/// [`linesearch_descent_lemma`] with `∇f(x)` and `f(x)` supplied.
pub fn linesearch_descent_lemma_at(
    problem: &CompositeProblem,
    x: &Vector,
    grad_x: &Vector,
    f_x: f64,
    params: &LinesearchParams,
) -> Result<LinesearchOutcome> {
    let mut alpha = params.sigma;
    let mut trials = 0;
    let mut calls = OracleCalls::default();
    loop {
        let j = forward_backward_with_gradient(problem, x, grad_x, alpha)?;
        calls.prox += 1;
        let f_j = problem.smooth_value_checked(&j)?;
        calls.f += 1;
        let step = &j - x;
        let gap_sq = step.norm_squared();
        let zero_branch = trials == 0 && is_zero_residual(gap_sq.sqrt(), x);
        let model = f_x + grad_x.dot(&step) + gap_sq / (2.0 * alpha);
        if zero_branch || !(f_j > model) {
            let g_j = nonsmooth_value(problem, &j)?;
            return Ok(LinesearchOutcome {
                stepsize: alpha,
                accepted_point: j,
                trials,
                prox_calls: calls.prox,
                grad_calls: 0,
                f_calls: calls.f,
                accepted_gradient: None,
                trial_values: Some((f_j, g_j)),
            });
        }
        if trials == params.max_backtracks {
            return Err(LinesearchFailure {
                kind: FailureKind::MaxBacktracks,
                trials,
                last_stepsize: alpha,
                last_point: j,
                calls,
            }
            .into());
        }
        alpha *= params.theta;
        trials += 1;
    }
}

pub(crate) fn nonsmooth_value(problem: &CompositeProblem, x: &Vector) -> Result<f64> {
    problem.nonsmooth.value(x).finite().ok_or(Error::OutsideDomain)
}

fn with_extra_calls(err: Error, extra: OracleCalls) -> Error {
    match err {
        Error::Linesearch(mut failure) => {
            failure.calls += extra;
            Error::Linesearch(failure)
        }
        other => other,
    }
}
