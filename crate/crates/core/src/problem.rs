//! Composite problems `min f(x) + g(x)` and solver configuration.
//!
//! `f` is the smooth part, accessed through value and gradient oracles. `g`
//! is the nonsmooth part, accessed through its value (possibly `+inf`), its
//! proximal map and a domain membership test. The gradient of `f` is assumed
//! uniformly continuous on bounded subsets of `dom g`; this cannot be checked
//! from oracles and is not enforced.

use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Dense real vector.
pub type Vector = DVector<f64>;

/// Euclidean norm scaled by the largest entry, so tiny iterates do not
/// underflow to zero when squared.
pub fn norm(v: &Vector) -> f64 {
    let scale = v.amax();
    if scale == 0.0 || !scale.is_finite() {
        return v.norm();
    }
    scale * (v / scale).norm()
}

pub type ScalarOracle = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type GradientOracle = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ExtendedOracle = Arc<dyn Fn(&Vector) -> ExtendedReal + Send + Sync>;
pub type ProxOracle = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;
pub type DomainOracle = Arc<dyn Fn(&Vector) -> bool + Send + Sync>;
pub type ProjectionOracle = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// A value in `R ∪ {+inf}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// Maps `+inf` to `f64::INFINITY`. Only for display and serialization.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: Self) -> Self::Output {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::PosInfinity,
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering;
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.partial_cmp(b),
            (ExtendedReal::Finite(_), ExtendedReal::PosInfinity) => Some(Ordering::Less),
            (ExtendedReal::PosInfinity, ExtendedReal::Finite(_)) => Some(Ordering::Greater),
            (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("+inf"),
        }
    }
}

/// The smooth part `f`.
///
/// `lipschitz_constant` and `strong_convexity` are metadata consumed by the
/// diagnostics only; no solver reads them.
#[derive(Clone)]
pub struct SmoothPart {
    value: ScalarOracle,
    gradient: GradientOracle,
    pub lipschitz_constant: Option<f64>,
    pub strong_convexity: Option<f64>,
}

impl SmoothPart {
    pub fn new(
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        SmoothPart {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            lipschitz_constant: None,
            strong_convexity: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz_constant = Some(l);
        self
    }

    pub fn with_strong_convexity(mut self, mu: f64) -> Self {
        self.strong_convexity = Some(mu);
        self
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }
}

impl fmt::Debug for SmoothPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothPart")
            .field("lipschitz_constant", &self.lipschitz_constant)
            .field("strong_convexity", &self.strong_convexity)
            .finish_non_exhaustive()
    }
}

/// The nonsmooth part `g`, with `prox(α, z) = argmin_u g(u) + |u - z|²/(2α)`.
#[derive(Clone)]
pub struct NonsmoothPart {
    value: ExtendedOracle,
    prox: ProxOracle,
    in_domain: DomainOracle,
    project_domain: Option<ProjectionOracle>,
}

impl NonsmoothPart {
    pub fn new(
        value: impl Fn(&Vector) -> ExtendedReal + Send + Sync + 'static,
        prox: impl Fn(f64, &Vector) -> Vector + Send + Sync + 'static,
        in_domain: impl Fn(&Vector) -> bool + Send + Sync + 'static,
    ) -> Self {
        NonsmoothPart {
            value: Arc::new(value),
            prox: Arc::new(prox),
            in_domain: Arc::new(in_domain),
            project_domain: None,
        }
    }

    pub fn with_projection(mut self, project: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        self.project_domain = Some(Arc::new(project));
        self
    }

    pub fn value(&self, x: &Vector) -> ExtendedReal {
        (self.value)(x)
    }

    /// Evaluates `prox_{αg}(z)`. Rejects `α <= 0` and non-finite results.
    pub fn prox(&self, alpha: f64, z: &Vector) -> Result<Vector> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("prox stepsize must be positive, got {alpha}")));
        }
        let p = (self.prox)(alpha, z);
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "prox output" });
        }
        Ok(p)
    }

    pub fn in_domain(&self, x: &Vector) -> bool {
        (self.in_domain)(x)
    }

    pub fn has_projection(&self) -> bool {
        self.project_domain.is_some()
    }

    pub fn project_domain(&self, x: &Vector) -> Option<Vector> {
        self.project_domain.as_ref().map(|p| p(x))
    }
}

impl fmt::Debug for NonsmoothPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonsmoothPart").field("project_domain", &self.project_domain.is_some()).finish_non_exhaustive()
    }
}

/// `min f(x) + g(x)` together with whatever is known about its solution.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    pub smooth: SmoothPart,
    pub nonsmooth: NonsmoothPart,
    dimension: usize,
    known_solution: Option<Vector>,
    known_optimal_value: Option<f64>,
    /// `inf (f + g)` when the infimum is known but not attained.
    infimum: Option<f64>,
}

impl CompositeProblem {
    pub fn new(smooth: SmoothPart, nonsmooth: NonsmoothPart, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension must be positive"));
        }
        Ok(CompositeProblem {
            smooth,
            nonsmooth,
            dimension,
            known_solution: None,
            known_optimal_value: None,
            infimum: None,
        })
    }

    /// Attaches a known minimizer and the optimal value, which is evaluated at
    /// the minimizer when not given.
    ///
    /// The minimizer must lie in `dom g`, and when both are given the
    /// objective at the minimizer must agree with the value to `1e-10`
    /// relative.
    pub fn with_solution(mut self, x_star: Vector, optimal_value: Option<f64>) -> Result<Self> {
        self.check_dimension(&x_star)?;
        if !self.nonsmooth.in_domain(&x_star) {
            return Err(Error::MalformedProblem("known solution is outside dom g".into()));
        }
        let at_star = objective(&self, &x_star)?
            .finite()
            .ok_or_else(|| Error::MalformedProblem("objective infinite at solution".into()))?;
        if let Some(v) = optimal_value {
            if (at_star - v).abs() > 1e-10 * (1.0 + v.abs()) {
                return Err(Error::MalformedProblem(format!(
                    "objective at known solution is {at_star}, metadata says {v}"
                )));
            }
        }
        self.known_solution = Some(x_star);
        self.known_optimal_value = Some(optimal_value.unwrap_or(at_star));
        Ok(self)
    }

    pub fn with_infimum(mut self, inf: f64) -> Self {
        self.infimum = Some(inf);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn known_solution(&self) -> Option<&Vector> {
        self.known_solution.as_ref()
    }

    pub fn known_optimal_value(&self) -> Option<f64> {
        self.known_optimal_value
    }

    pub fn infimum(&self) -> Option<f64> {
        self.infimum
    }

    pub fn lipschitz_constant(&self) -> Option<f64> {
        self.smooth.lipschitz_constant
    }

    pub fn strong_convexity(&self) -> Option<f64> {
        self.smooth.strong_convexity
    }

    pub fn check_dimension(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "vector coordinate" });
        }
        Ok(())
    }

    /// `∇f(x)`, rejecting non-finite output.
    pub(crate) fn gradient_checked(&self, x: &Vector) -> Result<Vector> {
        let g = self.smooth.gradient(x);
        if g.len() != self.dimension {
            return Err(Error::MalformedProblem("gradient has wrong dimension".into()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "gradient" });
        }
        Ok(g)
    }

    pub(crate) fn smooth_value_checked(&self, x: &Vector) -> Result<f64> {
        let v = self.smooth.value(x);
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "smooth value" });
        }
        Ok(v)
    }
}

/// `(f + g)(x)`; `+inf` outside `dom g`.
pub fn objective(problem: &CompositeProblem, x: &Vector) -> Result<ExtendedReal> {
    problem.check_dimension(x)?;
    if !problem.nonsmooth.in_domain(x) {
        return Ok(ExtendedReal::PosInfinity);
    }
    let g = problem.nonsmooth.value(x);
    if !g.is_finite() {
        return Ok(ExtendedReal::PosInfinity);
    }
    let f = problem.smooth.value(x);
    if !f.is_finite() {
        return Err(Error::MalformedProblem("smooth part is not finite at a point of dom g".into()));
    }
    Ok(ExtendedReal::Finite(f) + g)
}

/// Backtracking parameters. `sigma` and `delta` are only read by the
/// first linesearch (and `sigma` by the descent-lemma baseline).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinesearchParams {
    pub sigma: f64,
    pub theta: f64,
    pub delta: f64,
    pub max_backtracks: usize,
}

impl Default for LinesearchParams {
    fn default() -> Self {
        LinesearchParams { sigma: 1.0, theta: 0.5, delta: 0.4, max_backtracks: 60 }
    }
}

impl LinesearchParams {
    pub fn new(sigma: f64, theta: f64, delta: f64, max_backtracks: usize) -> Result<Self> {
        let p = LinesearchParams { sigma, theta, delta, max_backtracks };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(invalid(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(invalid(format!("delta must lie in (0, 1/2), got {}", self.delta)));
        }
        if self.max_backtracks == 0 {
            return Err(invalid("max_backtracks must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Forward-backward steps with the gradient-difference linesearch.
    Method1,
    /// Relaxed step along `x -> J(x, 1)` with the objective linesearch.
    Method2,
    /// Accelerated variant of `Method1` with projected extrapolation.
    Method3,
    /// Constant stepsize baseline.
    FixedStep,
    /// Forward-backward steps with the sufficient-decrease (descent lemma)
    /// linesearch baseline.
    DescentLemmaLs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Method1 => "method1",
            Method::Method2 => "method2",
            Method::Method3 => "method3",
            Method::FixedStep => "fixed_step",
            Method::DescentLemmaLs => "descent_lemma_ls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    #[serde(default)]
    pub params: LinesearchParams,
    #[serde(default)]
    pub fixed_stepsize: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub residual_tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_true")]
    pub record_iterates: bool,
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_max_iterations() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            params: LinesearchParams::default(),
            fixed_stepsize: None,
            residual_tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            record_iterates: true,
        }
    }

    pub fn with_params(mut self, params: LinesearchParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.residual_tolerance = tol;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_fixed_stepsize(mut self, alpha: f64) -> Self {
        self.fixed_stepsize = Some(alpha);
        self
    }

    pub fn with_record_iterates(mut self, record: bool) -> Self {
        self.record_iterates = record;
        self
    }

    /// Checks parameter ranges, independent of any problem.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.residual_tolerance >= 0.0) {
            return Err(invalid("residual_tolerance must be nonnegative"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be positive"));
        }
        match (self.method, self.fixed_stepsize) {
            (Method::FixedStep, None) => {
                return Err(invalid("fixed_step requires fixed_stepsize"));
            }
            (_, Some(a)) if !(a > 0.0 && a.is_finite()) => {
                return Err(invalid(format!("fixed_stepsize must be positive, got {a}")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Checks the configuration against a problem.
    pub fn validate_for(&self, problem: &CompositeProblem) -> Result<()> {
        self.validate()?;
        if self.method == Method::Method3 && !problem.nonsmooth.has_projection() {
            return Err(invalid("method3 requires a projection onto dom g"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox;

    fn half_square() -> SmoothPart {
        SmoothPart::new(|x: &Vector| 0.5 * x.norm_squared(), |x: &Vector| x.clone())
    }

    #[test]
    fn objective_of_half_square() {
        let p = CompositeProblem::new(half_square(), prox::prox_zero(), 1).unwrap();
        let v = objective(&p, &Vector::from_element(1, 2.0)).unwrap();
        assert_eq!(v, ExtendedReal::Finite(2.0));
    }

    #[test]
    fn objective_of_scalar_lasso() {
        let f =
            SmoothPart::new(|x: &Vector| 0.5 * (x[0] - 1.0).powi(2), |x: &Vector| Vector::from_element(1, x[0] - 1.0));
        let p = CompositeProblem::new(f, prox::prox_l1(0.5).unwrap(), 1).unwrap();
        let v = objective(&p, &Vector::from_element(1, 0.5)).unwrap();
        assert!((v.finite().unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn objective_outside_domain_is_infinite() {
        let f = SmoothPart::new(
            |x: &Vector| x[0].abs().powf(1.5) / 1.5,
            |x: &Vector| Vector::from_element(1, x[0].signum() * x[0].abs().sqrt()),
        );
        let p = CompositeProblem::new(f, prox::prox_indicator_nonneg(), 1).unwrap();
        let v = objective(&p, &Vector::from_element(1, -1.0)).unwrap();
        assert_eq!(v, ExtendedReal::PosInfinity);
    }

    #[test]
    fn objective_rejects_wrong_dimension() {
        let p = CompositeProblem::new(half_square(), prox::prox_zero(), 2).unwrap();
        assert!(matches!(objective(&p, &Vector::zeros(3)), Err(Error::DimensionMismatch { expected: 2, found: 3 })));
    }

    #[test]
    fn non_finite_smooth_value_in_domain_is_malformed() {
        let f = SmoothPart::new(|_: &Vector| f64::NAN, |x: &Vector| x.clone());
        let p = CompositeProblem::new(f, prox::prox_zero(), 1).unwrap();
        assert!(matches!(objective(&p, &Vector::zeros(1)), Err(Error::MalformedProblem(_))));
    }

    #[test]
    fn extended_real_arithmetic() {
        let a = ExtendedReal::Finite(1.0);
        assert_eq!(a + ExtendedReal::Finite(2.0), ExtendedReal::Finite(3.0));
        assert_eq!(a + ExtendedReal::PosInfinity, ExtendedReal::PosInfinity);
        assert!(a < ExtendedReal::PosInfinity);
    }

    #[test]
    fn solution_metadata_is_checked() {
        let p = CompositeProblem::new(half_square(), prox::prox_zero(), 1).unwrap();
        assert!(p.clone().with_solution(Vector::zeros(1), Some(0.0)).is_ok());
        assert!(p.with_solution(Vector::zeros(1), Some(1.0)).is_err());
    }

    #[test]
    fn linesearch_params_ranges() {
        assert!(LinesearchParams::new(1.0, 0.5, 0.4, 60).is_ok());
        assert!(LinesearchParams::new(1.0, 1.2, 0.4, 60).is_err());
        assert!(LinesearchParams::new(1.0, 0.5, 0.5, 60).is_err());
        assert!(LinesearchParams::new(0.0, 0.5, 0.4, 60).is_err());
        assert!(LinesearchParams::new(1.0, 0.5, 0.4, 0).is_err());
    }

    #[test]
    fn solver_config_requirements() {
        assert!(SolverConfig::new(Method::FixedStep).validate().is_err());
        assert!(SolverConfig::new(Method::FixedStep).with_fixed_stepsize(0.5).validate().is_ok());

        let no_projection =
            NonsmoothPart::new(|_: &Vector| ExtendedReal::Finite(0.0), |_, z: &Vector| z.clone(), |_: &Vector| true);
        let p = CompositeProblem::new(half_square(), no_projection, 1).unwrap();
        assert!(SolverConfig::new(Method::Method3).validate_for(&p).is_err());
        assert!(SolverConfig::new(Method::Method1).validate_for(&p).is_ok());
    }
}
