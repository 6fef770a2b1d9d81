//! Run configuration, experiment execution and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    certify_accelerated_sequences, certify_descent, certify_distance_stepsize_ratio, certify_fejer,
    certify_linear_rate, certify_rate_1k, certify_rate_accelerated, certify_residual_decay, certify_stepsize_floor,
    cross_validate, reference_solution, Certificate, FejerMode, Reference,
};
use crate::error::{Error, Result};
use crate::problem::{norm, objective, CompositeProblem, LinesearchParams, Method, SolverConfig, Vector};
use crate::problems::{build_problem, ProblemSpec};
use crate::solvers::{solve, SolverTrace, Termination};

/// Overrides `output_dir` of every run when set.
pub const OUTPUT_DIR_ENV: &str = "FBLS_OUTPUT_DIR";

pub const TRACE_COLUMNS: [&str; 11] = [
    "k",
    "objective",
    "stepsize",
    "residual",
    "step_norm",
    "ls_trials",
    "cum_prox",
    "cum_grad",
    "cum_f",
    "dist_to_solution",
    "t_k",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    Csv,
    Json,
}

/// A certificate to evaluate after the solve. Inputs left out are taken from
/// the problem metadata (or a reference solve for `x*`/`F*`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateRequest {
    Descent,
    Fejer {
        #[serde(default)]
        mode: Option<FejerMode>,
    },
    #[serde(rename = "rate_1k")]
    Rate1k,
    RateAccelerated,
    LinearRate {
        #[serde(default)]
        mu: Option<f64>,
    },
    ResidualDecay,
    DistanceStepsizeRatio {
        lambda: f64,
        #[serde(default)]
        bound: Option<f64>,
    },
    StepsizeFloor {
        #[serde(default)]
        lipschitz: Option<f64>,
    },
    AcceleratedSequences,
    CrossValidation,
}

impl CertificateRequest {
    pub fn name(&self) -> &'static str {
        match self {
            CertificateRequest::Descent => "descent",
            CertificateRequest::Fejer { .. } => "fejer",
            CertificateRequest::Rate1k => "rate_1k",
            CertificateRequest::RateAccelerated => "rate_accelerated",
            CertificateRequest::LinearRate { .. } => "linear_rate",
            CertificateRequest::ResidualDecay => "residual_decay",
            CertificateRequest::DistanceStepsizeRatio { .. } => "distance_stepsize_ratio",
            CertificateRequest::StepsizeFloor { .. } => "stepsize_floor",
            CertificateRequest::AcceleratedSequences => "accelerated_sequences",
            CertificateRequest::CrossValidation => "cross_validation",
        }
    }

    fn methods(&self) -> &'static [Method] {
        use Method::*;
        match self {
            CertificateRequest::Descent | CertificateRequest::Rate1k => &[Method1, Method2],
            CertificateRequest::RateAccelerated | CertificateRequest::AcceleratedSequences => &[Method3],
            CertificateRequest::LinearRate { .. } | CertificateRequest::DistanceStepsizeRatio { .. } => &[Method1],
            CertificateRequest::StepsizeFloor { .. } => &[Method1, Method2, Method3, DescentLemmaLs],
            CertificateRequest::Fejer { .. }
            | CertificateRequest::ResidualDecay
            | CertificateRequest::CrossValidation => &[Method1, Method2, Method3, FixedStep, DescentLemmaLs],
        }
    }

    fn needs_iterates(&self) -> bool {
        matches!(
            self,
            CertificateRequest::Fejer { .. }
                | CertificateRequest::LinearRate { .. }
                | CertificateRequest::DistanceStepsizeRatio { .. }
                | CertificateRequest::CrossValidation
        )
    }

    fn needs_reference(&self) -> bool {
        matches!(
            self,
            CertificateRequest::Fejer { .. }
                | CertificateRequest::Rate1k
                | CertificateRequest::RateAccelerated
                | CertificateRequest::LinearRate { .. }
                | CertificateRequest::DistanceStepsizeRatio { .. }
        )
    }
}

/// Names, inequalities and requirements of the available certificates.
pub fn certificate_catalog() -> &'static [(&'static str, &'static str, &'static str)] {
    &[
        ("descent", "F(x^{k+1}) - F(x^k) <= -(1-δ)/α_k|x^{k+1}-x^k|² (method1), F(x^k) - F(x^{k+1}) >= ½|x^{k+1}-x^k|² (method2)", "method1|method2"),
        ("fejer", "|x^{k+1}-x*| <= |x^k-x*|, or quasi-Fejér with ε_k = 2[F(x^k)-F(x^{k+1})]; mode = fejer|quasi_fejer", "x*, iterates"),
        ("rate_1k", "F(x^k) - F* <= dist(x^0,S*)²/(2αk) (method2: + 2[F(x^0)-F*] over 2βk)", "method1|method2, x*, F*"),
        ("rate_accelerated", "F(x^k) - F* <= (2/α)(|x^0-x*|² + 2σ[F(x^0)-F*])/(k+1)²", "method3, x*, F*"),
        ("linear_rate", "|x^{k+1}-x*| <= |x^k-x*|/sqrt(1+αμ)", "method1, μ, x*, iterates"),
        ("residual_decay", "min_{k<=K} √k·res_k strictly decreasing at K = N/4, N/2, N", ">= 10 records"),
        ("distance_stepsize_ratio", "sup_{k>=N/2} |x^k-x*|^{1+λ}/α_k (<= bound when given); lambda in [-1,1)", "method1, x*, iterates"),
        ("stepsize_floor", "α_k >= min{σ, δθ/L} (method1), β_k >= min{1, θ/(2L)} (method2), α_k > 0 (method3)", "L"),
        ("accelerated_sequences", "1/t_k <= 2/(k+1); t_{k+1}² - t_{k+1} = t_k²; α_{k+1} <= α_k", "method3"),
        ("cross_validation", "stored objectives/distances agree with recomputation to 1e-8", "iterates"),
    ]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fbls-output")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    #[serde(default)]
    pub certificates: Vec<CertificateRequest>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub trace_format: TraceFormat,
    /// Starting point; the family default when absent.
    #[serde(default)]
    pub initial_point: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, solver: SolverConfig) -> Self {
        RunConfig {
            problem,
            solver,
            certificates: Vec::new(),
            output_dir: default_output_dir(),
            trace_format: TraceFormat::Csv,
            initial_point: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Output directory after applying [`OUTPUT_DIR_ENV`].
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Builds the problem and checks everything that can be checked before
    /// solving.
    pub fn prepare(&self) -> Result<PreparedRun> {
        let problem = build_problem(&self.problem)?;
        self.solver.validate_for(&problem)?;
        let x0 = match &self.initial_point {
            Some(x) => Vector::from_column_slice(x),
            None => self.problem.default_start()?,
        };
        problem.check_dimension(&x0)?;
        if !problem.nonsmooth.in_domain(&x0) {
            return Err(Error::Config("initial_point lies outside dom g".into()));
        }
        for request in &self.certificates {
            check_request(request, &problem, &self.solver)?;
        }
        Ok(PreparedRun { problem, x0 })
    }
}

fn unsatisfiable(request: &CertificateRequest, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("certificate {}: {why}", request.name()))
}

fn check_request(request: &CertificateRequest, problem: &CompositeProblem, solver: &SolverConfig) -> Result<()> {
    if !request.methods().contains(&solver.method) {
        return Err(unsatisfiable(request, format!("does not apply to {}", solver.method)));
    }
    if request.needs_iterates() && !solver.record_iterates {
        return Err(unsatisfiable(request, "needs record_iterates = true"));
    }
    if request.needs_reference() && problem.known_solution().is_none() && problem.infimum().is_some() {
        return Err(unsatisfiable(request, "the problem has no minimizer"));
    }
    match request {
        CertificateRequest::LinearRate { mu } => {
            let mu = mu.or(problem.strong_convexity());
            if !mu.is_some_and(|m| m > 0.0) {
                return Err(unsatisfiable(request, "no strong convexity modulus μ"));
            }
        }
        CertificateRequest::StepsizeFloor { lipschitz } => {
            let l = lipschitz.or(problem.lipschitz_constant());
            if !l.is_some_and(|l| l > 0.0) {
                return Err(unsatisfiable(
                    request,
                    "no global Lipschitz constant; use distance_stepsize_ratio instead",
                ));
            }
        }
        CertificateRequest::DistanceStepsizeRatio { lambda, .. } if !(-1.0..1.0).contains(lambda) => {
            return Err(unsatisfiable(request, format!("lambda must lie in [-1, 1), got {lambda}")));
        }
        _ => {}
    }
    Ok(())
}

pub struct PreparedRun {
    pub problem: CompositeProblem,
    pub x0: Vector,
}

#[derive(Clone, Debug)]
pub struct CertificateResult {
    pub name: String,
    pub outcome: std::result::Result<Certificate, String>,
}

impl CertificateResult {
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(c) if c.passed)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: SolverTrace,
    pub certificates: Vec<CertificateResult>,
    pub final_objective: f64,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        !self.trace.termination.is_failure() && self.certificates.iter().all(CertificateResult::passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.succeeded() {
            0
        } else {
            1
        }
    }
}

/// Where a run stopped.
#[derive(Debug)]
pub enum RunError {
    /// Rejected before solving (exit status 2).
    Invalid(Error),
    /// The solve or the output stage failed (exit status 1).
    Failed(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Invalid(e) => write!(f, "invalid configuration: {e}"),
            RunError::Failed(e) => write!(f, "run failed: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

/// Solves, certifies and writes the trace, report and summary files.
pub fn run(config: &RunConfig) -> std::result::Result<RunOutcome, RunError> {
    let prepared = config.prepare().map_err(RunError::Invalid)?;
    let out_dir = config.resolved_output_dir();
    let trace = solve(&prepared.problem, &config.solver, &prepared.x0).map_err(RunError::Failed)?;
    let final_objective = objective(&prepared.problem, &trace.final_point()).map(|v| v.to_f64()).unwrap_or(f64::NAN);

    let mut reference: Option<std::result::Result<Reference, String>> = None;
    let mut certificates = Vec::new();
    for request in &config.certificates {
        let reference = if request.needs_reference() {
            let r = reference
                .get_or_insert_with(|| reference_solution(&prepared.problem, &prepared.x0).map_err(|e| e.to_string()));
            Some(r.clone())
        } else {
            None
        };
        let outcome = evaluate(request, &prepared.problem, &config.solver.params, &prepared.x0, &trace, reference)
            .map_err(|e| e.to_string());
        certificates.push(CertificateResult { name: request.name().to_string(), outcome });
    }

    let mut outcome =
        RunOutcome { trace, certificates, final_objective, output_dir: out_dir.clone(), files: Vec::new() };
    outcome.files = write_outputs(config, &outcome).map_err(RunError::Failed)?;
    Ok(outcome)
}

/// Evaluates one certificate on an existing trace. `x0` seeds the reference
/// solve when the certificate needs `x*` or `F*`.
pub fn certify_request(
    request: &CertificateRequest,
    problem: &CompositeProblem,
    params: &LinesearchParams,
    x0: &Vector,
    trace: &SolverTrace,
) -> Result<Certificate> {
    let reference = request.needs_reference().then(|| reference_solution(problem, x0).map_err(|e| e.to_string()));
    evaluate(request, problem, params, x0, trace, reference)
}

fn evaluate(
    request: &CertificateRequest,
    problem: &CompositeProblem,
    params: &LinesearchParams,
    x0: &Vector,
    trace: &SolverTrace,
    reference: Option<std::result::Result<Reference, String>>,
) -> Result<Certificate> {
    let reference = match reference {
        Some(Ok(r)) => Some(r),
        Some(Err(e)) => return Err(Error::Precondition(e)),
        None => None,
    };
    let with_ref = |c: Certificate| match &reference {
        Some(r) => c.with_provenance(r.provenance.to_string()),
        None => c,
    };
    let r = || reference.as_ref().expect("reference requested");
    let dist0 = || norm(&(x0 - &r().x_star));
    let cert = match request {
        CertificateRequest::Descent => certify_descent(trace, trace.method, params.delta)?,
        CertificateRequest::Fejer { mode } => {
            let mode = mode.unwrap_or(match trace.method {
                Method::Method2 => FejerMode::QuasiFejer,
                _ => FejerMode::Fejer,
            });
            with_ref(certify_fejer(trace, &r().x_star, mode, Some(r().f_star))?)
        }
        CertificateRequest::Rate1k => with_ref(certify_rate_1k(trace, r().f_star, trace.min_stepsize(), dist0())?),
        CertificateRequest::RateAccelerated => {
            with_ref(certify_rate_accelerated(trace, r().f_star, dist0(), params.sigma)?)
        }
        CertificateRequest::LinearRate { mu } => {
            let mu = mu.or(problem.strong_convexity()).unwrap_or(0.0);
            with_ref(certify_linear_rate(trace, &r().x_star, mu, trace.min_stepsize())?)
        }
        CertificateRequest::ResidualDecay => certify_residual_decay(trace)?,
        CertificateRequest::DistanceStepsizeRatio { lambda, bound } => {
            with_ref(certify_distance_stepsize_ratio(trace, &r().x_star, *lambda, *bound)?)
        }
        CertificateRequest::StepsizeFloor { lipschitz } => {
            certify_stepsize_floor(trace, lipschitz.or(problem.lipschitz_constant()), params)?
        }
        CertificateRequest::AcceleratedSequences => certify_accelerated_sequences(trace)?,
        CertificateRequest::CrossValidation => cross_validate(trace, problem)?,
    };
    Ok(cert)
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Writes the trace as CSV with [`TRACE_COLUMNS`].
pub fn write_trace_csv<W: std::io::Write>(trace: &SolverTrace, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(TRACE_COLUMNS).map_err(io)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            float(r.objective),
            float(r.stepsize),
            float(r.residual),
            float(r.step_norm),
            r.ls_trials.to_string(),
            r.cum_prox.to_string(),
            r.cum_grad.to_string(),
            r.cum_f.to_string(),
            optional(r.dist_to_solution),
            optional(r.t_k),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_json(trace: &SolverTrace) -> Result<String> {
    serde_json::to_string_pretty(trace).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn trace_from_json(text: &str) -> Result<SolverTrace> {
    serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn report_text(config: &RunConfig, outcome: &RunOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# certificates: problem {}, method {}", config.problem.family(), config.solver.method);
    let _ = writeln!(s);
    if outcome.certificates.is_empty() {
        let _ = writeln!(s, "(no certificates requested)");
    }
    for c in &outcome.certificates {
        match &c.outcome {
            Ok(cert) => s.push_str(&cert.report_block()),
            Err(e) => {
                let _ = writeln!(s, "[{}]", c.name);
                let _ = writeln!(s, "status       = error");
                let _ = writeln!(s, "passed       = false");
                let _ = writeln!(s, "details      = {e}");
            }
        }
        let _ = writeln!(s);
    }
    s
}

pub fn summary_text(config: &RunConfig, outcome: &RunOutcome) -> String {
    let t = &outcome.trace;
    let calls = t.total_calls();
    let passed = outcome.certificates.iter().filter(|c| c.passed()).count();
    let mut s = String::new();
    let _ = writeln!(s, "problem             = {}", config.problem.family());
    let _ = writeln!(s, "method              = {}", t.method);
    let _ = writeln!(s, "termination         = {}", t.termination);
    if let Some(f) = &t.failure {
        let _ = writeln!(s, "failure             = {f}");
    }
    let _ = writeln!(s, "iterations          = {}", t.iterations());
    let _ = writeln!(s, "final_objective     = {}", float(outcome.final_objective));
    let _ = writeln!(s, "final_residual      = {}", float(t.last().residual));
    let _ = writeln!(s, "min_stepsize        = {}", float(t.min_stepsize()));
    let _ = writeln!(s, "cum_prox            = {}", calls.prox);
    let _ = writeln!(s, "cum_grad            = {}", calls.grad);
    let _ = writeln!(s, "cum_f               = {}", calls.f);
    let _ = writeln!(s, "certificates_passed = {passed}/{}", outcome.certificates.len());
    let _ = writeln!(s, "exit_status         = {}", outcome.exit_code());
    s
}

fn write_outputs(config: &RunConfig, outcome: &RunOutcome) -> Result<Vec<PathBuf>> {
    let dir = &outcome.output_dir;
    fs::create_dir_all(dir)?;
    let trace_path = match config.trace_format {
        TraceFormat::Csv => {
            let path = dir.join("trace.csv");
            write_trace_csv(&outcome.trace, fs::File::create(&path)?)?;
            path
        }
        TraceFormat::Json => {
            let path = dir.join("trace.json");
            fs::write(&path, trace_to_json(&outcome.trace)?)?;
            path
        }
    };
    let report = dir.join("report.txt");
    fs::write(&report, report_text(config, outcome))?;
    let summary = dir.join("summary.txt");
    fs::write(&summary, summary_text(config, outcome))?;
    Ok(vec![trace_path, report, summary])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub termination: Termination,
    pub iterations: usize,
    /// First record whose objective gap is at most the threshold.
    pub iterations_to_gap: Option<usize>,
    pub cum_prox: usize,
    pub cum_grad: usize,
    pub cum_f: usize,
    pub final_gap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub traces: Vec<SolverTrace>,
    pub gap_threshold: f64,
    pub f_star: Option<f64>,
}

/// Runs every configuration on their common problem and tabulates oracle
/// costs. Certificates listed in the configurations are ignored.
pub fn compare(configs: &[RunConfig], gap_threshold: f64) -> Result<Comparison> {
    let first = configs.first().ok_or_else(|| Error::Config("compare needs at least one configuration".into()))?;
    for c in &configs[1..] {
        if c.problem != first.problem || c.initial_point != first.initial_point {
            return Err(Error::Config("compared configurations must share problem and initial_point".into()));
        }
    }
    let mut prepared = Vec::with_capacity(configs.len());
    for c in configs {
        let solver_only = RunConfig { certificates: Vec::new(), ..c.clone() };
        prepared.push(solver_only.prepare()?);
    }
    let problem = &prepared[0].problem;
    let x0 = &prepared[0].x0;
    let f_star = reference_solution(problem, x0).ok().map(|r| r.f_star).or(problem.infimum());
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for c in configs {
        let trace = solve(problem, &c.solver, x0)?;
        let calls = trace.total_calls();
        let final_gap = f_star.and_then(|fs| objective(problem, &trace.final_point()).ok().map(|v| v.to_f64() - fs));
        let iterations_to_gap =
            f_star.and_then(|fs| trace.records.iter().position(|r| r.objective - fs <= gap_threshold));
        rows.push(ComparisonRow {
            method: trace.method,
            termination: trace.termination,
            iterations: trace.iterations(),
            iterations_to_gap,
            cum_prox: calls.prox,
            cum_grad: calls.grad,
            cum_f: calls.f,
            final_gap,
        });
        traces.push(trace);
    }
    Ok(Comparison { rows, traces, gap_threshold, f_star })
}

pub fn write_comparison_csv<W: std::io::Write>(comparison: &Comparison, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record([
        "method",
        "termination",
        "iterations",
        "iterations_to_gap",
        "cum_prox",
        "cum_grad",
        "cum_f",
        "final_gap",
    ])
    .map_err(io)?;
    for r in &comparison.rows {
        w.write_record([
            r.method.name().to_string(),
            r.termination.name().to_string(),
            r.iterations.to_string(),
            r.iterations_to_gap.map(|k| k.to_string()).unwrap_or_default(),
            r.cum_prox.to_string(),
            r.cum_grad.to_string(),
            r.cum_f.to_string(),
            optional(r.final_gap),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LASSO_RUN: &str = r#"
output_dir = "unused"

[problem]
family = "lasso"
a = [[1.0]]
b = [1.0]
lambda = 0.5

[solver]
method = "method1"
max_iterations = 200

[[certificates]]
name = "descent"

[[certificates]]
name = "fejer"

[[certificates]]
name = "rate_1k"
"#;

    #[test]
    fn parses_run_config() {
        let c = RunConfig::from_toml(LASSO_RUN).unwrap();
        assert_eq!(c.solver.method, Method::Method1);
        assert_eq!(c.certificates.len(), 3);
        assert_eq!(c.certificates[1], CertificateRequest::Fejer { mode: None });
        assert_eq!(c.trace_format, TraceFormat::Csv);
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let typo = LASSO_RUN.replace("max_iterations", "max_iteration");
        assert!(matches!(RunConfig::from_toml(&typo), Err(Error::Config(_))));
        let typo = LASSO_RUN.replace("method = \"method1\"", "method = \"method1\"\n[solver.params]\nsigmaa = 1.0");
        assert!(RunConfig::from_toml(&typo).is_err());
    }

    #[test]
    fn validation_rejects_unsatisfiable_certificates() {
        let mut c = RunConfig::new(ProblemSpec::p_power(0.5), SolverConfig::new(Method::Method1));
        c.certificates.push(CertificateRequest::StepsizeFloor { lipschitz: None });
        assert!(c.prepare().is_err());
        c.certificates = vec![CertificateRequest::LinearRate { mu: None }];
        assert!(c.prepare().is_err());
        c.certificates = vec![CertificateRequest::RateAccelerated];
        assert!(c.prepare().is_err());

        let mut e = RunConfig::new(ProblemSpec::ExpUnbounded, SolverConfig::new(Method::Method1));
        e.certificates.push(CertificateRequest::Rate1k);
        assert!(e.prepare().is_err());
        e.certificates = vec![CertificateRequest::Descent];
        assert!(e.prepare().is_ok());
    }

    #[test]
    fn bad_parameters_fail_validation() {
        let mut c = RunConfig::from_toml(LASSO_RUN).unwrap();
        c.solver.params.theta = 1.2;
        assert!(matches!(run(&c), Err(RunError::Invalid(_))));
    }

    #[test]
    fn run_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::from_toml(LASSO_RUN).unwrap();
        c.output_dir = dir.path().to_path_buf();
        let outcome = run(&c).unwrap();
        assert_eq!(outcome.exit_code(), 0, "{}", report_text(&c, &outcome));
        assert_eq!(outcome.files.len(), 3);
        let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), TRACE_COLUMNS.join(","));
        assert_eq!(csv.lines().count(), outcome.trace.records.len() + 1);
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.contains("termination         = residual_tolerance"));
        let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(report.contains("[rate_1k]"));
        assert!(report.contains("provenance   = problem metadata"));
    }

    #[test]
    fn json_trace_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::from_toml(LASSO_RUN).unwrap();
        c.output_dir = dir.path().to_path_buf();
        c.trace_format = TraceFormat::Json;
        let outcome = run(&c).unwrap();
        let text = fs::read_to_string(dir.path().join("trace.json")).unwrap();
        assert_eq!(trace_from_json(&text).unwrap(), outcome.trace);
    }

    #[test]
    fn compare_accounts_oracle_calls() {
        let base = RunConfig::from_toml(LASSO_RUN).unwrap();
        let mut m2 = base.clone();
        m2.solver.method = Method::Method2;
        let cmp = compare(&[base.clone(), m2], 1e-6).unwrap();
        assert_eq!(cmp.rows[1].cum_prox, cmp.rows[1].iterations);
        assert!(cmp.rows[0].cum_prox >= cmp.rows[0].iterations);
        let mut out = Vec::new();
        write_comparison_csv(&cmp, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 3);
        assert!(compare(&[], 1e-6).is_err());

        let mut other = base.clone();
        other.problem = ProblemSpec::p_power(0.5);
        assert!(compare(&[base, other], 1e-6).is_err());
    }
}
