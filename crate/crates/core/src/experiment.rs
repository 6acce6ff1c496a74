//! End-to-end runs: bases, operators, assembly, solve, error measurement,
//! and result tables.

use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, boundary_residual, compute_aae, evaluate_on_mesh, max_abs_error, GridOrdering};
use crate::basis::{build_node_set, check_lambda, BasisParams};
use crate::error::{Error, Result};
use crate::operators::{BaseOperators, OperatorBundle, QuadParams};
use crate::problems::{ProblemId, ProblemSpec};
use crate::solver::{solve, SolveReport, SolverConfig};

/// Where errors against the exact solution are measured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ErrorMesh {
    /// The `(n+1) × (m+1)` collocation grid.
    #[default]
    Collocation,
    /// 101 × 101 equispaced points on `[0, 1]²`.
    Uniform101,
    /// 101 equispaced `x` at one fixed time.
    Slice(f64),
}

impl ErrorMesh {
    fn validate(&self) -> Result<()> {
        match *self {
            ErrorMesh::Slice(t) if !(0.0..=1.0).contains(&t) => {
                Err(Error::Parameter(format!("slice time {t} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ErrorMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorMesh::Collocation => f.write_str("collocation"),
            ErrorMesh::Uniform101 => f.write_str("uniform101"),
            ErrorMesh::Slice(t) => write!(f, "slice={t}"),
        }
    }
}

impl FromStr for ErrorMesh {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collocation" => Ok(ErrorMesh::Collocation),
            "uniform101" => Ok(ErrorMesh::Uniform101),
            _ => {
                let t = s
                    .strip_prefix("slice=")
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parameter(format!("unknown error mesh '{s}'")))?;
                let mesh = ErrorMesh::Slice(t);
                mesh.validate()?;
                Ok(mesh)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Parameter(format!("unknown output format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub solver: SolverConfig,
    pub error_mesh: ErrorMesh,
    pub output: OutputFormat,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::Example1,
            alpha: 0.5,
            n: 7,
            m: 7,
            n1: 14,
            n2: 14,
            lambda: 0.5,
            lambda1: 0.5,
            lambda2: 0.5,
            solver: SolverConfig::default(),
            error_mesh: ErrorMesh::Collocation,
            output: OutputFormat::Table,
            output_path: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!("α = {} outside (0, 1]", self.alpha)));
        }
        for (name, v) in [("n", self.n), ("m", self.m), ("n1", self.n1), ("n2", self.n2)] {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be at least 1")));
            }
        }
        check_lambda(self.lambda)?;
        check_lambda(self.lambda1)?;
        check_lambda(self.lambda2)?;
        self.solver.validate()?;
        self.error_mesh.validate()
    }

    fn caputo_quad(&self) -> QuadParams {
        QuadParams { degree: self.n1, lambda: self.lambda1 }
    }

    fn frac_quad(&self) -> QuadParams {
        QuadParams { degree: self.n2, lambda: self.lambda2 }
    }

    fn base_operators(&self) -> Result<BaseOperators> {
        let ns_x = build_node_set(BasisParams::new(self.lambda, self.n)?)?;
        let ns_t = build_node_set(BasisParams::new(self.lambda, self.m)?)?;
        BaseOperators::build(ns_x, ns_t)
    }

    /// Every operator matrix for this configuration.
    pub fn operator_bundle(&self) -> Result<OperatorBundle> {
        self.validate()?;
        let base = Arc::new(self.base_operators()?);
        OperatorBundle::new(base, self.alpha, self.caputo_quad(), self.frac_quad())
    }
}

/// Serializes non-finite values as `null` / empty so JSON and CSV both
/// round-trip failed rows.
mod nan_as_none {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            None::<f64>.serialize(s)
        } else {
            Some(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub problem: String,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub error_mesh: String,
    #[serde(with = "nan_as_none")]
    pub aae: f64,
    #[serde(with = "nan_as_none")]
    pub max_err: f64,
    /// Solve wall time only.
    pub et_seconds: f64,
    /// Node, operator and assembly time.
    pub precompute_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(with = "nan_as_none")]
    pub final_residual: f64,
    #[serde(with = "nan_as_none")]
    pub boundary_residual: f64,
    /// Set when the run could not produce a solution.
    pub error: Option<String>,
}

impl RunResult {
    fn skeleton(cfg: &RunConfig) -> Self {
        Self {
            problem: cfg.problem.to_string(),
            alpha: cfg.alpha,
            n: cfg.n,
            m: cfg.m,
            n1: cfg.n1,
            n2: cfg.n2,
            lambda: cfg.lambda,
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            error_mesh: cfg.error_mesh.to_string(),
            aae: f64::NAN,
            max_err: f64::NAN,
            et_seconds: 0.0,
            precompute_seconds: 0.0,
            iterations: 0,
            converged: false,
            final_residual: f64::NAN,
            boundary_residual: f64::NAN,
            error: None,
        }
    }
}

/// `(x, t, u_numeric, u_exact, abs_err)` on the error mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: f64,
    pub t: f64,
    pub u_numeric: f64,
    #[serde(with = "nan_as_none")]
    pub u_exact: f64,
    #[serde(with = "nan_as_none")]
    pub abs_err: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub grid: Vec<GridRow>,
    pub report: SolveReport,
}

fn equispaced(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 / (count - 1) as f64).collect()
}

fn measure(
    spec: &ProblemSpec,
    report: &SolveReport,
    base: &BaseOperators,
    mesh: ErrorMesh,
) -> Result<Vec<GridRow>> {
    let sol = &report.solution;
    let (xs, ts, values) = match mesh {
        ErrorMesh::Collocation => {
            let field = sol.ordering.to_field(&sol.u);
            (base.ns_x.nodes.clone(), base.ns_t.nodes.clone(), field)
        }
        ErrorMesh::Uniform101 => {
            let p = equispaced(101);
            let vals = evaluate_on_mesh(sol, &base.ns_x, &base.ns_t, &p, &p)?;
            (p.clone(), p, vals)
        }
        ErrorMesh::Slice(t) => {
            let p = equispaced(101);
            let vals = evaluate_on_mesh(sol, &base.ns_x, &base.ns_t, &p, &[t])?;
            (p, vec![t], vals)
        }
    };
    let mut rows = Vec::with_capacity(xs.len() * ts.len());
    for (a, &x) in xs.iter().enumerate() {
        for (b, &t) in ts.iter().enumerate() {
            let u_numeric = values[(a, b)];
            let u_exact = spec.exact.as_ref().map_or(f64::NAN, |e| e(x, t));
            rows.push(GridRow { x, t, u_numeric, u_exact, abs_err: (u_numeric - u_exact).abs() });
        }
    }
    Ok(rows)
}

fn run_on(cfg: &RunConfig, base: Arc<BaseOperators>, base_seconds: f64) -> Result<RunOutput> {
    let spec = cfg.problem.build(cfg.alpha)?;
    let started = Instant::now();
    let ops = OperatorBundle::new(base.clone(), cfg.alpha, cfg.caputo_quad(), cfg.frac_quad())?;
    let sys = assemble(&spec, &ops, GridOrdering::new(cfg.n, cfg.m))?;
    let precompute_seconds = base_seconds + started.elapsed().as_secs_f64();

    let v0 = DVector::zeros(sys.unknowns());
    let mu0 = DVector::zeros(sys.multipliers());
    let report = solve(&sys, &v0, &mu0, &cfg.solver)?;

    let grid = measure(&spec, &report, &base, cfg.error_mesh)?;
    let approx: Vec<f64> = grid.iter().map(|r| r.u_numeric).collect();
    let exact: Vec<f64> = grid.iter().map(|r| r.u_exact).collect();

    let mut result = RunResult::skeleton(cfg);
    result.aae = compute_aae(&approx, &exact)?;
    result.max_err = max_abs_error(&approx, &exact);
    result.et_seconds = report.wall_time;
    result.precompute_seconds = precompute_seconds;
    result.iterations = report.iterations;
    result.converged = report.converged;
    result.final_residual = report.final_residual;
    result.boundary_residual = boundary_residual(&sys, &spec, &base.ns_t, &report.solution.v)?;
    if !report.converged {
        log::warn!("{} α = {} n = {} m = {}: {:?}", result.problem, cfg.alpha, cfg.n, cfg.m, report.status);
    }
    Ok(RunOutput { result, grid, report })
}

/// One configured run. Non-convergence is reported through
/// [`RunResult::converged`], not as an error.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let base = Arc::new(cfg.base_operators()?);
    run_on(cfg, base, started.elapsed().as_secs_f64())
}

/// Cartesian sweep over `α` and `n = m`. The α-independent operators are
/// built once per size. A failing row is recorded with its error message and
/// the sweep carries on.
pub fn sweep(template: &RunConfig, alphas: &[f64], sizes: &[usize]) -> Result<Vec<RunResult>> {
    if alphas.is_empty() || sizes.is_empty() {
        return Err(Error::Empty("sweep needs at least one α and one size".into()));
    }
    if let Some(bad) = sizes.iter().find(|&&s| s == 0) {
        return Err(Error::Parameter(format!("sweep size {bad} is below 1")));
    }
    for &alpha in alphas {
        RunConfig { alpha, ..template.clone() }.validate()?;
    }
    let mut rows = Vec::with_capacity(alphas.len() * sizes.len());
    for &size in sizes {
        let sized = RunConfig { n: size, m: size, ..template.clone() };
        let started = Instant::now();
        let base = sized.base_operators().map(Arc::new);
        let mut base_seconds = started.elapsed().as_secs_f64();
        for &alpha in alphas {
            let cfg = RunConfig { alpha, ..sized.clone() };
            let outcome = base.clone().and_then(|b| run_on(&cfg, b, base_seconds));
            rows.push(outcome.map(|o| o.result).unwrap_or_else(|e| {
                log::warn!("sweep row α = {alpha}, n = m = {size} failed: {e}");
                RunResult { error: Some(e.to_string()), ..RunResult::skeleton(&cfg) }
            }));
            base_seconds = 0.0;
        }
    }
    Ok(rows)
}

fn io_err(e: impl fmt::Display) -> Error {
    Error::Numerical(format!("output: {e}"))
}

pub fn write_csv<W: Write>(w: W, rows: &[RunResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<RunResult>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(io_err)).collect()
}

pub fn write_json<W: Write>(w: W, rows: &[RunResult]) -> Result<()> {
    serde_json::to_writer_pretty(w, rows).map_err(io_err)
}

pub fn read_json<R: Read>(r: R) -> Result<Vec<RunResult>> {
    serde_json::from_reader(r).map_err(io_err)
}

pub fn write_table<W: Write>(mut w: W, rows: &[RunResult]) -> Result<()> {
    writeln!(
        w,
        "{:<18} {:>6} {:>4} {:>4} {:>12} {:>12} {:>10} {:>10} {:>5} {:>9}",
        "problem", "alpha", "n", "m", "AAE", "max_err", "ET[s]", "pre[s]", "iters", "converged"
    )
    .map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{:<18} {:>6} {:>4} {:>4} {:>12.4e} {:>12.4e} {:>10.2e} {:>10.2e} {:>5} {:>9}",
            r.problem, r.alpha, r.n, r.m, r.aae, r.max_err, r.et_seconds, r.precompute_seconds, r.iterations, r.converged
        )
        .map_err(io_err)?;
        if let Some(e) = &r.error {
            writeln!(w, "    error: {e}").map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn write_results<W: Write>(w: W, rows: &[RunResult], format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Table => write_table(w, rows),
        OutputFormat::Csv => write_csv(w, rows),
        OutputFormat::Json => write_json(w, rows),
    }
}

pub fn write_grid_csv<W: Write>(w: W, rows: &[GridRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
