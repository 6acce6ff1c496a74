//! `hsg-ips`: runs the time-fractional BBM-Burgers solver on registered
//! problems and prints accuracy/timing tables.
//!
//! Exit codes: 0 success, 2 non-convergence, 3 invalid configuration,
//! 1 any other failure (I/O).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use hsg_core::experiment::{
    run, sweep, write_grid_csv, write_results, ErrorMesh, OutputFormat, RunConfig, RunResult,
};
use hsg_core::formulation::Formulation;
use hsg_core::problems::{register_problems, ProblemId};
use hsg_core::solver::{Method, SolverConfig};

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Newton,
    TrustRegion,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormulationArg {
    LeastSquares,
    Kkt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "hsg-ips", version, about = "Shifted Gegenbauer integral-pseudospectral solver for the time-fractional BBM-Burgers equation")]
struct Cli {
    /// example1, example2, example2-printed or manufactured:<poly|cosine|rational>
    #[arg(long, default_value = "example1")]
    problem: String,
    /// Caputo order in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Spatial degree
    #[arg(long, default_value_t = 7)]
    n: usize,
    /// Temporal degree
    #[arg(long, default_value_t = 7)]
    m: usize,
    /// Quadrature degree of the Caputo matrix
    #[arg(long, default_value_t = 14)]
    n1: usize,
    /// Quadrature degree of the fractional integration matrix
    #[arg(long, default_value_t = 14)]
    n2: usize,
    /// Gegenbauer index of the collocation nodes
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    lambda2: f64,
    /// Residual tolerance (∞-norm)
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "trust-region")]
    solver: SolverArg,
    #[arg(long, value_enum, default_value = "least-squares")]
    formulation: FormulationArg,
    /// collocation, uniform101 or slice=<t>
    #[arg(long, default_value = "collocation")]
    error_mesh: String,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    /// Write results here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated α values for a sweep
    #[arg(long, value_delimiter = ',')]
    sweep_alpha: Vec<f64>,
    /// Comma-separated n = m values for a sweep
    #[arg(long, value_delimiter = ',')]
    sweep_size: Vec<usize>,
    /// Write (x, t, u_numeric, u_exact, abs_err) rows of a single run as CSV
    #[arg(long)]
    dump_grid: Option<PathBuf>,
    /// Write every operator matrix (binary and JSON) into this directory
    #[arg(long)]
    dump_operators: Option<PathBuf>,
}

impl Cli {
    fn is_sweep(&self) -> bool {
        !self.sweep_alpha.is_empty() || !self.sweep_size.is_empty()
    }

    fn config(&self) -> Result<RunConfig, String> {
        let problem: ProblemId = self.problem.parse().map_err(|e| {
            let known: Vec<String> = register_problems().iter().map(ToString::to_string).collect();
            format!("{e}; known problems: {}", known.join(", "))
        })?;
        let error_mesh: ErrorMesh = self.error_mesh.parse().map_err(|e| format!("{e}"))?;
        let solver = SolverConfig {
            tol_residual: self.tol,
            max_iters: self.max_iters,
            method: match self.solver {
                SolverArg::Newton => Method::Newton,
                SolverArg::TrustRegion => Method::TrustRegion,
            },
            formulation: match self.formulation {
                FormulationArg::LeastSquares => Formulation::LeastSquares,
                FormulationArg::Kkt => Formulation::Kkt,
            },
            ..SolverConfig::default()
        };
        let cfg = RunConfig {
            problem,
            alpha: self.alpha,
            n: self.n,
            m: self.m,
            n1: self.n1,
            n2: self.n2,
            lambda: self.lambda,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            solver,
            error_mesh,
            output: match self.format {
                FormatArg::Table => OutputFormat::Table,
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            },
            output_path: self.out.clone(),
        };
        cfg.validate().map_err(|e| e.to_string())?;
        if self.is_sweep() && self.dump_grid.is_some() {
            return Err("--dump-grid applies to single runs only".into());
        }
        if self.sweep_size.contains(&0) {
            return Err("sweep sizes must be at least 1".into());
        }
        Ok(cfg)
    }
}

fn emit(cfg: &RunConfig, rows: &[RunResult]) -> anyhow::Result<()> {
    match &cfg.output_path {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            write_results(&mut f, rows, cfg.output)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_results(&mut lock, rows, cfg.output)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn execute(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<bool> {
    if let Some(dir) = &cli.dump_operators {
        let bundle = cfg.operator_bundle()?;
        bundle.dump_to_dir(dir).with_context(|| format!("writing operators to {}", dir.display()))?;
        log::info!("operators written to {}", dir.display());
    }
    let rows = if cli.is_sweep() {
        let alphas = if cli.sweep_alpha.is_empty() { vec![cfg.alpha] } else { cli.sweep_alpha.clone() };
        let sizes = if cli.sweep_size.is_empty() { vec![cfg.n] } else { cli.sweep_size.clone() };
        sweep(cfg, &alphas, &sizes)?
    } else {
        let out = run(cfg)?;
        if let Some(path) = &cli.dump_grid {
            let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            write_grid_csv(f, &out.grid)?;
        }
        vec![out.result]
    };
    emit(cfg, &rows)?;
    Ok(rows.iter().all(|r| r.converged && r.error.is_none()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match cli.config() {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("invalid configuration: {msg}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    match execute(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("solver did not converge for every run");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid = e
                .downcast_ref::<hsg_core::Error>()
                .is_some_and(|e| matches!(e, hsg_core::Error::Parameter(_) | hsg_core::Error::Empty(_) | hsg_core::Error::UnknownProblem(_)));
            ExitCode::from(if invalid { EXIT_INVALID } else { 1 })
        }
    }
}
