//! Nonlinear solvers for the systems of [`crate::formulation`].
//!
//! Two independent globalizations share the same exact Jacobian: a Newton
//! iteration with residual backtracking, and a dogleg trust region on the
//! merit `½‖G‖²`.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assembly::{reconstruct, DiscreteSolution, DiscreteSystem};
use crate::error::{Error, Result};
use crate::formulation::Formulation;
use crate::linalg::kkt_linear_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Newton,
    #[default]
    TrustRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// ∞-norm target for the KKT residual.
    pub tol_residual: f64,
    /// ∞-norm step size below which iteration stops.
    pub tol_step: f64,
    pub max_iters: usize,
    pub initial_trust_radius: f64,
    pub min_trust_radius: f64,
    /// Minimum actual/predicted reduction ratio for accepting a step.
    pub eta_accept: f64,
    pub method: Method,
    pub formulation: Formulation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-12,
            tol_step: 1e-14,
            max_iters: 100,
            initial_trust_radius: 1.0,
            min_trust_radius: 1e-12,
            eta_accept: 0.1,
            method: Method::TrustRegion,
            formulation: Formulation::LeastSquares,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_residual", self.tol_residual),
            ("tol_step", self.tol_step),
            ("initial_trust_radius", self.initial_trust_radius),
            ("min_trust_radius", self.min_trust_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eta_accept > 0.0 && self.eta_accept < 1.0) {
            return Err(Error::Parameter(format!(
                "eta_accept must lie in (0, 1), got {}",
                self.eta_accept
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// `‖G‖∞ ≤ tol_residual`.
    Converged,
    /// Step fell below `tol_step` while the residual is still above target.
    StepTolerance,
    /// No acceptable step (line search exhausted, or trust radius underflow).
    Stagnated,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DiscreteSolution,
    pub iterations: usize,
    /// ∞-norm of the full residual `G` at the returned point.
    pub final_residual: f64,
    pub converged: bool,
    pub status: SolveStatus,
    pub wall_time: f64,
    /// ∞-norm of the last step taken.
    pub last_step: f64,
    /// Largest condition estimate seen across the linear solves.
    pub max_condition: f64,
    pub ill_conditioned: bool,
    /// Merit `½‖G‖²` at every accepted iterate, starting with the initial one.
    pub merit_history: Vec<f64>,
}

fn eval(cfg: &SolverConfig, sys: &DiscreteSystem, x: &DVector<f64>) -> Result<DVector<f64>> {
    cfg.formulation.residual(sys, x)
}

struct Tracker {
    iterations: usize,
    last_step: f64,
    max_condition: f64,
    ill_conditioned: bool,
    merit_history: Vec<f64>,
}

impl Tracker {
    fn new(merit: f64) -> Self {
        Self {
            iterations: 0,
            last_step: f64::INFINITY,
            max_condition: 0.0,
            ill_conditioned: false,
            merit_history: vec![merit],
        }
    }
}

fn finish(
    cfg: &SolverConfig,
    sys: &DiscreteSystem,
    x: DVector<f64>,
    g: &DVector<f64>,
    status: SolveStatus,
    track: Tracker,
    started: Instant,
) -> Result<SolveReport> {
    let (v, mu) = cfg.formulation.split(sys, &x);
    let u = reconstruct(sys, &v)?;
    let (residual_norm, constraint_norm) = cfg.formulation.block_norms(sys, g);
    let solution = DiscreteSolution { ordering: sys.ordering, residual_norm, constraint_norm, v, mu, u };
    Ok(SolveReport {
        solution,
        iterations: track.iterations,
        final_residual: g.amax(),
        converged: status == SolveStatus::Converged,
        status,
        wall_time: started.elapsed().as_secs_f64(),
        last_step: track.last_step,
        max_condition: track.max_condition,
        ill_conditioned: track.ill_conditioned,
        merit_history: track.merit_history,
    })
}

fn merit(g: &DVector<f64>) -> f64 {
    0.5 * g.norm_squared()
}

/// Newton iteration with halving backtracking on `‖G‖∞`.
pub fn newton_solve(
    sys: &DiscreteSystem,
    v0: &DVector<f64>,
    mu0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut x = cfg.formulation.initial_state(sys, v0, mu0)?;
    let mut g = eval(cfg, sys, &x)?;
    let mut track = Tracker::new(merit(&g));

    let status = loop {
        let gnorm = g.amax();
        if gnorm <= cfg.tol_residual {
            break SolveStatus::Converged;
        }
        if track.iterations >= cfg.max_iters {
            break SolveStatus::MaxIterations;
        }
        let jac = cfg.formulation.jacobian(sys, &x)?;
        let lin = kkt_linear_solve(&jac, &(-&g))?;
        track.max_condition = track.max_condition.max(lin.condition_estimate);
        track.ill_conditioned |= lin.ill_conditioned;
        let step = lin.solution;
        track.iterations += 1;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let trial = &x + &step * t;
            let gt = eval(cfg, sys, &trial)?;
            if gt.amax() < gnorm {
                accepted = Some((trial, gt));
                break;
            }
            t *= 0.5;
        }
        track.last_step = step.amax() * t;
        match accepted {
            Some((trial, gt)) => {
                x = trial;
                g = gt;
                track.merit_history.push(merit(&g));
            }
            None => break SolveStatus::Stagnated,
        }
        if g.amax() <= cfg.tol_residual {
            break SolveStatus::Converged;
        }
        if track.last_step <= cfg.tol_step {
            break SolveStatus::StepTolerance;
        }
    };
    log::debug!("newton: {status:?} after {} iterations, ‖G‖∞ = {:e}", track.iterations, g.amax());
    finish(cfg, sys, x, &g, status, track, started)
}

/// Dogleg trust-region iteration on `½‖G‖²` with the exact KKT Jacobian.
pub fn trust_region_solve(
    sys: &DiscreteSystem,
    v0: &DVector<f64>,
    mu0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut x = cfg.formulation.initial_state(sys, v0, mu0)?;
    let mut g = eval(cfg, sys, &x)?;
    let mut phi = merit(&g);
    let mut track = Tracker::new(phi);
    let mut radius = cfg.initial_trust_radius;

    // Newton step, gradient and Cauchy step stay valid until a step is accepted
    let mut model: Option<(nalgebra::DMatrix<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> = None;

    let status = loop {
        if g.amax() <= cfg.tol_residual {
            break SolveStatus::Converged;
        }
        if track.iterations >= cfg.max_iters {
            break SolveStatus::MaxIterations;
        }
        if radius < cfg.min_trust_radius {
            break SolveStatus::Stagnated;
        }
        if model.is_none() {
            let jac = cfg.formulation.jacobian(sys, &x)?;
            let lin = kkt_linear_solve(&jac, &(-&g))?;
            track.max_condition = track.max_condition.max(lin.condition_estimate);
            track.ill_conditioned |= lin.ill_conditioned;
            let grad = jac.tr_mul(&g);
            let jg = &jac * &grad;
            let gg = grad.norm_squared();
            let cauchy = if gg == 0.0 { DVector::zeros(grad.len()) } else { &grad * (-gg / jg.norm_squared()) };
            model = Some((jac, lin.solution, grad, cauchy));
        }
        let (jac, newton, grad, cauchy) = model.as_ref().expect("model built above");
        track.iterations += 1;

        let step = dogleg(newton, cauchy, grad, radius);
        let step_len = step.norm();
        let predicted = phi - merit(&(&g + jac * &step));
        let trial = &x + &step;
        let gt = eval(cfg, sys, &trial)?;
        let phi_trial = merit(&gt);
        let actual = phi - phi_trial;
        let rho = if predicted > 0.0 { actual / predicted } else { f64::NEG_INFINITY };

        if rho < cfg.eta_accept {
            radius *= 0.25;
        } else if rho > 0.75 && step_len >= 0.99 * radius {
            radius *= 2.0;
        }
        track.last_step = step.amax();
        if rho >= cfg.eta_accept && actual >= 0.0 {
            x = trial;
            g = gt;
            phi = phi_trial;
            track.merit_history.push(phi);
            model = None;
            if g.amax() <= cfg.tol_residual {
                break SolveStatus::Converged;
            }
            if track.last_step <= cfg.tol_step {
                break SolveStatus::StepTolerance;
            }
        } else if track.last_step <= cfg.tol_step {
            // rejected step already below the step tolerance: rounding floor
            break SolveStatus::StepTolerance;
        }
    };
    log::debug!(
        "trust region: {status:?} after {} iterations, ‖G‖∞ = {:e}, Δ = {radius:e}",
        track.iterations,
        g.amax()
    );
    finish(cfg, sys, x, &g, status, track, started)
}

/// Dogleg point inside the 2-norm ball of the given radius.
fn dogleg(newton: &DVector<f64>, cauchy: &DVector<f64>, grad: &DVector<f64>, radius: f64) -> DVector<f64> {
    if newton.norm() <= radius {
        return newton.clone();
    }
    let cn = cauchy.norm();
    if cn >= radius {
        let gn = grad.norm();
        return if gn == 0.0 { DVector::zeros(grad.len()) } else { grad * (-radius / gn) };
    }
    // ‖c + τ(n − c)‖ = radius for τ ∈ [0, 1]
    let d = newton - cauchy;
    let a = d.norm_squared();
    let b = 2.0 * cauchy.dot(&d);
    let c = cn * cn - radius * radius;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // numerically stable root of the quadratic (c < 0, so the roots have opposite signs)
    let tau = if b >= 0.0 { -2.0 * c / (b + disc) } else { (disc - b) / (2.0 * a) };
    cauchy + d * tau.clamp(0.0, 1.0)
}

/// Dispatches on [`SolverConfig::method`].
pub fn solve(
    sys: &DiscreteSystem,
    v0: &DVector<f64>,
    mu0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    match cfg.method {
        Method::Newton => newton_solve(sys, v0, mu0, cfg),
        Method::TrustRegion => trust_region_solve(sys, v0, mu0, cfg),
    }
}
