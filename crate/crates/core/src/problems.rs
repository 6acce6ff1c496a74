//! Problem data for `D_t^α u − u_xxt + u_x + u u_x = f` on the unit square
//! with `u(x,0) = φ(x)`, `u(0,t) = ψ₁(t)`, `u(1,t) = ψ₂(t)`.
//!
//! Besides the two benchmark problems, the registry carries separable
//! manufactured solutions `u = X(x) T(t)` whose source term is derived
//! symbolically, which is how the benchmark sources are cross-checked.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracles::gamma;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub alpha: f64,
    pub phi: ScalarFn,
    pub psi1: ScalarFn,
    pub psi2: ScalarFn,
    pub f: FieldFn,
    pub exact: Option<FieldFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Checks `α ∈ (0, 1]` and, when an exact solution is known, corner
    /// compatibility of the initial and boundary data.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!("α = {} outside (0, 1]", self.alpha)));
        }
        if self.exact.is_some() {
            let eps = 1e-12;
            let left = ((self.phi)(0.0) - (self.psi1)(eps)).abs();
            let right = ((self.phi)(1.0) - (self.psi2)(eps)).abs();
            if left > 1e-10 || right > 1e-10 {
                return Err(Error::Parameter(format!(
                    "incompatible corner data for `{}` (|φ(0)−ψ₁(0⁺)| = {left:e}, \
                     |φ(1)−ψ₂(0⁺)| = {right:e})",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// `Σ cₖ t^{pₖ}` with real, non-negative exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSum(pub Vec<(f64, f64)>);

impl PowerSum {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().map(|&(c, p)| if p == 0.0 { c } else { c * t.powf(p) }).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.0
            .iter()
            .filter(|&&(_, p)| p != 0.0)
            .map(|&(c, p)| c * p * t.powf(p - 1.0))
            .sum()
    }

    /// Caputo derivative of order `α ∈ (0, 1]`.
    pub fn caputo(&self, alpha: f64, t: f64) -> f64 {
        self.0
            .iter()
            .filter(|&&(_, p)| p != 0.0)
            .map(|&(c, p)| c * gamma(p + 1.0) / gamma(p + 1.0 - alpha) * t.powf(p - alpha))
            .sum()
    }
}

/// Spatial factor with its first two derivatives.
#[derive(Clone)]
pub struct SpaceFactor {
    pub value: ScalarFn,
    pub d1: ScalarFn,
    pub d2: ScalarFn,
}

/// `u(x,t) = X(x) T(t)`.
#[derive(Clone)]
pub struct SeparableSolution {
    pub space: SpaceFactor,
    pub time: PowerSum,
}

impl SeparableSolution {
    /// Source term obtained by substituting `u` into the equation.
    pub fn source(&self, alpha: f64) -> FieldFn {
        let sol = self.clone();
        Arc::new(move |x, t| {
            let xv = (sol.space.value)(x);
            let x1 = (sol.space.d1)(x);
            let x2 = (sol.space.d2)(x);
            let tv = sol.time.eval(t);
            xv * sol.time.caputo(alpha, t) - x2 * sol.time.derivative(t) + x1 * tv
                + xv * x1 * tv * tv
        })
    }

    pub fn into_problem(self, name: &str, alpha: f64) -> ProblemSpec {
        let f = self.source(alpha);
        let t0 = self.time.eval(0.0);
        let (xa, xb) = ((self.space.value)(0.0), (self.space.value)(1.0));
        let space = self.space.value.clone();
        let time = self.time.clone();
        let phi: ScalarFn = Arc::new(move |x| space(x) * t0);
        let t1 = self.time.clone();
        let psi1: ScalarFn = Arc::new(move |t| xa * t1.eval(t));
        let t2 = self.time.clone();
        let psi2: ScalarFn = Arc::new(move |t| xb * t2.eval(t));
        let space = self.space.value.clone();
        let exact: FieldFn = Arc::new(move |x, t| space(x) * time.eval(t));
        ProblemSpec { name: name.to_string(), alpha, phi, psi1, psi2, f, exact: Some(exact) }
    }
}

fn zero() -> ScalarFn {
    Arc::new(|_| 0.0)
}

/// Benchmark 1: `u = x⁴(x−1) t^{3/2}`, homogeneous data.
pub fn example1(alpha: f64) -> ProblemSpec {
    let g = gamma(2.5 - alpha);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let f: FieldFn = Arc::new(move |x: f64, t: f64| {
        let t25 = t.powf(2.5);
        3.0 * sqrt_pi * x.powi(4) * (x - 1.0) * t.powf(1.5 - alpha) / (4.0 * g)
            + x * x
                * t.sqrt()
                * (5.0 * x.powi(7) * t25 - 9.0 * x.powi(6) * t25 + 4.0 * x.powi(5) * t25
                    + 5.0 * x * x * t
                    - 4.0 * x * t
                    - 30.0 * x
                    + 18.0)
    });
    ProblemSpec {
        name: "example1".into(),
        alpha,
        phi: zero(),
        psi1: zero(),
        psi2: zero(),
        f,
        exact: Some(Arc::new(|x: f64, t: f64| x.powi(4) * (x - 1.0) * t.powf(1.5))),
    }
}

/// Benchmark 2: `u = t² eˣ` with `ψ₁ = t²`, `ψ₂ = e t²`.
///
/// The Burgers term contributes `u u_x = t⁴ e^{2x}`.
pub fn example2(alpha: f64) -> ProblemSpec {
    let g = gamma(3.0 - alpha);
    let f: FieldFn = Arc::new(move |x: f64, t: f64| {
        let ex = x.exp();
        2.0 * ex * t.powf(2.0 - alpha) / g + t * ex * (t - 2.0) + t.powi(4) * ex * ex
    });
    example2_with_source("example2", alpha, f)
}

/// Benchmark 2 with the source term in its commonly printed form
/// `2eˣt^{2−α}/Γ(3−α) + t eˣ (t³ + t − 2)`, which does not correspond to
/// `u = t² eˣ` (its Burgers contribution is `t⁴ eˣ` instead of `t⁴ e^{2x}`).
pub fn example2_printed(alpha: f64) -> ProblemSpec {
    let g = gamma(3.0 - alpha);
    let f: FieldFn = Arc::new(move |x: f64, t: f64| {
        let ex = x.exp();
        2.0 * ex * t.powf(2.0 - alpha) / g + t * ex * (t.powi(3) + t - 2.0)
    });
    example2_with_source("example2-printed", alpha, f)
}

fn example2_with_source(name: &str, alpha: f64, f: FieldFn) -> ProblemSpec {
    ProblemSpec {
        name: name.into(),
        alpha,
        phi: zero(),
        psi1: Arc::new(|t: f64| t * t),
        psi2: Arc::new(|t: f64| std::f64::consts::E * t * t),
        f,
        exact: Some(Arc::new(|x: f64, t: f64| t * t * x.exp())),
    }
}

/// Names accepted after `manufactured:`.
pub const MANUFACTURED: [&str; 3] = ["poly", "cosine", "rational"];

/// Separable manufactured solutions.
///
/// * `poly`: `(1 + x + x²)(1 + t + t²)`, reproduced exactly once `n, m ≥ 2`
/// * `cosine`: `cos(πx)(1 + t³)`, non-zero initial data
/// * `rational`: `t² / (1 + x²)`, geometric convergence in `n`
pub fn manufactured(name: &str) -> Result<SeparableSolution> {
    use std::f64::consts::PI;
    let sol = match name {
        "poly" => SeparableSolution {
            space: SpaceFactor {
                value: Arc::new(|x| 1.0 + x + x * x),
                d1: Arc::new(|x| 1.0 + 2.0 * x),
                d2: Arc::new(|_| 2.0),
            },
            time: PowerSum(vec![(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]),
        },
        "cosine" => SeparableSolution {
            space: SpaceFactor {
                value: Arc::new(|x| (PI * x).cos()),
                d1: Arc::new(|x| -PI * (PI * x).sin()),
                d2: Arc::new(|x| -PI * PI * (PI * x).cos()),
            },
            time: PowerSum(vec![(1.0, 0.0), (1.0, 3.0)]),
        },
        "rational" => SeparableSolution {
            space: SpaceFactor {
                value: Arc::new(|x| 1.0 / (1.0 + x * x)),
                d1: Arc::new(|x| -2.0 * x / (1.0 + x * x).powi(2)),
                d2: Arc::new(|x| (6.0 * x * x - 2.0) / (1.0 + x * x).powi(3)),
            },
            time: PowerSum(vec![(1.0, 2.0)]),
        },
        other => return Err(Error::UnknownProblem(format!("manufactured:{other}"))),
    };
    Ok(sol)
}

/// Registry key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProblemId {
    Example1,
    Example2,
    Example2Printed,
    Manufactured(String),
}

impl ProblemId {
    pub fn build(&self, alpha: f64) -> Result<ProblemSpec> {
        let spec = match self {
            ProblemId::Example1 => example1(alpha),
            ProblemId::Example2 => example2(alpha),
            ProblemId::Example2Printed => example2_printed(alpha),
            ProblemId::Manufactured(name) => {
                manufactured(name)?.into_problem(&format!("manufactured:{name}"), alpha)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::Example1 => f.write_str("example1"),
            ProblemId::Example2 => f.write_str("example2"),
            ProblemId::Example2Printed => f.write_str("example2-printed"),
            ProblemId::Manufactured(n) => write!(f, "manufactured:{n}"),
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(ProblemId::Example1),
            "example2" => Ok(ProblemId::Example2),
            "example2-printed" => Ok(ProblemId::Example2Printed),
            _ => match s.strip_prefix("manufactured:") {
                Some(name) if MANUFACTURED.contains(&name) => {
                    Ok(ProblemId::Manufactured(name.to_string()))
                }
                _ => Err(Error::UnknownProblem(s.to_string())),
            },
        }
    }
}

/// Every registered problem id.
pub fn register_problems() -> Vec<ProblemId> {
    let mut ids = vec![ProblemId::Example1, ProblemId::Example2, ProblemId::Example2Printed];
    ids.extend(MANUFACTURED.iter().map(|n| ProblemId::Manufactured(n.to_string())));
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> impl Iterator<Item = (f64, f64)> {
        (0..=10).flat_map(|i| (1..=10).map(move |j| (0.1 * i as f64, 0.1 * j as f64)))
    }

    #[test]
    fn example1_exact_vanishes_at_right_corner() {
        let p = example1(0.5);
        assert_eq!((p.exact.unwrap())(1.0, 1.0), 0.0);
    }

    #[test]
    fn example2_exact_value() {
        let p = example2(0.5);
        assert_abs_diff_eq!((p.exact.unwrap())(0.5, 1.0), 1.648_721_270_700_128_1, epsilon = 1e-15);
    }

    #[test]
    fn example1_source_vanishes_on_left_edge() {
        let p = example1(0.5);
        for j in 0..=20 {
            assert_eq!((p.f)(0.0, 0.05 * j as f64), 0.0);
        }
    }

    #[test]
    fn example1_source_matches_symbolic_derivation() {
        let sol = SeparableSolution {
            space: SpaceFactor {
                value: Arc::new(|x: f64| x.powi(5) - x.powi(4)),
                d1: Arc::new(|x: f64| 5.0 * x.powi(4) - 4.0 * x.powi(3)),
                d2: Arc::new(|x: f64| 20.0 * x.powi(3) - 12.0 * x * x),
            },
            time: PowerSum(vec![(1.0, 1.5)]),
        };
        for &alpha in &[0.1, 0.5, 0.75, 1.0] {
            let printed = example1(alpha).f;
            let derived = sol.source(alpha);
            for (x, t) in grid() {
                assert_abs_diff_eq!(printed(x, t), derived(x, t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn example2_source_matches_symbolic_derivation() {
        let sol = SeparableSolution {
            space: SpaceFactor {
                value: Arc::new(f64::exp),
                d1: Arc::new(f64::exp),
                d2: Arc::new(f64::exp),
            },
            time: PowerSum(vec![(1.0, 2.0)]),
        };
        for &alpha in &[0.1, 0.5, 1.0] {
            let ours = example2(alpha).f;
            let printed = example2_printed(alpha).f;
            let derived = sol.source(alpha);
            for (x, t) in grid() {
                assert_abs_diff_eq!(ours(x, t), derived(x, t), epsilon = 1e-12);
                let gap = t.powi(4) * ((2.0 * x).exp() - x.exp());
                assert_abs_diff_eq!(derived(x, t) - printed(x, t), gap, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn registry_round_trips_names() {
        for id in register_problems() {
            let parsed: ProblemId = id.to_string().parse().unwrap();
            assert_eq!(parsed, id);
            let spec = id.build(0.5).unwrap();
            assert_eq!(spec.name, id.to_string());
        }
        assert!("example3".parse::<ProblemId>().is_err());
        assert!("manufactured:nope".parse::<ProblemId>().is_err());
    }

    #[test]
    fn manufactured_data_is_consistent_with_exact() {
        for name in MANUFACTURED {
            let p = manufactured(name).unwrap().into_problem(name, 0.4);
            let u = p.exact.clone().unwrap();
            for i in 0..=10 {
                let s = 0.1 * i as f64;
                assert_abs_diff_eq!((p.phi)(s), u(s, 0.0), epsilon = 1e-15);
                assert_abs_diff_eq!((p.psi1)(s), u(0.0, s), epsilon = 1e-15);
                assert_abs_diff_eq!((p.psi2)(s), u(1.0, s), epsilon = 1e-15);
            }
            p.validate().unwrap();
        }
    }

    #[test]
    fn incompatible_corners_are_rejected() {
        let mut p = example1(0.5);
        p.psi1 = Arc::new(|_| 1.0);
        assert!(p.validate().is_err());
        let mut q = example1(0.5);
        q.alpha = 1.5;
        assert!(q.validate().is_err());
    }

    #[test]
    fn power_sum_caputo_of_linear_term() {
        let ps = PowerSum(vec![(2.0, 0.0), (1.0, 1.0)]);
        // D^{1/2} t = t^{1/2} / Γ(3/2)
        assert_abs_diff_eq!(ps.caputo(0.5, 0.64), 0.8 / gamma(1.5), epsilon = 1e-15);
        assert_abs_diff_eq!(ps.caputo(1.0, 0.3), 1.0, epsilon = 1e-15);
    }
}
