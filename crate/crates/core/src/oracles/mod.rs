//! Brute-force references for verifying the discrete operators.
//!
//! Everything here is deliberately independent of the Gauss–Jacobi and
//! barycentric machinery in [`crate::basis`] and [`crate::operators`]: the
//! fractional integral is computed by adaptive Gauss–Kronrod subdivision after
//! a change of variables that removes the kernel singularity.

mod gamma;

pub use gamma::{gamma, ln_gamma};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for the adaptive reference quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 1_000_000,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Parameter("oracle tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Parameter("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

// Kronrod 15-point abscissae (non-negative half) and weights; every second
// abscissa is also a 7-point Gauss node.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (G7/K15) quadrature of `f` over `[a, b]`.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &OracleConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (value, error) = gauss_kronrod_15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 0usize;
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Oracle(format!(
                "adaptive quadrature hit {subdivisions} subdivisions with error {total_err:e}"
            )));
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in f64; accept what we have
            heap.push(worst);
            break;
        }
        let (v1, e1) = gauss_kronrod_15(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }
    // resum to shed the drift accumulated by the running updates
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    if !f64::is_finite(value) {
        return Err(Error::Oracle("non-finite integral".into()));
    }
    Ok(Estimate { value, error })
}

fn check_rlfi_args(beta: f64, t: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Parameter(format!("RL order {beta} outside (0, 1]")));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Parameter(format!("evaluation time {t} outside (0, 1]")));
    }
    Ok(())
}

/// Riemann–Liouville integral `(1/Γ(β)) ∫₀ᵗ (t−τ)^{β−1} g(τ) dτ`.
///
/// Uses `τ = t − σ^{1/β}`, which turns the integrand into `g(t − σ^{1/β}) / β`
/// on `σ ∈ [0, t^β]`.
pub fn rlfi_oracle<G: Fn(f64) -> f64>(
    g: G,
    beta: f64,
    t: f64,
    cfg: &OracleConfig,
) -> Result<Estimate> {
    check_rlfi_args(beta, t)?;
    let inv = 1.0 / beta;
    let est = adaptive_integrate(
        |s: f64| g(t - s.powf(inv)) * inv,
        0.0,
        t.powf(beta),
        cfg,
    )?;
    let scale = 1.0 / gamma(beta);
    Ok(Estimate { value: est.value * scale, error: est.error * scale })
}

/// Same integral as [`rlfi_oracle`] by a second route: the regular half
/// `[0, t/2]` is integrated directly and only `[t/2, t]` is desingularized.
pub fn rlfi_oracle_split<G: Fn(f64) -> f64>(
    g: G,
    beta: f64,
    t: f64,
    cfg: &OracleConfig,
) -> Result<Estimate> {
    check_rlfi_args(beta, t)?;
    let half = 0.5 * t;
    let regular = adaptive_integrate(|tau: f64| (t - tau).powf(beta - 1.0) * g(tau), 0.0, half, cfg)?;
    let inv = 1.0 / beta;
    let singular = adaptive_integrate(
        |s: f64| g(t - s.powf(inv)) * inv,
        0.0,
        half.powf(beta),
        cfg,
    )?;
    let scale = 1.0 / gamma(beta);
    Ok(Estimate {
        value: (regular.value + singular.value) * scale,
        error: (regular.error + singular.error) * scale,
    })
}

/// Caputo derivative of `t^k`: `Γ(k+1)/Γ(k+1−α) t^{k−α}`, zero for `k = 0`.
pub fn caputo_power_rule(k: f64, alpha: f64, t: f64) -> Result<f64> {
    if k == 0.0 {
        return Ok(0.0);
    }
    if k < alpha {
        return Err(Error::Parameter(format!(
            "power {k} below the Caputo order {alpha}"
        )));
    }
    if k == alpha {
        return Ok(gamma(k + 1.0));
    }
    Ok(gamma(k + 1.0) / gamma(k + 1.0 - alpha) * t.powf(k - alpha))
}

/// Riemann–Liouville integral of `t^k`: `Γ(k+1)/Γ(k+β+1) t^{k+β}`.
pub fn rlfi_power_rule(k: f64, beta: f64, t: f64) -> f64 {
    gamma(k + 1.0) / gamma(k + beta + 1.0) * t.powf(k + beta)
}

/// Central difference `(g(x+h) − g(x−h)) / 2h`.
pub fn fd_derivative<G: Fn(f64) -> f64>(g: G, x: f64, h: f64) -> f64 {
    (g(x + h) - g(x - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rlfi_of_one_at_half_order() {
        let est = rlfi_oracle(|_| 1.0, 0.5, 1.0, &OracleConfig::default()).unwrap();
        assert_abs_diff_eq!(est.value, 1.128_379_167_095_512_6, epsilon = 1e-11);
    }

    #[test]
    fn rlfi_order_one_is_plain_integral() {
        let est = rlfi_oracle(|x| x, 1.0, 0.5, &OracleConfig::default()).unwrap();
        assert_abs_diff_eq!(est.value, 0.125, epsilon = 1e-14);
    }

    #[test]
    fn rlfi_of_exp_by_two_routes() {
        let cfg = OracleConfig::default();
        let a = rlfi_oracle(f64::exp, 0.5, 1.0, &cfg).unwrap();
        let b = rlfi_oracle_split(f64::exp, 0.5, 1.0, &cfg).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-10);
        // 30-digit value: Σ 1/Γ(k + 3/2)
        assert_abs_diff_eq!(a.value, 2.290_698_252_303_238_2, epsilon = 1e-11);
    }

    #[test]
    fn rlfi_power_rule_agreement() {
        let cfg = OracleConfig::default();
        for k in 0..=3 {
            for &beta in &[0.25, 0.5, 0.9] {
                for &t in &[0.13, 0.5, 1.0] {
                    let est = rlfi_oracle(|x| x.powi(k), beta, t, &cfg).unwrap();
                    let want = rlfi_power_rule(k as f64, beta, t);
                    assert!(
                        (est.value - want).abs() < 1e-10,
                        "k={k} β={beta} t={t}: {} vs {want}",
                        est.value
                    );
                }
            }
        }
    }

    #[test]
    fn halving_tolerance_stays_within_error_estimate() {
        let coarse = OracleConfig { abs_tol: 1e-8, rel_tol: 1e-8, ..Default::default() };
        let fine = OracleConfig { abs_tol: 5e-9, rel_tol: 5e-9, ..Default::default() };
        for &beta in &[0.25, 0.5, 0.9] {
            let g = |x: f64| (3.0 * x).sin() + x * x;
            let a = rlfi_oracle(g, beta, 0.8, &coarse).unwrap();
            let b = rlfi_oracle(g, beta, 0.8, &fine).unwrap();
            assert!((a.value - b.value).abs() <= a.error.max(1e-15), "β={beta}");
        }
    }

    #[test]
    fn rlfi_rejects_bad_order() {
        assert!(rlfi_oracle(|_| 1.0, 0.0, 1.0, &OracleConfig::default()).is_err());
        assert!(rlfi_oracle(|_| 1.0, 1.5, 1.0, &OracleConfig::default()).is_err());
        assert!(rlfi_oracle(|_| 1.0, 0.5, 0.0, &OracleConfig::default()).is_err());
    }

    #[test]
    fn exhausted_subdivisions_are_reported() {
        let cfg = OracleConfig { abs_tol: 1e-300, rel_tol: 1e-300, max_subdivisions: 3 };
        let res = adaptive_integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, &cfg);
        assert!(matches!(res, Err(Error::Oracle(_))));
    }

    #[test]
    fn caputo_power_rule_values() {
        assert_eq!(caputo_power_rule(0.0, 0.5, 0.7).unwrap(), 0.0);
        assert_abs_diff_eq!(
            caputo_power_rule(1.5, 0.5, 1.0).unwrap(),
            1.329_340_388_179_137,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(caputo_power_rule(2.0, 1.0, 0.3).unwrap(), 0.6, epsilon = 1e-14);
        assert!(caputo_power_rule(0.3, 0.5, 1.0).is_err());
    }

    #[test]
    fn fd_derivative_values() {
        assert_abs_diff_eq!(fd_derivative(|x| x * x, 1.0, 1e-6), 2.0, epsilon = 1e-9);
        assert_eq!(fd_derivative(|_| 4.2, 0.3, 1e-6), 0.0);
        assert_abs_diff_eq!(fd_derivative(f64::sin, 0.5, 1e-6), 0.5f64.cos(), epsilon = 1e-9);
    }
}
