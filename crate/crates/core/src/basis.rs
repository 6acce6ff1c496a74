//! Shifted Gegenbauer–Gauss node sets on `[0, 1]`.
//!
//! Nodes come from the Golub–Welsch eigenvalue problem for the symmetric
//! Jacobi matrix of the Gegenbauer weight `(1−x²)^{λ−1/2}`, refined by a
//! couple of Newton steps on the orthonormal recurrence. Quadrature weights
//! use the Christoffel formula `wᵢ = 1 / Σₖ p̃ₖ(xᵢ)²`, which is accurate to
//! full relative precision even where the eigenvector route is not.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::oracles::gamma;

/// Lower end of the admissible Gegenbauer index window (exclusive).
pub const LAMBDA_MIN: f64 = -0.5 + 1e-3;
/// Upper end of the admissible Gegenbauer index window (inclusive).
pub const LAMBDA_MAX: f64 = 2.0;
/// Centre of the index neighbourhood known to amplify quadrature error.
pub const LAMBDA_STAR: f64 = -0.1351;
/// Half-width of that neighbourhood.
pub const LAMBDA_STAR_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BasisParams {
    pub lambda: f64,
    /// Grid degree; the node count is `n + 1`.
    pub n: usize,
}

impl BasisParams {
    pub fn new(lambda: f64, n: usize) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda, n })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Validates a Gegenbauer index. Values near [`LAMBDA_STAR`] are accepted
/// with a logged warning.
pub fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > LAMBDA_MIN && lambda <= LAMBDA_MAX) {
        return Err(Error::Parameter(format!(
            "Gegenbauer index {lambda} outside ({LAMBDA_MIN}, {LAMBDA_MAX}]"
        )));
    }
    if near_lambda_star(lambda) {
        log::warn!(
            "Gegenbauer index {lambda} lies within {LAMBDA_STAR_RADIUS} of {LAMBDA_STAR}; \
             expect amplified quadrature error"
        );
    }
    Ok(())
}

pub fn near_lambda_star(lambda: f64) -> bool {
    (lambda - LAMBDA_STAR).abs() < LAMBDA_STAR_RADIUS
}

/// Monic three-term recurrence `p_{k+1} = (x − αₖ) pₖ − βₖ p_{k−1}` for the
/// Jacobi weight `(1−x)^a (1+x)^b` on `[−1, 1]`; `β₀` holds the total mass.
pub fn jacobi_recurrence(a: f64, b: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::Parameter(format!("Jacobi exponents ({a}, {b}) must exceed -1")));
    }
    let ab = a + b;
    let mut alpha = Vec::with_capacity(count);
    let mut beta = Vec::with_capacity(count);
    for k in 0..count {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        alpha.push(if k == 0 {
            (b - a) / (ab + 2.0)
        } else if a == b {
            0.0
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        });
        beta.push(match k {
            0 => 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0),
            1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab)),
            _ => {
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab)
                    / (s * s * (s + 1.0) * (s - 1.0))
            }
        });
    }
    Ok((alpha, beta))
}

/// Recurrence coefficients `(αₖ, βₖ)`, `k = 0..=n`, of the monic Gegenbauer
/// family with index λ.
pub fn recurrence_coefficients(params: &BasisParams) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lambda(params.lambda)?;
    let e = params.lambda - 0.5;
    jacobi_recurrence(e, e, params.n + 1)
}

/// A Gauss rule on `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Maps the rule affinely onto `[lo, hi]` (weights scale by the half-length
    /// only; any weight-function rescaling is the caller's business).
    pub fn mapped(&self, lo: f64, hi: f64) -> GaussRule {
        let half = 0.5 * (hi - lo);
        GaussRule {
            nodes: self.nodes.iter().map(|&x| lo + half * (x + 1.0)).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }
}

/// Evaluates the orthonormal polynomials `p̃₀..p̃_{count−1}` at `x` and the
/// derivative of the last one.
fn orthonormal_eval(alpha: &[f64], beta: &[f64], count: usize, x: f64) -> (f64, f64, f64) {
    // returns (sum of squares of p̃_0..p̃_{count-1}, p̃_count, d/dx p̃_count)
    let mut p_prev = 0.0;
    let mut dp_prev = 0.0;
    let mut p = 1.0 / beta[0].sqrt();
    let mut dp = 0.0;
    let mut sumsq = 0.0;
    for k in 0..count {
        sumsq += p * p;
        let sb_next = beta[k + 1].sqrt();
        let sb = if k == 0 { 0.0 } else { beta[k].sqrt() };
        let p_next = ((x - alpha[k]) * p - sb * p_prev) / sb_next;
        let dp_next = (p + (x - alpha[k]) * dp - sb * dp_prev) / sb_next;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    (sumsq, p, dp)
}

/// Golub–Welsch Gauss rule with `points` nodes for the Jacobi weight
/// `(1−x)^a (1+x)^b`.
pub fn gauss_jacobi(a: f64, b: f64, points: usize) -> Result<GaussRule> {
    if points == 0 {
        return Err(Error::DegenerateGrid("Gauss rule needs at least one node".into()));
    }
    let (alpha, beta) = jacobi_recurrence(a, b, points + 1)?;
    let mut jacobi = DMatrix::<f64>::zeros(points, points);
    for k in 0..points {
        jacobi[(k, k)] = alpha[k];
        if k + 1 < points {
            let off = beta[k + 1].sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let eig = jacobi.symmetric_eigenvalues();
    let mut nodes: Vec<f64> = eig.iter().copied().collect();
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "Jacobi-matrix eigen-solve produced non-finite nodes (a={a}, b={b}, points={points})"
        )));
    }
    nodes.sort_by(|x, y| x.total_cmp(y));

    let mut weights = Vec::with_capacity(points);
    for x in nodes.iter_mut() {
        for _ in 0..2 {
            let (_, p, dp) = orthonormal_eval(&alpha, &beta, points, *x);
            if dp != 0.0 {
                let step = p / dp;
                if step.abs() < 1e-8 {
                    *x -= step;
                }
            }
        }
        let (sumsq, _, _) = orthonormal_eval(&alpha, &beta, points, *x);
        weights.push(1.0 / sumsq);
    }
    for pair in nodes.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Numerical(format!(
                "Gauss nodes failed to separate near {} (a={a}, b={b}, points={points})",
                pair[0]
            )));
        }
    }
    Ok(GaussRule { nodes, weights })
}

pub fn gauss_legendre(points: usize) -> Result<GaussRule> {
    gauss_jacobi(0.0, 0.0, points)
}

/// Shifted Gegenbauer–Gauss nodes with quadrature and barycentric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub params: BasisParams,
    /// Strictly increasing, inside `(0, 1)`.
    pub nodes: Vec<f64>,
    /// Quadrature weights for `∫₀¹ g(x) (x(1−x))^{λ−1/2} dx`.
    pub quad_weights: Vec<f64>,
    /// Barycentric weights scaled so that `max |w| = 1`.
    pub bary_weights: Vec<f64>,
}

/// Builds the `n + 1` shifted Gegenbauer–Gauss points.
pub fn build_node_set(params: BasisParams) -> Result<NodeSet> {
    check_lambda(params.lambda)?;
    let e = params.lambda - 0.5;
    let rule = gauss_jacobi(e, e, params.n + 1)?;
    // x̂ = (x+1)/2 and x̂(1−x̂) = (1−x²)/4, so weights pick up 2^{−2λ}
    let scale = 2f64.powf(-2.0 * params.lambda);
    let mut nodes: Vec<f64> = rule.nodes.iter().map(|&x| 0.5 * (x + 1.0)).collect();
    // enforce exact mirror symmetry about 1/2
    let len = nodes.len();
    for i in 0..len / 2 {
        let j = len - 1 - i;
        let d = 0.5 * ((0.5 - nodes[i]) + (nodes[j] - 0.5));
        nodes[i] = 0.5 - d;
        nodes[j] = 0.5 + d;
    }
    if len % 2 == 1 {
        nodes[len / 2] = 0.5;
    }
    let mut quad_weights: Vec<f64> = rule.weights.iter().map(|&w| w * scale).collect();
    for i in 0..len / 2 {
        let j = len - 1 - i;
        let avg = 0.5 * (quad_weights[i] + quad_weights[j]);
        quad_weights[i] = avg;
        quad_weights[j] = avg;
    }
    let bary_weights = barycentric_weights(&nodes);
    Ok(NodeSet { params, nodes, quad_weights, bary_weights })
}

/// Barycentric weights `1/Πₖ≠ⱼ(xⱼ − xₖ)`, accumulated in log form and
/// normalized so the largest magnitude is one.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut logs = vec![0.0; n];
    let mut signs = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                let d = nodes[j] - nodes[k];
                logs[j] -= d.abs().ln();
                if d < 0.0 {
                    signs[j] = -signs[j];
                }
            }
        }
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().zip(&signs).map(|(&l, &s)| s * (l - top).exp()).collect()
}

/// Values of all Lagrange cardinal functions at `x` (second barycentric form).
pub fn cardinal_values(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    if let Some(hit) = nodes.iter().position(|&xj| xj == x) {
        let mut out = vec![0.0; nodes.len()];
        out[hit] = 1.0;
        return out;
    }
    let mut out: Vec<f64> = nodes.iter().zip(bary).map(|(&xj, &w)| w / (x - xj)).collect();
    let denom: f64 = out.iter().sum();
    out.iter_mut().for_each(|c| *c /= denom);
    out
}

/// Barycentric interpolation through `(nodes, values)`; exact node hits
/// return the stored value.
pub fn interpolate_with(nodes: &[f64], bary: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &w), &fj) in nodes.iter().zip(bary).zip(values) {
        if xj == x {
            return fj;
        }
        let c = w / (x - xj);
        num += c * fj;
        den += c;
    }
    num / den
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.params.n
    }

    pub fn cardinals(&self, x: f64) -> Vec<f64> {
        cardinal_values(&self.nodes, &self.bary_weights, x)
    }

    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        interpolate_with(&self.nodes, &self.bary_weights, values, x)
    }

    /// `∫₀¹ (x(1−x))^{λ−1/2} dx`.
    pub fn weight_mass(&self) -> f64 {
        let l = self.params.lambda;
        gamma(l + 0.5).powi(2) / gamma(2.0 * l + 1.0)
    }
}

/// Free-function form of [`NodeSet::interpolate`].
pub fn interpolate(ns: &NodeSet, values: &[f64], x: f64) -> f64 {
    ns.interpolate(values, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ln_gamma;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ns(lambda: f64, n: usize) -> NodeSet {
        build_node_set(BasisParams::new(lambda, n).unwrap()).unwrap()
    }

    #[test]
    fn legendre_recurrence() {
        let (a, b) = recurrence_coefficients(&BasisParams::new(0.5, 4).unwrap()).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
        assert_abs_diff_eq!(b[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[1], 1.0 / 3.0, epsilon = 1e-15);
        for k in 1..5 {
            let kf = k as f64;
            assert_abs_diff_eq!(b[k], kf * kf / (4.0 * kf * kf - 1.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn chebyshev_second_kind_recurrence() {
        let (a, b) = recurrence_coefficients(&BasisParams::new(1.0, 8).unwrap()).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
        assert_abs_diff_eq!(b[0], std::f64::consts::FRAC_PI_2, epsilon = 1e-14);
        for &bk in &b[1..] {
            assert_abs_diff_eq!(bk, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn chebyshev_first_kind_limit() {
        // λ = 0 is admissible and should give β₁ = 1/2, βₖ = 1/4 afterwards
        let (_, b) = recurrence_coefficients(&BasisParams::new(0.0, 5).unwrap()).unwrap();
        assert_abs_diff_eq!(b[1], 0.5, epsilon = 1e-15);
        for &bk in &b[2..] {
            assert_abs_diff_eq!(bk, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_lambda_outside_window() {
        assert!(BasisParams::new(-0.5, 3).is_err());
        assert!(BasisParams::new(2.5, 3).is_err());
        assert!(BasisParams::new(f64::NAN, 3).is_err());
        // λ* neighbourhood is only a warning
        assert!(BasisParams::new(-0.13, 3).is_ok());
        assert!(near_lambda_star(-0.13));
    }

    #[test]
    fn single_node_is_midpoint() {
        let s = ns(0.5, 0);
        assert_eq!(s.nodes, vec![0.5]);
        assert_abs_diff_eq!(s.quad_weights[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_legendre() {
        let s = ns(0.5, 1);
        let r = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(s.nodes[0], (1.0 - r) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.nodes[1], (1.0 + r) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn five_point_legendre_integrates_x9() {
        let s = ns(0.5, 4);
        let q: f64 = s.nodes.iter().zip(&s.quad_weights).map(|(x, w)| w * x.powi(9)).sum();
        assert_abs_diff_eq!(q, 0.1, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_weight_mass() {
        for &l in &[0.1, 0.5, 1.0, 1.5, 2.0, -0.3] {
            for n in [0, 3, 10, 20] {
                let s = ns(l, n);
                let sum: f64 = s.quad_weights.iter().sum();
                let mass = s.weight_mass();
                assert!(((sum - mass) / mass).abs() < 1e-13, "λ={l} n={n}");
            }
        }
    }

    #[test]
    fn gauss_exactness_against_beta_moments() {
        // ∫₀¹ x^k (x(1−x))^{λ−½} dx = B(k+λ+½, λ+½)
        for &l in &[0.1, 0.5, 1.0, 1.5] {
            for n in 0..=12 {
                let s = ns(l, n);
                for k in 0..=(2 * n + 1) {
                    let kf = k as f64;
                    let exact = (ln_gamma(kf + l + 0.5) + ln_gamma(l + 0.5)
                        - ln_gamma(kf + 2.0 * l + 1.0))
                    .exp();
                    let q: f64 =
                        s.nodes.iter().zip(&s.quad_weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                    assert!(((q - exact) / exact).abs() < 1e-12, "λ={l} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn bary_weights_alternate_and_are_normalized() {
        for n in [1, 5, 30, 60] {
            let s = ns(0.5, n);
            let max = s.bary_weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            assert_abs_diff_eq!(max, 1.0, epsilon = 1e-15);
            for pair in s.bary_weights.windows(2) {
                assert!(pair[0] * pair[1] < 0.0);
            }
        }
    }

    #[test]
    fn nodes_inside_and_symmetric() {
        for &l in &[-0.4, 0.0, 0.5, 1.7] {
            for n in [1, 2, 7, 16, 31] {
                let s = ns(l, n);
                assert!(s.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
                for pair in s.nodes.windows(2) {
                    assert!(pair[0] < pair[1]);
                }
                for i in 0..=n {
                    assert!((s.nodes[i] + s.nodes[n - i] - 1.0).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_constants_and_identity() {
        let s = ns(0.7, 6);
        let c = vec![2.5; 7];
        for &x in &[0.0, 0.3, 0.99, 1.0] {
            assert_abs_diff_eq!(s.interpolate(&c, x), 2.5, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(s.interpolate(&s.nodes, 0.3), 0.3, epsilon = 1e-14);
    }

    #[test]
    fn interpolation_exact_hit_returns_stored_value() {
        let s = ns(0.5, 4);
        let vals = vec![1.0, -3.0, 7.25, 0.5, 9.0];
        assert_eq!(s.interpolate(&vals, s.nodes[2]), 7.25);
    }

    #[test]
    fn interpolation_of_exp_matches_brute_force_lagrange() {
        let s = ns(0.5, 6);
        let vals: Vec<f64> = s.nodes.iter().map(|x| x.exp()).collect();
        // brute-force Lagrange sum
        let x = 0.5;
        let mut brute = 0.0;
        for j in 0..s.nodes.len() {
            let mut l = 1.0;
            for k in 0..s.nodes.len() {
                if k != j {
                    l *= (x - s.nodes[k]) / (s.nodes[j] - s.nodes[k]);
                }
            }
            brute += l * vals[j];
        }
        let got = interpolate(&s, &vals, x);
        assert_abs_diff_eq!(got, brute, epsilon = 1e-14);
        assert_abs_diff_eq!(got, 0.5f64.exp(), epsilon = 1e-8);
    }

    #[test]
    fn gauss_jacobi_singular_weight_moments() {
        // ∫₋₁¹ (1−x)^a x^k dx checked through ∫₀¹ (1−s)^{a} s^k ds = B(a+1, k+1)
        for &a in &[-0.75, -0.5, -0.1] {
            let rule = gauss_jacobi(a, 0.0, 8).unwrap();
            let scale = 2f64.powf(-(a + 1.0));
            for k in 0..16 {
                let q: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * scale * (0.5 * (x + 1.0)).powi(k))
                    .sum();
                let kf = k as f64;
                let exact =
                    (ln_gamma(a + 1.0) + ln_gamma(kf + 1.0) - ln_gamma(a + kf + 2.0)).exp();
                assert!(((q - exact) / exact).abs() < 1e-13, "a={a} k={k}");
            }
        }
    }

    proptest! {
        #[test]
        fn interpolation_projector(
            n in 1usize..14,
            lambda in prop::sample::select(vec![0.1, 0.5, 1.0, 1.5]),
            coeffs in prop::collection::vec(-2.0f64..2.0, 14),
            x in 0.0f64..=1.0,
        ) {
            let s = ns(lambda, n);
            let p = |t: f64| coeffs[..=n].iter().rev().fold(0.0, |acc, c| acc * t + c);
            let vals: Vec<f64> = s.nodes.iter().map(|&t| p(t)).collect();
            prop_assert!((s.interpolate(&vals, x) - p(x)).abs() < 1e-12);
        }
    }
}
