//! Fully discrete form of the transformed equation.
//!
//! The unknown is `v = u_xt` at the tensor grid. The solution is recovered as
//! `u = φ(x) − φ(0) + ψ₁(t) + ∫₀ᵗ∫₀ˣ v`, which builds in the initial condition
//! and the left boundary; the right boundary becomes the linear constraint
//! `C v = R̂`, enforced with a Lagrange multiplier `μ ∈ ℝ^{m+1}`.
//!
//! Unknowns are ordered space-major: `index(i, j) = i (m+1) + j` with `i` the
//! spatial and `j` the temporal node, so every tensor operator reads
//! `A_space ⊗ B_time`.

use nalgebra::{DMatrix, DVector};

use crate::basis::NodeSet;
use crate::error::{Error, Result};
use crate::operators::{interpolation_matrix, OperatorBundle};
use crate::problems::ProblemSpec;

/// Space-major ordering of the `(n+1)(m+1)` grid values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOrdering {
    pub n: usize,
    pub m: usize,
}

impl GridOrdering {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.m + 1) + j
    }

    pub fn len(&self) -> usize {
        (self.n + 1) * (self.m + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Reshapes an ordered vector into an `(n+1) × (m+1)` field.
    pub fn to_field(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n + 1, self.m + 1, |i, j| v[self.index(i, j)])
    }

    pub fn from_field(&self, g: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |k, _| g[(k / (self.m + 1), k % (self.m + 1))])
    }
}

/// Switch for the Burgers-type product term. `Off` drops `N(v)` entirely,
/// leaving an affine system; used for verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    #[default]
    Burgers,
    Off,
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub ordering: GridOrdering,
    pub alpha: f64,
    /// `Q_x ⊗ B^{1−α} − D_x ⊗ I`.
    pub psi: DMatrix<f64>,
    /// `I ⊗ Q_t`: time integration `∫₀ᵗ v`.
    pub k_tn: DMatrix<f64>,
    /// `Q_x ⊗ Q_t`.
    pub q_tx: DMatrix<f64>,
    /// `φ(xᵢ) − φ(0) + ψ₁(tⱼ)`.
    pub s: DVector<f64>,
    /// `(D_x φ)ᵢ` repeated over time.
    pub phi_prime: DVector<f64>,
    /// `f(xᵢ, tⱼ) − (A^α ψ₁)ⱼ`.
    pub f: DVector<f64>,
    /// `P_x ⊗ Q_t`.
    pub c: DMatrix<f64>,
    /// `ψ₂(tⱼ) − ψ₁(tⱼ) − φ(1) + φ(0)`.
    pub rhat: DVector<f64>,
    pub nonlinearity: Nonlinearity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub ordering: GridOrdering,
    pub v: DVector<f64>,
    pub mu: DVector<f64>,
    /// Reconstructed `u` at the grid.
    pub u: DVector<f64>,
    /// ∞-norm of the non-constraint blocks of the solver residual.
    pub residual_norm: f64,
    /// `‖C v − R̂‖∞`.
    pub constraint_norm: f64,
}

fn sample(ns: &NodeSet, f: impl Fn(f64) -> f64) -> DVector<f64> {
    DVector::from_iterator(ns.len(), ns.nodes.iter().map(|&x| f(x)))
}

/// Builds every vector and matrix of the discrete system.
pub fn assemble(
    spec: &ProblemSpec,
    ops: &OperatorBundle,
    ord: GridOrdering,
) -> Result<DiscreteSystem> {
    let base = &ops.base;
    if ops.n() != ord.n || ops.m() != ord.m {
        return Err(Error::Shape(format!(
            "operators are built for (n, m) = ({}, {}) but the ordering is ({}, {})",
            ops.n(),
            ops.m(),
            ord.n,
            ord.m
        )));
    }
    if ops.alpha != spec.alpha {
        return Err(Error::Shape(format!(
            "operators are built for α = {} but the problem has α = {}",
            ops.alpha, spec.alpha
        )));
    }
    let (nx, nt) = (ord.n + 1, ord.m + 1);
    let ix = DMatrix::<f64>::identity(nx, nx);
    let it = DMatrix::<f64>::identity(nt, nt);

    let q_x = &base.q_x.entries;
    let d_x = &base.d_x.entries;
    let q_t = &base.q_t.entries;
    let p_x = DMatrix::from_row_slice(1, nx, base.p_x.entries.as_slice());

    let psi = q_x.kronecker(&ops.frac_int.entries) - d_x.kronecker(&it);
    let k_tn = ix.kronecker(q_t);
    let q_tx = q_x.kronecker(q_t);
    let c = p_x.kronecker(q_t);

    let phi_nodes = sample(&base.ns_x, |x| (spec.phi)(x));
    let psi1_nodes = sample(&base.ns_t, |t| (spec.psi1)(t));
    let psi2_nodes = sample(&base.ns_t, |t| (spec.psi2)(t));
    let (phi0, phi1) = ((spec.phi)(0.0), (spec.phi)(1.0));
    let dphi = d_x * &phi_nodes;
    let caputo_psi1 = &ops.caputo.entries * &psi1_nodes;

    let len = ord.len();
    let mut s = DVector::zeros(len);
    let mut phi_prime = DVector::zeros(len);
    let mut f = DVector::zeros(len);
    for (i, &xi) in base.ns_x.nodes.iter().enumerate() {
        for (j, &tj) in base.ns_t.nodes.iter().enumerate() {
            let k = ord.index(i, j);
            s[k] = phi_nodes[i] - phi0 + psi1_nodes[j];
            phi_prime[k] = dphi[i];
            f[k] = (spec.f)(xi, tj) - caputo_psi1[j];
        }
    }
    let rhat = DVector::from_fn(nt, |j, _| psi2_nodes[j] - psi1_nodes[j] - phi1 + phi0);

    Ok(DiscreteSystem {
        ordering: ord,
        alpha: spec.alpha,
        psi,
        k_tn,
        q_tx,
        s,
        phi_prime,
        f,
        c,
        rhat,
        nonlinearity: Nonlinearity::Burgers,
    })
}

impl DiscreteSystem {
    pub fn unknowns(&self) -> usize {
        self.ordering.len()
    }

    pub fn multipliers(&self) -> usize {
        self.ordering.m + 1
    }

    pub fn kkt_size(&self) -> usize {
        self.unknowns() + self.multipliers()
    }

    /// Returns a copy with the product term switched off.
    pub fn linearized(&self) -> Self {
        Self { nonlinearity: Nonlinearity::Off, ..self.clone() }
    }

    /// `Y(v) = K v + φ'`.
    pub fn y(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.k_tn * v + &self.phi_prime
    }

    /// `W(v) = 1 + S + Q_tx v`.
    pub fn w(&self, v: &DVector<f64>) -> DVector<f64> {
        (&self.q_tx * v + &self.s).add_scalar(1.0)
    }

    /// Collocation residual `Ψ v + N(v) − F + Cᵀ μ`.
    pub fn collocation_residual(&self, v: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
        let mut r = &self.psi * v - &self.f + self.c.tr_mul(mu);
        if self.nonlinearity == Nonlinearity::Burgers {
            r += self.y(v).component_mul(&self.w(v));
        }
        r
    }

    pub fn constraint_residual(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.c * v - &self.rhat
    }

    fn check_shapes(&self, v: &DVector<f64>, mu: Option<&DVector<f64>>) -> Result<()> {
        if v.len() != self.unknowns() {
            return Err(Error::Shape(format!("v has {} entries, expected {}", v.len(), self.unknowns())));
        }
        if let Some(mu) = mu {
            if mu.len() != self.multipliers() {
                return Err(Error::Shape(format!(
                    "μ has {} entries, expected {}",
                    mu.len(),
                    self.multipliers()
                )));
            }
        }
        Ok(())
    }
}

/// Stacked KKT residual `[Ψv + N(v) − F + Cᵀμ ; C v − R̂]`.
pub fn residual(sys: &DiscreteSystem, v: &DVector<f64>, mu: &DVector<f64>) -> Result<DVector<f64>> {
    sys.check_shapes(v, Some(mu))?;
    let top = sys.collocation_residual(v, mu);
    let bottom = sys.constraint_residual(v);
    let mut out = DVector::zeros(sys.kkt_size());
    out.rows_mut(0, sys.unknowns()).copy_from(&top);
    out.rows_mut(sys.unknowns(), sys.multipliers()).copy_from(&bottom);
    Ok(out)
}

/// Top-left block `Ψ + diag(W) K + diag(Y) Q_tx`.
pub fn collocation_jacobian(sys: &DiscreteSystem, v: &DVector<f64>) -> DMatrix<f64> {
    let mut j = sys.psi.clone();
    if sys.nonlinearity == Nonlinearity::Burgers {
        let w = sys.w(v);
        let y = sys.y(v);
        for r in 0..sys.unknowns() {
            let (wr, yr) = (w[r], y[r]);
            for c in 0..sys.unknowns() {
                j[(r, c)] += wr * sys.k_tn[(r, c)] + yr * sys.q_tx[(r, c)];
            }
        }
    }
    j
}

/// Full KKT Jacobian `[[J(v), Cᵀ], [C, 0]]`.
pub fn jacobian(sys: &DiscreteSystem, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    sys.check_shapes(v, None)?;
    let (nu, nm) = (sys.unknowns(), sys.multipliers());
    let mut out = DMatrix::zeros(nu + nm, nu + nm);
    out.view_mut((0, 0), (nu, nu)).copy_from(&collocation_jacobian(sys, v));
    out.view_mut((0, nu), (nu, nm)).copy_from(&sys.c.transpose());
    out.view_mut((nu, 0), (nm, nu)).copy_from(&sys.c);
    Ok(out)
}

/// `u = S + Q_tx v` at the grid.
pub fn reconstruct(sys: &DiscreteSystem, v: &DVector<f64>) -> Result<DVector<f64>> {
    sys.check_shapes(v, None)?;
    Ok(&sys.s + &sys.q_tx * v)
}

/// `(u(0, tⱼ), u(1, tⱼ))` from the integral representation of `u`, which
/// reproduces the boundary data exactly once the constraint holds.
pub fn boundary_trace(
    sys: &DiscreteSystem,
    spec: &ProblemSpec,
    ns_t: &NodeSet,
    v: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    sys.check_shapes(v, None)?;
    let psi1 = sample(ns_t, |t| (spec.psi1)(t));
    let (phi0, phi1) = ((spec.phi)(0.0), (spec.phi)(1.0));
    let left = psi1.clone();
    let right = (&sys.c * v).add_scalar(phi1 - phi0) + psi1;
    Ok((left, right))
}

/// Largest deviation of [`boundary_trace`] from `ψ₁`, `ψ₂` at the time nodes.
pub fn boundary_residual(
    sys: &DiscreteSystem,
    spec: &ProblemSpec,
    ns_t: &NodeSet,
    v: &DVector<f64>,
) -> Result<f64> {
    let (left, right) = boundary_trace(sys, spec, ns_t, v)?;
    let mut worst: f64 = 0.0;
    for (j, &t) in ns_t.nodes.iter().enumerate() {
        worst = worst.max((left[j] - (spec.psi1)(t)).abs());
        worst = worst.max((right[j] - (spec.psi2)(t)).abs());
    }
    Ok(worst)
}

/// Tensor-product barycentric interpolation of the nodal `u` onto `xs × ts`.
/// Row `a`, column `b` of the result holds `u(xs[a], ts[b])`.
pub fn evaluate_on_mesh(
    sol: &DiscreteSolution,
    ns_x: &NodeSet,
    ns_t: &NodeSet,
    xs: &[f64],
    ts: &[f64],
) -> Result<DMatrix<f64>> {
    evaluate_field(&sol.ordering.to_field(&sol.u), ns_x, ns_t, xs, ts)
}

/// As [`evaluate_on_mesh`] for an `(n+1) × (m+1)` nodal field.
pub fn evaluate_field(
    field: &DMatrix<f64>,
    ns_x: &NodeSet,
    ns_t: &NodeSet,
    xs: &[f64],
    ts: &[f64],
) -> Result<DMatrix<f64>> {
    if let Some(&bad) = xs.iter().chain(ts).find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain { value: bad });
    }
    if field.shape() != (ns_x.len(), ns_t.len()) {
        return Err(Error::Shape(format!(
            "field is {:?}, node sets need ({}, {})",
            field.shape(),
            ns_x.len(),
            ns_t.len()
        )));
    }
    let lx = interpolation_matrix(ns_x, xs);
    let lt = interpolation_matrix(ns_t, ts);
    Ok(lx * field * lt.transpose())
}

/// Mean absolute difference.
pub fn compute_aae(approx: &[f64], exact: &[f64]) -> Result<f64> {
    if approx.is_empty() {
        return Err(Error::Empty("no points to average over".into()));
    }
    if approx.len() != exact.len() {
        return Err(Error::Shape(format!(
            "{} approximate values vs {} exact values",
            approx.len(),
            exact.len()
        )));
    }
    let total: f64 = approx.iter().zip(exact).map(|(a, e)| (a - e).abs()).sum();
    Ok(total / approx.len() as f64)
}

pub fn max_abs_error(approx: &[f64], exact: &[f64]) -> f64 {
    approx.iter().zip(exact).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max)
}
