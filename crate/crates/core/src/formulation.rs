//! Nonlinear systems whose roots define the discrete solution.
//!
//! Both formulations keep the right-boundary constraint `C v = R̂` exact
//! through the multiplier `μ`; they differ in how the `(n+1)(m+1)` collocation
//! equations `R(v) = Ψv + N(v) − F` are treated.
//!
//! * [`Formulation::Kkt`] solves `[R(v) + Cᵀμ ; C v − R̂] = 0`. The multiplier
//!   enters the collocation equations directly, which spends one spatial
//!   degree of freedom per time node on absorbing `Cᵀμ`.
//! * [`Formulation::LeastSquares`] solves `min ½‖R(v)‖²` subject to
//!   `C v = R̂`. Its first-order conditions are written in augmented form
//!   with the residual `s = R(v)` as an extra unknown,
//!
//!   ```text
//!   Jᵀ s + Cᵀ μ = 0
//!   C v − R̂    = 0
//!   R(v) − s   = 0
//!   ```
//!
//!   so the Newton matrix `[[H(s), Cᵀ, Jᵀ], [C, 0, 0], [J, 0, −I]]` has the
//!   conditioning of `J` rather than of `JᵀJ`. Here `J = ∂R/∂v` and
//!   `H(s) = Σₖ sₖ ∇²Rₖ = Kᵀ diag(s) Q_tx + Q_txᵀ diag(s) K`.
//!
//! The state vector is `[v ; μ]` for `Kkt` and `[v ; μ ; s]` for
//! `LeastSquares`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::{collocation_jacobian, jacobian, residual, DiscreteSystem, Nonlinearity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    #[default]
    LeastSquares,
    Kkt,
}

impl Formulation {
    pub fn state_size(self, sys: &DiscreteSystem) -> usize {
        match self {
            Formulation::Kkt => sys.kkt_size(),
            Formulation::LeastSquares => sys.kkt_size() + sys.unknowns(),
        }
    }

    /// Packs `(v, μ)` into a state, completing any auxiliary block consistently.
    pub fn initial_state(self, sys: &DiscreteSystem, v: &DVector<f64>, mu: &DVector<f64>) -> Result<DVector<f64>> {
        let (nu, nm) = (sys.unknowns(), sys.multipliers());
        if v.len() != nu || mu.len() != nm {
            return Err(Error::Shape(format!(
                "initial guess sizes ({}, {}) do not match the system ({nu}, {nm})",
                v.len(),
                mu.len()
            )));
        }
        let mut x = DVector::zeros(self.state_size(sys));
        x.rows_mut(0, nu).copy_from(v);
        x.rows_mut(nu, nm).copy_from(mu);
        if self == Formulation::LeastSquares {
            let r = sys.collocation_residual(v, &DVector::zeros(nm));
            x.rows_mut(nu + nm, nu).copy_from(&r);
        }
        Ok(x)
    }

    /// Splits a state into `(v, μ)`.
    pub fn split(self, sys: &DiscreteSystem, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (nu, nm) = (sys.unknowns(), sys.multipliers());
        (x.rows(0, nu).into_owned(), x.rows(nu, nm).into_owned())
    }

    fn check(self, sys: &DiscreteSystem, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.state_size(sys) {
            return Err(Error::Shape(format!(
                "state has {} entries, expected {}",
                x.len(),
                self.state_size(sys)
            )));
        }
        Ok(())
    }

    /// Root-finding residual `G(x)`. The constraint block always occupies
    /// rows `N .. N + m + 1`.
    pub fn residual(self, sys: &DiscreteSystem, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(sys, x)?;
        let (v, mu) = self.split(sys, x);
        match self {
            Formulation::Kkt => residual(sys, &v, &mu),
            Formulation::LeastSquares => {
                let (nu, nm) = (sys.unknowns(), sys.multipliers());
                let s = x.rows(nu + nm, nu);
                let jac = collocation_jacobian(sys, &v);
                let r = sys.collocation_residual(&v, &DVector::zeros(nm));
                let mut g = DVector::zeros(x.len());
                g.rows_mut(0, nu).copy_from(&(jac.tr_mul(&s) + sys.c.tr_mul(&mu)));
                g.rows_mut(nu, nm).copy_from(&sys.constraint_residual(&v));
                g.rows_mut(nu + nm, nu).copy_from(&(r - s));
                Ok(g)
            }
        }
    }

    /// Exact Jacobian of [`Formulation::residual`].
    pub fn jacobian(self, sys: &DiscreteSystem, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(sys, x)?;
        let (v, _) = self.split(sys, x);
        match self {
            Formulation::Kkt => jacobian(sys, &v),
            Formulation::LeastSquares => {
                let (nu, nm) = (sys.unknowns(), sys.multipliers());
                let s = x.rows(nu + nm, nu).into_owned();
                let jac = collocation_jacobian(sys, &v);
                let mut out = DMatrix::zeros(x.len(), x.len());
                if sys.nonlinearity == Nonlinearity::Burgers {
                    let ks = scale_rows(&sys.k_tn, &s);
                    let h = sys.q_tx.tr_mul(&ks);
                    out.view_mut((0, 0), (nu, nu)).copy_from(&(&h + h.transpose()));
                }
                out.view_mut((0, nu), (nu, nm)).copy_from(&sys.c.transpose());
                out.view_mut((0, nu + nm), (nu, nu)).copy_from(&jac.transpose());
                out.view_mut((nu, 0), (nm, nu)).copy_from(&sys.c);
                out.view_mut((nu + nm, 0), (nu, nu)).copy_from(&jac);
                for k in 0..nu {
                    out[(nu + nm + k, nu + nm + k)] = -1.0;
                }
                Ok(out)
            }
        }
    }

    /// `(‖non-constraint blocks‖∞, ‖constraint block‖∞)` of a residual.
    pub fn block_norms(self, sys: &DiscreteSystem, g: &DVector<f64>) -> (f64, f64) {
        let (nu, nm) = (sys.unknowns(), sys.multipliers());
        let constraint = g.rows(nu, nm).amax();
        let rest = g.rows(0, nu).amax().max(if g.len() > nu + nm { g.rows(nu + nm, g.len() - nu - nm).amax() } else { 0.0 });
        (rest, constraint)
    }
}

fn scale_rows(a: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for (r, &dr) in d.iter().enumerate() {
        out.row_mut(r).scale_mut(dr);
    }
    out
}
