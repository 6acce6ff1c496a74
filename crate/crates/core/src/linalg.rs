//! Dense LU with partial pivoting and a 1-norm condition estimate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition estimates above this are flagged on the solve result.
pub const ILL_CONDITIONED: f64 = 1e14;

/// `P A = L U`, stored packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
    norm1: f64,
}

impl Lu {
    pub fn factor(mut a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Shape(format!("LU needs a square matrix, got {:?}", a.shape())));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("matrix has non-finite entries".into()));
        }
        let norm1 = (0..n).map(|c| a.column(c).lp_norm(1)).fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (offset, pivot) = a
                .view((k, k), (n - k, 1))
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
            if pivot == 0.0 {
                return Err(Error::Singular { column: k });
            }
            let p = k + offset;
            if p != k {
                a.swap_rows(k, p);
                perm.swap(k, p);
            }
            let inv = 1.0 / a[(k, k)];
            for i in k + 1..n {
                a[(i, k)] *= inv;
            }
            for j in k + 1..n {
                let ukj = a[(k, j)];
                if ukj != 0.0 {
                    for i in k + 1..n {
                        let lik = a[(i, k)];
                        a[(i, j)] -= lik * ukj;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for j in 0..n {
            let xj = x[j];
            for i in j + 1..n {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            for i in 0..j {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        // Uᵀ y = b, then Lᵀ z = y, then x = Pᵀ z
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[(k, i)] * y[k];
            }
            y[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[(k, i)] * y[k];
            }
            y[i] = s;
        }
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Hager–Higham estimate of `‖A‖₁ ‖A⁻¹‖₁`.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.lp_norm(1);
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |b, (i, &v)| {
                if v.abs() > b.1 {
                    (i, v.abs())
                } else {
                    b
                }
            });
            if zmax <= z.dot(&x) || j == last_j {
                break;
            }
            x.fill(0.0);
            x[j] = 1.0;
            last_j = j;
        }
        // alternating-sign probe guards against underestimates
        let probe = DVector::from_fn(n, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        });
        let alt = 2.0 * self.solve(&probe).lp_norm(1) / (3.0 * n as f64);
        self.norm1 * est.max(alt)
    }
}

/// Step and diagnostics from [`kkt_linear_solve`].
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub solution: DVector<f64>,
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
}

/// Solves the dense KKT system `J_aug x = rhs`.
pub fn kkt_linear_solve(j_aug: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<LinearSolve> {
    if j_aug.nrows() != rhs.len() {
        return Err(Error::Shape(format!(
            "matrix has {} rows but right-hand side has {} entries",
            j_aug.nrows(),
            rhs.len()
        )));
    }
    let lu = Lu::factor(j_aug.clone())?;
    let solution = lu.solve(rhs);
    let condition_estimate = lu.condition_estimate();
    let ill_conditioned = condition_estimate > ILL_CONDITIONED;
    if ill_conditioned {
        log::warn!("KKT matrix condition estimate {condition_estimate:e}");
    }
    Ok(LinearSolve { solution, condition_estimate, ill_conditioned })
}
