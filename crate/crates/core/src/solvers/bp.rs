//! Basis pursuit: exact ℓ1 minimization through the simplex, and the
//! ball-constrained variant through ADMM.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::simplex::{solve_lp, LpProblem, LpStatus};
use crate::error::{Error, Result};
use crate::matrix::{norm2, norm_inf, DenseMatrix};
use crate::sparse::SparseVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpResult {
    pub xhat: Vec<f64>,
    pub status: BpStatus,
    /// `‖A xhat - y‖∞` for the exact solver, `‖A xhat - y‖2` for the denoiser.
    pub residual: f64,
    pub iterations: usize,
}

impl BpResult {
    pub fn l1(&self) -> f64 {
        self.xhat.iter().map(|x| x.abs()).sum()
    }
}

fn check_rhs(a: &DenseMatrix, y: &[f64]) -> Result<()> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {} but A has {} rows",
            y.len(),
            a.rows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("non-finite measurement"));
    }
    Ok(())
}

/// The basis pursuit LP `min 1^T (p + q)  s.t.  A p - A q = y`, variables ordered
/// `[p_1..p_n, q_1..q_n]`.
pub fn basis_pursuit_lp(a: &DenseMatrix, y: &[f64]) -> LpProblem {
    let n = a.cols();
    let mut p = LpProblem::new(vec![1.0; 2 * n]);
    for i in 0..a.rows() {
        let mut row = a.row(i).to_vec();
        row.extend(a.row(i).iter().map(|v| -v));
        p.add_row(row, y[i]);
    }
    p
}

/// `min ‖z‖1  s.t.  A z = y`.
pub fn basis_pursuit_exact(a: &DenseMatrix, y: &[f64]) -> Result<BpResult> {
    check_rhs(a, y)?;
    let n = a.cols();
    let sol = solve_lp(&basis_pursuit_lp(a, y))?;
    match sol.status {
        LpStatus::Optimal => {
            let xhat: Vec<f64> = (0..n).map(|j| sol.x[j] - sol.x[n + j]).collect();
            let ax = a.matvec(&xhat);
            let residual = norm_inf(&ax.iter().zip(y).map(|(u, v)| u - v).collect::<Vec<_>>());
            Ok(BpResult {
                xhat,
                status: BpStatus::Optimal,
                residual,
                iterations: sol.iterations,
            })
        }
        LpStatus::Infeasible => Ok(BpResult {
            xhat: vec![0.0; n],
            status: BpStatus::Infeasible,
            residual: f64::INFINITY,
            iterations: sol.iterations,
        }),
        // the objective is bounded below by zero
        LpStatus::Unbounded => unreachable!("basis pursuit LP cannot be unbounded"),
    }
}

pub const ADMM_TOL: f64 = 1e-8;
pub const ADMM_MAX_ITER: usize = 100_000;
/// Iterations during which the penalty adapts to the residual balance.
const ADAPT_ITERS: usize = 1_000;

fn soft_threshold(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

/// `min ‖z‖1  s.t.  ‖A z - y‖2 ≤ eps` by ADMM on the split `x1 = z`, `x2 = A z`:
/// soft-thresholding on `x1`, projection of `x2` onto the ball `B(y, eps)`, and a
/// `z`-update through a cached Cholesky factor of `I + A^T A`.
pub fn basis_pursuit_denoise(a: &DenseMatrix, y: &[f64], eps: f64) -> Result<BpResult> {
    check_rhs(a, y)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::arg(format!("eps must be finite and nonnegative, got {eps}")));
    }
    let (m, n) = (a.rows(), a.cols());
    if eps >= norm2(y) {
        return Ok(BpResult {
            xhat: vec![0.0; n],
            status: BpStatus::Optimal,
            residual: norm2(y),
            iterations: 0,
        });
    }

    let am = a.to_nalgebra();
    let gram = DMatrix::<f64>::identity(n, n) + am.transpose() * &am;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::arg("I + A^T A is not positive definite"))?;
    let yv = DVector::from_column_slice(y);
    let scale = 1.0 + norm_inf(y);

    let mut rho = 1.0;
    let mut z = DVector::<f64>::zeros(n);
    let mut x1 = DVector::<f64>::zeros(n);
    let mut x2 = DVector::<f64>::zeros(m);
    let mut u1 = DVector::<f64>::zeros(n);
    let mut u2 = DVector::<f64>::zeros(m);

    for it in 1..=ADMM_MAX_ITER {
        let rhs = (&x1 - &u1) + am.transpose() * (&x2 - &u2);
        z = chol.solve(&rhs);
        let az = &am * &z;

        let x1_prev = x1.clone();
        let x2_prev = x2.clone();
        x1 = (&z + &u1).map(|v| soft_threshold(v, 1.0 / rho));
        let w = &az + &u2 - &yv;
        let wn = w.norm();
        x2 = if wn <= eps { &yv + w } else { &yv + w * (eps / wn) };

        let r1 = &z - &x1;
        let r2 = &az - &x2;
        u1 += &r1;
        u2 += &r2;

        let primal = (r1.norm_squared() + r2.norm_squared()).sqrt();
        let dx1 = &x1 - &x1_prev;
        let dx2 = &x2 - &x2_prev;
        let dual = rho * (&dx1 + am.transpose() * &dx2).norm();
        let step = (dx1.norm_squared() + dx2.norm_squared()).sqrt();
        if primal < ADMM_TOL * scale && dual < ADMM_TOL * scale && step < ADMM_TOL * scale {
            let xhat: Vec<f64> = z.iter().copied().collect();
            let residual = (&az - &yv).norm();
            return Ok(BpResult {
                xhat,
                status: BpStatus::Optimal,
                residual,
                iterations: it,
            });
        }

        // residual balancing; the factorization does not depend on rho. Rho is
        // frozen afterwards, since unbounded adaptation can prevent convergence.
        if it % 10 == 0 && it <= ADAPT_ITERS {
            let factor = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u1 /= factor;
                u2 /= factor;
            }
        }
    }
    let residual = (&am * &z - &yv).norm();
    Err(Error::Convergence {
        iterations: ADMM_MAX_ITER,
        residual,
        last_iterate: z.iter().copied().collect(),
    })
}

/// True iff exact basis pursuit on `y = A x` returns an optimum within
/// `tol * (1 + ‖x‖∞)` of `x` in the sup norm.
pub fn exact_recovery(a: &DenseMatrix, x: &SparseVector, tol: f64) -> Result<bool> {
    if x.dim() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "signal has dimension {} but A has {} columns",
            x.dim(),
            a.cols()
        )));
    }
    let xd = x.to_dense();
    let res = basis_pursuit_exact(a, &a.matvec(&xd))?;
    if res.status != BpStatus::Optimal {
        return Ok(false);
    }
    let err = res
        .xhat
        .iter()
        .zip(&xd)
        .fold(0.0_f64, |acc, (u, v)| acc.max((u - v).abs()));
    Ok(err <= tol * (1.0 + norm_inf(&xd)))
}
