//! Iteratively reweighted solver for the ℓ2,1 self-representation baseline
//!
//! ```text
//! min_A Σ_n ‖x_n − X a_n‖₂ + γ‖A‖_{2,1}
//! ```
//!
//! Each outer iteration fixes the weights `U` (per sample) and `V` (per row),
//! solves every column `a_n = U_nn(U_nn XᵀX + γV)⁻¹Xᵀx_n`, then recomputes the
//! weights from the smoothed residual and row norms.
//!
//! Two interchangeable column solvers are provided. The authorial one factors
//! the `N×N` system afresh for every sample. The accelerated one pushes the
//! inverse through to the `L×L` side,
//! `a_n = U_nn(XV⁻¹)ᵀ(U_nn·X(XV⁻¹)ᵀ + γI_L)⁻¹x_n`, sharing `X(XV⁻¹)ᵀ` across
//! all samples of an iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::clock::{Clock, NoClock, PhaseTimes};
use crate::error::Error;
use crate::numkit::{dot, scale_cols_inv, Cholesky, DiagonalWeights, Matrix};
use crate::outcome::{IterRecord, OpCounts, SolveOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RrssPath {
    /// Per-sample `N×N` factorization.
    Authorial,
    /// Shared `L×L` Gram with per-sample `L×L` factorization.
    Accelerated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RrssConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub max_outer_iters: usize,
    /// Relative change of the smoothed objective that ends the loop.
    pub obj_tol: f64,
    pub path: RrssPath,
}

impl RrssConfig {
    pub fn new(gamma: f64, path: RrssPath) -> Self {
        Self { gamma, epsilon: 1e-10, max_outer_iters: 50, obj_tol: 1e-8, path }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig("gamma must be positive and finite"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive"));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig("max_outer_iters must be at least 1"));
        }
        if !(self.obj_tol >= 0.0) {
            return Err(Error::InvalidConfig("obj_tol must be non-negative"));
        }
        Ok(())
    }
}

/// Authorial column solve, computing `XᵀX` itself.
pub fn rrss_a_dense(
    x: &Matrix,
    u_nn: f64,
    v: &DiagonalWeights,
    x_n: &[f64],
    gamma: f64,
) -> Result<Vec<f64>, Error> {
    let gram = x.gram();
    let rhs = x.t_matmul(&Matrix::from_col_major(x_n.len(), 1, x_n.to_vec())?)?;
    rrss_a_dense_with_gram(&gram, u_nn, v, rhs.as_slice(), gamma)
}

/// Authorial column solve given `XᵀX` and `Xᵀx_n`.
///
/// Builds and factors `U_nn·XᵀX + γV` on every call.
pub fn rrss_a_dense_with_gram(
    gram: &Matrix,
    u_nn: f64,
    v: &DiagonalWeights,
    xt_xn: &[f64],
    gamma: f64,
) -> Result<Vec<f64>, Error> {
    let n = gram.rows();
    if v.len() != n || xt_xn.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len().min(xt_xn.len()) });
    }
    let mut m = gram.scale(u_nn);
    for (i, &vi) in v.values().iter().enumerate() {
        m[(i, i)] += gamma * vi;
    }
    let chol = Cholesky::factor_lower(m)?;
    let mut a = xt_xn.to_vec();
    chol.solve_in_place(&mut a);
    for ai in &mut a {
        *ai *= u_nn;
    }
    Ok(a)
}

/// The quantities the accelerated solve shares across samples for fixed `V`.
#[derive(Clone, Debug)]
pub struct SharedGram {
    /// `X·V⁻¹`, `L×N`.
    scaled: Matrix,
    /// `X·(XV⁻¹)ᵀ`, `L×L`.
    gram: Matrix,
}

impl SharedGram {
    pub fn new(x: &Matrix, v: &DiagonalWeights) -> Result<Self, Error> {
        let scaled = scale_cols_inv(x, v)?;
        let gram = x.matmul_t(&scaled)?;
        Ok(Self { scaled, gram })
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }
}

/// Accelerated column solve: `U_nn(XV⁻¹)ᵀ(U_nn·G + γI_L)⁻¹x_n`.
pub fn rrss_a_fast(shared: &SharedGram, u_nn: f64, x_n: &[f64], gamma: f64) -> Result<Vec<f64>, Error> {
    let l = shared.gram.rows();
    if x_n.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: x_n.len() });
    }
    let mut m = shared.gram.scale(u_nn);
    for i in 0..l {
        m[(i, i)] += gamma;
    }
    let chol = Cholesky::factor(&m)?;
    let mut y = x_n.to_vec();
    chol.solve_in_place(&mut y);
    let n = shared.scaled.cols();
    Ok((0..n).map(|j| u_nn * dot(shared.scaled.col(j), &y)).collect())
}

/// Smoothed objective `Σ_n √(‖x_n − Xa_n‖² + ε) + γ Σ_n √(‖aⁿ‖² + ε)`.
pub fn rrss_objective(x: &Matrix, a: &Matrix, gamma: f64, epsilon: f64) -> Result<f64, Error> {
    let xa = x.matmul(a)?;
    let residuals = residual_norms_sq(x, &xa);
    Ok(smoothed_objective(&residuals, &a.row_norms_sq(), gamma, epsilon))
}

fn residual_norms_sq(x: &Matrix, xa: &Matrix) -> Vec<f64> {
    (0..x.cols())
        .map(|j| x.col(j).iter().zip(xa.col(j)).map(|(u, w)| (u - w) * (u - w)).sum())
        .collect()
}

fn smoothed_objective(residuals: &[f64], rows: &[f64], gamma: f64, epsilon: f64) -> f64 {
    let loss: f64 = residuals.iter().map(|r| libm::sqrt(r + epsilon)).sum();
    let reg: f64 = rows.iter().map(|r| libm::sqrt(r + epsilon)).sum();
    loss + gamma * reg
}

pub fn rrss_solve(x: &Matrix, config: &RrssConfig) -> Result<SolveOutcome, Error> {
    rrss_solve_with(x, config, &NoClock)
}

/// IRLS loop starting from `U = V = I`.
///
/// Stops when the relative change of the smoothed objective is at most
/// `obj_tol`; the first change is measured against the objective at `A = 0`.
pub fn rrss_solve_with(x: &Matrix, config: &RrssConfig, clock: &dyn Clock) -> Result<SolveOutcome, Error> {
    config.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let (_, n) = x.shape();
    let gamma = config.gamma;
    let eps = config.epsilon;
    let start = clock.now();
    let mut timing = PhaseTimes::default();
    let mut ops = OpCounts::default();

    let mut u = vec![1.0; n];
    let mut v = DiagonalWeights::ones(n);
    let mut a = Matrix::zeros(n, n);
    let mut prev = rrss_objective(x, &a, gamma, eps)?;
    let mut trace = Vec::new();
    let mut converged = false;

    let gram = match config.path {
        RrssPath::Authorial => {
            ops.gram_products += 1;
            Some(x.gram())
        }
        RrssPath::Accelerated => None,
    };

    for iter in 1..=config.max_outer_iters {
        let t0 = clock.now();
        let mut next = Matrix::zeros(n, n);
        match &gram {
            Some(g) => {
                for j in 0..n {
                    let col = rrss_a_dense_with_gram(g, u[j], &v, g.col(j), gamma)?;
                    next.col_mut(j).copy_from_slice(&col);
                    ops.large_factorizations += 1;
                }
            }
            None => {
                let shared = SharedGram::new(x, &v)?;
                ops.gram_products += 1;
                for j in 0..n {
                    let col = rrss_a_fast(&shared, u[j], x.col(j), gamma)?;
                    next.col_mut(j).copy_from_slice(&col);
                    ops.small_factorizations += 1;
                }
            }
        }
        let t1 = clock.now();

        let xa = x.matmul(&next)?;
        let residuals = residual_norms_sq(x, &xa);
        let rows = next.row_norms_sq();
        for (uj, r) in u.iter_mut().zip(&residuals) {
            *uj = 0.5 / libm::sqrt(r + eps);
        }
        v = DiagonalWeights::new(rows.iter().map(|r| 0.5 / libm::sqrt(r + eps)).collect())?;
        let objective = smoothed_objective(&residuals, &rows, gamma, eps);
        let t2 = clock.now();
        timing.a_step += t1 - t0;
        timing.reweight += t2 - t1;

        if !next.is_finite() || !objective.is_finite() {
            return Err(Error::NonFinite { iteration: iter });
        }
        let change = (prev - objective).abs() / prev.abs().max(f64::MIN_POSITIVE);
        let step = next.distance(&a) / a.frobenius_norm().max(1.0);
        trace.push(IterRecord { objective, residual: change, step, mu: None });
        a = next;
        prev = objective;
        if change <= config.obj_tol {
            converged = true;
            break;
        }
    }
    timing.total = clock.now() - start;
    Ok(SolveOutcome { iterations: trace.len(), a, converged, trace, timing, ops })
}
