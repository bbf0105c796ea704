//! Augmented-Lagrangian solver for the ℓp-loss, ℓ2,1-regularized
//! self-representation model
//!
//! ```text
//! min_A ‖X − XA‖_p^p + γ‖A‖_{2,1}
//! ```
//!
//! The loop splits `E = X − XA`, shrinks `E` elementwise, takes one reweighted
//! least-squares step in `A` and then updates the multipliers. The `A` step
//! solves an `N×N` system when `N ≤ L` and the equivalent `L×L` system
//! otherwise.

use alloc::vec::Vec;

use crate::clock::{Clock, NoClock, PhaseTimes};
use crate::error::Error;
use crate::gst::{gst_matrix, ShrinkageParams};
use crate::numkit::{scale_cols_inv, spd_solve, DiagonalWeights, Matrix};
use crate::outcome::{IterRecord, OpCounts, SolveOutcome};

/// Hyperparameters of the ALM loop.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    /// Weight of the ℓ2,1 regularizer.
    pub gamma: f64,
    /// Loss exponent, `0.1 ≤ p ≤ 1`.
    pub p: f64,
    /// Initial penalty.
    pub mu0: f64,
    /// Penalty growth factor, `1 < rho < 2`.
    pub rho: f64,
    /// Smoothing added under the row-norm square root.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Relative primal-residual tolerance.
    pub feas_tol: f64,
    /// Relative `A`-change tolerance.
    pub step_tol: f64,
    pub mu_max: f64,
    /// Requests bit-reproducible runs. All kernels in this crate are
    /// sequential, so every run is deterministic; the flag is carried so
    /// callers can record and enforce it.
    pub deterministic: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64, p: f64) -> Self {
        Self {
            gamma,
            p,
            mu0: 0.1,
            rho: 1.2,
            epsilon: 1e-10,
            max_iters: 100,
            feas_tol: 1e-6,
            step_tol: 1e-6,
            mu_max: 1e10,
            deterministic: false,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig("gamma must be positive and finite"));
        }
        if !(self.p >= 0.1 && self.p <= 1.0) {
            return Err(Error::InvalidConfig("p must lie in [0.1, 1]"));
        }
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(Error::InvalidConfig("mu0 must be positive"));
        }
        if !(self.rho > 1.0 && self.rho < 2.0) {
            return Err(Error::InvalidConfig("rho must lie in (1, 2)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive"));
        }
        if !(self.mu_max > self.mu0) {
            return Err(Error::InvalidConfig("mu_max must exceed mu0"));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1"));
        }
        if !(self.feas_tol >= 0.0 && self.step_tol >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be non-negative"));
        }
        Ok(())
    }
}

/// Which linear system the `A` step solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum APath {
    /// `A = β(V + βXᵀX)⁻¹XᵀP`, an `N×N` solve.
    Dense,
    /// `A = B(I_L + XB)⁻¹P` with `B = β(XV⁻¹)ᵀ`, an `L×L` solve.
    PushThrough,
}

impl APath {
    /// Dense when `N ≤ L`, push-through otherwise.
    pub fn for_shape(n: usize, l: usize) -> Self {
        if n <= l {
            APath::Dense
        } else {
            APath::PushThrough
        }
    }
}

/// `V_nn = 1/√(‖aⁿ‖² + ε)` for each row `aⁿ` of `A`.
pub fn update_v(a: &Matrix, epsilon: f64) -> DiagonalWeights {
    let w = a.row_norms_sq().into_iter().map(|s| 1.0 / libm::sqrt(s + epsilon)).collect();
    DiagonalWeights::new(w).expect("weights are positive for epsilon > 0")
}

/// Minimizes `‖A‖_{2,1} + (β/2)‖XA − P‖_F²` for one reweighting step, picking
/// the cheaper system for the shape of `X`.
pub fn update_a(x: &Matrix, v: &DiagonalWeights, p: &Matrix, beta: f64) -> Result<Matrix, Error> {
    let path = APath::for_shape(x.cols(), x.rows());
    update_a_with(path, x, v, p, beta, &mut OpCounts::default())
}

/// [`update_a`] with an explicit path.
pub fn update_a_with(
    path: APath,
    x: &Matrix,
    v: &DiagonalWeights,
    p: &Matrix,
    beta: f64,
    ops: &mut OpCounts,
) -> Result<Matrix, Error> {
    let (l, n) = x.shape();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    if p.shape() != (l, n) {
        return Err(Error::DimensionMismatch { expected: l * n, found: p.rows() * p.cols() });
    }
    match path {
        APath::Dense => {
            let mut m = x.gram().scale(beta);
            for (i, &vi) in v.values().iter().enumerate() {
                m[(i, i)] += vi;
            }
            let rhs = x.t_matmul(p)?.scale(beta);
            ops.gram_products += 1;
            ops.large_factorizations += 1;
            spd_solve(&m, &rhs)
        }
        APath::PushThrough => {
            let xv = scale_cols_inv(x, v)?;
            let b = xv.transpose().scale(beta);
            // I_L + X·B = I_L + β·X·(XV⁻¹)ᵀ
            let mut c = x.matmul_t(&xv)?.scale(beta);
            for i in 0..l {
                c[(i, i)] += 1.0;
            }
            ops.gram_products += 1;
            ops.small_factorizations += 1;
            let y = spd_solve(&c, p)?;
            b.matmul(&y)
        }
    }
}

/// `Λ' = Λ + μ(E − X + XA)`, `μ' = min(ρμ, μ_max)`.
pub fn update_multiplier(
    lambda: &Matrix,
    mu: f64,
    e: &Matrix,
    x: &Matrix,
    a: &Matrix,
    rho: f64,
    mu_max: f64,
) -> Result<(Matrix, f64), Error> {
    let xa = x.matmul(a)?;
    let r = constraint_violation(e, x, &xa);
    let mut next = lambda.clone();
    next.add_scaled(mu, &r);
    Ok((next, (rho * mu).min(mu_max)))
}

/// `‖X − XA‖_p^p + γ‖A‖_{2,1}`.
pub fn arss_objective(x: &Matrix, a: &Matrix, gamma: f64, p: f64) -> Result<f64, Error> {
    let xa = x.matmul(a)?;
    Ok(objective_from_product(x, &xa, a, gamma, p))
}

fn objective_from_product(x: &Matrix, xa: &Matrix, a: &Matrix, gamma: f64, p: f64) -> f64 {
    let loss: f64 = x
        .as_slice()
        .iter()
        .zip(xa.as_slice())
        .map(|(&u, &w)| lp_power(u - w, p))
        .sum();
    let reg: f64 = a.row_norms_sq().into_iter().map(libm::sqrt).sum();
    loss + gamma * reg
}

#[inline]
fn lp_power(v: f64, p: f64) -> f64 {
    let m = v.abs();
    if p == 1.0 {
        m
    } else if m == 0.0 {
        0.0
    } else {
        libm::pow(m, p)
    }
}

fn constraint_violation(e: &Matrix, x: &Matrix, xa: &Matrix) -> Matrix {
    let mut r = e.clone();
    r.add_scaled(-1.0, x);
    r.add_scaled(1.0, xa);
    r
}

/// Iterate bundle of the ALM loop.
#[derive(Clone, Debug)]
pub struct AlmState {
    pub a: Matrix,
    pub e: Matrix,
    pub lambda: Matrix,
    pub mu: f64,
    pub iter: usize,
    pub trace: Vec<IterRecord>,
    xa: Matrix,
}

impl AlmState {
    /// `A = I_N`, `E = 0`, `Λ = 0`, `μ = μ₀`.
    pub fn new(x: &Matrix, config: &SolverConfig) -> Self {
        let (l, n) = x.shape();
        Self {
            a: Matrix::identity(n),
            e: Matrix::zeros(l, n),
            lambda: Matrix::zeros(l, n),
            mu: config.mu0,
            iter: 0,
            trace: Vec::new(),
            xa: x.clone(),
        }
    }

    /// Runs one E, V, A, Λ sweep and appends its trace record.
    pub fn step(
        &mut self,
        x: &Matrix,
        config: &SolverConfig,
        path: APath,
        clock: &dyn Clock,
        timing: &mut PhaseTimes,
        ops: &mut OpCounts,
    ) -> Result<IterRecord, Error> {
        let mu = self.mu;
        let inv_mu = 1.0 / mu;
        let t0 = clock.now();

        // H = X − XA − Λ/μ
        let mut h = x.clone();
        h.add_scaled(-1.0, &self.xa);
        h.add_scaled(-inv_mu, &self.lambda);
        self.e = gst_matrix(&h, &ShrinkageParams::new(config.p, inv_mu));
        drop(h);
        let t1 = clock.now();

        let v = update_v(&self.a, config.epsilon);
        // P = X − E − Λ/μ
        let mut target = x.clone();
        target.add_scaled(-1.0, &self.e);
        target.add_scaled(-inv_mu, &self.lambda);
        let beta = mu / config.gamma;
        let a_next = update_a_with(path, x, &v, &target, beta, ops)?;
        drop(target);
        let t2 = clock.now();

        let xa_next = x.matmul(&a_next)?;
        let violation = constraint_violation(&self.e, x, &xa_next);
        self.lambda.add_scaled(mu, &violation);
        self.mu = (config.rho * mu).min(config.mu_max);
        let t3 = clock.now();

        let x_scale = x.frobenius_norm().max(1.0);
        let residual = violation.frobenius_norm() / x_scale;
        let step = a_next.distance(&self.a) / self.a.frobenius_norm().max(1.0);
        self.a = a_next;
        self.xa = xa_next;
        self.iter += 1;

        if !(self.a.is_finite() && self.e.is_finite() && self.lambda.is_finite()) {
            return Err(Error::NonFinite { iteration: self.iter });
        }

        let objective = objective_from_product(x, &self.xa, &self.a, config.gamma, config.p);
        let record = IterRecord { objective, residual, step, mu: Some(mu) };
        self.trace.push(record);

        timing.e_step += t1 - t0;
        timing.a_step += t2 - t1;
        timing.multiplier_step += t3 - t2;
        Ok(record)
    }
}

/// Solves the model with the default path choice and no timing.
pub fn arss_solve(x: &Matrix, config: &SolverConfig) -> Result<SolveOutcome, Error> {
    arss_solve_with(x, config, None, &NoClock)
}

/// Solves the model, optionally forcing the `A`-step path, timing phases
/// with `clock`.
///
/// Stops when the relative primal residual is at most `feas_tol` and the
/// relative `A` change is at most `step_tol`, or after `max_iters` sweeps.
pub fn arss_solve_with(
    x: &Matrix,
    config: &SolverConfig,
    path: Option<APath>,
    clock: &dyn Clock,
) -> Result<SolveOutcome, Error> {
    config.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let path = path.unwrap_or_else(|| APath::for_shape(x.cols(), x.rows()));
    let start = clock.now();
    let mut timing = PhaseTimes::default();
    let mut ops = OpCounts::default();
    let mut state = AlmState::new(x, config);
    let mut converged = false;
    while state.iter < config.max_iters {
        let rec = state.step(x, config, path, clock, &mut timing, &mut ops)?;
        if rec.residual <= config.feas_tol && rec.step <= config.step_tol {
            converged = true;
            break;
        }
    }
    timing.total = clock.now() - start;
    Ok(SolveOutcome {
        a: state.a,
        converged,
        iterations: state.iter,
        trace: state.trace,
        timing,
        ops,
    })
}
