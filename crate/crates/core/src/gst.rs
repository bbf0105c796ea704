//! Generalized ℓp shrinkage-thresholding.
//!
//! Solves the scalar problem `min_y λ|y|^p + ½(y − c)²` for `0 < p ≤ 1` and
//! applies it elementwise. Below the threshold `τ_p(λ)` the global minimizer
//! is zero; above it the minimizer is the large root of
//! `S − |c| + λ·p·S^(p−1) = 0`, found by fixed-point iteration from `S = |c|`.

use crate::numkit::Matrix;

/// Parameters of one shrinkage application.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShrinkageParams {
    pub p: f64,
    pub lambda: f64,
    pub max_inner_iters: usize,
    pub inner_tol: f64,
}

impl ShrinkageParams {
    pub fn new(p: f64, lambda: f64) -> Self {
        debug_assert!(p > 0.0 && p <= 1.0, "p = {p} outside (0, 1]");
        debug_assert!(lambda >= 0.0, "lambda = {lambda} negative");
        Self { p, lambda, max_inner_iters: 50, inner_tol: 1e-12 }
    }
}

/// Zero-gate threshold `τ_p(λ)`.
pub fn tau_threshold(p: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return lambda;
    }
    let base = 2.0 * lambda * (1.0 - p);
    libm::pow(base, 1.0 / (2.0 - p)) + lambda * p * libm::pow(base, (p - 1.0) / (2.0 - p))
}

/// Global minimizer of `λ|y|^p + ½(y − c)²`.
pub fn gst_scalar(c: f64, params: &ShrinkageParams) -> f64 {
    let ShrinkageParams { p, lambda, .. } = *params;
    if lambda == 0.0 {
        return c;
    }
    let mag = c.abs();
    if p >= 1.0 {
        let s = mag - lambda;
        return if s > 0.0 { s.copysign(c) } else { 0.0 };
    }
    if mag <= tau_threshold(p, lambda) {
        return 0.0;
    }
    let lp = lambda * p;
    let mut s = mag;
    for _ in 0..params.max_inner_iters {
        let next = mag - lp * libm::pow(s, p - 1.0);
        let done = (next - s).abs() <= params.inner_tol;
        s = next;
        if done {
            break;
        }
    }
    s.copysign(c)
}

/// Elementwise [`gst_scalar`].
pub fn gst_matrix(h: &Matrix, params: &ShrinkageParams) -> Matrix {
    h.map(|c| gst_scalar(c, params))
}

/// `λ|y|^p + ½(y − c)²`.
pub fn scalar_objective(y: f64, c: f64, p: f64, lambda: f64) -> f64 {
    lambda * libm::pow(y.abs(), p) + 0.5 * (y - c) * (y - c)
}
