use alloc::vec::Vec;

use crate::clock::PhaseTimes;
use crate::numkit::Matrix;

/// One row of a solver's convergence trace.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterRecord {
    /// Model objective after the iteration (ARSS loss + ℓ2,1, or the smoothed
    /// RRSS objective).
    pub objective: f64,
    /// ARSS: relative primal residual `‖E − X + XA‖_F / max(1, ‖X‖_F)`.
    /// RRSS: relative change of the smoothed objective.
    pub residual: f64,
    /// Relative change `‖A_k − A_{k−1}‖_F / max(1, ‖A_{k−1}‖_F)`.
    pub step: f64,
    /// ALM penalty used in the iteration; absent for RRSS.
    pub mu: Option<f64>,
}

/// Counts of the expensive kernels a solve executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OpCounts {
    /// Cholesky factorizations of `N×N` systems.
    pub large_factorizations: u64,
    /// Cholesky factorizations of `L×L` systems.
    pub small_factorizations: u64,
    /// Gram-type products of the data (`XᵀX` or `X·(XV⁻¹)ᵀ`).
    pub gram_products: u64,
}

/// Result of a complete solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub a: Matrix,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<IterRecord>,
    pub timing: PhaseTimes,
    pub ops: OpCounts,
}

impl SolveOutcome {
    pub fn final_record(&self) -> Option<&IterRecord> {
        self.trace.last()
    }
}
