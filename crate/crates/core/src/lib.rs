//! Robust exemplar selection by self-representation.
//!
//! Given a data matrix `X` (features × samples), the solvers find a row-sparse
//! coefficient matrix `A` with `X ≈ XA`; rows of `A` with large absolute mass
//! mark the samples that represent the rest.
//!
//! * [`arss`]: ℓp-loss (`0 < p ≤ 1`) model solved by an augmented Lagrangian
//!   loop whose `A` step costs `O(N²L)` when `N > L`.
//! * [`rrss`]: the ℓ2,1-loss baseline solved by iterative reweighting, with
//!   both the per-sample `N×N` solver and an accelerated `L×L` one.
//! * [`gst`]: the scalar ℓp shrinkage operator used for the loss split.
//! * [`selection`]: turning `A` into ranked exemplars or features.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;

pub mod arss;
pub mod clock;
mod error;
pub mod gst;
pub mod numkit;
mod outcome;
pub mod rrss;
pub mod selection;

pub use arss::{arss_solve, arss_solve_with, APath, SolverConfig};
pub use clock::{Clock, NoClock, PhaseTimes};
pub use error::Error;
pub use numkit::{spd_solve, DiagonalWeights, Matrix};
pub use outcome::{IterRecord, OpCounts, SolveOutcome};
pub use rrss::{rrss_solve, rrss_solve_with, RrssConfig, RrssPath};
pub use selection::{rank_rows, select_exemplars, select_features, Method, RankedSelection, SelectionReport};
