//! Time source for per-phase solver timings.
//!
//! The core has no access to an OS clock, so solvers take a [`Clock`]. The std
//! companion crate supplies one backed by `std::time::Instant`.

use core::time::Duration;

/// Monotonic time source.
pub trait Clock {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

/// A clock that never advances; every measured phase takes zero time.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

/// Accumulated wall time per solver phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseTimes {
    /// ARSS: shrinkage update of `E`.
    pub e_step: Duration,
    /// ARSS: reweighting and `A` update. RRSS: the per-sample linear solves.
    pub a_step: Duration,
    /// ARSS: multiplier and penalty update.
    pub multiplier_step: Duration,
    /// RRSS: recomputing `U` and `V`.
    pub reweight: Duration,
    pub total: Duration,
}
