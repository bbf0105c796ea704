//! Files, benchmarks and the command line around [`arss_core`].

pub mod cli;
pub mod clock;
pub mod dataio;
pub mod error;
pub mod evalbench;
pub mod manifest;
pub mod synth;

pub use clock::StdClock;
pub use error::{Error, Location, Result};
