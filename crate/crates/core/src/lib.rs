//! Quenched KMP energy flows and the random-walk-in-random-environment kernels
//! that drive them.
//!
//! The crate is organised bottom-up:
//!
//! * [`env`]: reproducible Poisson clocks and Beta splits keyed by bond and event index.
//! * [`kmp`]: the event-driven energy exchange process on an adaptive window.
//! * [`flow`]: quenched kernels, their composition, k-point estimates and duality.
//! * [`scaling`]: moderate-deviation constants and the rescaled density field.
//! * [`gamma`]: the discretized walk and the noise-strength constant.
//! * [`sheref`]: heat kernel, two-point moments and an explicit SHE solver.
//! * [`discrete`]: Beta-RWRE, segment model, brick-wall KMP and the Haar circuit.
//! * [`acceptance`]: the end-to-end checks shared by the CLI and the test suite.

pub mod acceptance;
pub mod discrete;
pub mod engine;
pub mod env;
pub mod error;
pub mod flow;
pub mod gamma;
pub mod io;
pub mod kmp;
pub mod probe;
pub mod scaling;
pub mod sheref;
pub mod special;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
