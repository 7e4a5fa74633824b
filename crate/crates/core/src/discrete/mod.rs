//! Discrete-time models: the Beta random walk in random environment, the
//! segment with reflecting ends, brick-wall KMP and the Haar circuit.
//!
//! Convention throughout: at time `n` a walker at `x` steps to `x+1` with
//! probability `B_{n,x}` and to `x-1` otherwise, so `p_n(x)` vanishes unless
//! `n + x` is even when started from the origin.

pub mod brickwall;
pub mod haar;
pub mod rwre;
pub mod segment;

use serde::Serialize;

pub use brickwall::{brickwall_coupling, brickwall_step, BrickWallState};
pub use haar::{haar_b_samples, haar_step, haar_unitary, wave_walk_coupling, Dims, HaarCircuit, WaveState};
pub use rwre::{annealed_profile, quenched_variance, rwre_step, BetaEnv, BetaRwreState};
pub use segment::{beta_gamma_identity_test, segment_stationarity, segment_step, SegmentEnv, SegmentStart};

/// Per-sweep discrepancy between two coupled dynamics.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub model: String,
    pub seed: u64,
    pub sweeps: u64,
    /// `max_x |lhs(n, x) - rhs(n, x)|` for `n = 0..=sweeps`.
    pub discrepancy: Vec<f64>,
    /// Largest deviation of the conserved total from its initial value.
    pub conservation: f64,
}

impl CouplingReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.discrepancy.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_discrepancy() <= tol && self.conservation <= 1e-12
    }
}
