//! Branch-state simulation of Wigner-Friend protocols with weakly coupled
//! Gaussian probes.
//!
//! The global wavefunction is kept as a short list of product terms over
//! discrete registers (spins, Friend pointers, environments) with a complex
//! displacement per probe. Everything a probe can tell an external agent is
//! then a closed-form function of those displacements.
//!
//! Conventions used throughout:
//!
//! * ħ = 1, couplings are time-integrated strengths.
//! * Spin coordinates are ordered (↓, ↑); σ_z = diag(−1, 1) and
//!   |±⟩ = (|↓⟩ ± |↑⟩)/√2, listed in the order (+, −).
//! * Record registers (pointers, environments) have three labels
//!   `ready`, then the two outcomes of the Friend's basis in basis order.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN takes the error path
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
mod error;
pub mod gaussian;
pub mod linalg;
pub mod montecarlo;
pub mod observable;
pub mod scenario;
pub mod state;
pub mod weak;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Version string written into emitted artifacts.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
