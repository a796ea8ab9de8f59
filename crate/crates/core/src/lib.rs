//! Numerics and protocol machinery for a phase-encoded coherent-state bit
//! commitment scheme.
//!
//! Alice commits to a bit by sending `k` coherent states whose phases are
//! drawn from an `M`-point grid, shifted by half a step when the bit is one.
//! Bob opens by displacing each mode back to the vacuum and photon counting.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: truncated single-mode Fock space, coherent states, trace norm.
//! - [`codestates`]: the average code states `σ_b`, the phase-averaged state
//!   `ρ` and the eigensystem of `σ_b`.
//! - [`protocol`]: commit/open, Bob's verifier, Alice strategies and the
//!   sans-IO session state machines.
//! - [`security`]: closed-form cheating bounds and parameter planning.
//! - [`mayers`]: purifications, switching unitary and POVMs of the delayed
//!   choice attack.
//! - [`phasespace`]: Wigner grids and stellar polynomial roots.
//! - [`transport`]: line-delimited wire format and two-party session runner.

pub mod codestates;
pub mod error;
pub mod fock;
pub mod format;
pub mod mayers;
pub mod phasespace;
pub mod protocol;
pub mod security;
pub mod transport;

mod bit;

pub use bit::Bit;
pub use error::{Error, Result};
pub use format::fmt17;

pub use num_complex::Complex64 as C64;
