//! Truncated single-mode Fock space numerics.
//!
//! All objects live on `span{|0>, ..., |N>}` for a cutoff `N`. Truncation is
//! controlled through [`cutoff_for_energy`] and [`working_cutoff`], which keep
//! the discarded Poisson tail far below the tolerances used elsewhere.

mod composite;
mod counting;
mod operator;
mod vector;

pub use composite::{partial_trace, tensor_operators, tensor_vectors, CompositeOperator, CompositeVector};
pub use counting::{cutoff_for_energy, poisson_tail, sample_photon_count, working_cutoff};
pub use operator::{displacement_matrix, helstrom_success, trace_norm, FockOperator};
pub use vector::{coherent_vector, overlap_prob, FockVector};

/// Hermiticity tolerance on `max |A - A^dagger|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density operator.
pub const EIGEN_FLOOR: f64 = -1e-10;
/// Slack on the trace of a density operator relative to its declared mass.
pub const TRACE_TOL: f64 = 1e-9;
/// Tail tolerance used by [`working_cutoff`].
pub const WORKING_TAIL: f64 = 1e-12;
