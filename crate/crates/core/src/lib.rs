//! Cavity-mediated energy transfer between a quantum charger and a quantum
//! battery in the two-qubit Rabi model.
//!
//! The composite Hilbert space is always ordered charger ⊗ battery ⊗ photons,
//! with the photon ladder truncated at `n_max`. Units: ħ = 1 and every
//! frequency, energy, and time is expressed in units of the battery frequency.
//!
//! Layout:
//! - [`hilbert`]: dense operators, states, Kronecker products, eigensolver.
//! - [`model`]: Hamiltonians, switch window, Ohmic bath rates, collapse operators.
//! - [`states`]: Fock and coherent cavity states, the initial composite state.
//! - [`spectrum`]: eigenvalue sweeps over the coupling, diabatic tracking, crossings.
//! - [`dynamics`]: unitary and Lindblad time evolution.
//! - [`metrics`]: transfer energy, transfer time, charging power, coupling sweeps.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod metrics;
pub mod model;
pub mod spectrum;
pub mod states;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
