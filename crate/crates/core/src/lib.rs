//! Spin-boson quantum dynamics engine and drive-program compiler.
//!
//! The crate builds the standard light-matter models (quantum Rabi,
//! Jaynes-Cummings, Dicke, and their circuit-QED digital-analog split),
//! integrates the full time-dependent trapped-ion Hamiltonian under
//! bichromatic driving, runs experiment-level protocols (adiabatic ground
//! state preparation, digital-analog synthesis, deep-strong-coupling
//! diagnostics), and inverts the parameter maps that turn target models into
//! physical drive programs for ion and circuit hardware.

pub mod analysis;
pub mod error;
pub mod hilbert;
pub mod ionhw;
pub mod models;
pub mod propagate;
mod linalg;

pub use error::{Error, Result};
pub use hilbert::{BasisSpec, OperatorMatrix, StateVector};
