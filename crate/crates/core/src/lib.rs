//! Simulation core for autonomous Bell-state stabilization of two qubits
//! dispersively coupled to a driven, lossy cavity.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! configuration or threads lives in the `bellstab-cli` companion crate.
//!
//! Layout:
//! - [`hilbert`]: dense complex operators on qubit A ⊗ qubit B ⊗ cavity.
//! - [`model`]: physical parameters, the rotating-frame Hamiltonian and the
//!   collapse channels.
//! - [`solver`]: adaptive Runge-Kutta integration of the master equation.
//! - [`analysis`]: fidelity, Pauli averages, concurrence, fits, error budget.
//! - [`tomography`]: 16-setting joint-readout tomography by linear inversion.
//! - [`readout`]: single-shot Gaussian readout and post-selection.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
mod error;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod readout;
pub mod solver;
pub mod tomography;

pub use error::{Error, Result};
pub use hilbert::{ComplexMatrix, HilbertSpace, Subsystem};
pub use model::{DriveParams, Model, SystemParams};
pub use solver::{DensityMatrix, SolverSettings, Trajectory};

pub use num_complex::Complex64 as C64;
