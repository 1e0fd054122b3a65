//! Exact diagonalization of the quantum Rabi model in a truncated Fock basis.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds the Hamiltonian, the parity operator and the
//!   parity-sector tridiagonal blocks.
//! * [`eigen`] holds the symmetric eigensolvers (dense, banded and
//!   tridiagonal) together with residual checks.
//! * [`parity`] turns eigenvectors into parity expectations, pair reports,
//!   Fock populations and onset couplings.
//! * [`position`] evaluates eigenstates on a position grid.
//! * [`sweep`] runs coupling, truncation and phase-diagram scans.
//! * [`config`] and [`output`] are the command-line and file-format layer.

pub mod config;
pub mod eigen;
pub mod error;
pub mod model;
pub mod output;
pub mod parity;
pub mod position;
pub mod run;
pub mod solve;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{critical_coupling, ModelParams, SymmetricMatrix, Truncation};
