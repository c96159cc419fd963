//! Statevector simulation and symmetry-preserving variational ground-state
//! preparation for the honeycomb Kitaev model on a torus.

pub mod ansatz;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod noise;
pub mod pauli;
pub mod prep;
pub mod runner;
pub mod statevector;
pub mod vqe;

pub use error::{Error, Result};
pub use lattice::{build_hamiltonian, build_torus, HoneycombTorus, KitaevParams, LoopDirection};
pub use pauli::{Axis, PauliString, PauliSum};
pub use statevector::{Gate, StateVector};
