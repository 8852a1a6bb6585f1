//! Physical state generators: three-qubit X states under dephasing, and
//! finite transverse-field spin chains with thermal reduced density matrices.

pub mod ising;
pub mod xstate;

pub use ising::{gibbs_state, ising_hamiltonian, ising_rdm, lanczos_ground, Boundary, IsingEnsemble, IsingSpec};
pub use xstate::{x_state, x_state_rdms, XStateParams};
