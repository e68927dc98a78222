//! Density matrices, rotating-frame Hamiltonians, the Lindblad master
//! equation and its time integration and stationary solution.
//!
//! All frequencies are in units of the excited-state decay rate Gamma and
//! all times in units of 1/Gamma.

pub mod hamiltonian;
pub mod integrate;
pub mod lindblad;
pub mod model;
pub mod state;
pub mod steady;

pub use hamiltonian::{build_lambda_hamiltonian, build_two_level_hamiltonian, Hamiltonian};
pub use integrate::{evolve, HamiltonianSource, IntegratorConfig, Method, Trajectory};
pub use lindblad::{lambda_decay, lindblad_rhs, two_level_decay, JumpOperator, LindbladSet};
pub use model::{
    AtomModel, Detunings, DriveProtocol, DrivenAtom, Envelope, Fields, InitialState, LambdaAtom, TwoLevelAtom,
};
pub use state::{CMatrix, DensityMatrix};
pub use steady::{liouvillian, steady_state};
