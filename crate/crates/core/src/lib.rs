//! Geometric-phase generation of 2D cluster states in coupled-cavity arrays.
//!
//! * [`lattice`]: array geometry and Bloch-mode frequencies.
//! * [`phasespace`]: displacement algebra and path geometric phases.
//! * [`geomphase`]: closed-form per-mode displacements, phases and the
//!   pairwise `sigma_x sigma_x` coupling they induce; sweeps and gate-time search.
//! * [`effective`]: dense qubit register evolved under the pairwise coupling,
//!   cluster-state references and verification instruments.
//! * [`oracle`]: brute-force truncated-Fock integration of the driven
//!   qubit-field Hamiltonian and the spin-echo sequence.
//! * [`mbqc`]: measurement patterns with feedforward on cluster states.

pub mod effective;
pub mod error;
pub mod geomphase;
pub mod lattice;
pub mod mbqc;
pub mod numeric;
pub mod oracle;
pub mod phasespace;

pub use error::{Error, Result};
pub use lattice::{LatticeConfig, Mode};
