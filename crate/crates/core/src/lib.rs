//! Coupled-cavity-array QED on an N×N periodic lattice.
//!
//! Every cavity holds a Λ-type atom with ground states `|g⟩`, `|f⟩` and an
//! excited state `|e⟩`. The crate builds the interaction-picture and
//! lab-frame Hamiltonians of the array, the adiabatically eliminated
//! (effective) qubit Hamiltonians, propagates state vectors under either, and
//! plans selective two-qubit protocols between arbitrary sites.
//!
//! All frequencies are in units of a reference coupling `g₀` and all times in
//! units of `1/g₀` (`ħ = 1`).
//!
//! The crate is `no_std` and only needs an allocator; file formats and the
//! command line live in the `cavarray` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod lattice;
pub mod linalg;
pub mod protocols;

mod math;

pub use num_complex::Complex64 as C64;

pub use dynamics::{Method, Observable, PropagatorConfig, Trajectory};
pub use error::{Error, Result};
pub use hamiltonian::{EffectiveCoefficients, LabFrameParams, SiteParams};
pub use hilbert::{AtomLevel, Basis, BasisState, PhotonRepr, SectorSpec, StateVector};
pub use lattice::{Dispersion, LatticeSpec, MomentumMode, SiteIndex};
pub use protocols::{DecoherenceEstimate, GateKind, ProtocolKind, ProtocolPlan};
