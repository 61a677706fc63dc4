//! Numerical laboratory for state preparation and readout of trapped
//! polyatomic molecular ions.
//!
//! * [`molspec`]: rigid asymmetric-top levels, thermal populations and
//!   electric-dipole transition catalogs.
//! * [`optics`]: optical-lattice intensity and the state-dependent potential.
//! * [`trapdyn`]: classical atom + molecule dynamics in a Paul trap with the
//!   lattice switched between internal states, heating rates and thermometry.
//! * [`pulses`]: uniform-field internal-state evolution, π-pulse schedules and
//!   enantiomer-selective three-wave transfer.
//! * [`protocol`]: subspace measurement, adaptive search, heralded preparation,
//!   ensemble readout and spectroscopy scans.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod config;
pub mod constants;
pub mod error;
pub mod molspec;
pub mod optics;
pub mod protocol;
pub mod pulses;
pub mod stats;
pub mod trapdyn;

pub use error::{Error, Result};
pub use molspec::{
    LevelTable, MolecularSpecies, RotationalState, StateLabel, Transition, TransitionCatalog,
};
pub use optics::{LatticeConfig, PolarizabilityModel, StatePotential};
pub use protocol::{MeasurementRecord, MoleculeRegister, SubspaceQuery, Thermometer};
pub use pulses::{DriveField, InternalState};
pub use trapdyn::{EnsembleTrajectory, FlipProcess, TrapConfig};
