//! nvforge-core: modeling toolkit for NV color-center ensemble creation in
//! He-implanted diamond and its evaluation as an off-resonant phonon-sideband
//! quantum memory.
//!
//! The crate is organized around the four stages of the pipeline:
//!
//! * [`transport`] — binary-collision Monte Carlo for MeV light ions in
//!   diamond, producing depth-resolved vacancy and stopping profiles.
//! * [`defect`] — annealing, charge-state equilibrium and photoionization of
//!   the resulting NV / GR1 populations.
//! * [`pl`] — fluence-dependent photoluminescence observables, spectrum
//!   synthesis and line fitting.
//! * [`qmem`] — closed-form quantum-memory figures of merit for the ensemble.

pub mod constants;
pub mod defect;
pub mod pl;
pub mod qmem;
pub mod transport;

pub use defect::{AnnealModel, ChargeEquilibrium, MaterialState, PhotoionizationModel};
pub use pl::{AbsorptionModel, BroadeningModel, EmissionLine, LineShape, Spectrum};
pub use qmem::{EnsembleSpec, LambdaSystem, MemoryDesign, MemoryReport};
pub use transport::{DamageProfile, IonBeamSpec, TargetMaterial, TransportConfig};

/// Toolkit version embedded in every output file.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Supported run-configuration schema version.
pub const CONFIG_SCHEMA_VERSION: &str = "1";
