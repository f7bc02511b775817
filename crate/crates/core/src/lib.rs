//! Reconstruction of continuous acoustic wavefields in a shallow-water
//! waveguide from samples taken by an equispaced vertical array.
//!
//! The reconstruction expands the field over discrete-variable-representation
//! (DVR) cardinal functions whose expansion coefficients are the scaled
//! hydrophone readings. The crate also contains the normal-mode simulator
//! used to produce reference fields, measurement perturbation models and the
//! fidelity metrics used to judge reconstructions.

pub mod config;
pub mod dvr;
pub mod env;
pub mod error;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod modes;
pub mod quadrature;
pub mod rng;
pub mod sensing;

pub use dvr::{build_dvr, build_dvr_numeric, reconstruct, DvrBasis, Reconstruction};
pub use env::EnvironmentModel;
pub use error::{Error, Result};
pub use field::{cw_field, pulse_field, CwField, PulseField, SignalSpectrum};
pub use grid::DepthGrid;
pub use metrics::{confidence_range, fidelity_cw, fidelity_pulse, ConfidenceRange, FidelityResult};
pub use modes::{solve_modes, ModeSet};
pub use sensing::{ArraySpec, Measurement};
