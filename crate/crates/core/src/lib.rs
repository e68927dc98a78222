//! Transient response of two-level and Lambda atomic ensembles to
//! near-resonant light.
//!
//! Two pipelines are provided. The spatially uniform optical-Bloch pipeline
//! solves a single atom and scales its susceptibility over the medium with
//! Beer-Lambert propagation ([`response`]). The Maxwell-Bloch pipeline
//! couples a spatial grid of atoms to the propagating field envelopes in the
//! co-moving frame ([`mbe`]). Thermal velocity averaging is in [`doppler`];
//! named parameter sets and run dispatch live in [`scenarios`].

pub mod atomic;
pub mod config;
pub mod constants;
pub mod doppler;
pub mod error;
pub mod mbe;
pub mod output;
pub mod par;
pub mod response;
pub mod scenarios;

pub use error::{Error, Result};
pub use par::Execution;
