//! Exact simulation of post-selected linear-optical W-state preparation.
//!
//! Few-photon, polarization-resolved Fock states are stored as sparse maps
//! from occupation vectors to complex amplitudes. Optical elements act as
//! linear maps on creation operators and are applied by exact multinomial
//! re-expansion, so every probability and fidelity reported here is exact up
//! to floating-point rounding.
//!
//! Module layout:
//!
//! - [`fock`]: mode labels, registries and sparse Fock states.
//! - [`elements`]: beam splitters, birefringent phase shifters, polarization
//!   rotators and attenuators as [`elements::ModeMap`]s.
//! - [`schemes`]: photon sources and the three prebuilt W-state circuits.
//! - [`postselection`]: detection patterns, trigger logic and threshold
//!   detectors.
//! - [`analysis`]: fidelity targets, closed forms, optimization, perturbation
//!   Hessians, the W-class designer and yield estimates.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod elements;
mod error;
pub mod fock;
pub mod numfmt;
pub mod postselection;
pub mod schemes;

pub use error::{Error, Result};
