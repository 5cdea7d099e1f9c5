//! Classical zeropoint-field model of parametric down- and up-conversion
//! from the vacuum.
//!
//! Pipeline: a [`dispersion::DispersionModel`] fixes wavenumbers,
//! [`phasematch`] solves the matching angles, [`coupling`] builds the slab
//! transfer matrix on `(a, b*, c)`, [`ensemble`] pushes half-photon vacuum
//! inputs through it and applies threshold detection, and [`scenarios`]
//! assembles rainbows and the two-crystal interference experiment.
//!
//! Units are normalized: `c = 1`, pump frequency `1`, lengths in
//! `c / omega_pump`, intensities in photons (vacuum = 1/2).

pub mod cli;
pub mod config;
pub mod coupling;
pub mod dispersion;
pub mod ensemble;
pub mod error;
pub mod phasematch;
pub mod roots;
pub mod scenarios;

pub use error::{PdcError, Result};
