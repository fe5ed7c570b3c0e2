//! Thermal states of one and two harmonic oscillators after a sudden
//! frequency quench.
//!
//! The closed-form path runs `quench` → `kernel` → `spectra` / `negativity`.
//! `oracle` is an independent quadrature engine that consumes only kernel
//! coefficient matrices and is used to verify the closed forms.

pub mod ermakov;
pub mod error;
pub mod kernel;
pub mod negativity;
pub mod oracle;
pub mod quench;
pub mod spectra;
pub mod sweep;

pub use error::{Error, ErrorClass, Result};
pub use quench::{mode_thermo, normal_modes, ModeQuench, ModeThermo, QuenchSpec, Temperature};
