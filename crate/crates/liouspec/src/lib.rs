//! Liouvillian spectral analysis of the squeezed quantum van der Pol
//! oscillator.
//!
//! The crate builds the rotating-frame Lindblad generator of a van der Pol
//! oscillator forced by a squeezed (two-boson) drive, eigendecomposes it, and
//! derives everything the spectral picture buys: spectral-gap and
//! exceptional-point maps, the metastable two-state reduction with its
//! extreme metastable states, exact and approximate time evolution in the
//! rotating and laboratory frames, stationary two-time correlations with
//! emission spectra and the observed frequency, Wigner distributions, and the
//! classical mean-field and telegraph-process oracles.
//!
//! Modules mirror that pipeline:
//!
//! - [`fockspace`]: truncated Fock-basis operator algebra and vectorization
//! - [`liouvillian`]: model parameters and generator assembly
//! - [`spectral`]: eigendecomposition, gauge fixing, exceptional points, gap maps
//! - [`metastable`]: extreme metastable states, projectors, two-state dynamics
//! - [`evolution`]: eigenexpansion and direct time integration, amplitude series
//! - [`correlations`]: two-time correlations, emission spectrum, observed frequency
//! - [`phasespace`]: Wigner distributions and lobe extraction
//! - [`classical`]: mean-field limit and the classical telegraph process
//! - [`cli`]: batch front-end used by the `liouspec` binary
//!
//! All rates are handled internally in units of γ₁; times are in units of
//! 1/γ₁.

extern crate blas_src;

pub mod classical;
pub mod cli;
pub mod correlations;
pub mod error;
pub mod evolution;
pub mod fockspace;
pub mod linalg;
pub mod liouvillian;
pub mod metastable;
pub mod ode;
pub mod output;
pub mod phasespace;
pub mod sample;
pub mod spectral;

pub use error::{Error, Result};
pub use liouvillian::ModelParams;
pub use num_complex::Complex64;

/// Shorthand complex constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
