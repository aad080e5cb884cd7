//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("near-defective eigenbasis: normalizer {normalizer:.3e} for mode {mode} (proximity to an exceptional point)")]
    NearDefective { normalizer: f64, mode: usize },

    #[error("not in metastable basis: Im lambda_1 = {im_lambda1:.3e} is nonzero")]
    NotMetastable { im_lambda1: f64 },

    #[error("mode {mode} has mixed parity (even residual {even_residual:.3e}, odd residual {odd_residual:.3e})")]
    MixedParity {
        mode: usize,
        even_residual: f64,
        odd_residual: f64,
    },

    #[error("no bracketing: Im lambda_1 = {im_lo:.3e} at low end, {im_hi:.3e} at high end")]
    NoBracketing { im_lo: f64, im_hi: f64 },

    #[error("probability {p:.6e} outside manifold regime")]
    OutsideManifold { p: f64 },

    #[error("projection has imaginary residue {im:.3e}")]
    ProjectionNotReal { im: f64 },

    #[error("input state is not stationary: residual {residual:.3e}")]
    NonStationary { residual: f64 },

    #[error("truncation-unsafe amplitude: |alpha|^2 = {alpha_sq:.3} exceeds n_max/4 = {limit:.3}")]
    TruncationUnsafe { alpha_sq: f64, limit: f64 },

    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    #[error("trajectory diverged at t = {t:.6e} (|state| = {norm:.3e})")]
    Diverged { t: f64, norm: f64 },

    #[error("spectrum is flat; observed frequency is degenerate")]
    FlatSpectrum,

    #[error("computation failed: {0}")]
    Computation(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
