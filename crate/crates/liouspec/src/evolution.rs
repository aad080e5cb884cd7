//! Time evolution: eigenexpansion and direct integration, amplitude series
//! in the rotating and laboratory frames, and initial-state builders.
//!
//! Two independent propagation routes are kept first class and
//! cross-validated: the eigenmode expansion
//! `ρ(t) = ρ_ss + Σ_j Tr[σ_j† ρ(0)] ρ_j e^{λ_j t}` (cost independent of t)
//! and adaptive Runge-Kutta integration of `dρ/dt = Lρ` (usable near
//! exceptional points where the expansion is ill conditioned).

use num_complex::Complex64;
use serde::Serialize;

use crate::c64;
use crate::error::{Error, Result};
use crate::fockspace::{
    annihilation, devectorize, herm_residual, hs_inner, number_operator, trace, vectorize, CMat,
    CVec, DensityMatrix, SuperOp,
};
use crate::metastable::{evolve_probabilities, MetastableManifold, TwoStateProbabilities};
use crate::ode::{integrate_adaptive, OdeOptions};
use crate::spectral::LiouvillianSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Rot,
    Lab,
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frame::Rot => write!(f, "rot"),
            Frame::Lab => write!(f, "lab"),
        }
    }
}

/// States and derived observables on a strictly increasing time grid
/// (times in units of 1/γ₁).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    /// ⟨â⟩ per time.
    pub amplitudes: Vec<Complex64>,
    /// ⟨â†â⟩ per time.
    pub occupations: Vec<f64>,
    /// max |Tr ρ(t) - 1| over the trajectory; drift is reported, never
    /// silently renormalized.
    pub trace_drift: f64,
    pub frame: Frame,
    /// 1/Γ₁ and 1/Γ₂ markers when a spectrum is available.
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
}

impl Trajectory {
    fn from_states(times: Vec<f64>, states: Vec<CMat>) -> Result<Self> {
        let dim = states[0].nrows();
        let a = annihilation(dim)?;
        let n_op = number_operator(dim)?;
        let mut amplitudes = Vec::with_capacity(states.len());
        let mut occupations = Vec::with_capacity(states.len());
        let mut drift = 0.0f64;
        for rho in &states {
            amplitudes.push(trace(&a.dot(rho)));
            occupations.push(trace(&n_op.dot(rho)).re);
            drift = drift.max((trace(rho) - c64(1.0, 0.0)).norm());
        }
        Ok(Self {
            times,
            states,
            amplitudes,
            occupations,
            trace_drift: drift,
            frame: Frame::Rot,
            tau1: None,
            tau2: None,
        })
    }

    pub fn with_markers(mut self, gamma1_rate: f64, gamma2_rate: f64) -> Self {
        self.tau1 = (gamma1_rate > 0.0).then(|| 1.0 / gamma1_rate);
        self.tau2 = (gamma2_rate > 0.0).then(|| 1.0 / gamma2_rate);
        self
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParams("empty time grid".into()));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParams(
                "times must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

/// Coherent state |α⟩⟨α| on the truncated basis, renormalized after
/// truncation. Rejects amplitudes with |α|² > n_max/4 where the truncation
/// bites.
pub fn coherent_state(alpha: Complex64, n_max: usize) -> Result<DensityMatrix> {
    let ket = coherent_ket(alpha, n_max)?;
    let mut rho = CMat::zeros((n_max, n_max));
    for i in 0..n_max {
        for j in 0..n_max {
            rho[(i, j)] = ket[i] * ket[j].conj();
        }
    }
    DensityMatrix::new(rho)
}

/// Normalized coherent-state amplitudes e^{-|α|²/2} αⁿ/√n!.
pub fn coherent_ket(alpha: Complex64, n_max: usize) -> Result<CVec> {
    if n_max < 2 {
        return Err(Error::InvalidParams("n_max must be at least 2".into()));
    }
    let alpha_sq = alpha.norm_sqr();
    let limit = n_max as f64 / 4.0;
    if alpha_sq > limit {
        return Err(Error::TruncationUnsafe { alpha_sq, limit });
    }
    let mut ket = CVec::zeros(n_max);
    ket[0] = c64((-alpha_sq / 2.0).exp(), 0.0);
    for n in 1..n_max {
        ket[n] = ket[n - 1] * alpha / c64((n as f64).sqrt(), 0.0);
    }
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(ket.mapv(|z| z / c64(norm, 0.0)))
}

fn check_states(states: &[CMat], tol: f64) -> Result<f64> {
    let mut drift = 0.0f64;
    for rho in states {
        let h = herm_residual(rho);
        let t = (trace(rho) - c64(1.0, 0.0)).norm();
        if h > tol || t > tol {
            return Err(Error::Computation(format!(
                "evolved state violates Hermiticity/trace: residuals {h:.2e}, {t:.2e}"
            )));
        }
        drift = drift.max(t);
    }
    Ok(drift)
}

/// Spectral propagation: exact at any time once the spectrum is known.
/// Rejects spectra flagged as near an exceptional point.
pub fn evolve_eigenexpansion(
    s: &LiouvillianSpectrum,
    rho0: &CMat,
    times: &[f64],
) -> Result<Trajectory> {
    validate_times(times)?;
    if rho0.nrows() != s.n_max {
        return Err(Error::DimensionMismatch {
            expected: s.n_max,
            got: rho0.nrows(),
        });
    }
    if s.min_normalizer < 1e-8 {
        return Err(Error::NearDefective {
            normalizer: s.min_normalizer,
            mode: 0,
        });
    }

    let coeffs: Vec<Complex64> = (1..s.n_modes())
        .map(|j| hs_inner(&s.sigmas[j], rho0))
        .collect();

    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let mut rho = s.rho_ss().clone();
        for (j, &cj) in coeffs.iter().enumerate() {
            let weight = cj * (s.eigenvalues[j + 1] * t).exp();
            if weight.norm() > 1e-16 {
                rho.zip_mut_with(&s.rhos[j + 1], |acc, m| *acc += weight * m);
            }
        }
        states.push(rho);
    }
    let drift = check_states(&states, 1e-7)?;
    let mut traj = Trajectory::from_states(times.to_vec(), states)?;
    traj.trace_drift = drift;
    let (g1, _) = s.rate_frequency(1);
    let (g2, _) = s.rate_frequency(2);
    Ok(traj.with_markers(g1, g2))
}

/// Direct adaptive integration of dρ/dt = Lρ (Dormand-Prince 5(4), local
/// error 1e-9 per unit γ₁ t by default). Trace drift is logged, never
/// applied.
pub fn evolve_ode(l: &SuperOp, rho0: &CMat, times: &[f64], opts: &OdeOptions) -> Result<Trajectory> {
    validate_times(times)?;
    let dim = rho0.nrows();
    if l.nrows() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: l.nrows(),
        });
    }
    let v0 = vectorize(rho0);
    let rhs = |v: &CVec| l.dot(v);
    let vs = integrate_adaptive(rhs, &v0, times, opts)?;
    let states: Vec<CMat> = vs
        .iter()
        .map(devectorize)
        .collect::<Result<_>>()?;
    let traj = Trajectory::from_states(times.to_vec(), states)?;
    if traj.trace_drift > 1e-7 {
        log::warn!("integrator trace drift {:.2e}", traj.trace_drift);
    }
    Ok(traj)
}

/// ⟨â(t)⟩ = Tr[â ρ(t)] per sample.
pub fn amplitude_series(traj: &Trajectory) -> Vec<Complex64> {
    traj.amplitudes.clone()
}

/// Amplitude directly from the eigenexpansion,
/// ⟨â(t)⟩ = Σ_j Tr[σ_j†ρ(0)] Tr[â ρ_j] e^{λ_j t}, optionally restricted to
/// one parity sector.
pub fn amplitude_expansion(
    s: &LiouvillianSpectrum,
    rho0: &CMat,
    times: &[f64],
    parity_filter: Option<i8>,
) -> Result<Vec<Complex64>> {
    validate_times(times)?;
    let a = annihilation(s.n_max)?;
    let terms: Vec<(Complex64, Complex64)> = (1..s.n_modes())
        .filter(|&j| parity_filter.map_or(true, |z| s.parities[j] == z))
        .map(|j| {
            let cj = hs_inner(&s.sigmas[j], rho0);
            let aj = trace(&a.dot(&s.rhos[j]));
            (cj * aj, s.eigenvalues[j])
        })
        .collect();
    Ok(times
        .iter()
        .map(|&t| {
            terms
                .iter()
                .map(|&(w, lam)| w * (lam * t).exp())
                .sum::<Complex64>()
        })
        .collect())
}

/// Closed-form amplitude on the metastable manifold,
/// ⟨â(t)⟩ ≈ ⟨â⟩₁ p₁(t) + ⟨â⟩₂ p₂(t).
pub fn amplitude_metastable(
    m: &MetastableManifold,
    p0: TwoStateProbabilities,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    validate_times(times)?;
    let a1 = m.amplitude_on(1)?;
    let a2 = m.amplitude_on(2)?;
    times
        .iter()
        .map(|&t| {
            let p = evolve_probabilities(p0, m.gamma1_rate, t)?;
            Ok(a1 * c64(p.p1(), 0.0) + a2 * c64(p.p2(), 0.0))
        })
        .collect()
}

/// Laboratory-frame amplitude ⟨â(t)⟩_L = e^{-iω_s t} ⟨â(t)⟩.
pub fn lab_frame_amplitude(
    rot_amplitudes: &[Complex64],
    times: &[f64],
    omega_s: f64,
) -> Result<Vec<Complex64>> {
    if rot_amplitudes.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: rot_amplitudes.len(),
        });
    }
    if omega_s < 0.0 {
        return Err(Error::InvalidParams("omega_s must be nonnegative".into()));
    }
    Ok(rot_amplitudes
        .iter()
        .zip(times)
        .map(|(amp, &t)| amp * c64(0.0, -omega_s * t).exp())
        .collect())
}

/// Logarithmically spaced time grid (plateau studies span several decades).
pub fn log_time_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && n >= 2) {
        return Err(Error::InvalidParams(format!(
            "bad log grid [{t_min}, {t_max}] x {n}"
        )));
    }
    let l0 = t_min.ln();
    let l1 = t_max.ln();
    Ok((0..n)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Uniformly spaced grid including both endpoints.
pub fn linear_time_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max > t_min && n >= 2) {
        return Err(Error::InvalidParams(format!(
            "bad linear grid [{t_min}, {t_max}] x {n}"
        )));
    }
    Ok((0..n)
        .map(|k| t_min + (t_max - t_min) * k as f64 / (n - 1) as f64)
        .collect())
}
