//! Metastable manifold: extreme metastable states, projection observables,
//! and the effective two-state dynamics.
//!
//! Above the exceptional point the slowest eigenvalue λ₁ is real and the
//! long-time state is confined to the manifold spanned by ρ_ss and ρ₁. The
//! manifold is parametrized by the extreme metastable states
//!
//! ```text
//!   μ₁ = ρ_ss + c_max ρ₁,    μ₂ = ρ_ss + c_min ρ₁,
//! ```
//!
//! with c_max/c_min the extreme eigenvalues of σ₁, and by the projection
//! observables P₁ = (σ₁ - c_min I)/Δc, P₂ = (c_max I - σ₁)/Δc with
//! Δc = c_max - c_min. The weights p_i = Tr[P_i ρ] behave as probabilities
//! and relax by a two-state process with switching rate Γ₁/2:
//!
//! ```text
//!   p₁(t) = p₁⁰ (1 + e^{-Γ₁ t})/2 + p₂⁰ (1 - e^{-Γ₁ t})/2.
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::c64;
use crate::error::{Error, Result};
use crate::fockspace::{
    annihilation, herm_residual, hs_inner, identity, max_abs, min_eigenvalue, trace, CMat,
};
use crate::liouvillian::ModelParams;
use crate::spectral::{
    extreme_eigenvalues, spectrum_at, LiouvillianSpectrum, TruncationSpec, EP_IM_TOL,
};

/// EMS positivity tolerance: metastable states are only approximately
/// positive, with corrections shrinking with the spectral gap. Violations
/// are logged, not fatal.
pub const TOL_META: f64 = 1e-2;

/// Probabilities of the two-state reduction; p₂ is derived so the sum is one
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoStateProbabilities {
    p1: f64,
}

impl TwoStateProbabilities {
    pub fn new(p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::OutsideManifold { p: p1 });
        }
        Ok(Self { p1 })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        1.0 - self.p1
    }
}

/// The metastable manifold of one spectrum.
#[derive(Debug, Clone)]
pub struct MetastableManifold {
    pub rho_ss: CMat,
    pub rho1: CMat,
    pub sigma1: CMat,
    pub c_max: f64,
    pub c_min: f64,
    /// Extreme metastable states.
    pub mu1: CMat,
    pub mu2: CMat,
    /// Projection observables with Tr[P_i μ_j] = δ_ij.
    pub p1_obs: CMat,
    pub p2_obs: CMat,
    /// Slowest decay rates Γ₁ ≤ Γ₂ (units of γ₁).
    pub gamma1_rate: f64,
    pub gamma2_rate: f64,
}

impl MetastableManifold {
    /// ⟨â⟩ on an EMS.
    pub fn amplitude_on(&self, which: usize) -> Result<Complex64> {
        let a = annihilation(self.rho_ss.nrows())?;
        let mu = if which == 1 { &self.mu1 } else { &self.mu2 };
        Ok(trace(&a.dot(mu)))
    }
}

/// Extract the manifold from a gauge-fixed spectrum. Requires λ₁ real
/// (η above the exceptional point).
pub fn extract_manifold(s: &LiouvillianSpectrum) -> Result<MetastableManifold> {
    let lambda1 = s.eigenvalues[1];
    if lambda1.im.abs() > EP_IM_TOL {
        return Err(Error::NotMetastable {
            im_lambda1: lambda1.im,
        });
    }
    let rho_ss = s.rho_ss().clone();
    let rho1 = s.rhos[1].clone();
    let sigma1 = s.sigmas[1].clone();
    let (c_min, c_max) = extreme_eigenvalues(&sigma1)?;
    if !(c_min <= 1e-10 && c_max >= -1e-10) {
        return Err(Error::Computation(format!(
            "sigma_1 spectrum [{c_min:.3e}, {c_max:.3e}] does not straddle zero"
        )));
    }
    let dc = c_max - c_min;
    if dc < 1e-12 {
        return Err(Error::Computation("degenerate sigma_1 spectrum".into()));
    }

    let mu1 = &rho_ss + &rho1.mapv(|z| z * c64(c_max, 0.0));
    let mu2 = &rho_ss + &rho1.mapv(|z| z * c64(c_min, 0.0));
    let eye = identity(rho_ss.nrows());
    let p1_obs = (&sigma1 - &eye.mapv(|z| z * c64(c_min, 0.0))).mapv(|z| z / c64(dc, 0.0));
    let p2_obs = (&eye.mapv(|z| z * c64(c_max, 0.0)) - &sigma1).mapv(|z| z / c64(dc, 0.0));

    let sym = (c_max + c_min).abs() / c_max.max(1e-300);
    if sym > 1e-3 {
        log::warn!("EMS coefficients not symmetric: |c_max + c_min|/c_max = {sym:.2e}");
    }
    for (name, mu) in [("mu1", &mu1), ("mu2", &mu2)] {
        let min_eig = min_eigenvalue(mu)?;
        if min_eig < -TOL_META {
            log::warn!("{name} minimum eigenvalue {min_eig:.3e} below -{TOL_META:.0e}");
        }
    }
    for p_obs in [&p1_obs, &p2_obs] {
        let min_eig = min_eigenvalue(p_obs)?;
        if min_eig < -1e-8 {
            return Err(Error::Computation(format!(
                "projection observable indefinite: min eigenvalue {min_eig:.3e}"
            )));
        }
    }

    Ok(MetastableManifold {
        rho_ss,
        rho1,
        sigma1,
        c_max,
        c_min,
        mu1,
        mu2,
        p1_obs,
        p2_obs,
        gamma1_rate: s.eigenvalues[1].re.abs(),
        gamma2_rate: s.eigenvalues[2].re.abs(),
    })
}

/// Project a state onto the manifold weights p_i = Tr[P_i ρ].
///
/// The weights must be real within 1e-10 and inside [0, 1] up to 1e-6 slack
/// (clamped); larger violations are errors.
pub fn project_onto_manifold(
    m: &MetastableManifold,
    rho: &CMat,
) -> Result<TwoStateProbabilities> {
    if rho.nrows() != m.rho_ss.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.rho_ss.nrows(),
            got: rho.nrows(),
        });
    }
    let p1c = hs_inner(&m.p1_obs, rho);
    if p1c.im.abs() > 1e-10 {
        return Err(Error::ProjectionNotReal { im: p1c.im });
    }
    let p1 = p1c.re;
    if !(-1e-6..=1.0 + 1e-6).contains(&p1) {
        return Err(Error::OutsideManifold { p: p1 });
    }
    TwoStateProbabilities::new(p1.clamp(0.0, 1.0))
}

/// Closed-form two-state relaxation with switching rate Γ₁/2.
pub fn evolve_probabilities(
    p0: TwoStateProbabilities,
    gamma1_rate: f64,
    t: f64,
) -> Result<TwoStateProbabilities> {
    if t < 0.0 {
        return Err(Error::InvalidParams(format!("negative time {t}")));
    }
    let decay = (-gamma1_rate * t).exp();
    let p1 = 0.5 * p0.p1() * (1.0 + decay) + 0.5 * p0.p2() * (1.0 - decay);
    TwoStateProbabilities::new(p1.clamp(0.0, 1.0))
}

/// State on the manifold, p₁μ₁ + p₂μ₂.
pub fn reconstruct_state(m: &MetastableManifold, p: TwoStateProbabilities) -> CMat {
    m.mu1.mapv(|z| z * c64(p.p1(), 0.0)) + m.mu2.mapv(|z| z * c64(p.p2(), 0.0))
}

/// Trace distance Tr|A - B|/2 of operators with Hermitian difference.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let diff = a - b;
    let scale = max_abs(&diff);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if herm_residual(&diff) > 1e-8 * scale.max(1.0) {
        return Err(Error::InvalidParams(
            "trace distance needs a Hermitian difference".into(),
        ));
    }
    Ok(0.5 * crate::fockspace::trace_norm(&diff)?)
}

/// One cell of the EMS-approximation map, log₁₀ D(μ₁, ρ_ss + ρ₁).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmsPoint {
    pub gamma2_ratio: f64,
    pub eta_ratio: f64,
    /// None below the exceptional point (map is masked there).
    pub log10_trace_distance: Option<f64>,
    pub log10_gap_ratio: Option<f64>,
    pub n_max_used: usize,
}

#[derive(Debug, Clone)]
pub struct EmsMapResult {
    pub gamma2_ratios: Vec<f64>,
    pub eta_ratios: Vec<f64>,
    pub delta_ratio: f64,
    pub cells: Vec<Option<EmsPoint>>,
    pub failures: Vec<crate::spectral::GapFailure>,
}

impl EmsMapResult {
    pub fn cell(&self, ig2: usize, ie: usize) -> Option<&EmsPoint> {
        self.cells[ig2 * self.eta_ratios.len() + ie].as_ref()
    }

    pub fn points(&self) -> impl Iterator<Item = &EmsPoint> {
        self.cells.iter().flatten()
    }
}

/// Distance between the exact EMS and its c = 1 approximation at one point.
pub fn ems_point(p: &ModelParams, trunc: TruncationSpec) -> Result<EmsPoint> {
    let n_max = trunc.resolve(p)?;
    let q = p.normalized().with_n_max(n_max);
    let s = spectrum_at(&q)?;
    if s.eigenvalues[1].im.abs() > EP_IM_TOL {
        // Below the EP the manifold is undefined; mark not-applicable.
        return Ok(EmsPoint {
            gamma2_ratio: q.gamma2,
            eta_ratio: q.eta,
            log10_trace_distance: None,
            log10_gap_ratio: None,
            n_max_used: n_max,
        });
    }
    let m = extract_manifold(&s)?;
    let mu1_approx = &m.rho_ss + &m.rho1;
    let d = trace_distance(&m.mu1, &mu1_approx)?;
    Ok(EmsPoint {
        gamma2_ratio: q.gamma2,
        eta_ratio: q.eta,
        log10_trace_distance: Some(d.max(1e-300).log10()),
        log10_gap_ratio: Some((m.gamma1_rate / m.gamma2_rate).log10()),
        n_max_used: n_max,
    })
}

/// Lattice sweep of the EMS-approximation quality; points below the EP carry
/// not-applicable markers, per-point failures are recorded.
pub fn ems_approximation_map(
    gamma2_ratios: &[f64],
    eta_ratios: &[f64],
    delta_ratio: f64,
    trunc: TruncationSpec,
) -> Result<EmsMapResult> {
    if gamma2_ratios.is_empty() || eta_ratios.is_empty() {
        return Err(Error::Usage("empty sweep lattice".into()));
    }
    let n_eta = eta_ratios.len();
    let total = gamma2_ratios.len() * n_eta;
    let cells: Vec<std::result::Result<EmsPoint, String>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let g2 = gamma2_ratios[flat / n_eta];
            let eta = eta_ratios[flat % n_eta];
            ModelParams::new(1.0, g2, eta, delta_ratio, 12)
                .and_then(|p| ems_point(&p, trunc))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut out_cells = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for (flat, cell) in cells.into_iter().enumerate() {
        match cell {
            Ok(p) => out_cells.push(Some(p)),
            Err(message) => {
                failures.push(crate::spectral::GapFailure {
                    gamma2_ratio: gamma2_ratios[flat / n_eta],
                    eta_ratio: eta_ratios[flat % n_eta],
                    message,
                });
                out_cells.push(None);
            }
        }
    }
    Ok(EmsMapResult {
        gamma2_ratios: gamma2_ratios.to_vec(),
        eta_ratios: eta_ratios.to_vec(),
        delta_ratio,
        cells: out_cells,
        failures,
    })
}

/// JSON-serializable manifold summary.
#[derive(Debug, Clone, Serialize)]
pub struct ManifoldSummary {
    pub lambda1: (f64, f64),
    pub lambda2: (f64, f64),
    pub c_max: f64,
    pub c_min: f64,
    pub amplitude_mu1: (f64, f64),
    pub mu1_min_eigenvalue: f64,
    pub mu2_min_eigenvalue: f64,
    pub trace_distance_mu1_approx: f64,
}

pub fn manifold_summary(s: &LiouvillianSpectrum, m: &MetastableManifold) -> Result<ManifoldSummary> {
    let a1 = m.amplitude_on(1)?;
    let mu1_approx = &m.rho_ss + &m.rho1;
    Ok(ManifoldSummary {
        lambda1: (s.eigenvalues[1].re, s.eigenvalues[1].im),
        lambda2: (s.eigenvalues[2].re, s.eigenvalues[2].im),
        c_max: m.c_max,
        c_min: m.c_min,
        amplitude_mu1: (a1.re, a1.im),
        mu1_min_eigenvalue: min_eigenvalue(&m.mu1)?,
        mu2_min_eigenvalue: min_eigenvalue(&m.mu2)?,
        trace_distance_mu1_approx: trace_distance(&m.mu1, &mu1_approx)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{adjoint, fock_projector};
    use crate::liouvillian::parity_transform;
    use proptest::prelude::*;

    fn metastable_point() -> (LiouvillianSpectrum, MetastableManifold) {
        let p = ModelParams::new(1.0, 1.0, 1.5, 0.1, 21).unwrap();
        let s = spectrum_at(&p).unwrap();
        let m = extract_manifold(&s).unwrap();
        (s, m)
    }

    #[test]
    fn manifold_structure() {
        let (_, m) = metastable_point();
        // c_min <= 0 <= c_max, near-symmetric around zero, and close to one
        // in the unit-trace-norm gauge.
        assert!(m.c_min <= 0.0 && m.c_max >= 0.0);
        assert!((m.c_max + m.c_min).abs() / m.c_max < 1e-3);
        assert!((m.c_max - 1.0).abs() < 0.05, "c_max = {}", m.c_max);
        // mu1 + mu2 = 2 rho_ss.
        let sum = &m.mu1 + &m.mu2;
        let twice = m.rho_ss.mapv(|z| z * c64(2.0, 0.0));
        assert!(max_abs(&(&sum - &twice)) < 1e-10);
        // P1 + P2 = identity; biorthogonality to the EMSs.
        let psum = &m.p1_obs + &m.p2_obs;
        assert!(max_abs(&(&psum - &identity(m.rho_ss.nrows()))) < 1e-10);
        for (i, p_obs) in [&m.p1_obs, &m.p2_obs].into_iter().enumerate() {
            for (j, mu) in [&m.mu1, &m.mu2].into_iter().enumerate() {
                let val = hs_inner(p_obs, mu);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((val - c64(expect, 0.0)).norm() < 1e-6);
            }
        }
        // EMSs: unit trace, Hermitian, approximately positive (corrections
        // scale with the spectral gap; extraction logs, never rejects).
        for mu in [&m.mu1, &m.mu2] {
            assert!((trace(mu) - c64(1.0, 0.0)).norm() < 1e-8);
            assert!(herm_residual(mu) < 1e-10);
            assert!(min_eigenvalue(mu).unwrap() > -5.0 * TOL_META);
        }
        // The c = 1 approximation is close in trace distance here.
        let mu1_approx = &m.rho_ss + &m.rho1;
        assert!(trace_distance(&m.mu1, &mu1_approx).unwrap() < 0.05);
    }

    #[test]
    fn parity_swaps_the_ems_pair() {
        let (_, m) = metastable_point();
        let z_mu1 = parity_transform(&m.mu1).unwrap();
        let z_mu2 = parity_transform(&m.mu2).unwrap();
        assert!(max_abs(&(&z_mu1 - &m.mu2)) < 1e-8);
        assert!(max_abs(&(&z_mu2 - &m.mu1)) < 1e-8);
    }

    #[test]
    fn ems_amplitudes_are_opposite_and_gauge_fixed() {
        let (_, m) = metastable_point();
        let a1 = m.amplitude_on(1).unwrap();
        let a2 = m.amplitude_on(2).unwrap();
        assert!((a1 + a2).norm() < 1e-8);
        assert!(a1.norm() > 0.1);
        // Sign convention: Im Tr[a rho_1] > 0 picks mu1.
        assert!(a1.im > 0.0);
    }

    #[test]
    fn symmetric_observables_blind_to_the_slow_mode() {
        let (s, m) = metastable_point();
        let dim = m.rho_ss.nrows();
        let a = annihilation(dim).unwrap();
        let ad = adjoint(&a);
        let n_op = ad.dot(&a);
        // Tr[n mu_1] = Tr[n mu_2].
        let n1 = trace(&n_op.dot(&m.mu1));
        let n2 = trace(&n_op.dot(&m.mu2));
        assert!((n1 - n2).norm() < 1e-8);
        // Even moments of rho_1 vanish identically.
        for op in [n_op.clone(), a.dot(&a), n_op.dot(&n_op)] {
            assert!(trace(&op.dot(&s.rhos[1])).norm() < 1e-8);
        }
        // Odd moments flip sign between the EMSs.
        for op in [a.clone(), ad.clone(), ad.dot(&ad).dot(&a)] {
            let o1 = trace(&op.dot(&m.mu1));
            let o2 = trace(&op.dot(&m.mu2));
            assert!((o1 + o2).norm() < 1e-8);
        }
    }

    #[test]
    fn projection_of_named_states() {
        let (_, m) = metastable_point();
        let p_mu1 = project_onto_manifold(&m, &m.mu1).unwrap();
        assert!((p_mu1.p1() - 1.0).abs() < 1e-6);
        assert!(p_mu1.p2().abs() < 1e-6);
        let p_ss = project_onto_manifold(&m, &m.rho_ss).unwrap();
        assert!((p_ss.p1() - 0.5).abs() < 1e-8);
        assert!((p_ss.p2() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn projection_rejects_out_of_range() {
        let (_, m) = metastable_point();
        // A state far outside the manifold: amplify rho_1 artificially.
        let bogus = &m.rho_ss + &m.rho1.mapv(|z| z * c64(10.0 * m.c_max, 0.0));
        let res = project_onto_manifold(&m, &bogus);
        assert!(matches!(res, Err(Error::OutsideManifold { .. })));
    }

    #[test]
    fn two_state_relaxation() {
        let p0 = TwoStateProbabilities::new(1.0).unwrap();
        let same = evolve_probabilities(p0, 0.3, 0.0).unwrap();
        assert_eq!(same.p1(), 1.0);
        let late = evolve_probabilities(p0, 0.3, 100.0 / 0.3).unwrap();
        assert!((late.p1() - 0.5).abs() < 1e-10);
        let half = evolve_probabilities(p0, 0.3, 2.0f64.ln() / 0.3).unwrap();
        assert!((half.p1() - 0.75).abs() < 1e-12);
        assert!(evolve_probabilities(p0, 0.3, -1.0).is_err());
    }

    #[test]
    fn reconstruction_round_trip() {
        let (_, m) = metastable_point();
        let even = reconstruct_state(&m, TwoStateProbabilities::new(0.5).unwrap());
        assert!(max_abs(&(&even - &m.rho_ss)) < 1e-10);
        let pure1 = reconstruct_state(&m, TwoStateProbabilities::new(1.0).unwrap());
        assert!(max_abs(&(&pure1 - &m.mu1)) < 1e-12);
        let back = reconstruct_state(&m, project_onto_manifold(&m, &m.mu2).unwrap());
        assert!(max_abs(&(&back - &m.mu2)) < 1e-6);
    }

    #[test]
    fn trace_distance_basics() {
        let (_, m) = metastable_point();
        assert_eq!(trace_distance(&m.mu1, &m.mu1).unwrap(), 0.0);
        let dim = m.rho_ss.nrows();
        let p0 = fock_projector(dim, 0).unwrap();
        let p1 = fock_projector(dim, 1).unwrap();
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-12);
        let d12 = trace_distance(&m.mu1, &m.mu2).unwrap();
        let d21 = trace_distance(&m.mu2, &m.mu1).unwrap();
        assert!((d12 - d21).abs() < 1e-12);
    }

    #[test]
    fn rejects_below_ep() {
        let p = ModelParams::new(1.0, 0.1, 0.06, 0.1, 20).unwrap();
        let s = spectrum_at(&p).unwrap();
        assert!(matches!(
            extract_manifold(&s),
            Err(Error::NotMetastable { .. })
        ));
    }

    proptest! {
        #[test]
        fn probability_evolution_invariants(p1 in 0.0f64..=1.0, t in 0.0f64..100.0, rate in 1e-3f64..1.0) {
            let p0 = TwoStateProbabilities::new(p1).unwrap();
            let pt = evolve_probabilities(p0, rate, t).unwrap();
            prop_assert!((pt.p1() + pt.p2() - 1.0).abs() == 0.0);
            prop_assert!((0.0..=1.0).contains(&pt.p1()));
            // Imbalance decays monotonically.
            let imb0 = (p0.p1() - 0.5).abs();
            let imbt = (pt.p1() - 0.5).abs();
            prop_assert!(imbt <= imb0 + 1e-15);
        }
    }
}
