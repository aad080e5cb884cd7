//! Liouvillian eigendecomposition, gauge fixing, exceptional points and
//! spectral-gap maps.
//!
//! The generator is diagonalized densely: `L ρ_j = λ_j ρ_j` and
//! `L† σ_j = λ_j* σ_j`, with the bases biorthonormalized through the
//! Hilbert-Schmidt product, `Tr[σ_j† ρ_k] = δ_jk`. Eigenvalues are sorted by
//! non-increasing real part (ties by descending imaginary part, then input
//! order), so `λ₀ = 0` comes first, `ρ₀` normalizes to the stationary state
//! and `σ₀` is the identity.
//!
//! Gauge conventions for real eigenvalues: eigenmatrices are stored
//! Hermitian with ρ_j normalized to unit trace norm (the free rescaling of a
//! biorthogonal pair is split so that Tr|ρ_j| = 1, which places the extreme
//! eigenvalues of σ₁ near ±1 in the metastable regime), and the overall sign
//! of the pair (ρ₁, σ₁) is fixed so that the largest eigenvalue of σ₁
//! dominates, `c_max ≥ |c_min|`; the residual sign freedom in the symmetric
//! case `c_min = -c_max` is resolved by requiring `Im Tr[â ρ₁] > 0`. This
//! keeps metastable-state labels reproducible across runs and truncations.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals, Eigh, Inverse, Solve, UPLO};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::fockspace::{
    adjoint, annihilation, devectorize, hermitian_part, hs_inner, identity,
    max_abs, trace, vectorize, CMat, CVec, SuperOp,
};
use crate::liouvillian::{build_liouvillian, parity_transform, ModelParams};

/// |Im λ₁| below this (in units of γ₁) counts as real; also the
/// exceptional-point detection threshold.
pub const EP_IM_TOL: f64 = 1e-8;
/// Modes whose biorthogonal normalizer falls below this are treated as
/// defective (spectral singularity).
pub const NORMALIZER_TOL: f64 = 1e-10;
/// Tolerance on Re λ₀ and on positive real parts.
pub const ZERO_MODE_TOL: f64 = 1e-9;
/// Truncation cap; larger systems are outside the intended operating range.
pub const MAX_N_MAX: usize = 50;

/// Full eigensystem of a Liouvillian.
#[derive(Debug, Clone)]
pub struct LiouvillianSpectrum {
    pub n_max: usize,
    /// Sorted eigenvalues, λ₀ first.
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenmatrices; `rhos[0]` is the stationary state.
    pub rhos: Vec<CMat>,
    /// Left eigenmatrices; `sigmas[0]` is the identity.
    pub sigmas: Vec<CMat>,
    /// Parity sector of each mode, ±1.
    pub parities: Vec<i8>,
    /// Smallest biorthogonal normalizer encountered (1 is perfectly
    /// conditioned; small values flag proximity to an exceptional point).
    pub min_normalizer: f64,
}

impl LiouvillianSpectrum {
    pub fn rho_ss(&self) -> &CMat {
        &self.rhos[0]
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// (Γ_j, ν_j) of one mode.
    pub fn rate_frequency(&self, j: usize) -> (f64, f64) {
        (self.eigenvalues[j].re.abs(), self.eigenvalues[j].im)
    }
}

/// Decay rates and frequencies (Γ_j, ν_j) = (|Re λ_j|, Im λ_j), in sort
/// order.
pub fn decay_rates(s: &LiouvillianSpectrum) -> Vec<(f64, f64)> {
    s.eigenvalues.iter().map(|l| (l.re.abs(), l.im)).collect()
}

fn sort_order(vals: &Array1<Complex64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| {
        vals[b]
            .re
            .total_cmp(&vals[a].re)
            .then(vals[b].im.total_cmp(&vals[a].im))
            .then(a.cmp(&b))
    });
    // Real parts of a conjugate pair agree only to eigensolver noise; regroup
    // near-ties so descending Im decides deterministically.
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && (vals[idx[end]].re - vals[idx[end - 1]].re).abs() <= 1e-9 {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| {
            vals[b].im.total_cmp(&vals[a].im).then(a.cmp(&b))
        });
        start = end;
    }
    idx
}

fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Parity weights (even, odd) of a vectorized operator: the basis element
/// |m⟩⟨n| is even when m+n is.
fn parity_weights(v: &CVec, dim: usize) -> (f64, f64) {
    let mut even = 0.0;
    let mut odd = 0.0;
    for (k, z) in v.iter().enumerate() {
        let row = k % dim;
        let col = k / dim;
        if (row + col) % 2 == 0 {
            even += z.norm_sqr();
        } else {
            odd += z.norm_sqr();
        }
    }
    (even.sqrt(), odd.sqrt())
}

/// Rotate a (near-)eigenmatrix of a real eigenvalue by the phase that makes
/// it Hermitian, then symmetrize.
fn hermitize(m: &CMat) -> CMat {
    let norm_sq = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if norm_sq == 0.0 {
        return m.clone();
    }
    let c = hs_inner(m, &adjoint(m)) / norm_sq;
    let phase = c64(0.0, 0.5 * c.arg()).exp();
    hermitian_part(&m.mapv(|z| z * phase))
}

/// Dense eigendecomposition of a Liouvillian built by the `liouvillian`
/// module.
///
/// Fails with [`Error::NearDefective`] when a biorthogonal normalizer is
/// smaller than [`NORMALIZER_TOL`], which happens close to exceptional
/// points where eigenmatrices coalesce.
pub fn eigendecompose(l: &SuperOp) -> Result<LiouvillianSpectrum> {
    let dim2 = l.nrows();
    if l.ncols() != dim2 {
        return Err(Error::DimensionMismatch {
            expected: dim2,
            got: l.ncols(),
        });
    }
    let dim = (dim2 as f64).sqrt().round() as usize;
    if dim * dim != dim2 {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: dim2,
        });
    }

    // The backend's eigenvector conventions are layout dependent.
    let l_std: SuperOp = l.as_standard_layout().to_owned();
    let (vals, vecs) = l_std.eig()?;
    let order = sort_order(&vals);

    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| vals[i]).collect();
    if eigenvalues[0].re.abs() > ZERO_MODE_TOL {
        return Err(Error::Computation(format!(
            "zero mode has Re lambda_0 = {:.3e}",
            eigenvalues[0].re
        )));
    }
    if eigenvalues.iter().any(|l| l.re > ZERO_MODE_TOL) {
        return Err(Error::Computation("growing mode in the spectrum".into()));
    }

    let mut v_sorted = Array2::zeros((dim2, dim2));
    for (j, &i) in order.iter().enumerate() {
        v_sorted.column_mut(j).assign(&vecs.column(i));
    }
    let w = v_sorted.inv()?;

    // Inverse eigenvalue condition numbers: with unit-norm right vectors the
    // biorthogonal normalizer before rescaling is 1/(|w_j| |v_j|).
    let mut min_normalizer = f64::INFINITY;
    for j in 0..dim2 {
        let nj = 1.0
            / (vec_norm(&w.row(j).to_owned()) * vec_norm(&v_sorted.column(j).to_owned()));
        if nj < min_normalizer {
            min_normalizer = nj;
        }
        if nj < NORMALIZER_TOL {
            return Err(Error::NearDefective {
                normalizer: nj,
                mode: j,
            });
        }
    }

    let mut rhos: Vec<CMat> = Vec::with_capacity(dim2);
    let mut sigmas: Vec<CMat> = Vec::with_capacity(dim2);

    // Mode 0: stationary state and identity.
    let rho0 = devectorize(&v_sorted.column(0).to_owned())?;
    let tr0 = trace(&rho0);
    if tr0.norm() < 1e-12 {
        return Err(Error::Computation("zero-mode has vanishing trace".into()));
    }
    let rho_ss = hermitian_part(&rho0.mapv(|z| z / tr0));
    rhos.push(rho_ss);
    sigmas.push(identity(dim));

    for j in 1..dim2 {
        let mut rho_j = devectorize(&v_sorted.column(j).to_owned())?;
        let mut sigma_j = devectorize(&w.row(j).mapv(|z| z.conj()))?;
        if eigenvalues[j].im.abs() <= EP_IM_TOL {
            rho_j = hermitize(&rho_j);
            sigma_j = hermitize(&sigma_j);
            let n = hs_inner(&sigma_j, &rho_j);
            if n.norm() < NORMALIZER_TOL {
                return Err(Error::NearDefective {
                    normalizer: n.norm(),
                    mode: j,
                });
            }
            sigma_j = sigma_j.mapv(|z| z / c64(n.re, 0.0));
            // Split the pair's free scale: unit trace norm for rho_j.
            let tn = crate::fockspace::trace_norm(&rho_j)?;
            if tn > 1e-300 {
                rho_j = rho_j.mapv(|z| z / c64(tn, 0.0));
                sigma_j = sigma_j.mapv(|z| z * c64(tn, 0.0));
            }
        }
        rhos.push(rho_j);
        sigmas.push(sigma_j);
    }

    // Sign gauge of the slowest nonzero mode when it is real.
    if dim2 > 1 && eigenvalues[1].im.abs() <= EP_IM_TOL {
        let a_op = annihilation(dim)?;
        let (c_min, c_max) = extreme_eigenvalues(&sigmas[1])?;
        let mut flip = c_max < -c_min;
        if (c_max + c_min).abs() <= 1e-6 * c_max.abs().max(-c_min) {
            // Symmetric coefficients: pin the sign through the amplitude.
            let amp = trace(&a_op.dot(&rhos[1]));
            flip = amp.im < 0.0;
        }
        if flip {
            rhos[1] = rhos[1].mapv(|z| -z);
            sigmas[1] = sigmas[1].mapv(|z| -z);
        }
    }

    let parities: Vec<i8> = (0..dim2)
        .map(|j| {
            let (even, odd) = parity_weights(&vectorize(&rhos[j]), dim);
            if even >= odd {
                1
            } else {
                -1
            }
        })
        .collect();

    Ok(LiouvillianSpectrum {
        n_max: dim,
        eigenvalues,
        rhos,
        sigmas,
        parities,
        min_normalizer,
    })
}

/// Build the generator for `p` and decompose it.
pub fn spectrum_at(p: &ModelParams) -> Result<LiouvillianSpectrum> {
    eigendecompose(&build_liouvillian(p)?)
}

/// Extreme eigenvalues (min, max) of a Hermitian operator.
pub fn extreme_eigenvalues(m: &CMat) -> Result<(f64, f64)> {
    let (vals, _) = m.eigh(UPLO::Lower)?;
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// Sorted eigenvalues without eigenvectors (cheap path for sweeps).
pub fn eigenvalues_only(l: &SuperOp) -> Result<Vec<Complex64>> {
    let vals = l.eigvals()?;
    let order = sort_order(&vals);
    Ok(order.iter().map(|&i| vals[i]).collect())
}

fn lambda_pair(p: &ModelParams) -> Result<(Complex64, Complex64)> {
    let vals = eigenvalues_only(&build_liouvillian(p)?)?;
    if vals.len() < 3 {
        return Err(Error::Computation("spectrum too small".into()));
    }
    Ok((vals[1], vals[2]))
}

/// Strict parity classification of one eigenmatrix.
///
/// Returns ±1 when `Z₂ρ = ±ρ` within a relative residual of 1e-6, and the
/// mixed-parity error otherwise (degenerate modes can mix sectors).
pub fn parity_of_mode(rho: &CMat) -> Result<i8> {
    let transformed = parity_transform(rho)?;
    let scale = max_abs(rho);
    if scale == 0.0 {
        return Err(Error::Computation("zero eigenmatrix".into()));
    }
    let even_residual = max_abs(&(&transformed - rho)) / scale;
    let odd_residual = max_abs(&(&transformed + rho)) / scale;
    if even_residual < 1e-6 {
        Ok(1)
    } else if odd_residual < 1e-6 {
        Ok(-1)
    } else {
        Err(Error::MixedParity {
            mode: 0,
            even_residual,
            odd_residual,
        })
    }
}

/// Stationary state from a dense linear solve (trace-normalization row
/// replaces the first equation). Cheaper than a full eigendecomposition;
/// used by the truncation rule.
pub fn steady_state_linear(l: &SuperOp) -> Result<CMat> {
    let dim2 = l.nrows();
    let dim = (dim2 as f64).sqrt().round() as usize;
    let mut a = l.clone();
    for k in 0..dim2 {
        a[(0, k)] = c64(0.0, 0.0);
    }
    for m in 0..dim {
        a[(0, m * dim + m)] = c64(1.0, 0.0);
    }
    let mut b = Array1::zeros(dim2);
    b[0] = c64(1.0, 0.0);
    let x = a.solve(&b)?;
    let residual = l.dot(&x).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if residual > 1e-7 {
        return Err(Error::Computation(format!(
            "steady-state solve residual {residual:.3e}"
        )));
    }
    let rho = devectorize(&x)?;
    let tr = trace(&rho);
    Ok(hermitian_part(&rho.mapv(|z| z / tr)))
}

/// Outcome of the truncation-convergence rule.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruncationChoice {
    pub n_max: usize,
    pub converged: bool,
    /// |λ₁(n) - λ₁(n-5)| at the accepted truncation.
    pub lambda1_drift: f64,
    /// Stationary population of the top five Fock levels.
    pub tail_population: f64,
}

/// Pick the Fock truncation for `p`: accept n when λ₁ moved less than
/// 1e-6 γ₁ relative to n-5 and the top five stationary populations sum below
/// 1e-8, capped at `cap` (≤ [`MAX_N_MAX`] in normal use).
pub fn choose_truncation(p: &ModelParams, cap: usize) -> Result<TruncationChoice> {
    let q = p.normalized();
    if q.gamma2 <= 0.0 {
        return Err(Error::InvalidParams(
            "truncation rule needs gamma2 > 0 (no stationary confinement otherwise)".into(),
        ));
    }
    let cap = cap.max(12);
    let n_est = 0.5 / q.gamma2 + (4.0 * q.eta * q.eta - q.delta * q.delta).max(0.0).sqrt() / q.gamma2;
    let start = ((n_est + 4.0 * n_est.sqrt() + 8.0).ceil() as usize).clamp(12, cap);

    let mut prev = lambda_pair(&q.with_n_max(start - 5))?.0;
    let mut n = start;
    loop {
        let qn = q.with_n_max(n);
        let lam1 = lambda_pair(&qn)?.0;
        let drift = (lam1 - prev).norm();
        let rho_ss = steady_state_linear(&build_liouvillian(&qn)?)?;
        let tail: f64 = (n - 5..n).map(|k| rho_ss[(k, k)].re).sum();
        if drift < 1e-6 && tail < 1e-8 {
            return Ok(TruncationChoice {
                n_max: n,
                converged: true,
                lambda1_drift: drift,
                tail_population: tail,
            });
        }
        if n >= cap {
            log::warn!(
                "truncation rule hit the cap {cap} (drift {drift:.2e}, tail {tail:.2e})"
            );
            return Ok(TruncationChoice {
                n_max: cap,
                converged: false,
                lambda1_drift: drift,
                tail_population: tail,
            });
        }
        prev = lam1;
        n = (n + 5).min(cap);
    }
}

/// Resolve a truncation request into a concrete n_max.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum TruncationSpec {
    Fixed(usize),
    Auto { cap: usize },
}

impl TruncationSpec {
    pub fn resolve(&self, p: &ModelParams) -> Result<usize> {
        match *self {
            TruncationSpec::Fixed(n) => Ok(n),
            TruncationSpec::Auto { cap } => Ok(choose_truncation(p, cap)?.n_max),
        }
    }
}

/// Bisection for the squeezing strength at which λ₁ and λ₂ collide
/// (exceptional point): below it the pair is complex conjugate, above it both
/// are real.
///
/// `eta_range` must bracket the transition; the search narrows to a relative
/// width of 1e-4 and returns the midpoint.
pub fn find_exceptional_point(p: &ModelParams, eta_range: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = eta_range;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParams(format!(
            "bad eta range [{lo}, {hi}]"
        )));
    }
    let q = p.normalized();
    let tol = EP_IM_TOL * q.gamma1;
    let im_at = |eta: f64| -> Result<f64> { Ok(lambda_pair(&q.with_eta(eta))?.0.im.abs()) };

    let im_lo = im_at(lo)?;
    let im_hi = im_at(hi)?;
    if !(im_lo > tol && im_hi <= tol) {
        return Err(Error::NoBracketing { im_lo, im_hi });
    }

    while (hi - lo) > 1e-4 * 0.5 * (hi + lo) {
        let mid = 0.5 * (lo + hi);
        if im_at(mid)? > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One cell of a spectral-gap map.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GapPoint {
    pub gamma2_ratio: f64,
    pub eta_ratio: f64,
    #[serde(rename = "Gamma1")]
    pub gamma1_rate: f64,
    #[serde(rename = "Gamma2")]
    pub gamma2_rate: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub log10_gap_ratio: f64,
    pub n_max_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapFailure {
    pub gamma2_ratio: f64,
    pub eta_ratio: f64,
    pub message: String,
}

/// Lattice sweep of the two slowest decay rates over (γ₂/γ₁, η/γ₁).
#[derive(Debug, Clone)]
pub struct GapMapResult {
    pub gamma2_ratios: Vec<f64>,
    pub eta_ratios: Vec<f64>,
    pub delta_ratio: f64,
    /// Row-major cells, index = ig2 * n_eta + ie; failed points are None.
    pub cells: Vec<Option<GapPoint>>,
    pub failures: Vec<GapFailure>,
}

impl GapMapResult {
    pub fn points(&self) -> impl Iterator<Item = &GapPoint> {
        self.cells.iter().flatten()
    }

    pub fn cell(&self, ig2: usize, ie: usize) -> Option<&GapPoint> {
        self.cells[ig2 * self.eta_ratios.len() + ie].as_ref()
    }

    /// Exceptional-point curve: per γ₂ row, the midpoint of the cell where
    /// ν₁ first vanishes.
    pub fn ep_contour(&self) -> Vec<(f64, f64)> {
        self.level_crossings(|p| {
            if p.nu1.abs() > EP_IM_TOL {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// Contour of Γ₁/Γ₂ at `level`, linearly interpolated in η per γ₂ row.
    pub fn ratio_contour(&self, level: f64) -> Vec<(f64, f64)> {
        let target = level.log10();
        let mut out = Vec::new();
        for (ig2, &g2) in self.gamma2_ratios.iter().enumerate() {
            let mut prev: Option<(f64, f64)> = None;
            for (ie, &eta) in self.eta_ratios.iter().enumerate() {
                if let Some(p) = self.cell(ig2, ie) {
                    let val = p.log10_gap_ratio;
                    if let Some((eta0, val0)) = prev {
                        if (val0 - target) * (val - target) <= 0.0 && val0 != val {
                            let t = (target - val0) / (val - val0);
                            out.push((g2, eta0 + t * (eta - eta0)));
                            break;
                        }
                    }
                    prev = Some((eta, val));
                }
            }
        }
        out
    }

    fn level_crossings(&self, f: impl Fn(&GapPoint) -> f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (ig2, &g2) in self.gamma2_ratios.iter().enumerate() {
            let mut prev: Option<(f64, f64)> = None;
            for (ie, &eta) in self.eta_ratios.iter().enumerate() {
                if let Some(p) = self.cell(ig2, ie) {
                    let val = f(p);
                    if let Some((eta0, val0)) = prev {
                        if val0 > 0.0 && val <= 0.0 {
                            out.push((g2, 0.5 * (eta0 + eta)));
                            break;
                        }
                    }
                    prev = Some((eta, val));
                }
            }
        }
        out
    }
}

/// Compute one gap-map cell.
pub fn gap_point(p: &ModelParams, trunc: TruncationSpec) -> Result<GapPoint> {
    let n_max = trunc.resolve(p)?;
    let q = p.normalized().with_n_max(n_max);
    let (l1, l2) = lambda_pair(&q)?;
    let (g1, g2r) = (l1.re.abs(), l2.re.abs());
    Ok(GapPoint {
        gamma2_ratio: q.gamma2,
        eta_ratio: q.eta,
        gamma1_rate: g1,
        gamma2_rate: g2r,
        nu1: l1.im,
        nu2: l2.im,
        log10_gap_ratio: (g1 / g2r).log10(),
        n_max_used: n_max,
    })
}

/// Sweep the (γ₂/γ₁, η/γ₁) lattice at fixed Δ/γ₁. Per-point failures are
/// recorded, not fatal.
pub fn gap_map(
    gamma2_ratios: &[f64],
    eta_ratios: &[f64],
    delta_ratio: f64,
    trunc: TruncationSpec,
) -> Result<GapMapResult> {
    if gamma2_ratios.is_empty() || eta_ratios.is_empty() {
        return Err(Error::Usage("empty sweep lattice".into()));
    }
    let n_eta = eta_ratios.len();
    let total = gamma2_ratios.len() * n_eta;
    let cells: Vec<std::result::Result<GapPoint, String>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let g2 = gamma2_ratios[flat / n_eta];
            let eta = eta_ratios[flat % n_eta];
            ModelParams::new(1.0, g2, eta, delta_ratio, 12)
                .and_then(|p| gap_point(&p, trunc))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut out_cells = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for (flat, cell) in cells.into_iter().enumerate() {
        match cell {
            Ok(p) => out_cells.push(Some(p)),
            Err(message) => {
                failures.push(GapFailure {
                    gamma2_ratio: gamma2_ratios[flat / n_eta],
                    eta_ratio: eta_ratios[flat % n_eta],
                    message,
                });
                out_cells.push(None);
            }
        }
    }
    Ok(GapMapResult {
        gamma2_ratios: gamma2_ratios.to_vec(),
        eta_ratios: eta_ratios.to_vec(),
        delta_ratio,
        cells: out_cells,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{herm_residual, DensityMatrix};
    use crate::liouvillian::apply_superop;
    use crate::sample::random_density_matrix;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(gamma2: f64, eta: f64, delta: f64, n_max: usize) -> ModelParams {
        ModelParams::new(1.0, gamma2, eta, delta, n_max).unwrap()
    }

    #[test]
    fn zero_mode_and_stationarity() {
        let p = params(0.1, 0.2, 0.1, 20);
        let l = build_liouvillian(&p).unwrap();
        let s = eigendecompose(&l).unwrap();
        assert!(s.eigenvalues[0].re.abs() < 1e-9);
        assert!((trace(s.rho_ss()) - c64(1.0, 0.0)).norm() < 1e-10);
        // The generator annihilates the stationary state.
        let residual = max_abs(&apply_superop(&l, s.rho_ss()).unwrap());
        assert!(residual < 1e-8, "L rho_ss residual {residual:.2e}");
        DensityMatrix::new(s.rho_ss().clone()).unwrap();
    }

    #[test]
    fn conjugate_pair_below_ep() {
        // gamma2/gamma1 = 0.1, delta/gamma1 = 0.1, small eta: below the EP.
        let p = params(0.1, 0.06, 0.1, 25);
        let s = eigendecompose(&build_liouvillian(&p).unwrap()).unwrap();
        let l1 = s.eigenvalues[1];
        let l2 = s.eigenvalues[2];
        assert!(l1.im.abs() > 1e-3);
        assert!((l1 - l2.conj()).norm() < 1e-9);
        assert!((l1.re - l2.re).abs() < 1e-10);
    }

    #[test]
    fn biorthonormality_and_traceless_modes() {
        let p = params(0.3, 0.3, 0.1, 10);
        let s = eigendecompose(&build_liouvillian(&p).unwrap()).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                let g = hs_inner(&s.sigmas[j], &s.rhos[k]);
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!(
                    (g - c64(expect, 0.0)).norm() < 1e-8,
                    "Gram[{j},{k}] = {g}"
                );
            }
        }
        for j in 1..s.n_modes() {
            if s.eigenvalues[j].re < -1e-12 {
                assert!(trace(&s.rhos[j]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn real_modes_stored_hermitian() {
        let p = params(0.1, 0.2, 0.1, 18);
        let s = eigendecompose(&build_liouvillian(&p).unwrap()).unwrap();
        assert!(s.eigenvalues[1].im.abs() < EP_IM_TOL);
        assert!(herm_residual(&s.rhos[1]) < 1e-9);
        assert!(herm_residual(&s.sigmas[1]) < 1e-9);
    }

    #[test]
    fn completeness_reconstructs_random_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = params(0.5, 0.4, 0.1, 8);
        let s = eigendecompose(&build_liouvillian(&p).unwrap()).unwrap();
        let rho = random_density_matrix(&mut rng, 8).into_matrix();
        let mut recon = s.rho_ss().clone();
        for j in 1..s.n_modes() {
            let cj = hs_inner(&s.sigmas[j], &rho);
            recon = recon + s.rhos[j].mapv(|z| z * cj);
        }
        assert!(max_abs(&(&recon - &rho)) < 1e-7);
    }

    #[test]
    fn spectrum_closed_under_conjugation() {
        let p = params(0.4, 0.3, 0.1, 10);
        let s = eigendecompose(&build_liouvillian(&p).unwrap()).unwrap();
        for &l in &s.eigenvalues {
            if l.im.abs() > 1e-9 {
                let partner = s
                    .eigenvalues
                    .iter()
                    .map(|&m| (m - l.conj()).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(partner < 1e-9, "no conjugate for {l}");
            }
        }
    }

    #[test]
    fn parity_block_structure_is_exact() {
        let p = params(0.7, 0.5, 0.2, 6);
        let l = build_liouvillian(&p).unwrap();
        let dim = 6;
        for r in 0..dim * dim {
            for c in 0..dim * dim {
                let pr = (r % dim + r / dim) % 2;
                let pc = (c % dim + c / dim) % 2;
                if pr != pc {
                    assert_eq!(l[(r, c)], c64(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn parity_labels_and_strict_classification() {
        let p = params(0.1, 0.2, 0.1, 16);
        let s = eigendecompose(&build_liouvillian(&p).unwrap()).unwrap();
        assert_eq!(s.parities[0], 1);
        assert_eq!(parity_of_mode(s.rho_ss()).unwrap(), 1);
        assert_eq!(s.parities[1], -1);
        assert_eq!(parity_of_mode(&s.rhos[1]).unwrap(), -1);

        let mut coh = CMat::zeros((4, 4));
        coh[(1, 0)] = c64(1.0, 0.0);
        assert_eq!(parity_of_mode(&coh).unwrap(), -1);

        let mixed = coh + identity(4);
        assert!(matches!(
            parity_of_mode(&mixed),
            Err(Error::MixedParity { .. })
        ));
    }

    #[test]
    fn decay_rates_definition() {
        let s = LiouvillianSpectrum {
            n_max: 2,
            eigenvalues: vec![c64(0.0, 0.0), c64(-0.1, 0.5)],
            rhos: vec![identity(2), identity(2)],
            sigmas: vec![identity(2), identity(2)],
            parities: vec![1, 1],
            min_normalizer: 1.0,
        };
        let rates = decay_rates(&s);
        assert_eq!(rates[0], (0.0, 0.0));
        assert!((rates[1].0 - 0.1).abs() < 1e-15);
        assert!((rates[1].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn steady_state_matches_eigendecomposition() {
        let p = params(0.2, 0.3, 0.1, 12);
        let l = build_liouvillian(&p).unwrap();
        let via_lu = steady_state_linear(&l).unwrap();
        let via_eig = eigendecompose(&l).unwrap();
        assert!(max_abs(&(&via_lu - via_eig.rho_ss())) < 1e-9);
    }

    #[test]
    fn exceptional_point_brackets_and_bisects() {
        let p = params(0.1, 0.1, 0.1, 25);
        let ep = find_exceptional_point(&p, (0.051, 0.2)).unwrap();
        assert!(ep > 0.05 && ep < 0.2, "eta_EP = {ep}");
        // Below: conjugate pair with equal rates; above: real split.
        let below = lambda_pair(&p.with_eta(0.9 * ep)).unwrap();
        assert!(below.0.im.abs() > EP_IM_TOL);
        assert!((below.0.re - below.1.re).abs() < 1e-8);
        let above = lambda_pair(&p.with_eta(1.1 * ep)).unwrap();
        assert!(above.0.im.abs() <= EP_IM_TOL);
        assert!(above.1.im.abs() <= EP_IM_TOL);

        let no_bracket = find_exceptional_point(&p, (0.1 * ep, 0.9 * ep));
        assert!(matches!(no_bracket, Err(Error::NoBracketing { .. })));
    }

    #[test]
    fn gap_map_smoke_grid() {
        let g2 = [0.5, 1.0];
        let etas = [0.05, 0.3, 0.6];
        let map = gap_map(&g2, &etas, 0.1, TruncationSpec::Fixed(14)).unwrap();
        assert_eq!(map.cells.len(), 6);
        assert!(map.failures.is_empty());
        for p in map.points() {
            assert!(p.gamma1_rate <= p.gamma2_rate + 1e-12);
        }
        // Small eta lies below the EP: ratio pinned at one.
        let below = map.cell(1, 0).unwrap();
        assert!(below.log10_gap_ratio.abs() < 1e-9);
        // Large eta sits above: ratio strictly below one.
        let above = map.cell(1, 2).unwrap();
        assert!(above.log10_gap_ratio < -0.2);
    }

    #[test]
    fn empty_lattice_is_usage_error() {
        let res = gap_map(&[], &[0.1], 0.1, TruncationSpec::Fixed(10));
        assert!(matches!(res, Err(Error::Usage(_))));
    }
}
