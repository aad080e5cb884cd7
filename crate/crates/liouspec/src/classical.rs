//! Classical (mean-field) limit and the two-state telegraph oracle.
//!
//! Factorizing moments gives the complex-amplitude flow
//!
//! ```text
//!   ∂_t α = -iΔ α + (γ₁/2) α - γ₂ |α|² α - 2η α*.
//! ```
//!
//! A single bifurcation at η_c = |Δ|/2 separates a limit cycle of fundamental
//! frequency Ω = Δ√(1 - (2η/Δ)²) from a pair of bistable fixed points
//! α± = ±R e^{iφ} with R = √(γ₁/(2γ₂) + √(4η² - Δ²)/γ₂) and
//! 2φ = π - asin(|Δ|/(2η)), so φ ∈ (π/4, π/2].
//!
//! The stochastic counterpart of the metastable reduction is a continuous
//! time telegraph process between amplitudes ±α₁ with switching rate Γ₁/2;
//! its stationary two-time correlation is C(τ) = |α₁|² e^{-Γ₁ τ}.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::c64;
use crate::error::{Error, Result};
use crate::liouvillian::ModelParams;
use crate::ode::{integrate_adaptive, OdeOptions};

/// Bistable fixed points α± = ±R e^{iφ}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassicalFixedPoints {
    pub r: f64,
    pub phi: f64,
}

impl ClassicalFixedPoints {
    pub fn alpha_plus(&self) -> Complex64 {
        c64(self.r, 0.0) * c64(0.0, self.phi).exp()
    }

    pub fn alpha_minus(&self) -> Complex64 {
        -self.alpha_plus()
    }
}

/// Classical dynamical regime at the given parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum Regime {
    /// η < η_c: limit cycle with fundamental frequency Ω.
    LimitCycle { omega: f64 },
    /// η > η_c: two bistable locked phases.
    Bistable(ClassicalFixedPoints),
    /// η = η_c within floating-point resolution.
    Critical,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeInfo {
    pub eta_c: f64,
    pub regime: Regime,
}

/// Mean-field right-hand side, evaluated with the parameters as given.
pub fn mean_field_rhs(alpha: Complex64, p: &ModelParams) -> Complex64 {
    -c64(0.0, p.delta) * alpha + c64(0.5 * p.gamma1, 0.0) * alpha
        - c64(p.gamma2 * alpha.norm_sqr(), 0.0) * alpha
        - c64(2.0 * p.eta, 0.0) * alpha.conj()
}

/// Critical point η_c = |Δ|/2 and the attractor on either side.
pub fn classify_regime(p: &ModelParams) -> Result<RegimeInfo> {
    p.validate()?;
    let q = p.normalized();
    let eta_c = 0.5 * q.delta.abs();
    let tol = 1e-12 * (1.0 + eta_c);
    let regime = if (q.eta - eta_c).abs() <= tol {
        Regime::Critical
    } else if q.eta < eta_c {
        let ratio = 2.0 * q.eta / q.delta;
        Regime::LimitCycle {
            omega: q.delta * (1.0 - ratio * ratio).sqrt(),
        }
    } else {
        if q.gamma2 <= 0.0 {
            return Err(Error::InvalidParams(
                "bistable amplitudes need gamma2 > 0".into(),
            ));
        }
        let r = (0.5 / q.gamma2 + (4.0 * q.eta * q.eta - q.delta * q.delta).sqrt() / q.gamma2)
            .sqrt();
        let phi = 0.5 * (std::f64::consts::PI - (q.delta.abs() / (2.0 * q.eta)).asin());
        Regime::Bistable(ClassicalFixedPoints { r, phi })
    };
    Ok(RegimeInfo { eta_c, regime })
}

/// Adaptive integration of the mean-field flow; diverging trajectories
/// (|α| > 10³) abort.
pub fn integrate_mean_field(
    alpha0: Complex64,
    p: &ModelParams,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    p.validate()?;
    if !alpha0.is_finite() {
        return Err(Error::InvalidParams("non-finite initial amplitude".into()));
    }
    let q = p.normalized();
    integrate_adaptive(
        |a: &Complex64| mean_field_rhs(*a, &q),
        &alpha0,
        times,
        &OdeOptions {
            tol_per_unit_time: 1e-10,
            max_norm: Some(1e3),
        },
    )
}

/// Mean period of the asymptotic orbit from upward zero crossings of Re α.
/// Returns None when fewer than two crossings are found.
pub fn period_from_zero_crossings(times: &[f64], series: &[Complex64]) -> Option<f64> {
    let mut crossings = Vec::new();
    for k in 1..series.len() {
        let (y0, y1) = (series[k - 1].re, series[k].re);
        if y0 < 0.0 && y1 >= 0.0 {
            let t = times[k - 1] + (times[k] - times[k - 1]) * (-y0) / (y1 - y0);
            crossings.push(t);
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings.last().unwrap() - crossings.first().unwrap();
    Some(span / (crossings.len() - 1) as f64)
}

/// Two-state telegraph process between ±α₁ with switching rate Γ₁/2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwoStateTelegraph {
    pub alpha1: (f64, f64),
    /// Switching rate Γ₁/2 (each state flips at this rate).
    pub switch_rate: f64,
}

impl TwoStateTelegraph {
    pub fn new(alpha1: Complex64, switch_rate: f64) -> Result<Self> {
        if !(switch_rate > 0.0 && switch_rate.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "switch rate {switch_rate} must be positive"
            )));
        }
        Ok(Self {
            alpha1: (alpha1.re, alpha1.im),
            switch_rate,
        })
    }

    pub fn alpha1_c(&self) -> Complex64 {
        c64(self.alpha1.0, self.alpha1.1)
    }

    pub fn alpha2_c(&self) -> Complex64 {
        -self.alpha1_c()
    }

    /// Relaxation rate Γ₁ of the occupation imbalance.
    pub fn gamma1_rate(&self) -> f64 {
        2.0 * self.switch_rate
    }
}

/// Closed forms: mean ᾱ(t) = Σ_j α_j p_j(t) from initial weight `p1_0` on
/// state 1, and stationary correlation C(τ) = |α₁|² e^{-Γ₁τ}.
#[derive(Debug, Clone)]
pub struct TelegraphStats {
    pub taus: Vec<f64>,
    pub mean: Vec<Complex64>,
    pub correlation: Vec<Complex64>,
}

pub fn telegraph_statistics(tg: &TwoStateTelegraph, p1_0: f64, taus: &[f64]) -> Result<TelegraphStats> {
    if !(0.0..=1.0).contains(&p1_0) {
        return Err(Error::OutsideManifold { p: p1_0 });
    }
    let gamma1 = tg.gamma1_rate();
    let alpha1 = tg.alpha1_c();
    let mean = taus
        .iter()
        .map(|&t| alpha1 * c64((2.0 * p1_0 - 1.0) * (-gamma1 * t).exp(), 0.0))
        .collect();
    let correlation = taus
        .iter()
        .map(|&t| c64(alpha1.norm_sqr() * (-gamma1 * t).exp(), 0.0))
        .collect();
    Ok(TelegraphStats {
        taus: taus.to_vec(),
        mean,
        correlation,
    })
}

/// Monte Carlo estimate of the telegraph mean and stationary correlation.
#[derive(Debug, Clone, Serialize)]
pub struct TelegraphEmpirical {
    pub taus: Vec<f64>,
    /// Ensemble mean amplitude from all paths started in state 1 at t = 0.
    pub mean: Vec<(f64, f64)>,
    /// Stationary correlation estimate, sampled after a burn-in of half the
    /// horizon.
    pub correlation: Vec<f64>,
    pub correlation_stderr: Vec<f64>,
    /// Fraction of paths in each state at the horizon.
    pub occupancy: (f64, f64),
    pub n_paths: usize,
}

struct PathSample {
    states_at_taus: Vec<bool>,
    state_at_ref: bool,
    states_at_ref_plus: Vec<bool>,
    state_at_horizon: bool,
}

fn state_at(jumps: &[f64], t: f64) -> bool {
    // Paths start in state 1 (true); parity of jumps before t flips it.
    let flips = jumps.partition_point(|&j| j <= t);
    flips % 2 == 0
}

/// Continuous-time simulation with exact exponential holding times of rate
/// Γ₁/2 per state. Fully reproducible: path k uses stream k of the seeded
/// generator, and reductions run in fixed path order.
pub fn telegraph_monte_carlo(
    tg: &TwoStateTelegraph,
    n_paths: usize,
    horizon: f64,
    seed: u64,
) -> Result<TelegraphEmpirical> {
    if n_paths < 1000 {
        return Err(Error::InvalidParams(format!(
            "need at least 10^3 paths, got {n_paths}"
        )));
    }
    let gamma1 = tg.gamma1_rate();
    if !(horizon.is_finite() && horizon * gamma1 >= 12.0) {
        return Err(Error::InvalidParams(format!(
            "invalid horizon {horizon}: need at least 12/Gamma_1"
        )));
    }

    let t_ref = 0.5 * horizon;
    let tau_max = 0.25 * horizon;
    let n_tau = 64;
    let taus: Vec<f64> = (0..n_tau)
        .map(|k| tau_max * k as f64 / (n_tau - 1) as f64)
        .collect();

    let samples: Vec<PathSample> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path as u64);
            let mut jumps = Vec::new();
            let mut t = 0.0;
            loop {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                t += -u.ln() / tg.switch_rate;
                if t > horizon {
                    break;
                }
                jumps.push(t);
            }
            PathSample {
                states_at_taus: taus.iter().map(|&tau| state_at(&jumps, tau)).collect(),
                state_at_ref: state_at(&jumps, t_ref),
                states_at_ref_plus: taus.iter().map(|&tau| state_at(&jumps, t_ref + tau)).collect(),
                state_at_horizon: state_at(&jumps, horizon),
            }
        })
        .collect();

    let alpha1 = tg.alpha1_c();
    let amp_sq = alpha1.norm_sqr();
    let n = n_paths as f64;

    let mut mean = vec![c64(0.0, 0.0); n_tau];
    let mut corr_sum = vec![0.0f64; n_tau];
    let mut corr_sq_sum = vec![0.0f64; n_tau];
    let mut occupancy1 = 0.0f64;
    for s in &samples {
        for (k, &up) in s.states_at_taus.iter().enumerate() {
            mean[k] += if up { alpha1 } else { -alpha1 };
        }
        for (k, &up_later) in s.states_at_ref_plus.iter().enumerate() {
            let val = if up_later == s.state_at_ref { amp_sq } else { -amp_sq };
            corr_sum[k] += val;
            corr_sq_sum[k] += val * val;
        }
        if s.state_at_horizon {
            occupancy1 += 1.0;
        }
    }

    let mean: Vec<(f64, f64)> = mean.iter().map(|z| (z.re / n, z.im / n)).collect();
    let correlation: Vec<f64> = corr_sum.iter().map(|v| v / n).collect();
    let correlation_stderr: Vec<f64> = corr_sum
        .iter()
        .zip(&corr_sq_sum)
        .map(|(&s1, &s2)| {
            let m = s1 / n;
            ((s2 / n - m * m).max(0.0) / n).sqrt()
        })
        .collect();

    Ok(TelegraphEmpirical {
        taus,
        mean,
        correlation,
        correlation_stderr,
        occupancy: (occupancy1 / n, 1.0 - occupancy1 / n),
        n_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma2: f64, eta: f64, delta: f64) -> ModelParams {
        ModelParams::new(1.0, gamma2, eta, delta, 10).unwrap()
    }

    #[test]
    fn origin_and_fixed_points_are_stationary() {
        let p = params(0.1, 0.2, 0.1);
        assert_eq!(mean_field_rhs(c64(0.0, 0.0), &p), c64(0.0, 0.0));
        let info = classify_regime(&p).unwrap();
        let Regime::Bistable(fp) = info.regime else {
            panic!("expected bistable regime");
        };
        for alpha in [fp.alpha_plus(), fp.alpha_minus()] {
            assert!(mean_field_rhs(alpha, &p).norm() < 1e-10);
        }
    }

    #[test]
    fn pure_gain_rhs() {
        let p = ModelParams::new(1.0, 0.0, 0.0, 0.0, 10).unwrap();
        let rhs = mean_field_rhs(c64(1.0, 0.0), &p);
        assert!((rhs - c64(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn critical_point_and_limit_cycle_frequency() {
        let info = classify_regime(&params(0.1, 0.0, 0.1)).unwrap();
        assert!((info.eta_c - 0.05).abs() < 1e-15);
        let Regime::LimitCycle { omega } = info.regime else {
            panic!("expected limit cycle at eta = 0");
        };
        assert!((omega - 0.1).abs() < 1e-15);

        let at_crit = classify_regime(&params(0.1, 0.05, 0.1)).unwrap();
        assert!(matches!(at_crit.regime, Regime::Critical));
    }

    #[test]
    fn fixed_point_closed_forms() {
        let info = classify_regime(&params(0.1, 0.2, 0.1)).unwrap();
        let Regime::Bistable(fp) = info.regime else {
            panic!("expected bistable");
        };
        assert!((fp.r - 2.979).abs() < 1e-3, "R = {}", fp.r);
        assert!((fp.phi - 1.4445).abs() < 5e-4, "phi = {}", fp.phi);
        assert!((fp.alpha_minus() + fp.alpha_plus()).norm() == 0.0);
        assert!(fp.phi > std::f64::consts::FRAC_PI_4 && fp.phi <= std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn basin_convergence_and_stationarity() {
        let p = params(0.1, 0.2, 0.1);
        let info = classify_regime(&p).unwrap();
        let Regime::Bistable(fp) = info.regime else {
            panic!()
        };
        let times: Vec<f64> = (0..=50).map(|k| k as f64).collect();
        let traj = integrate_mean_field(fp.alpha_plus() * c64(1.2, 0.0), &p, &times).unwrap();
        assert!((traj.last().unwrap() - fp.alpha_plus()).norm() < 1e-6);

        let frozen = integrate_mean_field(fp.alpha_plus(), &p, &[0.0, 10.0, 20.0]).unwrap();
        for a in &frozen {
            assert!((a - fp.alpha_plus()).norm() < 1e-8);
        }
    }

    #[test]
    fn limit_cycle_period_matches_closed_form() {
        let p = params(0.1, 0.02, 0.1);
        let info = classify_regime(&p).unwrap();
        let Regime::LimitCycle { omega } = info.regime else {
            panic!()
        };
        let times: Vec<f64> = (0..4000).map(|k| 300.0 + k as f64 * 0.25).collect();
        let traj = integrate_mean_field(c64(1.0, 0.3), &p, &times).unwrap();
        let period = period_from_zero_crossings(&times, &traj).unwrap();
        let expect = 2.0 * std::f64::consts::PI / omega;
        assert!(
            (period - expect).abs() / expect < 0.01,
            "period {period} vs {expect}"
        );
    }

    #[test]
    fn telegraph_closed_forms() {
        let tg = TwoStateTelegraph::new(c64(2.0, -1.0), 0.05).unwrap();
        let taus = [0.0, 1.0, 10.0, 1000.0];
        let stats = telegraph_statistics(&tg, 1.0, &taus).unwrap();
        assert!((stats.correlation[0].re - 5.0).abs() < 1e-12);
        let ratio = stats.correlation[1].re / stats.correlation[0].re;
        assert!((ratio - (-0.1f64).exp()).abs() < 1e-12);
        assert!(stats.mean.last().unwrap().norm() < 1e-12);
        assert!((stats.mean[0] - tg.alpha1_c()).norm() < 1e-12);
        // Even mixture: mean vanishes identically.
        let even = telegraph_statistics(&tg, 0.5, &taus).unwrap();
        assert!(even.mean.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn monte_carlo_matches_analytics() {
        let tg = TwoStateTelegraph::new(c64(2.0, 0.0), 0.05).unwrap();
        let gamma1 = tg.gamma1_rate();
        let emp = telegraph_monte_carlo(&tg, 10_000, 20.0 / gamma1, 42).unwrap();
        let amp_sq = 4.0;
        for ((&tau, &c), &se) in emp
            .taus
            .iter()
            .zip(&emp.correlation)
            .zip(&emp.correlation_stderr)
        {
            let expect = amp_sq * (-gamma1 * tau).exp();
            assert!(
                (c - expect).abs() <= 3.0 * se + 1e-12,
                "tau={tau}: {c} vs {expect} (se {se})"
            );
        }
        // Occupancies at the horizon: symmetric equilibrium.
        let se_occ = (0.25f64 / 10_000.0).sqrt();
        assert!((emp.occupancy.0 - 0.5).abs() <= 3.0 * se_occ);
        // Ensemble mean relaxes like the closed form.
        let stats = telegraph_statistics(&tg, 1.0, &emp.taus).unwrap();
        for ((m, a), se) in emp.mean.iter().zip(&stats.mean).zip(&emp.correlation_stderr) {
            assert!((m.0 - a.re).abs() < 4.0 * se.max(0.02));
        }
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let tg = TwoStateTelegraph::new(c64(1.0, 1.0), 0.2).unwrap();
        let a = telegraph_monte_carlo(&tg, 1000, 40.0, 7).unwrap();
        let b = telegraph_monte_carlo(&tg, 1000, 40.0, 7).unwrap();
        assert_eq!(a.correlation, b.correlation);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.occupancy, b.occupancy);
        let c = telegraph_monte_carlo(&tg, 1000, 40.0, 8).unwrap();
        assert_ne!(a.correlation, c.correlation);
    }

    #[test]
    fn telegraph_validation() {
        assert!(TwoStateTelegraph::new(c64(1.0, 0.0), 0.0).is_err());
        let tg = TwoStateTelegraph::new(c64(1.0, 0.0), 0.1).unwrap();
        assert!(telegraph_monte_carlo(&tg, 10, 100.0, 1).is_err());
        assert!(telegraph_monte_carlo(&tg, 1000, 1.0, 1).is_err());
    }
}
