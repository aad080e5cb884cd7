//! File emission: CSV and JSON writers, plus self-contained SVG rendering.

pub mod svg;

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::evolution::Trajectory;
use crate::metastable::EmsMapResult;
use crate::phasespace::WignerGrid;
use crate::spectral::GapMapResult;

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_csv_records<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GapRow {
    gamma2_ratio: f64,
    eta_ratio: f64,
    #[serde(rename = "Gamma1")]
    gamma1: f64,
    #[serde(rename = "Gamma2")]
    gamma2: f64,
    nu1: f64,
    nu2: f64,
    log10_gap_ratio: f64,
    n_max_used: usize,
}

pub fn write_gap_map_csv(path: &Path, map: &GapMapResult) -> Result<()> {
    let rows: Vec<GapRow> = map
        .points()
        .map(|p| GapRow {
            gamma2_ratio: p.gamma2_ratio,
            eta_ratio: p.eta_ratio,
            gamma1: p.gamma1_rate,
            gamma2: p.gamma2_rate,
            nu1: p.nu1,
            nu2: p.nu2,
            log10_gap_ratio: p.log10_gap_ratio,
            n_max_used: p.n_max_used,
        })
        .collect();
    write_csv_records(path, &rows)
}

pub fn write_gap_map_json(path: &Path, map: &GapMapResult) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        delta_ratio: f64,
        points: Vec<&'a crate::spectral::GapPoint>,
        failures: &'a [crate::spectral::GapFailure],
    }
    write_json(
        path,
        &Doc {
            delta_ratio: map.delta_ratio,
            points: map.points().collect(),
            failures: &map.failures,
        },
    )
}

#[derive(Serialize)]
struct EmsRow {
    gamma2_ratio: f64,
    eta_ratio: f64,
    log10_trace_distance: Option<f64>,
    applicable: bool,
    n_max_used: usize,
}

pub fn write_ems_map_csv(path: &Path, map: &EmsMapResult) -> Result<()> {
    let rows: Vec<EmsRow> = map
        .points()
        .map(|p| EmsRow {
            gamma2_ratio: p.gamma2_ratio,
            eta_ratio: p.eta_ratio,
            log10_trace_distance: p.log10_trace_distance,
            applicable: p.log10_trace_distance.is_some(),
            n_max_used: p.n_max_used,
        })
        .collect();
    write_csv_records(path, &rows)
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    re_a: f64,
    im_a: f64,
    n: f64,
    p1: Option<f64>,
    p2: Option<f64>,
    frame: String,
}

/// Trajectory CSV with optional manifold weights per sample.
pub fn write_trajectory_csv(
    path: &Path,
    traj: &Trajectory,
    weights: Option<&[(f64, f64)]>,
) -> Result<()> {
    let rows: Vec<TrajectoryRow> = traj
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| TrajectoryRow {
            t,
            re_a: traj.amplitudes[k].re,
            im_a: traj.amplitudes[k].im,
            n: traj.occupations[k],
            p1: weights.map(|w| w[k].0),
            p2: weights.map(|w| w[k].1),
            frame: traj.frame.to_string(),
        })
        .collect();
    write_csv_records(path, &rows)
}

#[derive(Serialize)]
struct AmplitudeRow {
    t: f64,
    re_a: f64,
    im_a: f64,
    frame: String,
}

/// Amplitude-only series (approximations and laboratory-frame transforms).
pub fn write_amplitude_csv(
    path: &Path,
    times: &[f64],
    amplitudes: &[Complex64],
    frame: &str,
) -> Result<()> {
    let rows: Vec<AmplitudeRow> = times
        .iter()
        .zip(amplitudes)
        .map(|(&t, a)| AmplitudeRow {
            t,
            re_a: a.re,
            im_a: a.im,
            frame: frame.to_string(),
        })
        .collect();
    write_csv_records(path, &rows)
}

#[derive(Serialize)]
struct SpectrumRow {
    omega_over_gamma1: f64,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "S_mode1_only")]
    s_mode1: f64,
}

pub fn write_spectrum_csv(path: &Path, curve: &crate::correlations::SpectrumCurve) -> Result<()> {
    let rows: Vec<SpectrumRow> = curve
        .omega
        .iter()
        .enumerate()
        .map(|(k, &w)| SpectrumRow {
            omega_over_gamma1: w,
            s: curve.s[k],
            s_mode1: curve.s_mode1[k],
        })
        .collect();
    write_csv_records(path, &rows)
}

#[derive(Serialize)]
pub struct ObservedFrequencyRow {
    pub eta_ratio: f64,
    pub omega_obs_over_delta: f64,
    pub omega_obs_approx_over_delta: Option<f64>,
}

pub fn write_observed_frequency_csv(path: &Path, rows: &[ObservedFrequencyRow]) -> Result<()> {
    write_csv_records(path, rows)
}

#[derive(Serialize)]
struct WignerRow {
    re_alpha: f64,
    im_alpha: f64,
    #[serde(rename = "W")]
    w: f64,
}

/// Long-form Wigner CSV (re_alpha, im_alpha, W).
pub fn write_wigner_csv(path: &Path, grid: &WignerGrid) -> Result<()> {
    let mut rows = Vec::with_capacity(grid.re_alpha.len() * grid.im_alpha.len());
    for (i, &im) in grid.im_alpha.iter().enumerate() {
        for (j, &re) in grid.re_alpha.iter().enumerate() {
            rows.push(WignerRow {
                re_alpha: re,
                im_alpha: im,
                w: grid.value(i, j),
            });
        }
    }
    write_csv_records(path, &rows)
}

#[derive(Serialize)]
pub struct TelegraphRow {
    pub tau: f64,
    #[serde(rename = "C_analytic")]
    pub c_analytic: f64,
    #[serde(rename = "C_empirical")]
    pub c_empirical: f64,
    pub stderr: f64,
}

pub fn write_telegraph_csv(path: &Path, rows: &[TelegraphRow]) -> Result<()> {
    write_csv_records(path, rows)
}

#[derive(Serialize)]
pub struct MeanFieldRow {
    pub t: f64,
    pub re_alpha: f64,
    pub im_alpha: f64,
}

pub fn write_mean_field_csv(path: &Path, rows: &[MeanFieldRow]) -> Result<()> {
    write_csv_records(path, rows)
}

#[derive(Serialize)]
pub struct SpectrumSweepRow {
    pub eta_ratio: f64,
    pub re_lambda1: f64,
    pub im_lambda1: f64,
    pub re_lambda2: f64,
    pub im_lambda2: f64,
    #[serde(rename = "Gamma1")]
    pub gamma1: f64,
    #[serde(rename = "Gamma2")]
    pub gamma2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub above_ep: bool,
}

pub fn write_spectrum_sweep_csv(path: &Path, rows: &[SpectrumSweepRow]) -> Result<()> {
    write_csv_records(path, rows)
}
