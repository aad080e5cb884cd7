//! Batch front-end: parameter sweeps, figure-data regeneration, file
//! emission.
//!
//! Every run echoes its configuration into the output directory, emits CSV
//! for each figure datum and renders self-contained SVG. Identical
//! configuration and seed produce byte-identical CSV.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::c64;
use crate::classical::{
    classify_regime, integrate_mean_field, telegraph_monte_carlo, telegraph_statistics, Regime,
    TwoStateTelegraph,
};
use crate::correlations::{
    default_omega_grid, emission_crosscheck, emission_spectrum, observed_frequency,
    observed_frequency_metastable, refine_tol_for, two_time_correlation,
};
use crate::error::{Error, Result};
use crate::evolution::{
    amplitude_metastable, coherent_state, evolve_eigenexpansion, lab_frame_amplitude,
    linear_time_grid, log_time_grid,
};
use crate::liouvillian::{build_liouvillian, ModelParams};
use crate::metastable::{
    ems_approximation_map, extract_manifold, manifold_summary, project_onto_manifold,
};
use crate::output::{self, svg};
use crate::phasespace::{lobe_extract, support_radius, wigner, GridSpec};
use crate::spectral::{
    eigenvalues_only, find_exceptional_point, gap_map, spectrum_at, TruncationSpec, EP_IM_TOL,
    MAX_N_MAX,
};

#[derive(Parser, Debug)]
#[command(
    name = "liouspec",
    version,
    about = "Liouvillian spectral analysis of the squeezed quantum van der Pol oscillator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalue sweep over the squeezing strength, with exceptional-point
    /// detection (preset: fig1c)
    Spectrum(SpectrumArgs),
    /// log10(Gamma1/Gamma2) heat map over the (gamma2, eta) lattice
    Gapmap(MapArgs),
    /// EMS-approximation trace-distance heat map (preset: fig4)
    Emsmap(MapArgs),
    /// Time evolution with metastable overlays and laboratory frame
    /// (preset: fig3a)
    Evolve(EvolveArgs),
    /// Two-time correlation, emission spectrum and observed frequency
    /// (presets: fig3c, fig3de)
    Correlate(CorrelateArgs),
    /// Wigner distributions of the stationary state and the metastable
    /// states (preset: fig2)
    Wigner(WignerArgs),
    /// Classical mean-field flow and the telegraph-process oracle
    Classical(ClassicalArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CommonArgs {
    /// Detuning over gamma1
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Fock truncation: a number, "auto" (convergence rule, cap 50) or
    /// "auto:CAP"
    #[arg(long, default_value = "auto")]
    pub nmax: String,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed for stochastic subcommands
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Named figure preset (fig1c, fig2, fig3a, fig3c, fig3de, fig4)
    #[arg(long)]
    pub preset: Option<String>,
    /// Worker threads for sweeps
    #[arg(long, env = "LIOUSPEC_WORKERS")]
    pub workers: Option<usize>,
    /// Comma-separated output formats (csv,json,svg)
    #[arg(long, default_value = "csv,json,svg")]
    pub format: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Nonlinear damping over gamma1
    #[arg(long, default_value_t = 0.1)]
    pub gamma2: f64,
    /// Squeezing sweep LO:HI:N
    #[arg(long, default_value = "0.01:0.3:60")]
    pub eta_range: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// gamma2 lattice LO:HI:N (log spaced)
    #[arg(long, default_value = "0.05:3:10")]
    pub gamma2_range: String,
    /// eta lattice LO:HI:N
    #[arg(long, default_value = "0.02:2:10")]
    pub eta_range: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0.1)]
    pub gamma2: f64,
    /// Squeezing strength over gamma1
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    /// Initial coherent amplitude as a multiple of the classical fixed
    /// point alpha_+
    #[arg(long, default_value_t = 1.2)]
    pub alpha_scale: f64,
    /// Explicit initial amplitude "RE,IM" (overrides --alpha-scale)
    #[arg(long)]
    pub alpha: Option<String>,
    /// Forcing half-frequency over gamma1 (laboratory frame output when > 0)
    #[arg(long, default_value_t = 0.0)]
    pub omega_s: f64,
    /// First sample time (log grid)
    #[arg(long, default_value_t = 0.01)]
    pub t_min: f64,
    /// Last sample time; 0 means 5/Gamma1
    #[arg(long, default_value_t = 0.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 200)]
    pub t_points: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0.1)]
    pub gamma2: f64,
    #[arg(long, default_value_t = 0.15)]
    pub eta: f64,
    /// Sweep of eta for the observed-frequency curve (used by fig3de)
    #[arg(long)]
    pub eta_range: Option<String>,
    /// Skip the transform-pathway cross-check of emitted spectra
    #[arg(long, default_value_t = false)]
    pub no_crosscheck: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WignerArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0.1)]
    pub gamma2: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    /// Which states to map: ss, mu1, mu2 or all
    #[arg(long, default_value = "all")]
    pub state: String,
    /// Grid points per axis
    #[arg(long, default_value_t = 161)]
    pub grid_points: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClassicalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0.1)]
    pub gamma2: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    /// Initial amplitude as a multiple of alpha_+
    #[arg(long, default_value_t = 1.2)]
    pub alpha_scale: f64,
    /// Telegraph switching rate Gamma1/2; 0 derives Gamma1 from the quantum
    /// spectrum at the same parameters
    #[arg(long, default_value_t = 0.0)]
    pub switch_rate: f64,
    /// Monte Carlo paths
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    /// Simulation horizon in units of 1/Gamma1; scaled internally
    #[arg(long, default_value_t = 25.0)]
    pub horizon_per_tau: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

fn parse_formats(spec: &str) -> Result<Formats> {
    let mut f = Formats {
        csv: false,
        json: false,
        svg: false,
    };
    for token in spec.split(',') {
        match token.trim() {
            "csv" => f.csv = true,
            "json" => f.json = true,
            "svg" => f.svg = true,
            "" => {}
            other => {
                return Err(Error::Usage(format!("unknown format '{other}'")));
            }
        }
    }
    if !(f.csv || f.json || f.svg) {
        return Err(Error::Usage("no output format selected".into()));
    }
    Ok(f)
}

fn parse_range(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Usage(format!(
            "range '{spec}' must be LO:HI:N"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Usage(format!("bad range low '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Usage(format!("bad range high '{}'", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Usage(format!("bad range count '{}'", parts[2])))?;
    if n == 0 {
        return Err(Error::Usage("empty sweep range".into()));
    }
    if n > 1 && !(hi > lo) {
        return Err(Error::Usage(format!("range '{spec}' must increase")));
    }
    Ok((lo, hi, n))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn parse_truncation(spec: &str) -> Result<TruncationSpec> {
    let s = spec.trim();
    if s == "auto" {
        return Ok(TruncationSpec::Auto { cap: MAX_N_MAX });
    }
    if let Some(cap) = s.strip_prefix("auto:") {
        let cap: usize = cap
            .parse()
            .map_err(|_| Error::Usage(format!("bad truncation cap '{cap}'")))?;
        return Ok(TruncationSpec::Auto { cap });
    }
    let n: usize = s
        .parse()
        .map_err(|_| Error::Usage(format!("bad truncation '{s}'")))?;
    if n < 2 {
        return Err(Error::Usage("truncation must be at least 2".into()));
    }
    Ok(TruncationSpec::Fixed(n))
}

fn parse_complex(spec: &str) -> Result<num_complex::Complex64> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Usage(format!("amplitude '{spec}' must be RE,IM")));
    }
    let re: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("bad amplitude '{spec}'")))?;
    let im: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("bad amplitude '{spec}'")))?;
    Ok(c64(re, im))
}

fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn out_dir(common: &CommonArgs, default_name: &str) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(default_name))
}

fn echo_config<T: Serialize>(dir: &Path, command: &str, args: &T) -> Result<()> {
    #[derive(Serialize)]
    struct ConfigEcho<'a, T> {
        command: &'a str,
        args: &'a T,
    }
    output::write_json(&dir.join("config.json"), &ConfigEcho { command, args })
}

/// Entry point used by the binary; maps errors onto exit codes
/// (0 success, 1 computation failure, 2 usage error).
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Gapmap(args) => cmd_gapmap(args),
        Command::Emsmap(args) => cmd_emsmap(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Wigner(args) => cmd_wigner(args),
        Command::Classical(args) => cmd_classical(args),
    };
    match result {
        Ok(()) => 0,
        Err(Error::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn check_preset(requested: &Option<String>, allowed: &[&str]) -> Result<Option<String>> {
    match requested {
        None => Ok(None),
        Some(name) => {
            if allowed.contains(&name.as_str()) {
                Ok(Some(name.clone()))
            } else {
                Err(Error::Usage(format!(
                    "preset '{name}' does not belong to this subcommand (expected one of {allowed:?})"
                )))
            }
        }
    }
}

// ---------------------------------------------------------------- spectrum

pub fn cmd_spectrum(mut args: SpectrumArgs) -> Result<()> {
    init_workers(args.common.workers);
    if check_preset(&args.common.preset, &["fig1c"])?.is_some() {
        args.gamma2 = 0.1;
        args.common.delta = 0.1;
        args.eta_range = "0.01:0.3:60".into();
    }
    let formats = parse_formats(&args.common.format)?;
    let (lo, hi, n) = parse_range(&args.eta_range)?;
    let etas = linspace(lo, hi, n);
    let dir = out_dir(&args.common, "spectrum");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "spectrum", &args)?;

    // Resolve the truncation once, at the most demanding point of the sweep.
    let trunc = parse_truncation(&args.common.nmax)?;
    let p_top = ModelParams::new(1.0, args.gamma2, hi, args.common.delta, 12)?;
    let n_max = trunc.resolve(&p_top)?;

    let mut rows = Vec::with_capacity(etas.len());
    let mut failures = 0usize;
    for &eta in &etas {
        let p = ModelParams::new(1.0, args.gamma2, eta, args.common.delta, n_max)?;
        match build_liouvillian(&p).and_then(|l| eigenvalues_only(&l)) {
            Ok(vals) => {
                let (l1, l2) = (vals[1], vals[2]);
                rows.push(output::SpectrumSweepRow {
                    eta_ratio: eta,
                    re_lambda1: l1.re,
                    im_lambda1: l1.im,
                    re_lambda2: l2.re,
                    im_lambda2: l2.im,
                    gamma1: l1.re.abs(),
                    gamma2: l2.re.abs(),
                    nu1: l1.im,
                    nu2: l2.im,
                    above_ep: l1.im.abs() <= EP_IM_TOL,
                });
            }
            Err(e) => {
                failures += 1;
                log::error!("eta = {eta}: {e}");
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Computation("every sweep point failed".into()));
    }

    // Bisect the exceptional point inside the bracketing cell, if the sweep
    // crosses it.
    let mut eta_ep = None;
    for w in rows.windows(2) {
        if !w[0].above_ep && w[1].above_ep {
            let p = ModelParams::new(1.0, args.gamma2, lo, args.common.delta, n_max)?;
            eta_ep = Some(find_exceptional_point(
                &p,
                (w[0].eta_ratio, w[1].eta_ratio),
            )?);
            break;
        }
    }

    if formats.csv {
        output::write_spectrum_sweep_csv(&dir.join("spectrum_sweep.csv"), &rows)?;
    }
    if formats.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            n_max: usize,
            eta_ep: Option<f64>,
            rows: &'a [output::SpectrumSweepRow],
        }
        output::write_json(
            &dir.join("spectrum_sweep.json"),
            &Doc {
                n_max,
                eta_ep,
                rows: &rows,
            },
        )?;
    }
    if formats.svg {
        let markers: Vec<f64> = eta_ep.into_iter().collect();
        let rates = svg::LinePlot {
            title: format!(
                "decay rates, gamma2/gamma1 = {}, delta/gamma1 = {}",
                args.gamma2, args.common.delta
            ),
            x_label: "eta/gamma1".into(),
            y_label: "Gamma/gamma1".into(),
            series: vec![
                (
                    "Gamma1".into(),
                    "crimson".into(),
                    false,
                    rows.iter().map(|r| (r.eta_ratio, r.gamma1)).collect(),
                ),
                (
                    "Gamma2".into(),
                    "steelblue".into(),
                    false,
                    rows.iter().map(|r| (r.eta_ratio, r.gamma2)).collect(),
                ),
            ],
            x_scale: svg::Scale::Linear,
            y_scale: svg::Scale::Linear,
            v_markers: markers.clone(),
        };
        rates.write(&dir.join("spectrum_rates.svg"))?;
        let freqs = svg::LinePlot {
            title: "eigenfrequencies of the two slowest modes".into(),
            x_label: "eta/gamma1".into(),
            y_label: "nu/gamma1".into(),
            series: vec![
                (
                    "nu1".into(),
                    "crimson".into(),
                    false,
                    rows.iter().map(|r| (r.eta_ratio, r.nu1)).collect(),
                ),
                (
                    "nu2".into(),
                    "steelblue".into(),
                    false,
                    rows.iter().map(|r| (r.eta_ratio, r.nu2)).collect(),
                ),
            ],
            x_scale: svg::Scale::Linear,
            y_scale: svg::Scale::Linear,
            v_markers: markers,
        };
        freqs.write(&dir.join("spectrum_freqs.svg"))?;
    }
    if failures > 0 {
        return Err(Error::Computation(format!(
            "{failures} sweep point(s) failed; see the log"
        )));
    }
    Ok(())
}

// ------------------------------------------------------------------- maps

fn map_lattice(args: &MapArgs) -> Result<(Vec<f64>, Vec<f64>)> {
    let (g_lo, g_hi, g_n) = parse_range(&args.gamma2_range)?;
    let (e_lo, e_hi, e_n) = parse_range(&args.eta_range)?;
    if g_lo <= 0.0 {
        return Err(Error::Usage("gamma2 lattice must be positive".into()));
    }
    Ok((logspace(g_lo, g_hi, g_n), linspace(e_lo, e_hi, e_n)))
}

pub fn cmd_gapmap(args: MapArgs) -> Result<()> {
    init_workers(args.common.workers);
    check_preset(&args.common.preset, &[])?;
    let formats = parse_formats(&args.common.format)?;
    let (g2s, etas) = map_lattice(&args)?;
    let trunc = parse_truncation(&args.common.nmax)?;
    let dir = out_dir(&args.common, "gapmap");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "gapmap", &args)?;

    let map = gap_map(&g2s, &etas, args.common.delta, trunc)?;
    if formats.csv {
        output::write_gap_map_csv(&dir.join("gap_map.csv"), &map)?;
    }
    if formats.json {
        output::write_gap_map_json(&dir.join("gap_map.json"), &map)?;
    }
    if formats.svg {
        let values: Vec<Vec<Option<f64>>> = (0..etas.len())
            .map(|ie| {
                (0..g2s.len())
                    .map(|ig| map.cell(ig, ie).map(|p| p.log10_gap_ratio))
                    .collect()
            })
            .collect();
        let ep: Vec<(f64, f64)> = map.ep_contour();
        let tenth = map.ratio_contour(0.1);
        let heat = svg::HeatMap {
            title: format!("log10(Gamma1/Gamma2), delta/gamma1 = {}", args.common.delta),
            x_label: "gamma2/gamma1".into(),
            y_label: "eta/gamma1".into(),
            xs: &g2s,
            ys: &etas,
            values,
            diverging: false,
            contours: vec![
                (ep, "limegreen".into()),
                (tenth, "red".into()),
            ],
            markers: vec![],
            x_scale: svg::Scale::Log,
            y_scale: svg::Scale::Linear,
        };
        heat.write(&dir.join("gap_map.svg"))?;
    }
    if !map.failures.is_empty() {
        log::warn!("{} lattice point(s) failed", map.failures.len());
    }
    Ok(())
}

pub fn cmd_emsmap(mut args: MapArgs) -> Result<()> {
    init_workers(args.common.workers);
    if check_preset(&args.common.preset, &["fig4"])?.is_some() {
        args.common.delta = 0.1;
        args.gamma2_range = "0.05:3:10".into();
        args.eta_range = "0.02:2:10".into();
    }
    let formats = parse_formats(&args.common.format)?;
    let (g2s, etas) = map_lattice(&args)?;
    let trunc = parse_truncation(&args.common.nmax)?;
    let dir = out_dir(&args.common, "emsmap");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "emsmap", &args)?;

    let map = ems_approximation_map(&g2s, &etas, args.common.delta, trunc)?;
    if formats.csv {
        output::write_ems_map_csv(&dir.join("ems_map.csv"), &map)?;
    }
    if formats.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            delta_ratio: f64,
            points: Vec<&'a crate::metastable::EmsPoint>,
            failures: &'a [crate::spectral::GapFailure],
        }
        output::write_json(
            &dir.join("ems_map.json"),
            &Doc {
                delta_ratio: map.delta_ratio,
                points: map.cells.iter().flatten().collect(),
                failures: &map.failures,
            },
        )?;
    }
    if formats.svg {
        let values: Vec<Vec<Option<f64>>> = (0..etas.len())
            .map(|ie| {
                (0..g2s.len())
                    .map(|ig| map.cell(ig, ie).and_then(|p| p.log10_trace_distance))
                    .collect()
            })
            .collect();
        // Contours from the gap structure recorded alongside.
        let mut ep = Vec::new();
        let mut tenth = Vec::new();
        for (ig, &g2) in g2s.iter().enumerate() {
            let mut prev: Option<(f64, f64)> = None;
            let mut seen_na = false;
            for (ie, &eta) in etas.iter().enumerate() {
                if let Some(p) = map.cell(ig, ie) {
                    match p.log10_gap_ratio {
                        None => seen_na = true,
                        Some(val) => {
                            if seen_na && ep.iter().all(|&(g, _): &(f64, f64)| g != g2) {
                                ep.push((g2, eta));
                            }
                            if let Some((eta0, val0)) = prev {
                                if val0 > -1.0 && val <= -1.0 {
                                    let t = (-1.0 - val0) / (val - val0);
                                    tenth.push((g2, eta0 + t * (eta - eta0)));
                                }
                            }
                            prev = Some((eta, val));
                        }
                    }
                }
            }
        }
        let heat = svg::HeatMap {
            title: format!(
                "log10 D(mu1, rho_ss + rho1), delta/gamma1 = {}",
                args.common.delta
            ),
            x_label: "gamma2/gamma1".into(),
            y_label: "eta/gamma1".into(),
            xs: &g2s,
            ys: &etas,
            values,
            diverging: false,
            contours: vec![(ep, "limegreen".into()), (tenth, "red".into())],
            markers: vec![],
            x_scale: svg::Scale::Log,
            y_scale: svg::Scale::Linear,
        };
        heat.write(&dir.join("ems_map.svg"))?;
    }
    if !map.failures.is_empty() {
        log::warn!("{} lattice point(s) failed", map.failures.len());
    }
    Ok(())
}

// ----------------------------------------------------------------- evolve

struct EvolveCase {
    label: String,
    gamma2: f64,
    eta: f64,
    alpha_scale: f64,
}

pub fn cmd_evolve(args: EvolveArgs) -> Result<()> {
    init_workers(args.common.workers);
    let preset = check_preset(&args.common.preset, &["fig3a"])?;
    let formats = parse_formats(&args.common.format)?;
    let dir = out_dir(&args.common, "evolve");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "evolve", &args)?;

    let cases: Vec<EvolveCase> = if preset.is_some() {
        vec![
            EvolveCase {
                label: "case1".into(),
                gamma2: 0.1,
                eta: 0.2,
                alpha_scale: 1.2,
            },
            EvolveCase {
                label: "case2".into(),
                gamma2: 1.0,
                eta: 1.5,
                alpha_scale: 1.5,
            },
            EvolveCase {
                label: "case3".into(),
                gamma2: 3.0,
                eta: 2.5,
                alpha_scale: 0.5,
            },
        ]
    } else {
        vec![EvolveCase {
            label: "case1".into(),
            gamma2: args.gamma2,
            eta: args.eta,
            alpha_scale: args.alpha_scale,
        }]
    };
    // The laboratory-frame zoom accompanies the preset's second case.
    let omega_s = if preset.is_some() {
        20.0 * std::f64::consts::PI
    } else {
        args.omega_s
    };

    let mut plot_series = Vec::new();
    for (idx, case) in cases.iter().enumerate() {
        let sub = dir.join(&case.label);
        output::ensure_dir(&sub)?;
        let p0 = ModelParams::new(1.0, case.gamma2, case.eta, args.common.delta, 12)?;
        let trunc = parse_truncation(&args.common.nmax)?;
        let n_max = trunc.resolve(&p0)?;
        let p = p0.with_n_max(n_max);

        let info = classify_regime(&p)?;
        let alpha0 = match (&args.alpha, preset.is_some()) {
            (Some(spec), false) => parse_complex(spec)?,
            _ => match info.regime {
                Regime::Bistable(fp) => fp.alpha_plus() * c64(case.alpha_scale, 0.0),
                _ => c64(case.alpha_scale, 0.0),
            },
        };
        let needed_n = (4.0 * alpha0.norm_sqr()).ceil() as usize;
        let p = if needed_n > p.n_max {
            p.with_n_max(needed_n.min(MAX_N_MAX))
        } else {
            p
        };

        let s = spectrum_at(&p)?;
        let g1 = s.eigenvalues[1].re.abs();
        let g2r = s.eigenvalues[2].re.abs();
        let t_max = if args.t_max > 0.0 {
            args.t_max
        } else {
            5.0 / g1.max(1e-12)
        };
        let times = log_time_grid(args.t_min, t_max, args.t_points)?;

        let rho0 = coherent_state(alpha0, p.n_max)?;
        let traj = evolve_eigenexpansion(&s, rho0.matrix(), &times)?;

        // Metastable overlay when above the exceptional point.
        let manifold = extract_manifold(&s).ok();
        let (weights, approx) = if let Some(m) = &manifold {
            let pw0 = project_onto_manifold(m, rho0.matrix())?;
            let weights: Vec<(f64, f64)> = times
                .iter()
                .map(|&t| {
                    let pt = crate::metastable::evolve_probabilities(pw0, m.gamma1_rate, t)?;
                    Ok((pt.p1(), pt.p2()))
                })
                .collect::<Result<_>>()?;
            let approx = amplitude_metastable(m, pw0, &times)?;
            (Some(weights), Some(approx))
        } else {
            (None, None)
        };

        if formats.csv {
            output::write_trajectory_csv(&sub.join("trajectory.csv"), &traj, weights.as_deref())?;
            if let Some(approx) = &approx {
                output::write_amplitude_csv(&sub.join("amplitude_approx.csv"), &times, approx, "rot")?;
            }
        }
        if formats.json {
            #[derive(Serialize)]
            struct Doc {
                n_max: usize,
                gamma1_rate: f64,
                gamma2_rate: f64,
                tau1: f64,
                tau2: f64,
                alpha0: (f64, f64),
            }
            output::write_json(
                &sub.join("summary.json"),
                &Doc {
                    n_max: p.n_max,
                    gamma1_rate: g1,
                    gamma2_rate: g2r,
                    tau1: 1.0 / g1,
                    tau2: 1.0 / g2r,
                    alpha0: (alpha0.re, alpha0.im),
                },
            )?;
        }

        // Laboratory frame: zoom on the plateau for the flagged case.
        if omega_s > 0.0 && (preset.is_none() || idx == 1) {
            let t0 = 5.0 / g2r;
            let t1 = (t0 + 4.0).min(0.05 / g1.max(1e-12));
            if t1 > t0 {
                let lab_times = linear_time_grid(t0, t1, 400)?;
                let lab_traj = evolve_eigenexpansion(&s, rho0.matrix(), &lab_times)?;
                let lab = lab_frame_amplitude(&lab_traj.amplitudes, &lab_times, omega_s)?;
                if formats.csv {
                    output::write_amplitude_csv(&sub.join("amplitude_lab.csv"), &lab_times, &lab, "lab")?;
                }
                if formats.svg {
                    let plot = svg::LinePlot {
                        title: format!("laboratory frame, omega_s/gamma1 = {omega_s:.3}"),
                        x_label: "t gamma1".into(),
                        y_label: "Im <a>_L".into(),
                        series: vec![(
                            "Im <a>_L".into(),
                            "indigo".into(),
                            false,
                            lab_times.iter().zip(&lab).map(|(&t, a)| (t, a.im)).collect(),
                        )],
                        x_scale: svg::Scale::Linear,
                        y_scale: svg::Scale::Linear,
                        v_markers: vec![],
                    };
                    plot.write(&sub.join("amplitude_lab.svg"))?;
                }
            }
        }

        let color = ["crimson", "steelblue", "goldenrod"][idx % 3];
        plot_series.push((
            format!("{} exact", case.label),
            color.to_string(),
            false,
            times
                .iter()
                .zip(&traj.amplitudes)
                .map(|(&t, a)| (t, a.im.abs()))
                .collect::<Vec<_>>(),
        ));
        if let Some(approx) = &approx {
            plot_series.push((
                format!("{} two-state", case.label),
                "black".to_string(),
                true,
                times
                    .iter()
                    .zip(approx)
                    .map(|(&t, a)| (t, a.im.abs()))
                    .collect::<Vec<_>>(),
            ));
        }
        plot_series.push((
            format!("{} tau markers", case.label),
            "gray".to_string(),
            true,
            vec![(1.0 / g2r, 1e-9), (1.0 / g1, 1e-9)],
        ));
    }

    if formats.svg {
        let plot = svg::LinePlot {
            title: "amplitude relaxation through the metastable plateau".into(),
            x_label: "t gamma1".into(),
            y_label: "|Im <a>|".into(),
            series: plot_series,
            x_scale: svg::Scale::Log,
            y_scale: svg::Scale::Log,
            v_markers: vec![],
        };
        plot.write(&dir.join("amplitude.svg"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- correlate

pub fn cmd_correlate(args: CorrelateArgs) -> Result<()> {
    init_workers(args.common.workers);
    let preset = check_preset(&args.common.preset, &["fig3c", "fig3de"])?;
    match preset.as_deref() {
        Some("fig3c") => correlate_spectra(&args, true),
        Some("fig3de") => correlate_entrainment(&args),
        Some(_) => unreachable!("preset already validated"),
        None if args.eta_range.is_some() => correlate_entrainment(&args),
        None => correlate_spectra(&args, false),
    }
}

fn correlate_spectra(args: &CorrelateArgs, preset: bool) -> Result<()> {
    let formats = parse_formats(&args.common.format)?;
    let dir = out_dir(&args.common, "correlate");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "correlate", args)?;

    let cases: Vec<(String, f64, f64)> = if preset {
        vec![
            ("case1".into(), 0.1, 0.15),
            ("case2".into(), 1.0, 0.75),
            ("case3".into(), 3.0, 1.875),
        ]
    } else {
        vec![("case1".into(), args.gamma2, args.eta)]
    };

    for (label, gamma2, eta) in cases {
        let sub = dir.join(&label);
        output::ensure_dir(&sub)?;
        let p0 = ModelParams::new(1.0, gamma2, eta, args.common.delta, 12)?;
        let trunc = parse_truncation(&args.common.nmax)?;
        let p = p0.with_n_max(trunc.resolve(&p0)?);
        let l = build_liouvillian(&p)?;
        let s = spectrum_at(&p)?;
        let g1 = s.eigenvalues[1].re.abs();
        let g2r = s.eigenvalues[2].re.abs();

        let taus = linear_time_grid(0.0, 10.0 / g1.max(1e-12), 2001)?;
        let corr = two_time_correlation(&l, &s, &taus)?;
        let omegas = default_omega_grid(args.common.delta, g2r);
        let curve = emission_spectrum(&s, &omegas)?;
        let crosscheck = if args.no_crosscheck {
            None
        } else {
            Some(emission_crosscheck(&l, &s, &curve)?)
        };
        if let Some(err) = crosscheck {
            if err > 0.01 {
                return Err(Error::Computation(format!(
                    "{label}: spectrum cross-check off by {err:.3e}"
                )));
            }
        }
        let w_obs = observed_frequency(&curve, refine_tol_for(args.common.delta))?;
        let w_obs_approx = extract_manifold(&s)
            .ok()
            .map(|m| observed_frequency_metastable(&m))
            .transpose()?;

        if formats.csv {
            output::write_spectrum_csv(&sub.join("spectrum.csv"), &curve)?;
            let rows: Vec<CorrRow> = taus
                .iter()
                .zip(&corr)
                .map(|(&tau, c)| CorrRow {
                    tau,
                    re_c: c.re,
                    im_c: c.im,
                })
                .collect();
            output::write_csv_records(&sub.join("correlation.csv"), &rows)?;
        }
        if formats.json {
            #[derive(Serialize)]
            struct Doc {
                n_max: usize,
                gamma1_rate: f64,
                gamma2_rate: f64,
                omega_obs: f64,
                omega_obs_approx: Option<f64>,
                crosscheck_l2: Option<f64>,
            }
            output::write_json(
                &sub.join("summary.json"),
                &Doc {
                    n_max: p.n_max,
                    gamma1_rate: g1,
                    gamma2_rate: g2r,
                    omega_obs: w_obs,
                    omega_obs_approx: w_obs_approx,
                    crosscheck_l2: crosscheck,
                },
            )?;
        }
        if formats.svg {
            let plot = svg::LinePlot {
                title: format!("emission spectrum, gamma2 = {gamma2}, eta = {eta}"),
                x_label: "omega/gamma1".into(),
                y_label: "S(omega)".into(),
                series: vec![
                    (
                        "exact".into(),
                        "crimson".into(),
                        false,
                        curve.omega.iter().cloned().zip(curve.s.iter().cloned()).collect(),
                    ),
                    (
                        "slowest mode".into(),
                        "black".into(),
                        true,
                        curve
                            .omega
                            .iter()
                            .cloned()
                            .zip(curve.s_mode1.iter().cloned())
                            .collect(),
                    ),
                ],
                x_scale: svg::Scale::Linear,
                y_scale: svg::Scale::Linear,
                v_markers: vec![w_obs],
            };
            plot.write(&sub.join("spectrum.svg"))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CorrRow {
    tau: f64,
    re_c: f64,
    im_c: f64,
}

fn correlate_entrainment(args: &CorrelateArgs) -> Result<()> {
    let formats = parse_formats(&args.common.format)?;
    let dir = out_dir(&args.common, "correlate");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "correlate", args)?;
    let preset = args.common.preset.is_some();

    let curves: Vec<(f64, Vec<f64>)> = if preset {
        vec![
            (0.1, logspace(0.01, 0.3, 12)),
            (1.0, logspace(0.01, 1.5, 12)),
            (3.0, logspace(0.01, 2.5, 12)),
        ]
    } else {
        let (lo, hi, n) = parse_range(args.eta_range.as_deref().unwrap())?;
        vec![(args.gamma2, logspace(lo.max(1e-4), hi, n))]
    };

    let trunc = parse_truncation(&args.common.nmax)?;
    let mut series = Vec::new();
    let mut series_approx = Vec::new();
    for (gamma2, etas) in &curves {
        let mut rows = Vec::new();
        for &eta in etas {
            let p0 = ModelParams::new(1.0, *gamma2, eta, args.common.delta, 12)?;
            let p = p0.with_n_max(trunc.resolve(&p0)?);
            let s = spectrum_at(&p)?;
            let g2r = s.eigenvalues[2].re.abs();
            let omegas = default_omega_grid(args.common.delta, g2r);
            let curve = emission_spectrum(&s, &omegas)?;
            let w_obs = observed_frequency(&curve, refine_tol_for(args.common.delta))?;
            let w_approx = extract_manifold(&s)
                .ok()
                .map(|m| observed_frequency_metastable(&m))
                .transpose()?;
            rows.push(output::ObservedFrequencyRow {
                eta_ratio: eta,
                omega_obs_over_delta: w_obs / args.common.delta,
                omega_obs_approx_over_delta: w_approx.map(|w| w / args.common.delta),
            });
        }
        if formats.csv {
            let name = format!("omega_obs_g2_{gamma2}.csv");
            output::write_observed_frequency_csv(&dir.join(name), &rows)?;
        }
        series.push((
            format!("gamma2 = {gamma2}"),
            ["crimson", "steelblue", "goldenrod"][series.len() % 3].to_string(),
            false,
            rows.iter()
                .map(|r| (r.eta_ratio, r.omega_obs_over_delta))
                .collect::<Vec<_>>(),
        ));
        series_approx.push((
            format!("gamma2 = {gamma2} (one mode)"),
            "black".to_string(),
            true,
            rows.iter()
                .filter_map(|r| r.omega_obs_approx_over_delta.map(|w| (r.eta_ratio, w)))
                .collect::<Vec<_>>(),
        ));
    }
    if formats.svg {
        series.extend(series_approx);
        let plot = svg::LinePlot {
            title: "observed frequency vs squeezing".into(),
            x_label: "eta/gamma1".into(),
            y_label: "omega_obs/Delta".into(),
            series,
            x_scale: svg::Scale::Log,
            y_scale: svg::Scale::Linear,
            v_markers: vec![],
        };
        plot.write(&dir.join("omega_obs.svg"))?;
    }
    Ok(())
}

// ------------------------------------------------------------------ wigner

pub fn cmd_wigner(args: WignerArgs) -> Result<()> {
    init_workers(args.common.workers);
    let preset = check_preset(&args.common.preset, &["fig2"])?;
    let formats = parse_formats(&args.common.format)?;
    let dir = out_dir(&args.common, "wigner");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "wigner", &args)?;

    let sets: Vec<(String, f64, f64)> = if preset.is_some() {
        vec![
            ("set1".into(), 3.0, 2.0),
            ("set2".into(), 0.1, 0.2),
        ]
    } else {
        vec![("set1".into(), args.gamma2, args.eta)]
    };
    let states: Vec<String> = match args.state.as_str() {
        "all" => vec!["ss".into(), "mu1".into(), "mu2".into()],
        other => vec![other.to_string()],
    };

    for (label, gamma2, eta) in sets {
        let sub = dir.join(&label);
        output::ensure_dir(&sub)?;
        let p0 = ModelParams::new(1.0, gamma2, eta, args.common.delta, 12)?;
        let trunc = parse_truncation(&args.common.nmax)?;
        let p = p0.with_n_max(trunc.resolve(&p0)?);
        let s = spectrum_at(&p)?;
        let manifold = extract_manifold(&s).ok();

        // Classical fixed points as markers.
        let markers: Vec<(f64, f64)> = match classify_regime(&p)?.regime {
            Regime::Bistable(fp) => {
                let a = fp.alpha_plus();
                vec![(a.re, a.im), (-a.re, -a.im)]
            }
            _ => vec![],
        };

        let radius = support_radius(s.rho_ss())?;
        let spec = GridSpec::new(radius, args.grid_points)?;
        for state in &states {
            let (rho, display_scale) = match state.as_str() {
                "ss" => (s.rho_ss().clone(), 1.0),
                "mu1" => match &manifold {
                    // Halved for display parity between the lobes and the
                    // bimodal stationary state.
                    Some(m) => (m.mu1.clone(), 0.5),
                    None => {
                        log::warn!("{label}: below the EP, no metastable states");
                        continue;
                    }
                },
                "mu2" => match &manifold {
                    Some(m) => (m.mu2.clone(), 0.5),
                    None => continue,
                },
                other => {
                    return Err(Error::Usage(format!(
                        "unknown state '{other}' (expected ss, mu1, mu2 or all)"
                    )));
                }
            };
            let mut grid = wigner(&rho, &spec)?;
            if display_scale != 1.0 {
                grid.w.mapv_inplace(|v| v * display_scale);
                grid.normalization *= display_scale;
            }
            let lobes = lobe_extract(&grid);
            let suffix = if display_scale != 1.0 {
                format!("{state}_half")
            } else {
                state.clone()
            };
            if formats.csv {
                output::write_wigner_csv(&sub.join(format!("wigner_{suffix}.csv")), &grid)?;
            }
            if formats.json {
                #[derive(Serialize)]
                struct Doc<'a> {
                    n_max: usize,
                    normalization: f64,
                    degraded: bool,
                    display_scale: f64,
                    lobes: &'a [crate::phasespace::Lobe],
                }
                output::write_json(
                    &sub.join(format!("wigner_{suffix}.json")),
                    &Doc {
                        n_max: p.n_max,
                        normalization: grid.normalization,
                        degraded: grid.degraded,
                        display_scale,
                        lobes: &lobes,
                    },
                )?;
            }
            if formats.svg {
                let values: Vec<Vec<Option<f64>>> = (0..grid.im_alpha.len())
                    .map(|i| (0..grid.re_alpha.len()).map(|j| Some(grid.value(i, j))).collect())
                    .collect();
                let mut all_markers = markers.clone();
                all_markers.extend(lobes.iter().take(2).map(|l| (l.re_alpha, l.im_alpha)));
                let heat = svg::HeatMap {
                    title: format!("W({state}), gamma2 = {gamma2}, eta = {eta}"),
                    x_label: "Re alpha".into(),
                    y_label: "Im alpha".into(),
                    xs: &grid.re_alpha,
                    ys: &grid.im_alpha,
                    values,
                    diverging: true,
                    contours: vec![],
                    markers: all_markers,
                    x_scale: svg::Scale::Linear,
                    y_scale: svg::Scale::Linear,
                };
                heat.write(&sub.join(format!("wigner_{suffix}.svg")))?;
            }
        }
        if let Some(m) = &manifold {
            if formats.json {
                output::write_json(&sub.join("manifold.json"), &manifold_summary(&s, m)?)?;
            }
        }
    }
    Ok(())
}

// --------------------------------------------------------------- classical

pub fn cmd_classical(args: ClassicalArgs) -> Result<()> {
    init_workers(args.common.workers);
    check_preset(&args.common.preset, &[])?;
    let formats = parse_formats(&args.common.format)?;
    let dir = out_dir(&args.common, "classical");
    output::ensure_dir(&dir)?;
    echo_config(&dir, "classical", &args)?;

    let p = ModelParams::new(1.0, args.gamma2, args.eta, args.common.delta, 12)?;
    let info = classify_regime(&p)?;
    if formats.json {
        output::write_json(&dir.join("regime.json"), &info)?;
    }

    // Mean-field relaxation toward the attractor.
    let alpha0 = match info.regime {
        Regime::Bistable(fp) => fp.alpha_plus() * c64(args.alpha_scale, 0.0),
        _ => c64(args.alpha_scale, 0.0),
    };
    let times = linear_time_grid(0.0, 60.0, 1201)?;
    let flow = integrate_mean_field(alpha0, &p, &times)?;
    if formats.csv {
        let rows: Vec<output::MeanFieldRow> = times
            .iter()
            .zip(&flow)
            .map(|(&t, a)| output::MeanFieldRow {
                t,
                re_alpha: a.re,
                im_alpha: a.im,
            })
            .collect();
        output::write_mean_field_csv(&dir.join("mean_field.csv"), &rows)?;
    }
    if formats.svg {
        let plot = svg::LinePlot {
            title: "mean-field relaxation".into(),
            x_label: "t gamma1".into(),
            y_label: "alpha".into(),
            series: vec![
                (
                    "Re alpha".into(),
                    "crimson".into(),
                    false,
                    times.iter().zip(&flow).map(|(&t, a)| (t, a.re)).collect(),
                ),
                (
                    "Im alpha".into(),
                    "steelblue".into(),
                    false,
                    times.iter().zip(&flow).map(|(&t, a)| (t, a.im)).collect(),
                ),
            ],
            x_scale: svg::Scale::Linear,
            y_scale: svg::Scale::Linear,
            v_markers: vec![],
        };
        plot.write(&dir.join("mean_field.svg"))?;
    }

    // Telegraph oracle. The switching rate either comes from the caller or
    // from the quantum gap at the same parameters.
    let (alpha1, switch_rate) = if args.switch_rate > 0.0 {
        let a1 = match info.regime {
            Regime::Bistable(fp) => fp.alpha_plus(),
            _ => c64(1.0, 0.0),
        };
        (a1, args.switch_rate)
    } else {
        let trunc = parse_truncation(&args.common.nmax)?;
        let pq = p.with_n_max(trunc.resolve(&p)?);
        let s = spectrum_at(&pq)?;
        let m = extract_manifold(&s)?;
        (m.amplitude_on(1)?, 0.5 * m.gamma1_rate)
    };
    let tg = TwoStateTelegraph::new(alpha1, switch_rate)?;
    let gamma1 = tg.gamma1_rate();
    let horizon = args.horizon_per_tau / gamma1;
    let emp = telegraph_monte_carlo(&tg, args.paths, horizon, args.common.seed)?;
    let stats = telegraph_statistics(&tg, 1.0, &emp.taus)?;
    if formats.csv {
        let rows: Vec<output::TelegraphRow> = emp
            .taus
            .iter()
            .enumerate()
            .map(|(k, &tau)| output::TelegraphRow {
                tau,
                c_analytic: stats.correlation[k].re,
                c_empirical: emp.correlation[k],
                stderr: emp.correlation_stderr[k],
            })
            .collect();
        output::write_telegraph_csv(&dir.join("telegraph.csv"), &rows)?;
    }
    if formats.json {
        #[derive(Serialize)]
        struct Doc {
            alpha1: (f64, f64),
            switch_rate: f64,
            occupancy: (f64, f64),
            n_paths: usize,
            seed: u64,
        }
        output::write_json(
            &dir.join("telegraph.json"),
            &Doc {
                alpha1: (alpha1.re, alpha1.im),
                switch_rate,
                occupancy: emp.occupancy,
                n_paths: emp.n_paths,
                seed: args.common.seed,
            },
        )?;
    }
    if formats.svg {
        let plot = svg::LinePlot {
            title: format!("telegraph correlation, Gamma1 = {gamma1:.4}"),
            x_label: "tau gamma1".into(),
            y_label: "C(tau)".into(),
            series: vec![
                (
                    "analytic".into(),
                    "black".into(),
                    true,
                    emp.taus
                        .iter()
                        .zip(&stats.correlation)
                        .map(|(&t, c)| (t, c.re))
                        .collect(),
                ),
                (
                    "empirical".into(),
                    "crimson".into(),
                    false,
                    emp.taus
                        .iter()
                        .zip(&emp.correlation)
                        .map(|(&t, &c)| (t, c))
                        .collect(),
                ),
            ],
            x_scale: svg::Scale::Linear,
            y_scale: svg::Scale::Linear,
            v_markers: vec![],
        };
        plot.write(&dir.join("telegraph.svg"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0.1:2:5").unwrap(), (0.1, 2.0, 5));
        assert!(parse_range("1:0:5").is_err());
        assert!(parse_range("1:2:0").is_err());
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("a:2:3").is_err());
    }

    #[test]
    fn truncation_parsing() {
        assert_eq!(parse_truncation("auto").unwrap(), TruncationSpec::Auto { cap: 50 });
        assert_eq!(
            parse_truncation("auto:30").unwrap(),
            TruncationSpec::Auto { cap: 30 }
        );
        assert_eq!(parse_truncation("25").unwrap(), TruncationSpec::Fixed(25));
        assert!(parse_truncation("1").is_err());
        assert!(parse_truncation("x").is_err());
    }

    #[test]
    fn format_parsing() {
        let f = parse_formats("csv,svg").unwrap();
        assert!(f.csv && f.svg && !f.json);
        assert!(parse_formats("bogus").is_err());
        assert!(parse_formats("").is_err());
    }

    #[test]
    fn preset_ownership() {
        assert!(check_preset(&Some("fig1c".into()), &["fig1c"]).is_ok());
        assert!(matches!(
            check_preset(&Some("fig2".into()), &["fig1c"]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1.5,-0.5").unwrap(), c64(1.5, -0.5));
        assert!(parse_complex("1.5").is_err());
    }
}
