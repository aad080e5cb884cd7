use liouspec::{c64, ModelParams};
use liouspec::classical::{classify_regime, Regime};
use liouspec::correlations::*;
use liouspec::evolution::*;
use liouspec::metastable::*;
use liouspec::phasespace::{lobe_extract, support_radius, wigner, GridSpec};
use liouspec::spectral::*;
use std::time::Instant;

fn main() {
    let delta = 0.1;
    // Criterion 4 probes: omega_obs at eta=0.01 and eta=2*eta_EP.
    for g2 in [0.1, 1.0, 3.0] {
        let t0 = Instant::now();
        let p = ModelParams::new(1.0, g2, 0.01, delta, 12).unwrap();
        let n = choose_truncation(&p, 50).unwrap().n_max;
        let s = spectrum_at(&p.with_n_max(n)).unwrap();
        let omegas = default_omega_grid(delta, s.eigenvalues[2].re.abs());
        let curve = emission_spectrum(&s, &omegas).unwrap();
        let w = observed_frequency(&curve, refine_tol_for(delta)).unwrap();
        println!("g2={g2}: eta=0.01 n={n} w_obs/delta={:.4} ({:.1}s)", w/delta, t0.elapsed().as_secs_f64());
    }
    for (g2, hi) in [(0.1, 0.12), (1.0, 1.0), (3.0, 2.2)] {
        let t0 = Instant::now();
        let p0 = ModelParams::new(1.0, g2, hi, delta, 12).unwrap();
        let n = choose_truncation(&p0, 50).unwrap().n_max;
        let ep = find_exceptional_point(&p0.with_n_max(n), (0.051, hi)).unwrap();
        let eta2 = 2.0 * ep;
        let p2 = ModelParams::new(1.0, g2, eta2, delta, 12).unwrap();
        let n2 = choose_truncation(&p2, 50).unwrap().n_max;
        let s = spectrum_at(&p2.with_n_max(n2)).unwrap();
        let omegas = default_omega_grid(delta, s.eigenvalues[2].re.abs());
        let curve = emission_spectrum(&s, &omegas).unwrap();
        let w = observed_frequency(&curve, refine_tol_for(delta)).unwrap();
        let m = extract_manifold(&s).unwrap();
        let wa = observed_frequency_metastable(&m).unwrap();
        println!("g2={g2}: ep={ep:.5} 2ep={eta2:.4} n={n2} w/d={:.5} wa/d={:.5} ratio={:.4} ({:.1}s)",
            w/delta, wa/delta, m.gamma1_rate/m.gamma2_rate, t0.elapsed().as_secs_f64());
    }
    // Criterion 6 probes: fig3a presets.
    for (g2, eta, scale) in [(0.1, 0.2, 1.2), (1.0, 1.5, 1.5), (3.0, 2.5, 0.5)] {
        let t0 = Instant::now();
        let p0 = ModelParams::new(1.0, g2, eta, delta, 12).unwrap();
        let n = choose_truncation(&p0, 50).unwrap().n_max;
        let p = p0.with_n_max(n);
        let s = spectrum_at(&p).unwrap();
        let m = extract_manifold(&s).unwrap();
        let info = classify_regime(&p).unwrap();
        let Regime::Bistable(fp) = info.regime else { panic!() };
        let alpha0 = fp.alpha_plus() * c64(scale, 0.0);
        let rho0 = coherent_state(alpha0, p.n_max).unwrap();
        let (g1, g2r) = (m.gamma1_rate, m.gamma2_rate);
        let times = log_time_grid(5.0/g2r, 3.0/g1, 25).unwrap();
        let traj = evolve_eigenexpansion(&s, rho0.matrix(), &times).unwrap();
        let pw0 = project_onto_manifold(&m, rho0.matrix()).unwrap();
        let approx = amplitude_metastable(&m, pw0, &times).unwrap();
        let max_rel = traj.amplitudes.iter().zip(&approx)
            .map(|(e, a)| (e - a).norm() / e.norm().max(1e-300))
            .fold(0.0f64, f64::max);
        // Plateau window check
        let wlo = 3.0/g2r;
        let whi = 0.05/g1;
        let a1 = m.amplitude_on(1).unwrap();
        let eq11 = (a1 * c64(pw0.p1() - pw0.p2(), 0.0)).norm();
        let mut best = f64::INFINITY;
        if whi > wlo {
            let wt = log_time_grid(wlo, whi, 20).unwrap();
            let wtraj = evolve_eigenexpansion(&s, rho0.matrix(), &wt).unwrap();
            for a in &wtraj.amplitudes {
                best = best.min((a.norm() - eq11).abs() / eq11);
            }
        }
        println!("fig3a g2={g2}: n={n} G1={g1:.5} G1/G2={:.4} p1_0={:.4} maxrel={max_rel:.4} window=[{wlo:.1},{whi:.1}] plateau_dev={best:.4} ({:.1}s)",
            g1/g2r, pw0.p1(), t0.elapsed().as_secs_f64());
    }
    // Criterion 8 probe: Wigner lobes at (0.1, 0.2).
    let t0 = Instant::now();
    let p0 = ModelParams::new(1.0, 0.1, 0.2, delta, 12).unwrap();
    let n = choose_truncation(&p0, 50).unwrap().n_max;
    let p = p0.with_n_max(n);
    let s = spectrum_at(&p).unwrap();
    let m = extract_manifold(&s).unwrap();
    let info = classify_regime(&p).unwrap();
    let Regime::Bistable(fp) = info.regime else { panic!() };
    let radius = support_radius(s.rho_ss()).unwrap();
    let spec = GridSpec::new(radius, 81).unwrap();
    let wss = wigner(s.rho_ss(), &spec).unwrap();
    let lobes = lobe_extract(&wss);
    println!("wigner: radius={radius:.2} norm={:.5} lobes={} ({:.1}s)", wss.normalization, lobes.len(), t0.elapsed().as_secs_f64());
    for l in lobes.iter().take(4) {
        println!("  lobe at ({:.3},{:.3}) h={:.4}  alpha+=({:.3},{:.3}) |d|/|a|={:.3}",
            l.re_alpha, l.im_alpha, l.height, fp.alpha_plus().re, fp.alpha_plus().im,
            (l.location() - fp.alpha_plus()).norm().min((l.location() + fp.alpha_plus()).norm()) / fp.alpha_plus().norm());
    }
    let w1 = wigner(&m.mu1, &spec).unwrap();
    let w2 = wigner(&m.mu2, &spec).unwrap();
    let mut maxdiff = 0.0f64;
    let np = spec.points;
    for i in 0..np { for j in 0..np {
        maxdiff = maxdiff.max((w1.value(i, j) - w2.value(np-1-i, np-1-j)).abs());
    }}
    println!("parity swap max diff = {maxdiff:.2e}; mu1 lobe count = {}", lobe_extract(&w1).len());
}
