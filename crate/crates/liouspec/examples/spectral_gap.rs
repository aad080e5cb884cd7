//! Eigendecompose the generator at one parameter point, report the slowest
//! modes, and locate the exceptional point of the squeezing sweep.
//!
//! ```bash
//! cargo run --release -p liouspec --example spectral_gap
//! ```

use liouspec::spectral::{decay_rates, find_exceptional_point, spectrum_at};
use liouspec::ModelParams;

fn main() -> liouspec::Result<()> {
    // gamma2/gamma1 = 0.1, eta/gamma1 = 0.15, delta/gamma1 = 0.1.
    let params = ModelParams::new(1.0, 0.1, 0.15, 0.1, 38)?;
    let spectrum = spectrum_at(&params)?;

    println!("n_max = {}, modes = {}", spectrum.n_max, spectrum.n_modes());
    println!("slowest eigenvalues (units of gamma1):");
    for (j, lambda) in spectrum.eigenvalues.iter().take(6).enumerate() {
        println!(
            "  lambda_{j} = {:+.6e} {:+.6e} i   (parity {:+})",
            lambda.re, lambda.im, spectrum.parities[j]
        );
    }

    let rates = decay_rates(&spectrum);
    let gap = rates[1].0 / rates[2].0;
    println!("Gamma1/gamma1 = {:.4e}", rates[1].0);
    println!("Gamma2/gamma1 = {:.4e}", rates[2].0);
    println!("spectral gap Gamma1/Gamma2 = {gap:.4}");

    // Where the conjugate pair collides into two real eigenvalues.
    let base = ModelParams::new(1.0, 0.1, 0.1, 0.1, 30)?;
    let eta_ep = find_exceptional_point(&base, (0.051, 0.12))?;
    println!("eta_EP/gamma1 = {eta_ep:.5} (classical critical point at 0.05)");
    Ok(())
}
