//! Sweep the (gamma2, eta) lattice, write the spectral-gap map with its
//! exceptional-point and Gamma1/Gamma2 = 0.1 contours.
//!
//! ```bash
//! cargo run --release -p liouspec --example gap_map
//! ```

use std::path::Path;

use liouspec::output::{self, svg};
use liouspec::spectral::{gap_map, TruncationSpec};

fn main() -> liouspec::Result<()> {
    let gamma2: Vec<f64> = (0..8).map(|k| 0.1 * 3.0f64.powf(k as f64 / 4.0)).collect();
    let etas: Vec<f64> = (0..10).map(|k| 0.02 + 0.22 * k as f64).collect();

    let map = gap_map(&gamma2, &etas, 0.1, TruncationSpec::Auto { cap: 30 })?;
    println!(
        "{} points, {} failures",
        map.points().count(),
        map.failures.len()
    );
    for point in map.points().take(5) {
        println!(
            "  g2={:.3} eta={:.2}: log10(G1/G2) = {:+.3} (n_max {})",
            point.gamma2_ratio, point.eta_ratio, point.log10_gap_ratio, point.n_max_used
        );
    }

    let dir = Path::new("out/examples/gap_map");
    output::ensure_dir(dir)?;
    output::write_gap_map_csv(&dir.join("gap_map.csv"), &map)?;
    output::write_gap_map_json(&dir.join("gap_map.json"), &map)?;

    let values: Vec<Vec<Option<f64>>> = (0..etas.len())
        .map(|ie| {
            (0..gamma2.len())
                .map(|ig| map.cell(ig, ie).map(|p| p.log10_gap_ratio))
                .collect()
        })
        .collect();
    let heat = svg::HeatMap {
        title: "log10(Gamma1/Gamma2)".into(),
        x_label: "gamma2/gamma1".into(),
        y_label: "eta/gamma1".into(),
        xs: &gamma2,
        ys: &etas,
        values,
        diverging: false,
        contours: vec![
            (map.ep_contour(), "limegreen".into()),
            (map.ratio_contour(0.1), "red".into()),
        ],
        markers: vec![],
        x_scale: svg::Scale::Log,
        y_scale: svg::Scale::Linear,
    };
    heat.write(&dir.join("gap_map.svg"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
