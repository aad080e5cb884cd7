//! Self-contained SVG rendering for heat maps and line plots. No external
//! renderer: axes, colormaps and contours are emitted directly from data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 90.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

fn plot_w() -> f64 {
    WIDTH - MARGIN_L - MARGIN_R
}

fn plot_h() -> f64 {
    HEIGHT - MARGIN_T - MARGIN_B
}

/// Sequential colormap (dark blue to yellow), linear interpolation between
/// anchors.
fn sequential(t: f64) -> (u8, u8, u8) {
    const ANCHORS: [(f64, f64, f64); 9] = [
        (0.267, 0.005, 0.329),
        (0.283, 0.141, 0.458),
        (0.254, 0.265, 0.530),
        (0.207, 0.372, 0.553),
        (0.164, 0.471, 0.558),
        (0.128, 0.567, 0.551),
        (0.135, 0.659, 0.518),
        (0.478, 0.821, 0.318),
        (0.993, 0.906, 0.144),
    ];
    lerp_map(&ANCHORS, t)
}

/// Diverging colormap (blue through white to red) for signed fields.
fn diverging(t: f64) -> (u8, u8, u8) {
    const ANCHORS: [(f64, f64, f64); 5] = [
        (0.02, 0.19, 0.38),
        (0.42, 0.68, 0.84),
        (0.97, 0.97, 0.97),
        (0.84, 0.38, 0.30),
        (0.40, 0.0, 0.12),
    ];
    lerp_map(&ANCHORS, t)
}

fn lerp_map(anchors: &[(f64, f64, f64)], t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0) * (anchors.len() - 1) as f64;
    let i = (t.floor() as usize).min(anchors.len() - 2);
    let f = t - i as f64;
    let (r0, g0, b0) = anchors[i];
    let (r1, g1, b1) = anchors[i + 1];
    (
        ((r0 + (r1 - r0) * f) * 255.0) as u8,
        ((g0 + (g1 - g0) * f) * 255.0) as u8,
        ((b0 + (b1 - b0) * f) * 255.0) as u8,
    )
}

/// Round tick positions covering [lo, hi].
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| (hi - lo) / s <= target as f64 + 0.5)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

#[derive(Clone, Copy)]
pub enum Scale {
    Linear,
    Log,
}

struct AxisMap {
    lo: f64,
    hi: f64,
    scale: Scale,
}

impl AxisMap {
    fn new(lo: f64, hi: f64, scale: Scale) -> Self {
        match scale {
            Scale::Linear => Self { lo, hi, scale },
            Scale::Log => Self {
                lo: lo.max(1e-300).log10(),
                hi: hi.max(1e-300).log10(),
                scale,
            },
        }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = match self.scale {
            Scale::Linear => v,
            Scale::Log => v.max(1e-300).log10(),
        };
        if self.hi > self.lo {
            (v - self.lo) / (self.hi - self.lo)
        } else {
            0.5
        }
    }

    fn tick_values(&self) -> Vec<f64> {
        match self.scale {
            Scale::Linear => ticks(self.lo, self.hi, 6),
            Scale::Log => {
                let lo = self.lo.floor() as i64;
                let hi = self.hi.ceil() as i64;
                (lo..=hi).map(|d| 10f64.powi(d as i32)).collect()
            }
        }
    }
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         fill=\"white\"/>\n<text x=\"{:.1}\" y=\"22\" font-family=\"monospace\" \
         font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw_axes(
    out: &mut String,
    x: &AxisMap,
    y: &AxisMap,
    x_label: &str,
    y_label: &str,
) {
    let _ = write!(
        out,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.1}\" height=\"{:.1}\" \
         fill=\"none\" stroke=\"black\"/>\n",
        plot_w(),
        plot_h()
    );
    for tv in x.tick_values() {
        let f = x.frac(tv);
        if !(0.0..=1.0).contains(&f) {
            continue;
        }
        let px = MARGIN_L + f * plot_w();
        let _ = write!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h(),
            MARGIN_T + plot_h() + 5.0,
            MARGIN_T + plot_h() + 18.0,
            fmt_tick(tv)
        );
    }
    for tv in y.tick_values() {
        let f = y.frac(tv);
        if !(0.0..=1.0).contains(&f) {
            continue;
        }
        let py = MARGIN_T + (1.0 - f) * plot_h();
        let _ = write!(
            out,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{MARGIN_L}\" y2=\"{py:.1}\" stroke=\"black\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L - 8.0,
            py + 4.0,
            fmt_tick(tv)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w() / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = write!(
        out,
        "<text x=\"16\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        MARGIN_T + plot_h() / 2.0,
        MARGIN_T + plot_h() / 2.0,
        escape(y_label)
    );
}

fn draw_colorbar(out: &mut String, lo: f64, hi: f64, diverge: bool) {
    let x0 = WIDTH - MARGIN_R + 20.0;
    let bar_h = plot_h();
    let n = 64;
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let (r, g, b) = if diverge { diverging(t) } else { sequential(t) };
        let y = MARGIN_T + (1.0 - t) * bar_h - bar_h / n as f64;
        let _ = write!(
            out,
            "<rect x=\"{x0:.1}\" y=\"{y:.1}\" width=\"16\" height=\"{:.2}\" \
             fill=\"rgb({r},{g},{b})\"/>\n",
            bar_h / n as f64 + 0.5
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
        x0 + 20.0,
        MARGIN_T + bar_h,
        fmt_tick(lo),
        x0 + 20.0,
        MARGIN_T + 10.0,
        fmt_tick(hi)
    );
}

/// Heat map over a rectilinear grid with optional overlays.
pub struct HeatMap<'a> {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Cell-center coordinates.
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    /// values[iy][ix]; None renders as the mask color.
    pub values: Vec<Vec<Option<f64>>>,
    pub diverging: bool,
    /// Overlay polylines in data coordinates, with stroke color.
    pub contours: Vec<(Vec<(f64, f64)>, String)>,
    /// Point markers in data coordinates.
    pub markers: Vec<(f64, f64)>,
    pub x_scale: Scale,
    pub y_scale: Scale,
}

impl<'a> HeatMap<'a> {
    pub fn render(&self) -> String {
        let mut out = svg_header(&self.title);
        let x = AxisMap::new(
            *self.xs.first().unwrap(),
            *self.xs.last().unwrap(),
            self.x_scale,
        );
        let y = AxisMap::new(
            *self.ys.first().unwrap(),
            *self.ys.last().unwrap(),
            self.y_scale,
        );
        let flat: Vec<f64> = self.values.iter().flatten().flatten().cloned().collect();
        let lo = flat.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = flat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if self.diverging {
            let m = lo.abs().max(hi.abs()).max(1e-300);
            (-m, m)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        };

        let nx = self.xs.len();
        let ny = self.ys.len();
        for iy in 0..ny {
            for ix in 0..nx {
                let color = match self.values[iy][ix] {
                    Some(v) => {
                        let t = (v - lo) / (hi - lo);
                        let (r, g, b) = if self.diverging {
                            diverging(t)
                        } else {
                            sequential(t)
                        };
                        format!("rgb({r},{g},{b})")
                    }
                    None => "rgb(255,245,180)".to_string(),
                };
                // Cell edges at midpoints between centers.
                let xl = if ix == 0 {
                    0.0
                } else {
                    0.5 * (x.frac(self.xs[ix - 1]) + x.frac(self.xs[ix]))
                };
                let xr = if ix == nx - 1 {
                    1.0
                } else {
                    0.5 * (x.frac(self.xs[ix]) + x.frac(self.xs[ix + 1]))
                };
                let yb = if iy == 0 {
                    0.0
                } else {
                    0.5 * (y.frac(self.ys[iy - 1]) + y.frac(self.ys[iy]))
                };
                let yt = if iy == ny - 1 {
                    1.0
                } else {
                    0.5 * (y.frac(self.ys[iy]) + y.frac(self.ys[iy + 1]))
                };
                let px = MARGIN_L + xl * plot_w();
                let py = MARGIN_T + (1.0 - yt) * plot_h();
                let _ = write!(
                    out,
                    "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                     fill=\"{color}\"/>\n",
                    ((xr - xl) * plot_w()).max(0.1) + 0.15,
                    ((yt - yb) * plot_h()).max(0.1) + 0.15,
                );
            }
        }

        for (line, color) in &self.contours {
            if line.len() < 2 {
                continue;
            }
            let pts: Vec<String> = line
                .iter()
                .map(|&(vx, vy)| {
                    format!(
                        "{:.1},{:.1}",
                        MARGIN_L + x.frac(vx) * plot_w(),
                        MARGIN_T + (1.0 - y.frac(vy)) * plot_h()
                    )
                })
                .collect();
            let _ = write!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" \
                 stroke-dasharray=\"6 3\"/>\n",
                pts.join(" ")
            );
        }
        for &(mx, my) in &self.markers {
            let _ = write!(
                out,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"none\" stroke=\"black\" \
                 stroke-width=\"1.5\"/>\n",
                MARGIN_L + x.frac(mx) * plot_w(),
                MARGIN_T + (1.0 - y.frac(my)) * plot_h()
            );
        }

        draw_axes(&mut out, &x, &y, &self.x_label, &self.y_label);
        draw_colorbar(&mut out, lo, hi, self.diverging);
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// Multi-series line plot.
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// (name, color, dashed, points)
    pub series: Vec<(String, String, bool, Vec<(f64, f64)>)>,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Vertical marker lines in data coordinates.
    pub v_markers: Vec<f64>,
}

impl LinePlot {
    pub fn render(&self) -> String {
        let mut out = svg_header(&self.title);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (_, _, _, pts) in &self.series {
            for &(px, py) in pts {
                if matches!(self.x_scale, Scale::Log) && px <= 0.0 {
                    continue;
                }
                if matches!(self.y_scale, Scale::Log) && py <= 0.0 {
                    continue;
                }
                xs.push(px);
                ys.push(py);
            }
        }
        if xs.is_empty() {
            out.push_str("</svg>\n");
            return out;
        }
        let (x_lo, x_hi) = min_max(&xs);
        let (y_lo, y_hi) = min_max(&ys);
        let pad = 0.05 * (y_hi - y_lo).max(1e-12);
        let (y_lo, y_hi) = match self.y_scale {
            Scale::Linear => (y_lo - pad, y_hi + pad),
            Scale::Log => (y_lo, y_hi),
        };
        let x = AxisMap::new(x_lo, x_hi, self.x_scale);
        let y = AxisMap::new(y_lo, y_hi, self.y_scale);

        for &vm in &self.v_markers {
            let f = x.frac(vm);
            if !(0.0..=1.0).contains(&f) {
                continue;
            }
            let px = MARGIN_L + f * plot_w();
            let _ = write!(
                out,
                "<line x1=\"{px:.1}\" y1=\"{MARGIN_T}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
                 stroke=\"gray\" stroke-dasharray=\"3 3\"/>\n",
                MARGIN_T + plot_h()
            );
        }

        for (si, (name, color, dashed, pts)) in self.series.iter().enumerate() {
            let path: Vec<String> = pts
                .iter()
                .filter(|(px, py)| {
                    !(matches!(self.x_scale, Scale::Log) && *px <= 0.0)
                        && !(matches!(self.y_scale, Scale::Log) && *py <= 0.0)
                })
                .map(|&(px, py)| {
                    format!(
                        "{:.1},{:.1}",
                        MARGIN_L + x.frac(px) * plot_w(),
                        MARGIN_T + (1.0 - y.frac(py)) * plot_h()
                    )
                })
                .collect();
            let dash = if *dashed {
                " stroke-dasharray=\"7 4\""
            } else {
                ""
            };
            let _ = write!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.8\"{dash}/>\n",
                path.join(" ")
            );
            let ly = MARGIN_T + 16.0 + 16.0 * si as f64;
            let _ = write!(
                out,
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
                 stroke=\"{color}\" stroke-width=\"2\"{dash}/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
                MARGIN_L + 8.0,
                MARGIN_L + 32.0,
                MARGIN_L + 38.0,
                ly + 4.0,
                escape(name)
            );
        }

        draw_axes(&mut out, &x, &y, &self.x_label, &self.y_label);
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_renders_valid_svg() {
        let xs = [0.1, 0.2, 0.3];
        let ys = [1.0, 2.0];
        let map = HeatMap {
            title: "demo".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            xs: &xs,
            ys: &ys,
            values: vec![
                vec![Some(0.0), Some(0.5), None],
                vec![Some(1.0), Some(-0.5), Some(0.2)],
            ],
            diverging: true,
            contours: vec![(vec![(0.1, 1.0), (0.3, 2.0)], "green".into())],
            markers: vec![(0.2, 1.5)],
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
        };
        let svg = map.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("circle"));
    }

    #[test]
    fn lineplot_log_axes_skip_nonpositive() {
        let plot = LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![(
                "s".into(),
                "red".into(),
                false,
                vec![(0.0, 1.0), (0.1, 2.0), (1.0, 3.0)],
            )],
            x_scale: Scale::Log,
            y_scale: Scale::Linear,
            v_markers: vec![0.5],
        };
        let svg = plot.render();
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn tick_layout_is_reasonable() {
        let t = ticks(0.0, 1.0, 6);
        assert!(t.len() >= 4 && t.len() <= 8);
        assert!(t.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
