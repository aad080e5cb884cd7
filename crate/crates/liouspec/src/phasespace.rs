//! Wigner distribution on a phase-space grid.
//!
//! Computed through the displaced-parity form
//! `W(α) = (2/π) Tr[D†(α) ρ D(α) Π]` with `D(α)` the matrix exponential of
//! `α â† - α* â`. The exponential is taken in a padded workspace sized so
//! the displaced support of the state fits below the cutoff: evaluating the
//! sandwich in the bare truncation makes `D` wrap around near the grid edge
//! and produces order-one artifacts there.
//!
//! For a rectilinear grid the displacement factorizes,
//! `D(x + iy) = e^{ixy} D(x) D(iy)`, the phase cancels inside the sandwich,
//! and both axis displacements are generated by fixed Hermitian quadratures
//! `i(â† - â)` and `â† + â`. One eigendecomposition per quadrature then
//! yields every grid point through diagonal phase masks and matrix products.
//! The convention integrates to one with the flat measure d²α.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::c64;
use crate::error::{Error, Result};
use crate::fockspace::{
    adjoint, annihilation, herm_residual, max_abs, number_operator, trace, CMat,
};

/// Square symmetric grid specification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    /// Half-width of the grid in both quadratures.
    pub radius: f64,
    /// Points per axis.
    pub points: usize,
}

impl GridSpec {
    pub fn new(radius: f64, points: usize) -> Result<Self> {
        if !(radius > 0.0) || points < 9 {
            return Err(Error::InvalidParams(format!(
                "bad grid spec: radius {radius}, points {points}"
            )));
        }
        Ok(Self { radius, points })
    }
}

/// Wigner samples over the grid; `w[(i, j)]` is W(re_alpha[j] + i·im_alpha[i]).
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub re_alpha: Vec<f64>,
    pub im_alpha: Vec<f64>,
    pub w: Array2<f64>,
    pub cell_area: f64,
    /// Σ W · cell_area over the grid.
    pub normalization: f64,
    /// Set when the grid radius is smaller than the support rule
    /// 1.5(√⟨n⟩ + 2) and normalization may degrade.
    pub degraded: bool,
}

impl WignerGrid {
    /// First moment Σ W α · cell_area.
    pub fn mean_alpha(&self) -> Complex64 {
        let mut acc = c64(0.0, 0.0);
        for (i, &im) in self.im_alpha.iter().enumerate() {
            for (j, &re) in self.re_alpha.iter().enumerate() {
                acc += c64(re, im) * c64(self.w[(i, j)] * self.cell_area, 0.0);
            }
        }
        acc
    }

    pub fn value(&self, i_im: usize, j_re: usize) -> f64 {
        self.w[(i_im, j_re)]
    }
}

/// Support-based radius rule 1.5(√⟨n⟩ + 2).
pub fn support_radius(rho: &CMat) -> Result<f64> {
    let n_op = number_operator(rho.nrows())?;
    let mean_n = trace(&n_op.dot(rho)).re.max(0.0);
    Ok(1.5 * (mean_n.sqrt() + 2.0))
}

/// Default grid for a state: 161×161 over the support radius.
pub fn default_grid_for(rho: &CMat) -> Result<GridSpec> {
    GridSpec::new(support_radius(rho)?, 161)
}

/// Displacement operator D(α) = exp(α â† - α* â) in the given space. Exact
/// only while the displaced support stays below the cutoff; [`wigner`] pads
/// internally before using it.
pub fn displacement(alpha: Complex64, n_max: usize) -> Result<CMat> {
    let a = annihilation(n_max)?;
    let x = adjoint(&a).mapv(|z| z * alpha) - a.mapv(|z| z * alpha.conj());
    // x is anti-Hermitian: exp(x) = U e^{-iλ} U† with ix = U λ U†.
    let k = x.mapv(|z| z * c64(0.0, 1.0));
    let (vals, vecs) = crate::linalg::eigh_hermitian(&k)?;
    let mut d = CMat::zeros((n_max, n_max));
    for (m, &lam) in vals.iter().enumerate() {
        let phase = c64(0.0, -lam).exp();
        let col = vecs.column(m);
        for i in 0..n_max {
            for j in 0..n_max {
                d[(i, j)] += phase * col[i] * col[j].conj();
            }
        }
    }
    Ok(d)
}

/// Smallest level above which the state carries no weight (by diagonal
/// populations), with a small safety margin.
fn effective_support(rho: &CMat) -> usize {
    let dim = rho.nrows();
    let mut cum = 0.0;
    let mut m = dim;
    for k in (0..dim).rev() {
        cum += rho[(k, k)].re.abs();
        if cum > 1e-13 {
            m = k + 1;
            break;
        }
    }
    (m + 3).min(dim)
}

fn padded_dim(radius: f64, n_support: usize, dim: usize) -> usize {
    let a_max = std::f64::consts::SQRT_2 * radius;
    let goal = (a_max + ((n_support + 1) as f64).sqrt()).powi(2);
    let pad = (goal + 4.0 * goal.sqrt() + 12.0).ceil() as usize;
    pad.max(dim + 8)
}

/// Wigner distribution of a Hermitian unit-trace operator (approximately
/// positive operators such as metastable states are admitted).
pub fn wigner(rho: &CMat, spec: &GridSpec) -> Result<WignerGrid> {
    let dim = rho.nrows();
    if dim != rho.ncols() {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rho.ncols(),
        });
    }
    let scale = max_abs(rho).max(1e-300);
    if herm_residual(rho) > 1e-8 * scale {
        return Err(Error::InvalidParams("Wigner input must be Hermitian".into()));
    }
    if (trace(rho) - c64(1.0, 0.0)).norm() > 1e-6 {
        return Err(Error::InvalidParams("Wigner input must have unit trace".into()));
    }
    let needed = support_radius(rho)?;
    let degraded = spec.radius < needed;
    if degraded {
        log::warn!(
            "Wigner grid radius {:.2} below the support rule {:.2}; normalization may degrade",
            spec.radius,
            needed
        );
    }

    let n = spec.points;
    let axis: Vec<f64> = (0..n)
        .map(|k| -spec.radius + 2.0 * spec.radius * k as f64 / (n - 1) as f64)
        .collect();
    let cell = 2.0 * spec.radius / (n - 1) as f64;
    let cell_area = cell * cell;

    let n_pad = padded_dim(spec.radius, effective_support(rho), dim);
    let a = annihilation(n_pad)?;
    let ad = adjoint(&a);
    // Quadrature generators: D(x) = exp(-ixK), D(iy) = exp(iyM).
    let k_op = (&ad - &a).mapv(|z| z * c64(0.0, 1.0));
    let m_op = &ad + &a;
    let (k_vals, u) = crate::linalg::eigh_hermitian(&k_op)?;
    let (m_vals, v) = crate::linalg::eigh_hermitian(&m_op)?;
    let u_dag = adjoint(&u);
    let s_mix = u_dag.dot(&v);
    let s_mix_dag = adjoint(&s_mix);

    // rho in the K eigenbasis, using only the populated block.
    let u_crop = u.slice(ndarray::s![..dim, ..]).to_owned();
    let rho_tilde = adjoint(&u_crop).dot(rho).dot(&u_crop);

    // Parity in the M eigenbasis.
    let mut v_parity = v.clone();
    for (row, mut r) in v_parity.rows_mut().into_iter().enumerate() {
        if row % 2 == 1 {
            r.mapv_inplace(|z| -z);
        }
    }
    let pi_tilde = adjoint(&v).dot(&v_parity);

    // Phase table over the x axis: Phase[p, j] = e^{+i x_j k_p}.
    let mut x_phase = CMat::zeros((n_pad, n));
    for p in 0..n_pad {
        for (j, &x) in axis.iter().enumerate() {
            x_phase[(p, j)] = c64(0.0, x * k_vals[p]).exp();
        }
    }
    let x_phase_conj = x_phase.mapv(|z| z.conj());

    let two_over_pi = 2.0 / std::f64::consts::PI;
    let mut w = Array2::zeros((n, n));
    let mut max_im_residue = 0.0f64;
    let mut b_mask: CMat = Array2::zeros((n_pad, n_pad));
    for (i, &y) in axis.iter().enumerate() {
        // B = f Π̃ f† with f = diag(e^{iy m_p}).
        let f: Array1<Complex64> =
            Array1::from_iter(m_vals.iter().map(|&m| c64(0.0, y * m).exp()));
        for p in 0..n_pad {
            for q in 0..n_pad {
                b_mask[(p, q)] = f[p] * pi_tilde[(p, q)] * f[q].conj();
            }
        }
        let h = s_mix.dot(&b_mask).dot(&s_mix_dag);
        // M[p, q] = ρ̃[p, q] H[q, p]; W(x_j + iy) = uᵀ M ū with u the x phases.
        let mut m_weight: CMat = Array2::zeros((n_pad, n_pad));
        for p in 0..n_pad {
            for q in 0..n_pad {
                m_weight[(p, q)] = rho_tilde[(p, q)] * h[(q, p)];
            }
        }
        let partial = m_weight.dot(&x_phase_conj);
        for j in 0..n {
            let mut val = c64(0.0, 0.0);
            for p in 0..n_pad {
                val += x_phase[(p, j)] * partial[(p, j)];
            }
            val *= c64(two_over_pi, 0.0);
            max_im_residue = max_im_residue.max(val.im.abs());
            w[(i, j)] = val.re;
        }
    }
    if max_im_residue > 1e-10 {
        return Err(Error::Computation(format!(
            "Wigner imaginary residue {max_im_residue:.2e}"
        )));
    }

    let normalization = w.iter().sum::<f64>() * cell_area;
    Ok(WignerGrid {
        re_alpha: axis.clone(),
        im_alpha: axis,
        w,
        cell_area,
        normalization,
        degraded,
    })
}

/// A local maximum of the distribution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Lobe {
    pub re_alpha: f64,
    pub im_alpha: f64,
    pub height: f64,
}

impl Lobe {
    pub fn location(&self) -> Complex64 {
        c64(self.re_alpha, self.im_alpha)
    }
}

/// Local maxima above 10% of the global maximum, sub-grid refined by a
/// quadratic fit, sorted by height.
pub fn lobe_extract(grid: &WignerGrid) -> Vec<Lobe> {
    let n_im = grid.im_alpha.len();
    let n_re = grid.re_alpha.len();
    let global_max = grid.w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = 0.1 * global_max;
    let cell = grid.cell_area.sqrt();

    let mut lobes = Vec::new();
    for i in 1..n_im - 1 {
        for j in 1..n_re - 1 {
            let v = grid.w[(i, j)];
            if v < threshold {
                continue;
            }
            let mut is_max = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let vi = grid.w[((i as i64 + di) as usize, (j as i64 + dj) as usize)];
                    if vi >= v {
                        is_max = false;
                    }
                }
            }
            if !is_max {
                continue;
            }
            // Quadratic refinement from the 3x3 stencil.
            let fx = 0.5 * (grid.w[(i, j + 1)] - grid.w[(i, j - 1)]);
            let fy = 0.5 * (grid.w[(i + 1, j)] - grid.w[(i - 1, j)]);
            let fxx = grid.w[(i, j + 1)] - 2.0 * v + grid.w[(i, j - 1)];
            let fyy = grid.w[(i + 1, j)] - 2.0 * v + grid.w[(i - 1, j)];
            let fxy = 0.25
                * (grid.w[(i + 1, j + 1)] - grid.w[(i + 1, j - 1)] - grid.w[(i - 1, j + 1)]
                    + grid.w[(i - 1, j - 1)]);
            let det = fxx * fyy - fxy * fxy;
            let (mut dx, mut dy) = (0.0, 0.0);
            if det.abs() > 1e-300 {
                dx = (-fx * fyy + fy * fxy) / det;
                dy = (-fy * fxx + fx * fxy) / det;
            }
            dx = dx.clamp(-0.5, 0.5);
            dy = dy.clamp(-0.5, 0.5);
            let height = v
                + fx * dx
                + fy * dy
                + 0.5 * (fxx * dx * dx + fyy * dy * dy)
                + fxy * dx * dy;
            lobes.push(Lobe {
                re_alpha: grid.re_alpha[j] + dx * cell,
                im_alpha: grid.im_alpha[i] + dy * cell,
                height,
            });
        }
    }
    lobes.sort_by(|a, b| {
        b.height
            .total_cmp(&a.height)
            .then(a.im_alpha.total_cmp(&b.im_alpha))
            .then(a.re_alpha.total_cmp(&b.re_alpha))
    });
    lobes
}
