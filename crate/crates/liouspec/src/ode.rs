//! Adaptive Dormand-Prince 5(4) integration, generic over the state type.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Minimal state interface needed by the stepper.
pub trait OdeState: Clone {
    /// self += a * other
    fn scaled_add(&mut self, a: f64, other: &Self);
    fn max_abs(&self) -> f64;
}

impl OdeState for Array1<Complex64> {
    fn scaled_add(&mut self, a: f64, other: &Self) {
        self.zip_mut_with(other, |y, x| *y += Complex64::new(a, 0.0) * x);
    }

    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl OdeState for Complex64 {
    fn scaled_add(&mut self, a: f64, other: &Self) {
        *self += Complex64::new(a, 0.0) * other;
    }

    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    /// Local truncation error allowed per unit time (max-abs norm).
    pub tol_per_unit_time: f64,
    /// Abort when the state norm exceeds this bound.
    pub max_norm: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol_per_unit_time: 1e-9,
            max_norm: None,
        }
    }
}

// Dormand-Prince tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate y' = rhs(y) from `sample_times[0]`, returning the state at every
/// sample time. The first sample maps to `y0` itself.
pub fn integrate_adaptive<S, F>(
    rhs: F,
    y0: &S,
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<S>>
where
    S: OdeState,
    F: Fn(&S) -> S,
{
    if sample_times.is_empty() {
        return Err(Error::InvalidParams("empty sample time grid".into()));
    }
    for w in sample_times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParams(
                "sample times must be strictly increasing".into(),
            ));
        }
    }

    let tol = opts.tol_per_unit_time;
    let mut out = Vec::with_capacity(sample_times.len());
    out.push(y0.clone());

    let mut t = sample_times[0];
    let mut y = y0.clone();
    let mut k1 = rhs(&y);
    let mut h = {
        let scale = 0.01 * (1.0 + y.max_abs());
        (scale / (1e-12 + k1.max_abs())).min(0.1)
    };

    for (seg, &t_target) in sample_times.iter().enumerate().skip(1) {
        loop {
            if let Some(bound) = opts.max_norm {
                let norm = y.max_abs();
                if norm > bound {
                    return Err(Error::Diverged { t, norm });
                }
            }
            let mut hs = h.min(t_target - t);
            if hs < 1e-13 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }

            // Stages. k1 is carried over (FSAL).
            let mut k = Vec::with_capacity(7);
            k.push(k1.clone());
            for stage in 0..6 {
                let mut arg = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    let c = A[stage][j];
                    if c != 0.0 {
                        arg.scaled_add(hs * c, kj);
                    }
                }
                k.push(rhs(&arg));
            }

            let mut y5 = y.clone();
            let mut err = y.clone();
            err.scaled_add(-1.0, &y); // zero of the right shape
            for (j, kj) in k.iter().enumerate() {
                if B5[j] != 0.0 {
                    y5.scaled_add(hs * B5[j], kj);
                }
                let d = B5[j] - B4[j];
                if d != 0.0 {
                    err.scaled_add(hs * d, kj);
                }
            }

            let err_norm = err.max_abs();
            let tol_step = tol * hs;
            if err_norm <= tol_step {
                t += hs;
                y = y5;
                k1 = k.pop().expect("seven stages"); // FSAL: k7 = rhs(y5)
                let grow = if err_norm > 0.0 {
                    0.9 * (tol_step / err_norm).powf(0.2)
                } else {
                    5.0
                };
                h = hs * grow.clamp(0.2, 5.0);
                if (t_target - t) <= 1e-13 * t_target.abs().max(1.0) {
                    break;
                }
            } else {
                hs *= (0.9 * (tol_step / err_norm).powf(0.2)).clamp(0.1, 0.9);
                h = hs;
                if hs < 1e-13 * t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow { t });
                }
                continue;
            }
        }
        out.push(y.clone());
        debug_assert_eq!(out.len(), seg + 1);
    }
    Ok(out)
}
