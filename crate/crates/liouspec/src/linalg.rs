//! Dense linear-algebra helpers shared across modules.

use ndarray::Array2;
use ndarray_linalg::{Eigh, Factorize, Solve, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::CMat;

/// Hermitian eigendecomposition with usable eigenvectors.
///
/// For complex Hermitian input in standard (row-major) layout the backend
/// hands back eigenvectors of conj(A); the input is forced to standard
/// layout here, the vectors are conjugated, and the residual is verified.
pub fn eigh_hermitian(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let a_std: CMat = a.as_standard_layout().to_owned();
    let (vals, vecs_raw) = a_std.eigh(UPLO::Lower)?;
    let vecs = vecs_raw.mapv(|z| z.conj());
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|z| z * Complex64::new(vals[j], 0.0));
    }
    let residual = crate::fockspace::max_abs(&(&a.dot(&vecs) - &scaled));
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if residual > 1e-10 * scale {
        return Err(Error::Computation(format!(
            "Hermitian eigendecomposition residual {residual:.3e}"
        )));
    }
    Ok((vals.to_vec(), vecs))
}

/// Solve A X = B for the matrix X with a single LU factorization.
pub fn solve_matrix(a: &CMat, b: &CMat) -> Result<CMat> {
    let lu = a.factorize()?;
    let mut x = Array2::zeros(b.raw_dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        let xj = lu.solve(&col.to_owned())?;
        x.column_mut(j).assign(&xj);
    }
    Ok(x)
}

/// 1-norm (maximum absolute column sum).
fn one_norm(a: &CMat) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by Padé(13) with scaling and squaring.
///
/// Independent of any eigendecomposition, so it can serve as a propagation
/// oracle for spectral methods.
pub fn expm(a: &CMat) -> Result<CMat> {
    const THETA_13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];

    let dim = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new(0.5f64.powi(s as i32), 0.0);
    let a1 = a.mapv(|z| z * scale);

    let eye: CMat = Array2::eye(dim);
    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let c = |k: usize| Complex64::new(B[k], 0.0);
    let u_inner = a6.mapv(|z| z * c(13)) + a4.mapv(|z| z * c(11)) + a2.mapv(|z| z * c(9));
    let u_poly = a6.dot(&u_inner)
        + a6.mapv(|z| z * c(7))
        + a4.mapv(|z| z * c(5))
        + a2.mapv(|z| z * c(3))
        + eye.mapv(|z| z * c(1));
    let u = a1.dot(&u_poly);

    let v_inner = a6.mapv(|z| z * c(12)) + a4.mapv(|z| z * c(10)) + a2.mapv(|z| z * c(8));
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * c(6))
        + a4.mapv(|z| z * c(4))
        + a2.mapv(|z| z * c(2))
        + eye.mapv(|z| z * c(0));

    let mut r = solve_matrix(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::fockspace::max_abs;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMat::zeros((4, 4));
        let e = expm(&z).unwrap();
        let eye: CMat = Array2::eye(4);
        assert!(max_abs(&(&e - &eye)) < 1e-14);
    }

    #[test]
    fn expm_diagonal() {
        let mut d = CMat::zeros((3, 3));
        d[(0, 0)] = c64(-1.0, 0.0);
        d[(1, 1)] = c64(0.5, 2.0);
        d[(2, 2)] = c64(0.0, -3.0);
        let e = expm(&d).unwrap();
        for k in 0..3 {
            assert!((e[(k, k)] - d[(k, k)].exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_matches_series_for_nilpotent() {
        // exp of a strictly upper triangular matrix terminates exactly.
        let mut n = CMat::zeros((3, 3));
        n[(0, 1)] = c64(2.0, 0.0);
        n[(1, 2)] = c64(-1.0, 1.0);
        let e = expm(&n).unwrap();
        let eye: CMat = Array2::eye(3);
        let series = eye + &n + n.dot(&n).mapv(|z| z * c64(0.5, 0.0));
        assert!(max_abs(&(&e - &series)) < 1e-13);
    }

    #[test]
    fn expm_group_property_with_scaling() {
        // A with norm large enough to force squaring.
        let mut a = CMat::zeros((2, 2));
        a[(0, 0)] = c64(0.0, 40.0);
        a[(0, 1)] = c64(13.0, 0.0);
        a[(1, 0)] = c64(-13.0, 0.0);
        a[(1, 1)] = c64(0.0, -40.0);
        let e1 = expm(&a).unwrap();
        let half = a.mapv(|z| z * c64(0.5, 0.0));
        let eh = expm(&half).unwrap();
        assert!(max_abs(&(&eh.dot(&eh) - &e1)) < 1e-10);
    }
}
