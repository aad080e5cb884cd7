//! Truncated Fock-basis operator algebra and operator/vector plumbing.
//!
//! Operators on the first `n_max` Fock levels are dense complex matrices
//! indexed by occupation number 0..n_max-1. Truncation simply drops rows and
//! columns beyond `n_max - 1`; convergence with the truncation is handled at
//! the workflow level (see the `spectral` module).
//!
//! Vectorization follows the column-stacking convention throughout the crate:
//! column `j` of an operator `A` occupies entries `j*dim .. (j+1)*dim` of
//! `vectorize(A)`. With this convention `vec(A X B) = (B^T ⊗ A) vec(X)`, so
//! left multiplication is `I ⊗ A` and right multiplication is `B^T ⊗ I`,
//! and the Hilbert-Schmidt product `Tr[A† B]` is the ordinary conjugated dot
//! product of the vectorized operators.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex operator over the truncated Fock basis.
pub type CMat = Array2<Complex64>;
/// Vectorized operator (length dim²).
pub type CVec = Array1<Complex64>;
/// Dense superoperator acting on vectorized operators (dim² × dim²).
pub type SuperOp = Array2<Complex64>;

fn check_dim(n_max: usize) -> Result<()> {
    if n_max < 2 {
        return Err(Error::InvalidParams(format!(
            "Fock truncation n_max = {n_max} must be at least 2"
        )));
    }
    Ok(())
}

/// Identity operator.
pub fn identity(dim: usize) -> CMat {
    Array2::eye(dim)
}

/// Annihilation operator â: entry (n-1, n) = √n.
pub fn annihilation(n_max: usize) -> Result<CMat> {
    check_dim(n_max)?;
    let mut a = CMat::zeros((n_max, n_max));
    for n in 1..n_max {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// Creation operator â†.
pub fn creation(n_max: usize) -> Result<CMat> {
    Ok(adjoint(&annihilation(n_max)?))
}

/// Number operator â†â = diag(0, 1, ..., n_max-1).
pub fn number_operator(n_max: usize) -> Result<CMat> {
    check_dim(n_max)?;
    let mut n = CMat::zeros((n_max, n_max));
    for k in 0..n_max {
        n[(k, k)] = Complex64::new(k as f64, 0.0);
    }
    Ok(n)
}

/// Fock-level parity operator e^{iπâ†â} = diag((-1)^n).
pub fn parity_operator(n_max: usize) -> Result<CMat> {
    check_dim(n_max)?;
    let mut p = CMat::zeros((n_max, n_max));
    for k in 0..n_max {
        p[(k, k)] = Complex64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    Ok(p)
}

/// Projector |k⟩⟨k|.
pub fn fock_projector(n_max: usize, k: usize) -> Result<CMat> {
    check_dim(n_max)?;
    if k >= n_max {
        return Err(Error::InvalidParams(format!(
            "Fock index {k} outside truncation {n_max}"
        )));
    }
    let mut p = CMat::zeros((n_max, n_max));
    p[(k, k)] = Complex64::new(1.0, 0.0);
    Ok(p)
}

/// Conjugate transpose A†.
pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Matrix trace.
pub fn trace(a: &CMat) -> Complex64 {
    a.diag().sum()
}

/// Hilbert-Schmidt inner product Tr[A†B].
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest entry magnitude, max_ij |A_ij|.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Hermiticity residual max_ij |A_ij - conj(A_ji)|.
pub fn herm_residual(a: &CMat) -> f64 {
    let dim = a.nrows();
    let mut r = 0.0f64;
    for i in 0..dim {
        for j in i..dim {
            r = r.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    r
}

/// Hermitian part (A + A†)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    let half = Complex64::new(0.5, 0.0);
    (a + &adjoint(a)).mapv(|z| z * half)
}

/// Column-stacking vectorization.
pub fn vectorize(a: &CMat) -> CVec {
    Array1::from_iter(a.t().iter().cloned())
}

/// Inverse of [`vectorize`]; fails unless the length is a perfect square.
pub fn devectorize(v: &CVec) -> Result<CMat> {
    let len = v.len();
    let dim = (len as f64).sqrt().round() as usize;
    if dim * dim != len {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: len,
        });
    }
    let m = Array2::from_shape_vec((dim, dim).f(), v.to_vec())
        .map_err(|e| Error::Computation(format!("devectorize reshape: {e}")))?;
    Ok(m.as_standard_layout().to_owned())
}

/// Kronecker product (A ⊗ B)[(i·p+k), (j·q+l)] = A[i,j] B[k,l].
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Superoperator of left multiplication, X ↦ AX, i.e. I ⊗ A.
pub fn left_multiply_superop(a: &CMat) -> SuperOp {
    let dim = a.nrows();
    kron(&identity(dim), a)
}

/// Superoperator of right multiplication, X ↦ XA, i.e. Aᵀ ⊗ I.
pub fn right_multiply_superop(a: &CMat) -> SuperOp {
    let dim = a.nrows();
    kron(&a.t().to_owned(), &identity(dim))
}

/// A validated physical state: Hermitian, unit trace, positive semidefinite
/// within tolerance.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Hermiticity tolerance on max |ρ - ρ†|.
    pub const TOL_HERM: f64 = 1e-10;
    /// Tolerance on |Tr ρ - 1|.
    pub const TOL_TRACE: f64 = 1e-10;
    /// Default tolerance on the negative part of the spectrum.
    pub const TOL_POS_DEFAULT: f64 = 1e-8;

    pub fn new(mat: CMat) -> Result<Self> {
        Self::with_tolerance(mat, Self::TOL_POS_DEFAULT)
    }

    /// Validate with a caller-chosen positivity tolerance (metastable states
    /// are only approximately positive).
    pub fn with_tolerance(mat: CMat, tol_pos: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        if mat.nrows() < 2 {
            return Err(Error::InvalidParams(
                "density matrix dimension must be at least 2".into(),
            ));
        }
        let herm = herm_residual(&mat);
        if herm > Self::TOL_HERM {
            return Err(Error::NotDensityMatrix(format!(
                "hermiticity residual {herm:.3e} exceeds {:.1e}",
                Self::TOL_HERM
            )));
        }
        let tr = trace(&mat);
        if (tr - Complex64::new(1.0, 0.0)).norm() > Self::TOL_TRACE {
            return Err(Error::NotDensityMatrix(format!(
                "trace {tr} deviates from one beyond {:.1e}",
                Self::TOL_TRACE
            )));
        }
        let min_eig = min_eigenvalue(&mat)?;
        if min_eig < -tol_pos {
            return Err(Error::NotDensityMatrix(format!(
                "minimum eigenvalue {min_eig:.3e} below -{tol_pos:.1e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue(a: &CMat) -> Result<f64> {
    let (vals, _) = a.eigh(UPLO::Lower)?;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Trace norm Tr|A| of a Hermitian operator.
pub fn trace_norm(a: &CMat) -> Result<f64> {
    let (vals, _) = a.eigh(UPLO::Lower)?;
    Ok(vals.iter().map(|v| v.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(rng: &mut impl Rng, n: usize) -> CMat {
        CMat::from_shape_fn((n, n), |_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation(3).unwrap();
        assert_eq!(a[(0, 1)], c64(1.0, 0.0));
        assert!((a[(1, 2)].re - 2.0f64.sqrt()).abs() < 1e-15);
        let nonzero: usize = a.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn annihilation_on_vacuum_and_one() {
        let a = annihilation(4).unwrap();
        let vac = CVec::from_shape_fn(4, |k| c64(if k == 0 { 1.0 } else { 0.0 }, 0.0));
        let one = CVec::from_shape_fn(4, |k| c64(if k == 1 { 1.0 } else { 0.0 }, 0.0));
        let avac = a.dot(&vac);
        assert!(avac.iter().all(|z| z.norm() < 1e-15));
        let aone = a.dot(&one);
        assert!((aone[0] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(aone.iter().skip(1).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn annihilation_rejects_small_truncation() {
        assert!(annihilation(1).is_err());
        assert!(annihilation(0).is_err());
    }

    #[test]
    fn vectorize_identity_column_stacking() {
        let v = vectorize(&identity(2));
        let expect = [1.0, 0.0, 0.0, 1.0];
        for (z, e) in v.iter().zip(expect) {
            assert!((z - c64(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn hs_inner_matches_vectorized_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_cmat(&mut rng, 4);
        let b = random_cmat(&mut rng, 4);
        let direct = hs_inner(&a, &b);
        let via_vec: Complex64 = vectorize(&a)
            .iter()
            .zip(vectorize(&b).iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        assert!((direct - via_vec).norm() < 1e-12);
    }

    #[test]
    fn multiply_superops_act_correctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_cmat(&mut rng, 4);
        let x = random_cmat(&mut rng, 4);
        let lx = devectorize(&left_multiply_superop(&a).dot(&vectorize(&x))).unwrap();
        let rx = devectorize(&right_multiply_superop(&a).dot(&vectorize(&x))).unwrap();
        let ax = a.dot(&x);
        let xa = x.dot(&a);
        assert!(max_abs(&(&lx - &ax)) < 1e-12);
        assert!(max_abs(&(&rx - &xa)) < 1e-12);
    }

    #[test]
    fn left_and_right_superops_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_cmat(&mut rng, 3);
        let l = left_multiply_superop(&a);
        let r = right_multiply_superop(&a);
        let diff = l.dot(&r) - r.dot(&l);
        assert!(max_abs(&diff) < 1e-12);
    }

    #[test]
    fn left_superop_of_identity_is_identity() {
        let l = left_multiply_superop(&identity(3));
        assert!(max_abs(&(&l - &identity(9))) < 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        let mut rho = CMat::zeros((3, 3));
        rho[(0, 0)] = c64(0.5, 0.0);
        rho[(1, 1)] = c64(0.5, 0.0);
        assert!(DensityMatrix::new(rho.clone()).is_ok());

        rho[(0, 1)] = c64(0.9, 0.0);
        rho[(1, 0)] = c64(0.9, 0.0);
        // Hermitian and unit trace but indefinite.
        assert!(DensityMatrix::new(rho).is_err());

        let mut nonherm = CMat::zeros((2, 2));
        nonherm[(0, 0)] = c64(1.0, 0.0);
        nonherm[(0, 1)] = c64(0.1, 0.0);
        assert!(DensityMatrix::new(nonherm).is_err());
    }

    #[test]
    fn number_expectation_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n_op = number_operator(5).unwrap();
        for _ in 0..20 {
            let g = random_cmat(&mut rng, 5);
            let gg = g.dot(&adjoint(&g));
            let rho = &gg / trace(&gg);
            let n_val = trace(&n_op.dot(&rho));
            assert!(n_val.im.abs() < 1e-10);
            assert!(n_val.re >= -1e-10);
        }
    }

    proptest! {
        #[test]
        fn vectorize_round_trip(dim in 2usize..8, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_cmat(&mut rng, dim);
            let back = devectorize(&vectorize(&a)).unwrap();
            prop_assert!(max_abs(&(&back - &a)) == 0.0);
        }

        #[test]
        fn superop_defining_identity(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_cmat(&mut rng, 4);
            let b = random_cmat(&mut rng, 4);
            let x = random_cmat(&mut rng, 4);
            let s = left_multiply_superop(&a).dot(&right_multiply_superop(&b));
            let via_superop = devectorize(&s.dot(&vectorize(&x))).unwrap();
            let direct = a.dot(&x).dot(&b);
            prop_assert!(max_abs(&(&via_superop - &direct)) < 1e-12);
        }
    }
}
