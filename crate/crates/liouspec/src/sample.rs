//! Random operators and states for tests and examples.

use rand::Rng;

use crate::c64;
use crate::fockspace::{adjoint, hermitian_part, trace, CMat, DensityMatrix};

/// Dense matrix with entries uniform in the complex unit square.
pub fn random_operator(rng: &mut impl Rng, dim: usize) -> CMat {
    CMat::from_shape_fn((dim, dim), |_| {
        c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random Hermitian matrix.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> CMat {
    hermitian_part(&random_operator(rng, dim))
}

/// Full-rank random state G G† / Tr[G G†].
pub fn random_density_matrix(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    let g = random_operator(rng, dim);
    let gg = g.dot(&adjoint(&g));
    let tr = trace(&gg);
    let rho = hermitian_part(&gg.mapv(|z| z / tr));
    DensityMatrix::new(rho).expect("Gram construction yields a valid state")
}
