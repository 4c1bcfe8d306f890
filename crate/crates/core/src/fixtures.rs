//! Seeded random operators for property tests, the `verify` suite and
//! benchmarks.

use ndarray::{Array2, Array4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interval::Interval;
use crate::mpo::Mpo;
use crate::oracle::DenseOperator;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_pair<R: Rng>(rng: &mut R) -> C64 {
    // Box-Muller is plenty for test fixtures.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    C64::new(r * th.cos(), r * th.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> Array2<C64> {
    Array2::from_shape_simple_fn((dim, dim), || gaussian_pair(rng))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> Array2<C64> {
    let a = random_matrix(rng, dim);
    let ah = a.t().mapv(|z| z.conj());
    (a + ah).mapv(|z| z * 0.5)
}

pub fn random_dense<R: Rng>(rng: &mut R, window: Interval, hermitian: bool) -> DenseOperator {
    let dim = 1usize << window.len();
    let data = if hermitian {
        random_hermitian(rng, dim)
    } else {
        random_matrix(rng, dim)
    };
    DenseOperator::new(window, data)
        .expect("finite by construction")
        .with_hermitian_hint(hermitian)
}

/// Random MPO with every internal bond of dimension `bond` (clipped by the
/// maximal rank of each cut).
pub fn random_mpo<R: Rng>(rng: &mut R, n: usize, bond: usize) -> Mpo {
    let dims: Vec<usize> = (0..=n)
        .map(|b| {
            let cap = 4usize.saturating_pow(b.min(n - b) as u32);
            bond.min(cap).max(1)
        })
        .collect();
    let tensors = (0..n)
        .map(|i| Array4::from_shape_simple_fn((dims[i], dims[i + 1], 2, 2), || gaussian_pair(rng)))
        .collect();
    Mpo::from_tensors(tensors).expect("consistent bonds")
}

/// `(M + M†)/2` of a random MPO.
pub fn random_hermitian_mpo<R: Rng>(rng: &mut R, n: usize, bond: usize) -> Mpo {
    let m = random_mpo(rng, n, bond);
    let half = C64::new(0.5, 0.0);
    Mpo::add(&m, &m.adjoint(), half, half).expect("same length")
}
