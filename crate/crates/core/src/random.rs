//! Seeded random test objects.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::CMat;
use crate::spectral::SpectralCoeffs;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_matrix(rng: &mut impl Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn hermitian_matrix(rng: &mut impl Rng, n: usize) -> CMat {
    let g = gaussian_matrix(rng, n);
    (&g + g.adjoint()).scale(0.5)
}

/// `g g^*` for a Gaussian `g`.
pub fn psd_matrix(rng: &mut impl Rng, n: usize) -> CMat {
    let g = gaussian_matrix(rng, n);
    &g * g.adjoint()
}

fn fill(dim: usize, cap: usize, n: usize, seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> CMat) -> SpectralCoeffs {
    let mut r = rng(seed);
    let mut c = SpectralCoeffs::zeros(dim, cap, n);
    for (nu, v) in c.indices.iter().zip(c.values.iter_mut()) {
        let decay = (1.0 + nu.order() as f64).powi(-2);
        *v = draw(&mut r).scale(decay);
    }
    c
}

/// Band-limited coefficients with complex Gaussian entries and a fixed
/// `(1 + |nu|)^{-2}` envelope, so raising `cap` extends the same profile.
pub fn random_coeffs(dim: usize, cap: usize, n: usize, seed: u64) -> SpectralCoeffs {
    fill(dim, cap, n, seed, |r| gaussian_matrix(r, n))
}

/// As [`random_coeffs`] with Hermitian coefficients, giving a
/// Hermitian-valued field.
pub fn random_hermitian_coeffs(dim: usize, cap: usize, n: usize, seed: u64) -> SpectralCoeffs {
    fill(dim, cap, n, seed, |r| hermitian_matrix(r, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::is_hermitian;

    #[test]
    fn reproducible_and_nested() {
        let a = random_coeffs(1, 8, 2, 42);
        let b = random_coeffs(1, 8, 2, 42);
        assert_eq!(a.values, b.values);
        let big = random_coeffs(1, 16, 2, 42);
        assert_eq!(&big.values[..9], &a.values[..]);
        let h = random_hermitian_coeffs(2, 4, 3, 1);
        assert!(h.values.iter().all(|v| is_hermitian(v, 1e-14)));
    }
}
