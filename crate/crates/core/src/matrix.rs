//! Dense Hermitian matrix utilities: spectral calculus and the PSD order.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{input, Error, Result};

pub type CMat = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn zeros(n: usize) -> CMat {
    CMat::from_element(n, n, ZERO)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real matrix lifted to complex entries.
pub fn from_real(rows: usize, cols: usize, data_row_major: &[f64]) -> CMat {
    CMat::from_fn(rows, cols, |i, j| Complex64::new(data_row_major[i * cols + j], 0.0))
}

/// Frobenius norm.
pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = 1.0 + frobenius(a);
    let n = a.nrows();
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// `(a + a^*) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 1 {
        return Ok((vec![a[(0, 0)].re], identity(1)));
    }
    if n == 2 {
        return Ok(eigen_2x2(a));
    }
    let h = hermitian_part(a);
    let eig = nalgebra::SymmetricEigen::try_new(h, 1e-15, 10_000).ok_or_else(|| {
        Error::Numeric(format!("Hermitian eigensolver did not converge for {a}"))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// Closed-form eigen-decomposition of a 2 x 2 Hermitian matrix.
fn eigen_2x2(a: &CMat) -> (Vec<f64>, CMat) {
    let p = a[(0, 0)].re;
    let q = a[(1, 1)].re;
    let b = 0.5 * (a[(0, 1)] + a[(1, 0)].conj());
    let mean = 0.5 * (p + q);
    let half = 0.5 * (p - q);
    let r = half.hypot(b.norm());
    let vals = vec![mean - r, mean + r];
    if b.norm() <= 1e-300 {
        // already diagonal
        let mut v = zeros(2);
        if p <= q {
            v[(0, 0)] = Complex64::new(1.0, 0.0);
            v[(1, 1)] = Complex64::new(1.0, 0.0);
        } else {
            v[(1, 0)] = Complex64::new(1.0, 0.0);
            v[(0, 1)] = Complex64::new(1.0, 0.0);
        }
        return (vals, v);
    }
    // two equivalent forms of the top eigenvector; take the larger one
    let upper = if half >= 0.0 {
        // (r + half, conj(b)) is large
        let v = [Complex64::new(r + half, 0.0), b.conj()];
        normalize2(v)
    } else {
        let v = [b, Complex64::new(r - half, 0.0)];
        normalize2(v)
    };
    // lower eigenvector is orthogonal to the upper one
    let lower = [-upper[1].conj(), upper[0].conj()];
    let v = CMat::from_fn(2, 2, |i, j| if j == 0 { lower[i] } else { upper[i] });
    (vals, v)
}

fn normalize2(v: [Complex64; 2]) -> [Complex64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    let n = a.nrows();
    match n {
        1 => Ok(vec![a[(0, 0)].re]),
        2 => {
            let p = a[(0, 0)].re;
            let q = a[(1, 1)].re;
            let b = 0.5 * (a[(0, 1)] + a[(1, 0)].conj());
            let r = (0.5 * (p - q)).hypot(b.norm());
            let m = 0.5 * (p + q);
            Ok(vec![m - r, m + r])
        }
        _ => Ok(hermitian_eigen(a)?.0),
    }
}

pub fn min_eigenvalue(a: &CMat) -> Result<f64> {
    Ok(eigenvalues(a)?[0])
}

/// `g(a)` for Hermitian `a` through its eigendecomposition.
pub fn hermitian_apply(a: &CMat, g: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(a)?;
    let n = a.nrows();
    let mut out = zeros(n);
    for (k, &lam) in vals.iter().enumerate() {
        let gl = g(lam);
        if gl == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs[(i, k)] * gl;
            for j in 0..n {
                out[(i, j)] += vi * vecs[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

/// `|a| = (a^* a)^{1/2}`.
pub fn matrix_abs(a: &CMat) -> Result<CMat> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return input(format!("matrix_abs needs finite entries, got {a}"));
    }
    psd_sqrt(&(a.adjoint() * a))
}

/// Square root of a PSD matrix; slightly negative eigenvalues are clamped.
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    hermitian_apply(a, |l| l.max(0.0).sqrt())
}

/// Singular values of `a`, ascending.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    Ok(eigenvalues(&(a.adjoint() * a))?
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect())
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a)
        .map(|s| s.last().copied().unwrap_or(0.0))
        .unwrap_or(f64::NAN)
}

/// `A <= B` in the PSD order, up to `tol * (1 + ||B||)`.
pub fn psd_leq(a: &CMat, b: &CMat, tol: f64) -> Result<bool> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: b.nrows(),
            got: a.nrows(),
        });
    }
    if !is_hermitian(a, 1e-12) || !is_hermitian(b, 1e-12) {
        return input("psd_leq needs Hermitian arguments");
    }
    Ok(min_eigenvalue(&(b - a))? >= -tol * (1.0 + op_norm(b)))
}

/// Smallest `C >= 0` with `-C e <= s <= C e`, for Hermitian `s` and PSD `e`.
///
/// This is the spectral radius of `e^{-1/2} s e^{-1/2}` on the range of
/// `e`. If `s` has weight on the (numerical) kernel of `e` no finite
/// constant exists and infinity is returned.
pub fn sandwich_constant(s: &CMat, e: &CMat) -> Result<f64> {
    let (lam, u) = hermitian_eigen(e)?;
    let n = e.nrows();
    let top = lam.iter().fold(0.0f64, |m, l| m.max(*l));
    let s_norm = op_norm(s);
    if s_norm == 0.0 {
        return Ok(0.0);
    }
    if top <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let cut = 1e-13 * top;
    let st = u.adjoint() * s * &u;
    let keep: Vec<usize> = (0..n).filter(|&k| lam[k] > cut).collect();
    for k in 0..n {
        if lam[k] <= cut {
            let leak: f64 = (0..n).map(|j| st[(k, j)].norm()).fold(0.0, f64::max);
            if leak > 1e-12 * s_norm {
                return Ok(f64::INFINITY);
            }
        }
    }
    let m = keep.len();
    let w = CMat::from_fn(m, m, |i, j| {
        let (a, b) = (keep[i], keep[j]);
        st[(a, b)] / (lam[a] * lam[b]).sqrt()
    });
    let ev = eigenvalues(&w)?;
    Ok(ev.iter().fold(0.0f64, |acc, l| acc.max(l.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn herm(n: usize, vals: &[f64]) -> CMat {
        let mut a = zeros(n);
        let mut k = 0;
        for i in 0..n {
            a[(i, i)] = c(vals[k], 0.0);
            k += 1;
            for j in 0..i {
                a[(i, j)] = c(vals[k], vals[k + 1]);
                a[(j, i)] = a[(i, j)].conj();
                k += 2;
            }
        }
        a
    }

    #[test]
    fn abs_examples() {
        let a = from_real(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        let r = matrix_abs(&a).unwrap();
        assert!((&r - from_real(2, 2, &[3.0, 0.0, 0.0, 4.0])).norm() < 1e-14);
        assert!(matrix_abs(&zeros(3)).unwrap().norm() == 0.0);
        let n = from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let r = matrix_abs(&n).unwrap();
        assert!((&r - from_real(2, 2, &[0.0, 0.0, 0.0, 1.0])).norm() < 1e-14);
        let mut bad = zeros(1);
        bad[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matrix_abs(&bad).is_err());
    }

    #[test]
    fn psd_examples() {
        let z = zeros(2);
        let i = identity(2);
        assert!(psd_leq(&z, &i, 0.0).unwrap());
        let a = from_real(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(!psd_leq(&a, &i, 1e-10).unwrap());
        assert!(psd_leq(&a, &a, 0.0).unwrap());
        let nh = from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(psd_leq(&nh, &i, 0.0).is_err());
    }

    #[test]
    fn sandwich_constant_cases() {
        let e = identity(2);
        let s = from_real(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        assert!((sandwich_constant(&s, &e).unwrap() - 3.0).abs() < 1e-14);
        let e = from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sandwich_constant(&s, &e).unwrap(), f64::INFINITY);
        let s = from_real(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!((sandwich_constant(&s, &e).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(sandwich_constant(&zeros(2), &e).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn eigen_reconstructs(n in 1usize..5, seed in proptest::collection::vec(-3.0f64..3.0, 16)) {
            let a = herm(n, &seed);
            let (vals, vecs) = hermitian_eigen(&a).unwrap();
            let d = CMat::from_fn(n, n, |i, j| if i == j { c(vals[i], 0.0) } else { c(0.0, 0.0) });
            let back = &vecs * d * vecs.adjoint();
            prop_assert!((back - &a).norm() < 1e-12 * (1.0 + a.norm()));
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let fast = eigenvalues(&a).unwrap();
            for (x, y) in fast.iter().zip(&vals) {
                prop_assert!((x - y).abs() < 1e-12 * (1.0 + a.norm()));
            }
        }

        #[test]
        fn abs_squares_to_gram(n in 1usize..4, re in proptest::collection::vec(-2.0f64..2.0, 9), im in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let a = CMat::from_fn(n, n, |i, j| c(re[i * 3 + j], im[i * 3 + j]));
            let r = matrix_abs(&a).unwrap();
            prop_assert!(is_hermitian(&r, 1e-12));
            prop_assert!(min_eigenvalue(&r).unwrap() >= -1e-12);
            let g = a.adjoint() * &a;
            prop_assert!((&r * &r - &g).norm() < 1e-10 * (1.0 + g.norm()));
        }

        #[test]
        fn psd_order_is_partial_order(vals in proptest::collection::vec(-2.0f64..2.0, 27)) {
            let a = herm(3, &vals[0..9]);
            let b = herm(3, &vals[9..18]);
            let cpos = herm(3, &vals[18..27]);
            let pa = &a * a.adjoint();
            let pb = &b * b.adjoint();
            let pc = &cpos * cpos.adjoint();
            // A <= A + P <= A + P + Q
            let x = a.clone();
            let y = &a + &pb;
            let z = &y + &pc;
            prop_assert!(psd_leq(&x, &x, 0.0).unwrap());
            prop_assert!(psd_leq(&x, &y, 1e-12).unwrap());
            prop_assert!(psd_leq(&y, &z, 1e-12).unwrap());
            prop_assert!(psd_leq(&x, &z, 1e-12).unwrap());
            // antisymmetry: both directions only when the difference is tiny
            if psd_leq(&x, &y, 1e-12).unwrap() && psd_leq(&y, &x, 1e-12).unwrap() {
                prop_assert!((&y - &x).norm() < 1e-9 * (1.0 + y.norm()));
            }
            let _ = pa;
        }

        #[test]
        fn sandwich_constant_is_tight(vals in proptest::collection::vec(-2.0f64..2.0, 18)) {
            let s = herm(3, &vals[0..9]);
            let g = herm(3, &vals[9..18]);
            let e = &g * g.adjoint() + identity(3).scale(0.1);
            let cst = sandwich_constant(&s, &e).unwrap();
            let up = e.scale(cst) - &s;
            let lo = e.scale(cst) + &s;
            let scale = 1.0 + cst * op_norm(&e);
            let m = min_eigenvalue(&up).unwrap().min(min_eigenvalue(&lo).unwrap());
            prop_assert!(m >= -1e-10 * scale);
            prop_assert!(m <= 1e-8 * scale);
        }
    }
}
