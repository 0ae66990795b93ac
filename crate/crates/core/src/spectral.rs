//! Hermite analysis and synthesis for matrix fields, and spectral multipliers.
//!
//! Both directions are separable tensor contractions applied one axis at a
//! time, so a d-dimensional transform costs d one-dimensional passes.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::field::{matrix_from_rows, matrix_to_rows, MatrixField};
use crate::grid::QuadratureGrid;
use crate::hermite::{multi_indices, phi_table, MultiIndex};
use crate::matrix::{frobenius, zeros, CMat};

/// Fourier-Hermite coefficients `f^(nu)` for all `|nu| <= degree_cap`.
#[derive(Debug, Clone)]
pub struct SpectralCoeffs {
    pub dim: usize,
    pub degree_cap: usize,
    pub matrix_size: usize,
    pub indices: Vec<MultiIndex>,
    pub values: Vec<CMat>,
    lookup: HashMap<MultiIndex, usize>,
}

impl SpectralCoeffs {
    pub fn zeros(dim: usize, degree_cap: usize, matrix_size: usize) -> Self {
        let indices = multi_indices(dim, degree_cap);
        let values = vec![zeros(matrix_size); indices.len()];
        Self::from_parts(dim, degree_cap, matrix_size, indices, values)
    }

    fn from_parts(
        dim: usize,
        degree_cap: usize,
        matrix_size: usize,
        indices: Vec<MultiIndex>,
        values: Vec<CMat>,
    ) -> Self {
        let lookup = indices.iter().cloned().enumerate().map(|(k, nu)| (nu, k)).collect();
        Self {
            dim,
            degree_cap,
            matrix_size,
            indices,
            values,
            lookup,
        }
    }

    pub fn get(&self, nu: &MultiIndex) -> Option<&CMat> {
        self.lookup.get(nu).map(|&k| &self.values[k])
    }

    pub fn set(&mut self, nu: &MultiIndex, value: CMat) -> Result<()> {
        let k = *self
            .lookup
            .get(nu)
            .ok_or_else(|| Error::Input(format!("index {:?} outside |nu| <= {}", nu.0, self.degree_cap)))?;
        if value.shape() != (self.matrix_size, self.matrix_size) {
            return input("coefficient has the wrong matrix size");
        }
        self.values[k] = value;
        Ok(())
    }

    /// New coefficients `mu(2|nu| + d) f^(nu)`.
    pub fn scaled(&self, mu: impl Fn(usize) -> Complex64) -> Self {
        let mut out = self.clone();
        for (nu, v) in out.indices.iter().zip(out.values.iter_mut()) {
            *v *= mu(nu.eigenvalue());
        }
        out
    }

    /// Only the level `|nu| = n`.
    pub fn level(&self, n: usize) -> Self {
        let mut out = self.clone();
        for (nu, v) in out.indices.iter().zip(out.values.iter_mut()) {
            if nu.order() != n {
                v.fill(Complex64::new(0.0, 0.0));
            }
        }
        out
    }

    /// `sum_nu ||f^(nu)||_2^2` with the unnormalized trace.
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| frobenius(v).powi(2)).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CoeffsDoc {
            dim: self.dim,
            degree_cap: self.degree_cap,
            matrix_size: self.matrix_size,
            entries: self
                .indices
                .iter()
                .zip(&self.values)
                .map(|(nu, v)| (nu.0.clone(), matrix_to_rows(v)))
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CoeffsDoc = serde_json::from_str(text)?;
        let mut out = Self::zeros(doc.dim, doc.degree_cap, doc.matrix_size);
        for (nu, rows) in doc.entries {
            let m = matrix_from_rows(doc.matrix_size, &rows)?;
            out.set(&MultiIndex::new(nu)?, m)?;
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffsDoc {
    dim: usize,
    degree_cap: usize,
    matrix_size: usize,
    entries: Vec<(Vec<usize>, Vec<[f64; 2]>)>,
}

/// Applies `mats[k]` (rows = output length) along axis `k` of a tensor with
/// `channels` trailing scalars per entry.
pub(crate) fn contract(data: &[Complex64], shape: &[usize], channels: usize, mats: &[Vec<Vec<f64>>]) -> Vec<Complex64> {
    let mut cur = data.to_vec();
    let mut shape = shape.to_vec();
    for (k, m) in mats.iter().enumerate() {
        let n_in = shape[k];
        let n_out = m.len();
        let outer: usize = shape[..k].iter().product();
        let inner: usize = shape[k + 1..].iter().product::<usize>() * channels;
        let mut next = vec![Complex64::new(0.0, 0.0); outer * n_out * inner];
        for o in 0..outer {
            let src = &cur[o * n_in * inner..(o + 1) * n_in * inner];
            let dst = &mut next[o * n_out * inner..(o + 1) * n_out * inner];
            for (a, row) in m.iter().enumerate() {
                let d = &mut dst[a * inner..(a + 1) * inner];
                for (b, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let s = &src[b * inner..(b + 1) * inner];
                    for (x, y) in d.iter_mut().zip(s) {
                        *x += y * w;
                    }
                }
            }
        }
        cur = next;
        shape[k] = n_out;
    }
    cur
}

pub(crate) fn flatten(f: &MatrixField) -> Vec<Complex64> {
    let ch = f.matrix_size * f.matrix_size;
    let mut out = Vec::with_capacity(f.len() * ch);
    for s in &f.samples {
        for i in 0..f.matrix_size {
            for j in 0..f.matrix_size {
                out.push(s[(i, j)]);
            }
        }
    }
    debug_assert_eq!(out.len(), f.len() * ch);
    out
}

/// `f^(nu) = int f(x) Phi_nu(x) dx` for `|nu| <= degree_cap`.
pub fn analyze(f: &MatrixField, degree_cap: usize) -> Result<SpectralCoeffs> {
    let m = f.grid.axis_len();
    if m < degree_cap + 1 {
        return input(format!(
            "analysis to degree {degree_cap} needs at least {} nodes per axis, grid has {m}",
            degree_cap + 1
        ));
    }
    let d = f.grid.dim;
    let n = f.matrix_size;
    let mats: Vec<Vec<Vec<f64>>> = f
        .grid
        .axes
        .iter()
        .map(|axis| {
            phi_table(&axis.nodes, degree_cap)
                .iter()
                .map(|row| row.iter().zip(&axis.weights).map(|(p, w)| p * w).collect())
                .collect()
        })
        .collect();
    let boxed = contract(&flatten(f), &vec![m; d], n * n, &mats);
    let mut out = SpectralCoeffs::zeros(d, degree_cap, n);
    let side = degree_cap + 1;
    for (nu, v) in out.indices.iter().zip(out.values.iter_mut()) {
        let pos = nu.0.iter().fold(0, |acc, &i| acc * side + i);
        let chunk = &boxed[pos * n * n..(pos + 1) * n * n];
        *v = CMat::from_fn(n, n, |i, j| chunk[i * n + j]);
    }
    Ok(out)
}

/// `sum_nu c(nu) Phi_nu(x)` at the points of `grid`.
pub fn synthesize(c: &SpectralCoeffs, grid: &QuadratureGrid) -> Result<MatrixField> {
    if grid.dim != c.dim {
        return Err(Error::DimensionMismatch {
            expected: c.dim,
            got: grid.dim,
        });
    }
    let d = c.dim;
    let n = c.matrix_size;
    let side = c.degree_cap + 1;
    let mut boxed = vec![Complex64::new(0.0, 0.0); side.pow(d as u32) * n * n];
    for (nu, v) in c.indices.iter().zip(&c.values) {
        let pos = nu.0.iter().fold(0, |acc, &i| acc * side + i);
        for i in 0..n {
            for j in 0..n {
                boxed[pos * n * n + i * n + j] = v[(i, j)];
            }
        }
    }
    let m = grid.axis_len();
    let mats: Vec<Vec<Vec<f64>>> = grid
        .axes
        .iter()
        .map(|axis| {
            let table = phi_table(&axis.nodes, c.degree_cap);
            (0..m).map(|j| (0..side).map(|k| table[k][j]).collect()).collect()
        })
        .collect();
    let flat = contract(&boxed, &vec![side; d], n * n, &mats);
    let samples = (0..grid.len())
        .map(|p| CMat::from_fn(n, n, |i, j| flat[p * n * n + i * n + j]))
        .collect();
    MatrixField::new(grid.clone(), n, samples)
}

/// Hermite projection `P_n f`.
pub fn project(f: &MatrixField, n: usize, degree_cap: usize) -> Result<MatrixField> {
    if n > degree_cap {
        return input(format!("projection level {n} exceeds degree cap {degree_cap}"));
    }
    synthesize(&analyze(f, degree_cap)?.level(n), &f.grid)
}

/// Spectral multiplier `sum_n mu(2n + d) P_n f` on the span up to `degree_cap`.
pub fn apply_multiplier(
    f: &MatrixField,
    degree_cap: usize,
    mu: impl Fn(usize) -> Complex64,
) -> Result<MatrixField> {
    synthesize(&analyze(f, degree_cap)?.scaled(mu), &f.grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::eval_phi_multi;
    use crate::matrix::from_real;
    use crate::random::random_coeffs;

    #[test]
    fn single_mode_is_recovered() {
        let grid = QuadratureGrid::gauss_hermite(1, 10).unwrap();
        let c = from_real(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let nu = MultiIndex(vec![2]);
        let f = MatrixField::scalar_times(grid, |x| eval_phi_multi(&nu, x).unwrap(), &c).unwrap();
        let co = analyze(&f, 8).unwrap();
        for (k, v) in co.indices.iter().zip(&co.values) {
            let want = if *k == nu { c.clone() } else { zeros(2) };
            assert!((v - want).norm() < 1e-10);
        }
        assert!(analyze(&f, 10).is_err());
    }

    #[test]
    fn round_trip_and_parseval_2d() {
        let grid = QuadratureGrid::gauss_hermite(2, 14).unwrap();
        let c = random_coeffs(2, 12, 2, 7);
        let f = synthesize(&c, &grid).unwrap();
        let back = analyze(&f, 12).unwrap();
        for (a, b) in back.values.iter().zip(&c.values) {
            assert!((a - b).norm() < 1e-10);
        }
        let l2: f64 = f
            .samples
            .iter()
            .enumerate()
            .map(|(p, s)| grid.weight(p) * frobenius(s).powi(2))
            .sum();
        assert!((l2 - c.l2_norm_sq()).abs() <= 1e-8 * l2);
    }

    #[test]
    fn projections_resolve_identity() {
        let grid = QuadratureGrid::gauss_hermite(1, 20).unwrap();
        let f = synthesize(&random_coeffs(1, 15, 2, 3), &grid).unwrap();
        let mut total = MatrixField::zeros(grid.clone(), 2);
        for n in 0..=15 {
            total = total.add(&project(&f, n, 15).unwrap()).unwrap();
        }
        let err = f.sub(&total).unwrap().sup_norm();
        assert!(err < 1e-10);
        assert!(project(&f, 16, 15).is_err());
        let p1p2 = project(&project(&f, 2, 15).unwrap(), 1, 15).unwrap();
        assert!(p1p2.sup_norm() < 1e-10);
    }

    #[test]
    fn coefficient_json_round_trip() {
        let c = random_coeffs(2, 3, 2, 1);
        let back = SpectralCoeffs::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back.values, c.values);
        assert_eq!(back.indices, c.indices);
    }
}
