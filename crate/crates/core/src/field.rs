//! Matrix-valued functions sampled on a quadrature grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::grid::QuadratureGrid;
use crate::matrix::{is_hermitian, min_eigenvalue, op_norm, zeros, CMat};

/// Samples `f(x_p)` of an `n x n`-matrix valued function on `grid`.
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub grid: QuadratureGrid,
    pub matrix_size: usize,
    pub samples: Vec<CMat>,
    pub hermitian: bool,
    pub positive: bool,
}

impl MatrixField {
    /// Wraps samples and determines the Hermitian / PSD flags.
    pub fn new(grid: QuadratureGrid, matrix_size: usize, samples: Vec<CMat>) -> Result<Self> {
        if matrix_size == 0 {
            return input("matrix size must be >= 1");
        }
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        if let Some(bad) = samples
            .iter()
            .find(|s| s.nrows() != matrix_size || s.ncols() != matrix_size)
        {
            return input(format!(
                "sample of shape {:?} in a field of {matrix_size}x{matrix_size} matrices",
                bad.shape()
            ));
        }
        let hermitian = samples.iter().all(|s| is_hermitian(s, 1e-12));
        let positive = hermitian
            && samples.iter().all(|s| {
                min_eigenvalue(s).map_or(false, |m| m >= -1e-10 * op_norm(s))
            });
        Ok(Self {
            grid,
            matrix_size,
            samples,
            hermitian,
            positive,
        })
    }

    pub fn zeros(grid: QuadratureGrid, matrix_size: usize) -> Self {
        let samples = vec![zeros(matrix_size); grid.len()];
        Self {
            grid,
            matrix_size,
            samples,
            hermitian: true,
            positive: true,
        }
    }

    pub fn from_fn(
        grid: QuadratureGrid,
        matrix_size: usize,
        f: impl Fn(&[f64]) -> CMat,
    ) -> Result<Self> {
        let samples = (0..grid.len()).map(|p| f(&grid.point(p))).collect();
        Self::new(grid, matrix_size, samples)
    }

    /// `x -> profile(x) * c`.
    pub fn scalar_times(grid: QuadratureGrid, profile: impl Fn(&[f64]) -> f64, c: &CMat) -> Result<Self> {
        let n = c.nrows();
        Self::from_fn(grid, n, |x| c.scale(profile(x)))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn map(&self, g: impl Fn(&CMat) -> CMat) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.matrix_size,
            self.samples.iter().map(g).collect(),
        )
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for s in out.samples.iter_mut() {
            *s *= c;
        }
        if c.im != 0.0 {
            out.hermitian = out.samples.iter().all(|s| is_hermitian(s, 1e-12));
        }
        out.positive = out.positive && c.im == 0.0 && c.re >= 0.0;
        out
    }

    fn check_conform(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.matrix_size != other.matrix_size {
            return input("fields live on different grids or matrix sizes");
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_conform(other)?;
        Self::new(
            self.grid.clone(),
            self.matrix_size,
            self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_conform(other)?;
        Self::new(
            self.grid.clone(),
            self.matrix_size,
            self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
        )
    }

    /// `x -> f(x)^*`.
    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for s in out.samples.iter_mut() {
            *s = s.adjoint();
        }
        out
    }

    /// `x -> f(-x)`; needs an axis symmetric about the origin.
    pub fn reflect(&self) -> Result<Self> {
        let m = self.grid.axis_len();
        let symmetric = self.grid.axes.iter().all(|a| {
            (0..m).all(|i| (a.nodes[i] + a.nodes[m - 1 - i]).abs() <= 1e-12 * (1.0 + a.nodes[i].abs()))
        });
        if !symmetric {
            return input("reflection needs a grid symmetric about the origin");
        }
        let mut out = self.clone();
        for p in 0..self.len() {
            let idx: Vec<usize> = self.grid.multi_index(p).into_iter().map(|i| m - 1 - i).collect();
            out.samples[p] = self.samples[self.grid.linear_index(&idx)].clone();
        }
        Ok(out)
    }

    /// Largest sample operator norm.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// `int f(x) dx` by quadrature.
    pub fn integral(&self) -> CMat {
        let mut acc = zeros(self.matrix_size);
        for (p, s) in self.samples.iter().enumerate() {
            acc += s.scale(self.grid.weight(p));
        }
        acc
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FieldDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FieldDoc = serde_json::from_str(text)?;
        doc.into_field()
    }
}

/// Row-major `[re, im]` pairs.
pub(crate) fn matrix_to_rows(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

pub(crate) fn matrix_from_rows(n: usize, data: &[[f64; 2]]) -> Result<CMat> {
    if data.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: data.len(),
        });
    }
    Ok(CMat::from_fn(n, n, |i, j| {
        let [re, im] = data[i * n + j];
        Complex64::new(re, im)
    }))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDoc {
    grid: QuadratureGrid,
    matrix_size: usize,
    samples: Vec<Vec<[f64; 2]>>,
}

impl From<&MatrixField> for FieldDoc {
    fn from(f: &MatrixField) -> Self {
        Self {
            grid: f.grid.clone(),
            matrix_size: f.matrix_size,
            samples: f.samples.iter().map(matrix_to_rows).collect(),
        }
    }
}

impl FieldDoc {
    fn into_field(self) -> Result<MatrixField> {
        let n = self.matrix_size;
        let samples = self
            .samples
            .iter()
            .map(|s| matrix_from_rows(n, s))
            .collect::<Result<Vec<_>>>()?;
        MatrixField::new(self.grid, n, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_real, identity};

    #[test]
    fn flags_and_shapes() {
        let g = QuadratureGrid::gauss_hermite(1, 6).unwrap();
        let f = MatrixField::scalar_times(g.clone(), |x| (-x[0] * x[0]).exp(), &identity(2)).unwrap();
        assert!(f.hermitian && f.positive);
        let h = f.scale(Complex64::new(-1.0, 0.0));
        assert!(h.hermitian && !h.positive);
        let n = MatrixField::scalar_times(g.clone(), |_| 1.0, &from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(!n.hermitian);
        assert!(MatrixField::new(g.clone(), 2, vec![identity(2); 3]).is_err());
        assert!(MatrixField::new(g, 2, vec![identity(3); 6]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = QuadratureGrid::gauss_hermite(2, 3).unwrap();
        let f = MatrixField::from_fn(g, 2, |x| {
            CMat::from_fn(2, 2, |i, j| Complex64::new(x[0] + i as f64, x[1] * j as f64))
        })
        .unwrap();
        let back = MatrixField::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.grid, f.grid);
        for (a, b) in back.samples.iter().zip(&f.samples) {
            assert_eq!(a, b);
        }
        assert!(MatrixField::from_json("{\"grid\":1}").is_err());
    }

    #[test]
    fn reflection() {
        let g = QuadratureGrid::gauss_hermite(2, 5).unwrap();
        let f = MatrixField::scalar_times(g, |x| x[0] + 2.0 * x[1], &identity(1)).unwrap();
        let r = f.reflect().unwrap();
        for p in 0..f.len() {
            assert!((r.samples[p][(0, 0)] + f.samples[p][(0, 0)]).norm() < 1e-12);
        }
        let u = QuadratureGrid::uniform(1, 0.0, 1.0, 4).unwrap();
        assert!(MatrixField::zeros(u, 1).reflect().is_err());
    }
}
