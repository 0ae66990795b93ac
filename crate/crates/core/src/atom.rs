//! Column atoms: mean-zero matrix functions on a cube with unit column size.
//!
//! An atom on `Q` is `a(y) = sum_j b_j(y) A_j` with the scalar profiles
//! `b_j(y) = w(u) u_1^j`, `u = (y - corner) / l(Q)` and the window
//! `w(u) = prod_k sin^2(pi u_k)`, which vanishes to second order on the
//! boundary. The matrices `A_j` are random; `A_0` is chosen to cancel the
//! mean and everything is scaled so that
//! `Tr[(int_Q |a|^2)^{1/2}] = |Q|^{-1/2}`.

use std::f64::consts::PI;

use crate::error::{input, Result};
use crate::field::MatrixField;
use crate::grid::{Axis, AxisKind, QuadratureGrid};
use crate::matrix::{op_norm, psd_sqrt, zeros, CMat};
use crate::quadrature::gauss_legendre;
use crate::random::{gaussian_matrix, substream};

/// Number of profiles `b_0, ..., b_{TERMS-1}`.
pub const TERMS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if center.is_empty() || !(side > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return input("cube needs d >= 1, finite center and positive side");
        }
        Ok(Self { center, side })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn lower(&self, k: usize) -> f64 {
        self.center[k] - 0.5 * self.side
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.center)
            .all(|(t, c)| (t - c).abs() <= 0.5 * self.side * (1.0 + 1e-14))
    }
}

/// `sin^2(pi u)`.
pub fn window(u: f64) -> f64 {
    let s = (PI * u).sin();
    s * s
}

/// Profile `b_j` at local coordinates `u` in `[0,1]^d`.
pub fn profile(j: usize, u: &[f64]) -> f64 {
    u.iter().map(|&t| window(t)).product::<f64>() * u[0].powi(j as i32)
}

/// `int_0^1 w(u)^e u^j du` on 64 composite Gauss points.
fn moment(e: i32, j: usize) -> f64 {
    let (x, w) = gauss_legendre(16).expect("fixed rule");
    let cells = 8;
    let h = 1.0 / cells as f64;
    let mut s = 0.0;
    for c in 0..cells {
        for (xi, wi) in x.iter().zip(&w) {
            let u = (c as f64 + 0.5 * (xi + 1.0)) * h;
            s += 0.5 * h * wi * window(u).powi(e) * u.powi(j as i32);
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct ColumnAtom {
    pub cube: Cube,
    /// The matrices `A_j`, already mean-corrected and scaled.
    pub coeffs: Vec<CMat>,
    /// Samples on a composite Gauss grid covering the cube.
    pub field: MatrixField,
}

#[derive(Debug, Clone, Copy)]
pub struct AtomCheck {
    pub support: bool,
    pub mean_norm: f64,
    pub size: f64,
    pub size_bound: f64,
}

impl AtomCheck {
    pub fn passes(&self) -> bool {
        self.support && self.mean_norm <= 1e-10 && self.size <= self.size_bound * (1.0 + 1e-10)
    }
}

/// `int_Q |a|^2 dy` as a function of the `A_j`, from exact profile moments.
fn column_square(cube: &Cube, coeffs: &[CMat]) -> CMat {
    let d = cube.dim();
    let vol = cube.volume();
    let rest = moment(2, 0).powi(d as i32 - 1);
    let n = coeffs[0].nrows();
    let mut m = zeros(n);
    for (j, aj) in coeffs.iter().enumerate() {
        for (k, ak) in coeffs.iter().enumerate() {
            let g = vol * rest * moment(2, j + k);
            m += (aj.adjoint() * ak).scale(g);
        }
    }
    m
}

fn trace_sqrt(m: &CMat) -> Result<f64> {
    Ok(psd_sqrt(m)?.trace().re)
}

impl ColumnAtom {
    /// `a(y)` at a point; zero outside the cube.
    pub fn eval(&self, y: &[f64]) -> CMat {
        let n = self.coeffs[0].nrows();
        if !self.cube.contains(y) {
            return zeros(n);
        }
        let u: Vec<f64> = (0..y.len())
            .map(|k| (y[k] - self.cube.lower(k)) / self.cube.side)
            .collect();
        let mut out = zeros(n);
        for (j, a) in self.coeffs.iter().enumerate() {
            out += a.scale(profile(j, &u));
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a = a.scale(c);
        }
        out.field = out.field.scale(num_complex::Complex64::new(c, 0.0));
        out
    }

    /// Checks support, mean zero and the column size condition on the
    /// sampled field.
    pub fn validate(&self) -> Result<AtomCheck> {
        let grid = &self.field.grid;
        let support = (0..grid.len()).all(|p| self.cube.contains(&grid.point(p)));
        let mean_norm = op_norm(&self.field.integral());
        let n = self.field.matrix_size;
        let mut sq = zeros(n);
        for (p, s) in self.field.samples.iter().enumerate() {
            sq += (s.adjoint() * s).scale(grid.weight(p));
        }
        Ok(AtomCheck {
            support,
            mean_norm,
            size: trace_sqrt(&sq)?,
            size_bound: self.cube.volume().powf(-0.5),
        })
    }
}

/// Composite Gauss-Legendre axis on `[a, b]`: `cells` cells, 4 points each.
fn composite_axis(a: f64, b: f64, cells: usize) -> Result<Axis> {
    let (x, w) = gauss_legendre(4)?;
    let h = (b - a) / cells as f64;
    let mut nodes = Vec::with_capacity(cells * 4);
    let mut weights = Vec::with_capacity(cells * 4);
    for c in 0..cells {
        let left = a + c as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(left + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    Ok(Axis {
        kind: AxisKind::Legendre,
        nodes,
        weights,
    })
}

/// Random column atom on `cube` with `cells` sampling cells per side.
pub fn make_column_atom_with(seed: u64, cube: &Cube, matrix_size: usize, cells: usize) -> Result<ColumnAtom> {
    if matrix_size == 0 || cells == 0 {
        return input("atom needs matrix size >= 1 and at least one cell");
    }
    let d = cube.dim();
    for stream in 0..16u64 {
        let mut r = substream(seed, stream);
        let mut coeffs: Vec<CMat> = (0..TERMS).map(|_| gaussian_matrix(&mut r, matrix_size)).collect();
        // int b_j is proportional to moment(1, j); choose A_0 to cancel the mean
        let m0 = moment(1, 0);
        let mut shift = zeros(matrix_size);
        for (j, a) in coeffs.iter().enumerate().skip(1) {
            shift += a.scale(moment(1, j) / m0);
        }
        coeffs[0] = -shift;
        let size = trace_sqrt(&column_square(cube, &coeffs))?;
        if !(size > 1e-12) {
            continue;
        }
        let s = cube.volume().powf(-0.5) / size;
        for a in coeffs.iter_mut() {
            *a = a.scale(s);
        }
        let axes = (0..d)
            .map(|k| composite_axis(cube.lower(k), cube.lower(k) + cube.side, cells))
            .collect::<Result<Vec<_>>>()?;
        let grid = QuadratureGrid::from_axes(axes)?;
        let mut atom = ColumnAtom {
            cube: cube.clone(),
            coeffs,
            field: MatrixField::zeros(grid.clone(), matrix_size),
        };
        let samples = (0..grid.len()).map(|p| atom.eval(&grid.point(p))).collect();
        atom.field = MatrixField::new(grid, matrix_size, samples)?;
        return Ok(atom);
    }
    input("could not draw a nondegenerate atom")
}

/// Random column atom with the default 64 cells per side.
pub fn make_column_atom(seed: u64, cube: &Cube, matrix_size: usize) -> Result<ColumnAtom> {
    make_column_atom_with(seed, cube, matrix_size, 64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_validate() {
        for seed in 0..5 {
            let cube = Cube::new(vec![0.3], 0.5).unwrap();
            let a = make_column_atom(seed, &cube, 2).unwrap();
            let chk = a.validate().unwrap();
            assert!(chk.passes(), "{chk:?}");
            assert!((chk.size - chk.size_bound).abs() <= 1e-10 * chk.size_bound);
            assert!(!a.scaled(2.0).validate().unwrap().passes());
        }
    }

    #[test]
    fn translation_keeps_conditions() {
        let a = make_column_atom(7, &Cube::new(vec![0.0], 2.0).unwrap(), 2).unwrap();
        let b = make_column_atom(7, &Cube::new(vec![5.5], 2.0).unwrap(), 2).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
        let (ca, cb) = (a.validate().unwrap(), b.validate().unwrap());
        assert!(ca.passes() && cb.passes());
        assert!((ca.size - cb.size).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_atom() {
        let cube = Cube::new(vec![0.2, -0.4], 0.25).unwrap();
        let a = make_column_atom_with(1, &cube, 2, 24).unwrap();
        let chk = a.validate().unwrap();
        assert!(chk.passes(), "{chk:?}");
        assert_eq!(a.eval(&[3.0, 3.0]), zeros(2));
    }

    #[test]
    fn scalar_atom() {
        let a = make_column_atom(3, &Cube::new(vec![1.0], 0.125).unwrap(), 1).unwrap();
        assert!(a.validate().unwrap().passes());
    }
}
