//! Tensor-product quadrature grids on R^d.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::quadrature::{gauss_hermite, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    GaussHermite,
    Uniform,
    Legendre,
}

/// One-dimensional rule with weights for plain Lebesgue measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub kind: AxisKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    /// Gauss-Hermite nodes with compensated weights, so that
    /// `sum w_j g(x_j)` approximates `int g dx`.
    pub fn gauss_hermite(m: usize) -> Result<Self> {
        let (nodes, _, compensated) = gauss_hermite(m)?;
        Ok(Self {
            kind: AxisKind::GaussHermite,
            nodes,
            weights: compensated,
        })
    }

    /// Midpoint rule with `cells` equal cells on `[a, b]`.
    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(b > a) || !a.is_finite() || !b.is_finite() {
            return input(format!("uniform axis needs a < b and cells >= 1, got [{a}, {b}] x {cells}"));
        }
        let h = (b - a) / cells as f64;
        Ok(Self {
            kind: AxisKind::Uniform,
            nodes: (0..cells).map(|k| a + (k as f64 + 0.5) * h).collect(),
            weights: vec![h; cells],
        })
    }

    /// Gauss-Legendre rule mapped to `[a, b]`.
    pub fn legendre(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(b > a) {
            return input(format!("legendre axis needs a < b, got [{a}, {b}]"));
        }
        let (x, w) = gauss_legendre(m)?;
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        Ok(Self {
            kind: AxisKind::Legendre,
            nodes: x.iter().map(|t| c + h * t).collect(),
            weights: w.iter().map(|t| h * t).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest `|node|`.
    pub fn half_width(&self) -> f64 {
        self.nodes.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Tensor product of one rule per coordinate, all with the same node count.
/// Points are stored in row-major order, last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureGrid {
    pub dim: usize,
    pub axes: Vec<Axis>,
}

impl QuadratureGrid {
    /// The same rule on each of `dim` coordinates.
    pub fn new(dim: usize, axis: Axis) -> Result<Self> {
        Self::from_axes(vec![axis; dim])
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return input("grid dimension must be >= 1");
        }
        let m = axes[0].len();
        if m == 0 {
            return input("grid axis has no nodes");
        }
        if axes.iter().any(|a| a.len() != m) {
            return input("all grid axes must have the same node count");
        }
        Ok(Self {
            dim: axes.len(),
            axes,
        })
    }

    pub fn gauss_hermite(dim: usize, m: usize) -> Result<Self> {
        Self::new(dim, Axis::gauss_hermite(m)?)
    }

    pub fn uniform(dim: usize, a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::new(dim, Axis::uniform(a, b, cells)?)
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axis_len(&self) -> usize {
        self.axes[0].len()
    }

    pub fn len(&self) -> usize {
        self.axis_len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest `|node|` over all axes.
    pub fn half_width(&self) -> f64 {
        self.axes.iter().map(Axis::half_width).fold(0.0, f64::max)
    }

    /// Per-axis node indices of point `p`.
    pub fn multi_index(&self, mut p: usize) -> Vec<usize> {
        let m = self.axis_len();
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = p % m;
            p /= m;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let m = self.axis_len();
        idx.iter().fold(0, |acc, &i| acc * m + i)
    }

    pub fn point(&self, p: usize) -> Vec<f64> {
        self.multi_index(p)
            .into_iter()
            .enumerate()
            .map(|(k, i)| self.axes[k].nodes[i])
            .collect()
    }

    /// Lebesgue quadrature weight of point `p`.
    pub fn weight(&self, p: usize) -> f64 {
        self.multi_index(p)
            .into_iter()
            .enumerate()
            .map(|(k, i)| self.axes[k].weights[i])
            .product()
    }

    /// Weight for integrals against `e^{-|x|^2}`.
    pub fn gaussian_weight(&self, p: usize) -> f64 {
        let x = self.point(p);
        self.weight(p) * (-x.iter().map(|t| t * t).sum::<f64>()).exp()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|p| self.point(p)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|p| self.weight(p)).collect()
    }
}
