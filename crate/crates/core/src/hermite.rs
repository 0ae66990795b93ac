//! Normalized Hermite functions, their tensor products, and tabulated bases.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::grid::QuadratureGrid;
use crate::quadrature::gauss_hermite;

const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_LOG: f64 = 230.258_509_299_404_56; // ln(1e100)

/// Hermite-function values without the Gaussian factor.
///
/// Returns `(v, log_scale)` with `phi_n(x) = v[n] * exp(log_scale)` for
/// `n = 0..=n_max`. The recurrence runs on normalized functions and the
/// vector is rescaled whenever it grows past `1e100`, so nothing overflows
/// far outside the oscillatory region.
pub fn phi_scaled(x: f64, n_max: usize) -> (Vec<f64>, f64) {
    let mut v = Vec::with_capacity(n_max + 1);
    let mut log_scale = -0.5 * x * x;
    v.push(PI.powf(-0.25));
    if n_max >= 1 {
        v.push(2f64.sqrt() * x * v[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * v[n] - (nf / (nf + 1.0)).sqrt() * v[n - 1];
        v.push(next);
        if next.abs() > RESCALE_ABOVE {
            for t in v.iter_mut() {
                *t /= RESCALE_ABOVE;
            }
            log_scale += RESCALE_LOG;
        }
    }
    (v, log_scale)
}

/// `phi_0(x), ..., phi_{n_max}(x)`.
pub fn eval_phi_1d(x: f64, n_max: usize) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return input(format!("Hermite evaluation point must be finite, got {x}"));
    }
    Ok(phi_1d_unchecked(x, n_max))
}

pub(crate) fn phi_1d_unchecked(x: f64, n_max: usize) -> Vec<f64> {
    let (mut v, log_scale) = phi_scaled(x, n_max);
    let s = log_scale.exp();
    if s.is_finite() && s > 0.0 {
        v.iter_mut().for_each(|t| *t *= s);
    } else {
        // underflow of the common factor: apply it entrywise through logs
        for t in v.iter_mut() {
            if *t != 0.0 {
                *t = t.signum() * (t.abs().ln() + log_scale).exp();
            }
        }
    }
    v
}

/// Multi-index `nu = (nu_1, ..., nu_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return input("multi-index needs d >= 1");
        }
        Ok(Self(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|nu|`, the Hermite level.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// Eigenvalue `2|nu| + d` of the Hermite operator.
    pub fn eigenvalue(&self) -> usize {
        2 * self.order() + self.dim()
    }
}

/// All multi-indices in `d` dimensions with `|nu| <= cap`, ordered by level
/// and then lexicographically.
pub fn multi_indices(d: usize, cap: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for level in 0..=cap {
        let mut current = vec![0usize; d];
        compositions(level, 0, &mut current, &mut out);
    }
    out
}

fn compositions(rest: usize, axis: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    let d = current.len();
    if axis + 1 == d {
        current[axis] = rest;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in (0..=rest).rev() {
        current[axis] = k;
        compositions(rest - k, axis + 1, current, out);
    }
}

/// `Phi_nu(x) = prod_j phi_{nu_j}(x_j)`.
pub fn eval_phi_multi(nu: &MultiIndex, x: &[f64]) -> Result<f64> {
    if nu.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: nu.dim(),
            got: x.len(),
        });
    }
    let mut prod = 1.0;
    for (&n, &xj) in nu.0.iter().zip(x) {
        prod *= eval_phi_1d(xj, n)?[n];
    }
    Ok(prod)
}

/// Tabulated one-dimensional basis on its own Gauss-Hermite rule.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    pub degree_cap: usize,
    pub nodes: Vec<f64>,
    /// Gauss weights for `e^{-x^2}`.
    pub weights: Vec<f64>,
    /// Weights for plain Lebesgue measure, `weights[j] * exp(nodes[j]^2)`.
    pub compensated: Vec<f64>,
    /// `phi_table[n][j] = phi_n(nodes[j])`.
    pub phi_table: Vec<Vec<f64>>,
}

impl HermiteBasis {
    /// Basis with the default node count `degree_cap + 1`.
    pub fn new(degree_cap: usize) -> Result<Self> {
        Self::with_nodes(degree_cap, degree_cap + 1)
    }

    pub fn with_nodes(degree_cap: usize, node_count: usize) -> Result<Self> {
        let (nodes, weights, compensated) = gauss_hermite(node_count)?;
        let phi_table = phi_table(&nodes, degree_cap);
        Ok(Self {
            degree_cap,
            nodes,
            weights,
            compensated,
            phi_table,
        })
    }

    /// Gram matrix `<phi_i, phi_j>` under the compensated weights.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let k = self.degree_cap + 1;
        let mut g = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..=i {
                let s: f64 = (0..self.nodes.len())
                    .map(|p| self.compensated[p] * self.phi_table[i][p] * self.phi_table[j][p])
                    .sum();
                g[i][j] = s;
                g[j][i] = s;
            }
        }
        g
    }

    /// CSV dump with columns `n,node_index,node,weight,phi`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,node_index,node,weight,phi\n");
        for (n, row) in self.phi_table.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{n},{j},{:.17e},{:.17e},{:.17e}",
                    self.nodes[j], self.weights[j], v
                );
            }
        }
        s
    }
}

/// `table[n][j] = phi_n(points[j])` for `n <= cap`.
pub fn phi_table(points: &[f64], cap: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; points.len()]; cap + 1];
    for (j, &x) in points.iter().enumerate() {
        for (n, v) in phi_1d_unchecked(x, cap).into_iter().enumerate() {
            table[n][j] = v;
        }
    }
    table
}

/// Level kernels `Phi_n(x, y) = sum_{|nu| = n} Phi_nu(x) Phi_nu(y)` for
/// `n <= cap`.
pub fn level_kernels(x: &[f64], y: &[f64], cap: usize) -> Vec<f64> {
    let mut acc: Vec<f64> = vec![0.0; cap + 1];
    acc[0] = 1.0;
    for (&xj, &yj) in x.iter().zip(y) {
        let px = phi_1d_unchecked(xj, cap);
        let py = phi_1d_unchecked(yj, cap);
        let a: Vec<f64> = px.iter().zip(&py).map(|(u, v)| u * v).collect();
        let mut next = vec![0.0; cap + 1];
        for (i, &ai) in acc.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (k, &ak) in a[..=cap - i].iter().enumerate() {
                next[i + k] += ai * ak;
            }
        }
        acc = next;
    }
    acc
}

/// Quadrature approximation of `int f(x) g(x) dx` on `grid`.
pub fn inner_product(f: &[Complex64], g: &[Complex64], grid: &QuadratureGrid) -> Result<Complex64> {
    let n = grid.len();
    if f.len() != n || g.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if f.len() != n { f.len() } else { g.len() },
        });
    }
    Ok((0..n).map(|p| f[p] * g[p] * grid.weight(p)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integer coefficients of the physicists' Hermite polynomials.
    fn hermite_coeffs(n: usize) -> Vec<i128> {
        let mut h0 = vec![1i128];
        if n == 0 {
            return h0;
        }
        let mut h1 = vec![0i128, 2];
        for k in 1..n {
            let mut next = vec![0i128; k + 2];
            for (i, c) in h1.iter().enumerate() {
                next[i + 1] += 2 * c;
            }
            for (i, c) in h0.iter().enumerate() {
                next[i] -= 2 * k as i128 * c;
            }
            h0 = h1;
            h1 = next;
        }
        h1
    }

    /// phi_n(p/q) from exact rational H_n(p/q).
    fn phi_oracle(n: usize, p: i128, q: i128) -> f64 {
        let c = hermite_coeffs(n);
        let mut num = 0i128;
        for (k, ck) in c.iter().enumerate() {
            num += ck * p.pow(k as u32) * q.pow((n - k) as u32);
        }
        let h = num as f64 / (q as f64).powi(n as i32);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let x = p as f64 / q as f64;
        (2f64.powi(n as i32) * PI.sqrt() * fact).powf(-0.5) * (-x * x / 2.0).exp() * h
    }

    #[test]
    fn phi0_at_origin() {
        let v = eval_phi_1d(0.0, 0).unwrap();
        assert!((v[0] - PI.powf(-0.25)).abs() < 1e-15);
        assert!((v[0] - 0.7511255).abs() < 1e-7);
        assert_eq!(eval_phi_1d(0.0, 1).unwrap()[1], 0.0);
    }

    #[test]
    fn recurrence_matches_exact_rational_oracle() {
        for (p, q) in [(1i128, 1i128), (1, 2), (-1, 2), (3, 2), (0, 1)] {
            let x = p as f64 / q as f64;
            let v = eval_phi_1d(x, 10).unwrap();
            for n in 0..=10 {
                let o = phi_oracle(n, p, q);
                assert!((v[n] - o).abs() <= 1e-12 * o.abs().max(1e-3), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(eval_phi_1d(f64::NAN, 3).is_err());
        assert!(eval_phi_1d(f64::INFINITY, 3).is_err());
    }

    #[test]
    fn multi_examples() {
        let nu = MultiIndex::new(vec![0, 0]).unwrap();
        assert!((eval_phi_multi(&nu, &[0.0, 0.0]).unwrap() - PI.powf(-0.5)).abs() < 1e-15);
        let nu = MultiIndex::new(vec![1, 0]).unwrap();
        assert_eq!(eval_phi_multi(&nu, &[0.0, 1.7]).unwrap(), 0.0);
        let nu = MultiIndex::new(vec![2, 3]).unwrap();
        let want = phi_oracle(2, 1, 2) * phi_oracle(3, -1, 2);
        assert!((eval_phi_multi(&nu, &[0.5, -0.5]).unwrap() - want).abs() < 1e-12);
        assert!(eval_phi_multi(&nu, &[0.5]).is_err());
        assert!(MultiIndex::new(vec![]).is_err());
    }

    #[test]
    fn no_overflow_far_out() {
        for &x in &[-40.0, -25.0, 17.0, 40.0] {
            let v = eval_phi_1d(x, 512).unwrap();
            assert!(v.iter().all(|t| t.is_finite()));
        }
        // beyond the turning point the values are tiny but the recurrence
        // still resolves them: phi_512(40) is about 1e-166
        let v = eval_phi_1d(40.0, 512).unwrap();
        assert!(v[512] > 0.0);
    }

    #[test]
    fn parity() {
        for &x in &[0.3, 1.7, 4.2] {
            let a = eval_phi_1d(x, 40).unwrap();
            let b = eval_phi_1d(-x, 40).unwrap();
            for n in 0..=40 {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(a[n], s * b[n], "n={n}");
            }
        }
    }

    #[test]
    fn orthonormal_gram() {
        let basis = HermiteBasis::new(64).unwrap();
        let g = basis.gram();
        let mut worst = 0.0f64;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - want).abs());
            }
        }
        assert!(worst <= 1e-10, "worst {worst}");
    }

    #[test]
    fn three_term_recurrence_holds_in_table() {
        let basis = HermiteBasis::new(48).unwrap();
        for (j, &x) in basis.nodes.iter().enumerate() {
            for n in 1..48 {
                let nf = n as f64;
                let lhs = basis.phi_table[n + 1][j];
                let rhs = (2.0 / (nf + 1.0)).sqrt() * x * basis.phi_table[n][j]
                    - (nf / (nf + 1.0)).sqrt() * basis.phi_table[n - 1][j];
                let scale = lhs.abs().max(basis.phi_table[n][j].abs()).max(1e-300);
                assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-12));
            }
        }
    }

    #[test]
    fn derivative_identity_against_finite_differences() {
        let h = 1e-5;
        for &x in &[-2.3, -0.4, 0.0, 0.9, 3.1] {
            let v = eval_phi_1d(x, 21).unwrap();
            let vp = eval_phi_1d(x + h, 20).unwrap();
            let vm = eval_phi_1d(x - h, 20).unwrap();
            for n in 1..=20 {
                let nf = n as f64;
                let ident = (nf / 2.0).sqrt() * v[n - 1] - ((nf + 1.0) / 2.0).sqrt() * v[n + 1];
                let fd = (vp[n] - vm[n]) / (2.0 * h);
                assert!((ident - fd).abs() < 1e-8, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn eigenfunction_relation() {
        // 4th-order central second difference on a fine uniform grid
        let h = 5e-3;
        let xs: Vec<f64> = (-2400..=2400).map(|k| k as f64 * h).collect();
        let cap = 32;
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| eval_phi_1d(x, cap).unwrap()).collect();
        for n in 0..=cap {
            let mut err = 0.0f64;
            let mut norm = 0.0f64;
            for i in 2..xs.len() - 2 {
                let f = |k: usize| rows[k][n];
                let d2 = (-f(i + 2) + 16.0 * f(i + 1) - 30.0 * f(i) + 16.0 * f(i - 1) - f(i - 2))
                    / (12.0 * h * h);
                let hf = -d2 + xs[i] * xs[i] * f(i);
                err = err.max((hf - (2.0 * n as f64 + 1.0) * f(i)).abs());
                norm = norm.max(f(i).abs());
            }
            assert!(err / norm <= 1e-5, "n={n}: {}", err / norm);
        }
    }

    #[test]
    fn inner_products() {
        let grid = QuadratureGrid::gauss_hermite(1, 8).unwrap();
        let pts: Vec<f64> = (0..grid.len()).map(|p| grid.point(p)[0]).collect();
        let col = |n: usize| -> Vec<Complex64> {
            pts.iter().map(|&x| Complex64::new(eval_phi_1d(x, n).unwrap()[n], 0.0)).collect()
        };
        assert!((inner_product(&col(3), &col(3), &grid).unwrap().re - 1.0).abs() < 1e-10);
        assert!(inner_product(&col(2), &col(5), &grid).unwrap().norm() < 1e-10);
        let xphi0: Vec<Complex64> = pts.iter().zip(col(0)).map(|(x, v)| v * *x).collect();
        assert!(inner_product(&col(0), &xphi0, &grid).unwrap().norm() < 1e-14);
        assert!(inner_product(&col(0), &col(0)[..3], &grid).is_err());
    }

    #[test]
    fn level_kernels_match_multi_index_sum() {
        let x = [0.3, -1.1];
        let y = [0.7, 0.4];
        let k = level_kernels(&x, &y, 6);
        for n in 0..=6 {
            let direct: f64 = multi_indices(2, 6)
                .iter()
                .filter(|nu| nu.order() == n)
                .map(|nu| eval_phi_multi(nu, &x).unwrap() * eval_phi_multi(nu, &y).unwrap())
                .sum();
            assert!((k[n] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn multi_index_enumeration() {
        let idx = multi_indices(2, 3);
        assert_eq!(idx.len(), 10);
        assert_eq!(idx[0].0, vec![0, 0]);
        assert!(idx.windows(2).all(|w| w[0].order() <= w[1].order()));
        assert_eq!(MultiIndex(vec![2, 1]).eigenvalue(), 8);
    }

    #[test]
    fn csv_export_has_every_entry() {
        let b = HermiteBasis::new(3).unwrap();
        let csv = b.to_csv();
        assert_eq!(csv.lines().count(), 1 + 4 * 4);
        assert!(csv.starts_with("n,node_index,node,weight,phi"));
    }
}
