//! Gauss rules from the symmetric tridiagonal (Jacobi) eigenproblem.
//!
//! Eigenvalues of the Jacobi matrix are found with implicit QL and then
//! polished by Newton steps on the three-term recurrence, so nodes carry
//! full double precision even for a few thousand points.

use crate::error::{input, Error, Result};
use crate::hermite::phi_scaled;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// sub-diagonal `off` (`off.len() == diag.len() - 1`), sorted ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return input("off-diagonal must have length n-1");
    }
    let mut d = diag.to_vec();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::Numeric(format!(
                    "implicit QL failed to converge at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

/// `m`-point Gauss-Hermite rule for the weight `e^{-x^2}`.
///
/// Returns `(nodes, weights, compensated)` where `compensated[j] =
/// weights[j] * exp(nodes[j]^2)` is obtained from the Christoffel sum
/// `1 / sum_{k<m} phi_k(x_j)^2` and never through a large exponential.
pub fn gauss_hermite(m: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return input("Gauss-Hermite rule needs m >= 1");
    }
    let diag = vec![0.0; m];
    let off: Vec<f64> = (1..m).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let eig = tridiagonal_eigenvalues(&diag, &off)?;

    // Nodes are symmetric: polish the nonnegative half and mirror.
    let half = m / 2;
    let mut positive: Vec<f64> = eig[m - half..].iter().map(|x| x.abs()).collect();
    for x in positive.iter_mut() {
        for _ in 0..8 {
            let (v, _) = phi_scaled(*x, m);
            let deriv = (2.0 * m as f64).sqrt() * v[m - 1] - *x * v[m];
            if deriv == 0.0 {
                break;
            }
            let step = v[m] / deriv;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    let mut nodes = Vec::with_capacity(m);
    nodes.extend(positive.iter().rev().map(|x| -x));
    if m % 2 == 1 {
        nodes.push(0.0);
    }
    nodes.extend(positive.iter().copied());

    let mut weights = Vec::with_capacity(m);
    let mut compensated = Vec::with_capacity(m);
    for &x in &nodes {
        // sum_{k<m} phi_k(x)^2 = exp(2*log_scale) * sum v_k^2
        let (v, log_scale) = phi_scaled(x, m - 1);
        let sum_sq: f64 = v.iter().map(|t| t * t).sum();
        let log_comp = -2.0 * log_scale - sum_sq.ln();
        compensated.push(log_comp.exp());
        weights.push((log_comp - x * x).exp());
    }
    Ok((nodes, weights, compensated))
}

/// `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return input("Gauss-Legendre rule needs m >= 1");
    }
    let diag = vec![0.0; m];
    let off: Vec<f64> = (1..m)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let eig = tridiagonal_eigenvalues(&diag, &off)?;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for x0 in eig {
        let mut x = x0;
        let mut dp = 1.0;
        for _ in 0..8 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    // enforce exact symmetry
    for j in 0..m / 2 {
        let a = 0.5 * (nodes[m - 1 - j] - nodes[j]);
        nodes[j] = -a;
        nodes[m - 1 - j] = a;
        let w = 0.5 * (weights[j] + weights[m - 1 - j]);
        weights[j] = w;
        weights[m - 1 - j] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped affinely onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LegendreRule {
    pub fn new(m: usize) -> Result<Self> {
        let (nodes, weights) = gauss_legendre(m)?;
        Ok(Self { nodes, weights })
    }

    /// Nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_point_rule() {
        let (x, w, _) = gauss_hermite(1).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_point_rule_is_closed_form() {
        let (x, w, _) = gauss_hermite(2).unwrap();
        let r = 0.5f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        for wi in &w {
            assert!((wi - PI.sqrt() / 2.0).abs() < 1e-15);
        }
        let second: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((second - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn twenty_points_fourth_moment() {
        let (x, w, _) = gauss_hermite(20).unwrap();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_points_rejected() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn nodes_increasing_weights_positive() {
        for m in [3, 17, 64, 257, 1000] {
            let (x, w, c) = gauss_hermite(m).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]), "m={m}");
            assert!(w.iter().all(|&v| v > 0.0 || v == 0.0));
            assert!(c.iter().all(|&v| v > 0.0), "m={m}");
            let total: f64 = w.iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-13, "m={m}: {total}");
        }
    }

    #[test]
    fn legendre_exactness() {
        let rule = LegendreRule::new(12).unwrap();
        for k in 0..24 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k={k}");
        }
        let got = rule.integrate(0.0, 3.0, |x| x * x);
        assert!((got - 9.0).abs() < 1e-13);
    }

    #[test]
    fn large_legendre_rule() {
        let (x, w) = gauss_legendre(512).unwrap();
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }
}
