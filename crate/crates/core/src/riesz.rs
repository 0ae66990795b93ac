//! Bochner-Riesz means of Hermite expansions and the probes built on them.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{input, Result};
use crate::field::MatrixField;
use crate::grid::QuadratureGrid;
use crate::hermite::level_kernels;
use crate::matrix::{hermitian_part, min_eigenvalue, op_norm, psd_sqrt, sandwich_constant, zeros, CMat};
use crate::probe::{ProbeBuilder, ProbeReport};
use crate::quadrature::gauss_legendre;
use crate::spectral::{analyze, synthesize, SpectralCoeffs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszParams {
    pub r: f64,
    pub alpha: Complex64,
    pub dim: usize,
}

impl RieszParams {
    pub fn new(r: f64, alpha: Complex64, dim: usize) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return input(format!("Bochner-Riesz radius must be positive, got {r}"));
        }
        if !(alpha.re > 0.0) {
            return input(format!("Bochner-Riesz order needs Re(alpha) > 0, got {alpha}"));
        }
        if dim == 0 {
            return input("dimension must be >= 1");
        }
        Ok(Self { r, alpha, dim })
    }

    pub fn real(r: f64, alpha: f64, dim: usize) -> Result<Self> {
        Self::new(r, Complex64::new(alpha, 0.0), dim)
    }

    /// `(1 - N/R)_+^alpha` on the principal branch.
    pub fn factor(&self, eigenvalue: usize) -> Complex64 {
        riesz_factor(eigenvalue as f64, self.r, self.alpha)
    }

    /// Largest level `n` with `2n + d < R`, if any.
    pub fn top_level(&self) -> Option<usize> {
        let limit = (self.r - self.dim as f64) / 2.0;
        if limit <= 0.0 {
            return None;
        }
        let n = limit.ceil() as usize - 1;
        Some(n)
    }
}

pub fn riesz_factor(n: f64, r: f64, alpha: Complex64) -> Complex64 {
    let base = 1.0 - n / r;
    if base <= 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        (alpha * base.ln()).exp()
    }
}

/// `S_R^alpha f`, computed on the levels the grid resolves.
pub fn riesz_apply(f: &MatrixField, params: &RieszParams) -> Result<MatrixField> {
    let Some(top) = params.top_level() else {
        return Ok(MatrixField::zeros(f.grid.clone(), f.matrix_size));
    };
    let cap = top.min(f.grid.axis_len() - 1);
    let c = analyze(f, cap)?;
    synthesize(&c.scaled(|n| params.factor(n)), &f.grid)
}

/// Kernel `S_R^alpha(x, y) = sum_n (1 - N/R)_+^alpha Phi_n(x, y)`.
pub fn riesz_kernel(x: &[f64], y: &[f64], params: &RieszParams) -> Result<Complex64> {
    if x.len() != params.dim || y.len() != params.dim {
        return input("kernel points must match the dimension");
    }
    if x.iter().chain(y).any(|t| !t.is_finite()) {
        return input("kernel points must be finite");
    }
    let Some(top) = params.top_level() else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let k = level_kernels(x, y, top);
    Ok(k.iter()
        .enumerate()
        .map(|(n, v)| params.factor(2 * n + params.dim) * *v)
        .sum())
}

/// `Gamma(a + b + 1) / (Gamma(a + 1) Gamma(b))`.
pub fn lift_constant(alpha: f64, beta: f64) -> f64 {
    (ln_gamma(alpha + beta + 1.0) - ln_gamma(alpha + 1.0) - ln_gamma(beta)).exp()
}

/// Quadrature nodes and weights on `[0, 1]` for the order-lift integral:
/// panels between consecutive breakpoints, each with a Gauss rule pulled
/// through the smoothstep map so both panel ends are resolved.
fn lift_rule(breaks: &[f64], per_panel: usize) -> Result<Vec<(f64, f64)>> {
    let (x, w) = gauss_legendre(per_panel)?;
    let mut pts = Vec::new();
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        for (xi, wi) in x.iter().zip(&w) {
            let u = 0.5 * (xi + 1.0);
            let s = u * u * (3.0 - 2.0 * u);
            let ds = 6.0 * u * (1.0 - u);
            pts.push((a + (b - a) * s, 0.5 * wi * (b - a) * ds));
        }
    }
    Ok(pts)
}

/// Relative L2 residual of
/// `S_R^{a+b} f = c int_0^1 (1-t)^{b-1} t^a S_{Rt}^a f dt`,
/// evaluated on the Hermite coefficients of `f`.
pub fn order_lift_residual_coeffs(
    c: &SpectralCoeffs,
    r: f64,
    alpha: f64,
    beta: f64,
    quadrature_count: usize,
) -> Result<f64> {
    if quadrature_count < 8 {
        return input(format!("order-lift quadrature needs >= 8 points, got {quadrature_count}"));
    }
    if !(alpha > 0.0) || !(beta > 0.0) || !(r > 0.0) {
        return input("order lift needs R, alpha, beta > 0");
    }
    let norm = c.l2_norm_sq().sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let d = c.dim;
    let mut breaks: Vec<f64> = (0..=c.degree_cap)
        .map(|n| (2 * n + d) as f64 / r)
        .filter(|t| *t > 0.0 && *t < 1.0)
        .collect();
    breaks.insert(0, 0.0);
    breaks.push(1.0);
    let rule = lift_rule(&breaks, quadrature_count)?;
    let k = lift_constant(alpha, beta);
    let a = Complex64::new(alpha, 0.0);
    let mut err = 0.0;
    for (nu, v) in c.indices.iter().zip(&c.values) {
        let n = nu.eigenvalue() as f64;
        let exact = riesz_factor(n, r, Complex64::new(alpha + beta, 0.0)).re;
        let quad: f64 = rule
            .iter()
            .map(|&(t, w)| w * (1.0 - t).powf(beta - 1.0) * t.powf(alpha) * riesz_factor(n, r * t, a).re)
            .sum::<f64>()
            * k;
        err += (exact - quad).powi(2) * v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(err.sqrt() / norm)
}

pub fn order_lift_residual(
    f: &MatrixField,
    r: f64,
    alpha: f64,
    beta: f64,
    quadrature_count: usize,
) -> Result<f64> {
    let cap = f.grid.axis_len() - 1;
    order_lift_residual_coeffs(&analyze(f, cap)?, r, alpha, beta, quadrature_count)
}

/// `sum_{|k| <= k_max} (2^k t)^{d/2} (1 + 2^k t)^{-alpha-1/2}`.
pub fn scale_function_g(t: f64, alpha: f64, d: usize, k_max: i32) -> f64 {
    (-k_max..=k_max)
        .map(|k| {
            let s = 2f64.powi(k) * t;
            s.powf(d as f64 / 2.0) * (1.0 + s).powf(-alpha - 0.5)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayMode {
    /// One dimension, pointwise envelope with exponent `-alpha - 5/6`.
    D1,
    /// `d >= 2`, `L_p` tail outside a ball of radius `r`.
    Hd { p: f64 },
}

#[derive(Debug, Clone)]
pub struct DecayLattice {
    pub r_values: Vec<f64>,
    /// d1: coordinates used for both `x` and `y`.
    pub coords: Vec<f64>,
    /// hd: centers `x`.
    pub centers: Vec<Vec<f64>>,
    /// hd: exclusion radii.
    pub radii: Vec<f64>,
}

fn d1_envelope(x: f64, y: f64, r: f64, alpha: f64) -> f64 {
    let s = r.sqrt();
    let e = -alpha - 5.0 / 6.0;
    s * ((1.0 + s * (x - y).abs()).powf(e) + (1.0 + s * (x + y).abs()).powf(e))
}

/// Ratios of |kernel| to the decay envelope over the lattice.
///
/// In `D1` mode slices are the radii `R`; in `Hd` mode slices are the
/// exclusion radii, with `R` kept as a coordinate.
pub fn kernel_decay_report(alpha: f64, dim: usize, mode: DecayMode, lattice: &DecayLattice) -> Result<ProbeReport> {
    if lattice.r_values.is_empty() {
        return input("kernel decay lattice needs at least one R");
    }
    match mode {
        DecayMode::D1 => {
            if dim != 1 {
                return input("d1 mode needs d = 1");
            }
            if !(alpha > 1.0 / 6.0) {
                return input("the one-dimensional decay bound needs alpha > 1/6");
            }
            if lattice.coords.is_empty() {
                return input("kernel decay lattice needs coordinates");
            }
            let mut b = ProbeBuilder::new(
                "riesz-kernel-decay-d1",
                format!("R in {:?}, x, y in {} points", lattice.r_values, lattice.coords.len()),
                4.0,
            )
            .compact();
            for &r in &lattice.r_values {
                let params = RieszParams::real(r, alpha, 1)?;
                for &x in &lattice.coords {
                    for &y in &lattice.coords {
                        let k = riesz_kernel(&[x], &[y], &params)?.norm();
                        b.record(format!("R={r}"), vec![r, x, y], k / d1_envelope(x, y, r, alpha));
                    }
                }
            }
            Ok(b.finish())
        }
        DecayMode::Hd { p } => {
            if dim < 2 {
                return input("hd mode needs d >= 2");
            }
            if !(1.0..=2.0).contains(&p) {
                return input("the L_p tail bound needs 1 <= p <= 2");
            }
            if !(alpha > (dim as f64 - 1.0) / 2.0) {
                return input("the L_p tail bound needs alpha > (d-1)/2");
            }
            if lattice.centers.is_empty() || lattice.radii.is_empty() {
                return input("hd lattice needs centers and radii");
            }
            let q = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
            let mut b = ProbeBuilder::new(
                format!("riesz-kernel-decay-hd-p{p}"),
                format!(
                    "R in {:?}, r in {:?}, {} centers",
                    lattice.r_values,
                    lattice.radii,
                    lattice.centers.len()
                ),
                4.0,
            );
            for &rad in &lattice.radii {
                for &r in &lattice.r_values {
                    let params = RieszParams::real(r, alpha, dim)?;
                    for x in &lattice.centers {
                        if x.len() != dim {
                            return input("hd center has the wrong dimension");
                        }
                        let tail = kernel_tail_norm(x, rad, p, &params)?;
                        let d = dim as f64;
                        let env = r.powf(d / (2.0 * q))
                            * (1.0 + r.sqrt() * rad).powf(-alpha - 0.5 + d * (1.0 / p - 0.5));
                        let mut coords = vec![r, rad];
                        coords.extend_from_slice(x);
                        b.record(format!("r={rad}"), coords, tail / env);
                    }
                }
            }
            Ok(b.finish())
        }
    }
}

/// `(int_{|x-y| >= rad} |S_R^alpha(x, y)|^p dy)^{1/p}` in two dimensions
/// or more (only `d = 2` uses polar quadrature; higher `d` is rejected).
pub fn kernel_tail_norm(x: &[f64], rad: f64, p: f64, params: &RieszParams) -> Result<f64> {
    if params.dim != 2 {
        return input("kernel tail norms are implemented for d = 2");
    }
    let Some(top) = params.top_level() else {
        return Ok(0.0);
    };
    let m: Vec<f64> = (0..=top).map(|n| params.factor(2 * n + 2).norm()).collect();
    let kernel = |y: [f64; 2]| -> f64 {
        let k = level_kernels(x, &y, top);
        k.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>().abs()
    };
    let s = params.r.sqrt();
    // angular resolution follows the kernel's oscillation scale R^{-1/2}
    let polar = |r0: f64, r1: f64, cells: usize, g: &dyn Fn(f64) -> f64| -> Result<f64> {
        let (gx, gw) = gauss_legendre(16)?;
        let h = (r1 - r0) / cells as f64;
        let mut acc = 0.0;
        for c in 0..cells {
            for (xi, wi) in gx.iter().zip(&gw) {
                let rho = r0 + (c as f64 + 0.5 * (xi + 1.0)) * h;
                let n_theta = ((8.0 * (2.0 + s * rho)).ceil() as usize).max(32);
                let dth = 2.0 * std::f64::consts::PI / n_theta as f64;
                let mut ring = 0.0;
                for j in 0..n_theta {
                    let th = j as f64 * dth;
                    ring += g(kernel([x[0] + rho * th.cos(), x[1] + rho * th.sin()]));
                }
                acc += 0.5 * h * wi * rho * ring * dth;
            }
        }
        Ok(acc)
    };
    let cells_for = |len: f64| ((len * s / 2.0).ceil() as usize).max(2);
    if p == 2.0 {
        // total mass from orthonormality minus the disk
        let diag = level_kernels(x, x, top);
        let total: f64 = diag.iter().zip(&m).map(|(k, v)| k * v * v).sum();
        let inner = polar(0.0, rad, cells_for(rad), &|v| v * v)?;
        Ok((total - inner).max(0.0).sqrt())
    } else {
        let outer = rad + 2.0 * (2.0 * top as f64 + 2.0).sqrt() + 4.0 + x.iter().map(|t| t * t).sum::<f64>().sqrt();
        let v = polar(rad, outer, cells_for(outer - rad), &|v| v.powf(p))?;
        Ok(v.powf(1.0 / p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SandwichMode {
    D1,
    Hd,
}

/// `int E_R(x - y) f(y) dy` and `int E_R(x + y) f(y) dy` on the grid.
fn d1_majorants(f: &MatrixField, r: f64, alpha: f64) -> Vec<CMat> {
    let s = r.sqrt();
    let e = |t: f64| s * (1.0 + s * t.abs()).powf(-alpha - 5.0 / 6.0);
    let pts: Vec<f64> = (0..f.len()).map(|p| f.grid.point(p)[0]).collect();
    let w = f.grid.weights();
    pts.iter()
        .map(|&x| {
            let mut acc = zeros(f.matrix_size);
            for (j, &y) in pts.iter().enumerate() {
                acc += f.samples[j].scale(w[j] * (e(x - y) + e(x + y)));
            }
            hermitian_part(&acc)
        })
        .collect()
}

/// Per-axis cell boundaries around the nodes (midpoints, outer cells
/// mirrored).
fn cell_edges(nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let mut edges = Vec::with_capacity(m + 1);
    if m == 1 {
        return vec![nodes[0] - 0.5, nodes[0] + 0.5];
    }
    edges.push(nodes[0] - 0.5 * (nodes[1] - nodes[0]));
    for k in 0..m - 1 {
        edges.push(0.5 * (nodes[k] + nodes[k + 1]));
    }
    edges.push(nodes[m - 1] + 0.5 * (nodes[m - 1] - nodes[m - 2]));
    edges
}

/// Fraction of the box `lo..hi` inside the ball `|y - x| <= rho`: exact
/// for boxes fully inside or outside, 4^d subsampling across the boundary.
fn overlap_fraction(x: &[f64], rho: f64, lo: &[f64], hi: &[f64]) -> f64 {
    let d = x.len();
    let mut near = 0.0;
    let mut far = 0.0;
    for k in 0..d {
        let c = x[k].clamp(lo[k], hi[k]);
        near += (c - x[k]).powi(2);
        let f = (x[k] - lo[k]).abs().max((hi[k] - x[k]).abs());
        far += f * f;
    }
    if near > rho * rho {
        return 0.0;
    }
    if far <= rho * rho {
        return 1.0;
    }
    let sub = 4usize;
    let total = sub.pow(d as u32);
    let mut inside = 0usize;
    for idx in 0..total {
        let mut rem = idx;
        let mut dist = 0.0;
        for k in 0..d {
            let i = rem % sub;
            rem /= sub;
            let t = lo[k] + (i as f64 + 0.5) / sub as f64 * (hi[k] - lo[k]);
            dist += (t - x[k]).powi(2);
        }
        if dist <= rho * rho {
            inside += 1;
        }
    }
    inside as f64 / total as f64
}

fn ball_volume(d: usize, rho: f64) -> f64 {
    let dh = d as f64 / 2.0;
    (dh * std::f64::consts::PI.ln() - ln_gamma(dh + 1.0)).exp() * rho.powi(d as i32)
}

/// Ball averages `A_rho(g)(x) = |B|^{-1} int_{B(x, rho)} g` at every grid
/// point, using grid cells weighted by their overlap with the ball.
pub fn ball_averages(g: &MatrixField, rho: f64) -> Vec<CMat> {
    let grid = &g.grid;
    let d = grid.dim;
    let edges: Vec<Vec<f64>> = grid.axes.iter().map(|a| cell_edges(&a.nodes)).collect();
    let vol = ball_volume(d, rho);
    (0..grid.len())
        .map(|p| {
            let x = grid.point(p);
            let mut acc = zeros(g.matrix_size);
            for q in 0..grid.len() {
                let idx = grid.multi_index(q);
                let lo: Vec<f64> = (0..d).map(|k| edges[k][idx[k]]).collect();
                let hi: Vec<f64> = (0..d).map(|k| edges[k][idx[k] + 1]).collect();
                let frac = overlap_fraction(&x, rho, &lo, &hi);
                if frac > 0.0 {
                    let area: f64 = (0..d).map(|k| hi[k] - lo[k]).product();
                    acc += g.samples[q].scale(frac * area / vol);
                }
            }
            acc
        })
        .collect()
}

/// Fitted constants `C` with `-C E <= S_R^alpha f <= C E` at every grid
/// point, one slice per radius.
///
/// `D1`: `E = E_R * f + E_R * f~`. `Hd`: `E = F^{1/2}` with
/// `F = sum_k A_{2^{k+1}}(f^2)` over `scales`.
pub fn sandwich_check(
    f: &MatrixField,
    alpha: f64,
    r_values: &[f64],
    mode: SandwichMode,
    scales: &[i32],
) -> Result<ProbeReport> {
    if !f.positive {
        return input("sandwich check needs a PSD-valued field");
    }
    let d = f.grid.dim;
    match mode {
        SandwichMode::D1 => {
            if d != 1 {
                return input("d1 sandwich needs d = 1");
            }
            if !(alpha > 1.0 / 6.0) {
                return input("d1 sandwich needs alpha > 1/6");
            }
        }
        SandwichMode::Hd => {
            if d < 2 {
                return input("hd sandwich needs d >= 2");
            }
            if !(alpha > (d as f64 - 1.0) / 2.0) {
                return input("hd sandwich needs alpha > (d-1)/2");
            }
            if scales.is_empty() {
                return input("hd sandwich needs dyadic scales");
            }
        }
    }
    let name = match mode {
        SandwichMode::D1 => "sandwich-d1",
        SandwichMode::Hd => "sandwich-hd",
    };
    let mut b = ProbeBuilder::new(
        name,
        format!("R in {r_values:?}, {} grid points, n = {}", f.len(), f.matrix_size),
        4.0,
    )
    .compact();
    let hd_dominant = if mode == SandwichMode::Hd {
        let sq = f.map(|s| s * s)?;
        let mut total = vec![zeros(f.matrix_size); f.len()];
        for &k in scales {
            let avg = ball_averages(&sq, 2f64.powi(k + 1));
            for (t, a) in total.iter_mut().zip(avg) {
                *t += a;
            }
        }
        let roots = total
            .iter()
            .map(|t| psd_sqrt(&hermitian_part(t)))
            .collect::<Result<Vec<_>>>()?;
        Some(roots)
    } else {
        None
    };
    let mut worst_residual = f64::INFINITY;
    for &r in r_values {
        let params = RieszParams::real(r, alpha, d)?;
        let s = riesz_apply(f, &params)?;
        let env = match &hd_dominant {
            Some(roots) => roots.clone(),
            None => d1_majorants(f, r, alpha),
        };
        let mut slice_c = 0.0f64;
        let mut consts = Vec::with_capacity(f.len());
        for p in 0..f.len() {
            let sp = hermitian_part(&s.samples[p]);
            let c = sandwich_constant(&sp, &env[p])?;
            consts.push(c);
            slice_c = slice_c.max(c);
            b.record(format!("R={r}"), f.grid.point(p), c);
        }
        // residuals of the uniform-C sandwich at every point
        for p in 0..f.len() {
            let sp = hermitian_part(&s.samples[p]);
            let ce = env[p].scale(slice_c);
            let scale = 1.0 + op_norm(&ce);
            let lo = min_eigenvalue(&(&ce + &sp))?;
            let hi = min_eigenvalue(&(&ce - &sp))?;
            worst_residual = worst_residual.min(lo.min(hi) / scale);
        }
        if mode == SandwichMode::Hd {
            b.metric(format!("G(R^1/2) at R={r}"), scale_function_g(r.sqrt(), alpha, d, 40));
        }
    }
    b.metric("min_scaled_residual", worst_residual);
    Ok(b.finish_with(|rep| rep.metric("min_scaled_residual").unwrap_or(f64::NEG_INFINITY) >= -1e-9))
}

/// Gauss-Hermite grid with the given node count in `d` dimensions.
pub fn probe_grid(d: usize, m: usize) -> Result<QuadratureGrid> {
    QuadratureGrid::gauss_hermite(d, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::eval_phi_1d;
    use crate::matrix::{from_real, identity};
    use crate::nc::{nc_lp_norm, pairing};
    use crate::random::random_hermitian_coeffs;
    use std::f64::consts::PI;

    fn phi0_field(n: usize) -> MatrixField {
        let g = QuadratureGrid::gauss_hermite(1, 24).unwrap();
        let c = if n == 1 { identity(1) } else { from_real(2, 2, &[2.0, 1.0, 1.0, 3.0]) };
        MatrixField::scalar_times(g, |x| eval_phi_1d(x[0], 0).unwrap()[0], &c).unwrap()
    }

    #[test]
    fn factor_and_top_level() {
        let p = RieszParams::real(4.0, 1.0, 1).unwrap();
        assert_eq!(p.top_level(), Some(1));
        assert!((p.factor(1).re - 0.75).abs() < 1e-15);
        assert_eq!(p.factor(4).re, 0.0);
        assert_eq!(RieszParams::real(1.0, 1.0, 1).unwrap().top_level(), None);
        assert!(RieszParams::real(4.0, -1.0, 1).is_err());
        assert!(RieszParams::real(0.0, 1.0, 1).is_err());
        let c = RieszParams::new(4.0, Complex64::new(1.0, 2.0), 1).unwrap();
        let z = c.factor(1);
        assert!((z.norm() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn apply_examples() {
        let f = phi0_field(2);
        let zero = riesz_apply(&f, &RieszParams::real(1.0, 1.0, 1).unwrap()).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        let half = riesz_apply(&f, &RieszParams::real(2.0, 1.0, 1).unwrap()).unwrap();
        let want = f.scale(Complex64::new(0.5, 0.0));
        assert!(half.sub(&want).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn kernel_examples() {
        let p = RieszParams::real(4.0, 1.0, 1).unwrap();
        let k = riesz_kernel(&[0.0], &[0.0], &p).unwrap();
        assert!((k.re - 0.75 / PI.sqrt()).abs() < 1e-15);
        let p = RieszParams::real(50.0, 0.7, 2).unwrap();
        let a = riesz_kernel(&[0.3, -0.2], &[1.1, 0.4], &p).unwrap();
        let b = riesz_kernel(&[1.1, 0.4], &[0.3, -0.2], &p).unwrap();
        assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-12));
        assert_eq!(riesz_kernel(&[0.0], &[0.0], &RieszParams::real(1.0, 1.0, 1).unwrap()).unwrap().norm(), 0.0);
    }

    #[test]
    fn band_limited_error_bound() {
        let cap = 10;
        let g = QuadratureGrid::gauss_hermite(1, cap + 1).unwrap();
        let f = synthesize(&random_hermitian_coeffs(1, cap, 2, 5), &g).unwrap();
        let r = 64.0;
        let s = riesz_apply(&f, &RieszParams::real(r, 1.0, 1).unwrap()).unwrap();
        let err = nc_lp_norm(&s.sub(&f).unwrap(), 2.0).unwrap();
        let bound = (2.0 * cap as f64 + 1.0) / r * nc_lp_norm(&f, 2.0).unwrap();
        assert!(err <= bound * (1.0 + 1e-10));
    }

    #[test]
    fn self_adjoint_pairing() {
        let g = QuadratureGrid::gauss_hermite(1, 20).unwrap();
        let f = synthesize(&random_hermitian_coeffs(1, 19, 2, 1), &g).unwrap();
        let h = synthesize(&random_hermitian_coeffs(1, 19, 2, 2), &g).unwrap();
        let p = RieszParams::real(30.0, 1.5, 1).unwrap();
        let a = pairing(&riesz_apply(&f, &p).unwrap(), &h).unwrap();
        let b = pairing(&f, &riesz_apply(&h, &p).unwrap()).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn order_lift_cases() {
        let g = QuadratureGrid::gauss_hermite(1, 21).unwrap();
        let f = synthesize(&random_hermitian_coeffs(1, 20, 2, 4), &g).unwrap();
        for (a, b) in [(1.0, 1.0), (0.5, 2.0), (0.5, 0.5)] {
            let res = order_lift_residual(&f, 30.0, a, b, 24).unwrap();
            assert!(res < 1e-6, "alpha={a} beta={b}: {res}");
        }
        let z = MatrixField::zeros(g, 2);
        assert_eq!(order_lift_residual(&z, 30.0, 1.0, 1.0, 24).unwrap(), 0.0);
        assert!(order_lift_residual(&f, 30.0, 1.0, 1.0, 7).is_err());
    }

    #[test]
    fn g_function_is_dyadically_invariant() {
        for &t in &[0.5, 0.8, 1.3, 2.0] {
            let a = scale_function_g(t, 2.0, 2, 40);
            let b = scale_function_g(2.0 * t, 2.0, 2, 40);
            assert!((a - b).abs() <= 1e-8);
        }
        let small: Vec<f64> = [1e-2, 1e-4, 1e-8].iter().map(|&t| scale_function_g(t, 1.0, 2, 5)).collect();
        assert!(small.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn overlap_fraction_limits() {
        assert_eq!(overlap_fraction(&[0.0, 0.0], 1.0, &[-0.1, -0.1], &[0.1, 0.1]), 1.0);
        assert_eq!(overlap_fraction(&[0.0, 0.0], 1.0, &[2.0, 2.0], &[3.0, 3.0]), 0.0);
        let f = overlap_fraction(&[0.0, 0.0], 1.0, &[0.5, -0.5], &[1.5, 0.5]);
        assert!(f > 0.0 && f < 1.0);
        assert!((ball_volume(2, 2.0) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn zero_field_sandwich() {
        let g = QuadratureGrid::gauss_hermite(1, 16).unwrap();
        let z = MatrixField::zeros(g, 2);
        let rep = sandwich_check(&z, 1.0, &[16.0], SandwichMode::D1, &[]).unwrap();
        assert_eq!(rep.fitted_constant, 0.0);
        let neg = phi0_field(1).scale(Complex64::new(-1.0, 0.0));
        assert!(sandwich_check(&neg, 1.0, &[16.0], SandwichMode::D1, &[]).is_err());
    }
}
