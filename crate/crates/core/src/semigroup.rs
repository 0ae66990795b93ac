//! The Hermite heat semigroup `H^t = e^{-tH}`, its Mehler kernel, the
//! Littlewood-Paley square functions built from `d/dt H^t`, and the
//! Hermite-Hardy norms `E_p`.
//!
//! Square functions are computed spectrally: each time slice
//! `d^k/dt^k H^{t_j} f` is a multiplier applied to the Hermite coefficients,
//! and the time integral is a weighted sum over a log-spaced [`TimeGrid`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::field::MatrixField;
use crate::hermite::phi_1d_unchecked;
use crate::matrix::{hermitian_part, min_eigenvalue, op_norm, psd_sqrt, sandwich_constant, zeros, CMat};
use crate::nc::nc_lp_norm;
use crate::probe::{ProbeBuilder, ProbeReport};
use crate::spectral::{analyze, contract, flatten, synthesize, SpectralCoeffs};

/// `(2 pi)^{-1/2}`: the one-dimensional Mehler constant, fixed by matching
/// the spectral sum (see [`calibrate_mehler_constant`]).
pub const MEHLER_C1: f64 = 0.398_942_280_401_432_7;

/// Below this exponent `exp` underflows; the kernel is reported as zero.
const EXP_FLOOR: f64 = -745.0;

/// Log-spaced times with trapezoid weights in `log t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub times: Vec<f64>,
    /// Step in `log t`.
    pub log_step: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::new(1e-3, 12.0, 96).expect("default time grid is valid")
    }
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if count < 16 {
            return input(format!("a time grid needs at least 16 points, got {count}"));
        }
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return input(format!("time grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let h = (b - a) / (count - 1) as f64;
        let times = (0..count).map(|i| (a + h * i as f64).exp()).collect();
        Ok(Self { times, log_step: h })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    /// Weights `w_j` with `int_0^inf F(t) t^beta dt ~ sum_j w_j F(t_j)`.
    ///
    /// The left tail `[0, t_min]` is closed with `F(t_min) t_min^{beta+1} / (beta+1)`
    /// when `beta > -1`; the right tail is dropped.
    pub fn weights(&self, beta: f64) -> Vec<f64> {
        let k = self.times.len();
        let mut w: Vec<f64> = self
            .times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let end = if i == 0 || i + 1 == k { 0.5 } else { 1.0 };
                end * self.log_step * t.powf(beta + 1.0)
            })
            .collect();
        if beta > -1.0 {
            let t0 = self.times[0];
            w[0] += t0.powf(beta + 1.0) / (beta + 1.0);
        }
        w
    }

    /// `sum_j w_j N^2 e^{-2 N t_j}` for `beta = 1`; exactly 1/4 in the limit.
    pub fn g_identity_value(&self, eigenvalue: usize) -> f64 {
        let n = eigenvalue as f64;
        self.times
            .iter()
            .zip(self.weights(1.0))
            .map(|(&t, w)| w * n * n * (-2.0 * n * t).exp())
            .sum()
    }

    /// Leading-order error of [`Self::g_identity_value`]: the left-tail
    /// closure misses `N^3 t_min^3 / 3` and the Euler-Maclaurin end correction
    /// of the log-trapezoid is about `h^2 (N t_min)^2 / 6`.
    pub fn g_identity_bound(&self, eigenvalue: usize) -> f64 {
        let nt = eigenvalue as f64 * self.t_min();
        nt.powi(3) / 3.0 + self.log_step.powi(2) * nt * nt / 4.0 + 1e-10
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MehlerParams {
    pub t: f64,
    pub dim: usize,
    pub constant: f64,
}

impl MehlerParams {
    pub fn new(t: f64, dim: usize) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return input(format!("Mehler kernel needs t > 0, got {t}"));
        }
        if dim == 0 {
            return input("dimension must be >= 1");
        }
        Ok(Self {
            t,
            dim,
            constant: MEHLER_C1.powi(dim as i32),
        })
    }
}

/// Re-derives the one-dimensional constant by matching
/// `sum_{n <= 200} e^{-(2n+1)/2} phi_n(0)^2` at `t = 0.5`, `x = y = 0`.
pub fn calibrate_mehler_constant() -> f64 {
    let t: f64 = 0.5;
    let spectral = spectral_mehler_sum(t, &[0.0], &[0.0], 200);
    spectral * (2.0 * t).sinh().sqrt()
}

/// Truncated spectral sum `sum_{|nu| <= n_max} e^{-(2|nu|+d)t} Phi_nu(x) Phi_nu(y)`.
pub fn spectral_mehler_sum(t: f64, x: &[f64], y: &[f64], n_max: usize) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let pa = phi_1d_unchecked(a, n_max);
            let pb = phi_1d_unchecked(b, n_max);
            (0..=n_max)
                .map(|n| (-(2.0 * n as f64 + 1.0) * t).exp() * pa[n] * pb[n])
                .sum::<f64>()
        })
        .product()
}

fn guarded_exp(e: f64) -> f64 {
    if e < EXP_FLOOR {
        0.0
    } else {
        e.exp()
    }
}

/// One-dimensional factor without the constant.
fn kernel_1d(t: f64, x: f64, y: f64) -> f64 {
    let s = (2.0 * t).sinh();
    let e = -(x - y).powi(2) / (2.0 * s) - 0.5 * (x * x + y * y) * t.tanh();
    guarded_exp(e) / s.sqrt()
}

/// `d/dt log k_t(x, y)` in one dimension.
fn log_dt_1d(t: f64, x: f64, y: f64) -> f64 {
    let s = (2.0 * t).sinh();
    let c = t.cosh();
    -1.0 / (2.0 * t).tanh() + (x - y).powi(2) / (s * s) - x * y / (c * c)
}

/// `d/dy log k_t(x, y)` in one dimension.
fn log_dy_1d(t: f64, x: f64, y: f64) -> f64 {
    x / (2.0 * t).sinh() - y / (2.0 * t).tanh()
}

/// `d/dt d/dy log k_t(x, y)` in one dimension.
fn log_dty_1d(t: f64, x: f64, y: f64) -> f64 {
    let s = (2.0 * t).sinh();
    let c = t.cosh();
    -2.0 * (x - y) / (s * s) - x / (c * c)
}

fn check_points(x: &[f64], y: &[f64], p: &MehlerParams) -> Result<()> {
    if x.len() != p.dim || y.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: if x.len() != p.dim { x.len() } else { y.len() },
        });
    }
    Ok(())
}

/// `k_t(x, y) = c_d (sinh 2t)^{-d/2} exp(-|x-y|^2 / (2 sinh 2t) - (|x|^2+|y|^2) tanh(t) / 2)`.
pub fn mehler_kernel(x: &[f64], y: &[f64], p: &MehlerParams) -> Result<f64> {
    check_points(x, y, p)?;
    Ok(p.constant * x.iter().zip(y).map(|(&a, &b)| kernel_1d(p.t, a, b)).product::<f64>())
}

/// `d/dt k_t(x, y)`.
pub fn mehler_dt_kernel(x: &[f64], y: &[f64], p: &MehlerParams) -> Result<f64> {
    let k = mehler_kernel(x, y, p)?;
    let l: f64 = x.iter().zip(y).map(|(&a, &b)| log_dt_1d(p.t, a, b)).sum();
    Ok(k * l)
}

/// `d/dy_j d/dt k_t(x, y)`.
pub fn mehler_dyt_kernel(x: &[f64], y: &[f64], j: usize, p: &MehlerParams) -> Result<f64> {
    if j >= p.dim {
        return input(format!("axis {j} out of range for d = {}", p.dim));
    }
    let k = mehler_kernel(x, y, p)?;
    let lt: f64 = x.iter().zip(y).map(|(&a, &b)| log_dt_1d(p.t, a, b)).sum();
    let ly = log_dy_1d(p.t, x[j], y[j]);
    Ok(k * (ly * lt + log_dty_1d(p.t, x[j], y[j])))
}

/// `d/dx_j d/dt k_t(x, y)`, by the symmetry of the kernel.
pub fn mehler_dxt_kernel(x: &[f64], y: &[f64], j: usize, p: &MehlerParams) -> Result<f64> {
    mehler_dyt_kernel(y, x, j, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemigroupMode {
    Spectral,
    Kernel,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return input(format!("semigroup time must be > 0, got {t}"));
    }
    Ok(())
}

/// Applies the kernel `sum_a prod_k K_{a,k}(x_k, y_k)` by quadrature on the
/// field's own grid; `terms[a][k]` is the one-dimensional factor on axis `k`.
fn separable_apply(f: &MatrixField, terms: &[Vec<Box<dyn Fn(f64, f64) -> f64 + '_>>]) -> Result<MatrixField> {
    let n = f.matrix_size;
    let shape: Vec<usize> = f.grid.axes.iter().map(|a| a.len()).collect();
    let flat = flatten(f);
    let mut acc = vec![Complex64::new(0.0, 0.0); flat.len()];
    for term in terms {
        let mats: Vec<Vec<Vec<f64>>> = f
            .grid
            .axes
            .iter()
            .zip(term)
            .map(|(axis, k)| {
                axis.nodes
                    .iter()
                    .map(|&x| axis.nodes.iter().zip(&axis.weights).map(|(&y, &w)| k(x, y) * w).collect())
                    .collect()
            })
            .collect();
        for (a, b) in acc.iter_mut().zip(contract(&flat, &shape, n * n, &mats)) {
            *a += b;
        }
    }
    let samples = (0..f.len())
        .map(|p| CMat::from_fn(n, n, |i, j| acc[p * n * n + i * n + j]))
        .collect();
    MatrixField::new(f.grid.clone(), n, samples)
}

/// `H^t f`. Spectral mode expands `f` to `degree_cap`; kernel mode integrates
/// the Mehler kernel against the samples of `f`.
pub fn semigroup_apply(f: &MatrixField, t: f64, mode: SemigroupMode, degree_cap: usize) -> Result<MatrixField> {
    check_time(t)?;
    match mode {
        SemigroupMode::Spectral => {
            let c = analyze(f, degree_cap)?;
            synthesize(&c.scaled(|n| Complex64::new((-(n as f64) * t).exp(), 0.0)), &f.grid)
        }
        SemigroupMode::Kernel => {
            let term: Vec<Box<dyn Fn(f64, f64) -> f64>> = (0..f.grid.dim)
                .map(|_| Box::new(move |x, y| MEHLER_C1 * kernel_1d(t, x, y)) as Box<dyn Fn(f64, f64) -> f64>)
                .collect();
            separable_apply(f, &[term])
        }
    }
}

/// `d/dt H^t f`. Kernel mode uses the closed-form time derivative of the
/// Mehler kernel, one separable term per axis.
pub fn dt_semigroup_apply(f: &MatrixField, t: f64, mode: SemigroupMode, degree_cap: usize) -> Result<MatrixField> {
    check_time(t)?;
    match mode {
        SemigroupMode::Spectral => {
            let c = analyze(f, degree_cap)?;
            synthesize(&dt_coeffs(&c, t, 1), &f.grid)
        }
        SemigroupMode::Kernel => {
            let d = f.grid.dim;
            let terms: Vec<Vec<Box<dyn Fn(f64, f64) -> f64>>> = (0..d)
                .map(|a| {
                    (0..d)
                        .map(|k| {
                            if k == a {
                                Box::new(move |x, y| MEHLER_C1 * kernel_1d(t, x, y) * log_dt_1d(t, x, y))
                                    as Box<dyn Fn(f64, f64) -> f64>
                            } else {
                                Box::new(move |x, y| MEHLER_C1 * kernel_1d(t, x, y))
                            }
                        })
                        .collect()
                })
                .collect();
            separable_apply(f, &terms)
        }
    }
}

/// Coefficients of `d^k/dt^k H^t f`: factor `(-N)^k e^{-N t}`.
fn dt_coeffs(c: &SpectralCoeffs, t: f64, k: u32) -> SpectralCoeffs {
    c.scaled(|n| {
        let nf = n as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * nf.powi(k as i32) * (-nf * t).exp(), 0.0)
    })
}

/// Per-time samples of `d^k/dt^k H^{t_j} f` on the grid of `f`.
fn time_slices(f: &MatrixField, k: u32, degree_cap: usize, tg: &TimeGrid) -> Result<Vec<MatrixField>> {
    let c = analyze(f, degree_cap)?;
    tg.times.iter().map(|&t| synthesize(&dt_coeffs(&c, t, k), &f.grid)).collect()
}

fn sqrt_field(f: &MatrixField, squares: Vec<CMat>) -> Result<MatrixField> {
    let samples = squares
        .iter()
        .map(|s| psd_sqrt(&hermitian_part(s)))
        .collect::<Result<Vec<_>>>()?;
    MatrixField::new(f.grid.clone(), f.matrix_size, samples)
}

/// `g(f)(x) = (int_0^inf |d/dt H^t f(x)|^2 t dt)^{1/2}` with `|A|^2 = A^* A`.
pub fn g_function(f: &MatrixField, degree_cap: usize, tg: &TimeGrid) -> Result<MatrixField> {
    g_k_function(f, 1, degree_cap, tg)
}

/// `g_k(f)(x) = (int_0^inf |d^k/dt^k H^t f(x)|^2 t^{2k-1} dt)^{1/2}`.
pub fn g_k_function(f: &MatrixField, k: u32, degree_cap: usize, tg: &TimeGrid) -> Result<MatrixField> {
    if k < 1 {
        return input("g_k needs k >= 1");
    }
    let slices = time_slices(f, k, degree_cap, tg)?;
    let w = tg.weights(2.0 * k as f64 - 1.0);
    let mut acc = vec![zeros(f.matrix_size); f.len()];
    for (s, wj) in slices.iter().zip(&w) {
        for (a, d) in acc.iter_mut().zip(&s.samples) {
            *a += (d.adjoint() * d).scale(*wj);
        }
    }
    sqrt_field(f, acc)
}

/// `g*_k(f)(x) = (int int t^{(2-d)/2} (1 + |x-y|^2/t)^{-k} |d/dt H^t f(y)|^2 dt dy)^{1/2}`,
/// with the `y` integral on the grid of `f`.
pub fn g_star_k(f: &MatrixField, k: u32, degree_cap: usize, tg: &TimeGrid) -> Result<MatrixField> {
    if k < 1 {
        return input("g*_k needs k >= 1");
    }
    let slices = time_slices(f, 1, degree_cap, tg)?;
    let d = f.grid.dim as f64;
    let w = tg.weights((2.0 - d) / 2.0);
    let points = f.grid.points();
    let yw = f.grid.weights();
    let mut acc = vec![zeros(f.matrix_size); f.len()];
    for ((s, &wt), &t) in slices.iter().zip(&w).zip(&tg.times) {
        let sq: Vec<CMat> = s.samples.iter().map(|a| a.adjoint() * a).collect();
        for (p, x) in points.iter().enumerate() {
            let mut local = zeros(f.matrix_size);
            for (q, y) in points.iter().enumerate() {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                let weight = (1.0 + r2 / t).powi(-(k as i32)) * yw[q];
                local += sq[q].scale(weight);
            }
            acc[p] += local.scale(wt);
        }
    }
    sqrt_field(f, acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpSide {
    Row,
    Column,
}

/// `||g(f)||_p` (column) or `||g(f^*)||_p` (row).
pub fn ep_norm(f: &MatrixField, p: f64, side: EpSide, degree_cap: usize, tg: &TimeGrid) -> Result<f64> {
    if !(p >= 1.0) {
        return input(format!("E_p needs p >= 1, got {p}"));
    }
    let g = match side {
        EpSide::Column => g_function(f, degree_cap, tg)?,
        EpSide::Row => g_function(&f.adjoint(), degree_cap, tg)?,
    };
    nc_lp_norm(&g, p)
}

/// The `E_p` norm: intersection (max of the sides) for `p >= 2`, and for
/// `p < 2` the sum-space norm bounded above by the trivial splittings
/// `f = f + 0` and `f = 0 + f`.
pub fn ep_norm_combined(f: &MatrixField, p: f64, degree_cap: usize, tg: &TimeGrid) -> Result<f64> {
    let c = ep_norm(f, p, EpSide::Column, degree_cap, tg)?;
    let r = ep_norm(f, p, EpSide::Row, degree_cap, tg)?;
    Ok(if p >= 2.0 { c.max(r) } else { c.min(r) })
}

/// Smallest `C` with `lhs(x)^2 <= C^2 rhs(x)^2` in the PSD order at all
/// grid points where `rhs` is above `floor` times its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    pub constant: f64,
    /// Smallest eigenvalue of `C^2 rhs^2 - lhs^2` over the points used.
    pub min_residual: f64,
    /// Largest `||lhs(x)^2||`.
    pub scale: f64,
    pub points_used: usize,
    /// `(grid index, smallest admissible C at that point)`.
    pub per_point: Vec<(usize, f64)>,
}

impl Domination {
    pub fn holds(&self, tol: f64) -> bool {
        self.constant.is_finite() && self.min_residual >= -tol * self.scale.max(f64::MIN_POSITIVE)
    }
}

pub fn psd_domination(lhs: &MatrixField, rhs: &MatrixField, floor: f64) -> Result<Domination> {
    if lhs.grid != rhs.grid || lhs.matrix_size != rhs.matrix_size {
        return input("domination needs conforming fields");
    }
    let ls: Vec<CMat> = lhs.samples.iter().map(|a| a * a).collect();
    let rs: Vec<CMat> = rhs.samples.iter().map(|a| a * a).collect();
    let top = rs.iter().map(op_norm).fold(0.0, f64::max);
    let scale = ls.iter().map(op_norm).fold(0.0, f64::max);
    let mut c2: f64 = 0.0;
    let mut used = Vec::new();
    let mut per_point = Vec::new();
    for (p, (l, r)) in ls.iter().zip(&rs).enumerate() {
        if op_norm(r) <= floor * top {
            continue;
        }
        let c = sandwich_constant(&hermitian_part(l), &hermitian_part(r))?;
        c2 = c2.max(c);
        used.push(p);
        per_point.push((p, c.sqrt()));
    }
    let mut min_residual = f64::INFINITY;
    for &p in &used {
        let res = rs[p].scale(c2) - &ls[p];
        min_residual = min_residual.min(min_eigenvalue(&hermitian_part(&res))?);
    }
    Ok(Domination {
        constant: c2.sqrt(),
        min_residual: if used.is_empty() { 0.0 } else { min_residual },
        scale,
        points_used: used.len(),
        per_point,
    })
}

/// Lattice for the Gaussian kernel-bound probes.
#[derive(Debug, Clone)]
pub struct KernelLattice {
    pub dim: usize,
    /// Times for the pointwise items; should straddle `t = 1`.
    pub times: Vec<f64>,
    /// `(x, y)` pairs for the pointwise items.
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    /// Separations `|x - y|` for the Hilbert-norm items.
    pub separations: Vec<f64>,
    /// Midpoints of the pairs used for the Hilbert-norm items.
    pub centers: Vec<Vec<f64>>,
    /// Candidate Gaussian exponents `a`.
    pub a_grid: Vec<f64>,
    pub time_grid: TimeGrid,
}

impl KernelLattice {
    pub fn standard(dim: usize) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return input("kernel lattices are provided for 1 <= d <= 3");
        }
        let times = (0..20).map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 19.0)).collect();
        let coords: Vec<f64> = (-4..=4).map(|i| 0.5 * i as f64).collect();
        let mut pts: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..dim {
            let step = if dim == 1 { 1 } else { 2 };
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    coords.iter().step_by(step).map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        let mut pairs = Vec::new();
        for x in &pts {
            for y in &pts {
                pairs.push((x.clone(), y.clone()));
            }
        }
        let mut centers = vec![vec![0.0; dim]];
        let mut off = vec![0.0; dim];
        off[0] = 0.5;
        centers.push(off);
        Ok(Self {
            dim,
            times,
            pairs,
            separations: vec![0.5, 1.0, 2.0],
            centers,
            a_grid: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0],
            time_grid: TimeGrid::new(1e-4, 16.0, 160)?,
        })
    }
}

type PointItem = fn(&[f64], &[f64], &MehlerParams) -> Result<f64>;

fn dy1(x: &[f64], y: &[f64], p: &MehlerParams) -> Result<f64> {
    mehler_dyt_kernel(x, y, 0, p)
}

fn dx1(x: &[f64], y: &[f64], p: &MehlerParams) -> Result<f64> {
    mehler_dxt_kernel(x, y, 0, p)
}

/// Fitted-constant probes for the Gaussian bounds on `d/dt k_t` and its
/// first spatial derivatives (pointwise, one exponent `a` fitted per item) and
/// for their `L_2(R_+, t dt)` norms against powers of `|x - y|`.
///
/// Pointwise items slice by the regimes `t < 1` and `t >= 1`; norm items
/// slice by `|x - y|`. For the pointwise items the chosen `a` is the largest
/// grid value whose fit is stable and at most 4 times the fit at the
/// smallest `a`.
pub fn kernel_bound_report(lattice: &KernelLattice) -> Result<Vec<ProbeReport>> {
    let d = lattice.dim;
    let df = d as f64;
    if lattice.a_grid.is_empty() || lattice.times.is_empty() || lattice.pairs.is_empty() {
        return input("kernel lattice is empty");
    }
    if !lattice.times.iter().any(|&t| t < 1.0) || !lattice.times.iter().any(|&t| t >= 1.0) {
        return input("kernel lattice times must straddle t = 1");
    }
    let items: [(&str, PointItem, f64); 3] = [
        ("dt-kernel", mehler_dt_kernel, df / 2.0 + 1.0),
        ("dy-dt-kernel", dy1, df / 2.0 + 1.5),
        ("dx-dt-kernel", dx1, df / 2.0 + 1.5),
    ];
    let mut out = Vec::new();
    for (name, item, power) in items {
        let mut fits: Vec<(f64, ProbeReport)> = Vec::new();
        for &a in &lattice.a_grid {
            let mut b = ProbeBuilder::new(
                format!("{name}-gaussian"),
                format!("{} times, {} pairs, a = {a}", lattice.times.len(), lattice.pairs.len()),
                4.0,
            )
            .compact();
            for &t in &lattice.times {
                let p = MehlerParams::new(t, d)?;
                for (x, y) in &lattice.pairs {
                    let r2: f64 = x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum();
                    let v = item(x, y, &p)?.abs();
                    let ratio = if v == 0.0 {
                        0.0
                    } else {
                        (v.ln() + power * t.ln() + a * r2 / t).exp()
                    };
                    let mut coords = vec![t];
                    coords.extend_from_slice(x);
                    coords.extend_from_slice(y);
                    b.record(if t < 1.0 { "t<1" } else { "t>=1" }, coords, ratio);
                }
            }
            fits.push((a, b.finish()));
        }
        let base = fits[0].1.fitted_constant;
        let pick = fits
            .iter()
            .rposition(|(_, r)| r.stable && r.fitted_constant <= 4.0 * base)
            .unwrap_or(0);
        let mut report = fits[pick].1.clone();
        report.metrics.push(("a".into(), fits[pick].0));
        for (a, r) in &fits {
            report.metrics.push((format!("C(a={a})"), r.fitted_constant));
        }
        out.push(report);
    }

    let norm_items: [(&str, PointItem, f64); 3] = [
        ("dt-kernel-norm", mehler_dt_kernel, df),
        ("dy-dt-kernel-norm", dy1, df + 1.0),
        ("dx-dt-kernel-norm", dx1, df + 1.0),
    ];
    let tw = lattice.time_grid.weights(1.0);
    for (name, item, power) in norm_items {
        let mut b = ProbeBuilder::new(
            name,
            format!("|x-y| in {:?}, {} centers", lattice.separations, lattice.centers.len()),
            4.0,
        );
        for &s in &lattice.separations {
            for c in &lattice.centers {
                let mut x = c.clone();
                let mut y = c.clone();
                x[0] += s / 2.0;
                y[0] -= s / 2.0;
                let mut sq = 0.0;
                for (&t, w) in lattice.time_grid.times.iter().zip(&tw) {
                    let p = MehlerParams::new(t, d)?;
                    sq += w * item(&x, &y, &p)?.powi(2);
                }
                let mut coords = vec![s];
                coords.extend_from_slice(c);
                b.record(format!("|x-y|={s}"), coords, sq.sqrt() * s.powf(power));
            }
        }
        out.push(b.finish());
    }
    Ok(out)
}
