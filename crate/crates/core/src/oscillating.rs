//! The oscillating multiplier `T_t^alpha`, `mu(N) = N^{-alpha} e^{iNt}`, in
//! one dimension.
//!
//! For `alpha = 1/2` the singular part of its kernel is
//! `K_t(x, y) = int_0^1 lambda^{-1/2} {sinh 2(lambda - it)}^{-1/2} e^{-A + iB} d lambda`
//! with `D = sinh^2 2lambda + sin^2 2t` and
//!
//! ```text
//! 2A = (sinh 2lambda / D) [cos 2t (x-y)^2 + (cosh 2lambda - cos 2t)(x^2+y^2)]
//! 2B = -(sin 2t / D) [cosh 2lambda (x-y)^2 - (cosh 2lambda - cos 2t)(x^2+y^2)]
//! ```
//!
//! so that `(2 pi)^{-1/2} {sinh 2z}^{-1/2} e^{-A+iB}` with `z = lambda - it`
//! is the Mehler kernel at complex time `z`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atom::{make_column_atom_with, profile, Cube, TERMS};
use crate::error::{input, Result};
use crate::field::MatrixField;
use crate::hermite::phi_1d_unchecked;
use crate::matrix::{singular_values, zeros};
use crate::multiplier::{apply_tmu, MultiplierSpec};
use crate::probe::{ProbeBuilder, ProbeReport};
use crate::quadrature::gauss_legendre;

/// Power of `sinh 2(lambda - it)` in the kernel integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelExponent {
    /// `-1/2`, the exponent of the kernel itself.
    Half,
    /// `-1`, used in the statement of the kernel estimates.
    One,
}

impl KernelExponent {
    pub fn value(self) -> f64 {
        match self {
            Self::Half => -0.5,
            Self::One => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatingParams {
    pub t: f64,
    pub alpha: f64,
    /// Gauss-Legendre points in `u = lambda^{1/2}`.
    pub lambda_points: usize,
    pub exponent: KernelExponent,
}

impl OscillatingParams {
    pub fn new(t: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            t,
            alpha,
            lambda_points: 256,
            exponent: KernelExponent::Half,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t <= PI / 4.0 + 1e-15) {
            return input(format!("oscillating multiplier needs 0 < t <= pi/4, got {}", self.t));
        }
        if !(self.alpha >= 0.0) {
            return input(format!("oscillating multiplier needs alpha >= 0, got {}", self.alpha));
        }
        if self.lambda_points < 8 {
            return input("lambda quadrature needs at least 8 points");
        }
        Ok(())
    }

    pub fn multiplier(&self) -> MultiplierSpec {
        MultiplierSpec::Oscillating {
            alpha: self.alpha,
            t: self.t,
        }
    }
}

/// `sum_n (2n+d)^{-alpha} e^{i(2n+d)t} P_n f`.
pub fn apply_oscillating(f: &MatrixField, params: &OscillatingParams, degree_cap: usize) -> Result<MatrixField> {
    params.validate()?;
    apply_tmu(f, &params.multiplier(), degree_cap)
}

/// Phases and their analytic derivatives at one `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phases {
    pub a: f64,
    pub b: f64,
    pub a_y: f64,
    pub b_y: f64,
    pub b_lambda: f64,
}

pub fn phases(x: f64, y: f64, lambda: f64, t: f64) -> Phases {
    let (sh, ch) = ((2.0 * lambda).sinh(), (2.0 * lambda).cosh());
    let (s, c) = ((2.0 * t).sin(), (2.0 * t).cos());
    let d = sh * sh + s * s;
    let r2 = x * x + y * y;
    let diff = x - y;
    let a = sh / (2.0 * d) * (c * diff * diff + (ch - c) * r2);
    let b = -s / (2.0 * d) * (ch * diff * diff - (ch - c) * r2);
    let a_y = sh / (2.0 * d) * (-2.0 * c * diff + 2.0 * (ch - c) * y);
    let b_y = -s / (2.0 * d) * (-2.0 * ch * diff - 2.0 * (ch - c) * y);
    // B = -(s/2) Q / D with Q = -2xy cosh 2lambda + cos 2t (x^2 + y^2)
    let q = -2.0 * x * y * ch + c * r2;
    let q_l = -4.0 * x * y * sh;
    let d_l = 4.0 * sh * ch;
    let b_lambda = -0.5 * s * (q_l * d - q * d_l) / (d * d);
    Phases {
        a,
        b,
        a_y,
        b_y,
        b_lambda,
    }
}

/// `{sinh 2(lambda - it)}^e` on the principal branch.
fn sinh_power(lambda: f64, t: f64, e: f64) -> Complex64 {
    (Complex64::new(2.0 * lambda, -2.0 * t)).sinh().powf(e)
}

/// Nodes `u` and weights for `int_0^1 lambda^{-1/2} F(lambda) d lambda = 2 int_0^1 F(u^2) du`.
fn u_rule(points: usize) -> Result<Vec<(f64, f64)>> {
    let (x, w) = gauss_legendre(points)?;
    Ok(x.iter().zip(&w).map(|(&xi, &wi)| (0.5 * (xi + 1.0), wi)).collect())
}

/// Largest jump of `arg {sinh 2(lambda - it)}` between adjacent nodes.
pub fn branch_jump(params: &OscillatingParams) -> Result<f64> {
    let rule = u_rule(params.lambda_points)?;
    let args: Vec<f64> = rule
        .iter()
        .map(|&(u, _)| Complex64::new(2.0 * u * u, -2.0 * params.t).sinh().arg())
        .collect();
    Ok(args.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max))
}

/// The singular part `int_0^1` of the kernel at `(x, y)`.
pub fn oscillating_kernel(x: f64, y: f64, params: &OscillatingParams) -> Result<Complex64> {
    params.validate()?;
    let e = params.exponent.value();
    let mut acc = Complex64::new(0.0, 0.0);
    for (u, w) in u_rule(params.lambda_points)? {
        let lambda = u * u;
        let ph = phases(x, y, lambda, params.t);
        acc += sinh_power(lambda, params.t, e) * Complex64::from_polar((-ph.a).exp(), ph.b) * w;
    }
    Ok(acc)
}

/// The four kernel estimates as integrals over `lambda`, unweighted:
/// `[int l^{-1/2} K, int l^{-1/2} d_y K e^{iB}, int l^{-1/2} K d_y e^{iB},
/// int l^{1/2} K d_l e^{iB}]` with `K = {sinh 2(l - it)}^e e^{-A}`.
pub fn kernel_estimates(x: f64, y: f64, params: &OscillatingParams) -> Result<[Complex64; 4]> {
    params.validate()?;
    let e = params.exponent.value();
    let mut out = [Complex64::new(0.0, 0.0); 4];
    let i = Complex64::new(0.0, 1.0);
    for (u, w) in u_rule(params.lambda_points)? {
        let lambda = u * u;
        let ph = phases(x, y, lambda, params.t);
        let k = sinh_power(lambda, params.t, e) * (-ph.a).exp();
        let eib = Complex64::from_polar(1.0, ph.b);
        out[0] += k * w;
        out[1] += k * (-ph.a_y) * eib * w;
        out[2] += k * i * ph.b_y * eib * w;
        out[3] += k * lambda * i * ph.b_lambda * eib * w;
    }
    Ok(out)
}

/// Pairs `(x, y)` with `|x - y| >= 0.1`.
#[derive(Debug, Clone)]
pub struct OscillatingLattice {
    pub pairs: Vec<(f64, f64)>,
}

impl OscillatingLattice {
    /// `x, y` on `[-3, 3]` in steps of 1/2, plus close pairs at distance 0.1.
    pub fn standard() -> Self {
        let pts: Vec<f64> = (-6..=6).map(|i| 0.5 * i as f64).collect();
        let mut pairs = Vec::new();
        for &x in &pts {
            for &y in &pts {
                if x != y {
                    pairs.push((x, y));
                }
            }
            pairs.push((x, x + 0.1));
        }
        Self { pairs }
    }
}

/// Fitted constants for the four kernel estimates, sliced by `t`:
/// (i) `|x-y|`, (ii) `|x-y|^2`, (iii) `(sin 2t)^{3/2}` and (iv) `|x-y|^3`
/// times the corresponding integral.
pub fn lemma2002_report(
    lattice: &OscillatingLattice,
    times: &[f64],
    exponent: KernelExponent,
    lambda_points: usize,
) -> Result<Vec<ProbeReport>> {
    if lattice.pairs.iter().any(|(x, y)| (x - y).abs() < 0.1 - 1e-12) {
        return input("oscillating lattice pairs must satisfy |x - y| >= 0.1");
    }
    if times.is_empty() {
        return input("no times given");
    }
    let tag = match exponent {
        KernelExponent::Half => "e=-1/2",
        KernelExponent::One => "e=-1",
    };
    let names = ["size", "dy-amplitude", "dy-phase", "dlambda-phase"];
    let mut builders: Vec<ProbeBuilder> = names
        .iter()
        .map(|n| {
            ProbeBuilder::new(
                format!("oscillating-{n} {tag}"),
                format!("{} pairs, t in {times:?}", lattice.pairs.len()),
                4.0,
            )
            .compact()
        })
        .collect();
    for &t in times {
        let params = OscillatingParams {
            t,
            alpha: 0.5,
            lambda_points,
            exponent,
        };
        params.validate()?;
        let jump = branch_jump(&params)?;
        if jump > PI / 2.0 {
            return Err(crate::Error::Numeric(format!("branch jump {jump} along the lambda path at t = {t}")));
        }
        let s = (2.0 * t).sin();
        for &(x, y) in &lattice.pairs {
            let v = kernel_estimates(x, y, &params)?;
            let r = (x - y).abs();
            let weights = [r, r * r, s.powf(1.5), r.powi(3)];
            for (k, b) in builders.iter_mut().enumerate() {
                b.record(format!("t={t:.4}"), vec![t, x, y], v[k].norm() * weights[k]);
            }
        }
    }
    Ok(builders.into_iter().map(|b| b.finish()).collect())
}

/// `sum_n c_m[n] phi_n(x)` for each coefficient row `m`, streamed through the
/// scaled recurrence so no table is stored and nothing overflows.
fn hermite_sums(x: f64, coefs: &[Vec<Complex64>]) -> Vec<Complex64> {
    const BIG: f64 = 1e100;
    let n_max = coefs[0].len() - 1;
    let mut acc = vec![Complex64::new(0.0, 0.0); coefs.len()];
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for n in 0..=n_max {
        for (a, c) in acc.iter_mut().zip(coefs) {
            *a += c[n] * cur;
        }
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            acc.iter_mut().for_each(|a| *a /= BIG);
            log_scale += BIG.ln();
        }
    }
    acc.into_iter()
        .map(|a| {
            let m = a.norm();
            if m == 0.0 {
                a
            } else {
                a / m * (m.ln() + log_scale).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomTestConfig {
    /// Cube side lengths.
    pub deltas: Vec<f64>,
    pub atoms_per_delta: usize,
    /// Cube centers, used round-robin.
    pub centers: Vec<f64>,
    pub matrix_size: usize,
    pub seed: u64,
    /// Hermite cap `clamp(cap_scale / delta^2, cap_floor, cap_max)`.
    pub cap_scale: f64,
    pub cap_floor: usize,
    pub cap_max: usize,
    /// Sampling cells per cube side.
    pub cells: usize,
    /// Times must lie in `[t0, pi/4]`.
    pub t0: f64,
}

/// Default lower end of the time window for the atom test.
pub const T0: f64 = 0.3;

impl Default for AtomTestConfig {
    fn default() -> Self {
        Self {
            deltas: (-3..=3).map(|k| 2f64.powi(k)).collect(),
            atoms_per_delta: 20,
            centers: vec![0.0, 0.37, -1.3],
            matrix_size: 2,
            seed: 2024,
            cap_scale: 128.0,
            cap_floor: 256,
            cap_max: 8192,
            cells: 128,
            t0: T0,
        }
    }
}

impl AtomTestConfig {
    pub fn cap(&self, delta: f64) -> usize {
        ((self.cap_scale / (delta * delta)).ceil() as usize).clamp(self.cap_floor, self.cap_max)
    }
}

/// `sup ||T_t^{1/2} a||_1` over random column atoms, one report per `t`,
/// sliced by cube side.
///
/// Every atom on a cube is `sum_j b_j A_j` with shared scalar profiles, so
/// `T_t b_j` is computed once per cube (Hermite analysis of the profile,
/// spectral multiplier, synthesis on a uniform grid at twice the Nyquist
/// rate of the cap) and each atom only recombines the matrices `A_j`.
pub fn h1_atom_test(times: &[f64], cfg: &AtomTestConfig) -> Result<Vec<ProbeReport>> {
    if cfg.deltas.is_empty() || cfg.centers.is_empty() || cfg.atoms_per_delta == 0 {
        return input("atom test needs deltas, centers and at least one atom");
    }
    if !(cfg.t0 > 0.0 && cfg.t0 <= FRAC_PI_4) {
        return input(format!("t0 must lie in (0, pi/4], got {}", cfg.t0));
    }
    for &t in times {
        OscillatingParams::new(t, 0.5)?;
        if t < cfg.t0 {
            return input(format!("atom test times must lie in [t0, pi/4] with t0 = {}, got t = {t}", cfg.t0));
        }
    }
    let mut builders: Vec<ProbeBuilder> = times
        .iter()
        .map(|t| {
            ProbeBuilder::new(
                format!("h1-atoms t={t:.4} n={}", cfg.matrix_size),
                format!(
                    "{} atoms per side, sides {:?}, {} centers",
                    cfg.atoms_per_delta,
                    cfg.deltas,
                    cfg.centers.len()
                ),
                2.0,
            )
        })
        .collect();
    let mut skipped = 0usize;
    for (di, &delta) in cfg.deltas.iter().enumerate() {
        let cap = cfg.cap(delta);
        let root = (2.0 * cap as f64 + 1.0).sqrt();
        let h = PI / (2.0 * root);
        let half = root + 8.0;
        let xs: Vec<f64> = {
            let count = (2.0 * half / h).ceil() as usize;
            (0..count).map(|i| -half + (i as f64 + 0.5) * h).collect()
        };
        for (ci, &center) in cfg.centers.iter().enumerate() {
            let members: Vec<usize> = (0..cfg.atoms_per_delta).filter(|i| i % cfg.centers.len() == ci).collect();
            if members.is_empty() {
                continue;
            }
            let cube = Cube::new(vec![center], delta)?;
            let atom_seed = |i: usize| cfg.seed ^ ((di as u64) << 32) ^ (i as u64);
            let atoms = members
                .iter()
                .map(|&i| make_column_atom_with(atom_seed(i), &cube, cfg.matrix_size, cfg.cells))
                .collect::<Result<Vec<_>>>()?;
            // profile coefficients hat b_j(n) on the atom grid
            let grid = &atoms[0].field.grid;
            let mut bhat = vec![vec![0.0; cap + 1]; TERMS];
            for p in 0..grid.len() {
                let y = grid.point(p)[0];
                let u = [(y - cube.lower(0)) / delta];
                let phi = phi_1d_unchecked(y, cap);
                let w = grid.weight(p);
                for (j, row) in bhat.iter_mut().enumerate() {
                    let b = profile(j, &u) * w;
                    for (r, ph) in row.iter_mut().zip(&phi) {
                        *r += b * ph;
                    }
                }
            }
            // rows: (time, profile)
            let coefs: Vec<Vec<Complex64>> = times
                .iter()
                .flat_map(|&t| {
                    bhat.iter().map(move |row| {
                        row.iter()
                            .enumerate()
                            .map(|(n, &b)| {
                                let big = (2 * n + 1) as f64;
                                Complex64::from_polar(big.powf(-0.5), big * t) * b
                            })
                            .collect()
                    })
                })
                .collect();
            let values: Vec<Vec<Complex64>> = xs.iter().map(|&x| hermite_sums(x, &coefs)).collect();
            for (atom, &i) in atoms.iter().zip(&members) {
                let check = atom.validate()?;
                if !check.passes() {
                    skipped += 1;
                    continue;
                }
                for (ti, b) in builders.iter_mut().enumerate() {
                    let mut l1 = 0.0;
                    for v in &values {
                        let mut m = zeros(cfg.matrix_size);
                        for (j, a) in atom.coeffs.iter().enumerate() {
                            m += a * v[ti * TERMS + j];
                        }
                        l1 += h * singular_values(&m)?.iter().sum::<f64>();
                    }
                    b.record(format!("delta={delta}"), vec![delta, center, i as f64], l1);
                }
            }
        }
    }
    Ok(builders
        .into_iter()
        .map(|mut b| {
            if skipped > 0 {
                b.note(format!("{skipped} atoms failed validation and were skipped"));
            }
            b.metric("skipped", skipped as f64);
            b.finish()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuadratureGrid;
    use crate::hermite::{eval_phi_multi, MultiIndex};
    use crate::matrix::from_real;
    use crate::nc::nc_lp_norm;
    use crate::random::random_coeffs;
    use crate::semigroup::MEHLER_C1;
    use crate::spectral::synthesize;

    #[test]
    fn phases_reproduce_complex_time_mehler() {
        for &(x, y, lambda, t) in &[(0.3, -0.8, 0.3, 0.5), (1.1, 0.4, 0.05, 0.7), (-0.5, -1.5, 0.8, 0.2)] {
            let z = Complex64::new(lambda, -t);
            let phi_x = phi_1d_unchecked(x, 200);
            let phi_y = phi_1d_unchecked(y, 200);
            let spectral: Complex64 = (0..=200)
                .map(|n| (-(2.0 * n as f64 + 1.0) * z).exp() * phi_x[n] * phi_y[n])
                .sum();
            let ph = phases(x, y, lambda, t);
            let closed = (2.0 * z).sinh().powf(-0.5) * Complex64::from_polar((-ph.a).exp(), ph.b) * MEHLER_C1;
            assert!((spectral - closed).norm() < 1e-10 * spectral.norm(), "{spectral} vs {closed}");
        }
    }

    #[test]
    fn phase_derivatives_match_differences() {
        let (x, y, l, t) = (0.7, -0.4, 0.35, 0.6);
        let h = 1e-6;
        let p = phases(x, y, l, t);
        let fy = (phases(x, y + h, l, t).a - phases(x, y - h, l, t).a) / (2.0 * h);
        let gy = (phases(x, y + h, l, t).b - phases(x, y - h, l, t).b) / (2.0 * h);
        let gl = (phases(x, y, l + h, t).b - phases(x, y, l - h, t).b) / (2.0 * h);
        assert!((p.a_y - fy).abs() < 1e-7);
        assert!((p.b_y - gy).abs() < 1e-7);
        assert!((p.b_lambda - gl).abs() < 1e-7);
    }

    #[test]
    fn kernel_symmetry_and_convergence() {
        let mut p = OscillatingParams::new(0.5, 0.5).unwrap();
        let k = oscillating_kernel(0.4, -1.2, &p).unwrap();
        assert_eq!(k, oscillating_kernel(-1.2, 0.4, &p).unwrap());
        p.lambda_points = 512;
        let fine = oscillating_kernel(0.4, -1.2, &p).unwrap();
        assert!((k - fine).norm() < 1e-8);
        assert!(branch_jump(&p).unwrap() < 0.1);
        assert!(OscillatingParams::new(0.0, 0.5).is_err());
        assert!(OscillatingParams::new(1.0, 0.5).is_err());
        assert!(OscillatingParams::new(PI / 4.0, 0.5).is_ok());
    }

    #[test]
    fn multiplier_properties() {
        let grid = QuadratureGrid::gauss_hermite(1, 24).unwrap();
        let c = from_real(2, 2, &[1.0, 2.0, 0.0, -1.0]);
        let f0 = MatrixField::scalar_times(grid.clone(), |x| eval_phi_multi(&MultiIndex(vec![0]), x).unwrap(), &c)
            .unwrap();
        let p = OscillatingParams::new(PI / 4.0, 0.0).unwrap();
        let out = apply_oscillating(&f0, &p, 20).unwrap();
        let want = f0.scale(Complex64::from_polar(1.0, PI / 4.0));
        assert!(out.sub(&want).unwrap().sup_norm() < 1e-12);
        let f = synthesize(&random_coeffs(1, 20, 2, 6), &grid).unwrap();
        let l2 = |g: &MatrixField| nc_lp_norm(g, 2.0).unwrap();
        assert!((l2(&apply_oscillating(&f, &p, 20).unwrap()) - l2(&f)).abs() < 1e-12 * l2(&f));
        let q = OscillatingParams::new(0.5, 0.5).unwrap();
        assert!(l2(&apply_oscillating(&f, &q, 20).unwrap()) <= l2(&f));
    }

    #[test]
    fn streamed_sums_match_tables() {
        let coefs = vec![(0..=300).map(|n| Complex64::new(1.0 / (1.0 + n as f64), 0.3)).collect::<Vec<_>>()];
        for &x in &[0.0, 3.0, 20.0, 30.0] {
            let phi = phi_1d_unchecked(x, 300);
            let want: Complex64 = coefs[0].iter().zip(&phi).map(|(c, p)| c * p).sum();
            let got = hermite_sums(x, &coefs)[0];
            assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()), "x = {x}");
        }
    }

    #[test]
    fn kernel_estimates_are_stable() {
        let lattice = OscillatingLattice::standard();
        for e in [KernelExponent::Half, KernelExponent::One] {
            for r in lemma2002_report(&lattice, &[0.4, 0.6, PI / 4.0], e, 256).unwrap() {
                assert!(r.passed, "{} {:?}", r.name, r.slices);
            }
        }
    }

    #[test]
    fn atom_images_have_bounded_l1_norm() {
        let cfg = AtomTestConfig {
            deltas: vec![0.5, 1.0, 2.0],
            atoms_per_delta: 4,
            cap_floor: 128,
            ..AtomTestConfig::default()
        };
        let reports = h1_atom_test(&[0.5], &cfg).unwrap();
        assert!(reports[0].passed, "{:?}", reports[0].slices);
        assert!(h1_atom_test(&[0.0], &cfg).is_err());
        assert!(h1_atom_test(&[0.25], &cfg).is_err());
        let early = AtomTestConfig { t0: 0.2, ..cfg };
        assert!(h1_atom_test(&[0.25], &early).is_ok());
    }
}
