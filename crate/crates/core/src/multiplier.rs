//! Spectral multipliers `T_mu f = sum_n mu(2n + d) P_n f`, the
//! Marcinkiewicz finite-difference condition, and the kernel
//! `M(t, x, y) = sum_nu e^{-Nt} mu(N) Phi_nu(x) Phi_nu(y)` behind the
//! square-function domination `g_{k+1}(T_mu f) <= C g*_k(f)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::field::MatrixField;
use crate::grid::QuadratureGrid;
use crate::hermite::level_kernels;
use crate::nc::nc_lp_norm;
use crate::probe::{spread, ProbeBuilder, ProbeReport};
use crate::semigroup::{g_k_function, g_star_k, psd_domination, TimeGrid};
use crate::spectral::apply_multiplier;

/// A multiplier `N -> mu(N)` on the integers `N >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MultiplierSpec {
    Constant { value: f64 },
    /// `N^{i gamma}`.
    UnimodularPower { gamma: f64 },
    /// `N^{-alpha}`.
    InversePower { alpha: f64 },
    /// `N^{-alpha} e^{i N t}`.
    Oscillating { alpha: f64, t: f64 },
    /// `e^{-N t}`.
    Heat { t: f64 },
    /// `(-1)^N`; violates the difference condition at every order.
    Parity {},
    /// Explicit values `[N, re, im]`.
    Table { entries: Vec<(usize, f64, f64)> },
}

impl MultiplierSpec {
    pub fn eval(&self, n: usize) -> Result<Complex64> {
        if n == 0 {
            return input("multipliers are evaluated at N >= 1");
        }
        let nf = n as f64;
        Ok(match self {
            Self::Constant { value } => Complex64::new(*value, 0.0),
            Self::UnimodularPower { gamma } => Complex64::from_polar(1.0, gamma * nf.ln()),
            Self::InversePower { alpha } => Complex64::new(nf.powf(-alpha), 0.0),
            Self::Oscillating { alpha, t } => Complex64::from_polar(nf.powf(-alpha), nf * t),
            Self::Heat { t } => Complex64::new((-nf * t).exp(), 0.0),
            Self::Parity {} => Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0),
            Self::Table { entries } => {
                let &(_, re, im) = entries
                    .iter()
                    .find(|e| e.0 == n)
                    .ok_or_else(|| crate::Error::Input(format!("multiplier table has no entry for N = {n}")))?;
                Complex64::new(re, im)
            }
        })
    }

    /// `mu(1), ..., mu(n_max)` at indices `0..n_max`.
    pub fn values(&self, n_max: usize) -> Result<Vec<Complex64>> {
        let out = (1..=n_max).map(|n| self.eval(n)).collect::<Result<Vec<_>>>()?;
        if let Some(k) = out.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return input(format!("multiplier is not finite at N = {}", k + 1));
        }
        Ok(out)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Constant { value } => format!("constant({value})"),
            Self::UnimodularPower { gamma } => format!("N^(i*{gamma})"),
            Self::InversePower { alpha } => format!("N^(-{alpha})"),
            Self::Oscillating { alpha, t } => format!("N^(-{alpha})e^(iN*{t})"),
            Self::Heat { t } => format!("e^(-N*{t})"),
            Self::Parity {} => "(-1)^N".into(),
            Self::Table { entries } => format!("table({} entries)", entries.len()),
        }
    }
}

fn binomial(r: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (r - i) as f64 / (i + 1) as f64)
}

/// `delta^r mu(N) = sum_j (-1)^{r-j} C(r, j) mu(N + j)`.
pub fn finite_difference(mu: &MultiplierSpec, r: usize, n: usize) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=r {
        let sign = if (r - j) % 2 == 0 { 1.0 } else { -1.0 };
        acc += mu.eval(n + j)? * (sign * binomial(r, j));
    }
    Ok(acc)
}

/// Fits `C_r = max_{N <= N'} |delta^r mu(N)| N^r` for `r = 0..=order` on the
/// ladder `N' in {N_max/4, N_max/2, N_max}`. Slices are the rungs; the
/// report passes when every `C_r` is finite and varies by less than a
/// factor 2 along the ladder.
pub fn marcinkiewicz_report(mu: &MultiplierSpec, order: usize, n_max: usize) -> Result<ProbeReport> {
    if order == 0 {
        return input("the difference condition needs order >= 1");
    }
    if n_max < 4 {
        return input("N_max must be at least 4");
    }
    let vals = mu.values(n_max + order)?;
    let rungs = [n_max / 4, n_max / 2, n_max];
    // differences by repeated first differences, table[r][N - 1]
    let mut diffs = vec![vals.clone()];
    for r in 1..=order {
        let prev = &diffs[r - 1];
        diffs.push(prev.windows(2).map(|w| w[1] - w[0]).collect());
    }
    let mut b = ProbeBuilder::new(
        format!("marcinkiewicz {}", mu.label()),
        format!("r = 0..={order}, N_max in {rungs:?}"),
        2.0,
    )
    .compact();
    let mut per_r = vec![Vec::new(); order + 1];
    for &rung in &rungs {
        for (r, row) in diffs.iter().enumerate() {
            let mut c: f64 = 0.0;
            for n in 1..=rung {
                let v = row[n - 1].norm() * (n as f64).powi(r as i32);
                c = c.max(v);
                b.record(format!("N_max={rung}"), vec![r as f64, n as f64], v);
            }
            b.metric(format!("C_{r}@{rung}"), c);
            per_r[r].push(c);
        }
    }
    let spreads: Vec<f64> = per_r.iter().map(|cs| spread(cs.iter().copied())).collect();
    for (r, s) in spreads.iter().enumerate() {
        b.metric(format!("spread_{r}"), *s);
    }
    Ok(b.finish_with(|_| spreads.iter().all(|&s| s < 2.0)))
}

/// `T_mu f` on the span of levels `<= degree_cap`.
pub fn apply_tmu(f: &MatrixField, mu: &MultiplierSpec, degree_cap: usize) -> Result<MatrixField> {
    let top = 2 * degree_cap + f.grid.dim;
    let vals = mu.values(top)?;
    apply_multiplier(f, degree_cap, |n| vals[n - 1])
}

/// `||T_mu f||_p / ||f||_p`; zero for the zero field.
pub fn tmu_lp_ratio(f: &MatrixField, mu: &MultiplierSpec, p: f64, degree_cap: usize) -> Result<f64> {
    let nf = nc_lp_norm(f, p)?;
    if nf == 0.0 {
        return Ok(0.0);
    }
    Ok(nc_lp_norm(&apply_tmu(f, mu, degree_cap)?, p)? / nf)
}

/// `d^k/dt^k M(t, x, y)`, truncated at `degree_cap`.
pub fn m_kernel(mu: &MultiplierSpec, k: u32, t: f64, x: &[f64], y: &[f64], degree_cap: usize) -> Result<Complex64> {
    if x.len() != y.len() || x.is_empty() {
        return input("kernel points must share a dimension >= 1");
    }
    let d = x.len();
    let vals = mu.values(2 * degree_cap + d)?;
    let lk = level_kernels(x, y, degree_cap);
    Ok(m_from_levels(&vals, &lk, k, t, d))
}

fn m_from_levels(vals: &[Complex64], levels: &[f64], k: u32, t: f64, d: usize) -> Complex64 {
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    levels
        .iter()
        .enumerate()
        .map(|(n, &phi)| {
            let big = (2 * n + d) as f64;
            vals[2 * n + d - 1] * (sign * big.powi(k as i32) * (-big * t).exp() * phi)
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct MKernelLattice {
    pub times: Vec<f64>,
    /// Points `x`; all share one dimension.
    pub xs: Vec<Vec<f64>>,
    /// Points `y` for the pointwise bound.
    pub ys: Vec<Vec<f64>>,
    pub degree_cap: usize,
}

impl MKernelLattice {
    /// Times below this are dominated by the truncation `e^{-(2 cap + d) t}`.
    pub fn truncation_floor(&self, d: usize) -> f64 {
        12.0 / (2 * self.degree_cap + d) as f64
    }
}

/// Fitted constants for `|d^k M(t,x,y)| <= C t^{-d/2-k}` and
/// `int |x-y|^{2k} |d^k M(t,x,y)|^2 dy <= C t^{-d/2-k}`.
///
/// Slices are nested: `t >= 4 t_0`, `t >= 2 t_0` and `t >= t_0` for the
/// smallest admissible time `t_0`, so the spread measures growth of the fit
/// as the lattice reaches toward `t = 0`.
pub fn m_kernel_report(mu: &MultiplierSpec, k: u32, lattice: &MKernelLattice) -> Result<Vec<ProbeReport>> {
    let Some(d) = lattice.xs.first().map(|x| x.len()) else {
        return input("M-kernel lattice has no points");
    };
    if lattice.xs.iter().chain(&lattice.ys).any(|p| p.len() != d) || d == 0 {
        return input("M-kernel lattice points must share a dimension >= 1");
    }
    let cap = lattice.degree_cap;
    let floor = lattice.truncation_floor(d);
    let times: Vec<f64> = lattice.times.iter().copied().filter(|&t| t >= floor).collect();
    let dropped = lattice.times.len() - times.len();
    let vals = mu.values(2 * cap + d)?;
    let power = d as f64 / 2.0 + k as f64;
    let Some(t0) = times.iter().copied().reduce(f64::min) else {
        return input(format!("no lattice time above the truncation floor {floor:.4}"));
    };
    let floors = [4.0 * t0, 2.0 * t0, t0];

    let mut sup = ProbeBuilder::new(
        format!("m-kernel-sup-k{k} {}", mu.label()),
        format!("{} times, {} x, {} y, cap {cap}", times.len(), lattice.xs.len(), lattice.ys.len()),
        4.0,
    )
    .compact();
    let mut moment = ProbeBuilder::new(
        format!("m-kernel-moment-k{k} {}", mu.label()),
        format!("{} times, {} x, cap {cap}", times.len(), lattice.xs.len()),
        4.0,
    )
    .compact();
    if dropped > 0 {
        let msg = format!("{dropped} times below the truncation floor {floor:.4} excluded");
        log::warn!("{msg}");
        sup.note(msg.clone());
        moment.note(msg);
    }
    let ygrid = QuadratureGrid::gauss_hermite(d, cap + k as usize + 2)?;
    let ypts = ygrid.points();
    let yw = ygrid.weights();
    for x in &lattice.xs {
        let pointwise: Vec<Vec<f64>> = lattice.ys.iter().map(|y| level_kernels(x, y, cap)).collect();
        let quad: Vec<Vec<f64>> = ypts.iter().map(|y| level_kernels(x, y, cap)).collect();
        for &t in &times {
            for (y, lk) in lattice.ys.iter().zip(&pointwise) {
                let v = m_from_levels(&vals, lk, k, t, d).norm();
                let mut coords = vec![t];
                coords.extend_from_slice(x);
                coords.extend_from_slice(y);
                for &fl in floors.iter().filter(|&&fl| t >= fl) {
                    sup.record(format!("t>={fl:.4}"), coords.clone(), v * t.powf(power));
                }
            }
            let mut acc = 0.0;
            for ((y, lk), w) in ypts.iter().zip(&quad).zip(&yw) {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                acc += w * r2.powi(k as i32) * m_from_levels(&vals, lk, k, t, d).norm_sqr();
            }
            let mut coords = vec![t];
            coords.extend_from_slice(x);
            for &fl in floors.iter().filter(|&&fl| t >= fl) {
                moment.record(format!("t>={fl:.4}"), coords.clone(), acc * t.powf(power));
            }
        }
    }
    Ok(vec![sup.finish(), moment.finish()])
}

/// Fits the smallest `C` with `g_{k+1}(T_mu f)(x)^2 <= C^2 g*_k(f)(x)^2` in
/// the PSD order at every grid point carrying mass.
pub fn domination_check(
    f: &MatrixField,
    mu: &MultiplierSpec,
    k: u32,
    degree_cap: usize,
    tg: &TimeGrid,
) -> Result<ProbeReport> {
    let d = f.grid.dim;
    if !(k as f64 > d as f64 / 2.0) {
        return input(format!("domination needs k > d/2, got k = {k}, d = {d}"));
    }
    let big_f = apply_tmu(f, mu, degree_cap)?;
    let lhs = g_k_function(&big_f, k + 1, degree_cap, tg)?;
    let rhs = g_star_k(f, k, degree_cap, tg)?;
    let dom = psd_domination(&lhs, &rhs, 1e-12)?;
    let mut b = ProbeBuilder::new(
        format!("domination-k{k} {}", mu.label()),
        format!("{} grid points, cap {degree_cap}", f.len()),
        f64::INFINITY,
    );
    for &(p, c) in &dom.per_point {
        b.record("grid", f.grid.point(p), c);
    }
    let scaled = if dom.scale > 0.0 { dom.min_residual / dom.scale } else { 0.0 };
    b.metric("min_scaled_residual", scaled);
    b.metric("points_used", dom.points_used as f64);
    let ok = dom.holds(1e-9);
    Ok(b.finish_with(|_| ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{eval_phi_multi, MultiIndex};
    use crate::matrix::identity;
    use crate::random::random_coeffs;
    use crate::semigroup::{mehler_dt_kernel, semigroup_apply, MehlerParams, SemigroupMode};
    use crate::spectral::{project, synthesize};

    #[test]
    fn differences() {
        let one = MultiplierSpec::Constant { value: 1.0 };
        assert_eq!(finite_difference(&one, 1, 7).unwrap(), Complex64::new(0.0, 0.0));
        let lin = MultiplierSpec::Table {
            entries: (1..20).map(|n| (n, n as f64, 0.0)).collect(),
        };
        assert!(finite_difference(&lin, 2, 3).unwrap().norm() < 1e-14);
        let inv = MultiplierSpec::InversePower { alpha: 1.0 };
        assert!((finite_difference(&inv, 1, 5).unwrap().re + 1.0 / 30.0).abs() < 1e-15);
        assert!(lin.eval(40).is_err());
        assert!(inv.eval(0).is_err());
        // inductive definition agrees with the binomial expansion
        let mu = MultiplierSpec::UnimodularPower { gamma: 0.7 };
        let by_hand = |n| {
            let d1 = |m| mu.eval(m + 1).unwrap() - mu.eval(m).unwrap();
            let d2 = |m| d1(m + 1) - d1(m);
            d2(n + 1) - d2(n)
        };
        assert!((finite_difference(&mu, 3, 9).unwrap() - by_hand(9)).norm() < 1e-14);
    }

    #[test]
    fn marcinkiewicz_distinguishes() {
        let good = marcinkiewicz_report(&MultiplierSpec::UnimodularPower { gamma: 1.0 }, 2, 4096).unwrap();
        assert!(good.passed, "{:?}", good.metrics);
        let bad = marcinkiewicz_report(&MultiplierSpec::Parity {}, 1, 4096).unwrap();
        assert!(!bad.passed);
        let c1 = |r: &ProbeReport, rung: usize| r.metric(&format!("C_1@{rung}")).unwrap();
        assert!((c1(&bad, 4096) / c1(&bad, 1024) - 4.0).abs() < 0.01);
        let one = marcinkiewicz_report(&MultiplierSpec::Constant { value: 1.0 }, 3, 64).unwrap();
        assert!(one.passed);
        assert_eq!(one.metric("C_0@64"), Some(1.0));
        assert_eq!(one.metric("C_2@64"), Some(0.0));
    }

    #[test]
    fn tmu_identities() {
        let grid = QuadratureGrid::gauss_hermite(1, 24).unwrap();
        let f = synthesize(&random_coeffs(1, 20, 2, 1), &grid).unwrap();
        let id = apply_tmu(&f, &MultiplierSpec::Constant { value: 1.0 }, 20).unwrap();
        assert!(id.sub(&f).unwrap().sup_norm() < 1e-12);
        let heat = apply_tmu(&f, &MultiplierSpec::Heat { t: 0.3 }, 20).unwrap();
        let h = semigroup_apply(&f, 0.3, SemigroupMode::Spectral, 20).unwrap();
        assert!(heat.sub(&h).unwrap().sup_norm() < 1e-12);
        let inv = MultiplierSpec::InversePower { alpha: 0.5 };
        let l2 = |g: &MatrixField| nc_lp_norm(g, 2.0).unwrap();
        assert!(l2(&apply_tmu(&f, &inv, 20).unwrap()) <= l2(&f));
        let uni = MultiplierSpec::UnimodularPower { gamma: 2.0 };
        assert!((l2(&apply_tmu(&f, &uni, 20).unwrap()) - l2(&f)).abs() < 1e-10 * l2(&f));
        // commutes with projections; composition multiplies symbols
        let a = project(&apply_tmu(&f, &uni, 20).unwrap(), 3, 20).unwrap();
        let b = apply_tmu(&project(&f, 3, 20).unwrap(), &uni, 20).unwrap();
        assert!(a.sub(&b).unwrap().sup_norm() < 1e-12);
        let ab = apply_tmu(&apply_tmu(&f, &uni, 20).unwrap(), &inv, 20).unwrap();
        let prod = MultiplierSpec::Table {
            entries: (1..=41)
                .map(|n| {
                    let v = uni.eval(n).unwrap() * inv.eval(n).unwrap();
                    (n, v.re, v.im)
                })
                .collect(),
        };
        assert!(ab.sub(&apply_tmu(&f, &prod, 20).unwrap()).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn m_kernel_reduces_to_mehler_derivative() {
        let one = MultiplierSpec::Constant { value: 1.0 };
        for &t in &[0.3, 1.0] {
            let p = MehlerParams::new(t, 1).unwrap();
            for &(x, y) in &[(0.0, 0.5), (1.2, -0.7)] {
                let m = m_kernel(&one, 1, t, &[x], &[y], 128).unwrap();
                let want = mehler_dt_kernel(&[x], &[y], &p).unwrap();
                assert!((m.re - want).abs() < 1e-10 && m.im == 0.0);
            }
        }
        let zero = MultiplierSpec::Constant { value: 0.0 };
        assert_eq!(m_kernel(&zero, 2, 0.5, &[0.1], &[0.2], 16).unwrap().norm(), 0.0);
    }

    #[test]
    fn m_kernel_probe_is_stable() {
        let coords: Vec<Vec<f64>> = (-4..=4).map(|i| vec![0.5 * i as f64]).collect();
        let lattice = MKernelLattice {
            times: (0..12).map(|i| 0.05 * 40f64.powf(i as f64 / 11.0)).collect(),
            xs: coords.clone(),
            ys: coords,
            degree_cap: 160,
        };
        let mu = MultiplierSpec::UnimodularPower { gamma: 1.0 };
        for r in m_kernel_report(&mu, 1, &lattice).unwrap() {
            assert!(r.passed, "{} {:?}", r.name, r.slices);
        }
        let coarse = MKernelLattice { degree_cap: 32, ..lattice };
        let r = m_kernel_report(&mu, 1, &coarse).unwrap();
        assert!(!r[0].notes.is_empty());
    }

    #[test]
    fn domination_probe() {
        let tg = TimeGrid::default();
        let grid = QuadratureGrid::gauss_hermite(1, 24).unwrap();
        let f = synthesize(&random_coeffs(1, 20, 2, 8), &grid).unwrap();
        let r = domination_check(&f, &MultiplierSpec::Constant { value: 1.0 }, 1, 20, &tg).unwrap();
        assert!(r.passed && r.fitted_constant.is_finite() && r.fitted_constant > 0.0);
        let z = MatrixField::zeros(grid.clone(), 2);
        let r0 = domination_check(&z, &MultiplierSpec::Constant { value: 1.0 }, 1, 20, &tg).unwrap();
        assert_eq!(r0.fitted_constant, 0.0);
        let g2 = QuadratureGrid::gauss_hermite(2, 6).unwrap();
        let f2 = MatrixField::scalar_times(g2, |x| eval_phi_multi(&MultiIndex(vec![0, 0]), x).unwrap(), &identity(1))
            .unwrap();
        assert!(domination_check(&f2, &MultiplierSpec::Constant { value: 1.0 }, 1, 4, &tg).is_err());
    }

    #[test]
    fn spec_serde_round_trip() {
        let specs = vec![
            MultiplierSpec::UnimodularPower { gamma: 1.5 },
            MultiplierSpec::Parity {},
            MultiplierSpec::Table { entries: vec![(1, 0.5, -0.25)] },
        ];
        for s in specs {
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<MultiplierSpec>(&text).unwrap(), s);
        }
        assert!(serde_json::from_str::<MultiplierSpec>(r#"{"kind":"parity","x":1}"#).is_err());
    }
}
