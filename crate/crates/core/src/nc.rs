//! Noncommutative norms for matrix fields with the unnormalized trace.

use log::warn;
use num_complex::Complex64;

use crate::error::{input, Error, Result};
use crate::field::MatrixField;
use crate::matrix::{min_eigenvalue, op_norm, singular_values, zeros, CMat};

/// `(int Tr |f(x)|^p dx)^{1/p}`; `p = f64::INFINITY` gives the sup of the
/// operator norms over the grid.
pub fn nc_lp_norm(f: &MatrixField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return input(format!("L_p norm needs p >= 1, got {p}"));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let mut acc = 0.0;
    for (k, s) in f.samples.iter().enumerate() {
        let sv = singular_values(s)?;
        acc += f.grid.weight(k) * sv.iter().map(|v| v.powf(p)).sum::<f64>();
    }
    Ok(acc.powf(1.0 / p))
}

/// `64` thresholds spanning six decades below `||f||_inf`.
pub fn default_lambda_grid(f: &MatrixField) -> Vec<f64> {
    lambda_grid(f.sup_norm(), 64, 6.0)
}

/// Log-spaced thresholds from just below `top` down to `top * 10^-decades`.
pub fn lambda_grid(top: f64, count: usize, decades: f64) -> Vec<f64> {
    if top <= 0.0 || count == 0 {
        return Vec::new();
    }
    let start = top * (1.0 - 1e-12);
    let denom = (count.max(2) - 1) as f64;
    (0..count)
        .map(|k| start * 10f64.powf(-decades * k as f64 / denom))
        .collect()
}

/// `max_lambda lambda * (int #{singular values of f(x) > lambda} dx)^{1/p}`.
///
/// The distribution function is only sampled at the given thresholds, so
/// this is a lower bound for the weak-L_p quasinorm.
pub fn weak_lp_quasinorm(f: &MatrixField, p: f64, lambdas: &[f64]) -> Result<f64> {
    if !(p >= 1.0) {
        return input(format!("weak L_p needs p >= 1, got {p}"));
    }
    if lambdas.is_empty() {
        return input("weak L_p needs a nonempty threshold grid");
    }
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return input("weak L_p thresholds must be positive");
    }
    let svs = f
        .samples
        .iter()
        .map(singular_values)
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0.0f64;
    for &lam in lambdas {
        let mass: f64 = svs
            .iter()
            .enumerate()
            .map(|(k, sv)| f.grid.weight(k) * sv.iter().filter(|&&s| s > lam).count() as f64)
            .sum();
        best = best.max(lam * mass.powf(1.0 / p));
    }
    Ok(best)
}

/// Trace pairing `int Tr(f(x) g(x)) dx`.
pub fn pairing(f: &MatrixField, g: &MatrixField) -> Result<Complex64> {
    if f.grid != g.grid || f.matrix_size != g.matrix_size {
        return input("pairing needs conforming fields");
    }
    Ok(f
        .samples
        .iter()
        .zip(&g.samples)
        .enumerate()
        .map(|(k, (a, b))| (a * b).trace() * f.grid.weight(k))
        .sum())
}

#[derive(Debug, Clone, Copy)]
pub struct CsResidual {
    /// Smallest eigenvalue of `(int |phi|^2)(int |f|^2) - |int phi f|^2`.
    pub min_eigenvalue: f64,
    /// Operator norm of the right-hand side, for relative tolerances.
    pub scale: f64,
}

/// Operator Cauchy-Schwarz defect for a scalar weight `phi` and a matrix
/// function `f` on a discrete measure with point masses `measure`.
pub fn op_cauchy_schwarz_residual(phi: &[Complex64], f: &[CMat], measure: &[f64]) -> Result<CsResidual> {
    let m = measure.len();
    if phi.len() != m || f.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: if phi.len() != m { phi.len() } else { f.len() },
        });
    }
    let Some(n) = f.first().map(|a| a.nrows()) else {
        return Ok(CsResidual {
            min_eigenvalue: 0.0,
            scale: 0.0,
        });
    };
    let mut phi2 = 0.0;
    let mut f2 = zeros(n);
    let mut pf = zeros(n);
    for k in 0..m {
        phi2 += measure[k] * phi[k].norm_sqr();
        f2 += (f[k].adjoint() * &f[k]).scale(measure[k]);
        pf += &f[k] * (phi[k] * measure[k]);
    }
    let rhs = f2.scale(phi2);
    let lhs = pf.adjoint() * &pf;
    let diff = &rhs - &lhs;
    Ok(CsResidual {
        min_eigenvalue: min_eigenvalue(&crate::matrix::hermitian_part(&diff))?,
        scale: op_norm(&rhs),
    })
}

/// Same as [`op_cauchy_schwarz_residual`] with the grid weights as measure.
pub fn field_cauchy_schwarz_residual(phi: &[Complex64], f: &MatrixField) -> Result<CsResidual> {
    op_cauchy_schwarz_residual(phi, &f.samples, &f.grid.weights())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmoSide {
    Row,
    Column,
    Max,
}

/// Dyadic BMO norm of `f` on the box `[lo, hi]^d`.
///
/// `levels` counts dyadic generations including the box itself. Only dyadic
/// cubes are visited, so the value bounds the full BMO norm from below.
pub fn bmo_norm(f: &MatrixField, side: BmoSide, lo: f64, hi: f64, levels: usize) -> Result<f64> {
    if levels == 0 {
        return input("BMO needs at least one dyadic level");
    }
    if !(hi > lo) {
        return input("BMO box needs lo < hi");
    }
    let d = f.grid.dim;
    let points = f.grid.points();
    let weights = f.grid.weights();
    let mut best = 0.0f64;
    for level in 0..levels {
        let cells = 1usize << level;
        let h = (hi - lo) / cells as f64;
        let mut members: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
        for (k, x) in points.iter().enumerate() {
            if x.iter().any(|&t| t < lo || t > hi) {
                continue;
            }
            let key: Vec<usize> = x
                .iter()
                .map(|&t| (((t - lo) / h).floor() as usize).min(cells - 1))
                .collect();
            members.entry(key).or_default().push(k);
        }
        let expected = cells.pow(d as u32);
        if members.len() < expected {
            warn!(
                "BMO level {level}: {} of {expected} dyadic cubes contain no grid point and are skipped",
                expected - members.len()
            );
        }
        for idx in members.values() {
            let mass: f64 = idx.iter().map(|&k| weights[k]).sum();
            if mass <= 0.0 {
                continue;
            }
            let mut mean = zeros(f.matrix_size);
            for &k in idx {
                mean += f.samples[k].scale(weights[k] / mass);
            }
            let mut row = zeros(f.matrix_size);
            let mut col = zeros(f.matrix_size);
            for &k in idx {
                let dlt = &f.samples[k] - &mean;
                let w = weights[k] / mass;
                if side != BmoSide::Column {
                    row += (&dlt * dlt.adjoint()).scale(w);
                }
                if side != BmoSide::Row {
                    col += (dlt.adjoint() * &dlt).scale(w);
                }
            }
            let v = op_norm(&row).max(op_norm(&col)).sqrt();
            best = best.max(v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuadratureGrid;
    use crate::hermite::eval_phi_1d;
    use crate::matrix::{from_real, identity};
    use crate::random::{gaussian_matrix, hermitian_matrix, rng};
    use proptest::prelude::*;
    use rand::Rng;

    fn gh(m: usize) -> QuadratureGrid {
        QuadratureGrid::gauss_hermite(1, m).unwrap()
    }

    #[test]
    fn lp_examples() {
        let f = MatrixField::scalar_times(gh(20), |x| eval_phi_1d(x[0], 0).unwrap()[0], &identity(2)).unwrap();
        assert!((nc_lp_norm(&f, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let z = MatrixField::zeros(gh(5), 2);
        assert_eq!(nc_lp_norm(&z, 3.0).unwrap(), 0.0);
        let f3 = MatrixField::scalar_times(gh(20), |x| eval_phi_1d(x[0], 3).unwrap()[3], &identity(1)).unwrap();
        assert!((nc_lp_norm(&f3, 2.0).unwrap() - 1.0).abs() < 1e-8);
        assert!(nc_lp_norm(&f3, 0.5).is_err());
        let sup = nc_lp_norm(&f3, f64::INFINITY).unwrap();
        assert!(sup > 0.0 && sup < 1.0);
    }

    #[test]
    fn lp_matches_frobenius_sum_at_two() {
        let g = gh(16);
        let mut r = rng(9);
        let samples: Vec<CMat> = (0..g.len()).map(|_| gaussian_matrix(&mut r, 3)).collect();
        let f = MatrixField::new(g.clone(), 3, samples).unwrap();
        let direct: f64 = f
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| g.weight(k) * s.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        assert!((nc_lp_norm(&f, 2.0).unwrap() - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn weak_lp_examples() {
        let g = QuadratureGrid::uniform(1, -1.0, 2.0, 300).unwrap();
        let c = 2.5;
        let f = MatrixField::scalar_times(g, |x| if x[0] >= 0.0 && x[0] < 1.0 { c } else { 0.0 }, &identity(1)).unwrap();
        let w = weak_lp_quasinorm(&f, 1.0, &default_lambda_grid(&f)).unwrap();
        assert!((w - c).abs() < 1e-9, "{w}");
        let z = MatrixField::zeros(gh(4), 2);
        assert_eq!(weak_lp_quasinorm(&z, 2.0, &[0.5, 1.0]).unwrap(), 0.0);
        assert!(weak_lp_quasinorm(&z, 2.0, &[]).is_err());

        // lambda * m(lambda)^{1/p} with m nonincreasing in lambda
        let phi0 = MatrixField::scalar_times(gh(40), |x| eval_phi_1d(x[0], 0).unwrap()[0], &from_real(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let lams = default_lambda_grid(&phi0);
        let masses: Vec<f64> = lams
            .iter()
            .map(|&l| weak_lp_quasinorm(&phi0, 2.0, &[l]).unwrap() / l)
            .collect();
        assert!(masses.windows(2).all(|m| m[1] >= m[0] - 1e-15));
        let w = weak_lp_quasinorm(&phi0, 2.0, &lams).unwrap();
        assert!(w <= nc_lp_norm(&phi0, 2.0).unwrap() + 1e-12);
    }

    #[test]
    fn cauchy_schwarz_cases() {
        let c = from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let r = op_cauchy_schwarz_residual(&[Complex64::new(1.0, 0.0)], &[c.clone()], &[1.0]).unwrap();
        assert!(r.min_eigenvalue.abs() < 1e-12 * r.scale.max(1.0));
        let z = op_cauchy_schwarz_residual(&[Complex64::new(0.0, 0.0); 2], &[c.clone(), c.clone()], &[0.5, 0.5]).unwrap();
        assert_eq!(z.min_eigenvalue, 0.0);
        assert!(op_cauchy_schwarz_residual(&[Complex64::new(1.0, 0.0)], &[c], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn cauchy_schwarz_holds(seed in any::<u64>(), m in 1usize..24, n in 1usize..4) {
            let mut r = rng(seed);
            let phi: Vec<Complex64> = (0..m).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
            let f: Vec<CMat> = (0..m).map(|_| hermitian_matrix(&mut r, n)).collect();
            let mu: Vec<f64> = (0..m).map(|_| r.random_range(0.0..1.0)).collect();
            let res = op_cauchy_schwarz_residual(&phi, &f, &mu).unwrap();
            prop_assert!(res.min_eigenvalue >= -1e-10 * res.scale.max(1e-300));
        }

        #[test]
        fn lp_is_homogeneous(seed in any::<u64>(), c in 0.1f64..5.0, p in 1.0f64..4.0) {
            let g = gh(12);
            let mut r = rng(seed);
            let samples: Vec<CMat> = (0..g.len()).map(|_| gaussian_matrix(&mut r, 2)).collect();
            let f = MatrixField::new(g, 2, samples).unwrap();
            let a = nc_lp_norm(&f.scale(Complex64::new(0.0, c)), p).unwrap();
            let b = nc_lp_norm(&f, p).unwrap();
            prop_assert!((a - c * b).abs() <= 1e-12 * c * b);
        }

        #[test]
        fn holder_on_grid(seed in any::<u64>(), pi in 0usize..3) {
            let p = [1.5, 2.0, 3.0][pi];
            let q = p / (p - 1.0);
            let g = gh(10);
            let mut r = rng(seed);
            let f = MatrixField::new(g.clone(), 2, (0..g.len()).map(|_| gaussian_matrix(&mut r, 2)).collect()).unwrap();
            let h = MatrixField::new(g.clone(), 2, (0..g.len()).map(|_| gaussian_matrix(&mut r, 2)).collect()).unwrap();
            let lhs = pairing(&f, &h).unwrap().norm();
            let rhs = nc_lp_norm(&f, p).unwrap() * nc_lp_norm(&h, q).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bmo_examples() {
        let g = QuadratureGrid::uniform(1, -1.0, 1.0, 64).unwrap();
        let c = from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let f = MatrixField::scalar_times(g.clone(), |_| 1.0, &c).unwrap();
        assert!(bmo_norm(&f, BmoSide::Max, -1.0, 1.0, 4).unwrap() < 1e-12);

        let amp = 0.75;
        let step = MatrixField::scalar_times(g.clone(), |x| if x[0] < 0.0 { -amp } else { amp }, &identity(1)).unwrap();
        assert!((bmo_norm(&step, BmoSide::Column, -1.0, 1.0, 1).unwrap() - amp).abs() < 1e-12);
        assert!((bmo_norm(&step, BmoSide::Column, -1.0, 1.0, 5).unwrap() - amp).abs() < 1e-12);

        let mut r = rng(3);
        let herm: Vec<CMat> = (0..g.len()).map(|_| hermitian_matrix(&mut r, 2)).collect();
        let hf = MatrixField::new(g, 2, herm).unwrap();
        let row = bmo_norm(&hf, BmoSide::Row, -1.0, 1.0, 3).unwrap();
        let col = bmo_norm(&hf, BmoSide::Column, -1.0, 1.0, 3).unwrap();
        assert!((row - col).abs() < 1e-12);
        assert!(bmo_norm(&hf, BmoSide::Row, -1.0, 1.0, 0).is_err());
    }
}
