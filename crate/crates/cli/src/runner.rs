//! Turns experiment configs into result rows, probe reports and plot data.
//!
//! Independent parameter tuples run on the current rayon pool. Rows are
//! sorted by experiment and parameter tuple afterwards, so the output does
//! not depend on scheduling.

use std::cmp::Ordering;
use std::fmt;

use hermite_nc_core::grid::QuadratureGrid;
use hermite_nc_core::multiplier::{marcinkiewicz_report, tmu_lp_ratio, MultiplierSpec};
use hermite_nc_core::nc::nc_lp_norm;
use hermite_nc_core::oscillating::{h1_atom_test, lemma2002_report, AtomTestConfig, KernelExponent, OscillatingLattice, T0};
use hermite_nc_core::probe::{ProbeBuilder, ProbeReport};
use hermite_nc_core::random::{random_coeffs, random_hermitian_coeffs};
use hermite_nc_core::riesz::{kernel_decay_report, riesz_apply, riesz_kernel, DecayLattice, DecayMode, RieszParams};
use hermite_nc_core::semigroup::{
    ep_norm_combined, g_k_function, kernel_bound_report, mehler_kernel, spectral_mehler_sum, KernelLattice,
    MehlerParams, TimeGrid,
};
use hermite_nc_core::spectral::synthesize;
use hermite_nc_core::MatrixField;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Num(v) => write!(f, "{v}"),
            Self::Text(s) => f.write_str(s),
        }
    }
}

impl Param {
    fn cmp_key(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Num(a), Self::Num(b)) => a.total_cmp(b),
            (Self::Text(a), Self::Text(b)) => a.cmp(b),
            (Self::Num(_), Self::Text(_)) => Ordering::Less,
            (Self::Text(_), Self::Num(_)) => Ordering::Greater,
        }
    }
}

type Params = Vec<(&'static str, Param)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub index: usize,
    pub experiment: String,
    pub params: Params,
    pub metric: String,
    pub value: f64,
}

impl Row {
    pub fn parameters(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    fn order(&self, other: &Self) -> Ordering {
        self.index
            .cmp(&other.index)
            .then_with(|| {
                for (a, b) in self.params.iter().zip(&other.params) {
                    let o = a.0.cmp(b.0).then_with(|| a.1.cmp_key(&b.1));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                self.params.len().cmp(&other.params.len())
            })
            .then_with(|| self.metric.cmp(&other.metric))
            .then_with(|| self.value.total_cmp(&other.value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub index: usize,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub reports: Vec<ProbeReport>,
    #[serde(skip)]
    pub plots: Vec<Plot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub experiments: Vec<ExperimentResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// Parameters the numerics reject; reported like a config error.
    Input(String),
    Numeric(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) | Self::Numeric(m) => f.write_str(m),
        }
    }
}

/// Attaches the experiment and parameter tuple to a core error.
fn at<T>(r: hermite_nc_core::Result<T>, idx: usize, kind: ExperimentKind, params: &Params) -> Result<T, RunError> {
    r.map_err(|e| {
        let tuple = params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ");
        let msg = format!("experiments[{idx}] ({kind}) at ({tuple}): {e}");
        match e {
            hermite_nc_core::Error::Input(_) | hermite_nc_core::Error::DimensionMismatch { .. } => {
                RunError::Input(msg)
            }
            _ => RunError::Numeric(msg),
        }
    })
}

struct Ctx<'a> {
    idx: usize,
    cfg: &'a ExperimentConfig,
    seed: u64,
    rows: Vec<Row>,
    reports: Vec<ProbeReport>,
    plots: Vec<Plot>,
}

impl Ctx<'_> {
    fn row(&mut self, params: Params, metric: impl Into<String>, value: f64) {
        self.rows.push(Row {
            index: self.idx,
            experiment: self.cfg.kind.to_string(),
            params,
            metric: metric.into(),
            value,
        });
    }

    /// Rows for a report's fitted constant, spread, slice constants and
    /// extra metrics, then keeps the report.
    fn report(&mut self, params: Params, mut rep: ProbeReport) {
        let missing: Vec<String> = params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .filter(|kv| !rep.name.contains(kv.as_str()))
            .collect();
        if !missing.is_empty() {
            rep.name = format!("{} [{}]", rep.name, missing.join(", "));
        }
        let mut p = params;
        p.push(("probe", Param::Text(rep.name.clone())));
        self.row(p.clone(), "fitted_constant", rep.fitted_constant);
        self.row(p.clone(), "spread", rep.spread);
        self.row(p.clone(), "passed", if rep.passed { 1.0 } else { 0.0 });
        for s in &rep.slices {
            self.row(p.clone(), format!("C[{}]", s.slice), s.constant);
        }
        for (k, v) in &rep.metrics {
            self.row(p.clone(), k.clone(), *v);
        }
        self.reports.push(rep);
    }

    fn at<T>(&self, r: hermite_nc_core::Result<T>, params: &Params) -> Result<T, RunError> {
        at(r, self.idx, self.cfg.kind, params)
    }

    fn plot_name(&self) -> String {
        format!("plot_{}_{}", self.cfg.kind, self.idx)
    }
}

fn num(v: f64) -> Param {
    Param::Num(v)
}

/// Runs every experiment in order; each one may fan out over the pool.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    let mut rows = Vec::new();
    let mut experiments = Vec::new();
    for (idx, cfg) in config.experiments.iter().enumerate() {
        let seed = config.seed.wrapping_add(idx as u64);
        let mut ctx = Ctx {
            idx,
            cfg,
            seed,
            rows: Vec::new(),
            reports: Vec::new(),
            plots: Vec::new(),
        };
        match cfg.kind {
            ExperimentKind::RieszConvergence => riesz_convergence(&mut ctx)?,
            ExperimentKind::RieszKernelProbe => riesz_kernel_probe(&mut ctx)?,
            ExperimentKind::SemigroupGfunction => semigroup_gfunction(&mut ctx)?,
            ExperimentKind::MehlerProbe => mehler_probe(&mut ctx)?,
            ExperimentKind::Marcinkiewicz => marcinkiewicz(&mut ctx)?,
            ExperimentKind::OscillatingProbe => oscillating_probe(&mut ctx)?,
            ExperimentKind::H1Atoms => h1_atoms(&mut ctx)?,
            ExperimentKind::NormEquivalence => norm_equivalence(&mut ctx)?,
        }
        rows.append(&mut ctx.rows);
        experiments.push(ExperimentResult {
            index: idx,
            kind: cfg.kind,
            seed,
            reports: ctx.reports,
            plots: ctx.plots,
        });
    }
    rows.sort_by(|a, b| a.order(b));
    Ok(RunOutput { rows, experiments })
}

fn gh(ctx: &Ctx, nodes: usize) -> Result<QuadratureGrid, RunError> {
    ctx.at(QuadratureGrid::gauss_hermite(ctx.cfg.dim, nodes), &vec![("grid_nodes", num(nodes as f64))])
}

fn riesz_convergence(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let r = &cfg.ranges;
    let (alphas, radii, ps) = (r.alphas.clone().unwrap(), r.radii.clone().unwrap(), r.exponents.clone().unwrap());
    let grid = gh(ctx, cfg.grid_nodes_or(cfg.degree_cap + 1))?;
    let coeffs = random_hermitian_coeffs(cfg.dim, cfg.degree_cap, cfg.matrix_size, ctx.seed);
    let f = ctx.at(synthesize(&coeffs, &grid), &vec![])?;
    let tuples: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| radii.iter().map(move |&rr| (a, rr))).collect();
    let (idx, kind) = (ctx.idx, cfg.kind);
    let errs: Vec<Vec<f64>> = tuples
        .par_iter()
        .map(|&(a, rr)| {
            let params = vec![("alpha", num(a)), ("R", num(rr))];
            let s = at(RieszParams::real(rr, a, cfg.dim).and_then(|p| riesz_apply(&f, &p)), idx, kind, &params)?;
            let diff = at(s.sub(&f), idx, kind, &params)?;
            ps.iter().map(|&p| at(nc_lp_norm(&diff, p), idx, kind, &params)).collect()
        })
        .collect::<Result<_, _>>()?;
    let mut series = Vec::new();
    for &a in &alphas {
        let mut b = ProbeBuilder::new(format!("riesz-convergence alpha={a}"), format!("R in {radii:?}"), f64::INFINITY);
        let mut l2_monotone = true;
        for (pi, &p) in ps.iter().enumerate() {
            let mut pts = Vec::new();
            for (k, &(ta, rr)) in tuples.iter().enumerate() {
                if ta == a {
                    pts.push((rr, errs[k][pi]));
                }
            }
            pts.sort_by(|x, y| x.0.total_cmp(&y.0));
            let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12) + 1e-300);
            if p == 2.0 {
                l2_monotone &= monotone;
            }
            b.metric(format!("monotone_p{p}"), if monotone { 1.0 } else { 0.0 });
            let first = pts.first().map_or(1.0, |x| x.1.max(f64::MIN_POSITIVE));
            for &(rr, e) in &pts {
                ctx.row(vec![("alpha", num(a)), ("p", num(p)), ("R", num(rr))], "error", e);
                b.record(format!("p={p}"), vec![rr], e / first);
            }
            series.push(Series {
                label: format!("alpha={a}, p={p}"),
                points: pts,
            });
        }
        if ps.contains(&2.0) {
            b.note("the L2 error is monotone in R for every input; other p are reported only");
        }
        let rep = b.finish_with(move |_| l2_monotone);
        ctx.report(vec![("alpha", num(a))], rep);
    }
    ctx.plots.push(Plot {
        name: ctx.plot_name(),
        title: "Bochner-Riesz convergence".into(),
        x_label: "R".into(),
        y_label: "||S_R f - f||_p".into(),
        series,
    });
    Ok(())
}

fn riesz_kernel_probe(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let r = &cfg.ranges;
    let alphas = r.alphas.clone().unwrap();
    let radii = r.radii.clone().unwrap();
    let points = r.points.clone().unwrap();
    let (idx, kind) = (ctx.idx, cfg.kind);
    if cfg.dim == 1 {
        let lattice = DecayLattice {
            r_values: radii.clone(),
            coords: points,
            centers: vec![],
            radii: vec![],
        };
        let reps: Vec<ProbeReport> = alphas
            .par_iter()
            .map(|&a| {
                at(kernel_decay_report(a, 1, DecayMode::D1, &lattice), idx, kind, &vec![("alpha", num(a))])
            })
            .collect::<Result<_, _>>()?;
        for (&a, rep) in alphas.iter().zip(reps) {
            ctx.report(vec![("alpha", num(a))], rep);
        }
        // decay of |S_R(0, y)| away from the diagonal for the first order
        let a = alphas[0];
        let ys: Vec<f64> = (0..25).map(|k| 2f64.powf(-4.0 + k as f64 / 4.0)).collect();
        let series = radii
            .par_iter()
            .map(|&rr| {
                let params = vec![("alpha", num(a)), ("R", num(rr))];
                let p = at(RieszParams::real(rr, a, 1), idx, kind, &params)?;
                let pts = ys
                    .iter()
                    .map(|&y| Ok((y, at(riesz_kernel(&[0.0], &[y], &p), idx, kind, &params)?.norm())))
                    .collect::<Result<Vec<_>, RunError>>()?;
                Ok(Series {
                    label: format!("R={rr}"),
                    points: pts,
                })
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        ctx.plots.push(Plot {
            name: ctx.plot_name(),
            title: format!("Bochner-Riesz kernel, alpha={a}"),
            x_label: "|x - y| (x = 0)".into(),
            y_label: "|S_R(x, y)|".into(),
            series,
        });
    } else {
        let lattice = DecayLattice {
            r_values: radii,
            coords: vec![],
            centers: points.iter().map(|&c| vec![c, 0.0]).collect(),
            radii: r.exclusion_radii.clone().unwrap(),
        };
        let ps = r.exponents.clone().unwrap();
        let tuples: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| ps.iter().map(move |&p| (a, p))).collect();
        let reps: Vec<ProbeReport> = tuples
            .par_iter()
            .map(|&(a, p)| {
                let params = vec![("alpha", num(a)), ("p", num(p))];
                at(kernel_decay_report(a, cfg.dim, DecayMode::Hd { p }, &lattice), idx, kind, &params)
            })
            .collect::<Result<_, _>>()?;
        for (&(a, p), rep) in tuples.iter().zip(reps) {
            ctx.report(vec![("alpha", num(a)), ("p", num(p))], rep);
        }
    }
    Ok(())
}

fn time_grid(ctx: &Ctx) -> Result<TimeGrid, RunError> {
    match ctx.cfg.time_grid {
        None => Ok(TimeGrid::default()),
        Some(s) => ctx.at(TimeGrid::new(s.t_min, s.t_max, s.count), &vec![("t_min", num(s.t_min))]),
    }
}

/// `||g_k(f)||_2 / ||f||_2 = sqrt((2k-1)!) / 2^k`.
fn g_k_identity(k: u32) -> f64 {
    let fact: f64 = (1..2 * k).map(f64::from).product();
    fact.sqrt() / 2f64.powi(k as i32)
}

fn random_field(ctx: &Ctx, grid: &QuadratureGrid, cap: usize, seed: u64) -> Result<MatrixField, RunError> {
    let c = random_coeffs(grid.dim, cap, ctx.cfg.matrix_size, seed);
    ctx.at(synthesize(&c, grid), &vec![("seed", num(seed as f64))])
}

fn semigroup_gfunction(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let orders = cfg.ranges.orders.clone().unwrap();
    let tg = time_grid(ctx)?;
    let cap = cfg.degree_cap;
    let grid = gh(ctx, cfg.grid_nodes_or(cap + 4))?;
    let fields = (0..cfg.samples as u64)
        .map(|s| random_field(ctx, &grid, cap, ctx.seed.wrapping_add(s)))
        .collect::<Result<Vec<_>, _>>()?;
    let tuples: Vec<(u32, usize)> = orders.iter().flat_map(|&k| (0..fields.len()).map(move |s| (k, s))).collect();
    let (idx, kind) = (ctx.idx, cfg.kind);
    let ratios: Vec<f64> = tuples
        .par_iter()
        .map(|&(k, s)| {
            let params = vec![("k", num(k as f64)), ("sample", num(s as f64))];
            let f = &fields[s];
            let g = at(g_k_function(f, k, cap, &tg), idx, kind, &params)?;
            let nf = at(nc_lp_norm(f, 2.0), idx, kind, &params)?;
            Ok(at(nc_lp_norm(&g, 2.0), idx, kind, &params)? / nf)
        })
        .collect::<Result<_, RunError>>()?;
    for &k in &orders {
        let want = g_k_identity(k);
        let mut b = ProbeBuilder::new(format!("g-identity k={k}"), format!("{} random fields", fields.len()), f64::INFINITY);
        let mut worst = 0.0f64;
        for (&(tk, s), &r) in tuples.iter().zip(&ratios) {
            if tk == k {
                ctx.row(vec![("k", num(k as f64)), ("sample", num(s as f64))], "g_ratio", r);
                b.record("fields", vec![s as f64], r / want);
                worst = worst.max((r / want - 1.0).abs());
            }
        }
        b.metric("expected_ratio", want);
        b.metric("max_relative_defect", worst);
        let rep = b.finish_with(move |_| worst <= 1e-3);
        ctx.report(vec![("k", num(k as f64))], rep);
    }
    Ok(())
}

fn mehler_probe(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let times = cfg.ranges.times.clone().unwrap();
    let points = cfg.ranges.points.clone().unwrap();
    let d = cfg.dim;
    let (idx, kind) = (ctx.idx, cfg.kind);
    let embed = |c: f64| {
        let mut v = vec![0.0; d];
        v[0] = c;
        v
    };
    let errs: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let params = vec![("t", num(t))];
            let p = at(MehlerParams::new(t, d), idx, kind, &params)?;
            let mut out = Vec::new();
            for &x in &points {
                for &y in &points {
                    let (xv, yv) = (embed(x), embed(y));
                    let k = at(mehler_kernel(&xv, &yv, &p), idx, kind, &params)?;
                    let s = spectral_mehler_sum(t, &xv, &yv, 200);
                    // the spectral sum cancels down to ~1e-15 absolute
                    out.push((k - s).abs() / (s.abs() + 1e-7));
                }
            }
            Ok(out)
        })
        .collect::<Result<_, RunError>>()?;
    let mut b = ProbeBuilder::new(
        "mehler-spectral-match",
        format!("{} x {} points, t in {times:?}", points.len(), points.len()),
        f64::INFINITY,
    );
    let mut worst = 0.0f64;
    for (&t, e) in times.iter().zip(&errs) {
        let m = e.iter().copied().fold(0.0f64, f64::max);
        worst = worst.max(m);
        ctx.row(vec![("t", num(t))], "max_relative_error", m);
        for (k, &v) in e.iter().enumerate() {
            b.record(format!("t={t}"), vec![points[k / points.len()], points[k % points.len()]], v);
        }
    }
    b.note("relative error with a 1e-7 floor on the denominator");
    let rep = b.compact().finish_with(move |_| worst <= 1e-6);
    ctx.report(vec![], rep);
    let lattice = ctx.at(KernelLattice::standard(d), &vec![("dim", num(d as f64))])?;
    for rep in ctx.at(kernel_bound_report(&lattice), &vec![("dim", num(d as f64))])? {
        ctx.report(vec![], rep);
    }
    Ok(())
}

fn marcinkiewicz(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let orders = cfg.ranges.orders.clone().unwrap();
    let n_max = cfg.ranges.n_max.clone().unwrap();
    let (idx, kind) = (ctx.idx, cfg.kind);
    let mut tuples = Vec::new();
    for (mi, _) in cfg.multipliers.iter().enumerate() {
        for &r in &orders {
            for &n in &n_max {
                tuples.push((mi, r, n));
            }
        }
    }
    let label = |mi: usize| Param::Text(cfg.multipliers[mi].label());
    let reps: Vec<ProbeReport> = tuples
        .par_iter()
        .map(|&(mi, r, n)| {
            let params = vec![("mu", label(mi)), ("order", num(r as f64)), ("n_max", num(n as f64))];
            at(marcinkiewicz_report(&cfg.multipliers[mi], r as usize, n), idx, kind, &params)
        })
        .collect::<Result<_, _>>()?;
    for (&(mi, r, n), rep) in tuples.iter().zip(reps) {
        ctx.report(vec![("mu", label(mi)), ("order", num(r as f64)), ("n_max", num(n as f64))], rep);
    }
    let (Some(ps), Some(caps)) = (cfg.ranges.exponents.clone(), cfg.ranges.caps.clone()) else {
        return Ok(());
    };
    let mut fields = Vec::new();
    for &cap in &caps {
        let grid = ctx.at(QuadratureGrid::gauss_hermite(1, 2 * cap), &vec![("cap", num(cap as f64))])?;
        let fs = (0..cfg.samples as u64)
            .map(|s| random_field(ctx, &grid, cap, ctx.seed.wrapping_add(s)))
            .collect::<Result<Vec<_>, _>>()?;
        fields.push(fs);
    }
    let mut jobs = Vec::new();
    for mi in 0..cfg.multipliers.len() {
        for &p in &ps {
            for ci in 0..caps.len() {
                jobs.push((mi, p, ci));
            }
        }
    }
    let sups: Vec<f64> = jobs
        .par_iter()
        .map(|&(mi, p, ci)| {
            let params = vec![("mu", label(mi)), ("p", num(p)), ("cap", num(caps[ci] as f64))];
            let mut sup = 0.0f64;
            for f in &fields[ci] {
                let mu: &MultiplierSpec = &cfg.multipliers[mi];
                sup = sup.max(at(tmu_lp_ratio(f, mu, p, caps[ci]), idx, kind, &params)?);
            }
            Ok(sup)
        })
        .collect::<Result<_, RunError>>()?;
    for mi in 0..cfg.multipliers.len() {
        for &p in &ps {
            let mut b = ProbeBuilder::new(
                format!("tmu-lp-ratio {} p={p}", cfg.multipliers[mi].label()),
                format!("caps {caps:?}, {} fields each", cfg.samples),
                2.0,
            );
            for (&(mj, q, ci), &s) in jobs.iter().zip(&sups) {
                if mj == mi && q == p {
                    b.record(format!("cap={}", caps[ci]), vec![caps[ci] as f64], s);
                }
            }
            ctx.report(vec![("mu", label(mi)), ("p", num(p))], b.finish());
        }
    }
    Ok(())
}

fn oscillating_probe(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let times = cfg.ranges.times.clone().unwrap();
    let conventions = cfg.ranges.conventions.clone().unwrap();
    let lattice = match &cfg.ranges.points {
        None => OscillatingLattice::standard(),
        Some(pts) => {
            let mut pairs = Vec::new();
            for &x in pts {
                for &y in pts {
                    if (x - y).abs() >= 0.1 {
                        pairs.push((x, y));
                    }
                }
                pairs.push((x, x + 0.1));
            }
            OscillatingLattice { pairs }
        }
    };
    let lambda_points = cfg.grid_nodes_or(256);
    let (idx, kind) = (ctx.idx, cfg.kind);
    let tag = |c: KernelExponent| Param::Text(format!("{c:?}").to_lowercase());
    let reps: Vec<Vec<ProbeReport>> = conventions
        .par_iter()
        .map(|&c| at(lemma2002_report(&lattice, &times, c, lambda_points), idx, kind, &vec![("convention", tag(c))]))
        .collect::<Result<_, _>>()?;
    for (&c, rs) in conventions.iter().zip(reps) {
        for rep in rs {
            ctx.report(vec![("convention", tag(c))], rep);
        }
    }
    Ok(())
}

fn h1_atoms(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let deltas = cfg.ranges.deltas.clone().unwrap();
    let times = cfg.ranges.times.clone().unwrap();
    let atoms = AtomTestConfig {
        deltas: deltas.clone(),
        atoms_per_delta: cfg.samples,
        matrix_size: cfg.matrix_size,
        seed: ctx.seed,
        cells: cfg.grid_nodes_or(128),
        t0: cfg.t0.unwrap_or(T0),
        ..AtomTestConfig::default()
    };
    let (idx, kind) = (ctx.idx, cfg.kind);
    let reps: Vec<ProbeReport> = times
        .par_iter()
        .map(|&t| {
            let r = h1_atom_test(&[t], &atoms).map(|mut v| v.remove(0));
            at(r, idx, kind, &vec![("t", num(t))])
        })
        .collect::<Result<_, _>>()?;
    let mut series = Vec::new();
    for (&t, rep) in times.iter().zip(reps) {
        // slices follow the order of `deltas`
        let pts: Vec<(f64, f64)> = deltas.iter().zip(&rep.slices).map(|(&d, s)| (d, s.constant)).collect();
        for &(d, v) in &pts {
            ctx.row(vec![("t", num(t)), ("delta", num(d))], "sup_l1", v);
        }
        series.push(Series {
            label: format!("t={t:.4}"),
            points: pts,
        });
        ctx.report(vec![("t", num(t))], rep);
    }
    ctx.plots.push(Plot {
        name: ctx.plot_name(),
        title: "oscillating multiplier on H1 atoms".into(),
        x_label: "cube side delta".into(),
        y_label: "sup ||T a||_1".into(),
        series,
    });
    Ok(())
}

fn norm_equivalence(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let ps = cfg.ranges.exponents.clone().unwrap();
    let caps = cfg.ranges.caps.clone().unwrap();
    let tg = time_grid(ctx)?;
    let (idx, kind) = (ctx.idx, cfg.kind);
    let mut fields = Vec::new();
    for &cap in &caps {
        let grid = ctx.at(QuadratureGrid::gauss_hermite(1, cap + 8), &vec![("cap", num(cap as f64))])?;
        let fs = (0..cfg.samples as u64)
            .map(|s| random_field(ctx, &grid, cap, ctx.seed.wrapping_add(s)))
            .collect::<Result<Vec<_>, _>>()?;
        fields.push(fs);
    }
    let jobs: Vec<(f64, usize)> = ps.iter().flat_map(|&p| (0..caps.len()).map(move |c| (p, c))).collect();
    let intervals: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(p, ci)| {
            let params = vec![("p", num(p)), ("cap", num(caps[ci] as f64))];
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for f in &fields[ci] {
                let e = at(ep_norm_combined(f, p, caps[ci], &tg), idx, kind, &params)?;
                let r = e / at(nc_lp_norm(f, p), idx, kind, &params)?;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            Ok((lo, hi))
        })
        .collect::<Result<_, RunError>>()?;
    let mut series_lo = Vec::new();
    let mut series_hi = Vec::new();
    for &p in &ps {
        let mut b = ProbeBuilder::new(
            format!("norm-equivalence p={p}"),
            format!("caps {caps:?}, {} fields each", cfg.samples),
            2.0,
        );
        let mut lows = Vec::new();
        let mut lo_pts = Vec::new();
        let mut hi_pts = Vec::new();
        for (&(q, ci), &(lo, hi)) in jobs.iter().zip(&intervals) {
            if q == p {
                let params = vec![("p", num(p)), ("cap", num(caps[ci] as f64))];
                ctx.row(params.clone(), "ratio_min", lo);
                ctx.row(params, "ratio_max", hi);
                b.record(format!("cap={}", caps[ci]), vec![caps[ci] as f64], hi);
                lows.push(lo);
                lo_pts.push((caps[ci] as f64, lo));
                hi_pts.push((caps[ci] as f64, hi));
            }
        }
        let lo_spread = hermite_nc_core::probe::spread(lows.iter().copied());
        b.metric("lower_endpoint_spread", lo_spread);
        let ok = lo_spread < 2.0 && lows.iter().all(|&l| l > 0.0);
        ctx.report(vec![("p", num(p))], b.finish_with(move |_| ok));
        series_lo.push(Series {
            label: format!("min, p={p}"),
            points: lo_pts,
        });
        series_hi.push(Series {
            label: format!("max, p={p}"),
            points: hi_pts,
        });
    }
    series_lo.append(&mut series_hi);
    ctx.plots.push(Plot {
        name: ctx.plot_name(),
        title: "E_p / L_p ratio interval".into(),
        x_label: "degree cap".into(),
        y_label: "||f||_{E_p} / ||f||_p".into(),
        series: series_lo,
    });
    Ok(())
}
