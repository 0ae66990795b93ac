//! Run configuration: a TOML file with a seed, an output directory and a
//! list of experiments. Every table rejects unknown keys.

use std::fmt;
use std::path::PathBuf;

use hermite_nc_core::multiplier::MultiplierSpec;
use hermite_nc_core::oscillating::KernelExponent;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RieszConvergence,
    RieszKernelProbe,
    SemigroupGfunction,
    MehlerProbe,
    Marcinkiewicz,
    OscillatingProbe,
    H1Atoms,
    NormEquivalence,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::RieszConvergence => "riesz-convergence",
            Self::RieszKernelProbe => "riesz-kernel-probe",
            Self::SemigroupGfunction => "semigroup-gfunction",
            Self::MehlerProbe => "mehler-probe",
            Self::Marcinkiewicz => "marcinkiewicz",
            Self::OscillatingProbe => "oscillating-probe",
            Self::H1Atoms => "h1-atoms",
            Self::NormEquivalence => "norm-equivalence",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameter ranges. Which ones an experiment needs depends on its kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ranges {
    /// Bochner-Riesz orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Bochner-Riesz radii `R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Exclusion radii for kernel tail norms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion_radii: Option<Vec<f64>>,
    /// Lebesgue exponents `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Lattice coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    /// Cube sides for atoms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// Square-function or difference orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    /// Degree caps for refinement sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<Vec<usize>>,
    /// Kernel-exponent conventions for the oscillating probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conventions: Option<Vec<KernelExponent>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn default_cap() -> usize {
    32
}
fn default_samples() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "two")]
    pub matrix_size: usize,
    #[serde(default = "default_cap")]
    pub degree_cap: usize,
    /// Quadrature nodes per axis (or lambda nodes for the oscillating probe,
    /// sampling cells per cube side for atoms).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_nodes: Option<usize>,
    /// Random fields or atoms per parameter tuple.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGridSpec>,
    /// Lower end of the admissible times for `h1-atoms` (default 0.3).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default)]
    pub ranges: Ranges,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub multipliers: Vec<MultiplierSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (i, e) in self.experiments.iter().enumerate() {
            e.validate().map_err(|msg| ConfigError(format!("experiments[{i}] ({}): {msg}", e.kind)))?;
        }
        Ok(())
    }
}

const RANGE_NAMES: [&str; 11] = [
    "alphas",
    "radii",
    "exclusion_radii",
    "exponents",
    "times",
    "points",
    "deltas",
    "orders",
    "caps",
    "n_max",
    "conventions",
];

impl Ranges {
    /// Length of each range by name; `None` when absent.
    fn lengths(&self) -> [Option<usize>; 11] {
        [
            self.alphas.as_ref().map(Vec::len),
            self.radii.as_ref().map(Vec::len),
            self.exclusion_radii.as_ref().map(Vec::len),
            self.exponents.as_ref().map(Vec::len),
            self.times.as_ref().map(Vec::len),
            self.points.as_ref().map(Vec::len),
            self.deltas.as_ref().map(Vec::len),
            self.orders.as_ref().map(Vec::len),
            self.caps.as_ref().map(Vec::len),
            self.n_max.as_ref().map(Vec::len),
            self.conventions.as_ref().map(Vec::len),
        ]
    }

    fn floats(&self) -> [(&'static str, Option<&Vec<f64>>); 7] {
        [
            ("alphas", self.alphas.as_ref()),
            ("radii", self.radii.as_ref()),
            ("exclusion_radii", self.exclusion_radii.as_ref()),
            ("exponents", self.exponents.as_ref()),
            ("times", self.times.as_ref()),
            ("points", self.points.as_ref()),
            ("deltas", self.deltas.as_ref()),
        ]
    }
}

impl ExperimentConfig {
    /// `(required, optional)` range names for this kind.
    fn range_usage(&self) -> (Vec<&'static str>, Vec<&'static str>) {
        use ExperimentKind::*;
        match self.kind {
            RieszConvergence => (vec!["alphas", "radii", "exponents"], vec![]),
            RieszKernelProbe if self.dim == 1 => (vec!["alphas", "radii", "points"], vec![]),
            RieszKernelProbe => (vec!["alphas", "radii", "exclusion_radii", "exponents", "points"], vec![]),
            SemigroupGfunction => (vec!["orders"], vec![]),
            MehlerProbe => (vec!["times", "points"], vec![]),
            Marcinkiewicz => (vec!["orders", "n_max"], vec!["exponents", "caps"]),
            OscillatingProbe => (vec!["times", "conventions"], vec!["points"]),
            H1Atoms => (vec!["deltas", "times"], vec![]),
            NormEquivalence => (vec!["exponents", "caps"], vec![]),
        }
    }

    pub fn grid_nodes_or(&self, default: usize) -> usize {
        self.grid_nodes.unwrap_or(default)
    }

    pub fn validate(&self) -> Result<(), String> {
        use ExperimentKind::*;
        let (required, optional) = self.range_usage();
        let lengths = self.ranges.lengths();
        for (name, len) in RANGE_NAMES.iter().zip(lengths) {
            let needed = required.contains(name);
            match len {
                None if needed => return Err(format!("ranges.{name} is required")),
                Some(0) => return Err(format!("ranges.{name} must be nonempty")),
                Some(_) if !needed && !optional.contains(name) => {
                    return Err(format!("ranges.{name} is not used by this experiment"))
                }
                _ => {}
            }
        }
        for (name, v) in self.ranges.floats() {
            if let Some(v) = v {
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(format!("ranges.{name} contains a non-finite value {x}"));
                }
            }
        }
        let both = [self.ranges.exponents.is_some(), self.ranges.caps.is_some()];
        if self.kind == Marcinkiewicz && both[0] != both[1] {
            return Err("ranges.exponents and ranges.caps must be given together".into());
        }
        if self.multipliers.is_empty() == (self.kind == Marcinkiewicz) {
            return Err(if self.kind == Marcinkiewicz {
                "multipliers must be nonempty".into()
            } else {
                "multipliers are only used by marcinkiewicz".into()
            });
        }
        let max_dim = match self.kind {
            RieszConvergence | RieszKernelProbe => 2,
            SemigroupGfunction | MehlerProbe => 3,
            _ => 1,
        };
        if self.dim == 0 || self.dim > max_dim {
            return Err(format!("dim must be between 1 and {max_dim}, got {}", self.dim));
        }
        if self.matrix_size == 0 {
            return Err("matrix_size must be at least 1".into());
        }
        if self.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        if self.degree_cap == 0 {
            return Err("degree_cap must be at least 1".into());
        }
        if let Some(m) = self.grid_nodes {
            let uses_cap = matches!(self.kind, RieszConvergence | SemigroupGfunction);
            if uses_cap && m < self.degree_cap + 1 {
                return Err(format!("grid_nodes = {m} cannot resolve degree_cap = {}", self.degree_cap));
            }
            if m == 0 {
                return Err("grid_nodes must be at least 1".into());
            }
        }
        if self.time_grid.is_some() && !matches!(self.kind, SemigroupGfunction | NormEquivalence) {
            return Err("time_grid is only used by semigroup-gfunction and norm-equivalence".into());
        }
        if let Some(t0) = self.t0 {
            if self.kind != H1Atoms {
                return Err("t0 is only used by h1-atoms".into());
            }
            if !(t0 > 0.0 && t0 <= std::f64::consts::FRAC_PI_4) {
                return Err(format!("t0 must lie in (0, pi/4], got {t0}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7

[[experiments]]
kind = "riesz-convergence"
degree_cap = 16
ranges = { alphas = [1.0], radii = [4.0, 16.0], exponents = [2.0] }

[[experiments]]
kind = "marcinkiewicz"
ranges = { orders = [2], n_max = [256] }

[[experiments.multipliers]]
kind = "unimodular-power"
gamma = 1.0

[[experiments.multipliers]]
kind = "parity"

[[experiments.multipliers]]
kind = "table"
entries = [[1, 0.5, 0.0], [2, 0.25, -1.0]]
"#;

    #[test]
    fn round_trip() {
        let a = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(a.experiments.len(), 2);
        assert_eq!(a.experiments[0].dim, 1);
        let b = RunConfig::parse(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replace("degree_cap = 16", "degre_cap = 16");
        let err = RunConfig::parse(&bad).unwrap_err();
        assert!(err.0.contains("degre_cap"), "{err}");
        let bad = SAMPLE.replace("alphas = [1.0]", "alpha = [1.0]");
        assert!(RunConfig::parse(&bad).is_err());
        let bad = SAMPLE.replace("kind = \"parity\"", "kind = \"parity\"\nsign = 1");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let bad = SAMPLE.replace("radii = [4.0, 16.0]", "radii = []");
        let err = RunConfig::parse(&bad).unwrap_err();
        assert!(err.0.contains("experiments[0]") && err.0.contains("radii"), "{err}");
        let bad = SAMPLE.replace("exponents = [2.0]", "exponents = [2.0], deltas = [1.0]");
        assert!(RunConfig::parse(&bad).unwrap_err().0.contains("not used"));
        let empty = RunConfig::parse("seed = 3").unwrap();
        assert!(empty.experiments.is_empty());
    }
}
