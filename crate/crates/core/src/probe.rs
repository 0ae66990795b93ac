//! Fitted-constant probes.
//!
//! A probe samples `|quantity| / envelope` over a parameter lattice. The
//! fitted constant is the largest ratio; the lattice is cut into slices
//! (one value of R, one time regime, ...) and the probe is stable when the
//! per-slice constants stay within a fixed factor of each other.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub slice: String,
    pub coords: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceConstant {
    pub slice: String,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub name: String,
    pub lattice: String,
    pub samples: Vec<ProbeSample>,
    pub fitted_constant: f64,
    pub worst: Vec<f64>,
    pub slices: Vec<SliceConstant>,
    /// max / min of the slice constants.
    pub spread: f64,
    pub threshold: f64,
    pub stable: bool,
    pub passed: bool,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub metrics: Vec<(String, f64)>,
}

impl ProbeReport {
    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Accumulates samples in insertion order; slices keep first-seen order.
#[derive(Debug, Clone)]
pub struct ProbeBuilder {
    name: String,
    lattice: String,
    threshold: f64,
    samples: Vec<ProbeSample>,
    notes: Vec<String>,
    metrics: Vec<(String, f64)>,
    keep_samples: bool,
}

impl ProbeBuilder {
    pub fn new(name: impl Into<String>, lattice: impl Into<String>, threshold: f64) -> Self {
        Self {
            name: name.into(),
            lattice: lattice.into(),
            threshold,
            samples: Vec::new(),
            notes: Vec::new(),
            metrics: Vec::new(),
            keep_samples: true,
        }
    }

    /// Keep only per-slice maxima in the final report.
    pub fn compact(mut self) -> Self {
        self.keep_samples = false;
        self
    }

    pub fn record(&mut self, slice: impl Into<String>, coords: Vec<f64>, ratio: f64) {
        self.samples.push(ProbeSample {
            slice: slice.into(),
            coords,
            ratio,
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.push((key.into(), value));
    }

    pub fn finish(self) -> ProbeReport {
        self.finish_with(|_| true)
    }

    /// Finishes with an extra acceptance condition on top of finiteness and
    /// stability.
    pub fn finish_with(self, extra: impl Fn(&ProbeReport) -> bool) -> ProbeReport {
        let mut worst_idx: Option<usize> = None;
        for (k, s) in self.samples.iter().enumerate() {
            let better = match worst_idx {
                None => true,
                Some(w) => {
                    let cur = &self.samples[w];
                    s.ratio > cur.ratio
                        || (s.ratio == cur.ratio && lex_less(&s.coords, &cur.coords))
                        || (s.ratio.is_nan() && !cur.ratio.is_nan())
                }
            };
            if better {
                worst_idx = Some(k);
            }
        }
        let fitted = worst_idx.map_or(0.0, |k| self.samples[k].ratio);
        let worst = worst_idx.map_or_else(Vec::new, |k| self.samples[k].coords.clone());

        let mut slices: Vec<SliceConstant> = Vec::new();
        for s in &self.samples {
            match slices.iter_mut().find(|c| c.slice == s.slice) {
                Some(c) => c.constant = c.constant.max(s.ratio),
                None => slices.push(SliceConstant {
                    slice: s.slice.clone(),
                    constant: s.ratio,
                }),
            }
        }
        let spread = spread(slices.iter().map(|c| c.constant));
        let finite = fitted.is_finite() && slices.iter().all(|c| c.constant.is_finite());
        let stable = finite && spread < self.threshold;
        let samples = if self.keep_samples {
            self.samples
        } else {
            Vec::new()
        };
        let mut report = ProbeReport {
            name: self.name,
            lattice: self.lattice,
            samples,
            fitted_constant: fitted,
            worst,
            slices,
            spread,
            threshold: self.threshold,
            stable,
            passed: false,
            notes: self.notes,
            metrics: self.metrics,
        };
        report.passed = stable && extra(&report);
        report
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    a.len() < b.len()
}

/// `max / min` of nonnegative values; `1` when all vanish, infinity when some
/// but not all vanish.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut any = false;
    for v in values {
        any = true;
        if v.is_nan() {
            return f64::NAN;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !any || hi == 0.0 {
        return 1.0;
    }
    if lo == 0.0 {
        return f64::INFINITY;
    }
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_and_tie_break() {
        let mut b = ProbeBuilder::new("t", "demo", 4.0);
        b.record("a", vec![1.0, 0.0], 2.0);
        b.record("a", vec![0.5, 0.0], 2.0);
        b.record("b", vec![0.0, 0.0], 1.0);
        let r = b.finish();
        assert_eq!(r.fitted_constant, 2.0);
        assert_eq!(r.worst, vec![0.5, 0.0]);
        assert_eq!(r.spread, 2.0);
        assert!(r.stable && r.passed);
        let json = serde_json::to_string(&r).unwrap();
        let back: ProbeReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unstable_and_infinite() {
        let mut b = ProbeBuilder::new("t", "demo", 2.0);
        b.record("a", vec![], 1.0);
        b.record("b", vec![], 3.0);
        assert!(!b.finish().stable);
        let mut b = ProbeBuilder::new("t", "demo", 2.0);
        b.record("a", vec![], f64::INFINITY);
        assert!(!b.finish().passed);
        assert_eq!(spread([0.0, 0.0]), 1.0);
        assert_eq!(spread([0.0, 1.0]), f64::INFINITY);
        assert!(ProbeBuilder::new("e", "", 2.0).finish().passed);
    }
}
