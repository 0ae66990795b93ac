//! Human-readable pass/fail table on standard output.

use hermite_nc_core::battery::CheckOutcome;
use hermite_nc_core::probe::ProbeReport;

pub struct Entry {
    pub source: String,
    pub name: String,
    pub constant: Option<f64>,
    pub spread: Option<f64>,
    pub stable: Option<bool>,
    pub passed: bool,
    pub detail: String,
}

impl Entry {
    pub fn from_report(index: usize, kind: &str, r: &ProbeReport) -> Self {
        Self {
            source: format!("{index}:{kind}"),
            name: r.name.clone(),
            constant: Some(r.fitted_constant),
            spread: Some(r.spread),
            stable: Some(r.stable),
            passed: r.passed,
            detail: r.notes.join("; "),
        }
    }

    pub fn from_check(o: &CheckOutcome) -> Self {
        Self {
            source: format!("check {}", o.id),
            name: o.name.clone(),
            constant: None,
            spread: None,
            stable: None,
            passed: o.passed,
            detail: o.summary.clone(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4e}"))
}

/// Prints one line per entry and returns whether all passed. An empty list
/// passes with a notice.
pub fn emit(entries: &[Entry]) -> bool {
    if entries.is_empty() {
        println!("no probes: nothing to check");
        return true;
    }
    println!("{:<24} {:<44} {:>11} {:>11} {:>6}  result", "source", "probe", "constant", "spread", "stable");
    for e in entries {
        let stable = match e.stable {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        println!(
            "{:<24} {:<44} {:>11} {:>11} {:>6}  {}{}",
            e.source,
            e.name,
            opt(e.constant),
            opt(e.spread),
            stable,
            if e.passed { "PASS" } else { "FAIL" },
            if e.detail.is_empty() { String::new() } else { format!("  {}", e.detail) }
        );
    }
    let failed: Vec<&Entry> = entries.iter().filter(|e| !e.passed).collect();
    if failed.is_empty() {
        println!("{} probes passed", entries.len());
        true
    } else {
        println!("{} of {} probes failed:", failed.len(), entries.len());
        for e in failed {
            println!("  {} {}", e.source, e.name);
        }
        false
    }
}
