//! `hermite-nc`: configuration-driven experiments and the built-in
//! verification battery.
//!
//! Exit codes: 0 when every probe passes, 1 when a probe fails or the
//! numerics break down, 2 for usage and configuration errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hermite_nc_core::battery::{run_check, CHECKS, DEFAULT_SEED};

use hermite_nc::config::RunConfig;
use hermite_nc::runner::{self, RunError};
use hermite_nc::{output, summary};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "hermite-nc", version, about = "Operator-valued Hermite analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments listed in a TOML config.
    Run {
        config: PathBuf,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the config. TOML integers are signed, so the
        /// range stops at `i64::MAX`.
        #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
        seed: Option<u64>,
    },
    /// Run the built-in verification battery.
    Verify {
        /// Run only these checks (1-based, repeatable).
        #[arg(long = "check")]
        checks: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write `verify.json` to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            jobs,
            out,
            seed,
        } => run(config, jobs, out, seed),
        Command::Verify { checks, seed, out } => verify(checks, seed, out),
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn failure(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_FAIL)
}

fn run(path: PathBuf, jobs: Option<usize>, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return usage(format!("invalid config {}: {e}", path.display())),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("hermite-nc-out"));
    if jobs == Some(0) {
        return usage("--jobs must be at least 1");
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return failure(format!("cannot start worker pool: {e}")),
    };
    let result = match pool.install(|| runner::run(&cfg)) {
        Ok(r) => r,
        Err(RunError::Input(m)) => return usage(m),
        Err(RunError::Numeric(m)) => return failure(m),
    };
    if let Err(e) = fs::create_dir_all(&dir) {
        return failure(format!("cannot create {}: {e}", dir.display()));
    }
    let resolved = cfg.to_toml().map_err(anyhow::Error::from);
    let written = resolved
        .and_then(|t| fs::write(dir.join("config.toml"), t).map_err(anyhow::Error::from))
        .and_then(|_| output::write_csv(&dir.join("results.csv"), &result.rows))
        .and_then(|_| output::write_report(&dir.join("report.json"), cfg.seed, &result.experiments))
        .and_then(|_| output::write_plots(&dir, &result.experiments));
    let plots = match written {
        Ok(p) => p,
        Err(e) => return failure(format!("{e:#}")),
    };
    let entries: Vec<summary::Entry> = result
        .experiments
        .iter()
        .flat_map(|e| e.reports.iter().map(move |r| summary::Entry::from_report(e.index, e.kind.as_str(), r)))
        .collect();
    let ok = summary::emit(&entries);
    println!(
        "wrote {} rows to {}{}",
        result.rows.len(),
        dir.join("results.csv").display(),
        if plots.is_empty() { String::new() } else { format!(", plots: {}", plots.join(", ")) }
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn verify(checks: Vec<usize>, seed: Option<u64>, out: Option<PathBuf>) -> ExitCode {
    let ids: Vec<usize> = if checks.is_empty() { (1..=CHECKS.len()).collect() } else { checks };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CHECKS.len()) {
        return usage(format!("check ids run from 1 to {}, got {bad}", CHECKS.len()));
    }
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let mut outcomes = Vec::new();
    for id in ids {
        match run_check(id, seed) {
            Ok(o) => outcomes.push(o),
            Err(e) => return failure(format!("check {id} ({}): {e}", CHECKS[id - 1])),
        }
    }
    let entries: Vec<summary::Entry> = outcomes.iter().map(summary::Entry::from_check).collect();
    let ok = summary::emit(&entries);
    if let Some(dir) = out {
        let written = fs::create_dir_all(&dir).map_err(anyhow::Error::from).and_then(|_| {
            let text = serde_json::to_string_pretty(&outcomes)?;
            fs::write(dir.join("verify.json"), text + "\n")?;
            Ok(())
        });
        if let Err(e) = written {
            return failure(format!("{e:#}"));
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
