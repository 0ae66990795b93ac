//! Experiment runner for the `hermite-nc` command: config parsing,
//! execution on a worker pool, and CSV/JSON/SVG artifacts.

pub mod config;
pub mod output;
pub mod runner;
pub mod summary;
