//! Replicated, seeded comparisons of the naive (`a`), original (`b`) and
//! modified (`c`) adaptive importance samplers.

pub mod config;
pub mod runner;

pub use config::{parse_config, parse_config_str, BenchConfig, ConfigError, ConfigIssue, SeedSpec};
pub use runner::{quantile, run_benchmark, BenchError, BenchReport, ResultRow, RowMetrics, RunOptions};
