//! Replicated runs of the three schemes and their CSV/summary output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use amis::{
    distances, empirical_cdf, ess, run, true_cdf_grid, Algorithm, AmisError, CdfGrid,
    ParticleSystem, RunConfig, RunOutput,
};
use rayon::prelude::*;

use crate::config::BenchConfig;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("ground truth: {0}")]
    Truth(AmisError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
    pub traces: bool,
}

/// Metrics of one successful (seed, algorithm) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMetrics {
    pub iterations: usize,
    pub omega: usize,
    pub ess_final: f64,
    pub cvm: f64,
    pub l2: f64,
    pub linf: f64,
    pub estimates: Vec<f64>,
    pub theta_error_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub outcome: Result<RowMetrics, String>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub csv: String,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub psi_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub wall_ms: Vec<f64>,
    pub traces: Vec<Trace>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn run_config(cfg: &BenchConfig, seed: u64, algorithm: Algorithm) -> RunConfig {
    RunConfig::new(
        cfg.target.clone(),
        cfg.family.clone(),
        cfg.theta1.clone(),
        cfg.schedule.clone(),
        seed,
    )
    .with_algorithm(algorithm)
    .with_normalization(cfg.normalization)
    .with_integrands(cfg.psi.clone())
}

fn score(cfg: &BenchConfig, truth: &CdfGrid, out: &RunOutput) -> Result<RowMetrics, AmisError> {
    let sys: &ParticleSystem = &out.system;
    let f_hat = empirical_cdf(sys, &cfg.grid, true)?;
    let d = distances(&f_hat, truth)?;
    Ok(RowMetrics {
        iterations: out.iterations(),
        omega: sys.len(),
        ess_final: ess(sys.final_log_w())?,
        cvm: d.cvm,
        l2: d.l2,
        linf: d.linf,
        estimates: cfg.psi.iter().map(|p| out.estimates[&p.name]).collect(),
        theta_error_final: cfg
            .target
            .theta_star()
            .map(|s| out.final_theta().theta_distance(s)),
    })
}

fn trace_csv(cfg: &BenchConfig, out: &RunOutput) -> String {
    let d = cfg.family.dim();
    let mut s = String::from("t,N_t,ess,theta_error");
    for a in 0..d {
        let _ = write!(s, ",mean_{}", a + 1);
    }
    for i in 0..d {
        for j in 0..d {
            let _ = write!(s, ",cov_{}{}", i + 1, j + 1);
        }
    }
    s.push('\n');
    let star = cfg.target.theta_star();
    for (t, th) in out.thetas.iter().enumerate() {
        let n = cfg.schedule.sizes().get(t).map(|n| n.to_string()).unwrap_or_default();
        let e = out.ess_per_iter.get(t).map(|v| fmt_f(*v)).unwrap_or_default();
        let err = star.map(|s| fmt_f(th.theta_distance(s))).unwrap_or_default();
        let _ = write!(s, "{},{n},{e},{err}", t + 1);
        for v in th.mean().iter() {
            let _ = write!(s, ",{}", fmt_f(*v));
        }
        for i in 0..d {
            for j in 0..d {
                let _ = write!(s, ",{}", fmt_f(th.cov()[(i, j)]));
            }
        }
        s.push('\n');
    }
    s
}

/// Runs every (seed, algorithm) pair of `cfg`. Rows come back sorted by
/// seed, then algorithm label; failed runs keep their row.
pub fn run_benchmark(cfg: &BenchConfig, opts: &RunOptions) -> Result<BenchReport, BenchError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build()?;
    pool.install(|| execute(cfg, opts.traces))
}

fn execute(cfg: &BenchConfig, traces: bool) -> Result<BenchReport, BenchError> {
    let truth = true_cdf_grid(&cfg.target, &cfg.grid).map_err(BenchError::Truth)?;
    let mut jobs: Vec<(u64, Algorithm)> = cfg
        .seeds
        .seeds()
        .into_iter()
        .flat_map(|s| cfg.algorithms.iter().map(move |a| (s, *a)))
        .collect();
    jobs.sort_by_key(|(s, a)| (*s, a.label()));
    let done: Vec<(ResultRow, f64, Option<Trace>)> = jobs
        .par_iter()
        .map(|&(seed, algorithm)| {
            let start = Instant::now();
            let res = run(&run_config(cfg, seed, algorithm));
            let trace = match (&res, traces) {
                (Ok(out), true) => Some(Trace { seed, algorithm, csv: trace_csv(cfg, out) }),
                _ => None,
            };
            let outcome = res
                .and_then(|out| score(cfg, &truth, &out))
                .map_err(|e| {
                    log::warn!("seed {seed} algorithm {}: {e}", algorithm.label());
                    error_chain(&e)
                });
            let ms = start.elapsed().as_secs_f64() * 1e3;
            (ResultRow { seed, algorithm, outcome }, ms, trace)
        })
        .collect();
    let mut report = BenchReport {
        psi_names: cfg.psi.iter().map(|p| p.name.clone()).collect(),
        rows: Vec::with_capacity(done.len()),
        wall_ms: Vec::with_capacity(done.len()),
        traces: Vec::new(),
    };
    for (row, ms, trace) in done {
        report.rows.push(row);
        report.wall_ms.push(ms);
        report.traces.extend(trace);
    }
    Ok(report)
}

fn error_chain(e: &AmisError) -> String {
    let mut s = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(inner) = src {
        let _ = write!(s, ": {inner}");
        src = inner.source();
    }
    s
}

impl BenchReport {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["seed", "algorithm", "status", "T", "omega_T", "ess_final", "cvm", "l2", "linf"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.psi_names.iter().map(|n| format!("est_{n}")));
        h.push("theta_error_final".into());
        h.push("error".into());
        h
    }

    /// `results.csv` contents.
    pub fn results_csv(&self) -> Result<Vec<u8>, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        let k = self.psi_names.len();
        for r in &self.rows {
            let mut rec = vec![r.seed.to_string(), r.algorithm.label().to_string()];
            match &r.outcome {
                Ok(m) => {
                    rec.push("ok".into());
                    rec.push(m.iterations.to_string());
                    rec.push(m.omega.to_string());
                    for v in [m.ess_final, m.cvm, m.l2, m.linf].iter().chain(&m.estimates) {
                        rec.push(fmt_f(*v));
                    }
                    rec.push(m.theta_error_final.map(fmt_f).unwrap_or_default());
                    rec.push(String::new());
                }
                Err(e) => {
                    rec.push("error".into());
                    rec.extend(std::iter::repeat_n(String::new(), 6 + k + 1));
                    rec.push(e.replace(['\n', '\r'], " "));
                }
            }
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| BenchError::Io {
            path: PathBuf::from("results.csv"),
            source: e.into_error(),
        })
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from("seed,algorithm,wall_ms\n");
        for (r, ms) in self.rows.iter().zip(&self.wall_ms) {
            let _ = writeln!(s, "{},{},{}", r.seed, r.algorithm.label(), fmt_f(*ms));
        }
        s
    }

    /// Values of `metric` over the successful rows of `algorithm`, in row
    /// order. `metric` is a results column name.
    pub fn metric(&self, algorithm: Algorithm, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .filter_map(|r| r.outcome.as_ref().ok())
            .filter_map(|m| match metric {
                "ess_final" => Some(m.ess_final),
                "cvm" => Some(m.cvm),
                "l2" => Some(m.l2),
                "linf" => Some(m.linf),
                "theta_error_final" => m.theta_error_final,
                other => other
                    .strip_prefix("est_")
                    .and_then(|n| self.psi_names.iter().position(|p| p == n))
                    .map(|i| m.estimates[i]),
            })
            .collect()
    }

    pub fn summary_metrics(&self) -> Vec<String> {
        let mut m: Vec<String> = ["cvm", "l2", "linf", "ess_final"].iter().map(|s| s.to_string()).collect();
        m.extend(self.psi_names.iter().map(|n| format!("est_{n}")));
        m.push("theta_error_final".into());
        m
    }

    /// `summary.txt`: one line per (algorithm, metric) with the count of
    /// successful runs, median, quartiles and interquartile range.
    pub fn summary(&self) -> String {
        let mut s = String::from(
            "# quartiles by linear interpolation between order statistics\n\
             algorithm metric n failed median q1 q3 iqr\n",
        );
        let mut algs: Vec<Algorithm> = self.rows.iter().map(|r| r.algorithm).collect();
        algs.sort_by_key(|a| a.label());
        algs.dedup();
        for a in algs {
            let failed = self
                .rows
                .iter()
                .filter(|r| r.algorithm == a && r.outcome.is_err())
                .count();
            for m in self.summary_metrics() {
                let v = self.metric(a, &m);
                if v.is_empty() {
                    let _ = writeln!(s, "{} {m} 0 {failed} NaN NaN NaN NaN", a.label());
                    continue;
                }
                let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
                let _ = writeln!(
                    s,
                    "{} {m} {} {failed} {} {} {} {}",
                    a.label(),
                    v.len(),
                    fmt_f(med),
                    fmt_f(q1),
                    fmt_f(q3),
                    fmt_f(q3 - q1)
                );
            }
        }
        s
    }

    /// Writes `results.csv`, `summary.txt`, `timings.csv` and any traces
    /// into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        let io = |path: PathBuf| move |source| BenchError::Io { path, source };
        std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
        let put = |name: String, bytes: &[u8]| {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(io(p))
        };
        put("results.csv".into(), &self.results_csv()?)?;
        put("summary.txt".into(), self.summary().as_bytes())?;
        put("timings.csv".into(), self.timings_csv().as_bytes())?;
        for t in &self.traces {
            put(format!("trace_{}_{}.csv", t.seed, t.algorithm.label()), t.csv.as_bytes())?;
        }
        Ok(())
    }
}

/// Linearly interpolated sample quantile of unsorted data.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}
