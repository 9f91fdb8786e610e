//! Experiment runner: reads a flat config, runs one experiment and writes
//! `<experiment>.csv` and `<experiment>.json`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod convergence;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{RunError, RunResult};
pub use report::{ExperimentReport, Table};

/// Output directory and thread count of one invocation.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// overrides the config's `output`
    pub out_dir: Option<PathBuf>,
    /// `None` uses `HYPERADAMS_THREADS`, then rayon's default
    pub threads: Option<usize>,
}

impl RunOptions {
    fn dir<'a>(&'a self, cfg: &'a ExperimentConfig) -> &'a Path {
        self.out_dir.as_deref().unwrap_or(&cfg.output)
    }

    fn thread_count(&self) -> RunResult<Option<usize>> {
        if let Some(t) = self.threads {
            return Ok(Some(t));
        }
        match std::env::var("HYPERADAMS_THREADS") {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(Some)
                .map_err(|_| RunError::Validation(format!("HYPERADAMS_THREADS = `{v}` is not a thread count"))),
            Err(_) => Ok(None),
        }
    }

    fn pool(&self) -> RunResult<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.thread_count()? {
            if t == 0 {
                return Err(RunError::Validation("thread count must be at least 1".into()));
            }
            b = b.num_threads(t);
        }
        b.build().map_err(|e| RunError::Validation(format!("cannot start worker pool: {e}")))
    }
}

/// Paths of the artifacts and the report they hold.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub report: ExperimentReport,
}

pub fn load_config(path: &Path) -> RunResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs the experiment and writes its artifacts. A solve that misses its tolerance
/// still writes both files, then returns [`RunError::NonConvergence`].
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> RunResult<RunOutcome> {
    let pool = opts.pool()?;
    let start = Instant::now();
    let out = pool.install(|| experiments::run_experiment(cfg))?;
    let report = ExperimentReport {
        experiment: cfg.experiment.name().into(),
        generated: timestamp(),
        config: cfg.canonical(),
        columns: out.table.columns.clone(),
        rows: out.table.rows.clone(),
        summary: out.summary,
        diagnostics: out.diagnostics,
        convergence: None,
        environment: report::Environment::current(pool.current_num_threads()),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let (csv, json) = report::write_report(opts.dir(cfg), cfg.experiment.name(), &report)?;
    if let Some(msg) = out.non_convergence {
        return Err(RunError::NonConvergence(msg));
    }
    Ok(RunOutcome { csv, json, report })
}

/// Runs the refinement study and writes `<experiment>-convergence.{csv,json}`.
/// An observed order below the documented order minus 0.5, or an unconverged
/// level, returns [`RunError::NonConvergence`] after writing.
pub fn converge(cfg: &ExperimentConfig, opts: &RunOptions) -> RunResult<RunOutcome> {
    if !cfg.experiment.supports_refinement() {
        return Err(RunError::Validation(format!(
            "{} has no refinement study; use conformal-identity, inequalities or solve-pde",
            cfg.experiment.name()
        )));
    }
    let pool = opts.pool()?;
    let start = Instant::now();
    let study = pool.install(|| experiments::convergence_study(cfg))?;
    let table = study.table();
    let mut summary = std::collections::BTreeMap::new();
    summary.insert("observed_order".into(), json!(study.observed_order));
    summary.insert("passed".into(), json!(study.passed));
    let report = ExperimentReport {
        experiment: cfg.experiment.name().into(),
        generated: timestamp(),
        config: cfg.canonical(),
        columns: table.columns,
        rows: table.rows,
        summary,
        diagnostics: study.flagged.clone(),
        convergence: Some(study.clone()),
        environment: report::Environment::current(pool.current_num_threads()),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let stem = format!("{}-convergence", cfg.experiment.name());
    let (csv, json) = report::write_report(opts.dir(cfg), &stem, &report)?;
    if !study.passed {
        let order = study.observed_order.map_or("n/a".to_string(), |q| format!("{q:.3}"));
        return Err(RunError::NonConvergence(format!(
            "observed order {order} below {} or a level did not converge",
            study.threshold
        )));
    }
    Ok(RunOutcome { csv, json, report })
}
