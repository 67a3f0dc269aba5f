//! Monte Carlo orchestration: every (sweep value, subject, snapshot) job
//! runs on a bounded worker pool and comes back in job order.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use hcran_core::baselines::scenario::{run_scenario, ScenarioKind};
use hcran_core::baselines::Algorithm;
use hcran_core::optimizer::EeSolution;
use hcran_core::system::{Deployment, SystemConfig};
use hcran_core::Error as CoreError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, Mode};
use crate::stats::Estimate;

/// What one job evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subject {
    Algorithm(Algorithm),
    Scenario(ScenarioKind),
}

impl Subject {
    pub fn name(self) -> &'static str {
        match self {
            Subject::Algorithm(a) => a.name(),
            Subject::Scenario(s) => s.name(),
        }
    }
}

/// Outcome of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub subject: &'static str,
    pub sweep: &'static str,
    pub value: f64,
    pub snapshot: u64,
    /// bit/J; zero when infeasible or failed.
    pub ee: f64,
    /// Empty for scenarios, whose solvers do not report it.
    pub converged: Option<bool>,
    pub outer_iterations: Option<usize>,
    /// Relative duality certificate of the final inner problem,
    /// `(D - F) / C`. Only the optimizer produces one.
    pub gap: Option<f64>,
    pub infeasible: bool,
    pub error: Option<String>,
    /// EE of each outer iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl ResultRow {
    pub fn is_valid(&self) -> bool {
        !self.infeasible && self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 0 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot build the deployment at {sweep} = {value}: {source}")]
    Deployment {
        sweep: &'static str,
        value: f64,
        source: CoreError,
    },
    #[error("cannot start the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub fn subjects(cfg: &ExperimentConfig) -> Vec<Subject> {
    match cfg.experiment.mode {
        Mode::Algorithms => cfg.experiment.algorithms.iter().map(|&a| Subject::Algorithm(a)).collect(),
        Mode::Scenarios => cfg.experiment.scenarios.iter().map(|&s| Subject::Scenario(s)).collect(),
    }
}

struct Point {
    value: f64,
    sys: SystemConfig,
    deployment: Deployment,
}

/// Runs every job of `cfg`. Rows are ordered by sweep value, then subject
/// in configured order, then snapshot id, whatever the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>, RunError> {
    cfg.validate()?;
    let ex = &cfg.experiment;
    let points = ex
        .values
        .iter()
        .map(|&value| {
            let sys = ex.sweep.apply(&cfg.system, value)?;
            let deployment = sys.deployment().map_err(|source| RunError::Deployment {
                sweep: ex.sweep.name(),
                value,
                source,
            })?;
            Ok(Point { value, sys, deployment })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let subjects = subjects(cfg);
    let jobs: Vec<(&Point, Subject, u64)> = points
        .iter()
        .flat_map(|p| subjects.iter().flat_map(move |&s| (0..ex.snapshots).map(move |snap| (p, s, snap))))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build()?;
    let rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(point, subject, snapshot)| {
                let blank = ResultRow {
                    subject: subject.name(),
                    sweep: ex.sweep.name(),
                    value: point.value,
                    snapshot,
                    ee: 0.0,
                    converged: None,
                    outer_iterations: None,
                    gap: None,
                    infeasible: false,
                    error: None,
                    trace: Vec::new(),
                };
                match catch_unwind(AssertUnwindSafe(|| run_job(cfg, point, subject, snapshot, blank.clone()))) {
                    Ok(row) => row,
                    Err(payload) => ResultRow {
                        error: Some(format!("panic: {}", panic_message(&*payload))),
                        ..blank
                    },
                }
            })
            .collect()
    });
    Ok(rows)
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string payload".to_owned()
    }
}

fn run_job(cfg: &ExperimentConfig, point: &Point, subject: Subject, snapshot: u64, mut row: ResultRow) -> ResultRow {
    let seed = cfg.experiment.seed;
    match subject {
        Subject::Algorithm(alg) => {
            let params = &point.deployment.params;
            let result = point
                .deployment
                .snapshot(seed, snapshot)
                .and_then(|ch| alg.solve(&ch, params, &cfg.outer, &cfg.inner));
            match result {
                Ok(sol) => {
                    row.ee = sol.ee();
                    row.converged = Some(sol.converged);
                    row.outer_iterations = Some(sol.outer_iterations());
                    if alg == Algorithm::Optimal {
                        row.gap = Some(inner_gap(&sol));
                    }
                    row.trace = sol.trace.steps.iter().map(|s| s.ee()).collect();
                }
                Err(CoreError::Infeasible(_)) => row.infeasible = true,
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        Subject::Scenario(kind) => {
            match run_scenario(kind, &point.sys, &cfg.pico, seed, snapshot, &cfg.outer, &cfg.inner) {
                Ok(out) if out.feasible => row.ee = out.ee(),
                Ok(_) | Err(CoreError::Infeasible(_)) => row.infeasible = true,
                Err(e) => row.error = Some(e.to_string()),
            }
        }
    }
    row
}

fn inner_gap(sol: &EeSolution) -> f64 {
    let f = sol.rate - sol.gamma * sol.consumed;
    ((sol.dual_bound - f) / sol.rate).max(0.0)
}

/// Aggregate of one (subject, sweep value) cell over its feasible rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub series: String,
    pub subject: &'static str,
    pub sweep: &'static str,
    pub value: f64,
    pub snapshots: usize,
    pub feasible: usize,
    pub failed: usize,
    /// Empty when no snapshot is feasible.
    pub mean_ee: Option<f64>,
    pub ci95: Option<f64>,
}

impl SummaryRow {
    pub fn estimate(&self) -> Option<Estimate> {
        self.mean_ee.map(|mean| Estimate {
            n: self.feasible,
            mean,
            ci95: self.ci95,
        })
    }
}

/// Groups consecutive rows sharing subject and sweep value, as produced
/// by [`run_experiment`].
pub fn group_rows(rows: &[ResultRow]) -> Vec<&[ResultRow]> {
    rows.chunk_by(|a, b| a.subject == b.subject && a.value == b.value).collect()
}

pub fn summarize(series: &str, rows: &[ResultRow]) -> Vec<SummaryRow> {
    group_rows(rows)
        .into_iter()
        .map(|group| {
            let ees: Vec<f64> = group.iter().filter(|r| r.is_valid()).map(|r| r.ee).collect();
            let est = Estimate::of(&ees);
            SummaryRow {
                series: series.to_owned(),
                subject: group[0].subject,
                sweep: group[0].sweep,
                value: group[0].value,
                snapshots: group.len(),
                feasible: ees.len(),
                failed: group.iter().filter(|r| r.error.is_some()).count(),
                mean_ee: est.map(|e| e.mean),
                ci95: est.and_then(|e| e.ci95),
            }
        })
        .collect()
}

/// Mean EE per outer iteration over the feasible snapshots of one cell.
/// Traces that stopped early hold their final value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub algorithm: &'static str,
    pub eta_hue_db: f64,
    pub iteration: usize,
    pub ee: f64,
}

pub fn mean_traces(rows: &[ResultRow]) -> Vec<TraceRow> {
    let mut out = Vec::new();
    for group in group_rows(rows) {
        let traces: Vec<&[f64]> = group
            .iter()
            .filter(|r| r.is_valid() && !r.trace.is_empty())
            .map(|r| r.trace.as_slice())
            .collect();
        let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
        for i in 0..len {
            let sum: f64 = traces.iter().map(|t| t[i.min(t.len() - 1)]).sum();
            out.push(TraceRow {
                algorithm: group[0].subject,
                eta_hue_db: group[0].value,
                iteration: i + 1,
                ee: sum / traces.len() as f64,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Writes `records` as CSV with a header, or as JSON lines.
pub fn write_records<T: Serialize, W: Write>(records: &[T], format: Format, out: W) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r).map_err(std::io::Error::other)?;
            }
            w.flush()
        }
        Format::Json => {
            let mut out = std::io::BufWriter::new(out);
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepVariable;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.snapshots = 3;
        cfg.experiment.values = vec![0.0, 5.0];
        cfg.experiment.algorithms = vec![Algorithm::FixedPower, Algorithm::Optimal];
        cfg
    }

    #[test]
    fn rows_come_in_job_order() {
        let rows = run_experiment(&small(), RunOptions { workers: 2 }).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.value, r.subject, r.snapshot)).collect();
        let mut expected = Vec::new();
        for v in [0.0, 5.0] {
            for s in ["fixed-power", "optimal"] {
                for snap in 0..3 {
                    expected.push((v, s, snap));
                }
            }
        }
        assert_eq!(keys, expected);
    }

    #[test]
    fn worker_count_does_not_change_rows() {
        let a = run_experiment(&small(), RunOptions { workers: 1 }).unwrap();
        let b = run_experiment(&small(), RunOptions { workers: 3 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn optimal_rows_carry_diagnostics() {
        let rows = run_experiment(&small(), RunOptions::default()).unwrap();
        for r in rows.iter().filter(|r| r.subject == "optimal" && r.is_valid()) {
            assert!(r.ee > 0.0);
            assert_eq!(r.converged, Some(true));
            assert_eq!(r.outer_iterations, Some(r.trace.len()));
            assert!(r.gap.unwrap() >= 0.0);
        }
    }

    #[test]
    fn infeasible_snapshots_are_flagged_not_dropped() {
        let mut cfg = small();
        cfg.system.eta_r_bps = 1e9;
        let rows = run_experiment(&cfg, RunOptions::default()).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.infeasible && r.ee == 0.0 && r.error.is_none()));
        let summary = summarize("s", &rows);
        assert!(summary.iter().all(|s| s.feasible == 0 && s.mean_ee.is_none()));
    }

    #[test]
    fn scenarios_run() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.mode = Mode::Scenarios;
        cfg.experiment.sweep = SweepVariable::LowQosUes;
        cfg.experiment.values = vec![2.0];
        cfg.experiment.snapshots = 2;
        let rows = run_experiment(&cfg, RunOptions::default()).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.error.is_none() && r.converged.is_none()));
    }

    #[test]
    fn summary_counts_and_traces() {
        let rows = run_experiment(&small(), RunOptions::default()).unwrap();
        let summary = summarize("base", &rows);
        assert_eq!(summary.len(), 4);
        for s in &summary {
            assert_eq!(s.snapshots, 3);
            assert_eq!(s.failed, 0);
        }
        let traces = mean_traces(&rows);
        assert!(traces.iter().all(|t| t.ee > 0.0));
        assert_eq!(traces[0].iteration, 1);
    }

    #[test]
    fn csv_and_json_have_the_same_records() {
        let rows = run_experiment(&small(), RunOptions::default()).unwrap();
        let mut csv_out = Vec::new();
        write_records(&rows, Format::Csv, &mut csv_out).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "subject,sweep,value,snapshot,ee,converged,outer_iterations,gap,infeasible,error"
        );
        assert_eq!(lines.count(), rows.len());
        let mut json_out = Vec::new();
        write_records(&rows, Format::Json, &mut json_out).unwrap();
        let first: serde_json::Value = serde_json::from_str(String::from_utf8(json_out).unwrap().lines().next().unwrap()).unwrap();
        assert_eq!(first["subject"], "fixed-power");
        assert_eq!(first["snapshot"], 0);
    }
}
