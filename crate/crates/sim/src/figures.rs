//! Preset experiments for figures 3 to 7. Each preset is a
//! list of named series sharing one sweep.

use hcran_core::baselines::scenario::ScenarioKind;
use hcran_core::baselines::Algorithm;

use crate::config::{ExperimentConfig, Mode, SweepVariable};
use crate::experiment::{mean_traces, run_experiment, summarize, RunError, RunOptions, SummaryRow, TraceRow};

pub const FIGURES: [u8; 5] = [3, 4, 5, 6, 7];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FigureTable {
    Summary(Vec<SummaryRow>),
    /// Per-iteration convergence of the outer loop.
    Traces(Vec<TraceRow>),
}

fn sweep(base: &ExperimentConfig, mode: Mode, var: SweepVariable, values: Vec<f64>) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.experiment.mode = mode;
    cfg.experiment.sweep = var;
    cfg.experiment.values = values;
    cfg
}

fn steps(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|i| from + step * i as f64).collect()
}

/// Series of figure `fig`, built on the physical parameters, solver
/// settings, snapshot count and seed of `base`.
pub fn preset(fig: u8, base: &ExperimentConfig) -> Option<Vec<Series>> {
    let one = |name: &str, config| vec![Series { name: name.to_owned(), config }];
    let series = match fig {
        3 => {
            let mut cfg = sweep(base, Mode::Scenarios, SweepVariable::LowQosUes, steps(1.0, 10.0, 1.0));
            cfg.experiment.scenarios = ScenarioKind::ALL.to_vec();
            one("scenarios", cfg)
        }
        4 => {
            let mut cfg = sweep(base, Mode::Algorithms, SweepVariable::EtaHueDb, vec![0.0, 10.0, 20.0]);
            cfg.system.n_low = 3;
            one("convergence", cfg)
        }
        5 => [20.0, 30.0]
            .into_iter()
            .map(|p| {
                let mut cfg = sweep(base, Mode::Algorithms, SweepVariable::EtaHueDb, steps(0.0, 20.0, 2.0));
                cfg.system.rrh_p_max_dbm = p;
                Series {
                    name: format!("p_max_r_{p}dBm"),
                    config: cfg,
                }
            })
            .collect(),
        6 => {
            let mut cfg = sweep(base, Mode::Algorithms, SweepVariable::RrhPMaxDbm, steps(14.0, 36.0, 2.0));
            cfg.system.n_low = 4;
            cfg.system.eta_hue_db = 0.0;
            cfg.outer.i_max = 5;
            one("budget", cfg)
        }
        7 => [5usize, 10]
            .into_iter()
            .map(|m| {
                let mut cfg = sweep(base, Mode::Algorithms, SweepVariable::Omega1Ratio, vec![0.2, 0.4, 0.6, 0.8]);
                cfg.experiment.algorithms = vec![Algorithm::Optimal];
                cfg.system.n_high = 5;
                cfg.system.n_low = m;
                Series {
                    name: format!("N5_M{m}"),
                    config: cfg,
                }
            })
            .collect(),
        _ => return None,
    };
    Some(series)
}

/// Runs every series of a preset. Figure 4 yields traces, the others
/// summaries.
pub fn run_figure(fig: u8, series: &[Series], opts: RunOptions) -> Result<FigureTable, RunError> {
    if fig == 4 {
        let mut traces = Vec::new();
        for s in series {
            traces.extend(mean_traces(&run_experiment(&s.config, opts)?));
        }
        return Ok(FigureTable::Traces(traces));
    }
    let mut summary = Vec::new();
    for s in series {
        summary.extend(summarize(&s.name, &run_experiment(&s.config, opts)?));
    }
    Ok(FigureTable::Summary(summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_a_valid_preset() {
        let base = ExperimentConfig::default();
        for fig in FIGURES {
            let series = preset(fig, &base).unwrap();
            assert!(!series.is_empty());
            for s in &series {
                s.config.validate().unwrap();
            }
        }
        assert!(preset(2, &base).is_none());
    }

    #[test]
    fn sweeps_cover_the_figure_ranges() {
        let base = ExperimentConfig::default();
        let fig5 = preset(5, &base).unwrap();
        assert_eq!(fig5.len(), 2);
        assert_eq!(fig5[0].config.experiment.values.len(), 11);
        assert_eq!(fig5[1].config.system.rrh_p_max_dbm, 30.0);
        let fig6 = &preset(6, &base).unwrap()[0].config.experiment.values;
        assert_eq!((fig6[0], *fig6.last().unwrap(), fig6.len()), (14.0, 36.0, 12));
        let fig3 = &preset(3, &base).unwrap()[0].config;
        assert_eq!(fig3.experiment.values, steps(1.0, 10.0, 1.0));
        assert_eq!(fig3.experiment.mode, Mode::Scenarios);
    }

    #[test]
    fn figure_four_yields_traces() {
        let mut base = ExperimentConfig::default();
        base.experiment.snapshots = 2;
        let series = preset(4, &base).unwrap();
        match run_figure(4, &series, RunOptions::default()).unwrap() {
            FigureTable::Traces(rows) => {
                assert!(rows.iter().any(|r| r.algorithm == "optimal" && r.eta_hue_db == 0.0));
            }
            other => panic!("{other:?}"),
        }
    }
}
