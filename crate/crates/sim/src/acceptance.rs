//! Acceptance suite: thirteen numbered checks of solver correctness and of
//! the qualitative trends of the figure presets. Each check is evaluated
//! as stated and reports what it measured, pass or fail.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, Mutex};

use hcran_core::oracle::{
    brute_force_ee, duality_gap, kkt_check, proves_infeasible, TinyInstance, DEFAULT_GRID_POINTS,
};
use hcran_core::optimizer::{solve_ee, solve_inner, InnerConfig, OuterConfig, WarmStart};
use hcran_core::system::SystemConfig;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::{group_rows, run_experiment, summarize, ResultRow, RunOptions, SummaryRow};
use crate::figures::{preset, FIGURES};
use crate::stats::{linear_fit_r2, median, Estimate};

pub const CRITERIA: u8 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Settings {
    /// Snapshots per sweep value.
    pub snapshots: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            snapshots: 1000,
            seed: 1,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:>2} {:<24} {}", self.id, self.name, self.detail)
    }
}

fn result(id: u8, name: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        name,
        passed,
        detail,
    }
}

/// Runs criterion `id`. `exe` is the `hcran` binary used by the
/// determinism check; without it that check fails.
pub fn criterion(id: u8, settings: &Settings, exe: Option<&Path>) -> CriterionResult {
    match id {
        1 => dinkelbach_residual(settings),
        2 => monotone_outer_loop(settings),
        3 => subtractive_decreasing(settings),
        4 => oracle_equivalence(settings),
        5 => duality_gap_trend(settings),
        6 => convergence_speed(settings),
        7 => algorithm_ordering(settings),
        8 => eta_trend(settings),
        9 => budget_trend(settings),
        10 => ratio_trend(settings),
        11 => scenario_ordering(settings),
        12 => kkt_residual(settings),
        13 => determinism(settings, exe),
        _ => panic!("criteria are numbered 1 to {CRITERIA}"),
    }
}

pub fn run_all(settings: &Settings, exe: Option<&Path>) -> Vec<CriterionResult> {
    (1..=CRITERIA).map(|id| criterion(id, settings, exe)).collect()
}

fn pool(settings: &Settings) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .expect("worker pool")
}

fn pct(num: usize, den: usize) -> f64 {
    100.0 * num as f64 / den.max(1) as f64
}

/// Diagnostics of the optimizer on one snapshot of the reference cell.
#[derive(Debug, Clone)]
struct Audit {
    solved: bool,
    /// Unsolved, and no allocation meets every rate floor.
    proven_infeasible: bool,
    converged: bool,
    residual_ok: bool,
    gamma_increasing: bool,
    plateau_iterations: usize,
    outer_iterations: usize,
    kkt_interior: f64,
    kkt_interior_checked: usize,
}

type AuditCache = Mutex<BTreeMap<Settings, Arc<Vec<Audit>>>>;
static REFERENCE_AUDITS: AuditCache = Mutex::new(BTreeMap::new());

/// Optimizer audits over the reference cell, shared by the criteria that
/// only inspect single solves.
fn reference_audits(settings: &Settings) -> Arc<Vec<Audit>> {
    if let Some(a) = REFERENCE_AUDITS.lock().unwrap().get(settings) {
        return a.clone();
    }
    let dep = SystemConfig::default().deployment().expect("reference deployment");
    let (outer, inner) = (OuterConfig::default(), InnerConfig::default());
    let audits: Vec<Audit> = pool(settings).install(|| {
        (0..settings.snapshots)
            .into_par_iter()
            .map(|snap| {
                let ch = dep.snapshot(settings.seed, snap).expect("snapshot");
                match solve_ee(&ch, &dep.params, &outer, &inner) {
                    Ok(sol) => {
                        let residual = (sol.rate - sol.gamma * sol.consumed).abs() / sol.consumed;
                        let kkt = kkt_check(&sol.owners, &sol.powers, &sol.dual, sol.gamma, &ch, &dep.params);
                        Audit {
                            solved: true,
                            proven_infeasible: false,
                            converged: sol.converged,
                            residual_ok: residual <= outer.eps_gamma * sol.gamma.max(outer.gamma_floor),
                            gamma_increasing: sol.trace.gamma_increasing(),
                            plateau_iterations: sol.trace.iterations_to_converge(outer.eps_gamma),
                            outer_iterations: sol.outer_iterations(),
                            kkt_interior: kkt.max_interior,
                            kkt_interior_checked: kkt.interior_checked,
                        }
                    }
                    Err(_) => Audit {
                        solved: false,
                        proven_infeasible: proves_infeasible(&ch, &dep.params).unwrap_or(false),
                        converged: false,
                        residual_ok: false,
                        gamma_increasing: true,
                        plateau_iterations: usize::MAX,
                        outer_iterations: usize::MAX,
                        kkt_interior: f64::NAN,
                        kkt_interior_checked: 0,
                    },
                }
            })
            .collect()
    });
    let audits = Arc::new(audits);
    REFERENCE_AUDITS.lock().unwrap().insert(*settings, audits.clone());
    audits
}

/// Snapshots for which no feasible allocation exists are outside the
/// solver's domain; any other unsolved snapshot counts as a failure.
pub fn dinkelbach_residual(settings: &Settings) -> CriterionResult {
    let audits = reference_audits(settings);
    let ok = audits.iter().filter(|a| a.solved && a.converged && a.residual_ok).count();
    let proven = audits.iter().filter(|a| a.proven_infeasible).count();
    let unsolved = audits.iter().filter(|a| !a.solved).count();
    result(
        1,
        "dinkelbach-residual",
        ok + proven == audits.len(),
        format!(
            "{ok}/{} snapshots terminate within the residual tolerance; {unsolved} unsolved, {proven} of them proven infeasible",
            audits.len()
        ),
    )
}

pub fn monotone_outer_loop(settings: &Settings) -> CriterionResult {
    let audits = reference_audits(settings);
    let bad = audits.iter().filter(|a| !a.gamma_increasing).count();
    let unexplained = audits.iter().filter(|a| !a.solved && !a.proven_infeasible).count();
    let solved = audits.iter().filter(|a| a.solved).count();
    result(
        2,
        "monotone-outer-loop",
        bad == 0 && unexplained == 0,
        format!(
            "{bad} of {solved} solved snapshots with a non-increasing gamma step; {} proven infeasible, {unexplained} unsolved without proof",
            audits.len() - solved - unexplained
        ),
    )
}

pub fn subtractive_decreasing(settings: &Settings) -> CriterionResult {
    const INSTANCES: usize = 50;
    const FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    let dep = SystemConfig::default().deployment().expect("reference deployment");
    let (outer, inner) = (OuterConfig::default(), InnerConfig::default());
    let mut strict = 0;
    let mut pairs = 0;
    let mut negative = 0;
    let mut instances = 0;
    let mut snap = 0;
    while instances < INSTANCES && snap < 10 * INSTANCES as u64 {
        let ch = dep.snapshot(settings.seed, snap).expect("snapshot");
        snap += 1;
        let Ok(sol) = solve_ee(&ch, &dep.params, &outer, &inner) else { continue };
        instances += 1;
        let values: Vec<(f64, f64)> = FRACTIONS
            .iter()
            .map(|&x| {
                let s = solve_inner(x * sol.gamma, &ch, &dep.params, &inner, &WarmStart::default())
                    .expect("inner solve below the optimum");
                (s.primal, s.rate)
            })
            .collect();
        negative += values.iter().filter(|(f, rate)| *f < -1e-6 * rate).count();
        for w in values.windows(2) {
            pairs += 1;
            if w[1].0 < w[0].0 {
                strict += 1;
            }
        }
    }
    let frac = strict as f64 / pairs.max(1) as f64;
    result(
        3,
        "subtractive-decreasing",
        instances == INSTANCES && frac >= 0.98 && negative == 0,
        format!(
            "{strict}/{pairs} strictly decreasing pairs ({:.1}%), {negative} negative values, {instances} instances",
            100.0 * frac
        ),
    )
}

/// Sizes of the brute-force instances: K from 2 to 6 and three UE mixes.
fn tiny_config(index: u64) -> SystemConfig {
    let mut c = SystemConfig::default();
    c.k_total = 2 + (index % 5) as usize;
    c.bandwidth_hz = 200e3 * c.k_total as f64;
    let (n, m) = [(1, 1), (2, 1), (1, 2)][(index / 5 % 3) as usize];
    c.n_high = n;
    c.n_low = m;
    c.omega1_ratio = 0.5;
    c
}

pub fn oracle_equivalence(settings: &Settings) -> CriterionResult {
    const INSTANCES: usize = 200;
    let (outer, inner) = (OuterConfig::default(), InnerConfig::default());
    let mut gaps = Vec::new();
    let mut tried = 0u64;
    while gaps.len() < INSTANCES && tried < 20 * INSTANCES as u64 {
        tried += 1;
        let inst = TinyInstance::from_config(&tiny_config(tried), settings.seed, tried, DEFAULT_GRID_POINTS)
            .expect("tiny instance within the enumeration guard");
        let Ok(orc) = brute_force_ee(&inst) else { continue };
        let gap = match solve_ee(&inst.channel, &inst.params, &outer, &inner) {
            Ok(sol) => (orc.ee() - sol.ee()) / orc.ee(),
            Err(_) => 1.0,
        };
        gaps.push(gap);
    }
    let worst = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let med = median(&gaps).unwrap_or(f64::NAN);
    result(
        4,
        "oracle-equivalence",
        gaps.len() == INSTANCES && worst <= 0.02 && med < 0.005,
        format!(
            "{} feasible instances of {tried} drawn, median gap {med:.2e}, worst {worst:.2e}",
            gaps.len()
        ),
    )
}

pub fn duality_gap_trend(settings: &Settings) -> CriterionResult {
    const SNAPSHOTS: u64 = 100;
    let (outer, inner) = (OuterConfig::default(), InnerConfig::default());
    let mut medians = Vec::new();
    let mut counts = Vec::new();
    for k in [4usize, 8, 16, 25] {
        let mut c = SystemConfig::default();
        c.k_total = k;
        c.bandwidth_hz = 200e3 * k as f64;
        c.n_high = 2;
        c.n_low = 1;
        c.omega1_ratio = 0.5;
        let dep = c.deployment().expect("deployment");
        let gaps: Vec<f64> = pool(settings).install(|| {
            (0..SNAPSHOTS)
                .into_par_iter()
                .filter_map(|snap| {
                    let ch = dep.snapshot(settings.seed, snap).ok()?;
                    let sol = solve_ee(&ch, &dep.params, &outer, &inner).ok()?;
                    duality_gap(&ch, &dep.params, &sol, &inner).ok().map(|g| g.relative())
                })
                .collect()
        });
        counts.push(gaps.len());
        medians.push(median(&gaps).unwrap_or(f64::NAN));
    }
    let nonincreasing = medians.windows(2).all(|w| w[1] <= w[0]);
    let last = medians[3];
    result(
        5,
        "duality-gap-trend",
        nonincreasing && last < 0.02,
        format!(
            "median gap at K=4,8,16,25: {:.2e} {:.2e} {:.2e} {:.2e} (feasible {:?} of {SNAPSHOTS})",
            medians[0], medians[1], medians[2], medians[3], counts
        ),
    )
}

pub fn convergence_speed(settings: &Settings) -> CriterionResult {
    let audits = reference_audits(settings);
    let plateau: Vec<f64> = audits.iter().map(|a| a.plateau_iterations as f64).collect();
    let within = plateau.iter().filter(|&&i| i <= 5.0).count();
    let med = median(&plateau).unwrap_or(f64::NAN);
    let solved: Vec<f64> = audits.iter().filter(|a| a.solved).map(|a| a.outer_iterations as f64).collect();
    result(
        6,
        "convergence-speed",
        pct(within, audits.len()) >= 90.0 && med <= 3.0,
        format!(
            "{:.1}% reach the final EE within 5 iterations, median {med}; median iterations including the confirming step {}",
            pct(within, audits.len()),
            median(&solved).unwrap_or(f64::NAN)
        ),
    )
}

fn figure_rows(fig: u8, settings: &Settings, edit: impl Fn(&mut ExperimentConfig)) -> Vec<(String, Vec<ResultRow>)> {
    let mut base = ExperimentConfig::default();
    base.experiment.snapshots = settings.snapshots;
    base.experiment.seed = settings.seed;
    let opts = RunOptions {
        workers: settings.workers,
    };
    preset(fig, &base)
        .expect("figure preset")
        .into_iter()
        .map(|mut s| {
            edit(&mut s.config);
            let rows = run_experiment(&s.config, opts).expect("preset runs");
            (s.name, rows)
        })
        .collect()
}

/// EE of every snapshot of one subject at one sweep value; `None` when
/// infeasible or failed.
fn per_snapshot(rows: &[ResultRow], subject: &str, value: f64) -> Vec<Option<f64>> {
    rows.iter()
        .filter(|r| r.subject == subject && r.value == value)
        .map(|r| r.is_valid().then_some(r.ee))
        .collect()
}

fn fmt_mean(s: &SummaryRow) -> String {
    match s.mean_ee {
        Some(m) => format!("{m:.3e} ({}/{})", s.feasible, s.snapshots),
        None => format!("undefined (0/{})", s.snapshots),
    }
}

pub fn algorithm_ordering(settings: &Settings) -> CriterionResult {
    let eps = OuterConfig::default().eps_gamma;
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, rows) in figure_rows(5, settings, |c| c.experiment.values = vec![0.0]) {
        let opt = per_snapshot(&rows, "optimal", 0.0);
        let seq = per_snapshot(&rows, "sequential-rb", 0.0);
        let fix = per_snapshot(&rows, "fixed-power", 0.0);
        let joint: Vec<(f64, f64, f64)> = (0..opt.len())
            .filter_map(|i| Some((opt[i]?, seq[i]?, fix[i]?)))
            .collect();
        let ordered = joint
            .iter()
            .filter(|(o, s, f)| *o >= s * (1.0 - eps) && s >= f)
            .count();
        let opt_seq = joint.iter().filter(|(o, s, _)| *o >= s * (1.0 - eps)).count();
        let seq_fix = joint.iter().filter(|(_, s, f)| s >= f).count();
        let n = joint.len() as f64;
        let mean = |sel: fn(&(f64, f64, f64)) -> f64| joint.iter().map(sel).sum::<f64>() / n;
        let (mo, ms, mf) = (mean(|t| t.0), mean(|t| t.1), mean(|t| t.2));
        let ok = !joint.is_empty() && pct(ordered, joint.len()) >= 95.0 && mo > ms && ms > mf;
        passed &= ok;
        parts.push(format!(
            "{name}: ordered on {ordered}/{} jointly feasible ({:.1}%; opt>=seq {opt_seq}, seq>=fixed {seq_fix}), means {mo:.3e} {ms:.3e} {mf:.3e}",
            joint.len(),
            pct(ordered, joint.len())
        ));
    }
    result(7, "algorithm-ordering", passed, parts.join("; "))
}

/// Cells of one subject in sweep order.
fn series_of<'a>(summary: &'a [SummaryRow], subject: &str) -> Vec<&'a SummaryRow> {
    summary.iter().filter(|s| s.subject == subject).collect()
}

pub fn eta_trend(settings: &Settings) -> CriterionResult {
    let (name, rows) = figure_rows(5, settings, |_| {}).swap_remove(0);
    let summary = summarize(&name, &rows);
    let mut passed = true;
    let mut parts = Vec::new();
    for alg in ["optimal", "sequential-rb", "fixed-power"] {
        let cells = series_of(&summary, alg);
        let ests: Vec<Option<Estimate>> = cells.iter().map(|c| c.estimate()).collect();
        let defined = ests.iter().all(Option::is_some);
        let monotone = defined
            && ests
                .windows(2)
                .all(|w| w[1].unwrap().lower() <= w[0].unwrap().upper());
        passed &= monotone;
        let means: Vec<String> = cells.iter().map(|c| fmt_mean(c)).collect();
        parts.push(format!(
            "{alg} {}: {}",
            if monotone { "nonincreasing" } else if defined { "rises beyond CI" } else { "undefined mean" },
            means.join(" ")
        ));
    }
    result(8, "eta-trend", passed, format!("{name}; {}", parts.join("; ")))
}

/// Nondecreasing is judged up to the optimizer's relative stopping
/// tolerance, below which EE differences are not resolved.
pub fn budget_trend(settings: &Settings) -> CriterionResult {
    let eps = OuterConfig::default().eps_gamma;
    let (name, rows) = figure_rows(6, settings, |_| {}).swap_remove(0);
    let summary = summarize(&name, &rows);
    let mut passed = true;
    let mut parts = Vec::new();
    for alg in ["optimal", "sequential-rb", "fixed-power"] {
        let cells = series_of(&summary, alg);
        let means: Option<Vec<f64>> = cells.iter().map(|c| c.mean_ee).collect();
        let shown: Vec<String> = cells.iter().map(|c| fmt_mean(c)).collect();
        let verdict = match &means {
            None => {
                passed = false;
                "undefined mean".to_owned()
            }
            Some(m) => {
                let nondecreasing = m.windows(2).all(|w| w[1] >= w[0] * (1.0 - eps));
                let n = m.len();
                let first = m[2] - m[0];
                let last = m[n - 1] - m[n - 3];
                let saturates = last < 0.2 * first;
                passed &= nondecreasing && saturates;
                format!(
                    "{} gain first {first:.2e} last {last:.2e}",
                    if nondecreasing { "nondecreasing" } else { "decreases" }
                )
            }
        };
        parts.push(format!("{alg} {verdict}: {}", shown.join(" ")));
    }
    result(9, "budget-trend", passed, parts.join("; "))
}

pub fn ratio_trend(settings: &Settings) -> CriterionResult {
    let (name, rows) = figure_rows(7, settings, |_| {}).swap_remove(0);
    let summary = summarize(&name, &rows);
    let cells = series_of(&summary, "optimal");
    let shown: Vec<String> = cells.iter().map(|c| fmt_mean(c)).collect();
    let means: Option<Vec<f64>> = cells.iter().map(|c| c.mean_ee).collect();
    let (passed, fit) = match means {
        Some(m) => {
            let xs: Vec<f64> = cells.iter().map(|c| c.value).collect();
            let r2 = linear_fit_r2(&xs, &m);
            (m.windows(2).all(|w| w[1] > w[0]) && r2 > 0.9, format!("R2 {r2:.4}"))
        }
        None => (false, "undefined mean".to_owned()),
    };
    result(10, "ratio-trend", passed, format!("{name} optimal {fit}: {}", shown.join(" ")))
}

pub fn scenario_ordering(settings: &Settings) -> CriterionResult {
    let m = SystemConfig::default().n_low as f64;
    let (_, rows) = figure_rows(3, settings, |c| c.experiment.values = vec![m]).swap_remove(0);
    let groups = group_rows(&rows);
    let mut passed = true;
    let mut parts = Vec::new();
    for w in groups.windows(2).rev() {
        let (lower, upper) = (w[0], w[1]);
        let diffs: Vec<f64> = upper
            .iter()
            .zip(lower)
            .filter(|(u, l)| u.is_valid() && l.is_valid())
            .map(|(u, l)| u.ee - l.ee)
            .collect();
        let est = Estimate::of(&diffs);
        let lo = est.map_or(f64::NEG_INFINITY, |e| e.lower());
        passed &= lo > 0.0;
        parts.push(format!(
            "{} - {}: {:.3e} (95% lower bound {lo:.3e}, {} paired)",
            upper[0].subject,
            lower[0].subject,
            est.map_or(f64::NAN, |e| e.mean),
            diffs.len()
        ));
    }
    let summary = summarize("", &rows);
    let means: Vec<String> = summary.iter().map(|s| format!("{} {}", s.subject, fmt_mean(s))).collect();
    result(
        11,
        "scenario-ordering",
        passed,
        format!("{}; means {}", parts.join("; "), means.join(", ")),
    )
}

pub fn kkt_residual(settings: &Settings) -> CriterionResult {
    let audits = reference_audits(settings);
    let converged: Vec<&Audit> = audits.iter().filter(|a| a.solved && a.converged).collect();
    let bad = converged.iter().filter(|a| !(a.kkt_interior < 1e-6)).count();
    let worst = converged.iter().map(|a| a.kkt_interior).fold(0.0, f64::max);
    let checked: usize = converged.iter().map(|a| a.kkt_interior_checked).sum();
    result(
        12,
        "kkt-residual",
        bad == 0 && !converged.is_empty(),
        format!(
            "{bad} of {} converged snapshots above 1e-6, worst {worst:.2e} over {checked} interior RBs",
            converged.len()
        ),
    )
}

/// Runs each figure preset twice through the binary with different worker
/// counts and compares the CSV bytes.
pub fn determinism(settings: &Settings, exe: Option<&Path>) -> CriterionResult {
    let Some(exe) = exe else {
        return result(13, "determinism", false, "no hcran binary available".into());
    };
    let snapshots = settings.snapshots.min(2).to_string();
    let seed = settings.seed.to_string();
    let mut passed = true;
    let mut parts = Vec::new();
    for fig in FIGURES {
        let run = |workers: &str| {
            Command::new(exe)
                .args(["figure", &fig.to_string(), "--seed", &seed, "--snapshots", &snapshots, "--workers", workers])
                .output()
        };
        let verdict = match (run("1"), run("2")) {
            (Ok(a), Ok(b)) if a.status.success() && b.status.success() => {
                let same = a.stdout == b.stdout && !a.stdout.is_empty();
                passed &= same;
                if same { format!("{} bytes identical", a.stdout.len()) } else { "outputs differ".into() }
            }
            (Ok(a), _) if !a.status.success() => {
                passed = false;
                format!("exit {}: {}", a.status, String::from_utf8_lossy(&a.stderr).trim())
            }
            (Err(e), _) | (_, Err(e)) => {
                passed = false;
                e.to_string()
            }
            (_, Ok(b)) => {
                passed = false;
                format!("exit {}: {}", b.status, String::from_utf8_lossy(&b.stderr).trim())
            }
        };
        parts.push(format!("figure {fig}: {verdict}"));
    }
    result(13, "determinism", passed, parts.join("; "))
}
