//! Outer loop: Dinkelbach iteration on the EE ratio.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use super::inner::{solve_inner, InnerConfig, InnerSolution, WarmStart};
use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::model::{AllocationMatrix, DualState, PowerMatrix, SystemParams};

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    pub i_max: usize,
    /// Stop when `(C - gamma P) / P < eps_gamma * max(gamma, gamma_floor)`.
    pub eps_gamma: f64,
    /// bit/J.
    pub gamma_floor: f64,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            i_max: 20,
            eps_gamma: 1e-3,
            gamma_floor: 1.0,
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.i_max == 0 {
            return Err(Error::InvalidParameter {
                name: "i_max",
                reason: "must be at least 1",
            });
        }
        if !(self.eps_gamma > 0.0) || !(self.gamma_floor > 0.0) {
            return Err(Error::InvalidParameter {
                name: "eps_gamma",
                reason: "tolerances must be positive",
            });
        }
        Ok(())
    }

    /// Whether `f = C - gamma P` is small enough to stop.
    pub fn is_converged(&self, f: f64, gamma: f64, consumed: f64) -> bool {
        f / consumed < self.eps_gamma * gamma.max(self.gamma_floor)
    }
}

/// Rate and consumption of other nodes that enter the EE ratio but do not
/// depend on the allocation being optimized.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SharedLoad {
    /// bit/s.
    pub rate: f64,
    /// W.
    pub power: f64,
}

/// One outer iteration. `rate` and `consumed` include the shared load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterStep {
    pub iteration: usize,
    pub gamma: f64,
    pub rate: f64,
    pub consumed: f64,
    /// `C - gamma P`.
    pub f: f64,
    pub inner_iterations: usize,
    pub feasible: bool,
}

impl OuterStep {
    /// EE of this iteration's allocation; becomes the next `gamma`.
    pub fn ee(&self) -> f64 {
        self.rate / self.consumed
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub steps: Vec<OuterStep>,
}

impl SolveTrace {
    pub const CSV_HEADER: &'static str = "iteration,gamma,C,P,F,inner_iters,feasible";

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `gamma` strictly increases between consecutive iterations.
    pub fn gamma_increasing(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].gamma > w[0].gamma)
    }

    /// First iteration whose allocation already attains the final EE to
    /// within `rel_tol`; later iterations only confirm it.
    pub fn iterations_to_converge(&self, rel_tol: f64) -> usize {
        let Some(last) = self.steps.last() else { return 0 };
        let target = last.ee();
        self.steps
            .iter()
            .position(|s| (target - s.ee()).abs() <= rel_tol * target.abs())
            .map_or(self.steps.len(), |i| i + 1)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> fmt::Result {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for s in &self.steps {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{},{}",
                s.iteration, s.gamma, s.rate, s.consumed, s.f, s.inner_iterations, s.feasible
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        self.write_csv(&mut s).expect("writing to a String cannot fail");
        s
    }
}

/// Anything that solves `max C - gamma P` for a given `gamma`.
pub trait InnerSolver {
    fn solve(&mut self, gamma: f64, warm: &WarmStart) -> Result<InnerSolution>;
}

impl<F> InnerSolver for F
where
    F: FnMut(f64, &WarmStart) -> Result<InnerSolution>,
{
    fn solve(&mut self, gamma: f64, warm: &WarmStart) -> Result<InnerSolution> {
        self(gamma, warm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EeSolution {
    /// Owner of every RB.
    pub owners: Vec<usize>,
    /// Power on every RB, W.
    pub powers: Vec<f64>,
    pub dual: DualState,
    /// Final Dinkelbach parameter.
    pub gamma: f64,
    pub rate: f64,
    pub consumed: f64,
    /// Upper bound on `max C - gamma P` at the final `gamma`.
    pub dual_bound: f64,
    pub trace: SolveTrace,
    /// False when `i_max` ran out first.
    pub converged: bool,
    /// Load of other nodes included in the optimized ratio.
    pub shared: SharedLoad,
}

impl EeSolution {
    /// EE of the optimized node alone.
    pub fn ee(&self) -> f64 {
        self.rate / self.consumed
    }

    /// The optimized ratio, shared load included.
    pub fn system_ee(&self) -> f64 {
        (self.rate + self.shared.rate) / (self.consumed + self.shared.power)
    }

    pub fn allocation(&self, ues: usize) -> AllocationMatrix {
        let owners: Vec<Option<usize>> = self.owners.iter().copied().map(Some).collect();
        AllocationMatrix::from_owners(ues, &owners)
    }

    pub fn power_matrix(&self, ues: usize) -> PowerMatrix {
        let owners: Vec<Option<usize>> = self.owners.iter().copied().map(Some).collect();
        PowerMatrix::from_rb_powers(ues, &owners, &self.powers)
    }

    /// Outer iterations run, including the one that confirmed convergence.
    pub fn outer_iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Runs the Dinkelbach loop from `gamma = 0` on any inner solver.
///
/// Each inner solve is warm-started from the previous allocation, which is
/// feasible and scores exactly zero at the new `gamma`, so `F` never drops
/// below zero and `gamma` never decreases.
pub fn dinkelbach<S: InnerSolver>(solver: &mut S, cfg: &OuterConfig) -> Result<EeSolution> {
    dinkelbach_shared(solver, cfg, SharedLoad::default())
}

/// Dinkelbach on `(C + shared.rate) / (P + shared.power)`.
///
/// The shared terms are constants, so the inner problem at each `gamma` is
/// unchanged; only `F` and the `gamma` update see them.
pub fn dinkelbach_shared<S: InnerSolver>(
    solver: &mut S,
    cfg: &OuterConfig,
    shared: SharedLoad,
) -> Result<EeSolution> {
    cfg.validate()?;
    if !(shared.rate >= 0.0) || !(shared.power >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "shared",
            reason: "shared rate and power must be nonnegative",
        });
    }
    let mut gamma = 0.0;
    let mut warm = WarmStart::default();
    let mut trace = SolveTrace::default();
    let mut accepted: Option<(f64, InnerSolution)> = None;
    let mut converged = false;

    for i in 1..=cfg.i_max {
        let sol = solver.solve(gamma, &warm)?;
        if let Some(v) = &sol.violation {
            if accepted.is_none() {
                return Err(Error::Infeasible(v.clone()));
            }
            break;
        }
        let rate = sol.rate + shared.rate;
        let consumed = sol.consumed + shared.power;
        let f = rate - gamma * consumed;
        if f < 0.0 && accepted.is_some() {
            // A worse allocation than the previous one; the previous one
            // already attains EE = gamma.
            converged = true;
            break;
        }
        trace.steps.push(OuterStep {
            iteration: i,
            gamma,
            rate,
            consumed,
            f,
            inner_iterations: sol.iterations,
            feasible: true,
        });
        let done = cfg.is_converged(f, gamma, consumed);
        let next_gamma = rate / consumed;
        warm = WarmStart {
            owners: Some(sol.owners.clone()),
            dual: Some(sol.dual.clone()),
        };
        accepted = Some((gamma, sol));
        if done {
            converged = true;
            break;
        }
        gamma = next_gamma;
    }

    let (gamma, sol) = accepted.expect("first iteration either errors or is accepted");
    Ok(EeSolution {
        owners: sol.owners,
        powers: sol.powers,
        dual: sol.dual,
        gamma,
        rate: sol.rate,
        consumed: sol.consumed,
        dual_bound: sol.dual_bound,
        trace,
        converged,
        shared,
    })
}

/// EE-optimal RB assignment and power allocation for one snapshot.
pub fn solve_ee(
    ch: &ChannelState,
    params: &SystemParams,
    outer: &OuterConfig,
    inner: &InnerConfig,
) -> Result<EeSolution> {
    let mut solver = |gamma: f64, warm: &WarmStart| solve_inner(gamma, ch, params, inner, warm);
    dinkelbach(&mut solver, outer)
}

/// As [`solve_ee`] for the ratio that also counts `shared`.
pub fn solve_ee_shared(
    ch: &ChannelState,
    params: &SystemParams,
    outer: &OuterConfig,
    inner: &InnerConfig,
    shared: SharedLoad,
) -> Result<EeSolution> {
    let mut solver = |gamma: f64, warm: &WarmStart| solve_inner(gamma, ch, params, inner, warm);
    dinkelbach_shared(&mut solver, outer, shared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DualState;
    use crate::optimizer::InnerStop;

    /// Single-RB instance with a closed-form inner solution:
    /// `max_p log2(1 + s p) - gamma (phi p + ps)` on `[0, p_max]`.
    fn scalar(s: f64, phi: f64, ps: f64, p_max: f64) -> impl FnMut(f64, &WarmStart) -> Result<InnerSolution> {
        move |gamma, _| {
            let p = if gamma == 0.0 {
                p_max
            } else {
                (1.0 / (core::f64::consts::LN_2 * gamma * phi) - 1.0 / s).clamp(0.0, p_max)
            };
            let rate = libm::log2(1.0 + s * p);
            let consumed = phi * p + ps;
            Ok(InnerSolution {
                owners: alloc::vec![0],
                powers: alloc::vec![p],
                dual: DualState::zeros(1, 1),
                rate,
                consumed,
                primal: rate - gamma * consumed,
                dual_bound: rate - gamma * consumed,
                iterations: 1,
                stop: InnerStop::Converged,
                violation: None,
            })
        }
    }

    #[test]
    fn reaches_scanned_optimum() {
        let sol = dinkelbach(&mut scalar(50.0, 2.0, 0.3, 1.0), &OuterConfig::default()).unwrap();
        let best = (1..=100_000)
            .map(|i| {
                let p = i as f64 * 1e-5;
                libm::log2(1.0 + 50.0 * p) / (2.0 * p + 0.3)
            })
            .fold(0.0, f64::max);
        assert!(sol.converged);
        assert!((sol.ee() - best).abs() <= 1e-3 * best);
        assert!(sol.trace.gamma_increasing());
    }

    #[test]
    fn residual_meets_tolerance() {
        let cfg = OuterConfig::default();
        let sol = dinkelbach(&mut scalar(5.0, 4.0, 1.0, 2.0), &cfg).unwrap();
        let last = sol.trace.steps.last().unwrap();
        assert!(last.f / last.consumed < cfg.eps_gamma * sol.gamma.max(cfg.gamma_floor));
    }

    #[test]
    fn shared_load_lowers_ratio_and_is_reported() {
        let shared = SharedLoad { rate: 1.0, power: 10.0 };
        let own = dinkelbach(&mut scalar(50.0, 2.0, 0.3, 1.0), &OuterConfig::default()).unwrap();
        let with = dinkelbach_shared(&mut scalar(50.0, 2.0, 0.3, 1.0), &OuterConfig::default(), shared).unwrap();
        assert_eq!(with.shared, shared);
        assert!(with.system_ee() < own.ee());
        // A heavy constant load makes spending power cheaper in relative terms.
        assert!(with.powers[0] >= own.powers[0]);
        let bad = SharedLoad { rate: -1.0, power: 0.0 };
        assert!(dinkelbach_shared(&mut scalar(1.0, 1.0, 1.0, 1.0), &OuterConfig::default(), bad).is_err());
    }

    #[test]
    fn iteration_limit_is_reported() {
        let cfg = OuterConfig {
            i_max: 1,
            ..OuterConfig::default()
        };
        let sol = dinkelbach(&mut scalar(50.0, 2.0, 0.3, 1.0), &cfg).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.outer_iterations(), 1);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let sol = dinkelbach(&mut scalar(50.0, 2.0, 0.3, 1.0), &OuterConfig::default()).unwrap();
        let csv = sol.trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SolveTrace::CSV_HEADER));
        assert_eq!(lines.count(), sol.trace.len());
    }

    #[test]
    fn convergence_count_ignores_confirming_steps() {
        let step = |i, ee: f64| OuterStep {
            iteration: i,
            gamma: 0.0,
            rate: ee,
            consumed: 1.0,
            f: 0.0,
            inner_iterations: 1,
            feasible: true,
        };
        let trace = SolveTrace {
            steps: alloc::vec![step(1, 5.0), step(2, 9.999), step(3, 10.0), step(4, 10.0)],
        };
        assert_eq!(trace.iterations_to_converge(1e-3), 2);
        assert_eq!(trace.iterations_to_converge(0.0), 3);
    }
}
