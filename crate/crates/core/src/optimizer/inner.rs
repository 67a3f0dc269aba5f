//! Inner loop: the subtractive problem `max C - gamma P` for a fixed
//! Dinkelbach parameter, solved by projected subgradient descent on the
//! dual with exact power allocation for every assignment it visits.

use alloc::vec::Vec;

use super::dual::{
    assign_with_value, dual_movement, dual_powers, dual_value, max_relative_violation, subgradients,
    update_duals, StepSizes,
};
use super::greedy::{max_rate_owners, repair_owners, sequential_owners};
use super::local::{evaluate, improve, restore, Evaluations};
use super::power::PowerSolution;
use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::model::{rb_rate, DualState, SystemParams, Violation};

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
#[derive(Debug, Clone, PartialEq)]
pub struct InnerConfig {
    /// Subgradient iteration limit.
    pub l_max: usize,
    /// Base step `s`; each multiplier's constant is `s` over its
    /// constraint's scale.
    pub step_scale: f64,
    /// Stop when the dual-derived iterate violates no constraint by more
    /// than this fraction of its scale...
    pub residual_tol: f64,
    /// ...and the multipliers moved less than this relative amount.
    pub movement_tol: f64,
    /// Stop once the dual bound is within this fraction of `C + gamma P`
    /// of the best feasible primal.
    pub gap_tol: f64,
    /// Restart the subgradient walk from the certificate of every new best
    /// assignment.
    pub recenter: bool,
    /// Sweeps of move/swap local search applied to the incumbent when the
    /// gap did not close; zero disables it.
    pub local_rounds: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            l_max: 200,
            step_scale: 0.1,
            residual_tol: 1e-3,
            movement_tol: 1e-4,
            gap_tol: 1e-9,
            recenter: true,
            local_rounds: 8,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_max == 0 {
            return Err(Error::InvalidParameter {
                name: "l_max",
                reason: "must be at least 1",
            });
        }
        for (name, v) in [
            ("step_scale", self.step_scale),
            ("residual_tol", self.residual_tol),
            ("movement_tol", self.movement_tol),
            ("gap_tol", self.gap_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }
}

/// Why the inner loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStop {
    /// Dual bound met the best primal.
    GapClosed,
    /// Residual and movement tolerances met.
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub owners: Vec<usize>,
    pub powers: Vec<f64>,
    /// Multipliers certifying `powers` for `owners`.
    pub dual: DualState,
    pub rate: f64,
    pub consumed: f64,
    /// Best primal value `C - gamma P`.
    pub primal: f64,
    /// Smallest dual value seen; an upper bound on the optimum.
    pub dual_bound: f64,
    pub iterations: usize,
    pub stop: InnerStop,
    /// Set when no visited assignment was feasible; the solution then holds
    /// the last candidate.
    pub violation: Option<Violation>,
}

impl InnerSolution {
    pub fn is_feasible(&self) -> bool {
        self.violation.is_none()
    }

    /// `(D - F) / |D|`.
    pub fn relative_gap(&self) -> f64 {
        (self.dual_bound - self.primal) / self.dual_bound.abs()
    }
}

/// Starting point carried between outer iterations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarmStart {
    pub owners: Option<Vec<usize>>,
    pub dual: Option<DualState>,
}

/// Max-rate assignment at an even power split, repaired towards the rate
/// floors.
pub fn seed_owners(ch: &ChannelState, params: &SystemParams) -> Result<Vec<usize>> {
    let b0 = ch.rb_bandwidth_hz();
    let even = params.power.p_max / params.rbs() as f64;
    let rate_of = |n: usize, k: usize| {
        let g = ch.g_r2m(k);
        let p = if params.partition.is_shared(k) && g > 0.0 {
            even.min(params.delta0 / g)
        } else {
            even
        };
        rb_rate(b0, ch.sigma(n, k), p)
    };
    let mut owners = max_rate_owners(params, rate_of)?;
    repair_owners(&mut owners, params, rate_of);
    Ok(owners)
}

/// Solves the inner problem at `gamma`.
pub fn solve_inner(
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
    cfg: &InnerConfig,
    warm: &WarmStart,
) -> Result<InnerSolution> {
    cfg.validate()?;
    params.check_dims(ch)?;
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "must be nonnegative",
        });
    }
    let steps = StepSizes::normalized(cfg.step_scale, gamma, ch, params);
    let mut walk = Walk {
        gamma,
        ch,
        params,
        cache: Evaluations::new(),
        best: None,
        last: None,
        bound: f64::INFINITY,
    };

    let seed = seed_owners(ch, params)?;
    walk.consider(&seed)?;
    walk.consider(&sequential_owners(params)?)?;
    let mut dual = match &warm.dual {
        Some(d) => d.clone(),
        None => walk.cache[&seed].dual.clone(),
    };
    if let Some(owners) = &warm.owners {
        if walk.consider(owners)? && cfg.recenter {
            dual = walk.best_dual().unwrap_or(dual);
        }
    }

    let mut stop = InnerStop::IterationLimit;
    let mut iterations = 0;
    for l in 1..=cfg.l_max {
        iterations = l;
        let (owners, value) = assign_with_value(&dual, gamma, ch, params)?;
        walk.bound = walk.bound.min(value);
        let improved = walk.consider(&owners)?;
        if walk.gap_closed(cfg.gap_tol) {
            stop = InnerStop::GapClosed;
            break;
        }
        if improved && cfg.recenter {
            dual = walk.best_dual().unwrap_or(dual);
            continue;
        }

        let powers = dual_powers(&owners, &dual, gamma, ch, params);
        let grads = subgradients(&owners, &powers, ch, params);
        let next = update_duals(&dual, &grads, l, &steps, params);
        let settled = max_relative_violation(&owners, &powers, ch, params) < cfg.residual_tol
            && dual_movement(&dual, &next) < cfg.movement_tol;
        dual = next;
        if settled && walk.best.is_some() {
            stop = InnerStop::Converged;
            break;
        }
    }

    if walk.best.is_none() {
        let last = walk.last.as_ref().map(|(o, _)| o.clone());
        for start in [Some(seed), last].into_iter().flatten() {
            let restored = restore(start, ch, params, params.rbs());
            walk.consider(&restored)?;
        }
    }

    if stop != InnerStop::GapClosed && cfg.local_rounds > 0 {
        if let Some((owners, sol)) = walk.best.take() {
            walk.best = Some(improve(owners, sol, gamma, ch, params, &mut walk.cache, cfg.local_rounds));
        }
    }

    let (owners, sol, violation) = match walk.best {
        Some((o, s)) => (o, s, None),
        None => {
            let (o, s) = walk.last.ok_or(Error::InvalidParameter {
                name: "l_max",
                reason: "no iterate evaluated",
            })?;
            let v = s.violation.clone();
            (o, s, v)
        }
    };
    Ok(InnerSolution {
        owners,
        powers: sol.powers,
        dual: sol.dual,
        rate: sol.rate,
        consumed: sol.consumed,
        primal: sol.objective,
        dual_bound: walk.bound,
        iterations,
        stop,
        violation,
    })
}

/// State of one inner solve: evaluated assignments, incumbent and bound.
struct Walk<'a> {
    gamma: f64,
    ch: &'a ChannelState,
    params: &'a SystemParams,
    cache: Evaluations,
    best: Option<(Vec<usize>, PowerSolution)>,
    last: Option<(Vec<usize>, PowerSolution)>,
    bound: f64,
}

impl Walk<'_> {
    /// Scores `owners`; true if it became the incumbent.
    fn consider(&mut self, owners: &[usize]) -> Result<bool> {
        let (sol, fresh) = evaluate(&mut self.cache, owners, self.gamma, self.ch, self.params);
        let sol = sol.clone();
        if fresh {
            self.bound = self.bound.min(dual_value(&sol.dual, self.gamma, self.ch, self.params)?);
        }
        let improved = sol.is_feasible()
            && self
                .best
                .as_ref()
                .map_or(true, |(_, b)| sol.objective > b.objective);
        if improved {
            self.best = Some((owners.to_vec(), sol.clone()));
        }
        self.last = Some((owners.to_vec(), sol));
        Ok(improved)
    }

    fn best_dual(&self) -> Option<DualState> {
        self.best.as_ref().map(|(_, s)| s.dual.clone())
    }

    fn gap_closed(&self, tol: f64) -> bool {
        self.best.as_ref().map_or(false, |(_, b)| {
            self.bound - b.objective <= tol * (b.rate + self.gamma * b.consumed)
        })
    }
}
