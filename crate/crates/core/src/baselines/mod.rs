//! Reference allocators the optimizer is compared against, and the network
//! scenarios used for architecture comparisons.
//!
//! Both allocators keep the Dinkelbach outer loop so their traces line up
//! with the optimizer's, and both are checked against the same constraint
//! set.

pub mod scenario;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::model::{
    check_feasibility, rb_rate, AllocationMatrix, DualState, PowerMatrix, SystemParams,
};
use crate::optimizer::greedy::{max_rate_owners, repair_owners};
pub use crate::optimizer::greedy::sequential_owners;
use crate::optimizer::{
    dinkelbach, optimal_powers, solve_ee, EeSolution, InnerConfig, InnerSolution, InnerStop,
    OuterConfig, WarmStart,
};

/// Allocation policy selectable from the command line.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Optimal,
    FixedPower,
    SequentialRb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Optimal, Algorithm::SequentialRb, Algorithm::FixedPower];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Optimal => "optimal",
            Algorithm::FixedPower => "fixed-power",
            Algorithm::SequentialRb => "sequential-rb",
        }
    }

    pub fn solve(
        self,
        ch: &ChannelState,
        params: &SystemParams,
        outer: &OuterConfig,
        inner: &InnerConfig,
    ) -> Result<EeSolution> {
        match self {
            Algorithm::Optimal => solve_ee(ch, params, outer, inner),
            Algorithm::FixedPower => solve_fixed_power(ch, params, outer),
            Algorithm::SequentialRb => solve_sequential_rb(ch, params, outer),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Algorithm::Optimal),
            "fixed-power" => Ok(Algorithm::FixedPower),
            "sequential-rb" => Ok(Algorithm::SequentialRb),
            _ => Err(Error::InvalidParameter {
                name: "algorithm",
                reason: "expected one of optimal, fixed-power, sequential-rb",
            }),
        }
    }
}

/// Per-RB powers of the fixed-power policy: `p_max / K` everywhere, except
/// on Ω2 RBs where that level would break the interference cap, which are
/// left silent.
pub fn fixed_power_levels(ch: &ChannelState, params: &SystemParams) -> Vec<f64> {
    let even = params.power.p_max / params.rbs() as f64;
    (0..params.rbs())
        .map(|k| {
            if params.partition.is_shared(k) && even * ch.g_r2m(k) > params.delta0 {
                0.0
            } else {
                even
            }
        })
        .collect()
}

/// Fixed equal power per RB with a rate-greedy assignment.
///
/// Each RB goes to the eligible UE with the highest rate at the fixed
/// level, then RBs are moved towards UEs below their rate floor. Neither
/// step depends on `gamma`, so the outer loop confirms in two iterations.
pub fn solve_fixed_power(
    ch: &ChannelState,
    params: &SystemParams,
    outer: &OuterConfig,
) -> Result<EeSolution> {
    params.check_dims(ch)?;
    let b0 = ch.rb_bandwidth_hz();
    let powers = fixed_power_levels(ch, params);
    let rate_of = |n: usize, k: usize| rb_rate(b0, ch.sigma(n, k), powers[k]);
    let mut owners = max_rate_owners(params, rate_of)?;
    repair_owners(&mut owners, params, rate_of);

    let fixed = evaluate_fixed(&owners, &powers, ch, params)?;
    let mut solver = |gamma: f64, _: &WarmStart| -> Result<InnerSolution> {
        let mut sol = fixed.clone();
        sol.primal = sol.rate - gamma * sol.consumed;
        sol.dual_bound = sol.primal;
        Ok(sol)
    };
    dinkelbach(&mut solver, outer)
}

/// Sequential RB assignment with exact power allocation for that
/// assignment at every Dinkelbach step.
pub fn solve_sequential_rb(
    ch: &ChannelState,
    params: &SystemParams,
    outer: &OuterConfig,
) -> Result<EeSolution> {
    params.check_dims(ch)?;
    let owners = sequential_owners(params)?;
    let mut solver = |gamma: f64, _: &WarmStart| -> Result<InnerSolution> {
        let sol = optimal_powers(&owners, gamma, ch, params);
        Ok(InnerSolution {
            owners: owners.clone(),
            powers: sol.powers,
            dual: sol.dual,
            rate: sol.rate,
            consumed: sol.consumed,
            primal: sol.objective,
            dual_bound: sol.objective,
            iterations: 1,
            stop: InnerStop::Converged,
            violation: sol.violation,
        })
    };
    dinkelbach(&mut solver, outer)
}

fn evaluate_fixed(
    owners: &[usize],
    powers: &[f64],
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<InnerSolution> {
    let slots: Vec<Option<usize>> = owners.iter().copied().map(Some).collect();
    let a = AllocationMatrix::from_owners(params.ues(), &slots);
    let p = PowerMatrix::from_rb_powers(params.ues(), &slots, powers);
    let report = check_feasibility(&a, &p, ch, params)?;
    let b0 = ch.rb_bandwidth_hz();
    let rate = owners
        .iter()
        .enumerate()
        .map(|(k, &n)| rb_rate(b0, ch.sigma(n, k), powers[k]))
        .sum();
    let consumed = params.power.phi_eff * powers.iter().sum::<f64>() + params.power.static_power();
    Ok(InnerSolution {
        owners: owners.to_vec(),
        powers: powers.to_vec(),
        dual: DualState::zeros(params.ues(), params.rbs()),
        rate,
        consumed,
        primal: rate,
        dual_bound: rate,
        iterations: 1,
        stop: InnerStop::Converged,
        violation: report.first_violation(),
    })
}
