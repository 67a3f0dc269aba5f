//! Local improvement of an assignment by single-RB moves, pairwise swaps
//! and exchanges of two UEs' whole RB sets, each scored with the exact
//! power allocation, and a descent towards feasibility for assignments
//! that miss a rate floor or the budget.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::power::{floor_deficit, optimal_powers, PowerSolution};
use crate::channel::ChannelState;
use crate::model::SystemParams;

/// Exact allocations already computed at one `gamma`, keyed by owners.
pub type Evaluations = BTreeMap<Vec<usize>, PowerSolution>;

pub(crate) fn evaluate<'a>(
    cache: &'a mut Evaluations,
    owners: &[usize],
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> (&'a PowerSolution, bool) {
    let fresh = !cache.contains_key(owners);
    if fresh {
        cache.insert(owners.to_vec(), optimal_powers(owners, gamma, ch, params));
    }
    (&cache[owners], fresh)
}

fn better(candidate: &PowerSolution, incumbent: &PowerSolution) -> bool {
    let scale = incumbent.rate.abs().max(1.0);
    candidate.is_feasible() && candidate.objective > incumbent.objective + 1e-12 * scale
}

/// Hill-climbs from a feasible `(owners, sol)` until no move or swap
/// improves `C - gamma P`, or `max_rounds` sweeps have run.
///
/// Moves that hand an RB between two UEs whose rate floors are both slack
/// are only tried towards the higher CINR, since anything else lowers the
/// objective.
pub fn improve(
    mut owners: Vec<usize>,
    mut sol: PowerSolution,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
    cache: &mut Evaluations,
    max_rounds: usize,
) -> (Vec<usize>, PowerSolution) {
    let k_total = params.rbs();
    for _ in 0..max_rounds {
        let mut moved = false;
        for k in 0..k_total {
            for n in params.eligible_ues(k) {
                let m = owners[k];
                if n == m {
                    continue;
                }
                let slack = sol.dual.beta[n] == 0.0 && sol.dual.beta[m] == 0.0;
                if slack && ch.sigma(n, k) <= ch.sigma(m, k) {
                    continue;
                }
                owners[k] = n;
                let (cand, _) = evaluate(cache, &owners, gamma, ch, params);
                if better(cand, &sol) {
                    sol = cand.clone();
                    moved = true;
                } else {
                    owners[k] = m;
                }
            }
        }
        for k in 0..k_total {
            for j in k + 1..k_total {
                let (a, b) = (owners[k], owners[j]);
                if a == b || !params.eligible(b, k) || !params.eligible(a, j) {
                    continue;
                }
                owners[k] = b;
                owners[j] = a;
                let (cand, _) = evaluate(cache, &owners, gamma, ch, params);
                if better(cand, &sol) {
                    sol = cand.clone();
                    moved = true;
                } else {
                    owners[k] = a;
                    owners[j] = b;
                }
            }
        }
        for a in 0..params.ues() {
            for b in a + 1..params.ues() {
                let exchangeable = (0..k_total).all(|k| match owners[k] {
                    n if n == a => params.eligible(b, k),
                    n if n == b => params.eligible(a, k),
                    _ => true,
                });
                if !exchangeable {
                    continue;
                }
                let relabelled: Vec<usize> = owners
                    .iter()
                    .map(|&n| if n == a { b } else if n == b { a } else { n })
                    .collect();
                if relabelled == owners {
                    continue;
                }
                let (cand, _) = evaluate(cache, &relabelled, gamma, ch, params);
                if better(cand, &sol) {
                    sol = cand.clone();
                    owners = relabelled;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
    (owners, sol)
}

/// Moves and swaps RBs while that lowers [`floor_deficit`], until the
/// assignment is feasible or `max_rounds` sweeps have run.
pub fn restore(mut owners: Vec<usize>, ch: &ChannelState, params: &SystemParams, max_rounds: usize) -> Vec<usize> {
    let k_total = params.rbs();
    let mut deficit = floor_deficit(&owners, ch, params);
    for _ in 0..max_rounds {
        if deficit == (0.0, 0.0) {
            break;
        }
        let mut moved = false;
        for k in 0..k_total {
            for n in params.eligible_ues(k) {
                let m = owners[k];
                if n == m {
                    continue;
                }
                owners[k] = n;
                let cand = floor_deficit(&owners, ch, params);
                if cand < deficit {
                    deficit = cand;
                    moved = true;
                } else {
                    owners[k] = m;
                }
            }
        }
        for k in 0..k_total {
            for j in k + 1..k_total {
                let (a, b) = (owners[k], owners[j]);
                if a == b || !params.eligible(b, k) || !params.eligible(a, j) {
                    continue;
                }
                owners[k] = b;
                owners[j] = a;
                let cand = floor_deficit(&owners, ch, params);
                if cand < deficit {
                    deficit = cand;
                    moved = true;
                } else {
                    owners[k] = a;
                    owners[j] = b;
                }
            }
        }
        if !moved {
            break;
        }
    }
    owners
}
