//! Greedy and round-robin RB assignments, used to seed the dual walk and
//! by the baselines.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{RbAccess, SystemParams};

/// Assigns every RB to the eligible UE with the largest `rate_of(n, k)`,
/// lowest index on ties.
pub fn max_rate_owners<F>(params: &SystemParams, rate_of: F) -> Result<Vec<usize>>
where
    F: Fn(usize, usize) -> f64,
{
    (0..params.rbs())
        .map(|k| {
            let mut best: Option<(usize, f64)> = None;
            for n in params.eligible_ues(k) {
                let r = rate_of(n, k);
                if best.map_or(true, |(_, b)| r > b) {
                    best = Some((n, r));
                }
            }
            best.map(|(n, _)| n).ok_or(Error::EmptyEligibleSet { rb: k })
        })
        .collect()
}

/// Moves RBs towards UEs whose estimated rate misses their floor.
///
/// Each step serves the UE with the largest relative shortfall by taking
/// the RB it values most from a UE that stays above its own floor without
/// it. Stops when every floor is met or no such move exists.
pub fn repair_owners<F>(owners: &mut [usize], params: &SystemParams, rate_of: F)
where
    F: Fn(usize, usize) -> f64,
{
    let ues = params.ues();
    let mut est = vec![0.0; ues];
    for (k, &n) in owners.iter().enumerate() {
        est[n] += rate_of(n, k);
    }
    for _ in 0..owners.len() * ues.max(1) {
        let needy = (0..ues)
            .filter(|&n| params.rate_floor(n) > 0.0 && est[n] < params.rate_floor(n))
            .map(|n| (n, (params.rate_floor(n) - est[n]) / params.rate_floor(n)))
            .fold(None, |acc: Option<(usize, f64)>, (n, s)| match acc {
                Some((_, b)) if b >= s => acc,
                _ => Some((n, s)),
            });
        let Some((n, _)) = needy else { return };
        let mut take: Option<(usize, f64)> = None;
        for k in 0..owners.len() {
            let m = owners[k];
            if m == n || !params.eligible(n, k) {
                continue;
            }
            if est[m] - rate_of(m, k) < params.rate_floor(m) {
                continue;
            }
            let r = rate_of(n, k);
            if r > 0.0 && take.map_or(true, |(_, b)| r > b) {
                take = Some((k, r));
            }
        }
        let Some((k, r)) = take else { return };
        let m = owners[k];
        est[m] -= rate_of(m, k);
        est[n] += r;
        owners[k] = n;
    }
}

/// Round-robin owners: Ω1 RBs cycle through the high-QoS UEs and Ω2 RBs
/// through the low-QoS UEs, both in RB index order. Under open access all
/// RBs cycle through all UEs.
pub fn sequential_owners(params: &SystemParams) -> Result<Vec<usize>> {
    if params.access == RbAccess::Open {
        if params.ues() == 0 {
            return Err(Error::EmptyEligibleSet { rb: 0 });
        }
        return Ok((0..params.rbs()).map(|k| k % params.ues()).collect());
    }
    let mut owners = alloc::vec![0; params.rbs()];
    let groups = [
        (params.partition.exclusive(), 0, params.n_high),
        (params.partition.shared(), params.n_high, params.n_low),
    ];
    for (rbs, first, count) in groups {
        for (i, &k) in rbs.iter().enumerate() {
            if count == 0 {
                return Err(Error::EmptyEligibleSet { rb: k });
            }
            owners[k] = first + i % count;
        }
    }
    Ok(owners)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PowerModel, QosProfile, RbAccess, SffrPartition};

    fn params(n_high: usize, n_low: usize, k: usize, ratio: f64) -> SystemParams {
        SystemParams {
            n_high,
            n_low,
            partition: SffrPartition::from_ratio(k, ratio, 1.0).unwrap(),
            qos: QosProfile::new(1.0, 0.5).unwrap(),
            power: PowerModel::new(1.0, 0.1, 0.1, 1.0).unwrap(),
            delta0: 1.0,
            access: RbAccess::Sffr,
        }
    }

    #[test]
    fn dominant_ue_wins_everything_then_shares() {
        let p = params(2, 0, 4, 1.0);
        let rate = |n: usize, _k: usize| if n == 0 { 3.0 } else { 2.0 };
        let mut owners = max_rate_owners(&p, rate).unwrap();
        assert_eq!(owners, vec![0, 0, 0, 0]);
        repair_owners(&mut owners, &p, rate);
        assert_eq!(owners.iter().filter(|&&n| n == 1).count(), 1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = params(1, 2, 3, 0.34);
        let owners = max_rate_owners(&p, |_, _| 1.0).unwrap();
        assert_eq!(owners, vec![0, 1, 1]);
    }

    #[test]
    fn repair_never_starves_a_donor() {
        let p = params(2, 0, 2, 1.0);
        let rate = |n: usize, _k: usize| if n == 0 { 0.6 } else { 0.1 };
        let mut owners = max_rate_owners(&p, rate).unwrap();
        repair_owners(&mut owners, &p, rate);
        // UE 0 needs both RBs to reach its floor, so nothing moves.
        assert_eq!(owners, vec![0, 0]);
    }
}
