//! Independent checkers for small instances: exhaustive search over RB
//! assignments, the duality gap expressed in EE terms, and a
//! finite-difference KKT audit.
//!
//! Nothing here reuses the optimizer's power allocation. The per-assignment
//! power problem is solved by nested bisection (per-RB stationarity inside
//! per-UE rate floors inside the budget multiplier) and then checked
//! against a dense grid scan.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::model::{rb_rate, DualState, RbAccess, SystemParams};
use crate::optimizer::power::floor_shortfalls;
use crate::optimizer::{solve_inner, EeSolution, InnerConfig, WarmStart};
use crate::system::SystemConfig;

pub const MAX_TINY_RBS: usize = 6;
pub const MAX_TINY_UES: usize = 3;
/// Largest `assignments * K * grid_points` the oracle will attempt.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;
pub const DEFAULT_GRID_POINTS: usize = 2000;

const BISECTION_STEPS: usize = 200;
const BISECTION_RTOL: f64 = 1e-13;
const DINKELBACH_RTOL: f64 = 1e-12;
const DINKELBACH_STEPS: usize = 100;

/// A problem small enough to enumerate every eligible assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    pub channel: ChannelState,
    pub params: SystemParams,
    /// Grid points per RB used to validate each power solution.
    pub grid_points: usize,
}

impl TinyInstance {
    pub fn new(channel: ChannelState, params: SystemParams, grid_points: usize) -> Result<Self> {
        params.check_dims(&channel)?;
        if params.rbs() > MAX_TINY_RBS {
            return Err(Error::DimensionMismatch {
                what: "tiny instance RBs",
                expected: MAX_TINY_RBS,
                found: params.rbs(),
            });
        }
        if params.ues() > MAX_TINY_UES {
            return Err(Error::DimensionMismatch {
                what: "tiny instance UEs",
                expected: MAX_TINY_UES,
                found: params.ues(),
            });
        }
        if grid_points < 2 {
            return Err(Error::InvalidParameter {
                name: "grid_points",
                reason: "at least two grid points are required",
            });
        }
        let inst = Self {
            channel,
            params,
            grid_points,
        };
        let size = inst.enumeration_size();
        if size > ENUMERATION_LIMIT {
            return Err(Error::EnumerationTooLarge {
                size,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(inst)
    }

    /// Snapshot `snapshot` of a deployment small enough to enumerate.
    pub fn from_config(sys: &SystemConfig, master_seed: u64, snapshot: u64, grid_points: usize) -> Result<Self> {
        let dep = sys.deployment()?;
        let ch = dep.snapshot(master_seed, snapshot)?;
        Self::new(ch, dep.params, grid_points)
    }

    /// Number of eligible assignments.
    pub fn assignment_count(&self) -> u128 {
        (0..self.params.rbs())
            .map(|k| self.params.eligible_ues(k).len() as u128)
            .product()
    }

    pub fn enumeration_size(&self) -> u128 {
        self.assignment_count() * self.params.rbs() as u128 * self.grid_points as u128
    }

    /// Every eligible owner list, in lexicographic order.
    pub fn assignments(&self) -> Vec<Vec<usize>> {
        let k_total = self.params.rbs();
        let ranges: Vec<core::ops::Range<usize>> =
            (0..k_total).map(|k| self.params.eligible_ues(k)).collect();
        if ranges.iter().any(|r| r.is_empty()) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.start).collect();
        loop {
            out.push(cur.clone());
            let mut k = k_total;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] < ranges[k].end {
                    break;
                }
                cur[k] = ranges[k].start;
            }
        }
    }
}

/// Global optimum found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub owners: Vec<usize>,
    pub powers: Vec<f64>,
    pub rate: f64,
    pub consumed: f64,
    pub assignments_checked: usize,
    pub feasible_assignments: usize,
}

impl OracleSolution {
    pub fn ee(&self) -> f64 {
        self.rate / self.consumed
    }
}

/// Proof that no allocation meets every rate floor under the S-FFR split.
///
/// A low-QoS UE's attainable rate depends only on which shared RBs it
/// holds, so every assignment of the shared RBs is enumerated with the
/// exclusive RBs spread over the high-QoS UEs. The instance is infeasible
/// when each one leaves some UE short of its floor even at the
/// interference caps. `Ok(false)` means no proof was found, not that the
/// instance is feasible.
pub fn proves_infeasible(ch: &ChannelState, params: &SystemParams) -> Result<bool> {
    if params.access != RbAccess::Sffr {
        return Err(Error::InvalidParameter {
            name: "access",
            reason: "the certificate relies on the S-FFR split",
        });
    }
    params.check_dims(ch)?;
    let exclusive = params.partition.exclusive();
    let shared = params.partition.shared();
    if params.n_high == 0 || params.n_low == 0 {
        return Ok(false);
    }
    if exclusive.len() < params.n_high && params.qos.eta_r > 0.0 {
        return Ok(true);
    }
    let size = (params.n_low as u128).checked_pow(shared.len() as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut owners = alloc::vec![0; params.rbs()];
    for (i, &k) in exclusive.iter().enumerate() {
        owners[k] = i % params.n_high;
    }
    for code in 0..size {
        let mut c = code;
        for &k in shared {
            owners[k] = params.n_high + (c % params.n_low as u128) as usize;
            c /= params.n_low as u128;
        }
        let short = floor_shortfalls(&owners, ch, params);
        if short[params.n_high..].iter().all(|&s| s <= 0.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Highest EE over every eligible assignment. Ties keep the
/// lexicographically first assignment.
pub fn brute_force_ee(inst: &TinyInstance) -> Result<OracleSolution> {
    let mut best: Option<OracleSolution> = None;
    let mut checked = 0;
    let mut feasible = 0;
    for owners in inst.assignments() {
        checked += 1;
        let Some(sol) = assignment_ee(inst, &owners) else { continue };
        feasible += 1;
        let ee = sol.rate / sol.consumed;
        if best.as_ref().map_or(true, |b| ee > b.ee()) {
            best = Some(OracleSolution {
                owners,
                powers: sol.powers,
                rate: sol.rate,
                consumed: sol.consumed,
                assignments_checked: 0,
                feasible_assignments: 0,
            });
        }
    }
    let mut best = best.ok_or(Error::InvalidParameter {
        name: "instance",
        reason: "no eligible assignment can meet the constraints",
    })?;
    best.assignments_checked = checked;
    best.feasible_assignments = feasible;
    Ok(best)
}

/// `max C - gamma P` over every eligible assignment, or `None` when no
/// assignment is feasible.
pub fn brute_force_subtractive(inst: &TinyInstance, gamma: f64) -> Option<f64> {
    inst.assignments()
        .iter()
        .filter_map(|o| PowerProblem::new(inst, o).solve(gamma))
        .map(|s| s.rate - gamma * s.consumed)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

#[derive(Debug, Clone, PartialEq)]
struct PowerPoint {
    powers: Vec<f64>,
    rate: f64,
    consumed: f64,
}

/// Dinkelbach on one fixed assignment.
fn assignment_ee(inst: &TinyInstance, owners: &[usize]) -> Option<PowerPoint> {
    let problem = PowerProblem::new(inst, owners);
    let mut gamma = 0.0;
    let mut point = problem.solve(gamma)?;
    for _ in 0..DINKELBACH_STEPS {
        let f = point.rate - gamma * point.consumed;
        if f <= DINKELBACH_RTOL * (point.rate + gamma * point.consumed) {
            break;
        }
        gamma = point.rate / point.consumed;
        let next = problem.solve(gamma)?;
        if next.rate - gamma * next.consumed < 0.0 {
            break;
        }
        point = next;
    }
    Some(point)
}

/// `max C - gamma P` over the powers of one assignment.
struct PowerProblem<'a> {
    inst: &'a TinyInstance,
    owners: &'a [usize],
    /// Per-RB power ceiling: the interference cap on Ω2 and the budget.
    ceiling: Vec<f64>,
    held: Vec<Vec<usize>>,
}

impl<'a> PowerProblem<'a> {
    fn new(inst: &'a TinyInstance, owners: &'a [usize]) -> Self {
        let p = &inst.params;
        let ch = &inst.channel;
        let ceiling = (0..p.rbs())
            .map(|k| {
                let g = ch.g_r2m(k);
                if p.partition.is_shared(k) && g > 0.0 {
                    (p.delta0 / g).min(p.power.p_max)
                } else {
                    p.power.p_max
                }
            })
            .collect();
        let mut held = alloc::vec![Vec::new(); p.ues()];
        for (k, &n) in owners.iter().enumerate() {
            held[n].push(k);
        }
        Self {
            inst,
            owners,
            ceiling,
            held,
        }
    }

    fn b0(&self) -> f64 {
        self.inst.channel.rb_bandwidth_hz()
    }

    fn sigma(&self, k: usize) -> f64 {
        self.inst.channel.sigma(self.owners[k], k)
    }

    /// Maximiser of `weight * B0 log2(1 + sigma p) - price * p` on
    /// `[0, ceiling]`, by bisection on the derivative.
    fn rb_power(&self, k: usize, weight: f64, price: f64) -> f64 {
        let sigma = self.sigma(k);
        let ub = self.ceiling[k];
        if !(sigma > 0.0) || ub <= 0.0 {
            return 0.0;
        }
        let slope = |p: f64| weight * self.b0() * sigma / (LN_2 * (1.0 + sigma * p)) - price;
        if slope(0.0) <= 0.0 {
            return 0.0;
        }
        if slope(ub) >= 0.0 {
            return ub;
        }
        let (mut lo, mut hi) = (0.0, ub);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECTION_RTOL * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn ue_rate(&self, n: usize, weight: f64, price: f64) -> f64 {
        self.held[n]
            .iter()
            .map(|&k| rb_rate(self.b0(), self.sigma(k), self.rb_power(k, weight, price)))
            .sum()
    }

    /// Smallest `1 + beta` at which UE `n` meets its floor at this price.
    fn weight_for(&self, n: usize, price: f64) -> Option<f64> {
        let floor = self.inst.params.rate_floor(n);
        if floor <= 0.0 || self.ue_rate(n, 1.0, price) >= floor {
            return Some(1.0);
        }
        let mut lo = 1.0;
        let mut hi = 2.0;
        while self.ue_rate(n, hi, price) < floor {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return None;
            }
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.ue_rate(n, mid, price) >= floor {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= BISECTION_RTOL * hi {
                break;
            }
        }
        Some(hi)
    }

    /// Powers meeting every floor at budget multiplier `nu`.
    fn powers_at(&self, gamma: f64, nu: f64) -> Option<Vec<f64>> {
        let price = gamma * self.inst.params.power.phi_eff + nu;
        let weights: Option<Vec<f64>> = (0..self.inst.params.ues())
            .map(|n| self.weight_for(n, price))
            .collect();
        let weights = weights?;
        Some(
            self.owners
                .iter()
                .enumerate()
                .map(|(k, &n)| self.rb_power(k, weights[n], price))
                .collect(),
        )
    }

    fn solve(&self, gamma: f64) -> Option<PowerPoint> {
        let p_max = self.inst.params.power.p_max;
        let total = |p: &[f64]| p.iter().sum::<f64>();
        let mut powers = self.powers_at(gamma, 0.0)?;
        if total(&powers) > p_max * (1.0 + 1e-12) {
            // Budget binds: raise nu until the total fits.
            let scale = self.b0() / (LN_2 * p_max);
            let mut lo = 0.0;
            let mut hi = scale;
            loop {
                let p = self.powers_at(gamma, hi)?;
                if total(&p) <= p_max {
                    powers = p;
                    break;
                }
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    return None;
                }
            }
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                let p = self.powers_at(gamma, mid)?;
                if total(&p) <= p_max {
                    hi = mid;
                    powers = p;
                } else {
                    lo = mid;
                }
                if hi - lo <= BISECTION_RTOL * hi {
                    break;
                }
            }
        }
        let powers = self.grid_check(gamma, powers);
        self.evaluate(powers)
    }

    /// Replaces an RB's power by a grid point when the grid scores better
    /// on the per-RB objective without breaking any constraint.
    fn grid_check(&self, gamma: f64, mut powers: Vec<f64>) -> Vec<f64> {
        let price = gamma * self.inst.params.power.phi_eff;
        let g = self.inst.grid_points;
        for k in 0..powers.len() {
            let sigma = self.sigma(k);
            let term = |p: f64| rb_rate(self.b0(), sigma, p) - price * p;
            let base = term(powers[k]);
            let ub = self.ceiling[k];
            let mut best = powers[k];
            let mut best_val = base;
            for j in 0..g {
                let p = ub * j as f64 / (g - 1) as f64;
                let v = term(p);
                if v > best_val && self.keeps_feasible(&powers, k, p) {
                    best = p;
                    best_val = v;
                }
            }
            powers[k] = best;
        }
        powers
    }

    fn keeps_feasible(&self, powers: &[f64], k: usize, p: f64) -> bool {
        let total: f64 = powers.iter().sum::<f64>() - powers[k] + p;
        if total > self.inst.params.power.p_max {
            return false;
        }
        let n = self.owners[k];
        let floor = self.inst.params.rate_floor(n);
        let rate: f64 = self.held[n]
            .iter()
            .map(|&j| rb_rate(self.b0(), self.sigma(j), if j == k { p } else { powers[j] }))
            .sum();
        rate >= floor
    }

    fn evaluate(&self, powers: Vec<f64>) -> Option<PowerPoint> {
        let params = &self.inst.params;
        let rate = powers
            .iter()
            .enumerate()
            .map(|(k, &p)| rb_rate(self.b0(), self.sigma(k), p))
            .sum();
        let consumed = params.power.phi_eff * powers.iter().sum::<f64>() + params.power.static_power();
        for n in 0..params.ues() {
            let r: f64 = self.held[n]
                .iter()
                .map(|&k| rb_rate(self.b0(), self.sigma(k), powers[k]))
                .sum();
            if r < params.rate_floor(n) * (1.0 - 1e-9) {
                return None;
            }
        }
        Some(PowerPoint {
            powers,
            rate,
            consumed,
        })
    }
}

/// Duality gap of a solved instance, expressed in EE terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// EE of the returned allocation, bit/J.
    pub gamma_primal: f64,
    /// Smallest `gamma` at which the inner dual bound reaches zero; an
    /// upper bound on the optimal EE.
    pub gamma_dual: f64,
}

impl GapReport {
    /// `(gamma_dual - gamma_primal) / gamma_dual`.
    pub fn relative(&self) -> f64 {
        (self.gamma_dual - self.gamma_primal) / self.gamma_dual.abs()
    }
}

/// Finds the root of the inner dual bound `D(gamma)` above the solution's
/// EE by bracketing and bisection.
pub fn duality_gap(
    ch: &ChannelState,
    params: &SystemParams,
    sol: &EeSolution,
    inner: &InnerConfig,
) -> Result<GapReport> {
    let gamma_primal = sol.ee();
    let warm = WarmStart {
        owners: Some(sol.owners.clone()),
        dual: Some(sol.dual.clone()),
    };
    let bound = |gamma: f64| solve_inner(gamma, ch, params, inner, &warm).map(|s| s.dual_bound);
    let scale = sol.rate + gamma_primal * sol.consumed;
    let settled = |d: f64| d <= 1e-12 * scale;
    if settled(bound(gamma_primal)?) {
        return Ok(GapReport {
            gamma_primal,
            gamma_dual: gamma_primal,
        });
    }
    let mut lo = gamma_primal;
    let mut step = 1e-4 * gamma_primal.max(f64::MIN_POSITIVE);
    let mut hi = lo + step;
    let mut tries = 0;
    while !settled(bound(hi)?) {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        tries += 1;
        if tries > 200 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "dual bound stays positive",
            });
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if settled(bound(mid)?) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-7 * hi {
            break;
        }
    }
    Ok(GapReport {
        gamma_primal,
        gamma_dual: hi,
    })
}

/// Stationarity audit of the per-RB Lagrangian terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktReport {
    /// Largest `|dL/dp|` over RBs with positive power, relative to the
    /// marginal rate gain at that power.
    pub max_interior: f64,
    /// Largest positive one-sided derivative at `p = 0`, relative to the
    /// marginal rate gain at zero power.
    pub max_boundary: f64,
    pub interior_checked: usize,
    pub boundary_checked: usize,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.max_interior.max(self.max_boundary)
    }
}

/// Finite-difference KKT check of `powers` against the multipliers `dual`
/// at `gamma`. Central differences with step `1e-6 p` on RBs with power,
/// a forward difference at zero power.
pub fn kkt_check(
    owners: &[usize],
    powers: &[f64],
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> KktReport {
    let b0 = ch.rb_bandwidth_hz();
    let mut report = KktReport::default();
    for (k, (&n, &p)) in owners.iter().zip(powers).enumerate() {
        let sigma = ch.sigma(n, k);
        if !(sigma > 0.0) {
            continue;
        }
        let weight = 1.0 + dual.beta[n];
        let lambda = if params.partition.is_shared(k) { dual.lambda[k] } else { 0.0 };
        let price = gamma * params.power.phi_eff + lambda * ch.g_r2m(k) + dual.nu;
        let term = |x: f64| weight * rb_rate(b0, sigma, x) - price * x;
        let gain = |x: f64| weight * b0 * sigma / (LN_2 * (1.0 + sigma * x));
        if p > 0.0 {
            let h = 1e-6 * p;
            let d = (term(p + h) - term(p - h)) / (2.0 * h);
            report.max_interior = report.max_interior.max(d.abs() / gain(p));
            report.interior_checked += 1;
        } else {
            let h = 1e-9 * params.power.p_max;
            let d = (term(h) - term(0.0)) / h;
            report.max_boundary = report.max_boundary.max(d.max(0.0) / gain(0.0));
            report.boundary_checked += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PowerModel, QosProfile, RbAccess, SffrPartition};
    use crate::optimizer::{optimal_powers, solve_ee, OuterConfig};

    fn params(n_high: usize, n_low: usize, k: usize, ratio: f64, floors: (f64, f64)) -> SystemParams {
        SystemParams {
            n_high,
            n_low,
            partition: SffrPartition::from_ratio(k, ratio, 1.0).unwrap(),
            qos: QosProfile::new(floors.0, floors.1).unwrap(),
            power: PowerModel::new(2.0, 0.1, 0.2, 1.0).unwrap(),
            delta0: 0.05,
            access: RbAccess::Sffr,
        }
    }

    fn instance(p: SystemParams, sigma: Vec<f64>, g: Vec<f64>) -> TinyInstance {
        let ch = ChannelState::from_parts(p.ues(), p.rbs(), 1.0, sigma, g).unwrap();
        TinyInstance::new(ch, p, DEFAULT_GRID_POINTS).unwrap()
    }

    #[test]
    fn single_rb_matches_scan() {
        let p = params(1, 0, 1, 1.0, (0.0, 0.0));
        let inst = instance(p, alloc::vec![20.0], alloc::vec![0.0]);
        let sol = brute_force_ee(&inst).unwrap();
        let ee = |x: f64| rb_rate(1.0, 20.0, x) / (2.0 * x + 0.3);
        let scan = (1..=200_000).map(|i| ee(i as f64 * 5e-6)).fold(0.0, f64::max);
        assert!((sol.ee() - scan).abs() <= 1e-6 * scan, "{} vs {scan}", sol.ee());
        assert!(sol.ee() >= scan * (1.0 - 1e-12));
    }

    #[test]
    fn relabelled_ues_give_same_ee() {
        let p = params(2, 0, 3, 1.0, (0.2, 0.2));
        let a = instance(p.clone(), alloc::vec![5.0, 1.0, 3.0, 2.0, 6.0, 0.5], alloc::vec![0.0; 3]);
        let b = instance(p, alloc::vec![2.0, 6.0, 0.5, 5.0, 1.0, 3.0], alloc::vec![0.0; 3]);
        let (ea, eb) = (brute_force_ee(&a).unwrap().ee(), brute_force_ee(&b).unwrap().ee());
        assert!((ea - eb).abs() <= 1e-9 * ea);
    }

    #[test]
    fn enumerates_only_eligible_assignments() {
        let p = params(2, 1, 4, 0.5, (0.1, 0.1));
        let inst = instance(p, alloc::vec![1.0; 12], alloc::vec![0.1; 4]);
        assert_eq!(inst.assignment_count(), 4);
        let all = inst.assignments();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|o| o[2] == 2 && o[3] == 2 && o[0] < 2 && o[1] < 2));
    }

    #[test]
    fn guard_rejects_large_enumerations() {
        let mut p = params(2, 1, 6, 0.5, (0.1, 0.1));
        p.access = RbAccess::Open;
        let ch = ChannelState::from_parts(3, 6, 1.0, alloc::vec![1.0; 18], alloc::vec![0.0; 6]).unwrap();
        let err = TinyInstance::new(ch, p, 20_000).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { .. }));
    }

    #[test]
    fn matches_exact_powers_on_fixed_assignment() {
        let p = params(1, 1, 4, 0.5, (0.5, 0.3));
        let inst = instance(p.clone(), alloc::vec![8.0, 3.0, 0.0, 0.0, 0.0, 0.0, 4.0, 9.0], alloc::vec![0.0, 0.0, 0.2, 1.5]);
        let owners = [0, 0, 1, 1];
        let oracle = assignment_ee(&inst, &owners).unwrap();
        let gamma = oracle.rate / oracle.consumed;
        let exact = optimal_powers(&owners, gamma, &inst.channel, &p);
        assert!((exact.objective - 0.0).abs() <= 1e-7 * exact.rate);
        for (a, b) in oracle.powers.iter().zip(&exact.powers) {
            assert!((a - b).abs() <= 1e-6 * p.power.p_max, "{a} vs {b}");
        }
    }

    #[test]
    fn finer_grid_keeps_optimum() {
        let p = params(1, 1, 4, 0.5, (0.5, 0.3));
        let sigma = alloc::vec![8.0, 3.0, 1.0, 2.0, 0.5, 0.7, 4.0, 9.0];
        let g = alloc::vec![0.0, 0.0, 0.2, 1.5];
        let mut inst = instance(p, sigma, g);
        let coarse = brute_force_ee(&inst).unwrap().ee();
        inst.grid_points *= 2;
        let fine = brute_force_ee(&inst).unwrap().ee();
        assert!((coarse - fine).abs() <= 5e-3 * fine);
    }

    #[test]
    fn optimizer_matches_oracle_on_small_instance() {
        let p = params(2, 1, 5, 0.6, (0.4, 0.2));
        let sigma = alloc::vec![6.0, 1.0, 2.5, 3.0, 0.4, 2.0, 7.0, 0.3, 1.0, 5.0, 0.1, 0.2, 0.9, 4.0, 2.0];
        let g = alloc::vec![0.0, 0.0, 0.0, 0.3, 0.6];
        let inst = instance(p.clone(), sigma, g);
        let oracle = brute_force_ee(&inst).unwrap();
        let sol = solve_ee(&inst.channel, &p, &OuterConfig::default(), &InnerConfig::default()).unwrap();
        assert!(sol.ee() <= oracle.ee() * (1.0 + 1e-6));
        assert!(sol.ee() >= oracle.ee() * 0.98);
    }

    #[test]
    fn kkt_accepts_exact_and_flags_perturbed_powers() {
        let p = params(1, 1, 4, 0.5, (0.5, 0.3));
        let ch = ChannelState::from_parts(2, 4, 1.0, alloc::vec![8.0, 3.0, 0.0, 0.0, 0.0, 0.0, 4.0, 9.0], alloc::vec![0.0, 0.0, 0.2, 1.5])
            .unwrap();
        let owners = [0, 0, 1, 1];
        let sol = optimal_powers(&owners, 2.0, &ch, &p);
        let report = kkt_check(&owners, &sol.powers, &sol.dual, 2.0, &ch, &p);
        assert!(report.max_residual() < 1e-6, "{report:?}");
        assert!(report.interior_checked > 0);
        let bumped: Vec<f64> = sol.powers.iter().map(|x| x * 1.1).collect();
        let report = kkt_check(&owners, &bumped, &sol.dual, 2.0, &ch, &p);
        assert!(report.max_interior > 1e-3, "{report:?}");
    }

    #[test]
    fn zero_power_is_checked_one_sided() {
        let p = params(1, 0, 2, 1.0, (0.0, 0.0));
        let ch = ChannelState::from_parts(1, 2, 1.0, alloc::vec![10.0, 0.01], alloc::vec![0.0; 2]).unwrap();
        let owners = [0, 0];
        let sol = optimal_powers(&owners, 5.0, &ch, &p);
        assert_eq!(sol.powers[1], 0.0);
        let report = kkt_check(&owners, &sol.powers, &sol.dual, 5.0, &ch, &p);
        assert_eq!(report.boundary_checked, 1);
        assert!(report.max_boundary == 0.0);
    }

    #[test]
    fn dual_bound_dominates_every_feasible_primal() {
        let p = params(2, 1, 5, 0.6, (0.4, 0.2));
        let sigma = alloc::vec![6.0, 1.0, 2.5, 3.0, 0.4, 2.0, 7.0, 0.3, 1.0, 5.0, 0.1, 0.2, 0.9, 4.0, 2.0];
        let inst = instance(p.clone(), sigma, alloc::vec![0.0, 0.0, 0.0, 0.3, 0.6]);
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let best = brute_force_subtractive(&inst, gamma).unwrap();
            let d = solve_inner(gamma, &inst.channel, &p, &InnerConfig::default(), &WarmStart::default())
                .unwrap()
                .dual_bound;
            assert!(d >= best - 1e-9 * best.abs().max(1.0), "gamma {gamma}: {d} < {best}");
        }
    }

    #[test]
    fn gap_report_brackets_the_optimum() {
        let p = params(2, 1, 5, 0.6, (0.4, 0.2));
        let sigma = alloc::vec![6.0, 1.0, 2.5, 3.0, 0.4, 2.0, 7.0, 0.3, 1.0, 5.0, 0.1, 0.2, 0.9, 4.0, 2.0];
        let inst = instance(p.clone(), sigma, alloc::vec![0.0, 0.0, 0.0, 0.3, 0.6]);
        let inner = InnerConfig::default();
        let sol = solve_ee(&inst.channel, &p, &OuterConfig::default(), &inner).unwrap();
        let gap = duality_gap(&inst.channel, &p, &sol, &inner).unwrap();
        let oracle = brute_force_ee(&inst).unwrap().ee();
        assert!(gap.gamma_primal <= oracle * (1.0 + 1e-6));
        assert!(gap.gamma_dual >= oracle * (1.0 - 1e-6));
        assert!(gap.relative() >= 0.0);
    }

    #[test]
    fn edge_ues_on_swapped_shared_rbs_are_found() {
        // Each low-QoS UE meets its floor only on one particular shared RB
        // at close to the interference cap.
        let mut c = SystemConfig::default();
        c.k_total = 6;
        c.bandwidth_hz = 1.2e6;
        c.n_high = 1;
        c.n_low = 2;
        c.omega1_ratio = 0.5;
        let inst = TinyInstance::from_config(&c, 1, 524, 400).unwrap();
        let orc = brute_force_ee(&inst).unwrap();
        let sol = solve_ee(&inst.channel, &inst.params, &OuterConfig::default(), &InnerConfig::default()).unwrap();
        assert!(sol.ee() >= orc.ee() * 0.99, "{} vs {}", sol.ee(), orc.ee());
    }

    #[test]
    fn infeasibility_certificates() {
        let dep = SystemConfig::default().deployment().unwrap();
        // A low-QoS UE that misses its floor on every shared RB at the cap.
        let ch = dep.snapshot(1, 249).unwrap();
        assert!(proves_infeasible(&ch, &dep.params).unwrap());
        // Every UE could meet its floor on its own, but no split of the
        // shared RBs serves all three.
        let ch = dep.snapshot(1, 702).unwrap();
        assert!(proves_infeasible(&ch, &dep.params).unwrap());
        let ch = dep.snapshot(1, 0).unwrap();
        assert!(solve_ee(&ch, &dep.params, &OuterConfig::default(), &InnerConfig::default()).is_ok());
        assert!(!proves_infeasible(&ch, &dep.params).unwrap());
    }
}
