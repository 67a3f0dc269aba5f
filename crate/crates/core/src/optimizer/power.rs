//! Exact power allocation for a fixed RB assignment.
//!
//! With the owners fixed the subtractive problem is concave in the powers,
//! so its KKT system can be solved directly: every RB sits on a water
//! level `w_n = (1 + beta_n) * omega0`, clipped to the interference cap on
//! Ω2. The base level `omega0` is set by the power budget and each UE's
//! own level by its rate floor. Both solve piecewise closed-form
//! equations, after which the multipliers follow in closed form.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::channel::ChannelState;
use crate::model::{rb_rate, DualState, SystemParams, Violation};

/// Exact allocation for one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    /// Per-RB transmit power of the owner, W.
    pub powers: Vec<f64>,
    /// KKT multipliers certifying the allocation.
    pub dual: DualState,
    /// Sum rate, bit/s.
    pub rate: f64,
    /// Consumed power `phi * sum p + static`, W.
    pub consumed: f64,
    /// `rate - gamma * consumed`.
    pub objective: f64,
    /// First constraint the assignment cannot meet, if any.
    pub violation: Option<Violation>,
}

impl PowerSolution {
    pub fn is_feasible(&self) -> bool {
        self.violation.is_none()
    }

    pub fn ee(&self) -> f64 {
        self.rate / self.consumed
    }
}

/// Per-RB data for one owner list.
struct Slots {
    owner: Vec<usize>,
    inv_sigma: Vec<f64>,
    /// `delta0 / g_k` on Ω2, infinite on Ω1.
    cap: Vec<f64>,
    /// RBs held by each UE.
    held: Vec<Vec<usize>>,
}

impl Slots {
    fn new(owners: &[usize], ch: &ChannelState, params: &SystemParams) -> Self {
        let mut held = vec![Vec::new(); params.ues()];
        let mut inv_sigma = Vec::with_capacity(owners.len());
        let mut cap = Vec::with_capacity(owners.len());
        for (k, &n) in owners.iter().enumerate() {
            held[n].push(k);
            let s = ch.sigma(n, k);
            inv_sigma.push(if s > 0.0 { 1.0 / s } else { f64::INFINITY });
            let g = ch.g_r2m(k);
            cap.push(if params.partition.is_shared(k) && g > 0.0 {
                params.delta0 / g
            } else {
                f64::INFINITY
            });
        }
        Self {
            owner: owners.to_vec(),
            inv_sigma,
            cap,
            held,
        }
    }

    fn power_at(&self, k: usize, level: f64) -> f64 {
        if self.inv_sigma[k].is_infinite() {
            return 0.0;
        }
        (level - self.inv_sigma[k]).max(0.0).min(self.cap[k])
    }

    fn ue_rate(&self, n: usize, level: f64, b0: f64) -> f64 {
        self.held[n]
            .iter()
            .map(|&k| rb_rate(b0, 1.0 / self.inv_sigma[k], self.power_at(k, level)))
            .sum()
    }

    /// Highest level that still changes UE `n`'s powers; infinite when it
    /// holds an uncapped usable RB.
    fn saturation_level(&self, n: usize) -> f64 {
        self.held[n]
            .iter()
            .filter(|&&k| self.inv_sigma[k].is_finite())
            .map(|&k| self.cap[k] + self.inv_sigma[k])
            .fold(0.0, f64::max)
    }

    fn total_power(&self, levels: &[f64], omega0: f64) -> f64 {
        (0..self.owner.len())
            .map(|k| self.power_at(k, levels[self.owner[k]].max(omega0)))
            .sum()
    }
}

/// Smallest level at which UE `n` meets `floor`, or `None` if no level does.
///
/// The rate is `B0 (|A| log2 w - sum_A log2(1/sigma))` plus the saturated
/// RBs' constant rates between consecutive breakpoints, where `A` is the
/// set of RBs filling but not yet capped, so each segment has a closed-form
/// root.
fn required_level(slots: &Slots, n: usize, floor: f64, b0: f64) -> Option<f64> {
    if floor <= 0.0 {
        return Some(0.0);
    }
    let usable: Vec<usize> = slots.held[n]
        .iter()
        .copied()
        .filter(|&k| slots.inv_sigma[k].is_finite())
        .collect();
    let mut points: Vec<f64> = usable
        .iter()
        .flat_map(|&k| [slots.inv_sigma[k], slots.inv_sigma[k] + slots.cap[k]])
        .filter(|x| x.is_finite())
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points.push(f64::INFINITY);
    for pair in points.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi.is_finite() && slots.ue_rate(n, hi, b0) < floor {
            continue;
        }
        let mut active = 0.0;
        let mut log_sum = 0.0;
        let mut saturated = 0.0;
        for &k in &usable {
            let s = slots.inv_sigma[k];
            let e = s + slots.cap[k];
            if e <= lo {
                saturated += rb_rate(b0, 1.0 / s, slots.cap[k]);
            } else if s <= lo {
                active += 1.0;
                log_sum += libm::log2(s);
            }
        }
        if active == 0.0 {
            return None;
        }
        let mut w = libm::exp2(((floor - saturated) / b0 + log_sum) / active).clamp(lo, hi);
        for _ in 0..64 {
            if slots.ue_rate(n, w, b0) >= floor {
                break;
            }
            w = w * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
        }
        return Some(w);
    }
    None
}

/// Optimal powers for `owners` at the given Dinkelbach parameter.
pub fn optimal_powers(
    owners: &[usize],
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> PowerSolution {
    let b0 = ch.rb_bandwidth_hz();
    let pm = &params.power;
    let slots = Slots::new(owners, ch, params);
    let mut violation = None;

    let mut levels = vec![0.0; params.ues()];
    for n in 0..params.ues() {
        let floor = params.rate_floor(n);
        match required_level(&slots, n, floor, b0) {
            Some(w) => levels[n] = w,
            None => {
                let sat = slots.saturation_level(n);
                levels[n] = sat;
                if violation.is_none() {
                    violation = Some(Violation::Qos {
                        ue: n,
                        slack: slots.ue_rate(n, sat, b0) - floor,
                    });
                }
            }
        }
    }

    let min_power = slots.total_power(&levels, 0.0);
    if min_power > pm.p_max * (1.0 + 1e-12) && violation.is_none() {
        violation = Some(Violation::Power {
            slack: pm.p_max - min_power,
        });
    }

    let price_floor = gamma * pm.phi_eff;
    let omega_cap = if price_floor > 0.0 {
        b0 / (LN_2 * price_floor)
    } else {
        f64::INFINITY
    };
    let omega0 = if min_power >= pm.p_max {
        0.0
    } else if omega_cap.is_finite() && slots.total_power(&levels, omega_cap) <= pm.p_max {
        omega_cap
    } else {
        budget_level(&slots, &levels, omega_cap, pm.p_max)
    };

    let powers: Vec<f64> = (0..owners.len())
        .map(|k| slots.power_at(k, levels[owners[k]].max(omega0)))
        .collect();
    let dual = certify(&slots, &levels, omega0, gamma, b0, params);

    let rate: f64 = powers
        .iter()
        .enumerate()
        .map(|(k, &p)| rb_rate(b0, ch.sigma(owners[k], k), p))
        .sum();
    let consumed = pm.phi_eff * powers.iter().sum::<f64>() + pm.static_power();
    PowerSolution {
        powers,
        dual,
        rate,
        consumed,
        objective: rate - gamma * consumed,
        violation,
    }
}

/// Lowest level meeting each UE's floor, or its saturation level, with
/// the relative shortfall of floors that no level reaches.
fn floor_levels(slots: &Slots, params: &SystemParams, b0: f64) -> (Vec<f64>, Vec<f64>) {
    let mut levels = vec![0.0; params.ues()];
    let mut shortfall = vec![0.0; params.ues()];
    for n in 0..params.ues() {
        let floor = params.rate_floor(n);
        match required_level(slots, n, floor, b0) {
            Some(w) => levels[n] = w,
            None => {
                let sat = slots.saturation_level(n);
                levels[n] = sat;
                shortfall[n] = (floor - slots.ue_rate(n, sat, b0)) / floor;
            }
        }
    }
    (levels, shortfall)
}

/// Relative shortfall of each UE's floor at unlimited budget; zero for
/// floors some power level reaches.
pub fn floor_shortfalls(owners: &[usize], ch: &ChannelState, params: &SystemParams) -> Vec<f64> {
    let slots = Slots::new(owners, ch, params);
    floor_levels(&slots, params, ch.rb_bandwidth_hz()).1
}

/// Distance of `owners` from feasibility: the summed relative shortfall of
/// rate floors that no power level reaches, then the relative excess of
/// the least total power meeting the reachable ones. `(0, 0)` exactly
/// when the assignment is feasible.
pub fn floor_deficit(owners: &[usize], ch: &ChannelState, params: &SystemParams) -> (f64, f64) {
    let slots = Slots::new(owners, ch, params);
    let (levels, shortfall) = floor_levels(&slots, params, ch.rb_bandwidth_hz());
    let p_max = params.power.p_max;
    let excess = (slots.total_power(&levels, 0.0) - p_max * (1.0 + 1e-12)).max(0.0) / p_max;
    (shortfall.iter().sum(), excess)
}

/// Base level that spends exactly `p_max`; infinite if even an unbounded
/// level stays within budget.
///
/// RB `k` draws `omega0 - 1/sigma_k` while `omega0` lies between
/// `max(w_n, 1/sigma_k)` and `cap_k + 1/sigma_k`, so total power is
/// piecewise linear in `omega0` and is inverted segment by segment.
fn budget_level(slots: &Slots, levels: &[f64], omega_cap: f64, p_max: f64) -> f64 {
    let spans: Vec<(f64, f64)> = (0..slots.owner.len())
        .filter(|&k| slots.inv_sigma[k].is_finite())
        .map(|k| {
            let s = slots.inv_sigma[k];
            (levels[slots.owner[k]].max(s), s + slots.cap[k])
        })
        .filter(|(start, end)| start < end)
        .collect();
    let mut points: Vec<f64> = spans
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|x| x.is_finite() && *x < omega_cap)
        .collect();
    points.push(omega_cap);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut lo = 0.0;
    for &hi in &points {
        let at_hi = slots.total_power(levels, hi);
        if at_hi <= p_max {
            lo = hi;
            continue;
        }
        let slope = spans
            .iter()
            .filter(|&&(a, b)| a <= lo && b >= hi)
            .count() as f64;
        let base = slots.total_power(levels, lo);
        if slope == 0.0 {
            return lo;
        }
        let mut w = (lo + (p_max - base) / slope).clamp(lo, hi);
        for _ in 0..64 {
            if slots.total_power(levels, w) <= p_max {
                break;
            }
            w = w * (1.0 - 4.0 * f64::EPSILON);
        }
        return w;
    }
    lo
}

/// Multipliers that make the allocation a KKT point.
fn certify(
    slots: &Slots,
    levels: &[f64],
    omega0: f64,
    gamma: f64,
    b0: f64,
    params: &SystemParams,
) -> DualState {
    let mut dual = DualState::zeros(params.ues(), params.rbs());
    let price_floor = gamma * params.power.phi_eff;
    if omega0.is_infinite() {
        // Every usable RB is interference-capped and the budget is slack.
        for k in 0..slots.owner.len() {
            if slots.cap[k].is_finite() && slots.inv_sigma[k].is_finite() {
                let g = params.delta0 / slots.cap[k];
                dual.lambda[k] = b0 / (LN_2 * (slots.inv_sigma[k] + slots.cap[k]) * g);
            }
        }
        return dual;
    }
    if omega0 <= 0.0 {
        return dual;
    }
    let base_price = b0 / (LN_2 * omega0);
    dual.nu = (base_price - price_floor).max(0.0);
    let unit_price = price_floor + dual.nu;
    for n in 0..params.ues() {
        dual.beta[n] = (levels[n] / omega0 - 1.0).max(0.0);
    }
    for k in 0..slots.owner.len() {
        let w = levels[slots.owner[k]].max(omega0);
        let cap = slots.cap[k];
        if cap.is_finite() && slots.inv_sigma[k].is_finite() && w - slots.inv_sigma[k] > cap {
            let g = params.delta0 / cap;
            dual.lambda[k] = unit_price * (w / (slots.inv_sigma[k] + cap) - 1.0) / g;
        }
    }
    dual
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PowerModel, QosProfile, RbAccess, SffrPartition};

    fn params(n_high: usize, n_low: usize, k: usize, ratio: f64, p_max: f64, delta0: f64) -> SystemParams {
        SystemParams {
            n_high,
            n_low,
            partition: SffrPartition::from_ratio(k, ratio, 1.0).unwrap(),
            qos: QosProfile::new(0.5, 0.25).unwrap(),
            power: PowerModel::new(1.0, 0.5, 0.5, p_max).unwrap(),
            delta0,
            access: RbAccess::Sffr,
        }
    }

    #[test]
    fn single_rb_matches_scan() {
        let p = params(1, 0, 1, 1.0, 1.0, 0.0);
        let ch = ChannelState::from_parts(1, 1, 1.0, vec![1.0], vec![0.0]).unwrap();
        let gamma = 0.4;
        let sol = optimal_powers(&[0], gamma, &ch, &p);
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=1_000_000 {
            let q = i as f64 * 1e-6;
            let f = libm::log2(1.0 + q) - gamma * (q + 1.0);
            if f > best.1 {
                best = (q, f);
            }
        }
        assert!((sol.powers[0] - best.0).abs() < 2e-6);
        assert!((sol.objective - best.1).abs() < 1e-9);
    }

    #[test]
    fn rate_floor_binds_exactly() {
        let mut p = params(2, 0, 2, 1.0, 20.0, 0.0);
        p.qos = QosProfile::new(2.0, 0.0).unwrap();
        let ch = ChannelState::from_parts(2, 2, 1.0, vec![5.0, 0.1, 0.1, 0.3], vec![0.0; 2]).unwrap();
        let sol = optimal_powers(&[0, 1], 1.0, &ch, &p);
        assert!(sol.is_feasible());
        let r1 = rb_rate(1.0, 0.3, sol.powers[1]);
        assert!((r1 - 2.0).abs() < 1e-9, "{r1}");
        assert!(sol.dual.beta[1] > 0.0);
    }

    #[test]
    fn interference_cap_clips_and_prices() {
        let p = params(0, 1, 1, 0.0, 10.0, 0.01);
        let ch = ChannelState::from_parts(1, 1, 1.0, vec![100.0], vec![1.0]).unwrap();
        let sol = optimal_powers(&[0], 0.1, &ch, &p);
        assert!((sol.powers[0] - 0.01).abs() < 1e-15);
        assert!(sol.dual.lambda[0] > 0.0);
    }

    #[test]
    fn budget_binds_at_zero_gamma() {
        let p = params(2, 0, 4, 1.0, 2.0, 0.0);
        let mut q = p.clone();
        q.qos = QosProfile::new(0.0, 0.0).unwrap();
        let ch = ChannelState::from_parts(2, 4, 1.0, vec![1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0], vec![0.0; 4]).unwrap();
        let sol = optimal_powers(&[1, 1, 0, 0], 0.0, &ch, &q);
        let total: f64 = sol.powers.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        assert!(sol.dual.nu > 0.0);
    }

    #[test]
    fn unreachable_floor_is_reported() {
        let mut p = params(0, 1, 1, 0.0, 10.0, 1e-3);
        p.qos = QosProfile::new(5.0, 5.0).unwrap();
        let ch = ChannelState::from_parts(1, 1, 1.0, vec![1.0], vec![1.0]).unwrap();
        let sol = optimal_powers(&[0], 0.0, &ch, &p);
        assert!(matches!(sol.violation, Some(Violation::Qos { ue: 0, .. })));
    }

    #[test]
    fn deficit_vanishes_exactly_on_feasible_assignments() {
        let p = params(1, 1, 3, 0.34, 1.0, 0.05);
        let ch = ChannelState::from_parts(2, 3, 1.0, vec![2.0, 0.5, 0.5, 0.1, 3.0, 0.2], vec![0.0, 0.1, 0.1]).unwrap();
        for owners in [[0, 1, 1], [0, 0, 1], [0, 1, 0], [0, 0, 0]] {
            let (short, excess) = floor_deficit(&owners, &ch, &p);
            let feasible = optimal_powers(&owners, 0.0, &ch, &p).is_feasible();
            assert_eq!(feasible, short == 0.0 && excess == 0.0, "{owners:?}: {short} {excess}");
        }
        let (short, _) = floor_deficit(&[0, 0, 0], &ch, &p);
        assert_eq!(short, 1.0);
    }
}
