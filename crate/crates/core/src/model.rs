//! Domain types and the pure evaluation functions every solver is audited
//! against: sum rates, power consumption, energy efficiency and the
//! feasibility of an allocation under the full constraint set.
//!
//! UE indices follow one convention throughout the crate: `0..n_high` are
//! the high-QoS RUEs served on the exclusive set Ω1 and
//! `n_high..n_high + n_low` are the low-QoS RUEs that share Ω2 with HUEs.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::log2;

use crate::channel::ChannelState;
use crate::error::{Error, Result};

/// Relative tolerance used when judging constraint satisfaction.
pub const FEASIBILITY_RTOL: f64 = 1e-6;

/// Enhanced S-FFR split of the `k_total` RBs into the exclusive set Ω1 and
/// the shared set Ω2.
#[derive(Debug, Clone, PartialEq)]
pub struct SffrPartition {
    exclusive: Vec<usize>,
    shared: Vec<usize>,
    is_shared: Vec<bool>,
    rb_bandwidth_hz: f64,
}

impl SffrPartition {
    pub fn new(
        exclusive: Vec<usize>,
        shared: Vec<usize>,
        k_total: usize,
        rb_bandwidth_hz: f64,
    ) -> Result<Self> {
        if k_total == 0 {
            return Err(Error::InvalidParameter {
                name: "k_total",
                reason: "at least one RB is required",
            });
        }
        if !(rb_bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rb_bandwidth_hz",
                reason: "must be positive",
            });
        }
        let mut seen = vec![0u8; k_total];
        let mut is_shared = vec![false; k_total];
        for &k in &exclusive {
            *seen.get_mut(k).ok_or(Error::InvalidParameter {
                name: "omega1",
                reason: "RB index out of range",
            })? += 1;
        }
        for &k in &shared {
            *seen.get_mut(k).ok_or(Error::InvalidParameter {
                name: "omega2",
                reason: "RB index out of range",
            })? += 1;
            is_shared[k] = true;
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(Error::InvalidParameter {
                name: "omega1/omega2",
                reason: "sets must be disjoint and cover every RB",
            });
        }
        let mut exclusive = exclusive;
        let mut shared = shared;
        exclusive.sort_unstable();
        shared.sort_unstable();
        Ok(Self {
            exclusive,
            shared,
            is_shared,
            rb_bandwidth_hz,
        })
    }

    /// The first `round(ratio * k_total)` RBs form Ω1, the rest Ω2.
    pub fn from_ratio(k_total: usize, exclusive_ratio: f64, rb_bandwidth_hz: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&exclusive_ratio) {
            return Err(Error::InvalidParameter {
                name: "omega1_ratio",
                reason: "must lie in [0, 1]",
            });
        }
        let n1 = libm::round(exclusive_ratio * k_total as f64) as usize;
        Self::new(
            (0..n1).collect(),
            (n1..k_total).collect(),
            k_total,
            rb_bandwidth_hz,
        )
    }

    pub fn k_total(&self) -> usize {
        self.is_shared.len()
    }

    pub fn rb_bandwidth_hz(&self) -> f64 {
        self.rb_bandwidth_hz
    }

    pub fn exclusive(&self) -> &[usize] {
        &self.exclusive
    }

    pub fn shared(&self) -> &[usize] {
        &self.shared
    }

    pub fn is_shared(&self, k: usize) -> bool {
        self.is_shared[k]
    }
}

/// Rate floors in bit/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosProfile {
    /// High-QoS floor (RUEs on Ω1).
    pub eta_r: f64,
    /// Low-QoS floor (RUEs on Ω2).
    pub eta_er: f64,
}

impl QosProfile {
    pub fn new(eta_r: f64, eta_er: f64) -> Result<Self> {
        if !(eta_r >= eta_er && eta_er >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "qos",
                reason: "requires eta_r >= eta_er >= 0",
            });
        }
        Ok(Self { eta_r, eta_er })
    }
}

/// Linear power consumption model `phi_eff * P_tx + p_circuit + p_bh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub phi_eff: f64,
    pub p_circuit: f64,
    pub p_bh: f64,
    /// Maximum total transmit power in W.
    pub p_max: f64,
}

impl PowerModel {
    pub fn new(phi_eff: f64, p_circuit: f64, p_bh: f64, p_max: f64) -> Result<Self> {
        if !(phi_eff > 0.0 && p_circuit > 0.0 && p_bh > 0.0 && p_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "power_model",
                reason: "all fields must be positive",
            });
        }
        Ok(Self {
            phi_eff,
            p_circuit,
            p_bh,
            p_max,
        })
    }

    /// Static part of the consumption, `p_circuit + p_bh`.
    pub fn static_power(&self) -> f64 {
        self.p_circuit + self.p_bh
    }
}

/// The high power node: equal power `per_rb_power` on each RB it transmits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpnModel {
    pub p_max_m: f64,
    pub per_rb_power: f64,
    pub power_model: PowerModel,
    pub t_hues: usize,
}

impl HpnModel {
    /// Spreads `power_model.p_max` evenly over the `rb_count` RBs the HPN uses.
    pub fn new(power_model: PowerModel, rb_count: usize, t_hues: usize) -> Result<Self> {
        let per_rb_power = if rb_count == 0 {
            0.0
        } else {
            power_model.p_max / rb_count as f64
        };
        Ok(Self {
            p_max_m: power_model.p_max,
            per_rb_power,
            power_model,
            t_hues,
        })
    }
}

/// Binary RB-to-UE indicator `a[n][k]`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AllocationMatrix {
    ues: usize,
    rbs: usize,
    a: Vec<bool>,
}

impl AllocationMatrix {
    pub fn zeros(ues: usize, rbs: usize) -> Self {
        Self {
            ues,
            rbs,
            a: vec![false; ues * rbs],
        }
    }

    /// Builds the matrix from a per-RB owner list.
    pub fn from_owners(ues: usize, owners: &[Option<usize>]) -> Self {
        let mut m = Self::zeros(ues, owners.len());
        for (k, o) in owners.iter().enumerate() {
            if let Some(n) = *o {
                m.set(n, k, true);
            }
        }
        m
    }

    pub fn ues(&self) -> usize {
        self.ues
    }

    pub fn rbs(&self) -> usize {
        self.rbs
    }

    pub fn get(&self, n: usize, k: usize) -> bool {
        self.a[n * self.rbs + k]
    }

    pub fn set(&mut self, n: usize, k: usize, v: bool) {
        self.a[n * self.rbs + k] = v;
    }

    /// Lowest-index UE holding RB `k`.
    pub fn owner(&self, k: usize) -> Option<usize> {
        (0..self.ues).find(|&n| self.get(n, k))
    }

    pub fn owners(&self) -> Vec<Option<usize>> {
        (0..self.rbs).map(|k| self.owner(k)).collect()
    }

    pub fn column_count(&self, k: usize) -> usize {
        (0..self.ues).filter(|&n| self.get(n, k)).count()
    }
}

/// Transmit powers `p[n][k]` in W, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    ues: usize,
    rbs: usize,
    p: Vec<f64>,
}

impl PowerMatrix {
    pub fn zeros(ues: usize, rbs: usize) -> Self {
        Self {
            ues,
            rbs,
            p: vec![0.0; ues * rbs],
        }
    }

    /// Places `powers[k]` on the owner of RB `k`.
    pub fn from_rb_powers(ues: usize, owners: &[Option<usize>], powers: &[f64]) -> Self {
        let mut m = Self::zeros(ues, owners.len());
        for (k, o) in owners.iter().enumerate() {
            if let Some(n) = *o {
                m.set(n, k, powers[k]);
            }
        }
        m
    }

    pub fn ues(&self) -> usize {
        self.ues
    }

    pub fn rbs(&self) -> usize {
        self.rbs
    }

    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.p[n * self.rbs + k]
    }

    pub fn set(&mut self, n: usize, k: usize, v: f64) {
        self.p[n * self.rbs + k] = v;
    }
}

/// Lagrange multipliers of the inner problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// One per UE, for the rate floors.
    pub beta: Vec<f64>,
    /// One per RB, for the inter-tier interference cap; zero on Ω1.
    pub lambda: Vec<f64>,
    /// Total transmit power.
    pub nu: f64,
}

impl DualState {
    pub fn zeros(ues: usize, rbs: usize) -> Self {
        Self {
            beta: vec![0.0; ues],
            lambda: vec![0.0; rbs],
            nu: 0.0,
        }
    }

    pub fn is_valid(&self, part: &SffrPartition) -> bool {
        self.nu >= 0.0
            && self.beta.iter().all(|&b| b >= 0.0)
            && self
                .lambda
                .iter()
                .enumerate()
                .all(|(k, &l)| l >= 0.0 && (part.is_shared(k) || l == 0.0))
    }
}

/// Which UEs may occupy which RBs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RbAccess {
    /// Ω1 to high-QoS RUEs only, Ω2 to low-QoS RUEs only.
    #[default]
    Sffr,
    /// Every UE may use every RB; the interference cap still applies on Ω2.
    Open,
}

/// Everything about one reference RRH except its channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// N: high-QoS RUEs restricted to Ω1.
    pub n_high: usize,
    /// M: low-QoS RUEs restricted to Ω2.
    pub n_low: usize,
    pub partition: SffrPartition,
    pub qos: QosProfile,
    pub power: PowerModel,
    /// Per-RB cap on interference received by the HUE, in W.
    pub delta0: f64,
    pub access: RbAccess,
}

impl SystemParams {
    pub fn ues(&self) -> usize {
        self.n_high + self.n_low
    }

    pub fn rbs(&self) -> usize {
        self.partition.k_total()
    }

    pub fn rate_floor(&self, n: usize) -> f64 {
        if n < self.n_high {
            self.qos.eta_r
        } else {
            self.qos.eta_er
        }
    }

    /// Under S-FFR access Ω1 RBs go to high-QoS RUEs only and Ω2 RBs to
    /// low-QoS RUEs only.
    pub fn eligible(&self, n: usize, k: usize) -> bool {
        match self.access {
            RbAccess::Sffr => self.partition.is_shared(k) == (n >= self.n_high),
            RbAccess::Open => n < self.ues(),
        }
    }

    pub fn eligible_ues(&self, k: usize) -> core::ops::Range<usize> {
        if self.access == RbAccess::Open {
            0..self.ues()
        } else if self.partition.is_shared(k) {
            self.n_high..self.ues()
        } else {
            0..self.n_high
        }
    }

    pub fn check_dims(&self, ch: &ChannelState) -> Result<()> {
        if ch.ues() != self.ues() {
            return Err(Error::DimensionMismatch {
                what: "channel UEs",
                expected: self.ues(),
                found: ch.ues(),
            });
        }
        if ch.rbs() != self.rbs() {
            return Err(Error::DimensionMismatch {
                what: "channel RBs",
                expected: self.rbs(),
                found: ch.rbs(),
            });
        }
        Ok(())
    }
}

fn check_shapes(a: &AllocationMatrix, p: &PowerMatrix, ch: &ChannelState) -> Result<()> {
    for (what, expected, found) in [
        ("allocation UEs", ch.ues(), a.ues()),
        ("allocation RBs", ch.rbs(), a.rbs()),
        ("power UEs", ch.ues(), p.ues()),
        ("power RBs", ch.rbs(), p.rbs()),
    ] {
        if expected != found {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            });
        }
    }
    Ok(())
}

/// Rate of one UE on one RB, `B0 log2(1 + sigma p)`.
pub fn rb_rate(b0: f64, sigma: f64, p: f64) -> f64 {
    b0 * log2(1.0 + sigma * p)
}

/// Per-UE sum rates in bit/s.
pub fn ue_rates(a: &AllocationMatrix, p: &PowerMatrix, ch: &ChannelState) -> Result<Vec<f64>> {
    check_shapes(a, p, ch)?;
    let b0 = ch.rb_bandwidth_hz();
    Ok((0..a.ues())
        .map(|n| {
            (0..a.rbs())
                .filter(|&k| a.get(n, k))
                .map(|k| rb_rate(b0, ch.sigma(n, k), p.get(n, k)))
                .sum()
        })
        .collect())
}

/// Sum rate of the reference RRH in bit/s.
pub fn rrh_sum_rate(a: &AllocationMatrix, p: &PowerMatrix, ch: &ChannelState) -> Result<f64> {
    Ok(ue_rates(a, p, ch)?.iter().sum())
}

/// Total transmit power `sum a p` in W.
pub fn transmit_power(a: &AllocationMatrix, p: &PowerMatrix) -> f64 {
    let mut total = 0.0;
    for n in 0..a.ues() {
        for k in 0..a.rbs() {
            if a.get(n, k) {
                total += p.get(n, k);
            }
        }
    }
    total
}

/// Consumed power of the RRH in W.
pub fn rrh_power(a: &AllocationMatrix, p: &PowerMatrix, pm: &PowerModel) -> Result<f64> {
    if a.ues() != p.ues() || a.rbs() != p.rbs() {
        return Err(Error::DimensionMismatch {
            what: "allocation vs power",
            expected: a.ues() * a.rbs(),
            found: p.ues() * p.rbs(),
        });
    }
    Ok(pm.phi_eff * transmit_power(a, p) + pm.static_power())
}

/// Energy efficiency of the RRH in bit/J.
pub fn rrh_ee(
    a: &AllocationMatrix,
    p: &PowerMatrix,
    ch: &ChannelState,
    pm: &PowerModel,
) -> Result<f64> {
    Ok(rrh_sum_rate(a, p, ch)? / rrh_power(a, p, pm)?)
}

/// HPN sum rate in bit/s for a `T x K` HUE allocation transmitting
/// `per_rb_power` on each assigned RB. `sigma_hue` holds per-W CINRs,
/// row-major `T x K`.
pub fn hpn_sum_rate(
    a_m: &AllocationMatrix,
    per_rb_power: f64,
    sigma_hue: &[f64],
    b0: f64,
) -> Result<f64> {
    if sigma_hue.len() != a_m.ues() * a_m.rbs() {
        return Err(Error::DimensionMismatch {
            what: "HUE CINR matrix",
            expected: a_m.ues() * a_m.rbs(),
            found: sigma_hue.len(),
        });
    }
    let mut c = 0.0;
    for t in 0..a_m.ues() {
        for m in 0..a_m.rbs() {
            if a_m.get(t, m) {
                c += rb_rate(b0, sigma_hue[t * a_m.rbs() + m], per_rb_power);
            }
        }
    }
    Ok(c)
}

/// HPN consumption in W with equal per-RB power.
pub fn hpn_power(a_m: &AllocationMatrix, hpn: &HpnModel) -> f64 {
    let assigned = (0..a_m.rbs())
        .map(|m| a_m.column_count(m))
        .sum::<usize>() as f64;
    hpn.power_model.phi_eff * assigned * hpn.per_rb_power + hpn.power_model.static_power()
}

/// Network EE with `l` identical RRHs and one HPN.
pub fn system_ee(l: usize, rrh_rate: f64, rrh_power: f64, hpn_rate: f64, hpn_power: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: "at least one RRH is required",
        });
    }
    let l = l as f64;
    Ok((l * rrh_rate + hpn_rate) / (l * rrh_power + hpn_power))
}

/// Interference cap `delta0` in W derived from the HUE decoding threshold.
///
/// `hue_signal_gain` is the HPN-to-HUE linear path gain; fading enters
/// through its unit mean.
pub fn delta0_from_eta_hue(
    eta_hue: f64,
    hpn_per_rb_power: f64,
    hue_signal_gain: f64,
    noise_w: f64,
    l: usize,
) -> Result<f64> {
    if !(eta_hue > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eta_hue",
            reason: "must be positive",
        });
    }
    if l == 0 {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: "at least one RRH is required",
        });
    }
    let d = (hpn_per_rb_power * hue_signal_gain / eta_hue - noise_w) / l as f64;
    Ok(d.max(0.0))
}

/// A single violated constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// RB held by a number of UEs other than one.
    Exclusivity { rb: usize, holders: usize },
    /// UE holds an RB outside its S-FFR set.
    Eligibility { ue: usize, rb: usize },
    /// Rate below floor; `slack` is `rate - floor` in bit/s.
    Qos { ue: usize, slack: f64 },
    /// Interference above the cap; `slack` is `delta0 - interference` in W.
    Interference { rb: usize, slack: f64 },
    /// Transmit power above budget; `slack` is `p_max - sum p` in W.
    Power { slack: f64 },
    NegativePower { ue: usize, rb: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Exclusivity { rb, holders } => {
                write!(f, "RB {rb} held by {holders} UEs (exclusivity)")
            }
            Violation::Eligibility { ue, rb } => write!(f, "UE {ue} may not use RB {rb}"),
            Violation::Qos { ue, slack } => write!(f, "UE {ue} rate floor missed by {:.3} bit/s", -slack),
            Violation::Interference { rb, slack } => {
                write!(f, "RB {rb} interference cap exceeded by {:.3e} W", -slack)
            }
            Violation::Power { slack } => write!(f, "power budget exceeded by {:.3e} W", -slack),
            Violation::NegativePower { ue, rb } => write!(f, "negative power for UE {ue} on RB {rb}"),
        }
    }
}

/// Per-constraint audit of an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Number of holders per RB; feasible iff all equal one.
    pub holders: Vec<usize>,
    pub ineligible: Vec<(usize, usize)>,
    pub negative_power: Vec<(usize, usize)>,
    /// `rate - floor` per UE.
    pub qos_slack: Vec<f64>,
    pub qos_floor: Vec<f64>,
    /// `delta0 - interference` per Ω2 RB, as `(rb, slack)`.
    pub interference_slack: Vec<(usize, f64)>,
    pub delta0: f64,
    /// `p_max - sum a p`.
    pub power_slack: f64,
    pub p_max: f64,
}

impl FeasibilityReport {
    /// All violations, in constraint order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (rb, &h) in self.holders.iter().enumerate() {
            if h != 1 {
                v.push(Violation::Exclusivity { rb, holders: h });
            }
        }
        for &(ue, rb) in &self.ineligible {
            v.push(Violation::Eligibility { ue, rb });
        }
        for &(ue, rb) in &self.negative_power {
            v.push(Violation::NegativePower { ue, rb });
        }
        for (ue, (&slack, &floor)) in self.qos_slack.iter().zip(&self.qos_floor).enumerate() {
            if slack < -FEASIBILITY_RTOL * floor.max(1.0) {
                v.push(Violation::Qos { ue, slack });
            }
        }
        for &(rb, slack) in &self.interference_slack {
            if slack < -FEASIBILITY_RTOL * self.delta0.max(f64::MIN_POSITIVE) {
                v.push(Violation::Interference { rb, slack });
            }
        }
        if self.power_slack < -FEASIBILITY_RTOL * self.p_max {
            v.push(Violation::Power {
                slack: self.power_slack,
            });
        }
        v
    }

    pub fn first_violation(&self) -> Option<Violation> {
        self.violations().into_iter().next()
    }

    pub fn is_feasible(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn qos_met(&self) -> bool {
        !self
            .violations()
            .iter()
            .any(|v| matches!(v, Violation::Qos { .. }))
    }
}

/// Audits `(a, p)` against exclusivity, eligibility, rate floors, the
/// per-RB interference cap on Ω2 and the power budget.
pub fn check_feasibility(
    a: &AllocationMatrix,
    p: &PowerMatrix,
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<FeasibilityReport> {
    params.check_dims(ch)?;
    let rates = ue_rates(a, p, ch)?;
    let holders = (0..a.rbs()).map(|k| a.column_count(k)).collect();
    let mut ineligible = Vec::new();
    let mut negative_power = Vec::new();
    for n in 0..a.ues() {
        for k in 0..a.rbs() {
            if a.get(n, k) {
                if !params.eligible(n, k) {
                    ineligible.push((n, k));
                }
                if p.get(n, k) < 0.0 {
                    negative_power.push((n, k));
                }
            }
        }
    }
    let qos_floor: Vec<f64> = (0..a.ues()).map(|n| params.rate_floor(n)).collect();
    let qos_slack = rates.iter().zip(&qos_floor).map(|(r, f)| r - f).collect();
    let interference_slack = params
        .partition
        .shared()
        .iter()
        .map(|&k| {
            let received: f64 = (0..a.ues())
                .filter(|&n| a.get(n, k))
                .map(|n| p.get(n, k) * ch.g_r2m(k))
                .sum();
            (k, params.delta0 - received)
        })
        .collect();
    Ok(FeasibilityReport {
        holders,
        ineligible,
        negative_power,
        qos_slack,
        qos_floor,
        interference_slack,
        delta0: params.delta0,
        power_slack: params.power.p_max - transmit_power(a, p),
        p_max: params.power.p_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(access: RbAccess) -> SystemParams {
        SystemParams {
            n_high: 2,
            n_low: 1,
            partition: SffrPartition::from_ratio(4, 0.5, 1.0).unwrap(),
            qos: QosProfile::new(1.0, 0.5).unwrap(),
            power: PowerModel::new(2.0, 0.1, 0.2, 1.0).unwrap(),
            delta0: 0.1,
            access,
        }
    }

    fn channel() -> ChannelState {
        ChannelState::from_parts(3, 4, 1.0, vec![3.0; 12], vec![0.0, 0.0, 0.5, 2.0]).unwrap()
    }

    fn owned(owners: &[usize], powers: &[f64]) -> (AllocationMatrix, PowerMatrix) {
        let slots: Vec<Option<usize>> = owners.iter().copied().map(Some).collect();
        (
            AllocationMatrix::from_owners(3, &slots),
            PowerMatrix::from_rb_powers(3, &slots, powers),
        )
    }

    #[test]
    fn partition_splits_by_ratio() {
        let p = SffrPartition::from_ratio(25, 0.6, 2e5).unwrap();
        assert_eq!(p.exclusive().len(), 15);
        assert_eq!(p.shared().len(), 10);
        assert!(p.exclusive().iter().all(|&k| !p.is_shared(k)));
        assert!(p.shared().iter().all(|&k| p.is_shared(k)));
    }

    #[test]
    fn partition_rejects_overlap() {
        assert!(SffrPartition::new(vec![0, 1], vec![1, 2], 3, 1.0).is_err());
        assert!(SffrPartition::new(vec![0], vec![1], 3, 1.0).is_err());
    }

    #[test]
    fn sffr_eligibility_follows_qos_class() {
        let p = params(RbAccess::Sffr);
        assert!(p.eligible(0, 0) && p.eligible(1, 1));
        assert!(!p.eligible(2, 0) && !p.eligible(0, 2));
        assert!(p.eligible(2, 3));
        assert_eq!(p.eligible_ues(0), 0..2);
        assert_eq!(p.eligible_ues(3), 2..3);
    }

    #[test]
    fn open_access_admits_everyone() {
        let p = params(RbAccess::Open);
        assert!((0..3).all(|n| (0..4).all(|k| p.eligible(n, k))));
        assert_eq!(p.eligible_ues(2), 0..3);
    }

    #[test]
    fn ee_is_rate_over_consumption() {
        let p = params(RbAccess::Sffr);
        let ch = channel();
        let (a, pw) = owned(&[0, 1, 2, 2], &[0.2, 0.1, 0.1, 0.05]);
        let rate = rrh_sum_rate(&a, &pw, &ch).unwrap();
        let expected = 1.6f64.log2() + 2.0 * 1.3f64.log2() + 1.15f64.log2();
        assert!((rate - expected).abs() < 1e-12);
        let consumed = rrh_power(&a, &pw, &p.power).unwrap();
        assert!((consumed - (2.0 * 0.45 + 0.3)).abs() < 1e-12);
        assert_eq!(rrh_ee(&a, &pw, &ch, &p.power).unwrap(), rate / consumed);
    }

    #[test]
    fn zero_power_gives_zero_ee() {
        let p = params(RbAccess::Sffr);
        let (a, pw) = owned(&[0, 1, 2, 2], &[0.0; 4]);
        assert_eq!(rrh_ee(&a, &pw, &channel(), &p.power).unwrap(), 0.0);
    }

    #[test]
    fn feasibility_reports_each_violation() {
        let p = params(RbAccess::Sffr);
        let ch = channel();
        let (a, pw) = owned(&[0, 1, 2, 2], &[0.4, 0.4, 0.1, 0.04]);
        let report = check_feasibility(&a, &pw, &ch, &p).unwrap();
        assert!(report.is_feasible(), "{:?}", report.violations());

        let (a, pw) = owned(&[0, 2, 2, 2], &[0.4, 0.4, 0.1, 0.04]);
        let v = check_feasibility(&a, &pw, &ch, &p).unwrap().violations();
        assert!(v.contains(&Violation::Eligibility { ue: 2, rb: 1 }));
        assert!(v.iter().any(|x| matches!(x, Violation::Qos { ue: 1, .. })));

        let (a, pw) = owned(&[0, 1, 2, 2], &[0.4, 0.4, 0.1, 0.3]);
        let v = check_feasibility(&a, &pw, &ch, &p).unwrap().violations();
        assert!(v.iter().any(|x| matches!(x, Violation::Interference { rb: 3, .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::Power { .. })));
    }

    #[test]
    fn shared_rb_held_twice_breaks_exclusivity() {
        let p = params(RbAccess::Sffr);
        let mut a = AllocationMatrix::zeros(3, 4);
        for k in 0..4 {
            a.set(if k < 2 { 0 } else { 2 }, k, true);
        }
        a.set(1, 0, true);
        let pw = PowerMatrix::zeros(3, 4);
        let v = check_feasibility(&a, &pw, &channel(), &p).unwrap().violations();
        assert_eq!(v[0], Violation::Exclusivity { rb: 0, holders: 2 });
    }

    #[test]
    fn system_ee_tends_to_rrh_ee() {
        let (c, p, ch, ph) = (4e6, 0.5, 1e6, 20.0);
        let err = |l| (system_ee(l, c, p, ch, ph).unwrap() - c / p).abs();
        assert!(err(1) > err(12) && err(12) > err(1000));
        assert!(system_ee(0, c, p, ch, ph).is_err());
    }

    #[test]
    fn delta0_shrinks_with_threshold() {
        let at = |db: f64| delta0_from_eta_hue(10f64.powf(db / 10.0), 2.0, 1e-12, 1e-15, 12).unwrap();
        assert!(at(0.0) > at(20.0));
        assert_eq!(at(40.0), 0.0);
        assert!(delta0_from_eta_hue(0.0, 2.0, 1e-12, 1e-15, 12).is_err());
    }

    #[test]
    fn hpn_power_counts_assigned_rbs() {
        let pm = PowerModel::new(4.0, 10.0, 0.2, 20.0).unwrap();
        let hpn = HpnModel::new(pm, 10, 1).unwrap();
        let a = AllocationMatrix::from_owners(1, &[Some(0), None, Some(0)]);
        assert!((hpn_power(&a, &hpn) - (4.0 * 2.0 * 2.0 + 10.2)).abs() < 1e-12);
        let rate = hpn_sum_rate(&a, 2.0, &[1.0, 1.0, 3.0], 1.0).unwrap();
        assert!((rate - (3f64.log2() + 7f64.log2())).abs() < 1e-12);
    }
}
