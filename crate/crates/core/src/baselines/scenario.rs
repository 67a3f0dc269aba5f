//! Network architectures compared on the same reference cell.
//!
//! Every scenario serves the same population, `N` cell-centre UEs with the
//! high rate floor and `M` cell-edge UEs with the low one, under the same
//! fading draw. The node that serves the reference cell (RRH, pico base
//! station or HPN) is the `cell` tier; a macro-tier node whose consumption
//! is shared by many cells is reported separately.
//!
//! | kind | cell node | access | allocation |
//! |---|---|---|---|
//! | `OneTierHpn` | HPN | centre UEs on Ω1, edge UEs on Ω2 | max-SINR + water-filling |
//! | `TwoTierOverlaid` | PBS (centre UEs), HPN (edge UEs) | PBS on Ω1, HPN on Ω2 | max-SINR + water-filling |
//! | `TwoTierUnderlaid` | PBS (centre UEs), HPN (edge UEs) | PBS on all RBs, Ω2 shared under the HUE cap | dual decomposition |
//! | `OneTierCran` | RRH, with a second RRH at the HPN site | all RBs open to all UEs | max-SINR + water-filling |
//! | `TwoTierHcran` | RRH with the HPN on Ω2 | S-FFR | dual decomposition |

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channel::{path_gain, ChannelState, FadingDraws, LinkKind};
use crate::error::{Error, Result};
use crate::model::{
    delta0_from_eta_hue, rb_rate, system_ee, PowerModel, QosProfile, RbAccess, SffrPartition,
    SystemParams,
};
use crate::optimizer::inner::seed_owners;
use crate::optimizer::{optimal_powers, solve_ee, InnerConfig, OuterConfig};
use crate::system::SystemConfig;
use crate::units::{db_to_linear, dbm_to_watt};

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioKind {
    #[cfg_attr(feature = "serde", serde(rename = "1-tier-hpn"))]
    OneTierHpn,
    #[cfg_attr(feature = "serde", serde(rename = "2-tier-overlaid"))]
    TwoTierOverlaid,
    #[cfg_attr(feature = "serde", serde(rename = "2-tier-underlaid"))]
    TwoTierUnderlaid,
    #[cfg_attr(feature = "serde", serde(rename = "1-tier-cran"))]
    OneTierCran,
    #[cfg_attr(feature = "serde", serde(rename = "2-tier-hcran"))]
    TwoTierHcran,
}

impl ScenarioKind {
    /// In the expected order of increasing EE.
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::OneTierHpn,
        ScenarioKind::TwoTierOverlaid,
        ScenarioKind::TwoTierUnderlaid,
        ScenarioKind::OneTierCran,
        ScenarioKind::TwoTierHcran,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::OneTierHpn => "1-tier-hpn",
            ScenarioKind::TwoTierOverlaid => "2-tier-overlaid",
            ScenarioKind::TwoTierUnderlaid => "2-tier-underlaid",
            ScenarioKind::OneTierCran => "1-tier-cran",
            ScenarioKind::TwoTierHcran => "2-tier-hcran",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(Error::InvalidParameter {
                name: "scenario",
                reason: "expected one of 1-tier-hpn, 2-tier-overlaid, 2-tier-underlaid, 1-tier-cran, 2-tier-hcran",
            })
    }
}

/// Pico base station used by the HetNet scenarios.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
#[derive(Debug, Clone, PartialEq)]
pub struct PicoConfig {
    pub p_max_dbm: f64,
    pub phi_eff: f64,
    pub p_circuit_w: f64,
    pub backhaul_w: f64,
}

impl Default for PicoConfig {
    fn default() -> Self {
        Self {
            p_max_dbm: 30.0,
            phi_eff: 4.0,
            p_circuit_w: 6.8,
            backhaul_w: 0.2,
        }
    }
}

impl PicoConfig {
    pub fn power_model(&self) -> Result<PowerModel> {
        PowerModel::new(
            self.phi_eff,
            self.p_circuit_w,
            self.backhaul_w,
            dbm_to_watt(self.p_max_dbm),
        )
    }
}

/// Traffic and consumption of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierLoad {
    /// bit/s.
    pub rate: f64,
    /// W.
    pub consumed: f64,
}

impl TierLoad {
    pub fn ee(&self) -> f64 {
        self.rate / self.consumed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub kind: ScenarioKind,
    /// Node serving the reference cell.
    pub cell: TierLoad,
    /// Macro-tier node, absent when the HPN is itself the cell node.
    pub macro_tier: Option<TierLoad>,
    /// Whether every rate floor of the cell node's UEs is met.
    pub feasible: bool,
}

impl ScenarioOutcome {
    /// Network EE with many cells per macro node, where the macro terms
    /// vanish and only the cell node remains.
    pub fn ee(&self) -> f64 {
        self.cell.ee()
    }

    /// Network EE with `l` cells per macro node.
    pub fn system_ee(&self, l: usize) -> Result<f64> {
        match self.macro_tier {
            Some(m) => system_ee(l, self.cell.rate, self.cell.consumed, m.rate, m.consumed),
            None => Ok(self.cell.ee()),
        }
    }
}

/// Gains of every population link for one snapshot.
struct Links {
    b0: f64,
    noise_w: f64,
    ues: usize,
    rbs: usize,
    /// Small-cell site to UE, `ues x K`.
    small: Vec<f64>,
    /// HPN site to UE, `ues x K`.
    macro_site: Vec<f64>,
    fading: FadingDraws,
}

impl Links {
    fn draw(sys: &SystemConfig, master_seed: u64, snapshot: u64) -> Result<Self> {
        let geom = sys.geometry();
        let ues = geom.ues();
        let rbs = sys.k_total;
        let fading = FadingDraws::draw(master_seed, snapshot, ues, geom.t_hues, rbs);
        let mut small = Vec::with_capacity(ues * rbs);
        let mut macro_site = Vec::with_capacity(ues * rbs);
        for n in 0..ues {
            let gs = path_gain(LinkKind::RrhToRue, geom.d_rrh_rue[n])?;
            let gm = path_gain(LinkKind::HpnToRue, geom.d_hpn_rue[n])?;
            for k in 0..rbs {
                small.push(gs * fading.h_rrh[n * rbs + k]);
                macro_site.push(gm * fading.h_hpn[n * rbs + k]);
            }
        }
        let b0 = sys.rb_bandwidth_hz();
        Ok(Self {
            b0,
            noise_w: crate::units::noise_power_watt(sys.noise_psd_dbm_hz, b0),
            ues,
            rbs,
            small,
            macro_site,
            fading,
        })
    }

    fn small(&self, n: usize, k: usize) -> f64 {
        self.small[n * self.rbs + k]
    }

    fn macro_site(&self, n: usize, k: usize) -> f64 {
        self.macro_site[n * self.rbs + k]
    }
}

/// Evaluates one scenario on snapshot `snapshot` of `master_seed`.
pub fn run_scenario(
    kind: ScenarioKind,
    sys: &SystemConfig,
    pico: &PicoConfig,
    master_seed: u64,
    snapshot: u64,
    outer: &OuterConfig,
    inner: &InnerConfig,
) -> Result<ScenarioOutcome> {
    let links = Links::draw(sys, master_seed, snapshot)?;
    let partition = SffrPartition::from_ratio(sys.k_total, sys.omega1_ratio, links.b0)?;
    let qos = QosProfile::new(sys.eta_r_bps, sys.eta_er_bps)?;
    match kind {
        ScenarioKind::TwoTierHcran => hcran(sys, master_seed, snapshot, outer, inner),
        ScenarioKind::OneTierCran => cran(sys, &links, qos),
        ScenarioKind::OneTierHpn => one_tier_hpn(sys, &links, partition, qos),
        ScenarioKind::TwoTierOverlaid => overlaid(sys, pico, &links, &partition),
        ScenarioKind::TwoTierUnderlaid => underlaid(sys, pico, &links, partition, outer, inner),
    }
}

fn hcran(
    sys: &SystemConfig,
    master_seed: u64,
    snapshot: u64,
    outer: &OuterConfig,
    inner: &InnerConfig,
) -> Result<ScenarioOutcome> {
    let dep = sys.deployment()?;
    let ch = dep.snapshot(master_seed, snapshot)?;
    let sol = solve_ee(&ch, &dep.params, outer, inner)?;
    let shared = dep.params.partition.shared();
    let interference: Vec<f64> = (0..ch.rbs()).map(|k| sol.powers[k] * ch.g_r2m(k)).collect();
    let cinr = ch.hue_cinr(&interference);
    let rate = shared
        .iter()
        .map(|&k| rb_rate(ch.rb_bandwidth_hz(), cinr[k], dep.hpn.per_rb_power))
        .sum();
    let hpn = &dep.hpn;
    let consumed = hpn.power_model.phi_eff * hpn.per_rb_power * shared.len() as f64
        + hpn.power_model.static_power();
    Ok(ScenarioOutcome {
        kind: ScenarioKind::TwoTierHcran,
        cell: TierLoad {
            rate: sol.rate,
            consumed: sol.consumed,
        },
        macro_tier: Some(TierLoad { rate, consumed }),
        feasible: true,
    })
}

/// Max-SINR assignment repaired towards the rate floors, then the
/// rate-maximising water-filling that spends the whole budget.
fn classical(ch: &ChannelState, params: &SystemParams) -> Result<(TierLoad, bool)> {
    let owners = seed_owners(ch, params)?;
    let sol = optimal_powers(&owners, 0.0, ch, params);
    Ok((
        TierLoad {
            rate: sol.rate,
            consumed: sol.consumed,
        },
        sol.is_feasible(),
    ))
}

fn cran(sys: &SystemConfig, links: &Links, qos: QosProfile) -> Result<ScenarioOutcome> {
    let rrh = sys.rrh_power_model()?;
    // The RRH at the HPN site spreads its budget over every RB.
    let site_power = rrh.p_max / links.rbs as f64;
    let mut sigma = Vec::with_capacity(links.ues * links.rbs);
    for n in 0..links.ues {
        for k in 0..links.rbs {
            sigma.push(links.small(n, k) / (site_power * links.macro_site(n, k) + links.noise_w));
        }
    }
    let ch = ChannelState::from_parts(links.ues, links.rbs, links.b0, sigma, alloc::vec![0.0; links.rbs])?;
    let params = SystemParams {
        n_high: sys.n_high,
        n_low: sys.n_low,
        partition: SffrPartition::from_ratio(links.rbs, 1.0, links.b0)?,
        qos,
        power: rrh.clone(),
        delta0: f64::INFINITY,
        access: RbAccess::Open,
    };
    let (cell, feasible) = classical(&ch, &params)?;

    // The second RRH serves the HUE from the HPN site.
    let d_site = path_gain(LinkKind::RrhToRue, sys.d_hpn_hue_m)?;
    let d_cross = path_gain(LinkKind::RrhToHue, sys.d_rrh_hue_m)?;
    let f = &links.fading;
    // Reference RRH power is not tracked per RB here; charge it at the even
    // share as interference to the HUE.
    let ref_share = cell_power(&cell, &rrh) / links.rbs as f64;
    let rate = (0..links.rbs)
        .map(|k| {
            let signal = site_power * d_site * f.h_hue[k];
            let interference = ref_share * d_cross * f.h_r2m[k];
            links.b0 * libm::log2(1.0 + signal / (interference + links.noise_w))
        })
        .sum();
    Ok(ScenarioOutcome {
        kind: ScenarioKind::OneTierCran,
        cell,
        macro_tier: Some(TierLoad {
            rate,
            consumed: rrh.phi_eff * rrh.p_max + rrh.static_power(),
        }),
        feasible,
    })
}

/// Transmit power recovered from a tier's consumption.
fn cell_power(load: &TierLoad, pm: &PowerModel) -> f64 {
    (load.consumed - pm.static_power()) / pm.phi_eff
}

fn one_tier_hpn(
    sys: &SystemConfig,
    links: &Links,
    partition: SffrPartition,
    qos: QosProfile,
) -> Result<ScenarioOutcome> {
    let hpn = sys.hpn_power_model()?;
    // Centre UEs sit at the small-cell distance from the HPN, edge UEs at
    // their HPN distance.
    let centre = path_gain(LinkKind::HpnToRue, sys.d_high_rrh_m)?;
    let edge = path_gain(LinkKind::HpnToRue, sys.d_low_hpn_m)?;
    let f = &links.fading;
    let mut sigma = Vec::with_capacity(links.ues * links.rbs);
    for n in 0..links.ues {
        let g = if n < sys.n_high { centre } else { edge };
        for k in 0..links.rbs {
            sigma.push(g * f.h_hpn[n * links.rbs + k] / links.noise_w);
        }
    }
    let ch = ChannelState::from_parts(links.ues, links.rbs, links.b0, sigma, alloc::vec![0.0; links.rbs])?;
    let params = SystemParams {
        n_high: sys.n_high,
        n_low: sys.n_low,
        partition,
        qos,
        power: hpn,
        delta0: f64::INFINITY,
        access: RbAccess::Sffr,
    };
    let (cell, feasible) = classical(&ch, &params)?;
    Ok(ScenarioOutcome {
        kind: ScenarioKind::OneTierHpn,
        cell,
        macro_tier: None,
        feasible,
    })
}

/// HPN serving the edge UEs on Ω2 with equal per-RB power, each RB to the
/// edge UE with the best SINR given `pbs_interference[k]` (W) received at
/// that UE per W of PBS power. Returns the load and the chosen UE per Ω2 RB.
fn hpn_on_shared(
    sys: &SystemConfig,
    links: &Links,
    partition: &SffrPartition,
    pbs_powers: &[f64],
) -> Result<(TierLoad, Vec<Option<usize>>)> {
    let hpn = sys.hpn_power_model()?;
    let shared = partition.shared();
    let per_rb = hpn.p_max / shared.len().max(1) as f64;
    let mut rate = 0.0;
    let mut chosen = alloc::vec![None; links.rbs];
    for &k in shared {
        let mut best: Option<(usize, f64)> = None;
        for m in sys.n_high..links.ues {
            let interference = pbs_powers[k] * links.small(m, k);
            let s = per_rb * links.macro_site(m, k) / (interference + links.noise_w);
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((m, s));
            }
        }
        if let Some((m, s)) = best {
            chosen[k] = Some(m);
            rate += links.b0 * libm::log2(1.0 + s);
        }
    }
    let active = chosen.iter().filter(|c| c.is_some()).count() as f64;
    Ok((
        TierLoad {
            rate,
            consumed: hpn.phi_eff * per_rb * active + hpn.static_power(),
        },
        chosen,
    ))
}

fn pico_params(
    sys: &SystemConfig,
    pico: &PicoConfig,
    partition: SffrPartition,
    delta0: f64,
    access: RbAccess,
) -> Result<SystemParams> {
    Ok(SystemParams {
        n_high: 0,
        n_low: sys.n_high,
        partition,
        // The PBS serves only centre UEs, all at the high floor.
        qos: QosProfile::new(sys.eta_r_bps, sys.eta_r_bps)?,
        power: pico.power_model()?,
        delta0,
        access,
    })
}

fn overlaid(
    sys: &SystemConfig,
    pico: &PicoConfig,
    links: &Links,
    partition: &SffrPartition,
) -> Result<ScenarioOutcome> {
    let ex = partition.exclusive();
    let mut sigma = Vec::with_capacity(sys.n_high * ex.len());
    for n in 0..sys.n_high {
        for &k in ex {
            sigma.push(links.small(n, k) / links.noise_w);
        }
    }
    let ch = ChannelState::from_parts(sys.n_high, ex.len(), links.b0, sigma, alloc::vec![0.0; ex.len()])?;
    let sub = SffrPartition::from_ratio(ex.len(), 0.0, links.b0)?;
    let params = pico_params(sys, pico, sub, f64::INFINITY, RbAccess::Open)?;
    let (cell, feasible) = classical(&ch, &params)?;
    let (hpn, _) = hpn_on_shared(sys, links, partition, &alloc::vec![0.0; links.rbs])?;
    Ok(ScenarioOutcome {
        kind: ScenarioKind::TwoTierOverlaid,
        cell,
        macro_tier: Some(hpn),
        feasible,
    })
}

fn underlaid(
    sys: &SystemConfig,
    pico: &PicoConfig,
    links: &Links,
    partition: SffrPartition,
    outer: &OuterConfig,
    inner: &InnerConfig,
) -> Result<ScenarioOutcome> {
    let hpn = sys.hpn_power_model()?;
    let per_rb = hpn.p_max / partition.shared().len().max(1) as f64;
    // HPN scheduling on Ω2 as seen without PBS interference decides which
    // edge UE the PBS must protect on each shared RB.
    let (_, chosen) = hpn_on_shared(sys, links, &partition, &alloc::vec![0.0; links.rbs])?;
    let mut sigma = Vec::with_capacity(sys.n_high * links.rbs);
    for n in 0..sys.n_high {
        for k in 0..links.rbs {
            let interference = if partition.is_shared(k) {
                per_rb * links.macro_site(n, k)
            } else {
                0.0
            };
            sigma.push(links.small(n, k) / (interference + links.noise_w));
        }
    }
    let g_r2m = (0..links.rbs)
        .map(|k| chosen[k].map_or(0.0, |m| links.small(m, k)))
        .collect();
    let ch = ChannelState::from_parts(sys.n_high, links.rbs, links.b0, sigma, g_r2m)?;
    let edge_gain = path_gain(LinkKind::HpnToRue, sys.d_low_hpn_m)?;
    let delta0 = delta0_from_eta_hue(
        db_to_linear(sys.eta_hue_db),
        per_rb,
        edge_gain,
        links.noise_w,
        sys.l_rrh,
    )?;
    let params = pico_params(sys, pico, partition.clone(), delta0, RbAccess::Open)?;
    let sol = solve_ee(&ch, &params, outer, inner)?;
    let (macro_load, _) = hpn_on_shared(sys, links, &partition, &sol.powers)?;
    Ok(ScenarioOutcome {
        kind: ScenarioKind::TwoTierUnderlaid,
        cell: TierLoad {
            rate: sol.rate,
            consumed: sol.consumed,
        },
        macro_tier: Some(macro_load),
        feasible: true,
    })
}
