//! Reproducible channel snapshots: distance path loss, Rayleigh fast fading
//! and the two-branch CINR of the enhanced S-FFR split.
//!
//! Every random quantity is drawn from its own ChaCha20 substream keyed by
//! `(master seed, snapshot index, quantity tag)`, so a snapshot can be
//! regenerated alone and in any order. Within a substream draws are taken
//! UE-major, then RB.

use alloc::vec::Vec;

use libm::{log, log10};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::model::{HpnModel, SffrPartition};
use crate::units::loss_db_to_gain;

/// Identifier of the snapshot generator; bump when the draw order changes.
pub const CHANNEL_RNG_VERSION: &str = "chacha20-substream-v1";

/// Link classes with their own path-loss law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// `31.5 + 40 log10(d)`.
    RrhToRue,
    /// `31.5 + 35 log10(d)`.
    HpnToRue,
    /// `31.5 + 35 log10(d)`.
    RrhToHue,
    /// Same law as the other HPN links.
    HpnToHue,
}

/// Path loss in dB for a distance in metres.
pub fn path_loss_db(kind: LinkKind, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    let slope = match kind {
        LinkKind::RrhToRue => 40.0,
        LinkKind::HpnToRue | LinkKind::RrhToHue | LinkKind::HpnToHue => 35.0,
    };
    Ok(31.5 + slope * log10(d))
}

/// Linear path gain `10^(-PL/10)`.
pub fn path_gain(kind: LinkKind, d: f64) -> Result<f64> {
    path_loss_db(kind, d).map(loss_db_to_gain)
}

/// Node and UE placement, in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// RRH to RUE `n`.
    pub d_rrh_rue: Vec<f64>,
    /// Reference HPN to RUE `n`.
    pub d_hpn_rue: Vec<f64>,
    /// Reference RRH to the HUE reusing an Ω2 RB.
    pub d_rrh_hue: f64,
    /// HPN to its HUEs.
    pub d_hpn_hue: f64,
    pub n_high: usize,
    pub n_low: usize,
    pub t_hues: usize,
    /// Number of RRHs under the HPN.
    pub l_rrh: usize,
}

impl Geometry {
    /// The reference layout: high-QoS RUEs at 50 m from the RRH and 450 m
    /// from the HPN, low-QoS RUEs at 75 m and 375 m, HUEs at 375 m from the
    /// HPN and 125 m from the reference RRH.
    pub fn reference(n_high: usize, n_low: usize, t_hues: usize, l_rrh: usize) -> Self {
        let mut d_rrh_rue = Vec::with_capacity(n_high + n_low);
        let mut d_hpn_rue = Vec::with_capacity(n_high + n_low);
        for n in 0..n_high + n_low {
            let high = n < n_high;
            d_rrh_rue.push(if high { 50.0 } else { 75.0 });
            d_hpn_rue.push(if high { 450.0 } else { 375.0 });
        }
        Self {
            d_rrh_rue,
            d_hpn_rue,
            d_rrh_hue: 125.0,
            d_hpn_hue: 375.0,
            n_high,
            n_low,
            t_hues,
            l_rrh,
        }
    }

    pub fn ues(&self) -> usize {
        self.n_high + self.n_low
    }

    /// Multiplies every distance by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        g.d_rrh_rue.iter_mut().for_each(|d| *d *= factor);
        g.d_hpn_rue.iter_mut().for_each(|d| *d *= factor);
        g.d_rrh_hue *= factor;
        g.d_hpn_hue *= factor;
        g
    }

    fn validate(&self) -> Result<()> {
        if self.d_rrh_rue.len() != self.ues() {
            return Err(Error::DimensionMismatch {
                what: "d_rrh_rue",
                expected: self.ues(),
                found: self.d_rrh_rue.len(),
            });
        }
        if self.d_hpn_rue.len() != self.ues() {
            return Err(Error::DimensionMismatch {
                what: "d_hpn_rue",
                expected: self.ues(),
                found: self.d_hpn_rue.len(),
            });
        }
        let all = self
            .d_rrh_rue
            .iter()
            .chain(&self.d_hpn_rue)
            .chain([&self.d_rrh_hue, &self.d_hpn_hue]);
        for &d in all {
            if !(d > 0.0) {
                return Err(Error::NonPositiveDistance(d));
            }
        }
        Ok(())
    }
}

/// Quantity tags of the per-snapshot substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum DrawTag {
    RrhToRue = 1,
    HpnToRue = 2,
    RrhToHue = 3,
    HpnToHue = 4,
    /// Free for scenario-specific links.
    Auxiliary = 5,
}

/// Deterministic generator for one `(master, snapshot, tag)` triple.
pub fn substream(master_seed: u64, snapshot: u64, tag: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&snapshot.to_le_bytes());
    key[16..24].copy_from_slice(&tag.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

/// Uniform draw on `(0, 1]` with 53 bits of resolution.
fn unit_open_closed<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let bits = rng.next_u64() >> 11;
    (bits as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// `len` i.i.d. Rayleigh power gains: exponential with unit mean.
pub fn draw_fading<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| -log(unit_open_closed(rng))).collect()
}

/// Raw fading draws behind a snapshot, kept for audits and dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraws {
    /// `ues x K`, RRH to RUE.
    pub h_rrh: Vec<f64>,
    /// `ues x K`, HPN to RUE.
    pub h_hpn: Vec<f64>,
    /// `K`, reference RRH to the HUE on each RB.
    pub h_r2m: Vec<f64>,
    /// `T x K`, HPN to HUE.
    pub h_hue: Vec<f64>,
}

impl FadingDraws {
    pub fn draw(master_seed: u64, snapshot: u64, ues: usize, t_hues: usize, rbs: usize) -> Self {
        let gen = |tag: DrawTag, len| draw_fading(&mut substream(master_seed, snapshot, tag as u64), len);
        Self {
            h_rrh: gen(DrawTag::RrhToRue, ues * rbs),
            h_hpn: gen(DrawTag::HpnToRue, ues * rbs),
            h_r2m: gen(DrawTag::RrhToHue, rbs),
            h_hue: gen(DrawTag::HpnToHue, t_hues * rbs),
        }
    }
}

/// One channel snapshot as seen by the reference RRH.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    ues: usize,
    rbs: usize,
    t_hues: usize,
    rb_bandwidth_hz: f64,
    noise_w: f64,
    /// Per-W CINR, `ues x K`.
    sigma: Vec<f64>,
    /// RRH-to-HUE coupling gain per RB.
    g_r2m: Vec<f64>,
    /// HPN-to-HUE gain, `T x K`.
    hue_gain: Vec<f64>,
    pub seed: u64,
    pub snapshot_id: u64,
    pub fading: Option<FadingDraws>,
}

impl ChannelState {
    /// Builds a state directly from CINRs and coupling gains.
    pub fn from_parts(
        ues: usize,
        rbs: usize,
        rb_bandwidth_hz: f64,
        sigma: Vec<f64>,
        g_r2m: Vec<f64>,
    ) -> Result<Self> {
        if sigma.len() != ues * rbs {
            return Err(Error::DimensionMismatch {
                what: "sigma",
                expected: ues * rbs,
                found: sigma.len(),
            });
        }
        if g_r2m.len() != rbs {
            return Err(Error::DimensionMismatch {
                what: "g_r2m",
                expected: rbs,
                found: g_r2m.len(),
            });
        }
        if sigma.iter().chain(&g_r2m).any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "sigma/g_r2m",
                reason: "entries must be nonnegative",
            });
        }
        Ok(Self {
            ues,
            rbs,
            t_hues: 0,
            rb_bandwidth_hz,
            noise_w: 0.0,
            sigma,
            g_r2m,
            hue_gain: Vec::new(),
            seed: 0,
            snapshot_id: 0,
            fading: None,
        })
    }

    pub fn ues(&self) -> usize {
        self.ues
    }

    pub fn rbs(&self) -> usize {
        self.rbs
    }

    pub fn t_hues(&self) -> usize {
        self.t_hues
    }

    pub fn rb_bandwidth_hz(&self) -> f64 {
        self.rb_bandwidth_hz
    }

    pub fn noise_w(&self) -> f64 {
        self.noise_w
    }

    pub fn sigma(&self, n: usize, k: usize) -> f64 {
        self.sigma[n * self.rbs + k]
    }

    pub fn sigma_matrix(&self) -> &[f64] {
        &self.sigma
    }

    pub fn g_r2m(&self, k: usize) -> f64 {
        self.g_r2m[k]
    }

    pub fn g_r2m_all(&self) -> &[f64] {
        &self.g_r2m
    }

    pub fn hue_gain(&self, t: usize, k: usize) -> f64 {
        self.hue_gain[t * self.rbs + k]
    }

    /// Per-W CINR of every HUE on every RB given the interference power
    /// (in W) each RB receives from the RRH tier.
    pub fn hue_cinr(&self, rrh_interference: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.t_hues * self.rbs);
        for t in 0..self.t_hues {
            for k in 0..self.rbs {
                out.push(self.hue_gain(t, k) / (rrh_interference[k] + self.noise_w));
            }
        }
        out
    }
}

/// Draws a snapshot for the reference RRH.
///
/// Ω1 entries use the noise-only denominator; Ω2 entries add the HPN's
/// per-RB transmit power through the HPN-to-RUE link.
pub fn build_cinr(
    geom: &Geometry,
    part: &SffrPartition,
    hpn: &HpnModel,
    noise_psd_w_per_hz: f64,
    master_seed: u64,
    snapshot: u64,
) -> Result<ChannelState> {
    geom.validate()?;
    let ues = geom.ues();
    let rbs = part.k_total();
    let fading = FadingDraws::draw(master_seed, snapshot, ues, geom.t_hues, rbs);
    build_cinr_from_draws(geom, part, hpn, noise_psd_w_per_hz, fading, master_seed, snapshot)
}

/// As [`build_cinr`] with caller-supplied fading.
pub fn build_cinr_from_draws(
    geom: &Geometry,
    part: &SffrPartition,
    hpn: &HpnModel,
    noise_psd_w_per_hz: f64,
    fading: FadingDraws,
    master_seed: u64,
    snapshot: u64,
) -> Result<ChannelState> {
    geom.validate()?;
    let ues = geom.ues();
    let rbs = part.k_total();
    let t_hues = geom.t_hues;
    for (what, expected, found) in [
        ("h_rrh", ues * rbs, fading.h_rrh.len()),
        ("h_hpn", ues * rbs, fading.h_hpn.len()),
        ("h_r2m", rbs, fading.h_r2m.len()),
        ("h_hue", t_hues * rbs, fading.h_hue.len()),
    ] {
        if expected != found {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            });
        }
    }
    let b0 = part.rb_bandwidth_hz();
    let noise_w = noise_psd_w_per_hz * b0;
    let mut sigma = Vec::with_capacity(ues * rbs);
    for n in 0..ues {
        let g_r = path_gain(LinkKind::RrhToRue, geom.d_rrh_rue[n])?;
        let g_m = path_gain(LinkKind::HpnToRue, geom.d_hpn_rue[n])?;
        for k in 0..rbs {
            let signal = g_r * fading.h_rrh[n * rbs + k];
            let denom = if part.is_shared(k) {
                hpn.per_rb_power * g_m * fading.h_hpn[n * rbs + k] + noise_w
            } else {
                noise_w
            };
            sigma.push(signal / denom);
        }
    }
    let g_r2m_path = path_gain(LinkKind::RrhToHue, geom.d_rrh_hue)?;
    let g_r2m = fading.h_r2m.iter().map(|h| g_r2m_path * h).collect();
    let g_hue_path = path_gain(LinkKind::HpnToHue, geom.d_hpn_hue)?;
    let hue_gain = fading.h_hue.iter().map(|h| g_hue_path * h).collect();
    Ok(ChannelState {
        ues,
        rbs,
        t_hues,
        rb_bandwidth_hz: b0,
        noise_w,
        sigma,
        g_r2m,
        hue_gain,
        seed: master_seed,
        snapshot_id: snapshot,
        fading: Some(fading),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PowerModel;

    fn hpn(p_total: f64, rbs: usize) -> HpnModel {
        HpnModel::new(PowerModel::new(4.0, 10.0, 0.2, p_total).unwrap(), rbs, 1).unwrap()
    }

    #[test]
    fn path_loss_reference_values() {
        // Frozen from direct evaluation of the two log-distance laws.
        let rue = path_loss_db(LinkKind::RrhToRue, 50.0).unwrap();
        assert!((rue - 99.458_800_173_440_75).abs() < 1e-9, "{rue}");
        let hpn = path_loss_db(LinkKind::HpnToRue, 375.0).unwrap();
        assert!((hpn - 121.591_094_370_470_16).abs() < 1e-9, "{hpn}");
        for kind in [LinkKind::RrhToRue, LinkKind::HpnToRue, LinkKind::RrhToHue] {
            assert_eq!(path_loss_db(kind, 1.0).unwrap(), 31.5);
        }
    }

    #[test]
    fn nonpositive_distance_rejected() {
        assert_eq!(
            path_loss_db(LinkKind::RrhToRue, 0.0),
            Err(Error::NonPositiveDistance(0.0))
        );
        assert!(path_loss_db(LinkKind::HpnToRue, -3.0).is_err());
    }

    #[test]
    fn fading_moments() {
        let mut rng = substream(7, 0, 99);
        let h = draw_fading(&mut rng, 1_000_000);
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        let below = h.iter().filter(|&&x| x <= 1.0).count() as f64 / h.len() as f64;
        let cdf = 1.0 - libm::exp(-1.0);
        assert!((below - cdf).abs() < 0.01, "cdf {below}");
        assert!(h.iter().all(|&x| x >= 0.0 && x.is_finite()));
    }

    #[test]
    fn same_seed_same_draws() {
        let a = draw_fading(&mut substream(3, 11, 1), 64);
        let b = draw_fading(&mut substream(3, 11, 1), 64);
        assert_eq!(a, b);
        let c = draw_fading(&mut substream(3, 12, 1), 64);
        assert_ne!(a, c);
    }

    #[test]
    fn unit_gains_give_unit_cinr_on_omega1() {
        let geom = Geometry {
            d_rrh_rue: alloc::vec![1.0],
            d_hpn_rue: alloc::vec![1.0],
            d_rrh_hue: 1.0,
            d_hpn_hue: 1.0,
            n_high: 1,
            n_low: 0,
            t_hues: 0,
            l_rrh: 1,
        };
        let part = SffrPartition::new(alloc::vec![0], alloc::vec![], 1, 1.0).unwrap();
        let fading = FadingDraws {
            h_rrh: alloc::vec![1.0],
            h_hpn: alloc::vec![1.0],
            h_r2m: alloc::vec![1.0],
            h_hue: alloc::vec![],
        };
        // Path loss at 1 m is 31.5 dB; a noise PSD with the same attenuation
        // makes the CINR exactly one.
        let noise = loss_db_to_gain(31.5);
        let ch = build_cinr_from_draws(&geom, &part, &hpn(1.0, 1), noise, fading, 0, 0).unwrap();
        assert!((ch.sigma(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_branch_reduces_to_noise_only_without_hpn_power() {
        let geom = Geometry::reference(1, 1, 1, 12);
        let noise = crate::units::dbm_to_watt(-174.0);
        let p1 = SffrPartition::new(alloc::vec![0, 1], alloc::vec![], 2, 200e3).unwrap();
        let p2 = SffrPartition::new(alloc::vec![], alloc::vec![0, 1], 2, 200e3).unwrap();
        let silent = hpn(1e-300, 2);
        let a = build_cinr(&geom, &p1, &silent, noise, 5, 0).unwrap();
        let b = build_cinr(&geom, &p2, &silent, noise, 5, 0).unwrap();
        for n in 0..2 {
            for k in 0..2 {
                let rel = (a.sigma(n, k) - b.sigma(n, k)).abs() / a.sigma(n, k);
                assert!(rel < 1e-12);
            }
        }
    }

    #[test]
    fn distance_scaling_costs_forty_db_on_rue_links() {
        let g1 = path_gain(LinkKind::RrhToRue, 50.0).unwrap();
        let g10 = path_gain(LinkKind::RrhToRue, 500.0).unwrap();
        assert!((crate::units::linear_to_db(g1 / g10) - 40.0).abs() < 1e-9);
    }
}
