//! Physical parameters of the reference deployment and their translation
//! into solver inputs.

use crate::channel::{build_cinr, path_gain, ChannelState, Geometry, LinkKind};
use crate::error::Result;
use crate::model::{
    delta0_from_eta_hue, HpnModel, PowerModel, QosProfile, RbAccess, SffrPartition, SystemParams,
};
use crate::units::{db_to_linear, dbm_to_watt, noise_power_watt};

/// Every physical knob of one H-CRAN cell, in engineering units.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub k_total: usize,
    /// Total bandwidth across all RBs, Hz.
    pub bandwidth_hz: f64,
    /// High-QoS RUEs (N).
    pub n_high: usize,
    /// Low-QoS RUEs (M).
    pub n_low: usize,
    /// RRHs under the HPN (L).
    pub l_rrh: usize,
    /// Fraction of RBs in the exclusive set Ω1.
    pub omega1_ratio: f64,
    pub eta_r_bps: f64,
    pub eta_er_bps: f64,
    /// HUE decoding threshold, dB.
    pub eta_hue_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub rrh_p_max_dbm: f64,
    pub rrh_phi_eff: f64,
    pub rrh_p_circuit_w: f64,
    pub fronthaul_w: f64,
    pub hpn_p_max_dbm: f64,
    pub hpn_phi_eff: f64,
    pub hpn_p_circuit_w: f64,
    pub backhaul_w: f64,
    pub d_high_rrh_m: f64,
    pub d_high_hpn_m: f64,
    pub d_low_rrh_m: f64,
    pub d_low_hpn_m: f64,
    pub d_rrh_hue_m: f64,
    pub d_hpn_hue_m: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            k_total: 25,
            bandwidth_hz: 5e6,
            n_high: 10,
            n_low: 3,
            l_rrh: 12,
            omega1_ratio: 0.6,
            eta_r_bps: 128e3,
            eta_er_bps: 64e3,
            eta_hue_db: 0.0,
            noise_psd_dbm_hz: -174.0,
            rrh_p_max_dbm: 20.0,
            rrh_phi_eff: 2.0,
            rrh_p_circuit_w: 0.1,
            fronthaul_w: 0.2,
            hpn_p_max_dbm: 43.0,
            hpn_phi_eff: 4.0,
            hpn_p_circuit_w: 10.0,
            backhaul_w: 0.2,
            d_high_rrh_m: 50.0,
            d_high_hpn_m: 450.0,
            d_low_rrh_m: 75.0,
            d_low_hpn_m: 375.0,
            d_rrh_hue_m: 125.0,
            d_hpn_hue_m: 375.0,
        }
    }
}

/// Snapshot-independent inputs derived from a [`SystemConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub params: SystemParams,
    pub hpn: HpnModel,
    pub geometry: Geometry,
    /// Noise PSD, W/Hz.
    pub noise_psd_w_hz: f64,
}

impl SystemConfig {
    pub fn rb_bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz / self.k_total as f64
    }

    pub fn geometry(&self) -> Geometry {
        let ues = self.n_high + self.n_low;
        let high = |n: usize| n < self.n_high;
        Geometry {
            d_rrh_rue: (0..ues)
                .map(|n| if high(n) { self.d_high_rrh_m } else { self.d_low_rrh_m })
                .collect(),
            d_hpn_rue: (0..ues)
                .map(|n| if high(n) { self.d_high_hpn_m } else { self.d_low_hpn_m })
                .collect(),
            d_rrh_hue: self.d_rrh_hue_m,
            d_hpn_hue: self.d_hpn_hue_m,
            n_high: self.n_high,
            n_low: self.n_low,
            t_hues: 1,
            l_rrh: self.l_rrh,
        }
    }

    pub fn rrh_power_model(&self) -> Result<PowerModel> {
        PowerModel::new(
            self.rrh_phi_eff,
            self.rrh_p_circuit_w,
            self.fronthaul_w,
            dbm_to_watt(self.rrh_p_max_dbm),
        )
    }

    pub fn hpn_power_model(&self) -> Result<PowerModel> {
        PowerModel::new(
            self.hpn_phi_eff,
            self.hpn_p_circuit_w,
            self.backhaul_w,
            dbm_to_watt(self.hpn_p_max_dbm),
        )
    }

    pub fn deployment(&self) -> Result<Deployment> {
        let b0 = self.rb_bandwidth_hz();
        let partition = SffrPartition::from_ratio(self.k_total, self.omega1_ratio, b0)?;
        let hpn_rbs = partition.shared().len().max(1);
        let hpn = HpnModel::new(self.hpn_power_model()?, hpn_rbs, 1)?;
        let noise_psd_w_hz = noise_power_watt(self.noise_psd_dbm_hz, 1.0);
        let hue_gain = path_gain(LinkKind::HpnToHue, self.d_hpn_hue_m)?;
        let delta0 = delta0_from_eta_hue(
            db_to_linear(self.eta_hue_db),
            hpn.per_rb_power,
            hue_gain,
            noise_psd_w_hz * b0,
            self.l_rrh,
        )?;
        let params = SystemParams {
            n_high: self.n_high,
            n_low: self.n_low,
            partition,
            qos: QosProfile::new(self.eta_r_bps, self.eta_er_bps)?,
            power: self.rrh_power_model()?,
            delta0,
            access: RbAccess::Sffr,
        };
        Ok(Deployment {
            params,
            hpn,
            geometry: self.geometry(),
            noise_psd_w_hz,
        })
    }
}

impl Deployment {
    /// Channel snapshot `snapshot` under `master_seed`.
    pub fn snapshot(&self, master_seed: u64, snapshot: u64) -> Result<ChannelState> {
        build_cinr(
            &self.geometry,
            &self.params.partition,
            &self.hpn,
            self.noise_psd_w_hz,
            master_seed,
            snapshot,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_200_khz_rbs() {
        let c = SystemConfig::default();
        assert_eq!(c.rb_bandwidth_hz(), 200e3);
        let d = c.deployment().unwrap();
        assert_eq!(d.params.partition.exclusive().len(), 15);
        assert_eq!(d.params.partition.shared().len(), 10);
        assert!((d.hpn.per_rb_power - 1.995_262_314_968_88).abs() < 1e-12);
    }

    #[test]
    fn interference_cap_shrinks_with_threshold() {
        let mut c = SystemConfig::default();
        let d0 = c.deployment().unwrap().params.delta0;
        c.eta_hue_db = 20.0;
        let d20 = c.deployment().unwrap().params.delta0;
        assert!(d0 > d20 && d20 > 0.0);
    }
}
