//! Decibel and power-unit conversions.
//!
//! Path losses are positive dB attenuations, so a loss of `L` dB maps to the
//! linear gain `10^(-L/10)`. Absolute powers in dBm map to watts through
//! `10^((dBm - 30)/10)`.

use libm::{log10, pow};

/// Linear power ratio for a dB value.
pub fn db_to_linear(db: f64) -> f64 {
    pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * log10(x)
}

/// Linear gain of a path loss expressed as a positive dB attenuation.
pub fn loss_db_to_gain(loss_db: f64) -> f64 {
    pow(10.0, -loss_db / 10.0)
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    pow(10.0, (dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * log10(w) + 30.0
}

/// Noise power in watts over `bandwidth_hz` for a PSD given in dBm/Hz.
pub fn noise_power_watt(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watt(psd_dbm_per_hz) * bandwidth_hz
}
