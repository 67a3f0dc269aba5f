//! Closed-form per-RB solution of the Lagrangian: the water-filling power
//! and the RB indicator metric `H` obtained by substituting it back.

use core::f64::consts::LN_2;

use libm::log2;

use crate::channel::ChannelState;
use crate::model::{DualState, PowerModel};

/// Water level `omega` for one (UE, RB) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaterLevel {
    Finite(f64),
    /// Zero price: `gamma`, `lambda_k` and `nu` all vanish.
    Unbounded,
}

/// Marginal cost of one watt on RB `k`: `gamma * phi + lambda_k * g_k + nu`.
pub fn rb_price(gamma: f64, phi_eff: f64, lambda_k: f64, g_k: f64, nu: f64) -> f64 {
    gamma * phi_eff + lambda_k * g_k + nu
}

/// `omega = B0 (1 + beta) / (ln 2 * price)`.
pub fn water_level(b0: f64, beta_n: f64, price: f64) -> WaterLevel {
    if price > 0.0 {
        WaterLevel::Finite(b0 * (1.0 + beta_n) / (LN_2 * price))
    } else {
        WaterLevel::Unbounded
    }
}

/// `[omega - 1/sigma]^+`; `None` when the level is unbounded and sigma > 0.
pub fn water_fill(level: WaterLevel, sigma: f64) -> Option<f64> {
    if !(sigma > 0.0) {
        return Some(0.0);
    }
    match level {
        WaterLevel::Finite(w) => Some((w - 1.0 / sigma).max(0.0)),
        WaterLevel::Unbounded => None,
    }
}

/// Optimal power of UE `n` on RB `k` for the given multipliers.
pub fn water_fill_power(
    n: usize,
    k: usize,
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    pm: &PowerModel,
) -> Option<f64> {
    let price = rb_price(gamma, pm.phi_eff, dual.lambda[k], ch.g_r2m(k), dual.nu);
    water_fill(water_level(ch.rb_bandwidth_hz(), dual.beta[n], price), ch.sigma(n, k))
}

/// RB indicator metric
/// `H = [(1+beta) log2(omega sigma)]^+ - (1+beta)/ln2 [1 - 1/(omega sigma)]^+`.
///
/// `B0 * H` is the per-RB dual term for this UE. Unbounded levels give
/// `+inf` for any positive sigma.
pub fn rb_metric(beta_n: f64, level: WaterLevel, sigma: f64) -> f64 {
    if !(sigma > 0.0) {
        return 0.0;
    }
    let w = match level {
        WaterLevel::Finite(w) => w,
        WaterLevel::Unbounded => return f64::INFINITY,
    };
    let x = w * sigma;
    if x <= 1.0 {
        return 0.0;
    }
    let weight = 1.0 + beta_n;
    weight * log2(x) - weight / LN_2 * (1.0 - 1.0 / x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Per-RB Lagrangian term for a single UE with unit bandwidth.
    fn per_rb_objective(weight: f64, sigma: f64, price: f64, p: f64) -> f64 {
        weight * log2(1.0 + sigma * p) - price * p
    }

    #[test]
    fn below_water_gets_nothing() {
        assert_eq!(water_fill(WaterLevel::Finite(0.1), 10.0), Some(0.0));
        assert_eq!(water_fill(WaterLevel::Finite(0.1), 0.0), Some(0.0));
        assert_eq!(water_fill(WaterLevel::Unbounded, 0.0), Some(0.0));
        assert_eq!(water_fill(WaterLevel::Unbounded, 1.0), None);
    }

    #[test]
    fn level_with_only_nu_matches_grid_search() {
        // B0 = 1, beta = 0, gamma = lambda = 0, nu = 0.5, phi = 2.
        let price = rb_price(0.0, 2.0, 0.0, 0.0, 0.5);
        let level = water_level(1.0, 0.0, price);
        let WaterLevel::Finite(w) = level else { panic!() };
        assert!((w - 2.885_390_081_777_927).abs() < 1e-12);
        let p = water_fill(level, 10.0).unwrap();
        assert!((p - 2.785_390_081_777_927).abs() < 1e-12);

        // Independent 1-D grid search over [0, 10] W at 1e-6 W spacing.
        let mut best = (0.0, f64::NEG_INFINITY);
        let steps = 10_000_000;
        for i in 0..=steps {
            let q = 10.0 * i as f64 / steps as f64;
            let v = per_rb_objective(1.0, 10.0, price, q);
            if v > best.1 {
                best = (q, v);
            }
        }
        assert!((best.0 - p).abs() < 2e-6, "grid {} vs closed form {p}", best.0);
    }

    #[test]
    fn level_scales_with_qos_weight() {
        let WaterLevel::Finite(w1) = water_level(2e5, 0.0, 3.0) else { panic!() };
        let WaterLevel::Finite(w2) = water_level(2e5, 1.0, 3.0) else { panic!() };
        assert_eq!(w2, 2.0 * w1);
    }

    #[test]
    fn metric_zero_at_water_surface() {
        assert_eq!(rb_metric(0.0, WaterLevel::Finite(1.0), 1.0), 0.0);
        assert_eq!(rb_metric(3.0, WaterLevel::Finite(0.5), 1.5), 0.0);
    }

    #[test]
    fn metric_matches_substituted_objective() {
        // omega * sigma = 2, beta = 0: H = 1 - 1/(2 ln 2).
        let h = rb_metric(0.0, WaterLevel::Finite(2.0), 1.0);
        assert!((h - 0.278_652_479_555_518_3).abs() < 1e-15, "{h}");
        // Cross-check: evaluate the per-RB objective at the water-filling
        // power with unit bandwidth.
        let price = 1.0 / (LN_2 * 2.0);
        let p = water_fill(WaterLevel::Finite(2.0), 1.0).unwrap();
        assert!((per_rb_objective(1.0, 1.0, price, p) - h).abs() < 1e-15);
    }

    #[test]
    fn metric_increases_with_cinr() {
        let level = WaterLevel::Finite(0.7);
        let mut prev = 0.0;
        for i in 1..2000 {
            let sigma = 1.0 / 0.7 * (1.0 + i as f64 * 0.01);
            let h = rb_metric(0.4, level, sigma);
            assert!(h > prev, "not increasing at sigma={sigma}");
            prev = h;
        }
    }
}
