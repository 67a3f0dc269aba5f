//! Dual decomposition of the inner problem into K per-RB subproblems,
//! coordinated by projected subgradient steps on `(beta, lambda, nu)`.

use alloc::vec::Vec;

use libm::sqrt;

use super::waterfill::{rb_metric, rb_price, water_fill, water_level, WaterLevel};
use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::model::{rb_rate, AllocationMatrix, DualState, SystemParams};

/// Winner of RB `k` under the current multipliers.
///
/// Candidates are restricted to the UEs eligible for `k`. Ties keep the
/// lowest UE index. At a zero price every level is unbounded; the limit of
/// `H` then ranks UEs by `(1 + beta)` first and CINR second.
pub fn best_ue_for_rb(
    k: usize,
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<(usize, f64)> {
    let b0 = ch.rb_bandwidth_hz();
    let price = rb_price(gamma, params.power.phi_eff, dual.lambda[k], ch.g_r2m(k), dual.nu);
    let mut best: Option<(usize, f64)> = None;
    if price > 0.0 {
        for n in params.eligible_ues(k) {
            let h = rb_metric(dual.beta[n], water_level(b0, dual.beta[n], price), ch.sigma(n, k));
            if best.map_or(true, |(_, bh)| h > bh) {
                best = Some((n, h));
            }
        }
    } else {
        let mut key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for n in params.eligible_ues(k) {
            let cand = (1.0 + dual.beta[n], ch.sigma(n, k));
            if best.is_none() || cand > key {
                key = cand;
                let h = if cand.1 > 0.0 { f64::INFINITY } else { 0.0 };
                best = Some((n, h));
            }
        }
    }
    best.ok_or(Error::EmptyEligibleSet { rb: k })
}

/// Per-RB owners maximising `H`.
pub fn assign_owners(
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<Vec<usize>> {
    (0..params.rbs())
        .map(|k| best_ue_for_rb(k, dual, gamma, ch, params).map(|(n, _)| n))
        .collect()
}

pub fn assign_rbs(
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<AllocationMatrix> {
    let owners = assign_owners(dual, gamma, ch, params)?;
    let owners: Vec<Option<usize>> = owners.into_iter().map(Some).collect();
    Ok(AllocationMatrix::from_owners(params.ues(), &owners))
}

/// Water-filling powers for a per-RB owner list.
///
/// RBs with an unbounded level are first set to `p_max`; if that (or
/// anything else) overshoots the budget the whole vector is scaled down
/// proportionally.
pub fn dual_powers(
    owners: &[usize],
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> Vec<f64> {
    let b0 = ch.rb_bandwidth_hz();
    let pm = &params.power;
    let mut powers: Vec<f64> = owners
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let price = rb_price(gamma, pm.phi_eff, dual.lambda[k], ch.g_r2m(k), dual.nu);
            water_fill(water_level(b0, dual.beta[n], price), ch.sigma(n, k)).unwrap_or(pm.p_max)
        })
        .collect();
    let total: f64 = powers.iter().sum();
    if total > pm.p_max {
        let scale = pm.p_max / total;
        powers.iter_mut().for_each(|p| *p *= scale);
    }
    powers
}

/// Subgradient of the dual function at the current multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradients {
    /// `rate_n - floor_n`, bit/s.
    pub beta: Vec<f64>,
    /// `delta0 - p_k g_k` on Ω2, zero on Ω1, W.
    pub lambda: Vec<f64>,
    /// `p_max - sum p`, W.
    pub nu: f64,
}

pub fn subgradients(
    owners: &[usize],
    powers: &[f64],
    ch: &ChannelState,
    params: &SystemParams,
) -> Subgradients {
    let b0 = ch.rb_bandwidth_hz();
    let mut rates = alloc::vec![0.0; params.ues()];
    for (k, &n) in owners.iter().enumerate() {
        rates[n] += rb_rate(b0, ch.sigma(n, k), powers[k]);
    }
    let beta = rates
        .iter()
        .enumerate()
        .map(|(n, r)| r - params.rate_floor(n))
        .collect();
    let lambda = (0..params.rbs())
        .map(|k| {
            if params.partition.is_shared(k) {
                params.delta0 - powers[k] * ch.g_r2m(k)
            } else {
                0.0
            }
        })
        .collect();
    let nu = params.power.p_max - powers.iter().sum::<f64>();
    Subgradients { beta, lambda, nu }
}

/// Per-component step constants `c_x`; iteration `l` uses `c_x / sqrt(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes {
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu: f64,
}

impl StepSizes {
    /// Scales each constant by `scale * (multiplier scale) / (constraint scale)`.
    ///
    /// The reference price is `gamma * phi`, or when that is zero the price
    /// that puts an even share `p_max / K` of the budget on every RB.
    pub fn normalized(scale: f64, gamma: f64, ch: &ChannelState, params: &SystemParams) -> Self {
        let b0 = ch.rb_bandwidth_hz();
        let pm = &params.power;
        let even_share = pm.p_max / params.rbs() as f64;
        let price_ref = (gamma * pm.phi_eff).max(b0 / (core::f64::consts::LN_2 * even_share) * 1e-3);
        let beta = (0..params.ues())
            .map(|n| scale / params.rate_floor(n).max(b0))
            .collect();
        let delta_ref = params.delta0.max(f64::MIN_POSITIVE);
        let lambda = (0..params.rbs())
            .map(|k| {
                let g = ch.g_r2m(k);
                if params.partition.is_shared(k) && g > 0.0 {
                    scale * price_ref / (g * delta_ref)
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            beta,
            lambda,
            nu: scale * price_ref / pm.p_max,
        }
    }
}

/// Projected step `x <- [x - (c / sqrt(l)) grad]^+` on every multiplier.
pub fn update_duals(
    dual: &DualState,
    grads: &Subgradients,
    l: usize,
    steps: &StepSizes,
    params: &SystemParams,
) -> DualState {
    let root = sqrt(l.max(1) as f64);
    let beta = dual
        .beta
        .iter()
        .zip(&grads.beta)
        .zip(&steps.beta)
        .map(|((x, g), c)| (x - c / root * g).max(0.0))
        .collect();
    let lambda = dual
        .lambda
        .iter()
        .zip(&grads.lambda)
        .zip(&steps.lambda)
        .enumerate()
        .map(|(k, ((x, g), c))| {
            if params.partition.is_shared(k) {
                (x - c / root * g).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    DualState {
        beta,
        lambda,
        nu: (dual.nu - steps.nu / root * grads.nu).max(0.0),
    }
}

/// Dual function `g(beta, lambda, nu)`; `+inf` if some RB has a zero price.
pub fn dual_value(
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<f64> {
    assign_with_value(dual, gamma, ch, params).map(|(_, g)| g)
}

/// [`assign_owners`] and [`dual_value`] in one pass over the RBs.
pub fn assign_with_value(
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<(Vec<usize>, f64)> {
    let b0 = ch.rb_bandwidth_hz();
    let mut owners = Vec::with_capacity(params.rbs());
    let mut g = 0.0;
    for k in 0..params.rbs() {
        let (n, h) = best_ue_for_rb(k, dual, gamma, ch, params)?;
        owners.push(n);
        g += b0 * h;
    }
    Ok((owners, g + multiplier_terms(dual, gamma, params)))
}

/// The part of the dual function that does not depend on the assignment.
fn multiplier_terms(dual: &DualState, gamma: f64, params: &SystemParams) -> f64 {
    let mut g = -gamma * params.power.static_power();
    for n in 0..params.ues() {
        g -= dual.beta[n] * params.rate_floor(n);
    }
    for &k in params.partition.shared() {
        g += dual.lambda[k] * params.delta0;
    }
    g + dual.nu * params.power.p_max
}

/// Largest constraint violation of `(owners, powers)`, relative to each
/// constraint's own scale.
pub fn max_relative_violation(
    owners: &[usize],
    powers: &[f64],
    ch: &ChannelState,
    params: &SystemParams,
) -> f64 {
    let g = subgradients(owners, powers, ch, params);
    let mut worst: f64 = 0.0;
    for (n, s) in g.beta.iter().enumerate() {
        let floor = params.rate_floor(n);
        if floor > 0.0 {
            worst = worst.max(-s / floor);
        }
    }
    if params.delta0 > 0.0 {
        for s in &g.lambda {
            worst = worst.max(-s / params.delta0);
        }
    } else if g.lambda.iter().any(|&s| s < 0.0) {
        worst = f64::INFINITY;
    }
    worst.max(-g.nu / params.power.p_max)
}

/// Largest multiplier change between two iterates, relative to magnitude.
pub fn dual_movement(a: &DualState, b: &DualState) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
    let mut m = rel(a.nu, b.nu);
    if a.nu == 0.0 && b.nu == 0.0 {
        m = 0.0;
    }
    for (x, y) in a.beta.iter().zip(&b.beta).chain(a.lambda.iter().zip(&b.lambda)) {
        if *x != 0.0 || *y != 0.0 {
            m = m.max(rel(*x, *y));
        }
    }
    m
}

/// Level used by the owner of RB `k`, exposed for diagnostics.
pub fn owner_level(
    k: usize,
    n: usize,
    dual: &DualState,
    gamma: f64,
    ch: &ChannelState,
    params: &SystemParams,
) -> WaterLevel {
    let price = rb_price(gamma, params.power.phi_eff, dual.lambda[k], ch.g_r2m(k), dual.nu);
    water_level(ch.rb_bandwidth_hz(), dual.beta[n], price)
}
