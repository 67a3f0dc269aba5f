use hcran_core::baselines::{fixed_power_levels, Algorithm};
use hcran_core::channel::ChannelState;
use hcran_core::model::{check_feasibility, DualState, PowerModel, QosProfile, RbAccess, SffrPartition, SystemParams};
use hcran_core::optimizer::dual::assign_owners;
use hcran_core::optimizer::{solve_ee, solve_inner, InnerConfig, OuterConfig, WarmStart};
use hcran_core::oracle::{brute_force_ee, kkt_check, TinyInstance};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Instance {
    params: SystemParams,
    channel: ChannelState,
}

/// Normalised instances: unit RB bandwidth, unit budget, floors that a
/// modest share of the RBs can meet.
fn instance(max_ues: usize, max_rbs: usize) -> impl Strategy<Value = Instance> {
    (1..=max_ues.saturating_sub(1).max(1), 1..=max_ues.saturating_sub(1).max(1), 2..=max_rbs)
        .prop_filter("room for both groups", move |(n, m, k)| n + m <= max_ues && *k >= 2)
        .prop_flat_map(|(n_high, n_low, k)| {
            let ues = n_high + n_low;
            (
                Just((n_high, n_low, k)),
                prop::collection::vec(0.5f64..60.0, ues * k),
                prop::collection::vec(0.0f64..2.0, k),
                0.05f64..0.3,
                0.2f64..1.0,
            )
        })
        .prop_map(|((n_high, n_low, k), sigma, g, floor, delta)| {
            let partition = SffrPartition::from_ratio(k, 0.5, 1.0).unwrap();
            let params = SystemParams {
                n_high,
                n_low,
                partition,
                qos: QosProfile::new(floor, floor / 2.0).unwrap(),
                power: PowerModel::new(2.0, 0.1, 0.2, 1.0).unwrap(),
                delta0: delta,
                access: RbAccess::Sffr,
            };
            let channel = ChannelState::from_parts(n_high + n_low, k, 1.0, sigma, g).unwrap();
            Instance { params, channel }
        })
}

fn solve(inst: &Instance) -> Option<hcran_core::optimizer::EeSolution> {
    solve_ee(&inst.channel, &inst.params, &OuterConfig::default(), &InnerConfig::default()).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solutions_satisfy_every_constraint(inst in instance(5, 12)) {
        if let Some(sol) = solve(&inst) {
            let a = sol.allocation(inst.params.ues());
            let p = sol.power_matrix(inst.params.ues());
            let report = check_feasibility(&a, &p, &inst.channel, &inst.params).unwrap();
            prop_assert!(report.is_feasible(), "{:?}", report.violations());
        }
    }

    #[test]
    fn outer_loop_terminates_on_residual(inst in instance(5, 12)) {
        if let Some(sol) = solve(&inst) {
            let cfg = OuterConfig::default();
            prop_assert!(sol.converged);
            prop_assert!(sol.trace.gamma_increasing());
            let residual = (sol.rate - sol.gamma * sol.consumed).abs() / sol.consumed;
            prop_assert!(residual <= cfg.eps_gamma * sol.gamma.max(cfg.gamma_floor));
        }
    }

    #[test]
    fn subtractive_value_falls_with_gamma(inst in instance(4, 10)) {
        if let Some(sol) = solve(&inst) {
            let inner = InnerConfig::default();
            let f = |g: f64| solve_inner(g, &inst.channel, &inst.params, &inner, &WarmStart::default()).unwrap().primal;
            let (f1, f2) = (f(0.3 * sol.gamma), f(0.6 * sol.gamma));
            prop_assert!(f1 > f2, "{f1} <= {f2}");
            prop_assert!(f2 >= 0.0);
        }
    }

    #[test]
    fn returned_powers_are_stationary(inst in instance(5, 12)) {
        if let Some(sol) = solve(&inst) {
            let report = kkt_check(&sol.owners, &sol.powers, &sol.dual, sol.gamma, &inst.channel, &inst.params);
            prop_assert!(report.max_residual() < 1e-6, "{report:?}");
        }
    }

    #[test]
    fn per_rb_winners_are_eligible(
        inst in instance(5, 12),
        seed in prop::collection::vec(0.0f64..5.0, 18),
        gamma in 0.0f64..3.0,
    ) {
        let ues = inst.params.ues();
        let rbs = inst.params.rbs();
        let mut dual = DualState::zeros(ues, rbs);
        for (n, b) in dual.beta.iter_mut().enumerate() {
            *b = seed[n % seed.len()];
        }
        for &k in inst.params.partition.shared() {
            dual.lambda[k] = seed[(k + 7) % seed.len()];
        }
        dual.nu = seed[17];
        let owners = assign_owners(&dual, gamma, &inst.channel, &inst.params).unwrap();
        prop_assert_eq!(owners.len(), rbs);
        for (k, &n) in owners.iter().enumerate() {
            prop_assert!(inst.params.eligible(n, k));
        }
    }

    #[test]
    fn baselines_never_beat_the_optimizer(inst in instance(5, 12)) {
        let outer = OuterConfig::default();
        let inner = InnerConfig::default();
        if let Some(opt) = solve(&inst) {
            for alg in [Algorithm::FixedPower, Algorithm::SequentialRb] {
                if let Ok(b) = alg.solve(&inst.channel, &inst.params, &outer, &inner) {
                    let a = b.allocation(inst.params.ues());
                    let p = b.power_matrix(inst.params.ues());
                    prop_assert!(check_feasibility(&a, &p, &inst.channel, &inst.params).unwrap().is_feasible());
                    // The optimizer's own stopping rule allows a 1e-3 shortfall.
                    prop_assert!(b.ee() <= opt.ee() * (1.0 + 2e-3), "{alg}: {} > {}", b.ee(), opt.ee());
                }
            }
        }
    }

    #[test]
    fn fixed_levels_respect_the_cap(inst in instance(5, 12)) {
        let levels = fixed_power_levels(&inst.channel, &inst.params);
        for &k in inst.params.partition.shared() {
            prop_assert!(levels[k] * inst.channel.g_r2m(k) <= inst.params.delta0);
        }
        prop_assert!(levels.iter().sum::<f64>() <= inst.params.power.p_max * (1.0 + 1e-12));
    }

    #[test]
    fn optimizer_tracks_the_oracle(inst in instance(3, 5)) {
        let tiny = TinyInstance::new(inst.channel.clone(), inst.params.clone(), 200).unwrap();
        if let (Ok(orc), Some(sol)) = (brute_force_ee(&tiny), solve(&inst)) {
            prop_assert!(sol.ee() <= orc.ee() * (1.0 + 1e-6));
            prop_assert!(sol.ee() >= orc.ee() * 0.98, "{} vs {}", sol.ee(), orc.ee());
        }
    }
}
