use crsum_core::constraints::PowerBudget;
use crsum_core::perstate_bc::{bc_via_dual_mac, solve_state_bc, BcDuals};
use crsum_core::perstate_mac::{
    objective_case1, objective_case2, objective_case4, solve_state_case1, solve_state_case2,
    solve_state_case3, solve_state_case4,
};
use crsum_core::{ChannelStateBc, ChannelStateMac, ConstraintCase};
use proptest::prelude::*;

fn gain() -> impl Strategy<Value = f64> {
    0.01f64..5.0
}

fn mac_state(k: usize, m: usize) -> impl Strategy<Value = ChannelStateMac> {
    (prop::collection::vec(gain(), k), prop::collection::vec(prop::collection::vec(gain(), m), k))
        .prop_map(|(h, g)| ChannelStateMac::new(h, g).unwrap())
}

fn positive(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..3.0, n)
}

/// Lagrange dual of the Case I problem over a fixed set of states.
fn case1_dual(states: &[ChannelStateMac], lambda: &[f64], mu: &[f64], p: &[f64], gamma: &[f64]) -> f64 {
    let inner: f64 = states
        .iter()
        .map(|s| {
            let (a, _) = solve_state_case1(s, lambda, mu).unwrap();
            objective_case1(s, lambda, mu, &a.p)
        })
        .sum::<f64>()
        / states.len() as f64;
    inner + lambda.iter().zip(p).map(|(l, p)| l * p).sum::<f64>() + mu.iter().zip(gamma).map(|(m, g)| m * g).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn case1_single_user_transmits(s in mac_state(4, 2), l in positive(4), mu in positive(2)) {
        let (a, kkt) = solve_state_case1(&s, &l, &mu).unwrap();
        prop_assert!(a.active_count() <= 1);
        prop_assert!(kkt.max_residual() < 1e-10);
    }

    #[test]
    fn case3_caps_respected_and_prefix(s in mac_state(3, 2), mu in positive(2), p in positive(3)) {
        let (a, _, order) = solve_state_case3(&s, &mu, &p).unwrap();
        for k in 0..3 {
            prop_assert!(a.p[k] <= p[k] * (1.0 + 1e-12));
        }
        // all users before the last active one sit at their caps
        for &u in order.pi.iter().take(order.cardinality.saturating_sub(1)) {
            prop_assert!((a.p[u] - p[u]).abs() <= 1e-12 * p[u]);
        }
        for &u in order.pi.iter().skip(order.cardinality) {
            prop_assert_eq!(a.p[u], 0.0);
        }
    }

    #[test]
    fn case2_larger_limits_never_hurt(
        s in mac_state(3, 2), l in positive(3), gamma in positive(2), scale in 1.0f64..4.0,
    ) {
        let (a, _) = solve_state_case2(&s, &l, &gamma).unwrap();
        let wide: Vec<f64> = gamma.iter().map(|g| g * scale).collect();
        let (b, _) = solve_state_case2(&s, &l, &wide).unwrap();
        prop_assert!(objective_case2(&s, &l, &b.p) >= objective_case2(&s, &l, &a.p) - 1e-10);
    }

    #[test]
    fn case4_feasible_and_monotone(
        s in mac_state(3, 2), p in positive(3), gamma in positive(2), scale in 1.0f64..4.0,
    ) {
        let (a, _) = solve_state_case4(&s, &p, &gamma).unwrap();
        for k in 0..3 {
            prop_assert!(a.p[k] >= 0.0 && a.p[k] <= p[k] * (1.0 + 1e-12));
        }
        for m in 0..2 {
            prop_assert!(s.interference_at(m, &a.p) <= gamma[m] * (1.0 + 1e-9));
        }
        let wide: Vec<f64> = p.iter().map(|x| x * scale).collect();
        let (b, _) = solve_state_case4(&s, &wide, &gamma).unwrap();
        prop_assert!(objective_case4(&s, &b.p) >= objective_case4(&s, &a.p) - 1e-10);
    }

    #[test]
    fn case2_loose_interference_matches_case1(s in mac_state(3, 1), l in positive(3)) {
        let (a, _) = solve_state_case2(&s, &l, &[1e12]).unwrap();
        let (b, _) = solve_state_case1(&s, &l, &[0.0]).unwrap();
        let diff = objective_case2(&s, &l, &a.p) - objective_case1(&s, &l, &[0.0], &b.p);
        prop_assert!(diff.abs() < 1e-9);
    }

    #[test]
    fn bc_power_nonincreasing_in_lambda(
        h in prop::collection::vec(gain(), 4), f in prop::collection::vec(gain(), 2),
        lambda in 0.05f64..3.0, bump in 0.0f64..2.0, mu in positive(2),
    ) {
        let s = ChannelStateBc::new(h, f).unwrap();
        let budget = PowerBudget::bc(2.0, vec![1.0, 1.0]).unwrap();
        for case in [ConstraintCase::CaseI, ConstraintCase::CaseIII] {
            let lo = solve_state_bc(&s, case, &BcDuals::new(lambda, mu.clone()), &budget).unwrap();
            let hi = solve_state_bc(&s, case, &BcDuals::new(lambda + bump, mu.clone()), &budget).unwrap();
            prop_assert!(hi.q <= lo.q + 1e-12);
        }
    }

    #[test]
    fn bc_routes_agree_per_state(
        h in prop::collection::vec(gain(), 5), f in prop::collection::vec(gain(), 2),
        lambda in 0.05f64..3.0, mu in positive(2),
    ) {
        let s = ChannelStateBc::new(h, f).unwrap();
        let budget = PowerBudget::bc(2.0, vec![0.7, 1.3]).unwrap();
        let d = BcDuals::new(lambda, mu);
        for case in ConstraintCase::ALL {
            let a = solve_state_bc(&s, case, &d, &budget).unwrap();
            let b = bc_via_dual_mac(&s, case, &d, &budget).unwrap();
            prop_assert!((a.sum_rate_term - b.sum_rate_term).abs() < 1e-8);
        }
    }

    #[test]
    fn case1_dual_is_convex_on_segments(
        states in prop::collection::vec(mac_state(2, 1), 1..6),
        a in positive(3), b in positive(3), t in 0.0f64..1.0,
    ) {
        let p = [1.0, 1.5];
        let gamma = [0.8];
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let g = |v: &[f64]| case1_dual(&states, &v[..2], &v[2..], &p, &gamma);
        let lhs = g(&mix);
        let rhs = t * g(&a) + (1.0 - t) * g(&b);
        prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
    }
}
