//! Per-state power control of the C-BC.
//!
//! The strongest user is always served; the base-station power follows a
//! clipped water-filling rule whose water level depends on the constraint
//! case. [`bc_via_dual_mac`] reaches the same allocation through the
//! auxiliary (dual) C-MAC, where every user sees the base station's
//! interference gains and the power constraints act on the users' sum power.

use crate::constraints::{ConstraintCase, PowerBudget};
use crate::error::{Error, Result};
use crate::fading::ChannelStateBc;
use crate::lograte::{maximize_log_rate, Polytope};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcStateAllocation {
    /// Base-station transmit power.
    pub q: f64,
    pub user: usize,
    /// `log(1 + h_user q)` in nats.
    pub sum_rate_term: f64,
}

impl BcStateAllocation {
    fn new(state: &ChannelStateBc, user: usize, q: f64) -> Self {
        Self { q, user, sum_rate_term: (state.h()[user] * q).ln_1p() }
    }
}

/// Long-term multipliers of the C-BC: `λ` for the LT-TPC and `μ_m` for the
/// LT-IPC. Entries not used by a case are ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BcDuals {
    pub lambda: f64,
    pub mu: Vec<f64>,
}

impl BcDuals {
    pub fn new(lambda: f64, mu: Vec<f64>) -> Self {
        Self { lambda, mu }
    }

    /// Marginal cost of base-station power at `state` under `case`.
    fn price(&self, state: &ChannelStateBc, case: ConstraintCase) -> f64 {
        let mut nu = 0.0;
        if case.tpc_long_term() {
            nu += self.lambda;
        }
        if case.ipc_long_term() {
            nu += self.mu.iter().zip(state.f()).map(|(m, f)| m * f).sum::<f64>();
        }
        nu
    }
}

fn validate(state: &ChannelStateBc, case: ConstraintCase, duals: &BcDuals, budget: &PowerBudget) -> Result<f64> {
    let q_max = budget.check_bc(state.m())?;
    if case.ipc_long_term() && duals.mu.len() != state.m() {
        return Err(Error::Usage(format!("expected {} IPC multipliers, got {}", state.m(), duals.mu.len())));
    }
    if !(duals.lambda >= 0.0) || duals.mu.iter().any(|m| !(*m >= 0.0)) {
        return Err(Error::Usage("multipliers must be nonnegative".into()));
    }
    Ok(q_max)
}

/// `min_m Γ_m / f_m`, infinite when no receiver limits the base station.
fn interference_cap(state: &ChannelStateBc, gamma: &[f64]) -> f64 {
    state
        .f()
        .iter()
        .zip(gamma)
        .filter(|(f, _)| **f > 0.0)
        .map(|(f, g)| g / f)
        .fold(f64::INFINITY, f64::min)
}

pub fn solve_state_bc(
    state: &ChannelStateBc,
    case: ConstraintCase,
    duals: &BcDuals,
    budget: &PowerBudget,
) -> Result<BcStateAllocation> {
    let q_max = validate(state, case, duals, budget)?;
    let user = state.best_user();
    let h = state.h()[user];
    let water = |nu: f64| -> Result<f64> {
        if h <= 0.0 {
            Ok(0.0)
        } else if nu <= 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok((1.0 / nu - 1.0 / h).max(0.0))
        }
    };
    let nu = duals.price(state, case);
    let q = match case {
        ConstraintCase::CaseI => water(nu)?,
        ConstraintCase::CaseII => interference_cap(state, &budget.ipc).min(water(nu)?),
        ConstraintCase::CaseIII => q_max.min(water(nu)?),
        ConstraintCase::CaseIV => q_max.min(interference_cap(state, &budget.ipc)),
    };
    if q.is_infinite() {
        return Err(Error::Unbounded { user });
    }
    Ok(BcStateAllocation::new(state, user, q))
}

/// Solves the per-state problem of the auxiliary C-MAC with `g_km = f_m`
/// for every user and the base-station constraints applied to `Σ_k p_k`.
pub fn bc_via_dual_mac(
    state: &ChannelStateBc,
    case: ConstraintCase,
    duals: &BcDuals,
    budget: &PowerBudget,
) -> Result<BcStateAllocation> {
    let q_max = validate(state, case, duals, budget)?;
    let k = state.k();
    let cost = vec![duals.price(state, case); k];
    let mut poly = Polytope::new();
    if !case.tpc_long_term() {
        poly.push(vec![1.0; k], q_max);
    }
    if !case.ipc_long_term() {
        for (f, gamma) in state.f().iter().zip(&budget.ipc) {
            poly.push(vec![*f; k], *gamma);
        }
    }
    let sol = maximize_log_rate(state.h(), &cost, &poly)?;
    let q: f64 = sol.p.iter().sum();
    let user = if q > 0.0 {
        sol.p
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > sol.p[best] { i } else { best })
    } else {
        state.best_user()
    };
    let sum_rate_term = state.h().iter().zip(&sol.p).map(|(h, p)| h * p).sum::<f64>().ln_1p();
    Ok(BcStateAllocation { q, user, sum_rate_term })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(q: f64, gamma: Vec<f64>) -> PowerBudget {
        PowerBudget::bc(q, gamma).unwrap()
    }

    #[test]
    fn case1_closed_form() {
        let s = ChannelStateBc::new(vec![1.0, 3.0, 2.0], vec![2.0]).unwrap();
        let d = BcDuals::new(0.5, vec![0.25]);
        let b = budget(1.0, vec![1.0]);
        let a = solve_state_bc(&s, ConstraintCase::CaseI, &d, &b).unwrap();
        assert_eq!(a.user, 1);
        assert!((a.q - 2.0 / 3.0).abs() < 1e-15);
        let via = bc_via_dual_mac(&s, ConstraintCase::CaseI, &d, &b).unwrap();
        assert_eq!(via.user, 1);
        assert!((via.q - a.q).abs() < 1e-12);
        assert!((via.sum_rate_term - a.sum_rate_term).abs() < 1e-12);
    }

    #[test]
    fn case4_takes_the_tightest_limit() {
        let s = ChannelStateBc::new(vec![0.3, 0.9], vec![0.5, 4.0]).unwrap();
        let b = budget(1.0, vec![1.0, 1.0]);
        let a = solve_state_bc(&s, ConstraintCase::CaseIV, &BcDuals::default(), &b).unwrap();
        assert_eq!(a.user, 1);
        assert_eq!(a.q, 0.25);
    }

    #[test]
    fn case1_clamps_to_zero() {
        let s = ChannelStateBc::new(vec![0.5, 0.4], vec![1.0]).unwrap();
        let a = solve_state_bc(&s, ConstraintCase::CaseI, &BcDuals::new(0.3, vec![0.3]), &budget(1.0, vec![1.0])).unwrap();
        assert_eq!(a.q, 0.0);
        assert_eq!(a.sum_rate_term, 0.0);
    }

    #[test]
    fn case1_without_prices_is_unbounded() {
        let s = ChannelStateBc::new(vec![1.0], vec![1.0]).unwrap();
        let b = budget(1.0, vec![1.0]);
        let err = solve_state_bc(&s, ConstraintCase::CaseI, &BcDuals::new(0.0, vec![0.0]), &b).unwrap_err();
        assert!(matches!(err, Error::Unbounded { .. }));
        let err = bc_via_dual_mac(&s, ConstraintCase::CaseI, &BcDuals::new(0.0, vec![0.0]), &b).unwrap_err();
        assert!(matches!(err, Error::Unbounded { .. }));
    }

    #[test]
    fn single_user_reduces_to_water_filling() {
        let s = ChannelStateBc::new(vec![2.0], vec![]).unwrap();
        let b = budget(1.0, vec![]);
        for case in ConstraintCase::ALL {
            let a = solve_state_bc(&s, case, &BcDuals::new(0.8, vec![]), &b).unwrap();
            let via = bc_via_dual_mac(&s, case, &BcDuals::new(0.8, vec![]), &b).unwrap();
            assert!((a.q - via.q).abs() < 1e-12, "{case}");
        }
        let a = solve_state_bc(&s, ConstraintCase::CaseII, &BcDuals::new(0.8, vec![]), &b).unwrap();
        assert!((a.q - (1.25 - 0.5)).abs() < 1e-15);
    }
}
