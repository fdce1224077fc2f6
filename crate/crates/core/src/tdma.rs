//! Per-state C-MAC solvers under an explicit TDMA restriction: exactly one
//! user may be scheduled per state. Each candidate user's best power is
//! known in closed form, so the schedule is chosen by exhaustive
//! evaluation over the `K` candidates.

use crate::error::{Error, Result};
use crate::fading::ChannelStateMac;
use crate::perstate_mac::{marginal_costs, StateAllocation};

/// Picks the candidate with the largest per-state value; the lowest index
/// wins ties. `candidate(k)` returns `(power, value)`.
fn schedule(
    state: &ChannelStateMac,
    mut candidate: impl FnMut(usize) -> Result<(f64, f64)>,
) -> Result<StateAllocation> {
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 0..state.k() {
        let (power, value) = candidate(k)?;
        if best.is_none_or(|(_, _, v)| value > v) {
            best = Some((k, power, value));
        }
    }
    let mut p = vec![0.0; state.k()];
    if let Some((k, power, _)) = best {
        p[k] = power;
    }
    Ok(StateAllocation::from_powers(state, p))
}

/// `(1/ν − 1/h)^+` clipped to `cap`; an infinite result means unbounded.
fn clipped_water_fill(user: usize, h: f64, nu: f64, cap: f64) -> Result<f64> {
    if h <= 0.0 {
        return Ok(0.0);
    }
    let wf = if nu > 0.0 { (1.0 / nu - 1.0 / h).max(0.0) } else { f64::INFINITY };
    let p = wf.min(cap);
    if p.is_infinite() {
        return Err(Error::Unbounded { user });
    }
    Ok(p)
}

fn interference_limit(state: &ChannelStateMac, k: usize, gamma_st: &[f64]) -> f64 {
    state
        .g_row(k)
        .iter()
        .zip(gamma_st)
        .filter(|(g, _)| **g > 0.0)
        .map(|(g, gamma)| gamma / g)
        .fold(f64::INFINITY, f64::min)
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Usage(format!("expected {n} {what}, got {}", v.len())));
    }
    Ok(())
}

/// Case I: each user's value is `(log r)^+ − (1 − 1/r)^+` with
/// `r = h/(λ + Σ μ g)`.
pub fn tdma_state_case1(state: &ChannelStateMac, lambda: &[f64], mu: &[f64]) -> Result<StateAllocation> {
    check_len("TPC multipliers", lambda, state.k())?;
    check_len("IPC multipliers", mu, state.m())?;
    let nu = marginal_costs(state, Some(lambda), Some(mu));
    schedule(state, |k| {
        let h = state.h()[k];
        let p = clipped_water_fill(k, h, nu[k], f64::INFINITY)?;
        Ok((p, (h * p).ln_1p() - nu[k] * p))
    })
}

/// Case II: candidate power `min(min_m Γ_m/g_km, (1/λ_k − 1/h_k)^+)`,
/// value `log(1 + h p) − λ p`.
pub fn tdma_state_case2(state: &ChannelStateMac, lambda: &[f64], gamma_st: &[f64]) -> Result<StateAllocation> {
    check_len("TPC multipliers", lambda, state.k())?;
    check_len("interference limits", gamma_st, state.m())?;
    schedule(state, |k| {
        let h = state.h()[k];
        let p = clipped_water_fill(k, h, lambda[k], interference_limit(state, k, gamma_st))?;
        Ok((p, (h * p).ln_1p() - lambda[k] * p))
    })
}

/// Case III: candidate power `min(P_k, (1/Σ_m μ_m g_km − 1/h_k)^+)`,
/// value `log(1 + h p) − Σ_m μ_m g_km p`.
pub fn tdma_state_case3(state: &ChannelStateMac, mu: &[f64], p_st: &[f64]) -> Result<StateAllocation> {
    check_len("IPC multipliers", mu, state.m())?;
    check_len("power caps", p_st, state.k())?;
    let nu = marginal_costs(state, None, Some(mu));
    schedule(state, |k| {
        let h = state.h()[k];
        let p = clipped_water_fill(k, h, nu[k], p_st[k])?;
        Ok((p, (h * p).ln_1p() - nu[k] * p))
    })
}

/// Case IV: candidate power `min(P_k, min_m Γ_m/g_km)`, value `h p`.
pub fn tdma_state_case4(state: &ChannelStateMac, p_st: &[f64], gamma_st: &[f64]) -> Result<StateAllocation> {
    check_len("power caps", p_st, state.k())?;
    check_len("interference limits", gamma_st, state.m())?;
    schedule(state, |k| {
        let p = p_st[k].min(interference_limit(state, k, gamma_st));
        Ok((p, state.h()[k] * p))
    })
}
