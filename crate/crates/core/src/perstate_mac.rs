//! Per-fading-state subproblems of the C-MAC for the four constraint cases,
//! their KKT certificates, and the tests for optimality of dynamic TDMA
//! (a single transmitting user per state).
//!
//! In every case the per-state objective is `log(1 + Σ_k h_k p_k)` minus the
//! price of the long-term constraints, which enter through fixed multipliers:
//!
//! | case | fixed prices          | per-state constraints        |
//! |------|-----------------------|------------------------------|
//! | I    | `λ_k`, `μ_m`          | `p ≥ 0`                      |
//! | II   | `λ_k`                 | `Σ_k g_km p_k ≤ Γ_m`         |
//! | III  | `μ_m`                 | `p_k ≤ P_k`                  |
//! | IV   | none                  | both of the above            |

use crate::error::{Error, Result};
use crate::fading::ChannelStateMac;
use crate::lograte::{dot, maximize_log_rate, Polytope};

/// Power allocation at one fading state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAllocation {
    pub p: Vec<f64>,
    pub active_set: Vec<usize>,
    /// `log(1 + Σ_k h_k p_k)` in nats.
    pub sum_rate_term: f64,
}

impl StateAllocation {
    pub fn from_powers(state: &ChannelStateMac, p: Vec<f64>) -> Self {
        let active_set = p.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(k, _)| k).collect();
        let sum_rate_term = dot(state.h(), &p).ln_1p();
        Self { p, active_set, sum_rate_term }
    }

    pub fn zero(state: &ChannelStateMac) -> Self {
        Self::from_powers(state, vec![0.0; state.k()])
    }

    pub fn active_count(&self) -> usize {
        self.active_set.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KktMultipliers {
    /// Multipliers of `p_k ≥ 0`.
    pub delta: Vec<f64>,
    /// Per-state multipliers of the ST-IPC (Cases II and IV).
    pub mu: Option<Vec<f64>>,
    /// Per-state multipliers of the ST-TPC (Cases III and IV).
    pub lambda: Option<Vec<f64>>,
}

/// Residuals of a case's KKT system at a returned point. All fields are
/// absolute magnitudes; complementary slackness uses multiplier·slack
/// products.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub stationarity_residual: f64,
    pub complementary_slackness_residual: f64,
    pub primal_infeasibility: f64,
    pub multipliers: KktMultipliers,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity_residual
            .max(self.complementary_slackness_residual)
            .max(self.primal_infeasibility)
    }
}

/// Users sorted by descending `h_k / Σ_m μ_m g_km`, and how many of them
/// transmit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserOrdering {
    pub pi: Vec<usize>,
    pub cardinality: usize,
}

/// A single-user allocation certified by a D-TDMA optimality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdmaPoint {
    pub user: usize,
    pub power: f64,
    /// More than one user satisfied the test (only possible on float ties).
    pub ambiguous: bool,
}

/// Residual tolerance above which an iterative per-state solve is reported
/// as a failure.
const SOLVER_FAILURE_RESIDUAL: f64 = 1e-7;

fn check_dims(state: &ChannelStateMac, k_vec: Option<&[f64]>, m_vec: Option<&[f64]>) -> Result<()> {
    if let Some(v) = k_vec {
        if v.len() != state.k() {
            return Err(Error::Usage(format!("expected {} per-user values, got {}", state.k(), v.len())));
        }
    }
    if let Some(v) = m_vec {
        if v.len() != state.m() {
            return Err(Error::Usage(format!("expected {} per-receiver values, got {}", state.m(), v.len())));
        }
    }
    Ok(())
}

fn check_nonnegative(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::Usage(format!("{name} must be finite and nonnegative")));
    }
    Ok(())
}

fn check_positive(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Usage(format!("{name} must be positive")));
    }
    Ok(())
}

/// `λ_k + Σ_m μ_m g_km` for every user; absent vectors count as zero.
pub fn marginal_costs(state: &ChannelStateMac, lambda: Option<&[f64]>, mu: Option<&[f64]>) -> Vec<f64> {
    (0..state.k())
        .map(|k| {
            let l = lambda.map_or(0.0, |l| l[k]);
            let i = mu.map_or(0.0, |mu| state.weighted_interference(k, mu));
            l + i
        })
        .collect()
}

/// `h / ν` with `h = 0 → 0` and `ν = 0, h > 0 → ∞`.
fn gain_ratio(h: f64, nu: f64) -> f64 {
    if h <= 0.0 {
        0.0
    } else if nu <= 0.0 {
        f64::INFINITY
    } else {
        h / nu
    }
}

/// `(1/ν − 1/h)^+` with the conventions of [`gain_ratio`].
fn water_fill(h: f64, nu: f64) -> f64 {
    if h <= 0.0 {
        0.0
    } else if nu <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 / nu - 1.0 / h).max(0.0)
    }
}

/// Strictest interference limit on user `k` alone: `(m', Γ_m'/g_km')`.
fn tightest_receiver(state: &ChannelStateMac, k: usize, gamma: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (m, g) in state.g_row(k).iter().enumerate() {
        if *g > 0.0 {
            let limit = gamma[m] / g;
            if best.is_none_or(|(_, b)| limit < b) {
                best = Some((m, limit));
            }
        }
    }
    best
}

pub fn objective_case1(state: &ChannelStateMac, lambda: &[f64], mu: &[f64], p: &[f64]) -> f64 {
    let nu = marginal_costs(state, Some(lambda), Some(mu));
    dot(state.h(), p).ln_1p() - dot(&nu, p)
}

pub fn objective_case2(state: &ChannelStateMac, lambda: &[f64], p: &[f64]) -> f64 {
    dot(state.h(), p).ln_1p() - dot(lambda, p)
}

pub fn objective_case3(state: &ChannelStateMac, mu: &[f64], p: &[f64]) -> f64 {
    let nu = marginal_costs(state, None, Some(mu));
    dot(state.h(), p).ln_1p() - dot(&nu, p)
}

pub fn objective_case4(state: &ChannelStateMac, p: &[f64]) -> f64 {
    dot(state.h(), p).ln_1p()
}

/// `Σ_k g_km p_k ≤ Γ_m` for every primary receiver.
pub fn interference_polytope(state: &ChannelStateMac, gamma_st: &[f64]) -> Polytope {
    let mut poly = Polytope::new();
    for m in 0..state.m() {
        poly.push((0..state.k()).map(|k| state.g(k, m)).collect(), gamma_st[m]);
    }
    poly
}

/// `p_k ≤ P_k` for every user.
pub fn box_polytope(p_st: &[f64]) -> Polytope {
    let mut poly = Polytope::new();
    for (k, cap) in p_st.iter().enumerate() {
        let mut row = vec![0.0; p_st.len()];
        row[k] = 1.0;
        poly.push(row, *cap);
    }
    poly
}

struct LocalConstraint<'a> {
    multipliers: Vec<f64>,
    thresholds: &'a [f64],
}

/// Evaluates stationarity `h_k/c − ν_k − Σ_m μ_m g_km − λ_k + δ_k = 0`,
/// complementary slackness and primal feasibility, where `ν` are the fixed
/// prices and `μ`, `λ` the per-state multipliers (when present).
fn kkt_report(
    state: &ChannelStateMac,
    p: &[f64],
    fixed: &[f64],
    local_ipc: Option<LocalConstraint<'_>>,
    local_tpc: Option<LocalConstraint<'_>>,
) -> KktReport {
    let c = 1.0 + dot(state.h(), p);
    let mut stationarity = 0.0f64;
    let mut slackness = 0.0f64;
    let mut infeasibility = 0.0f64;
    let mut delta = Vec::with_capacity(p.len());
    for (k, &pk) in p.iter().enumerate() {
        let mut price = fixed[k];
        if let Some(ipc) = &local_ipc {
            price += state.weighted_interference(k, &ipc.multipliers);
        }
        if let Some(tpc) = &local_tpc {
            price += tpc.multipliers[k];
        }
        let grad = state.h()[k] / c - price;
        let d = (-grad).max(0.0);
        stationarity = stationarity.max(grad.max(0.0));
        slackness = slackness.max(d * pk);
        infeasibility = infeasibility.max(-pk);
        delta.push(d);
    }
    if let Some(ipc) = &local_ipc {
        for (m, (mu, gamma)) in ipc.multipliers.iter().zip(ipc.thresholds).enumerate() {
            let slack = gamma - state.interference_at(m, p);
            infeasibility = infeasibility.max(-slack);
            slackness = slackness.max(mu * slack.abs());
        }
    }
    if let Some(tpc) = &local_tpc {
        for ((lam, cap), pk) in tpc.multipliers.iter().zip(tpc.thresholds).zip(p) {
            let slack = cap - pk;
            infeasibility = infeasibility.max(-slack);
            slackness = slackness.max(lam * slack.abs());
        }
    }
    KktReport {
        stationarity_residual: stationarity,
        complementary_slackness_residual: slackness,
        primal_infeasibility: infeasibility.max(0.0),
        multipliers: KktMultipliers {
            delta,
            mu: local_ipc.map(|l| l.multipliers),
            lambda: local_tpc.map(|l| l.multipliers),
        },
    }
}

fn ensure_converged(report: &KktReport) -> Result<()> {
    let r = report.max_residual();
    if !(r <= SOLVER_FAILURE_RESIDUAL) {
        return Err(Error::SolverFailure {
            reason: format!("KKT residual {r:.3e} exceeds {SOLVER_FAILURE_RESIDUAL:e}"),
            stationarity: report.stationarity_residual,
            slackness: report.complementary_slackness_residual,
        });
    }
    Ok(())
}

/// Case I (LT-TPC and LT-IPC): only the user with the largest
/// `h_i / (λ_i + Σ_m μ_m g_im)` transmits, at the water-filling power
/// `(1/(λ_i + Σ_m μ_m g_im) − 1/h_i)^+`.
pub fn solve_state_case1(
    state: &ChannelStateMac,
    lambda: &[f64],
    mu: &[f64],
) -> Result<(StateAllocation, KktReport)> {
    check_dims(state, Some(lambda), Some(mu))?;
    check_nonnegative("lambda", lambda)?;
    check_nonnegative("mu", mu)?;
    let nu = marginal_costs(state, Some(lambda), Some(mu));
    let mut best: Option<(usize, f64)> = None;
    for (k, (&h, &n)) in state.h().iter().zip(&nu).enumerate() {
        if h > 0.0 && n <= 0.0 {
            return Err(Error::Unbounded { user: k });
        }
        let r = gain_ratio(h, n);
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((k, r));
        }
    }
    let mut p = vec![0.0; state.k()];
    if let Some((i, _)) = best {
        p[i] = water_fill(state.h()[i], nu[i]);
    }
    let kkt = kkt_report(state, &p, &nu, None, None);
    Ok((StateAllocation::from_powers(state, p), kkt))
}

/// Case II (LT-TPC and ST-IPC), solved exactly through its LP structure.
pub fn solve_state_case2(
    state: &ChannelStateMac,
    lambda: &[f64],
    gamma_st: &[f64],
) -> Result<(StateAllocation, KktReport)> {
    check_dims(state, Some(lambda), Some(gamma_st))?;
    check_nonnegative("lambda", lambda)?;
    check_positive("gamma_st", gamma_st)?;
    let poly = interference_polytope(state, gamma_st);
    let sol = maximize_log_rate(state.h(), lambda, &poly)?;
    let kkt = kkt_report(
        state,
        &sol.p,
        lambda,
        Some(LocalConstraint { multipliers: sol.row_multipliers, thresholds: gamma_st }),
        None,
    );
    ensure_converged(&kkt)?;
    Ok((StateAllocation::from_powers(state, sol.p), kkt))
}

/// D-TDMA optimality test for Case II. Returns the transmitting user and
/// its power when one of the two condition sets holds for some user.
pub fn check_tdma_case2(state: &ChannelStateMac, lambda: &[f64], gamma_st: &[f64]) -> Result<Option<TdmaPoint>> {
    check_dims(state, Some(lambda), Some(gamma_st))?;
    check_nonnegative("lambda", lambda)?;
    check_positive("gamma_st", gamma_st)?;
    let h = state.h();
    let k = state.k();
    let ratio: Vec<f64> = (0..k).map(|j| gain_ratio(h[j], lambda[j])).collect();
    let mut found: Vec<TdmaPoint> = Vec::new();
    for i in 0..k {
        let wf = water_fill(h[i], lambda[i]);
        let unclipped = if h[i] > 0.0 && lambda[i] > 0.0 {
            1.0 / lambda[i] - 1.0 / h[i]
        } else {
            wf
        };
        let tight = tightest_receiver(state, i, gamma_st);
        let limit = tight.map_or(f64::INFINITY, |(_, l)| l);
        if unclipped <= limit {
            if (0..k).filter(|&j| j != i).all(|j| ratio[i] >= ratio[j]) {
                found.push(TdmaPoint { user: i, power: wf, ambiguous: false });
            }
        } else if let Some((mp, limit)) = tight {
            let gi = state.g(i, mp);
            let scale = gi / (gi + h[i] * gamma_st[mp]);
            let ok = (0..k).filter(|&j| j != i).all(|j| {
                let gj = state.g(j, mp);
                (h[j] * gi - h[i] * gj) * scale <= lambda[j] * gi - lambda[i] * gj
            });
            if ok {
                found.push(TdmaPoint { user: i, power: limit, ambiguous: false });
            }
        }
    }
    let ambiguous = found.len() > 1;
    Ok(found.first().map(|t| TdmaPoint { ambiguous, ..*t }))
}

fn ordering(state: &ChannelStateMac, nu: &[f64]) -> Vec<usize> {
    let ratio: Vec<f64> = state.h().iter().zip(nu).map(|(h, n)| gain_ratio(*h, *n)).collect();
    let mut pi: Vec<usize> = (0..state.k()).collect();
    // stable sort keeps the lowest index first among equal ratios
    pi.sort_by(|a, b| ratio[*b].total_cmp(&ratio[*a]));
    pi
}

/// Case III (ST-TPC and LT-IPC): users in descending order of
/// `h_k / Σ_m μ_m g_km` fill their caps one after another; the last active
/// user may stop short of its cap.
pub fn solve_state_case3(
    state: &ChannelStateMac,
    mu: &[f64],
    p_st: &[f64],
) -> Result<(StateAllocation, KktReport, UserOrdering)> {
    check_dims(state, Some(p_st), Some(mu))?;
    check_nonnegative("mu", mu)?;
    check_positive("p_st", p_st)?;
    let h = state.h();
    let nu = marginal_costs(state, None, Some(mu));
    let pi = ordering(state, &nu);
    let mut p = vec![0.0; state.k()];
    let mut filled = 0.0;
    let mut cardinality = 0;
    for &u in &pi {
        let r = gain_ratio(h[u], nu[u]);
        // equality at the threshold counts as inactive
        if !(r > 1.0 + filled) {
            break;
        }
        let want = if r.is_infinite() { f64::INFINITY } else { (r - 1.0 - filled) / h[u] };
        p[u] = want.min(p_st[u]);
        filled += h[u] * p[u];
        cardinality += 1;
        if p[u] < p_st[u] {
            break;
        }
    }
    let c = 1.0 + dot(h, &p);
    let lambda: Vec<f64> = (0..state.k())
        .map(|k| if p[k] >= p_st[k] { (h[k] / c - nu[k]).max(0.0) } else { 0.0 })
        .collect();
    let kkt = kkt_report(state, &p, &nu, None, Some(LocalConstraint { multipliers: lambda, thresholds: p_st }));
    Ok((StateAllocation::from_powers(state, p), kkt, UserOrdering { pi, cardinality }))
}

/// D-TDMA optimality test for Case III: user `π(1)` alone transmits iff
/// `1 + h_π(1) P_π(1) ≥ h_π(2) / Σ_m μ_m g_π(2)m`.
pub fn check_tdma_case3(state: &ChannelStateMac, mu: &[f64], p_st: &[f64]) -> Result<Option<TdmaPoint>> {
    check_dims(state, Some(p_st), Some(mu))?;
    check_nonnegative("mu", mu)?;
    check_positive("p_st", p_st)?;
    if state.k() < 2 {
        return Err(Error::Usage("the Case III D-TDMA test needs at least two users".into()));
    }
    let h = state.h();
    let nu = marginal_costs(state, None, Some(mu));
    let pi = ordering(state, &nu);
    let (first, second) = (pi[0], pi[1]);
    if 1.0 + h[first] * p_st[first] >= gain_ratio(h[second], nu[second]) {
        let power = water_fill(h[first], nu[first]).min(p_st[first]);
        Ok(Some(TdmaPoint { user: first, power, ambiguous: false }))
    } else {
        Ok(None)
    }
}

/// Case IV (ST-TPC and ST-IPC): maximize `Σ_k h_k p_k` over the box and
/// interference halfspaces; fully separable across states.
pub fn solve_state_case4(
    state: &ChannelStateMac,
    p_st: &[f64],
    gamma_st: &[f64],
) -> Result<(StateAllocation, KktReport)> {
    check_dims(state, Some(p_st), Some(gamma_st))?;
    check_positive("p_st", p_st)?;
    check_positive("gamma_st", gamma_st)?;
    let k = state.k();
    let mut poly = box_polytope(p_st);
    let ipc = interference_polytope(state, gamma_st);
    poly.rows.extend(ipc.rows);
    poly.bounds.extend(ipc.bounds);
    let zero = vec![0.0; k];
    let sol = maximize_log_rate(state.h(), &zero, &poly)?;
    let lambda = sol.row_multipliers[..k].to_vec();
    let mu = sol.row_multipliers[k..].to_vec();
    let kkt = kkt_report(
        state,
        &sol.p,
        &zero,
        Some(LocalConstraint { multipliers: mu, thresholds: gamma_st }),
        Some(LocalConstraint { multipliers: lambda, thresholds: p_st }),
    );
    ensure_converged(&kkt)?;
    Ok((StateAllocation::from_powers(state, sol.p), kkt))
}

/// D-TDMA optimality test for Case IV: some user `i` has
/// `Γ_m'/g_im' ≤ P_i` and the largest `h/g_·m'` on its tightest receiver.
pub fn check_tdma_case4(state: &ChannelStateMac, p_st: &[f64], gamma_st: &[f64]) -> Result<Option<TdmaPoint>> {
    check_dims(state, Some(p_st), Some(gamma_st))?;
    check_positive("p_st", p_st)?;
    check_positive("gamma_st", gamma_st)?;
    let h = state.h();
    let mut found: Vec<TdmaPoint> = Vec::new();
    for i in 0..state.k() {
        let Some((mp, limit)) = tightest_receiver(state, i, gamma_st) else {
            continue;
        };
        if limit > p_st[i] {
            continue;
        }
        let own = h[i] / state.g(i, mp);
        let dominant = (0..state.k())
            .filter(|&j| j != i)
            .all(|j| own >= gain_ratio(h[j], state.g(j, mp)));
        if dominant {
            found.push(TdmaPoint { user: i, power: limit, ambiguous: false });
        }
    }
    let ambiguous = found.len() > 1;
    Ok(found.first().map(|t| TdmaPoint { ambiguous, ..*t }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(h: &[f64], g: &[&[f64]]) -> ChannelStateMac {
        ChannelStateMac::new(h.to_vec(), g.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn case1_forced_zero() {
        let s = state(&[1.0, 1.0], &[&[], &[]]);
        let (a, kkt) = solve_state_case1(&s, &[2.0, 2.0], &[]).unwrap();
        assert_eq!(a.p, vec![0.0, 0.0]);
        assert!(a.active_set.is_empty());
        assert!(kkt.max_residual() <= 1e-10);
    }

    #[test]
    fn case1_selects_best_ratio() {
        let s = state(&[3.0, 3.0], &[&[2.0], &[1.0]]);
        let (a, kkt) = solve_state_case1(&s, &[1.0, 2.0], &[0.5]).unwrap();
        assert!(close(a.p[0], 0.5 - 1.0 / 3.0, 1e-15));
        assert_eq!(a.p[1], 0.0);
        assert!(kkt.max_residual() <= 1e-10);
    }

    #[test]
    fn case1_zero_price_is_unbounded() {
        let s = state(&[1.0, 2.0], &[&[1.0], &[0.0]]);
        let err = solve_state_case1(&s, &[1.0, 0.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Unbounded { user: 1 }));
        // zero gain never transmits, so a zero price on it is harmless
        let s = state(&[1.0, 0.0], &[&[1.0], &[0.0]]);
        assert!(solve_state_case1(&s, &[1.0, 0.0], &[1.0]).is_ok());
    }

    #[test]
    fn case1_ties_go_to_lowest_index() {
        let s = state(&[2.0, 2.0], &[&[], &[]]);
        let (a, _) = solve_state_case1(&s, &[0.5, 0.5], &[]).unwrap();
        assert_eq!(a.active_set, vec![0]);
    }

    #[test]
    fn case2_single_receiver_picks_best_h_over_g() {
        let s = state(&[4.0, 1.0], &[&[2.0], &[1.0]]);
        let (a, kkt) = solve_state_case2(&s, &[0.0, 0.0], &[1.0]).unwrap();
        assert!(close(a.p[0], 0.5, 1e-12) && a.p[1] == 0.0, "{:?}", a.p);
        assert!(kkt.max_residual() <= 1e-8);
        let t = check_tdma_case2(&s, &[0.0, 0.0], &[1.0]).unwrap().unwrap();
        assert_eq!(t.user, 0);
        assert!(close(t.power, 0.5, 1e-15));
    }

    #[test]
    fn case2_inactive_interference_matches_case1() {
        let s = state(&[1.3, 0.4, 2.2], &[&[0.7, 0.1], &[1.1, 0.3], &[0.2, 2.0]]);
        let lambda = [0.3, 0.2, 0.5];
        let (a2, _) = solve_state_case2(&s, &lambda, &[1e9, 1e9]).unwrap();
        let (a1, _) = solve_state_case1(&s, &lambda, &[0.0, 0.0]).unwrap();
        for (x, y) in a2.p.iter().zip(&a1.p) {
            assert!(close(*x, *y, 1e-9));
        }
    }

    #[test]
    fn case3_threshold_fails_at_first_user() {
        let s = state(&[1.0, 1.0], &[&[1.0], &[1.0]]);
        let (a, kkt, ord) = solve_state_case3(&s, &[10.0], &[5.0, 5.0]).unwrap();
        assert_eq!(a.p, vec![0.0, 0.0]);
        assert_eq!(ord.cardinality, 0);
        assert!(kkt.max_residual() <= 1e-10);
    }

    #[test]
    fn case3_two_active_users() {
        let s = state(&[4.0, 2.0], &[&[1.0], &[1.0]]);
        let (a, kkt, ord) = solve_state_case3(&s, &[0.5], &[0.3, 1.0]).unwrap();
        assert_eq!(ord.pi, vec![0, 1]);
        assert_eq!(ord.cardinality, 2);
        assert!(close(a.p[0], 0.3, 1e-15));
        assert!(close(a.p[1], 0.9, 1e-12), "{:?}", a.p);
        assert!(kkt.max_residual() <= 1e-10);
        assert_eq!(check_tdma_case3(&s, &[0.5], &[0.3, 1.0]).unwrap(), None);
    }

    #[test]
    fn case3_zero_price_fills_every_cap() {
        let s = state(&[0.8, 1.7], &[&[1.0], &[2.0]]);
        let (a, kkt, ord) = solve_state_case3(&s, &[0.0], &[0.7, 0.9]).unwrap();
        assert_eq!(a.p, vec![0.7, 0.9]);
        assert_eq!(ord.cardinality, 2);
        assert!(kkt.max_residual() <= 1e-10);
        assert_eq!(check_tdma_case3(&s, &[0.0], &[0.7, 0.9]).unwrap(), None);
    }

    #[test]
    fn case3_test_needs_two_users() {
        let s = state(&[1.0], &[&[1.0]]);
        assert!(matches!(check_tdma_case3(&s, &[1.0], &[1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn case4_large_interference_limit_fills_box() {
        let s = state(&[0.5, 2.0], &[&[1.0], &[3.0]]);
        let (a, kkt) = solve_state_case4(&s, &[0.4, 0.6], &[1e9]).unwrap();
        assert!(close(a.p[0], 0.4, 1e-12) && close(a.p[1], 0.6, 1e-12));
        assert!(kkt.max_residual() <= 1e-8);
        assert_eq!(check_tdma_case4(&s, &[0.4, 0.6], &[1e9]).unwrap(), None);
    }

    #[test]
    fn case4_tdma_instance() {
        let s = state(&[4.0, 1.0], &[&[2.0], &[1.0]]);
        let t = check_tdma_case4(&s, &[1.0, 1.0], &[1.0]).unwrap().unwrap();
        assert_eq!((t.user, t.power), (0, 0.5));
        let (a, kkt) = solve_state_case4(&s, &[1.0, 1.0], &[1.0]).unwrap();
        assert!(close(a.p[0], 0.5, 1e-12) && a.p[1] == 0.0, "{:?}", a.p);
        assert!(kkt.max_residual() <= 1e-8);
    }

    #[test]
    fn case4_single_user_degenerate() {
        let s = state(&[2.0], &[&[4.0, 1.0]]);
        let t = check_tdma_case4(&s, &[1.0], &[1.0, 1.0]).unwrap().unwrap();
        assert_eq!((t.user, t.power), (0, 0.25));
        assert_eq!(check_tdma_case4(&s, &[0.2], &[1.0, 1.0]).unwrap(), None);
    }

    #[test]
    fn case4_tiny_caps_fail_condition_one() {
        let s = state(&[4.0, 1.0, 2.0], &[&[2.0], &[1.0], &[0.5]]);
        assert_eq!(check_tdma_case4(&s, &[0.01, 0.01, 0.01], &[1.0]).unwrap(), None);
    }

    #[test]
    fn dimension_and_sign_errors() {
        let s = state(&[1.0, 1.0], &[&[1.0], &[1.0]]);
        assert!(matches!(solve_state_case1(&s, &[1.0], &[1.0]), Err(Error::Usage(_))));
        assert!(matches!(solve_state_case1(&s, &[1.0, -1.0], &[1.0]), Err(Error::Usage(_))));
        assert!(matches!(solve_state_case2(&s, &[1.0, 1.0], &[0.0]), Err(Error::Usage(_))));
        assert!(matches!(solve_state_case3(&s, &[1.0], &[1.0, 0.0]), Err(Error::Usage(_))));
    }
}
