//! End-to-end ergodic sum-capacity pipelines over a stored state ensemble.
//!
//! Cases with long-term constraints run the ellipsoid method on the sample
//! average dual; Case IV and the FRA baselines are evaluated state by state.
//! Every pipeline returns a [`PolicyResult`] carrying a policy that passes
//! [`feasibility_check`](crate::constraints::feasibility_check).

use std::io::Write;

use rayon::prelude::*;

use crate::constraints::{feasibility_check, ConstraintCase, ConstraintReport, PowerBudget, Tolerance};
use crate::dual::{self, ConvergenceReport, DualEvaluation, DualPoint, EllipsoidOptions, LagrangianProblem, StateOutcome};
use crate::error::{Error, Result};
use crate::fading::{ChannelStateBc, ChannelStateMac};
use crate::lograte::dot;
use crate::lp::{self, LpOutcome};
use crate::perstate_bc::{bc_via_dual_mac, solve_state_bc, BcDuals};
use crate::perstate_mac::{solve_state_case1, solve_state_case2, solve_state_case3, solve_state_case4};
use crate::tdma::{tdma_state_case1, tdma_state_case2, tdma_state_case3, tdma_state_case4};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub ellipsoid: EllipsoidOptions,
    pub tolerance: Tolerance,
    /// Largest relative disagreement tolerated between the two C-BC routes.
    pub bc_agreement: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { ellipsoid: EllipsoidOptions::default(), tolerance: Tolerance::default(), bc_agreement: 1e-6 }
    }
}

/// A feasible power-control policy and its statistics. Rates are in nats.
#[derive(Debug, Clone)]
pub struct PolicyResult {
    pub ergodic_sum_rate: f64,
    /// Standard error of the per-state rate average.
    pub rate_stderr: f64,
    /// Per-user average power (C-MAC) or the single base-station average.
    pub achieved_avg_tx_power: Vec<f64>,
    pub achieved_avg_interference: Vec<f64>,
    pub achieved_worst_tx_power: Vec<f64>,
    pub achieved_worst_interference: Vec<f64>,
    /// Entry `j` counts the states with exactly `j` transmitting users.
    pub active_count_histogram: Vec<usize>,
    pub dual_point: DualPoint,
    /// Best dual value, or the rate itself when nothing was dualized.
    pub dual_value: f64,
    /// `dual_value − ergodic_sum_rate`.
    pub gap: f64,
    /// Largest relative LT violation of the returned policy.
    pub max_lt_violation: f64,
    /// Scaling applied to the recovered policy to restore LT feasibility.
    pub rescale_factor: f64,
    /// Rate given up by that scaling.
    pub rate_loss: f64,
    /// Relative disagreement between the closed-form and dual-MAC C-BC routes.
    pub route_discrepancy: Option<f64>,
    pub feasibility: ConstraintReport,
    pub convergence: Option<ConvergenceReport>,
    /// One power vector per state; for the C-BC the base-station power sits at
    /// the served user's index.
    pub policy: Vec<Vec<f64>>,
}

impl PolicyResult {
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.dual_value.abs().max(1e-300)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Route {
    Full,
    Tdma,
    BcClosedForm,
    BcDualMac,
}

#[derive(Clone, Copy)]
enum Ensemble<'a> {
    Mac(&'a [ChannelStateMac]),
    Bc(&'a [ChannelStateBc]),
}

impl Ensemble<'_> {
    fn len(&self) -> usize {
        match self {
            Ensemble::Mac(s) => s.len(),
            Ensemble::Bc(s) => s.len(),
        }
    }

    fn h(&self, t: usize) -> &[f64] {
        match self {
            Ensemble::Mac(s) => s[t].h(),
            Ensemble::Bc(s) => s[t].h(),
        }
    }

    fn k(&self) -> usize {
        self.h(0).len()
    }

    fn m(&self) -> usize {
        match self {
            Ensemble::Mac(s) => s[0].m(),
            Ensemble::Bc(s) => s[0].m(),
        }
    }

    /// Per-user transmit powers (C-MAC) or the base-station power (C-BC).
    fn tx_power(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Ensemble::Mac(_) => p.to_vec(),
            Ensemble::Bc(_) => vec![p.iter().sum()],
        }
    }

    fn interference(&self, t: usize, p: &[f64]) -> Vec<f64> {
        match self {
            Ensemble::Mac(s) => (0..s[t].m()).map(|m| s[t].interference_at(m, p)).collect(),
            Ensemble::Bc(s) => {
                let q: f64 = p.iter().sum();
                s[t].f().iter().map(|f| f * q).collect()
            }
        }
    }
}

struct Problem<'a> {
    states: Ensemble<'a>,
    case: ConstraintCase,
    budget: &'a PowerBudget,
    route: Route,
    thresholds: Vec<f64>,
    n_lambda: usize,
}

impl<'a> Problem<'a> {
    fn new(states: Ensemble<'a>, case: ConstraintCase, budget: &'a PowerBudget, route: Route) -> Result<Self> {
        if states.len() == 0 {
            return Err(Error::Usage("empty state ensemble".into()));
        }
        budget.validate()?;
        let tpc: Vec<f64> = match states {
            Ensemble::Mac(s) => {
                let (k, m) = (s[0].k(), s[0].m());
                if s.iter().any(|x| x.k() != k || x.m() != m) {
                    return Err(Error::Usage("states have inconsistent dimensions".into()));
                }
                budget.check_mac(k, m)?;
                budget.tpc.clone()
            }
            Ensemble::Bc(s) => {
                let (k, m) = (s[0].k(), s[0].m());
                if s.iter().any(|x| x.k() != k || x.m() != m) {
                    return Err(Error::Usage("states have inconsistent dimensions".into()));
                }
                vec![budget.check_bc(m)?]
            }
        };
        let mut thresholds = Vec::new();
        let mut n_lambda = 0;
        if case.tpc_long_term() {
            n_lambda = tpc.len();
            thresholds.extend(tpc);
        }
        if case.ipc_long_term() {
            thresholds.extend(&budget.ipc);
        }
        Ok(Self { states, case, budget, route, thresholds, n_lambda })
    }

    fn usage(&self, t: usize, p: &[f64]) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.thresholds.len());
        if self.case.tpc_long_term() {
            u.extend(self.states.tx_power(p));
        }
        if self.case.ipc_long_term() {
            u.extend(self.states.interference(t, p));
        }
        u
    }

    fn solve_powers(&self, t: usize, y: &DualPoint) -> Result<Vec<f64>> {
        let b = self.budget;
        let case = self.case;
        match self.states {
            Ensemble::Mac(s) => {
                let s = &s[t];
                let (lambda, mu) = (&y.lambda[..], &y.mu[..]);
                let alloc = match (self.route, case) {
                    (Route::Full, ConstraintCase::CaseI) => solve_state_case1(s, lambda, mu)?.0,
                    (Route::Full, ConstraintCase::CaseII) => solve_state_case2(s, lambda, &b.ipc)?.0,
                    (Route::Full, ConstraintCase::CaseIII) => solve_state_case3(s, mu, &b.tpc)?.0,
                    (Route::Full, ConstraintCase::CaseIV) => solve_state_case4(s, &b.tpc, &b.ipc)?.0,
                    (_, ConstraintCase::CaseI) => tdma_state_case1(s, lambda, mu)?,
                    (_, ConstraintCase::CaseII) => tdma_state_case2(s, lambda, &b.ipc)?,
                    (_, ConstraintCase::CaseIII) => tdma_state_case3(s, mu, &b.tpc)?,
                    (_, ConstraintCase::CaseIV) => tdma_state_case4(s, &b.tpc, &b.ipc)?,
                };
                Ok(alloc.p)
            }
            Ensemble::Bc(s) => {
                let s = &s[t];
                let duals = BcDuals::new(
                    y.lambda.first().copied().unwrap_or(0.0),
                    if case.ipc_long_term() { y.mu.clone() } else { vec![0.0; s.m()] },
                );
                let a = if self.route == Route::BcDualMac {
                    bc_via_dual_mac(s, case, &duals, b)?
                } else {
                    solve_state_bc(s, case, &duals, b)?
                };
                let mut p = vec![0.0; s.k()];
                p[a.user] = a.q;
                Ok(p)
            }
        }
    }
}

impl LagrangianProblem for Problem<'_> {
    type Alloc = Vec<f64>;

    fn n_states(&self) -> usize {
        self.states.len()
    }

    fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    fn solve_state(&self, t: usize, point: &DualPoint) -> Result<StateOutcome<Vec<f64>>> {
        let p = self.solve_powers(t, point)?;
        let usage = self.usage(t, &p);
        let gain_sum = dot(self.states.h(t), &p);
        let lagrangian = gain_sum.ln_1p() - dot(&point.to_vec(), &usage);
        Ok(StateOutcome { alloc: p, lagrangian, usage, gain_sum })
    }

    fn coordinate_for_user(&self, user: usize) -> Option<usize> {
        if self.n_lambda == 0 {
            return None;
        }
        match self.states {
            Ensemble::Mac(_) => Some(user),
            Ensemble::Bc(_) => Some(0),
        }
    }
}

/// A candidate primal policy with its unscaled statistics.
struct Candidate {
    policy: Vec<Vec<f64>>,
    gains: Vec<f64>,
    usage: Vec<f64>,
}

impl Candidate {
    fn from_eval(e: DualEvaluation<Vec<f64>>) -> Self {
        let gains = e.outcomes.iter().map(|o| o.gain_sum).collect();
        let policy = e.outcomes.into_iter().map(|o| o.alloc).collect();
        Self { policy, gains, usage: e.avg_usage }
    }

    fn rate(&self, gamma: f64) -> f64 {
        dual::mean(self.gains.iter().map(|s| (gamma * s).ln_1p()))
    }
}

/// Probe offsets used to collect the per-state maximizers on each side of
/// a kink of the dual function.
const PROBE_STEPS: [f64; 3] = [1e-4, 1e-6, 1e-8];

/// Builds the best feasible policy from maximizers near the dual optimum:
/// the rescaled maximizer at the best points, optionally improved by a
/// convex combination of maximizers at nearby probe points chosen by a
/// small LP over the mixing weights.
fn recover(problem: &Problem, report: &ConvergenceReport, mix: bool) -> Result<(Candidate, f64, f64)> {
    let b = problem.thresholds();
    let n_lambda = problem.n_lambda();
    let mut candidates = vec![Candidate::from_eval(dual::evaluate(problem, &report.best_point)?)];
    if report.primal_point != report.best_point {
        candidates.push(Candidate::from_eval(dual::evaluate(problem, &report.primal_point)?));
    }
    if mix {
        let y = report.best_point.to_vec();
        for step in PROBE_STEPS {
            for j in 0..y.len() {
                let scale = y[j].max(1e-3 * report.initial_center[j]);
                for sign in [1.0, -1.0] {
                    let mut z = y.clone();
                    z[j] = (z[j] + sign * step * scale).max(0.0);
                    if z[j] == y[j] {
                        continue;
                    }
                    match dual::evaluate(problem, &DualPoint::from_slice(&z, n_lambda)) {
                        Ok(e) => candidates.push(Candidate::from_eval(e)),
                        Err(Error::Unbounded { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    let scaled_rate = |c: &Candidate| c.rate(dual::rescale_factor(b, &c.usage));
    let base_index = (0..candidates.len())
        .fold(0, |best, i| if scaled_rate(&candidates[i]) > scaled_rate(&candidates[best]) { i } else { best });
    let base = candidates.swap_remove(base_index);
    let gamma0 = dual::rescale_factor(b, &base.usage);
    let unmixed_rate = base.rate(1.0);
    if !mix || candidates.is_empty() {
        return Ok((base, gamma0, unmixed_rate));
    }

    let r0 = base.rate(gamma0);
    let u0: Vec<f64> = base.usage.iter().map(|u| gamma0 * u).collect();
    let mut rows = vec![vec![1.0; candidates.len()]];
    let mut rhs = vec![1.0];
    for j in 0..b.len() {
        rows.push(candidates.iter().map(|c| c.usage[j] - u0[j]).collect());
        rhs.push((b[j] - u0[j]).max(0.0));
    }
    let obj: Vec<f64> = candidates.iter().map(|c| c.rate(1.0) - r0).collect();
    let LpOutcome::Optimal(sol) = lp::maximize(&obj, &rows, &rhs) else {
        return Ok((base, gamma0, unmixed_rate));
    };
    if sol.value <= 0.0 {
        return Ok((base, gamma0, unmixed_rate));
    }
    let w0 = 1.0 - sol.x.iter().sum::<f64>();
    let n = problem.n_states();
    let mut policy: Vec<Vec<f64>> = base.policy.iter().map(|p| p.iter().map(|v| w0 * gamma0 * v).collect()).collect();
    for (c, w) in candidates.iter().zip(&sol.x) {
        if *w > 0.0 {
            for (acc, p) in policy.iter_mut().zip(&c.policy) {
                acc.iter_mut().zip(p).for_each(|(a, v)| *a += w * v);
            }
        }
    }
    let gains: Vec<f64> = (0..n).map(|t| dot(problem.states.h(t), &policy[t])).collect();
    let usage = average_usage(problem, &policy);
    let mixed = Candidate { policy, gains, usage };
    let gamma = dual::rescale_factor(b, &mixed.usage);
    if mixed.rate(gamma) > r0 {
        let before = mixed.rate(1.0);
        Ok((mixed, gamma, before))
    } else {
        Ok((base, gamma0, unmixed_rate))
    }
}

fn average_usage(problem: &Problem, policy: &[Vec<f64>]) -> Vec<f64> {
    let mut avg = vec![0.0; problem.thresholds().len()];
    for (t, p) in policy.iter().enumerate() {
        for (a, u) in avg.iter_mut().zip(problem.usage(t, p)) {
            *a += u;
        }
    }
    let n = policy.len() as f64;
    avg.iter_mut().for_each(|a| *a /= n);
    avg
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Assembles the statistics of a finished policy.
fn summarize(
    problem: &Problem,
    policy: Vec<Vec<f64>>,
    dual: Option<(DualPoint, f64, ConvergenceReport)>,
    rescale_factor: f64,
    rate_before_rescale: f64,
    tol: Tolerance,
) -> Result<PolicyResult> {
    let states = problem.states;
    let n = policy.len();
    let rates: Vec<f64> = (0..n).map(|t| dot(states.h(t), &policy[t]).ln_1p()).collect();
    let (rate, stderr) = mean_and_stderr(&rates);

    let k = states.k();
    let n_tx = if matches!(states, Ensemble::Mac(_)) { k } else { 1 };
    let mut avg_tx = vec![0.0; n_tx];
    let mut worst_tx = vec![0.0f64; n_tx];
    let mut avg_if = vec![0.0; states.m()];
    let mut worst_if = vec![0.0f64; states.m()];
    let mut hist = vec![0usize; k + 1];
    for (t, p) in policy.iter().enumerate() {
        for (i, v) in states.tx_power(p).into_iter().enumerate() {
            avg_tx[i] += v;
            worst_tx[i] = worst_tx[i].max(v);
        }
        for (m, v) in states.interference(t, p).into_iter().enumerate() {
            avg_if[m] += v;
            worst_if[m] = worst_if[m].max(v);
        }
        hist[p.iter().filter(|v| **v > 0.0).count()] += 1;
    }
    avg_tx.iter_mut().chain(avg_if.iter_mut()).for_each(|v| *v /= n as f64);

    let feasibility = match states {
        Ensemble::Mac(s) => feasibility_check(&policy, s, problem.case, problem.budget, tol)?,
        Ensemble::Bc(s) => {
            let q: Vec<f64> = policy.iter().map(|p| p.iter().sum()).collect();
            crate::constraints::feasibility_check_bc(&q, s, problem.case, problem.budget, tol)?
        }
    };
    let (dual_point, dual_value, convergence) = match dual {
        Some((p, v, r)) => (p, v, Some(r)),
        None => (DualPoint::default(), rate, None),
    };
    Ok(PolicyResult {
        ergodic_sum_rate: rate,
        rate_stderr: stderr,
        achieved_avg_tx_power: avg_tx,
        achieved_avg_interference: avg_if,
        achieved_worst_tx_power: worst_tx,
        achieved_worst_interference: worst_if,
        active_count_histogram: hist,
        dual_point,
        dual_value,
        gap: dual_value - rate,
        max_lt_violation: feasibility.max_relative_violation(true),
        rescale_factor,
        rate_loss: rate_before_rescale - rate,
        route_discrepancy: None,
        feasibility,
        convergence,
        policy,
    })
}

fn run(problem: &Problem, opts: &SolveOptions, mix: bool) -> Result<PolicyResult> {
    if problem.thresholds().is_empty() {
        let e = dual::evaluate(problem, &DualPoint::default())?;
        let policy: Vec<Vec<f64>> = e.outcomes.into_iter().map(|o| o.alloc).collect();
        let rate = dual::mean(policy.iter().enumerate().map(|(t, p)| dot(problem.states.h(t), p).ln_1p()));
        return summarize(problem, policy, None, 1.0, rate, opts.tolerance);
    }
    let (point, report) = dual::ellipsoid_solve(problem, &opts.ellipsoid)?;
    let (cand, gamma, before) = recover(problem, &report, mix)?;
    let policy = cand.policy.into_iter().map(|p| p.into_iter().map(|v| gamma * v).collect()).collect();
    let value = report.best_dual_value;
    summarize(problem, policy, Some((point, value, report)), gamma, before, opts.tolerance)
}

/// Ergodic sum capacity of the C-MAC under `case`.
pub fn ergodic_capacity_mac(
    states: &[ChannelStateMac],
    case: ConstraintCase,
    budget: &PowerBudget,
    opts: &SolveOptions,
) -> Result<PolicyResult> {
    let problem = Problem::new(Ensemble::Mac(states), case, budget, Route::Full)?;
    run(&problem, opts, true)
}

/// Ergodic sum rate of the C-MAC when at most one user transmits per state.
/// Time sharing inside a state is not allowed, so the recovered policy is
/// only rescaled and the duality gap is measured rather than assumed zero.
pub fn ergodic_capacity_mac_tdma(
    states: &[ChannelStateMac],
    case: ConstraintCase,
    budget: &PowerBudget,
    opts: &SolveOptions,
) -> Result<PolicyResult> {
    let problem = Problem::new(Ensemble::Mac(states), case, budget, Route::Tdma)?;
    run(&problem, opts, false)
}

/// Ergodic sum capacity of the C-BC, computed through the closed-form power
/// rules and independently through the auxiliary C-MAC. Fails with a
/// solver error if the two disagree by more than `opts.bc_agreement`.
pub fn ergodic_capacity_bc(
    states: &[ChannelStateBc],
    case: ConstraintCase,
    budget: &PowerBudget,
    opts: &SolveOptions,
) -> Result<PolicyResult> {
    let closed = Problem::new(Ensemble::Bc(states), case, budget, Route::BcClosedForm)?;
    let via = Problem::new(Ensemble::Bc(states), case, budget, Route::BcDualMac)?;
    let mut result = run(&closed, opts, true)?;
    let other = run(&via, opts, true)?;
    let diff = (result.ergodic_sum_rate - other.ergodic_sum_rate).abs() / result.ergodic_sum_rate.abs().max(1e-300);
    result.route_discrepancy = Some(diff);
    if diff > opts.bc_agreement {
        return Err(Error::SolverFailure {
            reason: format!("closed-form and dual-MAC C-BC rates differ by {diff:.3e} (relative)"),
            stationarity: f64::NAN,
            slackness: f64::NAN,
        });
    }
    Ok(result)
}

/// Round-robin C-MAC baseline: at state `t` user `t mod K` transmits
/// `min(P_k, min_m Γ_m / g_km)`.
pub fn fra_baseline_mac(states: &[ChannelStateMac], budget: &PowerBudget) -> Result<PolicyResult> {
    let problem = Problem::new(Ensemble::Mac(states), ConstraintCase::CaseIV, budget, Route::Tdma)?;
    let policy: Vec<Vec<f64>> = states
        .par_iter()
        .enumerate()
        .map(|(t, s)| {
            let k = t % s.k();
            let limit = s
                .g_row(k)
                .iter()
                .zip(&budget.ipc)
                .filter(|(g, _)| **g > 0.0)
                .map(|(g, gamma)| gamma / g)
                .fold(budget.tpc[k], f64::min);
            let mut p = vec![0.0; s.k()];
            p[k] = limit;
            p
        })
        .collect();
    let rate = dual::mean(policy.iter().enumerate().map(|(t, p)| dot(states[t].h(), p).ln_1p()));
    summarize(&problem, policy, None, 1.0, rate, Tolerance::default())
}

/// Round-robin C-BC baseline: at state `t` user `t mod K` is served with
/// `min(Q, min_m Γ_m / f_m)`.
pub fn fra_baseline_bc(states: &[ChannelStateBc], budget: &PowerBudget) -> Result<PolicyResult> {
    let problem = Problem::new(Ensemble::Bc(states), ConstraintCase::CaseIV, budget, Route::BcClosedForm)?;
    let q_max = budget.check_bc(states[0].m())?;
    let policy: Vec<Vec<f64>> = states
        .par_iter()
        .enumerate()
        .map(|(t, s)| {
            let q = s
                .f()
                .iter()
                .zip(&budget.ipc)
                .filter(|(f, _)| **f > 0.0)
                .map(|(f, gamma)| gamma / f)
                .fold(q_max, f64::min);
            let mut p = vec![0.0; s.k()];
            p[t % s.k()] = q;
            p
        })
        .collect();
    let rate = dual::mean(policy.iter().enumerate().map(|(t, p)| dot(states[t].h(), p).ln_1p()));
    summarize(&problem, policy, None, 1.0, rate, Tolerance::default())
}

/// One curve point for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub case: String,
    pub p_db: Option<f64>,
    pub q_db: Option<f64>,
    pub gamma: f64,
    pub k: usize,
    pub m: usize,
    pub rate_nats: f64,
    pub rate_stderr: f64,
    pub gap: f64,
    pub max_lt_viol: f64,
    pub histogram: Vec<usize>,
}

impl CurvePoint {
    pub fn new(case: &str, p_db: Option<f64>, q_db: Option<f64>, gamma: f64, r: &PolicyResult) -> Self {
        let k = r.active_count_histogram.len() - 1;
        Self {
            case: case.to_string(),
            p_db,
            q_db,
            gamma,
            k,
            m: r.achieved_avg_interference.len(),
            rate_nats: r.ergodic_sum_rate,
            rate_stderr: r.rate_stderr,
            gap: r.gap,
            max_lt_viol: r.max_lt_violation,
            histogram: r.active_count_histogram.clone(),
        }
    }
}

/// Writes `case,P_dB,Q_dB,Gamma,rate_nats,rate_stderr,gap,max_lt_viol,K,M,hist_0..hist_N`
/// with one histogram column per possible active count across all points.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let width = points.iter().map(|p| p.histogram.len()).max().unwrap_or(1);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["case", "P_dB", "Q_dB", "Gamma", "rate_nats", "rate_stderr", "gap", "max_lt_viol", "K", "M"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..width).map(|i| format!("hist_{i}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for p in points {
        let mut row = vec![
            p.case.clone(),
            opt(p.p_db),
            opt(p.q_db),
            format!("{}", p.gamma),
            format!("{:.12e}", p.rate_nats),
            format!("{:.6e}", p.rate_stderr),
            format!("{:.6e}", p.gap),
            format!("{:.6e}", p.max_lt_viol),
            p.k.to_string(),
            p.m.to_string(),
        ];
        row.extend((0..width).map(|i| p.histogram.get(i).copied().unwrap_or(0).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
