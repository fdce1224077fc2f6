//! Invariant suites over random instances, shared by `crsum verify` and the
//! acceptance tests. Every check recomputes its certificate from the
//! returned allocation instead of trusting a solver's own report.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_distr::Exp1;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::capacity::{ergodic_capacity_bc, ergodic_capacity_mac, SolveOptions};
use crate::constraints::{ConstraintCase, PowerBudget};
use crate::dual::DualPoint;
use crate::error::{Error, Result};
use crate::fading::{sample_bc_states, sample_mac_states, ChannelStateBc, ChannelStateMac, FadingModel};
use crate::lograte::dot;
use crate::oracle::{grid_state_oracle, saa_primal_oracle, state_problem};
use crate::perstate_bc::{bc_via_dual_mac, solve_state_bc, BcDuals};
use crate::perstate_mac::{
    check_tdma_case2, check_tdma_case3, check_tdma_case4, marginal_costs, solve_state_case1, solve_state_case2,
    solve_state_case3, solve_state_case4, KktMultipliers,
};
use crate::tdma::{tdma_state_case1, tdma_state_case2, tdma_state_case3, tdma_state_case4};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Kkt,
    Oracle,
    Tdma,
    Bc,
    Dual,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [Suite::Lemmas, Suite::Kkt, Suite::Oracle, Suite::Tdma, Suite::Bc, Suite::Dual];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Kkt => "kkt",
            Suite::Oracle => "oracle",
            Suite::Tdma => "tdma",
            Suite::Bc => "bc",
            Suite::Dual => "dual",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?} (lemmas, kkt, oracle, tdma, bc, dual, all)")))
    }
}

/// Deliberate defects used to check that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Case I water level computed as `1.1/ν` instead of `1/ν`.
    Case1WaterLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random per-state instances per case for the KKT and oracle suites.
    pub instances: usize,
    /// Sampled states per case for the structural lemma checks.
    pub lemma_states: usize,
    pub tdma_instances: usize,
    /// States per case for the C-BC duality checks.
    pub bc_states: usize,
    /// Independent `n = 8` ensembles per case for the duality sandwich.
    pub sandwich_ensembles: usize,
    /// Final step of the grid oracle.
    pub grid_step: f64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            instances: 200,
            lemma_states: 10_000,
            tdma_instances: 1_000,
            bc_states: 1_000,
            sandwich_ensembles: 3,
            grid_step: 1e-6,
            fault: None,
        }
    }
}

impl VerifyOptions {
    /// A reduced workload for smoke runs.
    pub fn quick() -> Self {
        Self {
            instances: 20,
            lemma_states: 500,
            tdma_instances: 100,
            bc_states: 100,
            sandwich_ensembles: 1,
            grid_step: 1e-5,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {} ({:.2}s)", self.suite, self.name, self.detail, self.seconds)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in suites {
        let checks = match s {
            Suite::Lemmas => lemmas(opts)?,
            Suite::Kkt => kkt(opts)?,
            Suite::Oracle => oracle(opts)?,
            Suite::Tdma => tdma(opts)?,
            Suite::Bc => bc(opts)?,
            Suite::Dual => dual(opts)?,
            Suite::All => unreachable!(),
        };
        report.checks.extend(checks);
    }
    Ok(report)
}

/// A random per-state problem: channel, long-term prices and short-term
/// limits.
#[derive(Debug, Clone)]
pub struct Instance {
    pub state: ChannelStateMac,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub p_st: Vec<f64>,
    pub gamma_st: Vec<f64>,
}

impl Instance {
    pub fn point(&self, case: ConstraintCase) -> DualPoint {
        DualPoint::new(
            if case.tpc_long_term() { self.lambda.clone() } else { Vec::new() },
            if case.ipc_long_term() { self.mu.clone() } else { Vec::new() },
        )
    }

    pub fn budget(&self) -> PowerBudget {
        PowerBudget { tpc: self.p_st.clone(), ipc: self.gamma_st.clone(), bs_tpc: None }
    }
}

fn rng_for(seed: u64, salt: u64, index: usize) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

/// Draws a random instance with `k` users and `m` receivers: exponential
/// gains, prices in `[0.05, 2)` and limits in `[0.2, 3)`.
pub fn random_instance(rng: &mut impl Rng, k: usize, m: usize) -> Instance {
    let mut exp = || -> f64 { rng.sample::<f64, _>(Exp1) };
    let h: Vec<f64> = (0..k).map(|_| exp()).collect();
    let g: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| exp()).collect()).collect();
    let state = ChannelStateMac::new(h, g).expect("sampled gains are valid");
    let lambda = (0..k).map(|_| rng.gen_range(0.05..2.0)).collect();
    let mu = (0..m).map(|_| rng.gen_range(0.05..2.0)).collect();
    let p_st = (0..k).map(|_| rng.gen_range(0.2..3.0)).collect();
    let gamma_st = (0..m).map(|_| rng.gen_range(0.2..3.0)).collect();
    Instance { state, lambda, mu, p_st, gamma_st }
}

fn instances(seed: u64, salt: u64, n: usize, k_range: (usize, usize), m_range: (usize, usize)) -> Vec<Instance> {
    (0..n)
        .map(|i| {
            let mut rng = rng_for(seed, salt, i);
            let k = rng.gen_range(k_range.0..=k_range.1);
            let m = rng.gen_range(m_range.0..=m_range.1);
            random_instance(&mut rng, k, m)
        })
        .collect()
}

/// Full per-state solution of a case, with the fault applied if requested.
pub fn solve_instance(inst: &Instance, case: ConstraintCase, fault: Option<Fault>) -> Result<(Vec<f64>, KktMultipliers)> {
    let s = &inst.state;
    Ok(match case {
        ConstraintCase::CaseI => {
            let (mut a, kkt) = solve_state_case1(s, &inst.lambda, &inst.mu)?;
            if fault == Some(Fault::Case1WaterLevel) {
                let nu = marginal_costs(s, Some(&inst.lambda), Some(&inst.mu));
                for k in a.active_set.clone() {
                    a.p[k] = (1.1 / nu[k] - 1.0 / s.h()[k]).max(0.0);
                }
            }
            (a.p, kkt.multipliers)
        }
        ConstraintCase::CaseII => {
            let (a, kkt) = solve_state_case2(s, &inst.lambda, &inst.gamma_st)?;
            (a.p, kkt.multipliers)
        }
        ConstraintCase::CaseIII => {
            let (a, kkt, _) = solve_state_case3(s, &inst.mu, &inst.p_st)?;
            (a.p, kkt.multipliers)
        }
        ConstraintCase::CaseIV => {
            let (a, kkt) = solve_state_case4(s, &inst.p_st, &inst.gamma_st)?;
            (a.p, kkt.multipliers)
        }
    })
}

/// Largest KKT residual of `p` for the per-state problem of `case`, using
/// the per-state multipliers in `mult` and deriving `δ` from stationarity.
pub fn kkt_residual(inst: &Instance, case: ConstraintCase, p: &[f64], mult: &KktMultipliers) -> f64 {
    let s = &inst.state;
    let (k, m) = (s.k(), s.m());
    let c = 1.0 + dot(s.h(), p);
    let zero_m = vec![0.0; m];
    let zero_k = vec![0.0; k];
    let mu_loc = if case.ipc_long_term() { &zero_m } else { mult.mu.as_ref().unwrap_or(&zero_m) };
    let lam_loc = if case.tpc_long_term() { &zero_k } else { mult.lambda.as_ref().unwrap_or(&zero_k) };
    let mut worst = 0.0f64;
    for (i, &pi) in p.iter().enumerate() {
        let mut price = lam_loc[i] + (0..m).map(|j| mu_loc[j] * s.g(i, j)).sum::<f64>();
        if case.tpc_long_term() {
            price += inst.lambda[i];
        }
        if case.ipc_long_term() {
            price += (0..m).map(|j| inst.mu[j] * s.g(i, j)).sum::<f64>();
        }
        let grad = s.h()[i] / c - price;
        // δ_i = −grad must be ≥ 0, and δ_i p_i = 0
        worst = worst.max(grad.max(0.0)).max((-grad).max(0.0) * pi).max(-pi);
    }
    if !case.ipc_long_term() {
        for j in 0..m {
            let slack = inst.gamma_st[j] - s.interference_at(j, p);
            worst = worst.max(-slack).max(mu_loc[j] * slack.abs()).max(-mu_loc[j]);
        }
    }
    if !case.tpc_long_term() {
        for i in 0..k {
            let slack = inst.p_st[i] - p[i];
            worst = worst.max(-slack).max(lam_loc[i] * slack.abs()).max(-lam_loc[i]);
        }
    }
    worst
}

/// The per-state objective of `case` at `p`.
pub fn instance_objective(inst: &Instance, case: ConstraintCase, p: &[f64]) -> f64 {
    let (cost, _) = state_problem(&inst.state, case, &inst.point(case), &inst.budget());
    dot(inst.state.h(), p).ln_1p() - dot(&cost, p)
}

fn timed(suite: &'static str, name: impl Into<String>, f: impl FnOnce() -> Result<(bool, String)>) -> Result<CheckResult> {
    let start = Instant::now();
    let (passed, detail) = f()?;
    Ok(CheckResult { suite, name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() })
}

fn lemmas(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let (k, m) = (3, 2);
    let n = opts.lemma_states;
    let states = sample_mac_states(&FadingModel::rayleigh(k, m, n, opts.seed))?;
    let draw = |t: usize| {
        let mut rng = rng_for(opts.seed, 11, t);
        let mut inst = random_instance(&mut rng, k, m);
        inst.state = states[t].clone();
        inst
    };
    let insts: Vec<Instance> = (0..n).map(draw).collect();
    let count = |case: ConstraintCase, bad: &(dyn Fn(&Instance, &[f64]) -> bool + Sync)| -> Result<usize> {
        let flags = insts
            .par_iter()
            .map(|inst| solve_instance(inst, case, opts.fault).map(|(p, _)| bad(inst, &p)))
            .collect::<Result<Vec<bool>>>()?;
        Ok(flags.into_iter().filter(|b| *b).count())
    };
    let active = |p: &[f64]| p.iter().filter(|v| **v > 0.0).count();
    Ok(vec![
        timed("lemmas", "case I at most one active user", || {
            let v = count(ConstraintCase::CaseI, &|_, p| active(p) > 1)?;
            Ok((v == 0, format!("{v} violations in {n} states")))
        })?,
        timed("lemmas", "case II at most M+1 active users", || {
            let v = count(ConstraintCase::CaseII, &|inst, p| active(p) > inst.state.m() + 1)?;
            Ok((v == 0, format!("{v} violations in {n} states")))
        })?,
        timed("lemmas", "case III at most one user strictly inside its cap", || {
            let v = count(ConstraintCase::CaseIII, &|inst, p| {
                p.iter().zip(&inst.p_st).filter(|(x, c)| **x > 0.0 && *x < *c).count() > 1
            })?;
            Ok((v == 0, format!("{v} violations in {n} states")))
        })?,
    ])
}

fn kkt(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let insts = instances(opts.seed, 21, opts.instances, (1, 3), (0, 2));
    ConstraintCase::ALL
        .into_iter()
        .map(|case| {
            let closed_form = matches!(case, ConstraintCase::CaseI | ConstraintCase::CaseIII);
            let limit = if closed_form { 1e-10 } else { 1e-8 };
            timed("kkt", format!("case {} residual <= {limit:e}", case.label()), || {
                let worst = insts
                    .par_iter()
                    .map(|inst| solve_instance(inst, case, opts.fault).map(|(p, mult)| kkt_residual(inst, case, &p, &mult)))
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                Ok((worst <= limit, format!("worst residual {worst:.3e} over {} instances", insts.len())))
            })
        })
        .collect()
}

fn oracle(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let insts = instances(opts.seed, 31, opts.instances, (1, 3), (0, 2));
    ConstraintCase::ALL
        .into_iter()
        .map(|case| {
            timed("oracle", format!("case {} matches grid oracle within 1e-4", case.label()), || {
                let worst = insts
                    .par_iter()
                    .map(|inst| {
                        let (p, _) = solve_instance(inst, case, opts.fault)?;
                        let (cost, poly) = state_problem(&inst.state, case, &inst.point(case), &inst.budget());
                        let grid = grid_state_oracle(inst.state.h(), &cost, &poly, opts.grid_step)?;
                        let infeasible = !poly.contains(&p, 1e-9);
                        let diff = (instance_objective(inst, case, &p) - grid.value).abs();
                        Ok(if infeasible { f64::INFINITY } else { diff })
                    })
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                Ok((worst <= 1e-4, format!("worst |solver − oracle| {worst:.3e} over {} instances", insts.len())))
            })
        })
        .collect()
}

/// Checks one D-TDMA test against the full solver. Returns a description of
/// the first inconsistency, if any.
fn tdma_consistent(case: ConstraintCase, inst: &Instance) -> Result<Option<String>> {
    let s = &inst.state;
    let (test, p) = match case {
        ConstraintCase::CaseII => (check_tdma_case2(s, &inst.lambda, &inst.gamma_st)?, solve_state_case2(s, &inst.lambda, &inst.gamma_st)?.0.p),
        ConstraintCase::CaseIII => (check_tdma_case3(s, &inst.mu, &inst.p_st)?, solve_state_case3(s, &inst.mu, &inst.p_st)?.0.p),
        ConstraintCase::CaseIV => (check_tdma_case4(s, &inst.p_st, &inst.gamma_st)?, solve_state_case4(s, &inst.p_st, &inst.gamma_st)?.0.p),
        ConstraintCase::CaseI => return Ok(None),
    };
    let active = p.iter().filter(|v| **v > 1e-12).count();
    Ok(match test {
        Some(t) => {
            let off = p.iter().enumerate().filter(|(k, _)| *k != t.user).map(|(_, v)| v.abs()).fold(0.0, f64::max);
            let err = (p[t.user] - t.power).abs().max(off);
            (err > 1e-8).then(|| format!("test chose user {} power {} but solver returned {p:?}", t.user, t.power))
        }
        None => (active < 2).then(|| format!("test empty but solver returned single-user {p:?}")),
    })
}

fn tdma(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (salt, case) in [(41, ConstraintCase::CaseII), (42, ConstraintCase::CaseIII), (43, ConstraintCase::CaseIV)] {
        let insts = instances(opts.seed, salt, opts.tdma_instances, (2, 3), (1, 2));
        out.push(timed("tdma", format!("case {} D-TDMA test agrees with solver", case.label()), || {
            let results = insts.par_iter().map(|i| tdma_consistent(case, i)).collect::<Result<Vec<_>>>()?;
            let bad: Vec<String> = results.into_iter().flatten().collect();
            let detail = match bad.first() {
                Some(first) => format!("{} inconsistencies; first: {first}", bad.len()),
                None => format!("{} instances consistent", insts.len()),
            };
            Ok((bad.is_empty(), detail))
        })?);
    }
    let insts = instances(opts.seed, 44, opts.tdma_instances, (1, 3), (0, 2));
    out.push(timed("tdma", "per-state TDMA objective never exceeds the full one", || {
        let mut worst = f64::NEG_INFINITY;
        let mut case1 = 0.0f64;
        for inst in &insts {
            for case in ConstraintCase::ALL {
                let (full, _) = solve_instance(inst, case, opts.fault)?;
                let s = &inst.state;
                let t = match case {
                    ConstraintCase::CaseI => tdma_state_case1(s, &inst.lambda, &inst.mu)?,
                    ConstraintCase::CaseII => tdma_state_case2(s, &inst.lambda, &inst.gamma_st)?,
                    ConstraintCase::CaseIII => tdma_state_case3(s, &inst.mu, &inst.p_st)?,
                    ConstraintCase::CaseIV => tdma_state_case4(s, &inst.p_st, &inst.gamma_st)?,
                };
                let d = instance_objective(inst, case, &t.p) - instance_objective(inst, case, &full);
                worst = worst.max(d);
                if case == ConstraintCase::CaseI {
                    case1 = case1.max(d.abs());
                }
            }
        }
        Ok((worst <= 1e-12 && case1 <= 1e-12, format!("max excess {worst:.3e}, case I mismatch {case1:.3e}")))
    })?);
    Ok(out)
}

fn bc(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let (k, m) = (5, 2);
    let states = sample_bc_states(&FadingModel::rayleigh(k, m, opts.bc_states, opts.seed))?;
    let budget = PowerBudget::bc(2.0, vec![1.0; m])?;
    let mut out = Vec::new();
    for case in ConstraintCase::ALL {
        out.push(timed("bc", format!("case {} closed form equals dual C-MAC per state", case.label()), || {
            let worst = states
                .par_iter()
                .enumerate()
                .map(|(t, s)| {
                    let mut rng = rng_for(opts.seed, 51, t);
                    let duals = BcDuals::new(rng.gen_range(0.05..2.0), (0..m).map(|_| rng.gen_range(0.05..2.0)).collect());
                    bc_discrepancy(s, case, &duals, &budget)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((worst <= 1e-8, format!("worst discrepancy {worst:.3e} over {} states", states.len())))
        })?);
        out.push(timed("bc", format!("case {} ergodic routes agree within 1e-6", case.label()), || {
            let r = ergodic_capacity_bc(&states, case, &budget, &SolveOptions::default())?;
            let d = r.route_discrepancy.unwrap_or(f64::INFINITY);
            Ok((d <= 1e-6, format!("relative discrepancy {d:.3e}, rate {:.6} nats", r.ergodic_sum_rate)))
        })?);
    }
    Ok(out)
}

fn bc_discrepancy(s: &ChannelStateBc, case: ConstraintCase, duals: &BcDuals, budget: &PowerBudget) -> Result<f64> {
    let a = solve_state_bc(s, case, duals, budget)?;
    let b = bc_via_dual_mac(s, case, duals, budget)?;
    if a.user != b.user && a.q > 0.0 && s.h()[a.user] != s.h()[b.user] {
        return Ok(f64::INFINITY);
    }
    Ok((a.q - b.q).abs().max((a.sum_rate_term - b.sum_rate_term).abs()))
}

fn dual(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    out.push(timed("dual", "two-state water filling matches bisection", || {
        let states = vec![
            ChannelStateMac::new(vec![0.5], vec![vec![]])?,
            ChannelStateMac::new(vec![2.0], vec![vec![]])?,
        ];
        let budget = PowerBudget::mac(vec![1.0], vec![])?;
        let r = ergodic_capacity_mac(&states, ConstraintCase::CaseI, &budget, &SolveOptions::default())?;
        let expect = two_state_water_filling(0.5, 2.0, 1.0);
        let err = (r.ergodic_sum_rate - expect).abs();
        Ok((err <= 1e-9, format!("rate {:.12} vs bisection {expect:.12}", r.ergodic_sum_rate)))
    })?);
    for case in [ConstraintCase::CaseI, ConstraintCase::CaseII, ConstraintCase::CaseIII] {
        for e in 0..opts.sandwich_ensembles {
            out.push(timed("dual", format!("case {} sandwich, ensemble {e}", case.label()), || {
                let seed = opts.seed.wrapping_add(1000 + e as u64);
                let states = sample_mac_states(&FadingModel::rayleigh(2, 1, 8, seed))?;
                let budget = PowerBudget::symmetric_mac(2, 1, [1.0, 3.0, 0.5][e % 3], 1.0)?;
                let r = ergodic_capacity_mac(&states, case, &budget, &SolveOptions::default())?;
                let o = saa_primal_oracle(&states, case, &budget, None, 200_000)?;
                let gap = (r.dual_value - o.value) / r.dual_value;
                let feasible = r.feasibility.all_satisfied();
                Ok((
                    gap.abs() <= 1e-3 && o.value <= r.dual_value * (1.0 + 1e-9) && feasible,
                    format!(
                        "dual {:.9}, oracle {:.9}, policy {:.9}, relative gap {gap:.2e}, feasible {feasible}",
                        r.dual_value, o.value, r.ergodic_sum_rate
                    ),
                ))
            })?);
        }
    }
    Ok(out)
}

/// Ergodic rate of single-user water filling over two equiprobable states
/// with gains `h1`, `h2` and average power `p`, by bisection on the level.
pub fn two_state_water_filling(h1: f64, h2: f64, p: f64) -> f64 {
    let power = |level: f64| (level - 1.0 / h1).max(0.0) + (level - 1.0 / h2).max(0.0);
    let (mut lo, mut hi) = (0.0, 2.0 * p + 1.0 / h1 + 1.0 / h2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(mid) > 2.0 * p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let level = 0.5 * (lo + hi);
    0.5 * ((h1 * (level - 1.0 / h1).max(0.0)).ln_1p() + (h2 * (level - 1.0 / h2).max(0.0)).ln_1p())
}
