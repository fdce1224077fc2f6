//! Minimization of the sample-average dual function over the long-term
//! multipliers with the ellipsoid method.
//!
//! A [`LagrangianProblem`] exposes the per-state maximizer of the
//! Lagrangian for fixed multipliers. The dual function is
//!
//! ```txt
//!     g(y) = (1/n) Σ_t g'_t(y) + Σ_j y_j b_j
//! ```
//!
//! with subgradient `b_j − (1/n) Σ_t usage_tj`, where `b_j` are the LT
//! thresholds and `usage_tj` the amount of constraint `j` consumed by the
//! state-`t` maximizer.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Long-term multipliers: `λ` (one per LT transmit-power constraint) followed
/// by `μ` (one per LT interference constraint). Either part may be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualPoint {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl DualPoint {
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>) -> Self {
        Self { lambda, mu }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len() + self.mu.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.lambda.iter().chain(&self.mu).copied().collect()
    }

    pub fn from_slice(v: &[f64], n_lambda: usize) -> Self {
        Self { lambda: v[..n_lambda].to_vec(), mu: v[n_lambda..].to_vec() }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lambda.iter().chain(&self.mu).all(|x| *x >= 0.0)
    }
}

/// What one state contributes to the dual function at a given point.
#[derive(Debug, Clone)]
pub struct StateOutcome<A> {
    pub alloc: A,
    /// Per-state Lagrangian maximum `g'_t`.
    pub lagrangian: f64,
    /// Consumption of each LT constraint, in dual-point order.
    pub usage: Vec<f64>,
    /// `Σ_k h_k p_k`, so that the state's rate is `log(1 + gain_sum)`.
    pub gain_sum: f64,
}

/// A sample-average problem whose long-term constraints are dualized.
pub trait LagrangianProblem: Sync {
    type Alloc: Clone + Send + Sync;

    fn n_states(&self) -> usize;

    /// Number of leading `λ` coordinates in the dual point.
    fn n_lambda(&self) -> usize;

    /// LT thresholds `b_j`, in dual-point order.
    fn thresholds(&self) -> &[f64];

    fn solve_state(&self, t: usize, point: &DualPoint) -> Result<StateOutcome<Self::Alloc>>;

    /// Dual coordinate whose increase restores boundedness when `user`
    /// reports an unbounded subproblem.
    fn coordinate_for_user(&self, user: usize) -> Option<usize>;
}

#[derive(Debug, Clone)]
pub struct DualEvaluation<A> {
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub avg_usage: Vec<f64>,
    pub outcomes: Vec<StateOutcome<A>>,
}

impl<A> DualEvaluation<A> {
    /// Largest factor `γ ≤ 1` making every LT constraint feasible when the
    /// whole policy is scaled by it.
    pub fn rescale_factor(&self, thresholds: &[f64]) -> f64 {
        rescale_factor(thresholds, &self.avg_usage)
    }

    pub fn rate(&self) -> f64 {
        mean(self.outcomes.iter().map(|o| o.gain_sum.ln_1p()))
    }

    pub fn scaled_rate(&self, gamma: f64) -> f64 {
        mean(self.outcomes.iter().map(|o| (gamma * o.gain_sum).ln_1p()))
    }

    pub fn max_relative_violation(&self, thresholds: &[f64]) -> f64 {
        thresholds
            .iter()
            .zip(&self.avg_usage)
            .map(|(b, u)| ((u - b) / b).max(0.0))
            .fold(0.0, f64::max)
    }
}

pub fn rescale_factor(thresholds: &[f64], usage: &[f64]) -> f64 {
    thresholds
        .iter()
        .zip(usage)
        .filter(|(_, u)| **u > 0.0)
        .map(|(b, u)| b / u)
        .fold(1.0, f64::min)
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluates the dual function and all per-state maximizers at `point`.
/// The reduction runs sequentially over the collected outcomes, so the
/// result is independent of thread scheduling.
pub fn evaluate<P: LagrangianProblem>(problem: &P, point: &DualPoint) -> Result<DualEvaluation<P::Alloc>> {
    let thresholds = problem.thresholds();
    if point.dim() != thresholds.len() || point.lambda.len() != problem.n_lambda() {
        return Err(Error::Usage(format!(
            "dual point has dimension {} but the problem has {} LT constraints",
            point.dim(),
            thresholds.len()
        )));
    }
    let n = problem.n_states();
    if n == 0 {
        return Err(Error::Usage("empty state ensemble".into()));
    }
    let outcomes = (0..n)
        .into_par_iter()
        .map(|t| problem.solve_state(t, point))
        .collect::<Result<Vec<_>>>()?;
    let d = thresholds.len();
    let mut avg_usage = vec![0.0; d];
    let mut inner = 0.0;
    for o in &outcomes {
        inner += o.lagrangian;
        for (a, u) in avg_usage.iter_mut().zip(&o.usage) {
            *a += u;
        }
    }
    let nf = n as f64;
    inner /= nf;
    avg_usage.iter_mut().for_each(|a| *a /= nf);
    let y = point.to_vec();
    let value = inner + y.iter().zip(thresholds).map(|(y, b)| y * b).sum::<f64>();
    let subgradient = thresholds.iter().zip(&avg_usage).map(|(b, u)| b - u).collect();
    Ok(DualEvaluation { value, subgradient, avg_usage, outcomes })
}

pub fn dual_value_and_subgradient<P: LagrangianProblem>(problem: &P, point: &DualPoint) -> Result<(f64, Vec<f64>)> {
    let e = evaluate(problem, point)?;
    Ok((e.value, e.subgradient))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidOptions {
    /// Iteration cap; `None` means `500·d²`.
    pub max_iter: Option<usize>,
    /// Stop once the certified bracket `[lower bound, best dual value]` is
    /// narrower than this, relative to the dual value.
    pub dual_tol: f64,
    /// Stop once a rescaled (hence feasible) primal policy is within this
    /// relative distance of the best dual value.
    pub stop_gap: f64,
    /// Stop once the ellipsoid's geometric-mean semi-axis has shrunk below
    /// this fraction of the initial radius.
    pub volume_tol: f64,
}

impl Default for EllipsoidOptions {
    fn default() -> Self {
        Self { max_iter: None, dual_tol: 1e-12, stop_gap: 1e-9, volume_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// No LT constraint, nothing to optimize.
    NoDuals,
    /// Certified dual bracket below `dual_tol`.
    DualBracket,
    /// Feasible primal within `stop_gap` of the dual value.
    PrimalGap,
    /// Ellipsoid shrunk below `volume_tol`.
    Volume,
    /// A zero subgradient or a cut that removes the whole ellipsoid.
    Exact,
    /// The ellipsoid lost positive definiteness numerically.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub dual_value: f64,
    /// Largest relative LT violation of the (unscaled) maximizer at the
    /// current center.
    pub max_lt_violation: f64,
    /// Best dual value minus best feasible primal value so far.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub iterations: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
    pub best_dual_value: f64,
    /// Certified lower bound on the dual optimum.
    pub lower_bound: f64,
    /// Best rate of a rescaled, LT-feasible policy seen during the run.
    pub best_primal_value: f64,
    pub best_point: DualPoint,
    /// Dual point whose rescaled maximizer attains `best_primal_value`.
    pub primal_point: DualPoint,
    pub initial_center: Vec<f64>,
    pub initial_radius: f64,
}

impl ConvergenceReport {
    pub fn gap(&self) -> f64 {
        self.best_dual_value - self.best_primal_value
    }

    pub fn relative_gap(&self) -> f64 {
        self.gap() / self.best_dual_value.abs().max(1e-300)
    }

    /// Writes `iter,dual_value,max_lt_violation,gap` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "dual_value", "max_lt_violation", "gap"])?;
        for r in &self.iterations {
            w.write_record([
                r.iter.to_string(),
                format!("{:e}", r.dual_value),
                format!("{:e}", r.max_lt_violation),
                format!("{:e}", r.gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Ellipsoid {
    center: Vec<f64>,
    shape: Vec<f64>,
    d: usize,
    log_det: f64,
}

impl Ellipsoid {
    fn ball(center: Vec<f64>, radius: f64) -> Self {
        let d = center.len();
        let mut shape = vec![0.0; d * d];
        for i in 0..d {
            shape[i * d + i] = radius * radius;
        }
        Self { center, shape, d, log_det: 2.0 * d as f64 * radius.ln() }
    }

    fn apply(&self, a: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| (0..self.d).map(|j| self.shape[i * self.d + j] * a[j]).sum()).collect()
    }

    /// `sqrt(aᵀ E a)`, the half-width of the ellipsoid along `a`.
    fn width(&self, a: &[f64]) -> f64 {
        let ea = self.apply(a);
        a.iter().zip(&ea).map(|(x, y)| x * y).sum::<f64>().max(0.0).sqrt()
    }

    /// Keeps `{y : a·(y − c) ≤ −α·sqrt(aᵀEa)}`. Returns false when the update
    /// is numerically meaningless.
    fn cut(&mut self, a: &[f64], alpha: f64) -> bool {
        let d = self.d;
        let ea = self.apply(a);
        let aea: f64 = a.iter().zip(&ea).map(|(x, y)| x * y).sum();
        if !(aea > 0.0) || !aea.is_finite() || alpha >= 1.0 {
            return false;
        }
        let root = aea.sqrt();
        let b: Vec<f64> = ea.iter().map(|v| v / root).collect();
        if d == 1 {
            let step = 0.5 * (1.0 + alpha);
            self.center[0] -= step * b[0];
            let shrink = 0.5 * (1.0 - alpha);
            self.shape[0] *= shrink * shrink;
            self.log_det += 2.0 * shrink.ln();
            return self.shape[0] > 0.0;
        }
        let df = d as f64;
        let tau = (1.0 + df * alpha) / (df + 1.0);
        let sigma = 2.0 * (1.0 + df * alpha) / ((df + 1.0) * (1.0 + alpha));
        let delta = df * df * (1.0 - alpha * alpha) / (df * df - 1.0);
        for (c, bi) in self.center.iter_mut().zip(&b) {
            *c -= tau * bi;
        }
        for i in 0..d {
            for j in 0..d {
                self.shape[i * d + j] = delta * (self.shape[i * d + j] - sigma * b[i] * b[j]);
            }
        }
        for i in 0..d {
            for j in 0..i {
                let s = 0.5 * (self.shape[i * d + j] + self.shape[j * d + i]);
                self.shape[i * d + j] = s;
                self.shape[j * d + i] = s;
            }
        }
        self.log_det += df * delta.ln() + (1.0 - sigma).ln();
        (0..d).all(|i| self.shape[i * d + i] > 0.0)
    }
}

/// Minimizes the dual function of `problem` with a deep-cut ellipsoid
/// method started from `y_j = 1/b_j`.
///
/// The initial ball contains the box `0 ≤ y_j ≤ g(y0)/b_j`, which holds the
/// dual optimum because every per-state Lagrangian maximum is nonnegative.
pub fn ellipsoid_solve<P: LagrangianProblem>(
    problem: &P,
    opts: &EllipsoidOptions,
) -> Result<(DualPoint, ConvergenceReport)> {
    let thresholds = problem.thresholds().to_vec();
    let d = thresholds.len();
    let n_lambda = problem.n_lambda();
    if d == 0 {
        let point = DualPoint::default();
        let e = evaluate(problem, &point)?;
        let rate = e.rate();
        let report = ConvergenceReport {
            iterations: vec![IterationRecord { iter: 0, dual_value: e.value, max_lt_violation: 0.0, gap: e.value - rate }],
            stop: Some(StopReason::NoDuals),
            best_dual_value: e.value,
            lower_bound: e.value,
            best_primal_value: rate,
            best_point: point.clone(),
            primal_point: point.clone(),
            initial_center: Vec::new(),
            initial_radius: 0.0,
        };
        return Ok((point, report));
    }

    let c0: Vec<f64> = thresholds.iter().map(|b| 1.0 / b).collect();
    let e0 = evaluate(problem, &DualPoint::from_slice(&c0, n_lambda))?;
    let upper: Vec<f64> = thresholds.iter().map(|b| e0.value / b).collect();
    let cover = c0
        .iter()
        .zip(&upper)
        .map(|(c, u)| c.max(u - c).powi(2))
        .sum::<f64>()
        .sqrt();
    let radius = (10.0 * c0.iter().fold(0.0f64, |a, c| a.max(*c))).max(cover);
    let mut ell = Ellipsoid::ball(c0.clone(), radius);
    let log_det0 = ell.log_det;
    let max_iter = opts.max_iter.unwrap_or(500 * d * d);

    let mut report = ConvergenceReport {
        iterations: Vec::new(),
        stop: None,
        best_dual_value: f64::INFINITY,
        lower_bound: f64::NEG_INFINITY,
        best_primal_value: f64::NEG_INFINITY,
        best_point: DualPoint::from_slice(&c0, n_lambda),
        primal_point: DualPoint::from_slice(&c0, n_lambda),
        initial_center: c0.clone(),
        initial_radius: radius,
    };

    let mut pending = Some(e0);
    for iter in 0..max_iter {
        let center = ell.center.clone();
        let mut a = vec![0.0; d];
        let alpha;
        if let Some(j) = (0..d).find(|&j| center[j] < 0.0 || center[j] > upper[j]) {
            // keep 0 ≤ y_j ≤ upper_j
            let width = ell.width(&unit(d, j));
            if center[j] < 0.0 {
                a[j] = -1.0;
                alpha = -center[j] / width;
            } else {
                a[j] = 1.0;
                alpha = (center[j] - upper[j]) / width;
            }
        } else {
            let point = DualPoint::from_slice(&center, n_lambda);
            let evaluated = match pending.take() {
                Some(e) => Ok(e),
                None => evaluate(problem, &point),
            };
            match evaluated {
                Err(Error::Unbounded { user }) => {
                    let j = problem.coordinate_for_user(user).ok_or(Error::Unbounded { user })?;
                    a[j] = -1.0;
                    alpha = 0.0;
                }
                Err(e) => return Err(e),
                Ok(e) => {
                    let width = ell.width(&e.subgradient);
                    if e.value < report.best_dual_value {
                        report.best_dual_value = e.value;
                        report.best_point = point.clone();
                    }
                    report.lower_bound = report.lower_bound.max(e.value - width);
                    let gamma = e.rescale_factor(&thresholds);
                    let primal = e.scaled_rate(gamma);
                    if primal > report.best_primal_value {
                        report.best_primal_value = primal;
                        report.primal_point = point.clone();
                    }
                    report.iterations.push(IterationRecord {
                        iter,
                        dual_value: e.value,
                        max_lt_violation: e.max_relative_violation(&thresholds),
                        gap: report.best_dual_value - report.best_primal_value,
                    });
                    let scale = report.best_dual_value.abs().max(1e-12);
                    if width == 0.0 {
                        report.stop = Some(StopReason::Exact);
                        break;
                    }
                    if report.best_dual_value - report.lower_bound <= opts.dual_tol * scale {
                        report.stop = Some(StopReason::DualBracket);
                        break;
                    }
                    if report.best_dual_value - report.best_primal_value <= opts.stop_gap * scale {
                        report.stop = Some(StopReason::PrimalGap);
                        break;
                    }
                    a = e.subgradient;
                    alpha = (e.value - report.best_dual_value) / width;
                }
            }
        }
        if alpha >= 1.0 {
            report.stop = Some(StopReason::Exact);
            break;
        }
        if !ell.cut(&a, alpha) {
            report.stop = Some(StopReason::Degenerate);
            break;
        }
        let shrink = ((ell.log_det - log_det0) / (2.0 * d as f64)).exp();
        if shrink <= opts.volume_tol {
            report.stop = Some(StopReason::Volume);
            break;
        }
    }
    if report.stop.is_none() || !report.best_dual_value.is_finite() {
        return Err(Error::Convergence(Box::new(report)));
    }
    Ok((report.best_point.clone(), report))
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[j] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single user, no interference constraint: states with gains `h`,
    /// LT power `p_max`.
    struct WaterFilling {
        h: Vec<f64>,
        p_max: [f64; 1],
    }

    impl LagrangianProblem for WaterFilling {
        type Alloc = f64;

        fn n_states(&self) -> usize {
            self.h.len()
        }

        fn n_lambda(&self) -> usize {
            1
        }

        fn thresholds(&self) -> &[f64] {
            &self.p_max
        }

        fn solve_state(&self, t: usize, point: &DualPoint) -> Result<StateOutcome<f64>> {
            let l = point.lambda[0];
            if l <= 0.0 {
                return Err(Error::Unbounded { user: 0 });
            }
            let h = self.h[t];
            let p = (1.0 / l - 1.0 / h).max(0.0);
            Ok(StateOutcome { alloc: p, lagrangian: (h * p).ln_1p() - l * p, usage: vec![p], gain_sum: h * p })
        }

        fn coordinate_for_user(&self, _user: usize) -> Option<usize> {
            Some(0)
        }
    }

    #[test]
    fn single_state_dual_value() {
        let prob = WaterFilling { h: vec![2.0], p_max: [1.0] };
        let (g, s) = dual_value_and_subgradient(&prob, &DualPoint::new(vec![0.25], vec![])).unwrap();
        // p* = 4 − 0.5 = 3.5; g = log(8) − 0.875 + 0.25
        assert!((g - (8f64.ln() - 0.875 + 0.25)).abs() < 1e-14);
        assert!((s[0] - (1.0 - 3.5)).abs() < 1e-14);
    }

    #[test]
    fn two_state_water_level() {
        let prob = WaterFilling { h: vec![0.5, 2.0], p_max: [1.0] };
        let (point, report) = ellipsoid_solve(&prob, &EllipsoidOptions::default()).unwrap();
        // both states active: (1/λ − 2) + (1/λ − 0.5) = 2 → 1/λ = 2.25
        assert!((point.lambda[0] - 1.0 / 2.25).abs() < 1e-4, "{point:?}");
        let expect = 0.5 * ((0.5f64 * 0.25).ln_1p() + (2.0f64 * 1.75).ln_1p());
        assert!((report.best_dual_value - expect).abs() < 1e-9);
        assert!(report.gap() >= -1e-12);
        assert!(report.iterations.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-15));
    }

    #[test]
    fn report_csv_header() {
        let prob = WaterFilling { h: vec![1.0], p_max: [1.0] };
        let (_, report) = ellipsoid_solve(&prob, &EllipsoidOptions::default()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iter,dual_value,max_lt_violation,gap\n"));
    }

    #[test]
    fn iteration_cap_is_a_convergence_error() {
        let prob = WaterFilling { h: vec![0.5, 2.0, 1.3], p_max: [1.0] };
        let opts = EllipsoidOptions { max_iter: Some(3), ..Default::default() };
        assert!(matches!(ellipsoid_solve(&prob, &opts), Err(Error::Convergence(_))));
    }
}
