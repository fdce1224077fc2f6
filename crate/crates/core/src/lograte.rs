//! Exact maximizer of a single-state log-sum-rate Lagrangian over a polytope:
//!
//! ```txt
//!     maximize  log(1 + h·p) − cost·p
//!     s.t.      R p ≤ b,  p ≥ 0
//! ```
//!
//! The objective depends on `p` only through `s = h·p` and the linear cost,
//! so with `w = 1/(1 + s)` the optimality conditions are exactly those of
//! the linear program `max (w h − cost)·p` over the same polytope, together
//! with the fixed-point condition `w = 1/(1 + h·p)`. The LP optimum `s(w)`
//! is a nondecreasing step function of `w`, so the fixed point is found by
//! walking LP breakpoints (a parametric Newton scheme on the LP value
//! function). At a breakpoint the solution is the convex combination of the
//! two adjacent vertices that meets the fixed point exactly.
//!
//! The returned point is a vertex (or an edge point) of the LP, which is
//! what gives the "at most M+1 active users" structure for ST-IPC problems.

use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};

/// Linear constraints `rows[i] · p ≤ bounds[i]`, plus the implicit `p ≥ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polytope {
    pub rows: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
}

impl Polytope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: Vec<f64>, bound: f64) {
        self.rows.push(row);
        self.bounds.push(bound);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.iter().all(|x| *x >= -tol)
            && self
                .rows
                .iter()
                .zip(&self.bounds)
                .all(|(r, b)| dot(r, p) <= b + tol * (1.0 + b.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRateSolution {
    pub p: Vec<f64>,
    /// Multipliers of the polytope rows at the optimum.
    pub row_multipliers: Vec<f64>,
    /// `1/(1 + h·p)`.
    pub water_level: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Vertex {
    p: Vec<f64>,
    s: f64,
    cost: f64,
    value: f64,
    duals: Vec<f64>,
}

struct Parametric<'a> {
    h: &'a [f64],
    cost: &'a [f64],
    rows: Vec<Vec<f64>>,
    bounds: Vec<f64>,
    n_real_rows: usize,
}

impl Parametric<'_> {
    fn lp(&self, w: f64) -> Result<Vertex> {
        let c: Vec<f64> = self.h.iter().zip(self.cost).map(|(h, c)| w * h - c).collect();
        match lp::maximize(&c, &self.rows, &self.bounds) {
            LpOutcome::Optimal(sol) => Ok(Vertex {
                s: dot(self.h, &sol.x),
                cost: dot(self.cost, &sol.x),
                value: sol.value,
                p: sol.x,
                duals: sol.duals,
            }),
            LpOutcome::Unbounded { column } => Err(Error::Unbounded { user: column }),
        }
    }

    fn finish(&self, p: Vec<f64>, duals: &[f64]) -> LogRateSolution {
        let scale = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let p: Vec<f64> = p
            .into_iter()
            .map(|v| if v <= 1e-15 * scale.max(1e-300) { 0.0 } else { v })
            .collect();
        LogRateSolution {
            water_level: 1.0 / (1.0 + dot(self.h, &p)),
            row_multipliers: duals[..self.n_real_rows].to_vec(),
            p,
        }
    }
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

const MAX_BREAKPOINTS: usize = 500;

pub fn maximize_log_rate(h: &[f64], cost: &[f64], poly: &Polytope) -> Result<LogRateSolution> {
    let n = h.len();
    if cost.len() != n || poly.rows.iter().any(|r| r.len() != n) {
        return Err(Error::Usage("dimension mismatch in log-rate problem".into()));
    }
    if poly.bounds.iter().any(|b| !(*b >= 0.0)) || cost.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::Usage("log-rate problem needs nonnegative bounds and costs".into()));
    }
    let mut rows = poly.rows.clone();
    let mut bounds = poly.bounds.clone();
    // A column that no row limits is only bounded through its own cost; at
    // the optimum p_k ≤ 1/cost_k − 1/h_k, so 1/cost_k is a slack bound.
    for k in 0..n {
        if poly.rows.iter().all(|r| r[k] <= 0.0) {
            if cost[k] > 0.0 {
                let mut row = vec![0.0; n];
                row[k] = 1.0;
                rows.push(row);
                bounds.push(1.0 / cost[k]);
            } else if h[k] > 0.0 {
                return Err(Error::Unbounded { user: k });
            }
        }
    }
    let par = Parametric { h, cost, rows, bounds, n_real_rows: poly.len() };

    let mut hi = par.lp(1.0)?;
    if hi.s <= 0.0 {
        return Ok(par.finish(hi.p, &hi.duals));
    }
    let mut w_hi = 1.0;
    let w_c = 1.0 / (1.0 + hi.s);
    let first = par.lp(w_c)?;
    if same_level(first.s, hi.s) {
        return Ok(par.finish(first.p, &first.duals));
    }
    let mut w_lo = w_c;
    let mut lo = first;

    for _ in 0..MAX_BREAKPOINTS {
        let ds = hi.s - lo.s;
        let w_x = if ds > 0.0 {
            ((hi.cost - lo.cost) / ds).clamp(w_lo, w_hi)
        } else {
            0.5 * (w_lo + w_hi)
        };
        let x = par.lp(w_x)?;
        let line = w_x * lo.s - lo.cost;
        if x.value <= line + 1e-12 * (1.0 + line.abs()) || same_level(x.s, lo.s) || same_level(x.s, hi.s) {
            // Only two vertices are optimal on [w_lo, w_hi]; they swap at w_x.
            let w_top = 1.0 / (1.0 + hi.s);
            let w_bot = 1.0 / (1.0 + lo.s);
            if w_x < w_top {
                let at = par.lp(w_top)?;
                return Ok(par.finish(hi.p, &at.duals));
            }
            if w_x > w_bot {
                let at = par.lp(w_bot)?;
                return Ok(par.finish(lo.p, &at.duals));
            }
            let target = 1.0 / w_x - 1.0;
            let theta = if ds > 0.0 { ((target - lo.s) / ds).clamp(0.0, 1.0) } else { 1.0 };
            let p = lo
                .p
                .iter()
                .zip(&hi.p)
                .map(|(a, b)| (1.0 - theta) * a + theta * b)
                .collect();
            return Ok(par.finish(p, &x.duals));
        }
        let f = w_x - 1.0 / (1.0 + x.s);
        if f == 0.0 {
            return Ok(par.finish(x.p, &x.duals));
        }
        if f < 0.0 {
            w_lo = w_x;
            lo = x;
        } else {
            w_hi = w_x;
            hi = x;
        }
    }
    Err(Error::SolverFailure {
        reason: "parametric LP walk did not terminate".into(),
        stationarity: f64::NAN,
        slackness: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(h: &[f64], cost: &[f64], p: &[f64]) -> f64 {
        (1.0 + dot(h, p)).ln() - dot(cost, p)
    }

    #[test]
    fn single_user_water_filling() {
        // max log(1 + 2p) − 0.5p → p = 1/0.5 − 1/2 = 1.5
        let sol = maximize_log_rate(&[2.0], &[0.5], &Polytope::new()).unwrap();
        assert!((sol.p[0] - 1.5).abs() < 1e-12);
        assert!((sol.water_level - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_without_rows_is_unbounded() {
        let err = maximize_log_rate(&[1.0, 2.0], &[1.0, 0.0], &Polytope::new()).unwrap_err();
        assert!(matches!(err, Error::Unbounded { user: 1 }));
    }

    #[test]
    fn cost_above_gain_gives_zero() {
        let sol = maximize_log_rate(&[1.0, 1.0], &[2.0, 2.0], &Polytope::new()).unwrap();
        assert_eq!(sol.p, vec![0.0, 0.0]);
    }

    #[test]
    fn box_with_linear_objective_saturates() {
        let mut poly = Polytope::new();
        poly.push(vec![1.0, 0.0], 0.7);
        poly.push(vec![0.0, 1.0], 0.9);
        let sol = maximize_log_rate(&[1.0, 3.0], &[0.0, 0.0], &poly).unwrap();
        assert!((sol.p[0] - 0.7).abs() < 1e-12 && (sol.p[1] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn breakpoint_mixture_meets_fixed_point() {
        // Two users sharing one halfspace with equal cost: the optimum can sit
        // on an edge; stationarity must hold with the returned multiplier.
        let h = [3.0, 1.0];
        let cost = [0.2, 0.05];
        let mut poly = Polytope::new();
        poly.push(vec![1.0, 0.3], 1.0);
        let sol = maximize_log_rate(&h, &cost, &poly).unwrap();
        let w = sol.water_level;
        let mu = sol.row_multipliers[0];
        for k in 0..2 {
            let grad = h[k] * w - cost[k] - mu * poly.rows[0][k];
            if sol.p[k] > 0.0 {
                assert!(grad.abs() < 1e-10, "k={k} grad={grad}");
            } else {
                assert!(grad < 1e-10);
            }
        }
        // brute force on a fine grid
        let mut best = f64::NEG_INFINITY;
        for i in 0..=2000 {
            let p0 = i as f64 / 2000.0;
            for j in 0..=400 {
                let p1 = j as f64 / 100.0;
                if p0 + 0.3 * p1 <= 1.0 {
                    best = best.max(objective(&h, &cost, &[p0, p1]));
                }
            }
        }
        assert!(objective(&h, &cost, &sol.p) >= best - 1e-9);
    }
}
