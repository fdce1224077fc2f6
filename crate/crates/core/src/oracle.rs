//! Brute-force reference solvers that share no code path with the
//! production solvers beyond the channel types.

use crate::constraints::{ConstraintCase, PowerBudget};
use crate::dual::DualPoint;
use crate::error::{Error, Result};
use crate::fading::ChannelStateMac;
use crate::lograte::Polytope;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub p: Vec<f64>,
    pub value: f64,
}

fn objective(h: &[f64], cost: &[f64], p: &[f64]) -> f64 {
    let s: f64 = h.iter().zip(p).map(|(a, b)| a * b).sum();
    let c: f64 = cost.iter().zip(p).map(|(a, b)| a * b).sum();
    s.ln_1p() - c
}

/// Largest useful value of each coordinate: the tightest single-row bound,
/// or `1/cost_k` beyond which the objective decreases in `p_k`.
fn search_box(h: &[f64], cost: &[f64], poly: &Polytope) -> Result<Vec<f64>> {
    (0..h.len())
        .map(|k| {
            let from_rows = poly
                .rows
                .iter()
                .zip(&poly.bounds)
                .filter(|(r, _)| r[k] > 0.0)
                .map(|(r, b)| b / r[k])
                .fold(f64::INFINITY, f64::min);
            let from_cost = if h[k] <= 0.0 {
                0.0
            } else if cost[k] > 0.0 {
                1.0 / cost[k]
            } else {
                f64::INFINITY
            };
            let ub = from_rows.min(from_cost);
            if ub.is_finite() {
                Ok(ub)
            } else {
                Err(Error::Unbounded { user: k })
            }
        })
        .collect()
}

/// Grid points per axis on the first, full-range level.
const POINTS: usize = 41;
/// Half-width of the refinement window, in steps.
const WINDOW: f64 = 10.0;
/// Step ratio between consecutive levels.
const REFINE: f64 = 4.0;
/// Re-centerings allowed per level.
const MAX_MOVES: usize = 500;

/// An affine parametrization `p = base + Σ_j f_j dir_j` of one face, with
/// `f_j` ranging over `[0, range_j]`.
struct Face {
    base: Vec<f64>,
    dirs: Vec<Vec<f64>>,
    range: Vec<f64>,
}

impl Face {
    fn point(&self, f: &[f64]) -> Vec<f64> {
        let mut p = self.base.clone();
        for (d, x) in self.dirs.iter().zip(f) {
            p.iter_mut().zip(d).for_each(|(a, b)| *a += x * b);
        }
        p
    }
}

/// Constraint rows `a·p ≤ b` including `−p_k ≤ 0`.
fn all_rows(k: usize, poly: &Polytope) -> Vec<(Vec<f64>, f64)> {
    let mut rows: Vec<(Vec<f64>, f64)> = poly.rows.iter().cloned().zip(poly.bounds.iter().copied()).collect();
    for i in 0..k {
        let mut r = vec![0.0; k];
        r[i] = -1.0;
        rows.push((r, 0.0));
    }
    rows
}

/// Parametrizes `{p : a_j·p = b_j, j ∈ subset}` by its free coordinates, or
/// returns `None` when the rows are linearly dependent.
fn face(k: usize, rows: &[(Vec<f64>, f64)], subset: &[usize], ub: &[f64]) -> Option<Face> {
    let r = subset.len();
    let mut a: Vec<Vec<f64>> = subset.iter().map(|&j| rows[j].0.clone()).collect();
    let mut b: Vec<f64> = subset.iter().map(|&j| rows[j].1).collect();
    let mut pivots = Vec::with_capacity(r);
    for row in 0..r {
        let (col, val) = (0..k)
            .filter(|c| !pivots.contains(c))
            .map(|c| (c, a[row][c]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))?;
        if val.abs() < 1e-12 {
            return None;
        }
        for other in 0..r {
            if other != row {
                let factor = a[other][col] / val;
                if factor != 0.0 {
                    for c in 0..k {
                        a[other][c] -= factor * a[row][c];
                    }
                    b[other] -= factor * b[row];
                }
            }
        }
        pivots.push(col);
    }
    // row i now reads a[i][pivot_i] p_pivot_i + Σ_free a[i][c] p_c = b[i]
    let free: Vec<usize> = (0..k).filter(|c| !pivots.contains(c)).collect();
    let mut base = vec![0.0; k];
    for (i, &pc) in pivots.iter().enumerate() {
        base[pc] = b[i] / a[i][pc];
    }
    let dirs = free
        .iter()
        .map(|&fc| {
            let mut d = vec![0.0; k];
            d[fc] = 1.0;
            for (i, &pc) in pivots.iter().enumerate() {
                d[pc] = -a[i][fc] / a[i][pc];
            }
            d
        })
        .collect();
    let range = free.iter().map(|&fc| ub[fc]).collect();
    Some(Face { base, dirs, range })
}

fn feasible_point(rows: &[(Vec<f64>, f64)], p: &[f64]) -> bool {
    rows.iter()
        .all(|(r, b)| r.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() <= b + 1e-12 * (1.0 + b.abs()))
}

/// Coarse-to-fine search over one face.
fn search_face(h: &[f64], cost: &[f64], rows: &[(Vec<f64>, f64)], face: &Face, grid_step: f64, best: &mut GridOptimum) {
    let d = face.dirs.len();
    let mut local: Option<(Vec<f64>, f64)> = None;
    let mut consider = |f: &[f64], local: &mut Option<(Vec<f64>, f64)>| {
        let p = face.point(f);
        if feasible_point(rows, &p) {
            let v = objective(h, cost, &p);
            if local.as_ref().is_none_or(|(_, lv)| v > *lv) {
                *local = Some((f.to_vec(), v));
            }
            if v > best.value {
                *best = GridOptimum { p: p.iter().map(|x| x.max(0.0)).collect(), value: v };
            }
        }
    };
    let scan = |lo: &[f64], hi: &[f64], step: &[f64], local: &mut Option<(Vec<f64>, f64)>, consider: &mut dyn FnMut(&[f64], &mut Option<(Vec<f64>, f64)>)| {
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                if step[i] == 0.0 {
                    return vec![lo[i]];
                }
                let n = ((hi[i] - lo[i]) / step[i]).round() as usize;
                (0..=n).map(|j| (lo[i] + j as f64 * step[i]).min(hi[i])).collect()
            })
            .collect();
        let mut idx = vec![0usize; d];
        let mut f = vec![0.0; d];
        'grid: loop {
            for i in 0..d {
                f[i] = axes[i][idx[i]];
            }
            consider(&f, local);
            for i in 0..d {
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    continue 'grid;
                }
                idx[i] = 0;
            }
            break;
        }
    };
    let mut step: Vec<f64> = face.range.iter().map(|u| u / (POINTS - 1) as f64).collect();
    scan(&vec![0.0; d], &face.range, &step, &mut local, &mut consider);
    if d == 0 {
        return;
    }
    while step.iter().any(|s| *s > grid_step) {
        step.iter_mut().for_each(|s| *s /= REFINE);
        for _ in 0..MAX_MOVES {
            let Some((center, _)) = local.clone() else {
                return;
            };
            let lo: Vec<f64> = (0..d).map(|i| (center[i] - WINDOW * step[i]).max(0.0)).collect();
            let hi: Vec<f64> = (0..d).map(|i| (center[i] + WINDOW * step[i]).min(face.range[i])).collect();
            scan(&lo, &hi, &step, &mut local, &mut consider);
            let moved = &local.as_ref().unwrap().0;
            let at_edge = (0..d).any(|i| {
                let delta = moved[i] - center[i];
                (delta <= -(WINDOW - 1.0) * step[i] && lo[i] > 0.0)
                    || (delta >= (WINDOW - 1.0) * step[i] && hi[i] < face.range[i])
            });
            if !at_edge {
                break;
            }
        }
    }
}

fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |l| l + 1);
            for j in start..n {
                let mut t = s.clone();
                t.push(j);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Maximizes `log(1 + h·p) − cost·p` over `{p ≥ 0 : R p ≤ b}` by brute
/// force. Every face of the polytope (every set of at most `K` constraints
/// held with equality) is searched by a grid in its own free coordinates:
/// a full-range scan, then windows around the incumbent that move while it
/// reaches their edge, with the step shrinking until it is at most
/// `grid_step`. The optimum lies in the relative interior of some face, so
/// searching that face's affine hull avoids the slow convergence of a plain
/// grid near slanted boundaries. Rows must have nonnegative coefficients.
pub fn grid_state_oracle(h: &[f64], cost: &[f64], poly: &Polytope, grid_step: f64) -> Result<GridOptimum> {
    let k = h.len();
    if k == 0 || k > 3 {
        return Err(Error::Usage(format!("grid oracle supports 1 to 3 users, got {k}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Usage("grid step must be positive".into()));
    }
    if cost.len() != k || poly.rows.iter().any(|r| r.len() != k || r.iter().any(|a| *a < 0.0)) {
        return Err(Error::Usage("grid oracle needs matching dimensions and nonnegative rows".into()));
    }
    let ub = search_box(h, cost, poly)?;
    let mut rows = all_rows(k, poly);
    // the search box itself, so every face stays bounded
    for (i, u) in ub.iter().enumerate() {
        let mut r = vec![0.0; k];
        r[i] = 1.0;
        rows.push((r, *u));
    }
    let mut best = GridOptimum { p: vec![0.0; k], value: objective(h, cost, &vec![0.0; k]) };
    for subset in subsets(rows.len(), k) {
        if let Some(f) = face(k, &rows, &subset, &ub) {
            search_face(h, cost, &rows, &f, grid_step, &mut best);
        }
    }
    Ok(best)
}

/// The per-state objective data of a C-MAC case: marginal costs and the
/// per-state polytope, for use with [`grid_state_oracle`].
pub fn state_problem(
    state: &ChannelStateMac,
    case: ConstraintCase,
    point: &DualPoint,
    budget: &PowerBudget,
) -> (Vec<f64>, Polytope) {
    let k = state.k();
    let cost: Vec<f64> = (0..k)
        .map(|i| {
            let l = if case.tpc_long_term() { point.lambda[i] } else { 0.0 };
            let m = if case.ipc_long_term() {
                state.g_row(i).iter().zip(&point.mu).map(|(g, mu)| g * mu).sum()
            } else {
                0.0
            };
            l + m
        })
        .collect();
    let mut poly = Polytope::new();
    if !case.tpc_long_term() {
        for i in 0..k {
            let mut row = vec![0.0; k];
            row[i] = 1.0;
            poly.push(row, budget.tpc[i]);
        }
    }
    if !case.ipc_long_term() {
        for m in 0..state.m() {
            poly.push((0..k).map(|i| state.g(i, m)).collect(), budget.ipc[m]);
        }
    }
    (cost, poly)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaaSolution {
    /// One power vector per state, feasible for every constraint.
    pub policy: Vec<Vec<f64>>,
    /// Sample-average sum rate of `policy`; a lower bound on the SAA optimum.
    pub value: f64,
    pub iterations: usize,
}

/// Sparse halfspace `a·x ≤ b` over the flattened policy.
struct Halfspace {
    idx: Vec<usize>,
    coef: Vec<f64>,
    b: f64,
}

/// Euclidean projection onto `{lo ≤ x ≤ hi} ∩ {a_j·x ≤ b_j ∀j}`, computed by
/// coordinate ascent on the multipliers of the halfspaces with each 1-D
/// step solved by bisection.
struct Projector {
    hi: Vec<f64>,
    spaces: Vec<Halfspace>,
    theta: Vec<f64>,
}

impl Projector {
    fn clip(&self, i: usize, v: f64) -> f64 {
        v.clamp(0.0, self.hi[i])
    }

    fn project(&mut self, z: &[f64]) -> Vec<f64> {
        let n = z.len();
        let mut shift = vec![0.0; n];
        for (h, t) in self.spaces.iter().zip(&self.theta) {
            for (i, a) in h.idx.iter().zip(&h.coef) {
                shift[*i] += t * a;
            }
        }
        for _sweep in 0..2000 {
            let mut moved = 0.0f64;
            for j in 0..self.spaces.len() {
                let h = &self.spaces[j];
                let old = self.theta[j];
                let phi = |t: f64| -> f64 {
                    h.idx
                        .iter()
                        .zip(&h.coef)
                        .map(|(i, a)| a * (z[*i] - shift[*i] + (old - t) * a).clamp(0.0, self.hi[*i]))
                        .sum()
                };
                let new = if phi(0.0) <= h.b {
                    0.0
                } else {
                    let mut up = old.max(1e-12);
                    while phi(up) > h.b {
                        up *= 2.0;
                    }
                    let mut down = 0.0;
                    for _ in 0..100 {
                        let mid = 0.5 * (down + up);
                        if mid <= down || mid >= up {
                            break;
                        }
                        if phi(mid) > h.b {
                            down = mid;
                        } else {
                            up = mid;
                        }
                    }
                    up
                };
                if new != old {
                    for (i, a) in h.idx.iter().zip(&h.coef) {
                        shift[*i] += (new - old) * a;
                    }
                    moved = moved.max((new - old).abs());
                    self.theta[j] = new;
                }
            }
            if moved <= 1e-15 {
                break;
            }
        }
        (0..n).map(|i| self.clip(i, z[i] - shift[i])).collect()
    }
}

/// Maximizes the sample-average sum rate directly over all `n·K` powers by
/// accelerated projected-gradient ascent. `step` defaults to `1/L` for the
/// objective's gradient Lipschitz constant. The final iterate is scaled into
/// exact feasibility, so `value` is a certified lower bound.
pub fn saa_primal_oracle(
    states: &[ChannelStateMac],
    case: ConstraintCase,
    budget: &PowerBudget,
    step: Option<f64>,
    max_iter: usize,
) -> Result<SaaSolution> {
    let n = states.len();
    if n == 0 {
        return Err(Error::Usage("empty state ensemble".into()));
    }
    let (k, m) = (states[0].k(), states[0].m());
    budget.validate()?;
    if budget.tpc.len() != k || budget.ipc.len() != m || states.iter().any(|s| s.k() != k || s.m() != m) {
        return Err(Error::Usage("budget or state dimensions are inconsistent".into()));
    }
    let nf = n as f64;
    let var = |t: usize, i: usize| t * k + i;

    let mut spaces = Vec::new();
    let mut hi = vec![f64::INFINITY; n * k];
    if case.tpc_long_term() {
        for i in 0..k {
            spaces.push(Halfspace { idx: (0..n).map(|t| var(t, i)).collect(), coef: vec![1.0 / nf; n], b: budget.tpc[i] });
        }
    } else {
        for t in 0..n {
            for i in 0..k {
                hi[var(t, i)] = budget.tpc[i];
            }
        }
    }
    for j in 0..m {
        if case.ipc_long_term() {
            let mut idx = Vec::new();
            let mut coef = Vec::new();
            for (t, s) in states.iter().enumerate() {
                for i in 0..k {
                    idx.push(var(t, i));
                    coef.push(s.g(i, j) / nf);
                }
            }
            spaces.push(Halfspace { idx, coef, b: budget.ipc[j] });
        } else {
            for (t, s) in states.iter().enumerate() {
                spaces.push(Halfspace { idx: (0..k).map(|i| var(t, i)).collect(), coef: (0..k).map(|i| s.g(i, j)).collect(), b: budget.ipc[j] });
            }
        }
    }
    // Per-coordinate bound implied by a single halfspace keeps the box finite.
    for h in &spaces {
        for (i, a) in h.idx.iter().zip(&h.coef) {
            if *a > 0.0 && h.idx.len() == k {
                hi[*i] = hi[*i].min(h.b / a);
            }
        }
    }
    let mut proj = Projector { theta: vec![0.0; spaces.len()], hi, spaces };

    let lipschitz = states
        .iter()
        .map(|s| s.h().iter().map(|h| h * h).sum::<f64>())
        .fold(0.0, f64::max)
        / nf;
    let step = step.unwrap_or(1.0 / lipschitz.max(1e-300));
    let value_of = |x: &[f64]| -> f64 {
        states
            .iter()
            .enumerate()
            .map(|(t, s)| s.h().iter().enumerate().map(|(i, h)| h * x[var(t, i)]).sum::<f64>().ln_1p())
            .sum::<f64>()
            / nf
    };
    let gradient = |x: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n * k];
        for (t, s) in states.iter().enumerate() {
            let c = 1.0 + s.h().iter().enumerate().map(|(i, h)| h * x[var(t, i)]).sum::<f64>();
            for i in 0..k {
                g[var(t, i)] = s.h()[i] / (nf * c);
            }
        }
        g
    };

    let mut x = proj.project(&vec![0.0; n * k]);
    let mut y = x.clone();
    let mut momentum = 1.0f64;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let g = gradient(&y);
        let z: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a + step * b).collect();
        let next = proj.project(&z);
        let next_m = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        // restart when the step points against the gradient
        let restart = g.iter().zip(next.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum::<f64>() < 0.0;
        let change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if restart {
            momentum = 1.0;
            y = next.clone();
        } else {
            let beta = (momentum - 1.0) / next_m;
            y = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            momentum = next_m;
        }
        x = next;
        if change <= 1e-13 * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(*v))) {
            break;
        }
    }

    // Exact feasibility: clip to the box, scale each state into its own
    // halfspaces, then scale everything into the coupled ones.
    for (i, v) in x.iter_mut().enumerate() {
        *v = proj.clip(i, *v);
    }
    let mut global = 1.0f64;
    for h in &proj.spaces {
        let used: f64 = h.idx.iter().zip(&h.coef).map(|(i, a)| a * x[*i]).sum();
        if used <= h.b {
            continue;
        }
        if h.idx.len() == k {
            let f = h.b / used;
            h.idx.iter().for_each(|i| x[*i] *= f);
        } else {
            global = global.min(h.b / used);
        }
    }
    x.iter_mut().for_each(|v| *v *= global);
    let value = value_of(&x);
    let policy = (0..n).map(|t| x[t * k..(t + 1) * k].to_vec()).collect();
    Ok(SaaSolution { policy, value, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_1d_matches_water_filling() {
        let opt = grid_state_oracle(&[2.0], &[0.5], &Polytope::new(), 1e-6).unwrap();
        assert!((opt.p[0] - 1.5).abs() < 1e-5);
        let exact = 4f64.ln() - 0.75;
        assert!(exact - opt.value < 1e-10 && opt.value <= exact);
    }

    #[test]
    fn refinement_never_decreases_value() {
        let mut poly = Polytope::new();
        poly.push(vec![1.0, 0.0], 0.3);
        poly.push(vec![0.0, 1.0], 1.0);
        poly.push(vec![0.7, 1.3], 1.0);
        let coarse = grid_state_oracle(&[4.0, 2.0], &[0.0, 0.0], &poly, 1e-2).unwrap();
        let fine = grid_state_oracle(&[4.0, 2.0], &[0.0, 0.0], &poly, 1e-5).unwrap();
        assert!(fine.value >= coarse.value);
    }

    #[test]
    fn too_many_users_is_a_usage_error() {
        let err = grid_state_oracle(&[1.0; 4], &[1.0; 4], &Polytope::new(), 1e-3).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn two_state_water_filling() {
        let states = vec![
            ChannelStateMac::new(vec![0.5], vec![vec![]]).unwrap(),
            ChannelStateMac::new(vec![2.0], vec![vec![]]).unwrap(),
        ];
        let b = PowerBudget::mac(vec![1.0], vec![]).unwrap();
        let sol = saa_primal_oracle(&states, ConstraintCase::CaseI, &b, None, 20000).unwrap();
        let expect = 0.5 * ((0.5f64 * 0.25).ln_1p() + (2.0f64 * 1.75).ln_1p());
        assert!((sol.value - expect).abs() < 1e-9, "{} vs {expect}", sol.value);
    }

    #[test]
    fn tiny_budget_gives_tiny_value() {
        let states = vec![ChannelStateMac::new(vec![1.0, 2.0], vec![vec![1.0], vec![1.0]]).unwrap()];
        let b = PowerBudget::mac(vec![1e-9, 1e-9], vec![1e-9]).unwrap();
        let sol = saa_primal_oracle(&states, ConstraintCase::CaseIV, &b, None, 1000).unwrap();
        assert!(sol.value >= 0.0 && sol.value < 1e-8);
    }
}
