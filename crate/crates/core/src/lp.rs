//! Dense tableau simplex for the small linear programs that arise per state:
//!
//! ```txt
//!     maximize  c·x
//!     s.t.      A x ≤ b,  x ≥ 0,   with b ≥ 0
//! ```
//!
//! The origin is always feasible, so no phase one is needed.

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    /// Optimal row multipliers (one per row of `A`).
    pub duals: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum LpOutcome {
    Optimal(LpSolution),
    /// The objective grows without bound along column `column`.
    Unbounded { column: usize },
}

const MAX_PIVOTS: usize = 10_000;
/// Pivots taken with Dantzig's rule before switching to Bland's rule.
const DANTZIG_PIVOTS: usize = 64;

pub(crate) fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    debug_assert_eq!(b.len(), m);
    debug_assert!(b.iter().all(|v| *v >= 0.0));
    let cols = n + m;
    let width = cols + 1;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row[cols] = b[i];
    }
    let mut obj = vec![0.0; width];
    for j in 0..n {
        obj[j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let scale_c = c.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let eps_cost = 1e-13 * scale_c;
    let eps_pivot = 1e-12;

    for pivots in 0..MAX_PIVOTS {
        let entering = if pivots < DANTZIG_PIVOTS {
            let mut best = None;
            let mut most = -eps_cost;
            for (j, &r) in obj[..cols].iter().enumerate() {
                if r < most {
                    most = r;
                    best = Some(j);
                }
            }
            best
        } else {
            obj[..cols].iter().position(|&r| r < -eps_cost)
        };
        let Some(e) = entering else { break };

        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let coef = t[i * width + e];
            if coef > eps_pivot {
                let ratio = t[i * width + cols] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best_ratio - 1e-15 * best_ratio.abs()
                            || (ratio <= best_ratio + 1e-15 * best_ratio.abs() && basis[i] < basis[l])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return LpOutcome::Unbounded { column: e };
        };
        pivot(&mut t, &mut obj, width, m, r, e);
        basis[r] = e;
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i * width + cols].max(0.0);
        }
    }
    let duals = (0..m).map(|i| obj[n + i].max(0.0)).collect();
    let value = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    LpOutcome::Optimal(LpSolution { x, duals, value })
}

fn pivot(t: &mut [f64], obj: &mut [f64], width: usize, m: usize, r: usize, e: usize) {
    let p = t[r * width + e];
    for v in &mut t[r * width..(r + 1) * width] {
        *v /= p;
    }
    t[r * width + e] = 1.0;
    let (before, rest) = t.split_at_mut(r * width);
    let (prow, after) = rest.split_at_mut(width);
    let eliminate = |row: &mut [f64]| {
        let f = row[e];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            row[e] = 0.0;
        }
    };
    for row in before.chunks_mut(width) {
        eliminate(row);
    }
    for row in after.chunks_mut(width).take(m - r - 1) {
        eliminate(row);
    }
    eliminate(obj);
}
