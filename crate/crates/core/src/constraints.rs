//! Power-constraint configuration and feasibility reporting.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fading::{ChannelStateBc, ChannelStateMac};

/// Which of the transmit-power (TPC) and interference-power (IPC)
/// constraints are long-term averages and which are per-state limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintCase {
    /// LT-TPC and LT-IPC.
    CaseI,
    /// LT-TPC and ST-IPC.
    CaseII,
    /// ST-TPC and LT-IPC.
    CaseIII,
    /// ST-TPC and ST-IPC.
    CaseIV,
}

impl ConstraintCase {
    pub const ALL: [ConstraintCase; 4] = [Self::CaseI, Self::CaseII, Self::CaseIII, Self::CaseIV];

    pub fn tpc_long_term(self) -> bool {
        matches!(self, Self::CaseI | Self::CaseII)
    }

    pub fn ipc_long_term(self) -> bool {
        matches!(self, Self::CaseI | Self::CaseIII)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::CaseI => "I",
            Self::CaseII => "II",
            Self::CaseIII => "III",
            Self::CaseIV => "IV",
        }
    }
}

impl fmt::Display for ConstraintCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ConstraintCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Self::CaseI),
            "II" | "2" => Ok(Self::CaseII),
            "III" | "3" => Ok(Self::CaseIII),
            "IV" | "4" => Ok(Self::CaseIV),
            other => Err(Error::Config(format!("unknown constraint case {other:?}"))),
        }
    }
}

/// Constraint thresholds in linear units. Whether a threshold is long-term
/// or short-term is decided by the accompanying [`ConstraintCase`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBudget {
    /// Per-user transmit-power limits `P_k` (C-MAC).
    pub tpc: Vec<f64>,
    /// Per-primary-receiver interference limits `Γ_m`.
    pub ipc: Vec<f64>,
    /// Base-station transmit-power limit `Q` (C-BC).
    pub bs_tpc: Option<f64>,
}

impl PowerBudget {
    pub fn mac(tpc: Vec<f64>, ipc: Vec<f64>) -> Result<Self> {
        let b = Self { tpc, ipc, bs_tpc: None };
        b.validate()?;
        Ok(b)
    }

    pub fn bc(q: f64, ipc: Vec<f64>) -> Result<Self> {
        let b = Self { tpc: Vec::new(), ipc, bs_tpc: Some(q) };
        b.validate()?;
        Ok(b)
    }

    /// Identical thresholds `p` for `k` users and `gamma` for `m` receivers.
    pub fn symmetric_mac(k: usize, m: usize, p: f64, gamma: f64) -> Result<Self> {
        Self::mac(vec![p; k], vec![gamma; m])
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: &f64| x.is_finite() && *x > 0.0;
        if !self.tpc.iter().chain(&self.ipc).chain(self.bs_tpc.iter()).all(ok) {
            return Err(Error::Config("power thresholds must be finite and positive".into()));
        }
        Ok(())
    }

    pub(crate) fn check_mac(&self, k: usize, m: usize) -> Result<()> {
        if self.tpc.len() != k || self.ipc.len() != m {
            return Err(Error::Usage(format!(
                "budget has {} TPC / {} IPC thresholds for K={k}, M={m}",
                self.tpc.len(),
                self.ipc.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_bc(&self, m: usize) -> Result<f64> {
        let q = self
            .bs_tpc
            .ok_or_else(|| Error::Usage("broadcast budget needs a base-station power Q".into()))?;
        if self.ipc.len() != m {
            return Err(Error::Usage(format!(
                "budget has {} IPC thresholds for M={m}",
                self.ipc.len()
            )));
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    LongTermTpc,
    ShortTermTpc,
    LongTermIpc,
    ShortTermIpc,
}

impl ConstraintKind {
    pub fn is_long_term(self) -> bool {
        matches!(self, Self::LongTermTpc | Self::LongTermIpc)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::LongTermTpc => "LT-TPC",
            Self::ShortTermTpc => "ST-TPC",
            Self::LongTermIpc => "LT-IPC",
            Self::ShortTermIpc => "ST-IPC",
        }
    }
}

/// Relative slack allowed when declaring a constraint satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub long_term: f64,
    pub short_term: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { long_term: 1e-3, short_term: 1e-6 }
    }
}

impl Tolerance {
    pub fn uniform(tol: f64) -> Self {
        Self { long_term: tol, short_term: tol }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEntry {
    pub id: String,
    pub kind: ConstraintKind,
    /// Sample average for LT constraints, worst state for ST constraints.
    pub achieved: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

impl ConstraintEntry {
    fn new(id: String, kind: ConstraintKind, achieved: f64, threshold: f64, tol: Tolerance) -> Self {
        let rel = if kind.is_long_term() { tol.long_term } else { tol.short_term };
        Self {
            id,
            kind,
            achieved,
            threshold,
            satisfied: achieved <= threshold * (1.0 + rel),
        }
    }

    /// `(achieved - threshold) / threshold`, floored at zero.
    pub fn relative_violation(&self) -> f64 {
        ((self.achieved - self.threshold) / self.threshold).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintEntry>,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn max_relative_violation(&self, long_term: bool) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.kind.is_long_term() == long_term)
            .map(ConstraintEntry::relative_violation)
            .fold(0.0, f64::max)
    }

    /// Writes `constraint_id,kind,achieved,threshold,satisfied` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["constraint_id", "kind", "achieved", "threshold", "satisfied"])?;
        for e in &self.entries {
            w.write_record([
                e.id.clone(),
                e.kind.label().to_string(),
                format!("{:e}", e.achieved),
                format!("{:e}", e.threshold),
                e.satisfied.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_and_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut sum, mut max, mut n) = (0.0, 0.0f64, 0usize);
    for v in values {
        sum += v;
        max = max.max(v);
        n += 1;
    }
    (if n == 0 { 0.0 } else { sum / n as f64 }, max)
}

/// Evaluates every constraint of `case` on a C-MAC policy given as one power
/// vector per state.
pub fn feasibility_check(
    alloc: &[Vec<f64>],
    states: &[ChannelStateMac],
    case: ConstraintCase,
    budget: &PowerBudget,
    tol: Tolerance,
) -> Result<ConstraintReport> {
    if alloc.len() != states.len() {
        return Err(Error::Usage(format!(
            "{} allocations for {} states",
            alloc.len(),
            states.len()
        )));
    }
    let Some(first) = states.first() else {
        return Ok(ConstraintReport::default());
    };
    let (k, m) = (first.k(), first.m());
    budget.check_mac(k, m)?;
    if states.iter().zip(alloc).any(|(s, p)| s.k() != k || s.m() != m || p.len() != k) {
        return Err(Error::Usage("allocation or state dimensions are inconsistent".into()));
    }
    let mut entries = Vec::with_capacity(k + m);
    let tpc_kind = if case.tpc_long_term() {
        ConstraintKind::LongTermTpc
    } else {
        ConstraintKind::ShortTermTpc
    };
    for i in 0..k {
        let (avg, worst) = mean_and_max(alloc.iter().map(|p| p[i]));
        let achieved = if case.tpc_long_term() { avg } else { worst };
        entries.push(ConstraintEntry::new(format!("tpc_{}", i + 1), tpc_kind, achieved, budget.tpc[i], tol));
    }
    let ipc_kind = if case.ipc_long_term() {
        ConstraintKind::LongTermIpc
    } else {
        ConstraintKind::ShortTermIpc
    };
    for j in 0..m {
        let (avg, worst) = mean_and_max(states.iter().zip(alloc).map(|(s, p)| s.interference_at(j, p)));
        let achieved = if case.ipc_long_term() { avg } else { worst };
        entries.push(ConstraintEntry::new(format!("ipc_{}", j + 1), ipc_kind, achieved, budget.ipc[j], tol));
    }
    Ok(ConstraintReport { entries })
}

/// Evaluates the C-BC constraints on a base-station power policy `q`.
pub fn feasibility_check_bc(
    q: &[f64],
    states: &[ChannelStateBc],
    case: ConstraintCase,
    budget: &PowerBudget,
    tol: Tolerance,
) -> Result<ConstraintReport> {
    if q.len() != states.len() {
        return Err(Error::Usage(format!("{} powers for {} states", q.len(), states.len())));
    }
    let Some(first) = states.first() else {
        return Ok(ConstraintReport::default());
    };
    let m = first.m();
    let q_max = budget.check_bc(m)?;
    let (avg, worst) = mean_and_max(q.iter().copied());
    let mut entries = vec![if case.tpc_long_term() {
        ConstraintEntry::new("tpc_bs".into(), ConstraintKind::LongTermTpc, avg, q_max, tol)
    } else {
        ConstraintEntry::new("tpc_bs".into(), ConstraintKind::ShortTermTpc, worst, q_max, tol)
    }];
    for j in 0..m {
        let (avg, worst) = mean_and_max(states.iter().zip(q).map(|(s, q)| s.f()[j] * q));
        let (kind, achieved) = if case.ipc_long_term() {
            (ConstraintKind::LongTermIpc, avg)
        } else {
            (ConstraintKind::ShortTermIpc, worst)
        };
        entries.push(ConstraintEntry::new(format!("ipc_{}", j + 1), kind, achieved, budget.ipc[j], tol));
    }
    Ok(ConstraintReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_states() -> Vec<ChannelStateMac> {
        vec![
            ChannelStateMac::new(vec![1.0], vec![vec![1.0]]).unwrap(),
            ChannelStateMac::new(vec![1.0], vec![vec![3.0]]).unwrap(),
        ]
    }

    #[test]
    fn zero_allocation_is_feasible() {
        let states = two_states();
        let budget = PowerBudget::mac(vec![1.0], vec![2.0]).unwrap();
        for case in ConstraintCase::ALL {
            let r = feasibility_check(&[vec![0.0], vec![0.0]], &states, case, &budget, Tolerance::default()).unwrap();
            assert!(r.all_satisfied());
            assert!(r.entries.iter().all(|e| e.achieved == 0.0));
        }
    }

    #[test]
    fn short_term_interference_uses_worst_state() {
        let states = two_states();
        let budget = PowerBudget::mac(vec![5.0], vec![2.0]).unwrap();
        let alloc = [vec![1.0], vec![1.0]];
        let st = feasibility_check(&alloc, &states, ConstraintCase::CaseIV, &budget, Tolerance::default()).unwrap();
        let ipc = &st.entries[1];
        assert_eq!(ipc.kind, ConstraintKind::ShortTermIpc);
        assert_eq!(ipc.achieved, 3.0);
        assert!(!ipc.satisfied);

        let lt = feasibility_check(&alloc, &states, ConstraintCase::CaseIII, &budget, Tolerance::default()).unwrap();
        let ipc = &lt.entries[1];
        assert_eq!(ipc.kind, ConstraintKind::LongTermIpc);
        assert_eq!(ipc.achieved, 2.0);
        assert!(ipc.satisfied);
    }

    #[test]
    fn mismatched_lengths_are_usage_errors() {
        let states = two_states();
        let budget = PowerBudget::mac(vec![1.0], vec![1.0]).unwrap();
        let err = feasibility_check(&[vec![0.0]], &states, ConstraintCase::CaseI, &budget, Tolerance::default());
        assert!(matches!(err, Err(Error::Usage(_))));
        let bad_budget = PowerBudget::mac(vec![1.0, 1.0], vec![1.0]).unwrap();
        let err = feasibility_check(&[vec![0.0], vec![0.0]], &states, ConstraintCase::CaseI, &bad_budget, Tolerance::default());
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn budgets_reject_nonpositive_thresholds() {
        assert!(PowerBudget::mac(vec![0.0], vec![1.0]).is_err());
        assert!(PowerBudget::mac(vec![1.0], vec![f64::INFINITY]).is_err());
        assert!(PowerBudget::bc(-1.0, vec![1.0]).is_err());
    }

    #[test]
    fn case_parsing_and_classification() {
        assert_eq!("iii".parse::<ConstraintCase>().unwrap(), ConstraintCase::CaseIII);
        assert!("V".parse::<ConstraintCase>().is_err());
        assert!(ConstraintCase::CaseII.tpc_long_term() && !ConstraintCase::CaseII.ipc_long_term());
        assert!(!ConstraintCase::CaseIII.tpc_long_term() && ConstraintCase::CaseIII.ipc_long_term());
    }

    #[test]
    fn report_csv_columns() {
        let states = two_states();
        let budget = PowerBudget::mac(vec![1.0], vec![2.0]).unwrap();
        let r = feasibility_check(&[vec![1.0], vec![1.0]], &states, ConstraintCase::CaseII, &budget, Tolerance::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "constraint_id,kind,achieved,threshold,satisfied");
        assert_eq!(lines.next().unwrap(), "tpc_1,LT-TPC,1e0,1e0,true");
        assert_eq!(lines.next().unwrap(), "ipc_1,ST-IPC,3e0,2e0,false");
    }

    #[test]
    fn broadcast_feasibility() {
        let states = vec![
            ChannelStateBc::new(vec![1.0, 2.0], vec![0.5]).unwrap(),
            ChannelStateBc::new(vec![1.0, 2.0], vec![2.0]).unwrap(),
        ];
        let budget = PowerBudget::bc(1.0, vec![1.0]).unwrap();
        let r = feasibility_check_bc(&[1.0, 0.5], &states, ConstraintCase::CaseII, &budget, Tolerance::default()).unwrap();
        assert_eq!(r.entries[0].achieved, 0.75);
        assert_eq!(r.entries[1].achieved, 1.0);
        assert!(r.all_satisfied());
    }
}
