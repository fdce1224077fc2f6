//! Experiment definitions, presets and the curve runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use crsum_core::capacity::{
    ergodic_capacity_bc, ergodic_capacity_mac, ergodic_capacity_mac_tdma, fra_baseline_bc, fra_baseline_mac,
    write_curve_csv, CurvePoint,
};
use crsum_core::fading::{sample_bc_states, sample_mac_states};
use crsum_core::{db_to_linear, ConstraintCase, FadingModel, PolicyResult, PowerBudget, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Mac,
    Bc,
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mac" => Ok(Channel::Mac),
            "bc" => Ok(Channel::Bc),
            _ => Err(format!("unknown channel {s:?} (mac, bc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    Tdma,
    Fra,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Tdma => "tdma",
            Mode::Fra => "fra",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Mode::Full),
            "tdma" => Ok(Mode::Tdma),
            "fra" => Ok(Mode::Fra),
            _ => Err(format!("unknown mode {s:?} (full, tdma, fra)")),
        }
    }
}

/// The x-axis of every curve of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    P,
    Q,
    K,
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "P" | "p" => Ok(Sweep::P),
            "Q" | "q" => Ok(Sweep::Q),
            "K" | "k" => Ok(Sweep::K),
            _ => Err(format!("unknown sweep {s:?} (P, Q, K)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub channel: Channel,
    pub cases: Vec<ConstraintCase>,
    pub modes: Vec<Mode>,
    pub samples: usize,
    pub seed: u64,
    pub ks: Vec<usize>,
    pub ms: Vec<usize>,
    pub p_db: Vec<f64>,
    pub q_db: Vec<f64>,
    /// Common interference limit of every primary receiver, linear.
    pub gamma: f64,
    pub sweep: Sweep,
    /// With `Some(k0)`, the per-user limit at `K` users is `P·k0/K` for the
    /// optimal policies and `P·k0` for FRA.
    pub normalize_k: Option<usize>,
}

impl Experiment {
    pub fn empty(name: &str) -> Self {
        Self {
            name: name.to_string(),
            channel: Channel::Mac,
            cases: ConstraintCase::ALL.to_vec(),
            modes: vec![Mode::Full],
            samples: 10_000,
            seed: 1,
            ks: vec![2],
            ms: vec![1],
            p_db: vec![0.0],
            q_db: vec![0.0],
            gamma: 1.0,
            sweep: Sweep::P,
            normalize_k: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ks.iter().any(|k| *k == 0) {
            bail!("{}: K must be at least 1", self.name);
        }
        if self.samples == 0 {
            bail!("{}: samples must be positive", self.name);
        }
        if self.cases.is_empty() || self.modes.is_empty() {
            bail!("{}: no case or mode selected", self.name);
        }
        if self.channel == Channel::Bc && self.modes.contains(&Mode::Tdma) {
            bail!("{}: the tdma mode applies to the MAC only (the BC optimum is already single-user)", self.name);
        }
        Ok(())
    }
}

pub const PRESETS: [&str; 6] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

pub fn preset(name: &str) -> Option<Experiment> {
    let mut e = Experiment::empty(name);
    let p_grid: Vec<f64> = (0..=12).map(|i| -10.0 + 2.5 * i as f64).collect();
    match name {
        "fig3" => {
            e.ks = vec![2];
            e.ms = vec![1];
            e.p_db = p_grid;
        }
        "fig4" => {
            e.channel = Channel::Bc;
            e.ks = vec![5];
            e.ms = vec![2];
            e.q_db = p_grid;
            e.sweep = Sweep::Q;
        }
        "fig5" | "fig6" => {
            e.modes = vec![Mode::Full, Mode::Tdma];
            (e.ks, e.ms) = if name == "fig5" { (vec![2], vec![1]) } else { (vec![4], vec![2]) };
            e.p_db = p_grid;
        }
        "fig7" => {
            e.cases = vec![ConstraintCase::CaseI];
            e.modes = vec![Mode::Full, Mode::Fra];
            e.ks = vec![2, 4];
            e.ms = vec![2];
            e.p_db = p_grid;
            e.normalize_k = Some(2);
        }
        "fig8" => {
            e.channel = Channel::Bc;
            e.cases = vec![ConstraintCase::CaseI];
            e.modes = vec![Mode::Full, Mode::Fra];
            e.ks = vec![1, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20];
            e.ms = vec![1, 4];
            e.q_db = vec![3.0];
            e.sweep = Sweep::K;
        }
        _ => return None,
    }
    Some(e)
}

/// One output file: a fixed case, mode, and (unless swept) K and M.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub file: String,
    pub case: Option<ConstraintCase>,
    pub mode: Mode,
    pub ks: Vec<usize>,
    pub m: usize,
}

impl Curve {
    fn label(&self) -> String {
        self.case.map_or_else(|| "FRA".to_string(), |c| c.label().to_string())
    }
}

pub fn curves(exp: &Experiment) -> Vec<Curve> {
    let mut out = Vec::new();
    let k_groups: Vec<Vec<usize>> = if exp.sweep == Sweep::K {
        vec![exp.ks.clone()]
    } else {
        exp.ks.iter().map(|k| vec![*k]).collect()
    };
    for &m in &exp.ms {
        for ks in &k_groups {
            for &mode in &exp.modes {
                let cases: Vec<Option<ConstraintCase>> = if mode == Mode::Fra {
                    vec![None]
                } else {
                    exp.cases.iter().map(|c| Some(*c)).collect()
                };
                for case in cases {
                    let mut curve = Curve { file: String::new(), case, mode, ks: ks.clone(), m };
                    let mut file = format!("{}_{}_{}", exp.name, curve.label(), mode.label());
                    if exp.sweep != Sweep::K && exp.ks.len() > 1 {
                        file.push_str(&format!("_K{}", ks[0]));
                    }
                    if exp.ms.len() > 1 {
                        file.push_str(&format!("_M{m}"));
                    }
                    curve.file = file + ".csv";
                    out.push(curve);
                }
            }
        }
    }
    out
}

fn solve_point(
    exp: &Experiment,
    curve: &Curve,
    k: usize,
    p_db: f64,
    q_db: f64,
    mac: &[crsum_core::ChannelStateMac],
    bc: &[crsum_core::ChannelStateBc],
) -> crsum_core::Result<PolicyResult> {
    let opts = SolveOptions::default();
    let gamma = vec![exp.gamma; curve.m];
    match exp.channel {
        Channel::Mac => {
            let p = db_to_linear(p_db);
            let per_user = match (exp.normalize_k, curve.mode) {
                (Some(k0), Mode::Fra) => p * k0 as f64,
                (Some(k0), _) => p * k0 as f64 / k as f64,
                (None, _) => p,
            };
            let budget = PowerBudget::mac(vec![per_user; k], gamma)?;
            match (curve.mode, curve.case) {
                (Mode::Fra, _) | (_, None) => fra_baseline_mac(mac, &budget),
                (Mode::Full, Some(c)) => ergodic_capacity_mac(mac, c, &budget, &opts),
                (Mode::Tdma, Some(c)) => ergodic_capacity_mac_tdma(mac, c, &budget, &opts),
            }
        }
        Channel::Bc => {
            let budget = PowerBudget::bc(db_to_linear(q_db), gamma)?;
            match curve.case {
                Some(c) if curve.mode != Mode::Fra => ergodic_capacity_bc(bc, c, &budget, &opts),
                _ => fra_baseline_bc(bc, &budget),
            }
        }
    }
}

/// Summary of one experiment run.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

/// Runs every curve of `exp`, writing one CSV per curve into `out` and a
/// summary line per point to `log`. A curve interrupted by a solver error
/// is written with a `.partial` suffix.
pub fn run_experiment(exp: &Experiment, out: &Path, log: &mut impl std::io::Write) -> Result<RunOutcome> {
    exp.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outcome = RunOutcome::default();
    let mut ensembles: Vec<((usize, usize), (Vec<crsum_core::ChannelStateMac>, Vec<crsum_core::ChannelStateBc>))> = Vec::new();
    for curve in curves(exp) {
        let mut points = Vec::new();
        let mut failure = None;
        'curve: for &k in &curve.ks {
            if !ensembles.iter().any(|(key, _)| *key == (k, curve.m)) {
                let model = FadingModel::rayleigh(k, curve.m, exp.samples, exp.seed);
                let pair = match exp.channel {
                    Channel::Mac => (sample_mac_states(&model)?, Vec::new()),
                    Channel::Bc => (Vec::new(), sample_bc_states(&model)?),
                };
                ensembles.push(((k, curve.m), pair));
            }
            let (_, (mac, bc)) = ensembles.iter().find(|(key, _)| *key == (k, curve.m)).unwrap();
            let grid: Vec<(f64, f64)> = match exp.sweep {
                Sweep::P => exp.p_db.iter().map(|p| (*p, exp.q_db[0])).collect(),
                Sweep::Q => exp.q_db.iter().map(|q| (exp.p_db[0], *q)).collect(),
                Sweep::K => vec![(exp.p_db[0], exp.q_db[0])],
            };
            for (p_db, q_db) in grid {
                match solve_point(exp, &curve, k, p_db, q_db, mac, bc) {
                    Ok(r) => {
                        let (pd, qd) = match exp.channel {
                            Channel::Mac => (Some(p_db), None),
                            Channel::Bc => (None, Some(q_db)),
                        };
                        writeln!(
                            log,
                            "{} case={} mode={} K={k} M={} {}={:.2}dB rate={:.6} nats (±{:.1e}) gap={:.2e}",
                            exp.name,
                            curve.label(),
                            curve.mode.label(),
                            curve.m,
                            if pd.is_some() { "P" } else { "Q" },
                            pd.or(qd).unwrap(),
                            r.ergodic_sum_rate,
                            r.rate_stderr,
                            r.gap
                        )?;
                        points.push(CurvePoint::new(&curve.label(), pd, qd, exp.gamma, &r));
                    }
                    Err(e) => {
                        failure = Some(format!("{}: K={k} P={p_db}dB Q={q_db}dB: {e}", curve.file));
                        break 'curve;
                    }
                }
            }
        }
        let path = match failure {
            Some(_) => out.join(format!("{}.partial", curve.file)),
            None => out.join(&curve.file),
        };
        let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        write_curve_csv(&points, file)?;
        outcome.files.push(path);
        if let Some(f) = failure {
            writeln!(log, "FAILED {f}")?;
            outcome.failures.push(f);
        }
    }
    Ok(outcome)
}
