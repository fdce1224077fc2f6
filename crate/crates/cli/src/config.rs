//! Line-based experiment configuration:
//!
//! ```txt
//! # comment
//! seed = 3            # applies to every section below
//! [fig3]
//! samples = 2000
//! P_dB = -10:5:20
//! [custom]
//! channel = bc
//! case = I, IV
//! K = 5
//! M = 2
//! Q_dB = 0:3:12
//! ```
//!
//! A section named after a preset starts from that preset; any other
//! section starts from `preset = ...` if given, else from empty defaults.

use std::fmt;

use crsum_core::ConstraintCase;

use crate::experiment::{preset, Channel, Experiment, Mode, Sweep};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Parses `a:step:b` (inclusive) or a comma-separated list of numbers.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid {s:?} must be start:step:stop"));
        }
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?} in grid")))
            .collect::<Result<Vec<f64>, String>>()?;
        let (a, step, b) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || b < a {
            return Err(format!("grid {s:?} needs a positive step and start <= stop"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + i as f64 * step).collect());
    }
    parse_list(s, |x| x.parse::<f64>().map_err(|_| format!("bad number {x:?}")))
}

pub fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(item)
        .collect::<Result<Vec<T>, String>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

/// Applies one `key = value` setting to an experiment.
pub fn apply(exp: &mut Experiment, key: &str, value: &str) -> Result<(), String> {
    let value = value.trim();
    match key {
        "preset" => {
            let name = exp.name.clone();
            *exp = preset(value).ok_or_else(|| format!("unknown preset {value:?}"))?;
            exp.name = name;
        }
        "channel" => exp.channel = value.parse::<Channel>()?,
        "case" | "cases" => {
            exp.cases = parse_list(value, |x| x.parse::<ConstraintCase>().map_err(|e| e.to_string()))?;
        }
        "mode" | "modes" => exp.modes = parse_list(value, |x| x.parse::<Mode>())?,
        "samples" => {
            exp.samples = parse_usize(value)?;
            if exp.samples == 0 {
                return Err("samples must be positive".into());
            }
        }
        "seed" => exp.seed = value.parse::<u64>().map_err(|_| format!("bad seed {value:?}"))?,
        "K" => exp.ks = parse_list(value, parse_usize)?,
        "M" => exp.ms = parse_list(value, parse_usize)?,
        "P_dB" | "P-dB" => exp.p_db = parse_grid(value)?,
        "Q_dB" | "Q-dB" => exp.q_db = parse_grid(value)?,
        "gamma" => {
            let g = value.parse::<f64>().map_err(|_| format!("bad gamma {value:?}"))?;
            if !(g > 0.0) || !g.is_finite() {
                return Err("gamma must be positive".into());
            }
            exp.gamma = g;
        }
        "sweep" => exp.sweep = value.parse::<Sweep>()?,
        "normalize_K" => exp.normalize_k = Some(parse_usize(value)?).filter(|k| *k > 0),
        other => return Err(format!("unknown key {other:?}")),
    }
    Ok(())
}

/// Parses a whole configuration file into experiments, one per section.
pub fn parse_config(text: &str) -> Result<Vec<Experiment>, ConfigError> {
    let mut globals: Vec<(usize, String, String)> = Vec::new();
    let mut experiments: Vec<Experiment> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| ConfigError { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| err(format!("malformed section header {line:?}")))?;
            let mut exp = preset(name).unwrap_or_else(|| Experiment::empty(name));
            for (l, k, v) in &globals {
                apply(&mut exp, k, v).map_err(|m| ConfigError { line: *l, message: m })?;
            }
            experiments.push(exp);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match experiments.last_mut() {
            Some(exp) => apply(exp, key, value).map_err(err)?,
            None => {
                apply(&mut Experiment::empty("check"), key, value).map_err(err)?;
                globals.push((line_no, key.to_string(), value.to_string()));
            }
        }
    }
    if experiments.is_empty() {
        return Err(ConfigError { line: text.lines().count().max(1), message: "no [section] found".into() });
    }
    Ok(experiments)
}
