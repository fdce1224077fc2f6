//! Monte Carlo fading ensembles.
//!
//! Gains are power gains (squared magnitude of the complex coefficient).
//! Each state is drawn from its own generator seeded by `(seed, index)`, so
//! the ensemble does not depend on how the states are scheduled across
//! threads.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_distr::{Distribution, Exp1};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// One realization of the C-MAC channel: direct gains `h[k]` from each
/// secondary user to the base station and interference gains `g[k][m]`
/// from user `k` to primary receiver `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStateMac {
    h: Vec<f64>,
    g: Vec<Vec<f64>>,
}

impl ChannelStateMac {
    pub fn new(h: Vec<f64>, g: Vec<Vec<f64>>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Config("a channel state needs at least one user".into()));
        }
        if g.len() != h.len() {
            return Err(Error::Usage(format!(
                "interference matrix has {} rows for {} users",
                g.len(),
                h.len()
            )));
        }
        let m = g[0].len();
        if g.iter().any(|row| row.len() != m) {
            return Err(Error::Usage("interference matrix rows differ in length".into()));
        }
        if h.iter().chain(g.iter().flatten()).any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config("channel gains must be finite and nonnegative".into()));
        }
        Ok(Self { h, g })
    }

    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn m(&self) -> usize {
        self.g[0].len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn g(&self, k: usize, m: usize) -> f64 {
        self.g[k][m]
    }

    /// Interference gains of user `k` towards every primary receiver.
    pub fn g_row(&self, k: usize) -> &[f64] {
        &self.g[k]
    }

    /// `Σ_m weights[m] · g[k][m]`.
    pub fn weighted_interference(&self, k: usize, weights: &[f64]) -> f64 {
        self.g[k].iter().zip(weights).map(|(g, w)| g * w).sum()
    }

    /// Interference `Σ_k g[k][m] p[k]` received at primary receiver `m`.
    pub fn interference_at(&self, m: usize, p: &[f64]) -> f64 {
        self.g.iter().zip(p).map(|(row, p)| row[m] * p).sum()
    }
}

/// One realization of the C-BC channel: direct gains `h[k]` from the base
/// station to each user and interference gains `f[m]` from the base station
/// to each primary receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStateBc {
    h: Vec<f64>,
    f: Vec<f64>,
}

impl ChannelStateBc {
    pub fn new(h: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Config("a channel state needs at least one user".into()));
        }
        if h.iter().chain(&f).any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config("channel gains must be finite and nonnegative".into()));
        }
        Ok(Self { h, f })
    }

    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn m(&self) -> usize {
        self.f.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// Index of the strongest user, lowest index on ties.
    pub fn best_user(&self) -> usize {
        argmax(&self.h)
    }
}

/// First index attaining the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingDistribution {
    /// Power gain of a CN(0,1) coefficient: exponential with unit mean.
    RayleighUnitMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadingModel {
    pub distribution: FadingDistribution,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub n_states: usize,
}

impl FadingModel {
    pub fn rayleigh(k: usize, m: usize, n_states: usize, seed: u64) -> Self {
        Self {
            distribution: FadingDistribution::RayleighUnitMean,
            k,
            m,
            seed,
            n_states,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::Config("n_states must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        Ok(())
    }

    fn state_rng(&self, index: usize) -> Xoshiro256PlusPlus {
        // seed_from_u64 runs SplitMix64 over the combined word.
        let word = self
            .seed
            .wrapping_mul(0xD1B5_4A32_D192_ED03)
            .wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Xoshiro256PlusPlus::seed_from_u64(word)
    }

    fn draw(&self, rng: &mut Xoshiro256PlusPlus, count: usize) -> Vec<f64> {
        match self.distribution {
            FadingDistribution::RayleighUnitMean => {
                (0..count).map(|_| Exp1.sample(rng)).collect()
            }
        }
    }
}

pub fn sample_mac_states(model: &FadingModel) -> Result<Vec<ChannelStateMac>> {
    model.validate()?;
    let states = (0..model.n_states)
        .into_par_iter()
        .map(|t| {
            let mut rng = model.state_rng(t);
            let h = model.draw(&mut rng, model.k);
            let g = (0..model.k).map(|_| model.draw(&mut rng, model.m)).collect();
            ChannelStateMac { h, g }
        })
        .collect();
    Ok(states)
}

pub fn sample_bc_states(model: &FadingModel) -> Result<Vec<ChannelStateBc>> {
    model.validate()?;
    let states = (0..model.n_states)
        .into_par_iter()
        .map(|t| {
            let mut rng = model.state_rng(t);
            let h = model.draw(&mut rng, model.k);
            let f = model.draw(&mut rng, model.m);
            ChannelStateBc { h, f }
        })
        .collect();
    Ok(states)
}

fn float_field(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"))
}

pub fn write_mac_csv<W: Write>(states: &[ChannelStateMac], out: W) -> Result<()> {
    let first = states
        .first()
        .ok_or_else(|| Error::Usage("cannot export an empty ensemble".into()))?;
    let (k, m) = (first.k(), first.m());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=k).map(|i| format!("h_{i}")).collect();
    for i in 1..=k {
        header.extend((1..=m).map(|j| format!("g_{i}_{j}")));
    }
    w.write_record(&header)?;
    for s in states {
        if s.k() != k || s.m() != m {
            return Err(Error::Usage("ensemble mixes channel dimensions".into()));
        }
        let row = s.h.iter().chain(s.g.iter().flatten()).map(|x| format!("{x:e}"));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mac_csv<R: Read>(input: R) -> Result<Vec<ChannelStateMac>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let k = header.iter().filter(|c| c.starts_with("h_")).count();
    let n_g = header.iter().filter(|c| c.starts_with("g_")).count();
    if k == 0 || n_g % k != 0 || k + n_g != header.len() {
        return Err(Error::Usage(format!("unrecognized MAC ensemble header: {header:?}")));
    }
    let m = n_g / k;
    let mut states = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let vals = record
            .iter()
            .map(float_field)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Usage(format!("row {}: {e}", line + 2)))?;
        let h = vals[..k].to_vec();
        let g = vals[k..].chunks(m.max(1)).take(k).map(|c| c[..m].to_vec()).collect();
        let g = if m == 0 { vec![Vec::new(); k] } else { g };
        states.push(ChannelStateMac::new(h, g)?);
    }
    Ok(states)
}

pub fn write_bc_csv<W: Write>(states: &[ChannelStateBc], out: W) -> Result<()> {
    let first = states
        .first()
        .ok_or_else(|| Error::Usage("cannot export an empty ensemble".into()))?;
    let (k, m) = (first.k(), first.m());
    let mut w = csv::Writer::from_writer(out);
    let header = (1..=k)
        .map(|i| format!("h_{i}"))
        .chain((1..=m).map(|j| format!("f_{j}")));
    w.write_record(header)?;
    for s in states {
        if s.k() != k || s.m() != m {
            return Err(Error::Usage("ensemble mixes channel dimensions".into()));
        }
        w.write_record(s.h.iter().chain(&s.f).map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bc_csv<R: Read>(input: R) -> Result<Vec<ChannelStateBc>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let k = header.iter().filter(|c| c.starts_with("h_")).count();
    let m = header.iter().filter(|c| c.starts_with("f_")).count();
    if k == 0 || k + m != header.len() {
        return Err(Error::Usage(format!("unrecognized BC ensemble header: {header:?}")));
    }
    let mut states = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let vals = record
            .iter()
            .map(float_field)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Usage(format!("row {}: {e}", line + 2)))?;
        states.push(ChannelStateBc::new(vals[..k].to_vec(), vals[k..].to_vec())?);
    }
    Ok(states)
}
