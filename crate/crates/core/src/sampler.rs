//! Annealing backends standing in for the QPU: classical simulated
//! annealing, path-integral simulated quantum annealing and reverse
//! annealing from a given classical state.
//!
//! All backends work on Ising spins. Nominal times map to Monte Carlo sweeps
//! through `sweeps_per_us` (default 1 us -> 1000 sweeps).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{unembed, EmbedError, PhysicalIsing, UnembedPolicy};
use crate::model::{IsingModel, ModelShape};
use crate::rng::{derived_rng, Rng};
use crate::sparse::{FlipEnergy, SparseIsing};
use crate::stats::{stats_of_samples, StatsError, StatsSummary};

pub const DEFAULT_SWEEPS_PER_US: f64 = 1000.0;

const DEFAULT_SCHEDULE: &str = include_str!("../data/anneal_schedule.csv");

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid sampler parameter: {0}")]
    Param(String),
    #[error("state has {got} entries, model has {expected} variables")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Transverse weight `A(s)` and problem weight `B(s)` on a grid of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self::from_csv(DEFAULT_SCHEDULE).expect("bundled schedule is valid")
    }
}

fn parse_columns(text: &str, width: usize) -> Result<Vec<Vec<f64>>, SamplerError> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(SamplerError::Schedule(format!(
                "line {}: expected {width} columns, found {}",
                k + 1,
                fields.len()
            )));
        }
        match fields.iter().map(|f| f.parse::<f64>()).collect::<Result<Vec<_>, _>>() {
            Ok(v) => rows.push(v),
            // a header line
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(SamplerError::Schedule(format!("line {}: {e}", k + 1))),
        }
    }
    Ok(rows)
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let x = x.clamp(xs[0], xs[xs.len() - 1]);
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

impl AnnealSchedule {
    pub fn new(s: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self, SamplerError> {
        let out = Self { s, a, b };
        out.validate()?;
        Ok(out)
    }

    /// Three columns `s,A,B`; a header line is skipped.
    pub fn from_csv(text: &str) -> Result<Self, SamplerError> {
        let rows = parse_columns(text, 3)?;
        Self::new(
            rows.iter().map(|r| r[0]).collect(),
            rows.iter().map(|r| r[1]).collect(),
            rows.iter().map(|r| r[2]).collect(),
        )
    }

    /// Separate `s,A` and `s,B` files. The grids are merged and each
    /// function is interpolated linearly onto the union.
    pub fn from_pair_csv(a_text: &str, b_text: &str) -> Result<Self, SamplerError> {
        let a_rows = parse_columns(a_text, 2)?;
        let b_rows = parse_columns(b_text, 2)?;
        if a_rows.len() < 2 || b_rows.len() < 2 {
            return Err(SamplerError::Schedule("need at least two points per function".into()));
        }
        let (sa, va): (Vec<f64>, Vec<f64>) = a_rows.iter().map(|r| (r[0], r[1])).unzip();
        let (sb, vb): (Vec<f64>, Vec<f64>) = b_rows.iter().map(|r| (r[0], r[1])).unzip();
        let mut s: Vec<f64> = sa.iter().chain(&sb).copied().collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        let a = s.iter().map(|&x| interp(&sa, &va, x)).collect();
        let b = s.iter().map(|&x| interp(&sb, &vb, x)).collect();
        Self::new(s, a, b)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,A,B\n");
        for k in 0..self.s.len() {
            let _ = writeln!(out, "{},{},{}", self.s[k], self.a[k], self.b[k]);
        }
        out
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let n = self.s.len();
        if n < 2 || self.a.len() != n || self.b.len() != n {
            return Err(SamplerError::Schedule(
                "s, A and B need equal lengths of at least 2".into(),
            ));
        }
        if self.s[0] != 0.0 || self.s[n - 1] != 1.0 {
            return Err(SamplerError::Schedule("s must run from 0 to 1".into()));
        }
        if self.s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SamplerError::Schedule("s must be strictly increasing".into()));
        }
        if self.a.iter().chain(&self.b).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SamplerError::Schedule("A and B must be finite and non-negative".into()));
        }
        if self.a.windows(2).any(|w| w[1] > w[0]) {
            return Err(SamplerError::Schedule("A must be non-increasing".into()));
        }
        if self.b.windows(2).any(|w| w[1] < w[0]) {
            return Err(SamplerError::Schedule("B must be non-decreasing".into()));
        }
        Ok(())
    }

    /// `(A(s), B(s))` by linear interpolation.
    pub fn at(&self, s: f64) -> (f64, f64) {
        (interp(&self.s, &self.a, s), interp(&self.s, &self.b, s))
    }
}

/// Reverse schedule `s: 1 -> s_R -> 1`, each leg linear over `t_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseSchedule {
    pub s_r: f64,
    /// Duration of each leg in nanoseconds.
    pub t_r_ns: f64,
    pub initial: Vec<i8>,
}

impl ReverseSchedule {
    pub fn new(s_r: f64, t_r_ns: f64, initial: Vec<i8>) -> Result<Self, SamplerError> {
        if !(s_r > 0.0 && s_r <= 1.0) {
            return Err(SamplerError::Param(format!("s_R = {s_r} must lie in (0, 1]")));
        }
        if !(t_r_ns > 0.0) || !t_r_ns.is_finite() {
            return Err(SamplerError::Param(format!("t_R = {t_r_ns} must be positive")));
        }
        if initial.iter().any(|&v| v != 1 && v != -1) {
            return Err(SamplerError::Param("initial state entries must be +1 or -1".into()));
        }
        Ok(Self { s_r, t_r_ns, initial })
    }

    /// `s` after `t` of the `2 t_R` schedule.
    pub fn s_at(&self, t_ns: f64) -> f64 {
        let t = t_ns.clamp(0.0, 2.0 * self.t_r_ns);
        let dip = 1.0 - self.s_r;
        if t <= self.t_r_ns {
            1.0 - dip * t / self.t_r_ns
        } else {
            self.s_r + dip * (t - self.t_r_ns) / self.t_r_ns
        }
    }
}

/// Geometric inverse-temperature ramp for classical annealing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaParams {
    pub beta_start: f64,
    pub beta_end: f64,
    pub sweeps: usize,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            beta_start: 0.1,
            beta_end: 1.0,
            sweeps: 1000,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.beta_start > 0.0 && self.beta_end > 0.0) || self.sweeps == 0 {
            return Err(SamplerError::Param("SA needs positive betas and sweeps >= 1".into()));
        }
        Ok(())
    }

    pub fn beta_at(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.beta_end;
        }
        let t = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(t)
    }
}

/// Majority over Trotter replicas, or one replica picked at random.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    #[default]
    Majority,
    RandomSlice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqaParams {
    /// Inverse temperature in units of the schedule energies.
    pub beta: f64,
    pub trotter: usize,
    pub anneal_time_us: f64,
    pub sweeps_per_us: f64,
    pub readout: Readout,
    /// Also propose flipping a spin in every replica at once. Off by
    /// default: these moves stay mobile where a vanishing transverse field
    /// has frozen the replicas, so a shallow reverse anneal would already
    /// forget its initial state.
    pub world_line_moves: bool,
}

impl Default for SqaParams {
    fn default() -> Self {
        Self {
            beta: 1.0 / 3.0,
            trotter: 16,
            anneal_time_us: 1.0,
            sweeps_per_us: DEFAULT_SWEEPS_PER_US,
            readout: Readout::Majority,
            world_line_moves: false,
        }
    }
}

impl SqaParams {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let mut bad = Vec::new();
        if !(self.beta > 0.0) {
            bad.push("beta");
        }
        if self.trotter < 2 {
            bad.push("trotter");
        }
        if !(self.anneal_time_us > 0.0) {
            bad.push("anneal_time_us");
        }
        if !(self.sweeps_per_us > 0.0) {
            bad.push("sweeps_per_us");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SamplerError::Param(format!("invalid SQA fields: {}", bad.join(", "))))
        }
    }

    pub fn sweeps(&self) -> usize {
        time_to_sweeps(self.anneal_time_us, self.sweeps_per_us)
    }
}

/// Nominal time in microseconds to a sweep count, at least one.
pub fn time_to_sweeps(us: f64, per_us: f64) -> usize {
    ((us * per_us).round() as usize).max(1)
}

fn random_spins(n: usize, rng: &mut Rng) -> Vec<i8> {
    (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
}

/// Metropolis sweeps in variable order under a geometric beta ramp from a
/// random state. Returns the final state and its energy.
pub fn simulated_anneal(model: &SparseIsing, params: &SaParams, rng: &mut Rng) -> (Vec<i8>, f64) {
    let n = model.n_vars();
    let mut s = random_spins(n, rng);
    for sweep in 0..params.sweeps {
        let beta = params.beta_at(sweep);
        for i in 0..n {
            let delta = model.flip_delta(&s, i);
            if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                s[i] = -s[i];
            }
        }
    }
    let e = model.energy(&s);
    (s, e)
}

/// Inter-replica coupling `-1/2 ln tanh(beta * Gamma / P)`, infinite when
/// the transverse field vanishes.
pub fn replica_coupling(beta: f64, gamma: f64, trotter: usize) -> f64 {
    let x = beta * gamma / trotter as f64;
    if x <= 0.0 {
        f64::INFINITY
    } else {
        -0.5 * x.tanh().ln()
    }
}

/// Path-integral Monte Carlo state: `P` replicas, replica-major.
struct Replicas<'a> {
    model: &'a SparseIsing,
    n: usize,
    p: usize,
    spins: Vec<i8>,
}

impl Replicas<'_> {
    fn slice(&self, k: usize) -> &[i8] {
        &self.spins[k * self.n..(k + 1) * self.n]
    }

    /// One sweep at schedule point `(a, b)`: `H = -(A/2) sum sx + (B/2) H_p`.
    fn sweep(&mut self, a: f64, b: f64, beta: f64, world_lines: bool, rng: &mut Rng) {
        let (n, p) = (self.n, self.p);
        let w = beta * b / (2.0 * p as f64);
        let jp = replica_coupling(beta, a / 2.0, p);
        if jp.is_finite() {
            for k in 0..p {
                let (up, down) = ((k + p - 1) % p, (k + 1) % p);
                for i in 0..n {
                    let si = self.spins[k * n + i];
                    let field = self.model.local_field(self.slice(k), i);
                    let nb = f64::from(self.spins[up * n + i] + self.spins[down * n + i]);
                    let delta = -2.0 * f64::from(si) * (w * field - jp * nb);
                    if delta <= 0.0 || rng.gen::<f64>() < (-delta).exp() {
                        self.spins[k * n + i] = -si;
                    }
                }
            }
        }
        if world_lines {
            for i in 0..n {
                let mut delta = 0.0;
                for k in 0..p {
                    let si = self.spins[k * n + i];
                    delta += -2.0 * f64::from(si) * self.model.local_field(self.slice(k), i);
                }
                delta *= w;
                if delta <= 0.0 || rng.gen::<f64>() < (-delta).exp() {
                    for k in 0..p {
                        self.spins[k * n + i] = -self.spins[k * n + i];
                    }
                }
            }
        }
    }

    fn read(&self, readout: Readout, rng: &mut Rng) -> Vec<i8> {
        match readout {
            Readout::RandomSlice => {
                let k = rng.gen_range(0..self.p);
                self.slice(k).to_vec()
            }
            Readout::Majority => (0..self.n)
                .map(|i| {
                    let sum: i32 = (0..self.p).map(|k| i32::from(self.spins[k * self.n + i])).sum();
                    match sum.signum() {
                        1 => 1,
                        -1 => -1,
                        _ => {
                            if rng.gen::<bool>() {
                                1
                            } else {
                                -1
                            }
                        }
                    }
                })
                .collect(),
        }
    }
}

/// Forward quantum anneal by path-integral Monte Carlo over `P` Trotter
/// replicas, all starting from one random classical state.
pub fn simulated_quantum_anneal(
    model: &SparseIsing,
    schedule: &AnnealSchedule,
    params: &SqaParams,
    rng: &mut Rng,
) -> Vec<i8> {
    let n = model.n_vars();
    let p = params.trotter;
    let mut reps = Replicas {
        model,
        n,
        p,
        spins: random_spins(n, rng).repeat(p),
    };
    let sweeps = params.sweeps();
    for t in 0..sweeps {
        let s = (t as f64 + 0.5) / sweeps as f64;
        let (a, b) = schedule.at(s);
        reps.sweep(a, b, params.beta, params.world_line_moves, rng);
    }
    reps.read(params.readout, rng)
}

/// Reverse anneal from `rs.initial`. With `s_R = 1` nothing is reversed and
/// the initial state is returned unchanged.
pub fn reverse_anneal(
    model: &SparseIsing,
    schedule: &AnnealSchedule,
    rs: &ReverseSchedule,
    params: &SqaParams,
    rng: &mut Rng,
) -> Result<Vec<i8>, SamplerError> {
    let n = model.n_vars();
    if rs.initial.len() != n {
        return Err(SamplerError::ShapeMismatch {
            expected: n,
            got: rs.initial.len(),
        });
    }
    if rs.s_r >= 1.0 {
        return Ok(rs.initial.clone());
    }
    let p = params.trotter;
    let mut reps = Replicas {
        model,
        n,
        p,
        spins: rs.initial.repeat(p),
    };
    let leg = time_to_sweeps(rs.t_r_ns / 1000.0, params.sweeps_per_us);
    let total = 2 * leg;
    for t in 0..total {
        let time = (t as f64 + 0.5) / total as f64 * 2.0 * rs.t_r_ns;
        let (a, b) = schedule.at(rs.s_at(time));
        reps.sweep(a, b, params.beta, params.world_line_moves, rng);
    }
    Ok(reps.read(params.readout, rng))
}

/// One anneal per call; implementations must be deterministic in `rng`.
pub trait Annealer: Sync {
    fn id(&self) -> String;

    fn anneal(&self, model: &SparseIsing, rng: &mut Rng) -> Result<Vec<i8>, SamplerError>;

    /// Nominal anneal time reported with the samples.
    fn anneal_time_us(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedAnnealer(pub SaParams);

impl Annealer for SimulatedAnnealer {
    fn id(&self) -> String {
        "sa".into()
    }

    fn anneal(&self, model: &SparseIsing, rng: &mut Rng) -> Result<Vec<i8>, SamplerError> {
        self.0.validate()?;
        Ok(simulated_anneal(model, &self.0, rng).0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuantumAnnealer {
    pub schedule: AnnealSchedule,
    pub params: SqaParams,
}

impl Annealer for QuantumAnnealer {
    fn id(&self) -> String {
        "sqa".into()
    }

    fn anneal(&self, model: &SparseIsing, rng: &mut Rng) -> Result<Vec<i8>, SamplerError> {
        self.params.validate()?;
        Ok(simulated_quantum_anneal(model, &self.schedule, &self.params, rng))
    }

    fn anneal_time_us(&self) -> Option<f64> {
        Some(self.params.anneal_time_us)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseAnnealer {
    pub schedule: AnnealSchedule,
    pub reverse: ReverseSchedule,
    pub params: SqaParams,
}

impl Annealer for ReverseAnnealer {
    fn id(&self) -> String {
        "reverse".into()
    }

    fn anneal(&self, model: &SparseIsing, rng: &mut Rng) -> Result<Vec<i8>, SamplerError> {
        self.params.validate()?;
        reverse_anneal(model, &self.schedule, &self.reverse, &self.params, rng)
    }

    fn anneal_time_us(&self) -> Option<f64> {
        Some(2.0 * self.reverse.t_r_ns / 1000.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub state: Vec<i8>,
    pub energy: f64,
    pub occurrences: u64,
    /// Mean fraction of broken chains over the reads of this state.
    pub chain_break_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub anneal_time_us: Option<f64>,
    pub chain_strength: Option<f64>,
    pub n_smpl: u64,
    pub n_anneals: u64,
    pub n_copies: usize,
    pub beta_eff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub backend: String,
    pub params: SampleParams,
    /// Sorted by energy, then state.
    pub records: Vec<SampleRecord>,
}

impl SampleSet {
    pub fn total_occurrences(&self) -> u64 {
        self.records.iter().map(|r| r.occurrences).sum()
    }

    pub fn states(&self) -> impl Iterator<Item = (&[i8], u64)> + '_ {
        self.records.iter().map(|r| (r.state.as_slice(), r.occurrences))
    }

    pub fn mean_energy(&self) -> f64 {
        let total = self.total_occurrences() as f64;
        self.records
            .iter()
            .map(|r| r.energy * r.occurrences as f64)
            .sum::<f64>()
            / total
    }

    pub fn chain_break_fraction(&self) -> f64 {
        let total = self.total_occurrences() as f64;
        self.records
            .iter()
            .map(|r| r.chain_break_fraction * r.occurrences as f64)
            .sum::<f64>()
            / total
    }

    pub fn stats(&self, shape: &ModelShape) -> Result<StatsSummary, SamplerError> {
        Ok(stats_of_samples(self.states(), shape)?)
    }

    /// One JSON object per record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,occurrences,chain_break_fraction,state\n");
        for r in &self.records {
            let bits: String = r.state.iter().map(|&s| if s > 0 { '1' } else { '0' }).collect();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.energy, r.occurrences, r.chain_break_fraction, bits
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sample sets serialize")
    }
}

/// Effective inverse temperature from a least-squares fit of
/// `ln(occurrences)` against energy. `None` with fewer than two distinct
/// energies.
pub fn fit_beta_eff(records: &[SampleRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.energy, (r.occurrences as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx <= 1e-12 * (1.0 + mx * mx) {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(-sxy / sxx)
}

struct Run<'a> {
    /// Model handed to the annealer.
    annealed: &'a IsingModel,
    /// Model of one logical copy, for energies.
    logical: &'a IsingModel,
    chains: Option<&'a [Vec<usize>]>,
    policy: UnembedPolicy,
    copies: usize,
    chain_strength: Option<f64>,
}

impl Run<'_> {
    fn execute<A: Annealer + ?Sized>(
        &self,
        annealer: &A,
        n_anneals: usize,
        seed: u64,
    ) -> Result<SampleSet, SamplerError> {
        if n_anneals == 0 {
            return Err(SamplerError::Param("n_smpl must be >= 1".into()));
        }
        let sparse = SparseIsing::new(self.annealed);
        let per = self.logical.n_vars;
        let reads: Vec<Vec<(Vec<i8>, f64)>> = (0..n_anneals)
            .into_par_iter()
            .map(|k| {
                let mut rng = derived_rng(seed, k as u64);
                let raw = annealer.anneal(&sparse, &mut rng)?;
                let (spins, broken) = match self.chains {
                    Some(chains) => unembed(&raw, chains, self.policy, &mut rng)?,
                    None => {
                        let len = raw.len();
                        (raw, vec![false; len])
                    }
                };
                Ok((0..self.copies)
                    .map(|c| {
                        let r = c * per..(c + 1) * per;
                        let frac = if self.chains.is_some() {
                            broken[r.clone()].iter().filter(|&&b| b).count() as f64 / per.max(1) as f64
                        } else {
                            0.0
                        };
                        (spins[r].to_vec(), frac)
                    })
                    .collect())
            })
            .collect::<Result<_, SamplerError>>()?;

        let mut agg: BTreeMap<Vec<i8>, (u64, f64)> = BTreeMap::new();
        for (state, frac) in reads.into_iter().flatten() {
            let e = agg.entry(state).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += frac;
        }
        let mut records: Vec<SampleRecord> = agg
            .into_iter()
            .map(|(state, (occ, frac))| SampleRecord {
                energy: self.logical.energy(&state).expect("state has model length"),
                state,
                occurrences: occ,
                chain_break_fraction: frac / occ as f64,
            })
            .collect();
        records.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.state.cmp(&b.state)));
        let beta_eff = fit_beta_eff(&records);
        Ok(SampleSet {
            backend: annealer.id(),
            params: SampleParams {
                anneal_time_us: annealer.anneal_time_us(),
                chain_strength: self.chain_strength,
                n_smpl: (n_anneals * self.copies) as u64,
                n_anneals: n_anneals as u64,
                n_copies: self.copies,
                beta_eff,
            },
            records,
        })
    }
}

/// `n_smpl` independent anneals of the logical model; anneal `k` uses
/// sub-stream `k` of `seed`.
pub fn sample_many<A: Annealer + ?Sized>(
    annealer: &A,
    model: &IsingModel,
    n_smpl: usize,
    seed: u64,
) -> Result<SampleSet, SamplerError> {
    Run {
        annealed: model,
        logical: model,
        chains: None,
        policy: UnembedPolicy::default(),
        copies: 1,
        chain_strength: None,
    }
    .execute(annealer, n_smpl, seed)
}

/// Anneals the physical problem and unembeds each read.
pub fn sample_embedded<A: Annealer + ?Sized>(
    annealer: &A,
    logical: &IsingModel,
    physical: &PhysicalIsing,
    n_smpl: usize,
    policy: UnembedPolicy,
    seed: u64,
) -> Result<SampleSet, SamplerError> {
    if physical.local_chains.len() != logical.n_vars {
        return Err(SamplerError::ShapeMismatch {
            expected: logical.n_vars,
            got: physical.local_chains.len(),
        });
    }
    Run {
        annealed: &physical.model,
        logical,
        chains: Some(&physical.local_chains),
        policy,
        copies: 1,
        chain_strength: Some(physical.chain_strength),
    }
    .execute(annealer, n_smpl, seed)
}

/// Cluster sampling: every anneal of `n_copies` disjoint copies of `logical`
/// yields `n_copies` samples. `physical`, if given, must embed the
/// replicated model (see `embed::replicate_ising`).
pub fn sample_cluster<A: Annealer + ?Sized>(
    annealer: &A,
    logical: &IsingModel,
    replicated: &IsingModel,
    n_copies: usize,
    physical: Option<&PhysicalIsing>,
    n_anneals: usize,
    policy: UnembedPolicy,
    seed: u64,
) -> Result<SampleSet, SamplerError> {
    let expected = logical.n_vars * n_copies;
    if n_copies == 0 || replicated.n_vars != expected {
        return Err(SamplerError::ShapeMismatch {
            expected,
            got: replicated.n_vars,
        });
    }
    if let Some(p) = physical {
        if p.local_chains.len() != expected {
            return Err(SamplerError::ShapeMismatch {
                expected,
                got: p.local_chains.len(),
            });
        }
    }
    Run {
        annealed: physical.map_or(replicated, |p| &p.model),
        logical,
        chains: physical.map(|p| p.local_chains.as_slice()),
        policy,
        copies: n_copies,
        chain_strength: physical.map(|p| p.chain_strength),
    }
    .execute(annealer, n_anneals, seed)
}

/// Logical state spread over the local qubit indices of a physical problem,
/// e.g. to start a reverse anneal of an embedded model.
pub fn embed_state(state: &[i8], physical: &PhysicalIsing) -> Result<Vec<i8>, SamplerError> {
    if state.len() != physical.local_chains.len() {
        return Err(SamplerError::ShapeMismatch {
            expected: physical.local_chains.len(),
            got: state.len(),
        });
    }
    let mut out = vec![1i8; physical.qubits.len()];
    for (chain, &s) in physical.local_chains.iter().zip(state) {
        for &q in chain {
            out[q] = s;
        }
    }
    Ok(out)
}
