//! Agreement between sampled and empirical statistics, distances to a
//! template state, and parameter sweeps over the sampling pipeline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{
    chain_metrics, embed_ising, find_embedding, ChainMetrics, CouplingPlacement, EmbedConfig, Embedding, UnembedPolicy,
};
use crate::ingest::IncidenceMatrix;
use crate::model::{build_ising, Boundary, CartesianParams, IsingModel, ModelShape, TemplateBias};
use crate::rng::derive_seed;
use crate::sampler::{
    embed_state, sample_embedded, sample_many, time_to_sweeps, AnnealSchedule, Annealer, QuantumAnnealer,
    ReverseAnnealer, ReverseSchedule, SaParams, SampleSet, SimulatedAnnealer, SqaParams, DEFAULT_SWEEPS_PER_US,
};
use crate::stats::{summarize, OpenNormalization, StatGroup, StatsSummary};
use crate::topology::{
    build_hardware, cartesian_product, marker_intersection_graph, nucleosome_intersection_graph, objective_graph,
    Blocklist, TopologyKind,
};

pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("statistics have different layouts")]
    LayoutMismatch,
    #[error("empirical statistics are all equal; R^2 is undefined")]
    Degenerate,
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("states differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("entries must be +1 or -1")]
    InvalidSpin,
    #[error("state of length {len} does not fit shape [{m},{n}]")]
    ShapeMismatch { len: usize, m: usize, n: usize },
    #[error("invalid grid '{0}'")]
    Grid(String),
    #[error("unknown sweep axis '{0}'")]
    Axis(String),
    #[error("{0}")]
    Pipeline(String),
}

fn log_floor(v: &[f64], eps: f64) -> Vec<f64> {
    v.iter().map(|&x| x.max(eps).ln()).collect()
}

fn r2_of(emp: &[f64], smpl: &[f64]) -> Result<f64, EvalError> {
    let mean = emp.iter().sum::<f64>() / emp.len() as f64;
    let total: f64 = emp.iter().map(|e| (e - mean).powi(2)).sum();
    if total <= 0.0 {
        return Err(EvalError::Degenerate);
    }
    let resid: f64 = emp.iter().zip(smpl).map(|(e, s)| (e - s).powi(2)).sum();
    Ok(1.0 - resid / total)
}

/// Coefficient of determination of `ln(max(sampled, eps))` against
/// `ln(max(empirical, eps))` over every statistic.
pub fn r2_log(empirical: &StatsSummary, sampled: &StatsSummary, epsilon: f64) -> Result<f64, EvalError> {
    if !(epsilon > 0.0) {
        return Err(EvalError::Epsilon(epsilon));
    }
    if !empirical.same_layout(sampled) {
        return Err(EvalError::LayoutMismatch);
    }
    r2_of(
        &log_floor(&empirical.flat_values(), epsilon),
        &log_floor(&sampled.flat_values(), epsilon),
    )
}

/// `r2_log` restricted to each statistic group; `None` where a group is
/// degenerate or empty.
pub fn r2_log_groups(
    empirical: &StatsSummary,
    sampled: &StatsSummary,
    epsilon: f64,
) -> Result<BTreeMap<StatGroup, Option<f64>>, EvalError> {
    if !(epsilon > 0.0) {
        return Err(EvalError::Epsilon(epsilon));
    }
    if !empirical.same_layout(sampled) {
        return Err(EvalError::LayoutMismatch);
    }
    let (e, s) = (empirical.flatten(), sampled.flatten());
    Ok(StatGroup::ALL
        .iter()
        .map(|&g| {
            let pick = |v: &[(StatGroup, f64)]| v.iter().filter(|x| x.0 == g).map(|x| x.1).collect::<Vec<_>>();
            let (ev, sv) = (pick(&e), pick(&s));
            let r = if ev.is_empty() {
                None
            } else {
                r2_of(&log_floor(&ev, epsilon), &log_floor(&sv, epsilon)).ok()
            };
            (g, r)
        })
        .collect())
}

/// Number of positions where the spins differ.
pub fn hamming(a: &[i8], x: &[i8]) -> Result<usize, EvalError> {
    if a.len() != x.len() {
        return Err(EvalError::LengthMismatch(a.len(), x.len()));
    }
    if a.iter().chain(x).any(|&v| v != 1 && v != -1) {
        return Err(EvalError::InvalidSpin);
    }
    Ok(a.iter().zip(x).filter(|(p, q)| p != q).count())
}

/// Hamming distance over `M_A * N_A`.
pub fn rel_hamming(a: &[i8], x: &[i8], m: usize, n: usize) -> Result<f64, EvalError> {
    if a.len() != m * n || m * n == 0 {
        return Err(EvalError::ShapeMismatch { len: a.len(), m, n });
    }
    Ok(hamming(a, x)? as f64 / (m * n) as f64)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Occurrence-weighted mean, min and max of `d_A` over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn distance_summary(set: &SampleSet, template: &[i8], shape: &ModelShape) -> Result<DistanceSummary, EvalError> {
    let (mut sum, mut min, mut max, mut w) = (0.0, f64::INFINITY, f64::NEG_INFINITY, 0u64);
    for (state, occ) in set.states() {
        let d = rel_hamming(template, state, shape.markers, shape.nucleosomes)?;
        sum += d * occ as f64;
        w += occ;
        min = min.min(d);
        max = max.max(d);
    }
    if w == 0 {
        return Err(EvalError::Pipeline("empty sample set".into()));
    }
    Ok(DistanceSummary {
        mean: sum / w as f64,
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "TA")]
    AnnealTime,
    #[serde(rename = "JC")]
    ChainStrength,
    #[serde(rename = "delta")]
    Threshold,
    #[serde(rename = "boundary")]
    Boundary,
    #[serde(rename = "f")]
    BiasStrength,
    #[serde(rename = "sR")]
    ReverseDepth,
    #[serde(rename = "tR")]
    ReverseTime,
}

impl Axis {
    pub const ALL: [Axis; 7] = [
        Axis::AnnealTime,
        Axis::ChainStrength,
        Axis::Threshold,
        Axis::Boundary,
        Axis::BiasStrength,
        Axis::ReverseDepth,
        Axis::ReverseTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::AnnealTime => "TA",
            Axis::ChainStrength => "JC",
            Axis::Threshold => "delta",
            Axis::Boundary => "boundary",
            Axis::BiasStrength => "f",
            Axis::ReverseDepth => "sR",
            Axis::ReverseTime => "tR",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Axis {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase();
        let axis = match key.as_str() {
            "ta" | "t_a" | "anneal_time" => Axis::AnnealTime,
            "jc" | "j_c" | "chain_strength" => Axis::ChainStrength,
            "delta" | "threshold" => Axis::Threshold,
            "boundary" => Axis::Boundary,
            "f" | "bias" | "bias_strength" => Axis::BiasStrength,
            "sr" | "s_r" => Axis::ReverseDepth,
            "tr" | "t_r" => Axis::ReverseTime,
            _ => return Err(EvalError::Axis(s.to_string())),
        };
        Ok(axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Boundary(Boundary),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Number(v) => write!(f, "{v}"),
            AxisValue::Boundary(b) => write!(f, "{b}"),
        }
    }
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma list. The
/// boundary axis takes `open` / `periodic`.
pub fn parse_grid(axis: Axis, text: &str) -> Result<Vec<AxisValue>, EvalError> {
    let bad = || EvalError::Grid(text.to_string());
    let text = text.trim();
    if text.is_empty() {
        return Err(bad());
    }
    if axis == Axis::Boundary {
        return text
            .split(',')
            .map(|t| t.trim().parse::<Boundary>().map(AxisValue::Boundary).map_err(|_| bad()))
            .collect();
    }
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, k] => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let k: usize = k.trim().parse().map_err(|_| bad())?;
            match k {
                0 => return Err(bad()),
                1 => vec![a],
                _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
            }
        }
        [_] => text
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad()),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values.into_iter().map(AxisValue::Number).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Sa(SaParams),
    Sqa(SqaParams),
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Sa(SaParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec {
    pub kind: TopologyKind,
    pub m: usize,
    pub chain_strength: f64,
    pub placement: CouplingPlacement,
    pub policy: UnembedPolicy,
    pub embed: EmbedConfig,
    /// Fixed embedding; searched for when absent.
    #[serde(default)]
    pub embedding: Option<Embedding>,
    #[serde(default)]
    pub blocklist: Option<Blocklist>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverseSpec {
    pub s_r: f64,
    pub t_r_ns: f64,
}

/// Everything one sample-and-evaluate run needs.
#[derive(Debug, Clone)]
pub struct PipelineSpec {
    pub shape: ModelShape,
    pub params: CartesianParams,
    pub empirical: Option<StatsSummary>,
    /// Source of the empirical statistics, needed to re-derive them when the
    /// boundary changes.
    pub incidence: Option<IncidenceMatrix>,
    pub normalization: OpenNormalization,
    /// Template state in variable order.
    pub template: Option<Vec<i8>>,
    pub bias_strength: f64,
    pub threshold: f64,
    pub backend: BackendSpec,
    pub schedule: AnnealSchedule,
    pub reverse: Option<ReverseSpec>,
    pub hardware: Option<HardwareSpec>,
    pub n_smpl: usize,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub value: AxisValue,
    pub r2: Option<f64>,
    pub r2_mu: Option<f64>,
    pub r2_rho_intra: Option<f64>,
    pub r2_rho_inter: Option<f64>,
    pub mean_d_a: Option<f64>,
    pub min_d_a: Option<f64>,
    pub max_d_a: Option<f64>,
    pub n_edges: Option<usize>,
    pub mean_chain_length: Option<f64>,
    pub chain_break_fraction: Option<f64>,
    pub beta_eff: Option<f64>,
    pub error: Option<String>,
}

impl PointResult {
    fn failed(value: AxisValue, error: String) -> Self {
        Self {
            value,
            r2: None,
            r2_mu: None,
            r2_rho_intra: None,
            r2_rho_inter: None,
            mean_d_a: None,
            min_d_a: None,
            max_d_a: None,
            n_edges: None,
            mean_chain_length: None,
            chain_break_fraction: None,
            beta_eff: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub axis: Axis,
    pub rows: Vec<PointResult>,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, ToString::to_string)
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "axis,value,r2,r2_mu,r2_rho_intra,r2_rho_inter,mean_d_a,min_d_a,max_d_a,n_edges,mean_chain_length,chain_break_fraction,beta_eff,error\n",
        );
        for r in &self.rows {
            let err = r.error.as_deref().unwrap_or("").replace(['"', '\n'], "'");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"",
                self.axis,
                r.value,
                opt(&r.r2),
                opt(&r.r2_mu),
                opt(&r.r2_rho_intra),
                opt(&r.r2_rho_inter),
                opt(&r.mean_d_a),
                opt(&r.min_d_a),
                opt(&r.max_d_a),
                opt(&r.n_edges),
                opt(&r.mean_chain_length),
                opt(&r.chain_break_fraction),
                opt(&r.beta_eff),
                err
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Numeric axis values of rows that produced `pick`, paired with it.
    pub fn series(&self, pick: impl Fn(&PointResult) -> Option<f64>) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter_map(|r| match (r.value, pick(r)) {
                (AxisValue::Number(x), Some(y)) => Some((x, y)),
                _ => None,
            })
            .unzip()
    }
}

fn with_value(spec: &PipelineSpec, axis: Axis, value: AxisValue) -> Result<PipelineSpec, String> {
    let mut s = spec.clone();
    let num = match value {
        AxisValue::Number(v) => Some(v),
        AxisValue::Boundary(_) => None,
    };
    let need = || format!("axis {axis} needs a numeric value");
    match axis {
        Axis::AnnealTime => {
            let t = num.ok_or_else(need)?;
            if !(t > 0.0) {
                return Err(format!("anneal time {t} must be positive"));
            }
            match &mut s.backend {
                BackendSpec::Sa(p) => p.sweeps = time_to_sweeps(t, DEFAULT_SWEEPS_PER_US),
                BackendSpec::Sqa(p) => p.anneal_time_us = t,
            }
        }
        Axis::ChainStrength => {
            let hw = s.hardware.as_mut().ok_or("chain strength needs a hardware target")?;
            hw.chain_strength = num.ok_or_else(need)?;
        }
        Axis::Threshold => s.threshold = num.ok_or_else(need)?,
        Axis::BiasStrength => s.bias_strength = num.ok_or_else(need)?,
        Axis::ReverseDepth => {
            let r = s.reverse.get_or_insert(ReverseSpec {
                s_r: 1.0,
                t_r_ns: 1000.0,
            });
            r.s_r = num.ok_or_else(need)?;
        }
        Axis::ReverseTime => {
            let r = s.reverse.get_or_insert(ReverseSpec {
                s_r: 0.5,
                t_r_ns: 1000.0,
            });
            r.t_r_ns = num.ok_or_else(need)?;
        }
        Axis::Boundary => {
            let AxisValue::Boundary(b) = value else {
                return Err("boundary axis takes open or periodic".into());
            };
            if b != s.shape.boundary {
                let x = s
                    .incidence
                    .as_ref()
                    .ok_or("changing the boundary needs the incidence matrix")?;
                s.shape = s.shape.with_boundary(b);
                s.empirical = Some(summarize(x, s.shape.max_distance, b, s.normalization).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(s)
}

/// Samples of one pipeline configuration with what produced them.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub set: SampleSet,
    /// The model that was sampled, after threshold and bias.
    pub model: IsingModel,
    pub n_edges: usize,
    pub embedding: Option<Embedding>,
    pub chain_metrics: Option<ChainMetrics>,
}

/// Builds, optionally embeds, and samples the model. Sampling uses
/// sub-stream 0 of the master seed and embedding sub-stream 1, so runs
/// that differ in one setting are paired.
pub fn sample_pipeline(spec: &PipelineSpec) -> Result<PipelineRun, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let shape = spec.shape;
    let model = build_ising(&shape, &spec.params)
        .and_then(|m| m.apply_threshold(spec.threshold))
        .map_err(|e| err(&e))?;
    let n_edges = model.j.values().filter(|&&w| w != 0.0).count();
    let model = match (&spec.template, spec.bias_strength) {
        (_, 0.0) => model,
        (Some(t), f) => model
            .apply_bias(&TemplateBias::new(t.clone(), f).map_err(|e| err(&e))?)
            .map_err(|e| err(&e))?,
        (None, _) => return Err("bias strength needs a template".into()),
    };
    let sqa = match &spec.backend {
        BackendSpec::Sqa(p) => p.clone(),
        BackendSpec::Sa(_) => SqaParams::default(),
    };
    let sample_seed = derive_seed(spec.seed, 0);
    let Some(hw) = &spec.hardware else {
        let annealer = make_annealer(spec, &sqa, spec.template.clone())?;
        let set = sample_many(annealer.as_ref(), &model, spec.n_smpl, sample_seed).map_err(|e| err(&e))?;
        return Ok(PipelineRun {
            set,
            model,
            n_edges,
            embedding: None,
            chain_metrics: None,
        });
    };
    let mut target = build_hardware(hw.kind, hw.m).map_err(|e| err(&e))?;
    if let Some(b) = &hw.blocklist {
        target = target.with_blocklist(b).map_err(|e| err(&e))?;
    }
    let source = objective_graph(&model);
    let embedding = match &hw.embedding {
        Some(e) => e.clone(),
        None => {
            let cfg = EmbedConfig {
                seed: derive_seed(spec.seed, 1),
                ..hw.embed.clone()
            };
            find_embedding(&source, &target, &cfg).map_err(|e| err(&e))?.embedding
        }
    };
    let metrics = chain_metrics(&embedding, &source, &target, true).map_err(|e| err(&e))?;
    let phys = embed_ising(&model, &embedding, &target, hw.chain_strength, hw.placement).map_err(|e| err(&e))?;
    let initial = match &spec.template {
        Some(t) => Some(embed_state(t, &phys).map_err(|e| err(&e))?),
        None => None,
    };
    let annealer = make_annealer(spec, &sqa, initial)?;
    let set =
        sample_embedded(annealer.as_ref(), &model, &phys, spec.n_smpl, hw.policy, sample_seed).map_err(|e| err(&e))?;
    Ok(PipelineRun {
        set,
        model,
        n_edges,
        embedding: Some(embedding),
        chain_metrics: Some(metrics),
    })
}

/// One full sample-and-evaluate run.
pub fn run_pipeline(spec: &PipelineSpec, value: AxisValue) -> Result<PointResult, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let run = sample_pipeline(spec)?;
    let sampled = run.set.stats(&spec.shape).map_err(|e| err(&e))?;
    let (r2, groups) = match &spec.empirical {
        Some(emp) => (
            r2_log(emp, &sampled, spec.epsilon).ok(),
            r2_log_groups(emp, &sampled, spec.epsilon).map_err(|e| err(&e))?,
        ),
        None => (None, StatGroup::ALL.iter().map(|&g| (g, None)).collect()),
    };
    let dist = match &spec.template {
        Some(t) => Some(distance_summary(&run.set, t, &spec.shape).map_err(|e| err(&e))?),
        None => None,
    };
    Ok(PointResult {
        value,
        r2,
        r2_mu: groups[&StatGroup::Mu],
        r2_rho_intra: groups[&StatGroup::RhoIntra],
        r2_rho_inter: groups[&StatGroup::RhoInter],
        mean_d_a: dist.map(|d| d.mean),
        min_d_a: dist.map(|d| d.min),
        max_d_a: dist.map(|d| d.max),
        n_edges: Some(run.n_edges),
        mean_chain_length: run.chain_metrics.as_ref().map(|m| m.mean_length),
        chain_break_fraction: spec.hardware.as_ref().map(|_| run.set.chain_break_fraction()),
        beta_eff: run.set.params.beta_eff,
        error: None,
    })
}

fn make_annealer(spec: &PipelineSpec, sqa: &SqaParams, initial: Option<Vec<i8>>) -> Result<Box<dyn Annealer>, String> {
    if let Some(r) = spec.reverse {
        let initial = initial.ok_or("reverse annealing needs a template state")?;
        let reverse = ReverseSchedule::new(r.s_r, r.t_r_ns, initial).map_err(|e| e.to_string())?;
        return Ok(Box::new(ReverseAnnealer {
            schedule: spec.schedule.clone(),
            reverse,
            params: sqa.clone(),
        }));
    }
    Ok(match &spec.backend {
        BackendSpec::Sa(p) => Box::new(SimulatedAnnealer(*p)),
        BackendSpec::Sqa(p) => Box::new(QuantumAnnealer {
            schedule: spec.schedule.clone(),
            params: p.clone(),
        }),
    })
}

/// One pipeline run per grid value. Failed points are recorded with their
/// error and the sweep continues; rows follow grid order.
pub fn sweep(axis: Axis, grid: &[AxisValue], spec: &PipelineSpec) -> Result<EvalReport, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::Grid(String::new()));
    }
    let rows = grid
        .par_iter()
        .map(|&v| {
            with_value(spec, axis, v)
                .and_then(|s| run_pipeline(&s, v))
                .unwrap_or_else(|e| PointResult::failed(v, e))
        })
        .collect();
    Ok(EvalReport { axis, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTrial {
    pub shape: String,
    pub topology: String,
    pub seed: u64,
    pub mean_length: Option<f64>,
    pub max_length: Option<usize>,
    pub qubits: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub shape: String,
    pub topology: String,
    pub successes: usize,
    pub trials: usize,
    pub mean_length: Option<f64>,
    pub mean_length_sd: Option<f64>,
    pub max_length: Option<f64>,
    pub max_length_sd: Option<f64>,
    pub qubits: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub trials: Vec<ScalingTrial>,
    pub rows: Vec<ScalingRow>,
}

fn mean_sd(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    } else {
        None
    };
    (Some(m), sd)
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "shape,topology,successes,trials,mean_length,mean_length_sd,max_length,max_length_sd,qubits\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "\"{}\",{},{},{},{},{},{},{},{}",
                r.shape,
                r.topology,
                r.successes,
                r.trials,
                opt(&r.mean_length),
                opt(&r.mean_length_sd),
                opt(&r.max_length),
                opt(&r.max_length_sd),
                opt(&r.qubits)
            );
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from("shape,topology,seed,mean_length,max_length,qubits,error\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "\"{}\",{},{},{},{},{},\"{}\"",
                t.shape,
                t.topology,
                t.seed,
                opt(&t.mean_length),
                opt(&t.max_length),
                opt(&t.qubits),
                t.error.as_deref().unwrap_or("")
            );
        }
        out
    }
}

/// Embeds the objective-graph structure of every shape into every target
/// for every seed. Failures are kept as trials without lengths.
pub fn scaling_sweep(
    shapes: &[ModelShape],
    targets: &[(TopologyKind, usize)],
    seeds: &[u64],
    base: &EmbedConfig,
) -> ScalingTable {
    let jobs: Vec<(ModelShape, (TopologyKind, usize), u64)> = shapes
        .iter()
        .flat_map(|&s| {
            targets
                .iter()
                .flat_map(move |&t| seeds.iter().map(move |&seed| (s, t, seed)))
        })
        .collect();
    let trials: Vec<ScalingTrial> = jobs
        .par_iter()
        .map(|&(shape, (kind, m), seed)| {
            let mut trial = ScalingTrial {
                shape: shape.to_string(),
                topology: format!("{kind}-{m}"),
                seed,
                mean_length: None,
                max_length: None,
                qubits: None,
                error: None,
            };
            let run = || -> Result<(f64, usize, usize), String> {
                let source = shape_graph(&shape).map_err(|e| e.to_string())?;
                let target = build_hardware(kind, m).map_err(|e| e.to_string())?;
                let cfg = EmbedConfig {
                    seed,
                    source_id: shape.to_string(),
                    ..base.clone()
                };
                let found = find_embedding(&source, &target, &cfg).map_err(|e| e.to_string())?;
                let cm = chain_metrics(&found.embedding, &source, &target, true).map_err(|e| e.to_string())?;
                Ok((cm.mean_length, cm.max_length, cm.total_qubits))
            };
            match run() {
                Ok((mean, max, q)) => {
                    trial.mean_length = Some(mean);
                    trial.max_length = Some(max);
                    trial.qubits = Some(q);
                }
                Err(e) => trial.error = Some(e),
            }
            trial
        })
        .collect();

    let mut rows = Vec::new();
    for shape in shapes {
        for &(kind, m) in targets {
            let (sl, tl) = (shape.to_string(), format!("{kind}-{m}"));
            let ok: Vec<&ScalingTrial> = trials
                .iter()
                .filter(|t| t.shape == sl && t.topology == tl && t.error.is_none())
                .collect();
            let means: Vec<f64> = ok.iter().filter_map(|t| t.mean_length).collect();
            let maxes: Vec<f64> = ok.iter().filter_map(|t| t.max_length.map(|v| v as f64)).collect();
            let qubits: Vec<f64> = ok.iter().filter_map(|t| t.qubits.map(|v| v as f64)).collect();
            let (mean_length, mean_length_sd) = mean_sd(&means);
            let (max_length, max_length_sd) = mean_sd(&maxes);
            rows.push(ScalingRow {
                shape: sl,
                topology: tl,
                successes: ok.len(),
                trials: seeds.len(),
                mean_length,
                mean_length_sd,
                max_length,
                max_length_sd,
                qubits: mean_sd(&qubits).0,
            });
        }
    }
    ScalingTable { trials, rows }
}

/// Objective-graph structure of a shape: complete marker graph times the
/// nucleosome graph, in variable order.
pub fn shape_graph(shape: &ModelShape) -> Result<crate::topology::Graph, crate::topology::TopologyError> {
    let markers = marker_intersection_graph(shape.markers)?;
    let nucl = nucleosome_intersection_graph(shape.nucleosomes, shape.max_distance, shape.boundary)?;
    Ok(cartesian_product(&markers, &nucl))
}

fn svg_frame(title: &str, xlabel: &str, ylabel: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"360\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"420\" height=\"360\" fill=\"white\"/>\n\
         <text x=\"210\" y=\"20\" text-anchor=\"middle\">{title}</text>\n\
         <rect x=\"60\" y=\"30\" width=\"340\" height=\"280\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"230\" y=\"345\" text-anchor=\"middle\">{xlabel}</text>\n\
         <text x=\"15\" y=\"170\" text-anchor=\"middle\" transform=\"rotate(-90 15 170)\">{ylabel}</text>\n"
    )
}

struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn of(v: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in v {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Self { lo, hi }
    }

    fn x(&self, v: f64) -> f64 {
        60.0 + 340.0 * (v - self.lo) / (self.hi - self.lo)
    }

    fn y(&self, v: f64) -> f64 {
        310.0 - 280.0 * (v - self.lo) / (self.hi - self.lo)
    }
}

fn tick_labels(out: &mut String, xs: &Scale, ys: &Scale) {
    let _ = writeln!(
        out,
        "<text x=\"60\" y=\"325\" text-anchor=\"middle\">{:.3}</text>",
        xs.lo
    );
    let _ = writeln!(
        out,
        "<text x=\"400\" y=\"325\" text-anchor=\"middle\">{:.3}</text>",
        xs.hi
    );
    let _ = writeln!(out, "<text x=\"55\" y=\"310\" text-anchor=\"end\">{:.3}</text>", ys.lo);
    let _ = writeln!(out, "<text x=\"55\" y=\"40\" text-anchor=\"end\">{:.3}</text>", ys.hi);
}

/// Log-log scatter of sampled against empirical statistics, one colour per
/// group, with the diagonal.
pub fn scatter_svg(empirical: &StatsSummary, sampled: &StatsSummary, epsilon: f64) -> String {
    let e = empirical.flatten();
    let s = sampled.flatten();
    let pts: Vec<(StatGroup, f64, f64)> = e
        .iter()
        .zip(&s)
        .map(|(&(g, a), &(_, b))| (g, a.max(epsilon).ln(), b.max(epsilon).ln()))
        .collect();
    let sc = Scale::of(pts.iter().flat_map(|p| [p.1, p.2]));
    let mut out = svg_frame("sampled vs empirical", "ln empirical", "ln sampled");
    tick_labels(&mut out, &sc, &sc);
    let _ = writeln!(
        out,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"4\"/>",
        sc.x(sc.lo),
        sc.y(sc.lo),
        sc.x(sc.hi),
        sc.y(sc.hi)
    );
    for (g, a, b) in pts {
        let colour = match g {
            StatGroup::Mu => "#1f77b4",
            StatGroup::RhoIntra => "#ff7f0e",
            StatGroup::RhoInter => "#2ca02c",
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{colour}\"/>",
            sc.x(a),
            sc.y(b)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of R^2 against the swept value (numeric axes only).
pub fn sweep_svg(report: &EvalReport) -> String {
    let (x, y) = report.series(|r| r.r2);
    let xs = Scale::of(x.iter().copied());
    let ys = Scale::of(y.iter().copied());
    let mut out = svg_frame(&format!("R^2 over {}", report.axis), report.axis.name(), "R^2");
    tick_labels(&mut out, &xs, &ys);
    let path: Vec<String> = x
        .iter()
        .zip(&y)
        .map(|(&a, &b)| format!("{:.1},{:.1}", xs.x(a), ys.y(b)))
        .collect();
    if !path.is_empty() {
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\"/>",
            path.join(" ")
        );
    }
    for (&a, &b) in x.iter().zip(&y) {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#1f77b4\"/>",
            xs.x(a),
            ys.y(b)
        );
    }
    out.push_str("</svg>\n");
    out
}
