//! Pipeline configuration: a TOML file, `--set` overrides and flags, in
//! increasing precedence, over built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chromanneal::embed::{CouplingPlacement, UnembedPolicy, DEFAULT_MAX_CHAIN_WARNING};
use chromanneal::ingest::{Activation, Aggregation, DEFAULT_BIN_SIZE};
use chromanneal::model::Boundary;
use chromanneal::sampler::{Readout, DEFAULT_SWEEPS_PER_US};
use chromanneal::stats::OpenNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Sa,
    Sqa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: Format,
    pub data: DataSection,
    pub model: ModelSection,
    pub learn: LearnSection,
    pub sampler: SamplerSection,
    pub hardware: HardwareSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub replicate: ReplicateSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("out"),
            format: Format::Json,
            data: DataSection::default(),
            model: ModelSection::default(),
            learn: LearnSection::default(),
            sampler: SamplerSection::default(),
            hardware: HardwareSection::default(),
            eval: EvalSection::default(),
            sweep: SweepSection::default(),
            replicate: ReplicateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub tracks: Vec<String>,
    pub incidence: Option<PathBuf>,
    pub start: u64,
    pub end: Option<u64>,
    pub bin_size: u64,
    pub threshold: Option<f64>,
    pub activation: Activation,
    pub aggregation: Aggregation,
    pub template_start: Option<usize>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            tracks: Vec::new(),
            incidence: None,
            start: 0,
            end: None,
            bin_size: DEFAULT_BIN_SIZE,
            threshold: None,
            activation: Activation::default(),
            aggregation: Aggregation::default(),
            template_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub nucleosomes: usize,
    pub max_distance: usize,
    pub boundary: Boundary,
    pub normalization: OpenNormalization,
    pub threshold: f64,
    pub params: Option<PathBuf>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            nucleosomes: 25,
            max_distance: 5,
            boundary: Boundary::Periodic,
            normalization: OpenNormalization::default(),
            threshold: 0.0,
            params: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnSection {
    pub beta: f64,
    pub n_steps: usize,
    pub n_samples: usize,
    pub rate_q: f64,
    pub rate_r: f64,
    pub rate_s: f64,
    pub rate_decay: f64,
    pub error_threshold: f64,
    pub max_iters: usize,
    pub init_scale: f64,
}

impl Default for LearnSection {
    fn default() -> Self {
        let d = chromanneal::learn::LearnConfig::default();
        Self {
            beta: d.beta,
            n_steps: d.n_steps,
            n_samples: d.n_samples,
            rate_q: d.learning_rate.q,
            rate_r: d.learning_rate.r,
            rate_s: d.learning_rate.s,
            rate_decay: d.rate_decay,
            error_threshold: d.error_threshold,
            max_iters: d.max_iters,
            init_scale: d.init_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub backend: BackendKind,
    pub n_smpl: usize,
    pub anneal_time_us: f64,
    pub sweeps_per_us: f64,
    pub beta_start: f64,
    pub beta_end: f64,
    pub beta: f64,
    pub trotter: usize,
    pub readout: Readout,
    pub world_line_moves: bool,
    pub schedule: Option<PathBuf>,
    pub schedule_b: Option<PathBuf>,
    pub bias_strength: f64,
    pub reverse_s_r: Option<f64>,
    pub reverse_t_r_ns: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let sqa = chromanneal::sampler::SqaParams::default();
        let sa = chromanneal::sampler::SaParams::default();
        Self {
            backend: BackendKind::Sa,
            n_smpl: 100,
            anneal_time_us: 1.0,
            sweeps_per_us: DEFAULT_SWEEPS_PER_US,
            beta_start: sa.beta_start,
            beta_end: sa.beta_end,
            beta: sqa.beta,
            trotter: sqa.trotter,
            readout: sqa.readout,
            world_line_moves: sqa.world_line_moves,
            schedule: None,
            schedule_b: None,
            bias_strength: 0.0,
            reverse_s_r: None,
            reverse_t_r_ns: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareSection {
    pub kind: Option<String>,
    pub m: usize,
    pub blocklist: Option<PathBuf>,
    pub embedding: Option<PathBuf>,
    pub chain_strength: f64,
    pub placement: CouplingPlacement,
    pub policy: UnembedPolicy,
    pub max_tries: usize,
    pub patience: usize,
    pub chain_patience: usize,
    pub max_chain_warning: usize,
}

impl Default for HardwareSection {
    fn default() -> Self {
        let e = chromanneal::embed::EmbedConfig::default();
        Self {
            kind: None,
            m: 16,
            blocklist: None,
            embedding: None,
            chain_strength: 2.0,
            placement: CouplingPlacement::default(),
            policy: UnembedPolicy::default(),
            max_tries: e.max_tries,
            patience: e.patience,
            chain_patience: e.chain_patience,
            max_chain_warning: DEFAULT_MAX_CHAIN_WARNING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub epsilon: f64,
    pub samples: Option<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            epsilon: chromanneal::eval::DEFAULT_EPSILON,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub grid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicateSection {
    pub copies: usize,
}

impl Default for ReplicateSection {
    fn default() -> Self {
        Self { copies: 1 }
    }
}

/// Every configuration key with its meaning. `--help` prints this table and
/// a test checks it against the serialized defaults.
pub const FIELDS: &[(&str, &str)] = &[
    (
        "seed",
        "master seed; all randomness derives from it (required by learn, embed, sample, sweep, replicate)",
    ),
    ("out", "output directory"),
    ("format", "extra report format: csv, json or svg"),
    ("data.tracks", "bedGraph files, one per marker, as PATH or NAME=PATH"),
    (
        "data.incidence",
        "ready-made incidence matrix (.json or .csv) instead of tracks",
    ),
    ("data.start", "first base of the binned region"),
    ("data.end", "end of the binned region (exclusive)"),
    ("data.bin_size", "bases per nucleosome bin"),
    (
        "data.threshold",
        "binarization threshold on the binned signal (required for tracks)",
    ),
    ("data.activation", "strict (value > threshold) or inclusive (>=)"),
    ("data.aggregation", "per-bin signal: mean or max"),
    (
        "data.template_start",
        "first nucleosome of the template window used for bias, reverse annealing and d_A",
    ),
    ("model.nucleosomes", "model length N"),
    ("model.max_distance", "inter-nucleosome correlation length L"),
    ("model.boundary", "periodic or open"),
    (
        "model.normalization",
        "open-boundary correlation denominator: valid-terms or total-n",
    ),
    (
        "model.threshold",
        "coupling threshold delta; couplings with |J| < delta are dropped",
    ),
    ("model.params", "model parameter file (default OUT/model.json)"),
    ("learn.beta", "inverse temperature of the learning sampler"),
    ("learn.n_steps", "Metropolis steps per learning sample"),
    ("learn.n_samples", "samples per learning iteration"),
    ("learn.rate_q", "learning rate of the single-marker biases"),
    ("learn.rate_r", "learning rate of the intra-nucleosome couplings"),
    ("learn.rate_s", "learning rate of the inter-nucleosome couplings"),
    ("learn.rate_decay", "rates shrink as rate / (1 + decay * iteration)"),
    (
        "learn.error_threshold",
        "stop once the summed moment error falls below this",
    ),
    ("learn.max_iters", "iteration cap"),
    ("learn.init_scale", "initial parameters uniform in [-scale, scale]"),
    (
        "sampler.backend",
        "sa (simulated annealing) or sqa (simulated quantum annealing)",
    ),
    ("sampler.n_smpl", "number of anneals"),
    ("sampler.anneal_time_us", "nominal anneal time T_A in microseconds"),
    ("sampler.sweeps_per_us", "Monte Carlo sweeps per microsecond"),
    ("sampler.beta_start", "SA initial inverse temperature"),
    ("sampler.beta_end", "SA final inverse temperature"),
    ("sampler.beta", "SQA inverse temperature in schedule energy units"),
    ("sampler.trotter", "SQA Trotter replicas P"),
    ("sampler.readout", "SQA readout: majority or random-slice"),
    ("sampler.world_line_moves", "SQA also flips whole world lines"),
    (
        "sampler.schedule",
        "schedule CSV: s,A,B, or s,A when schedule_b is given",
    ),
    ("sampler.schedule_b", "optional s,B CSV paired with schedule"),
    ("sampler.bias_strength", "template bias strength f"),
    (
        "sampler.reverse_s_r",
        "reverse-anneal depth s_R; enables reverse annealing from the template",
    ),
    ("sampler.reverse_t_r_ns", "reverse-anneal leg time t_R in nanoseconds"),
    (
        "hardware.kind",
        "chimera, pegasus or zephyr; unset or none samples the logical model directly",
    ),
    ("hardware.m", "topology size parameter"),
    ("hardware.blocklist", "qubits and couplers to remove"),
    ("hardware.embedding", "reuse an embedding file instead of searching"),
    ("hardware.chain_strength", "chain strength J_C (> 0), applied as -J_C"),
    ("hardware.placement", "logical coupling placement: first or spread"),
    (
        "hardware.policy",
        "chain-break resolution: majority, majority-up or majority-down",
    ),
    ("hardware.max_tries", "embedding restarts"),
    (
        "hardware.patience",
        "overlap-removal rounds without progress before a restart",
    ),
    ("hardware.chain_patience", "chain-shortening rounds without progress"),
    ("hardware.max_chain_warning", "warn about chains longer than this"),
    ("eval.epsilon", "floor applied before taking logs of statistics"),
    ("eval.samples", "sample file to evaluate (default OUT/samples.jsonl)"),
    ("sweep.axis", "TA, JC, delta, boundary, f, sR or tR"),
    ("sweep.grid", "start:stop:count or a comma list"),
    ("replicate.copies", "number of disjoint copies in the cluster graph"),
];

pub fn fields_help() -> String {
    let width = FIELDS.iter().map(|f| f.0.len()).max().unwrap_or(0);
    let mut out = String::from("Configuration keys (TOML file, or --set KEY=VALUE):\n");
    for (k, d) in FIELDS {
        out.push_str(&format!("  {k:width$}  {d}\n"));
    }
    out
}

/// Sets `key` (dotted) in a TOML table, creating sections as needed. The
/// value is read as a TOML literal, falling back to a plain string.
pub fn set_override(root: &mut toml::Table, key: &str, raw: &str) -> Result<(), String> {
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let (last, sections) = parts.split_last().ok_or("empty key")?;
    let mut table = root;
    for s in sections {
        table = table
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("{key}: '{s}' is not a section"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Reads the file, applies overrides in order, then deserializes over the
/// defaults. Relative paths in the file resolve against its directory.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<(Config, PathBuf), Vec<String>> {
    let (mut table, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| vec![format!("config {}: {e}", p.display())])?;
            let t = text
                .parse::<toml::Table>()
                .map_err(|e| vec![format!("config {}: {e}", p.display())])?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (t, base)
        }
        None => (toml::Table::new(), PathBuf::new()),
    };
    let mut errs = Vec::new();
    for (k, v) in overrides {
        if let Err(e) = set_override(&mut table, k, v) {
            errs.push(e);
        }
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    let mut cfg: Config = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| vec![e.to_string()])?;
    if matches!(cfg.hardware.kind.as_deref(), Some("" | "none")) {
        cfg.hardware.kind = None;
    }
    Ok((cfg, base))
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    /// Joins every relative path from the file onto `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        rebase(base, &mut self.out);
        for t in &mut self.data.tracks {
            let (name, path) = match t.split_once('=') {
                Some((n, p)) => (Some(n.to_string()), p.to_string()),
                None => (None, t.clone()),
            };
            let mut p = PathBuf::from(path);
            rebase(base, &mut p);
            *t = match name {
                Some(n) => format!("{n}={}", p.display()),
                None => p.display().to_string(),
            };
        }
        for p in [
            &mut self.data.incidence,
            &mut self.model.params,
            &mut self.sampler.schedule,
            &mut self.sampler.schedule_b,
            &mut self.hardware.blocklist,
            &mut self.hardware.embedding,
            &mut self.eval.samples,
        ]
        .into_iter()
        .flatten()
        {
            rebase(base, p);
        }
    }

    /// Every violated field, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        let m = &self.model;
        if m.nucleosomes == 0 {
            e.push("model.nucleosomes must be positive".into());
        }
        if m.max_distance >= m.nucleosomes.max(1) {
            e.push("model.max_distance must be below model.nucleosomes".into());
        }
        if !(m.threshold >= 0.0) {
            e.push("model.threshold must be >= 0".into());
        }
        if self.data.bin_size == 0 {
            e.push("data.bin_size must be positive".into());
        }
        if let Some(t) = self.data.threshold {
            if !(t >= 0.0) || !t.is_finite() {
                e.push("data.threshold must be finite and >= 0".into());
            }
        }
        let l = &self.learn;
        if !(l.beta > 0.0) {
            e.push("learn.beta must be positive".into());
        }
        for (name, v) in [
            ("learn.n_steps", l.n_steps),
            ("learn.n_samples", l.n_samples),
            ("learn.max_iters", l.max_iters),
        ] {
            if v == 0 {
                e.push(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("learn.rate_q", l.rate_q),
            ("learn.rate_r", l.rate_r),
            ("learn.rate_s", l.rate_s),
            ("learn.error_threshold", l.error_threshold),
        ] {
            if !(v > 0.0) {
                e.push(format!("{name} must be positive"));
            }
        }
        if !(l.rate_decay >= 0.0) {
            e.push("learn.rate_decay must be >= 0".into());
        }
        if !(l.init_scale >= 0.0) {
            e.push("learn.init_scale must be >= 0".into());
        }
        let s = &self.sampler;
        if s.n_smpl == 0 {
            e.push("sampler.n_smpl must be positive".into());
        }
        for (name, v) in [
            ("sampler.anneal_time_us", s.anneal_time_us),
            ("sampler.sweeps_per_us", s.sweeps_per_us),
            ("sampler.beta_start", s.beta_start),
            ("sampler.beta_end", s.beta_end),
            ("sampler.beta", s.beta),
            ("sampler.reverse_t_r_ns", s.reverse_t_r_ns),
        ] {
            if !(v > 0.0) {
                e.push(format!("{name} must be positive"));
            }
        }
        if s.trotter < 2 {
            e.push("sampler.trotter must be at least 2".into());
        }
        if !(s.bias_strength >= 0.0) {
            e.push("sampler.bias_strength must be >= 0".into());
        }
        if let Some(r) = s.reverse_s_r {
            if !(r > 0.0 && r <= 1.0) {
                e.push("sampler.reverse_s_r must lie in (0, 1]".into());
            }
        }
        if s.schedule_b.is_some() && s.schedule.is_none() {
            e.push("sampler.schedule_b needs sampler.schedule".into());
        }
        if (s.bias_strength > 0.0 || s.reverse_s_r.is_some()) && self.data.template_start.is_none() {
            e.push("data.template_start is required for bias or reverse annealing".into());
        }
        let h = &self.hardware;
        if let Some(k) = &h.kind {
            if k.parse::<chromanneal::topology::TopologyKind>().is_err() {
                e.push(format!("hardware.kind '{k}' is not chimera, pegasus or zephyr"));
            }
            if h.m == 0 {
                e.push("hardware.m must be positive".into());
            }
        }
        if !(h.chain_strength > 0.0) {
            e.push("hardware.chain_strength must be positive".into());
        }
        if h.max_tries == 0 {
            e.push("hardware.max_tries must be positive".into());
        }
        if !(self.eval.epsilon > 0.0) {
            e.push("eval.epsilon must be positive".into());
        }
        if self.replicate.copies == 0 {
            e.push("replicate.copies must be positive".into());
        }
        e
    }
}
