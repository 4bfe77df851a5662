//! Subcommand bodies. Each writes its files under `cfg.out` and returns a
//! one-line JSON summary for stdout.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::json;

use chromanneal::embed::{
    chain_metrics, embed_ising, find_embedding, replicate_cluster, replicate_ising, EmbedConfig, Embedding,
};
use chromanneal::eval::{self, parse_grid, Axis, BackendSpec, HardwareSpec, PipelineSpec, ReverseSpec};
use chromanneal::ingest::{assemble, bin_signal, binarize, parse_bedgraph, IncidenceMatrix};
use chromanneal::learn::{learn_params, GroupRates, LearnConfig};
use chromanneal::model::{build_ising, incidence_to_spins, CartesianParams, ModelFile, ModelShape};
use chromanneal::rng::derive_seed;
use chromanneal::sampler::{
    sample_cluster, time_to_sweeps, AnnealSchedule, Annealer, QuantumAnnealer, SaParams, SampleParams, SampleRecord,
    SampleSet, SimulatedAnnealer, SqaParams,
};
use chromanneal::stats::{stats_of_samples, summarize, StatsSummary};
use chromanneal::topology::{build_hardware, metrics, objective_graph, Blocklist, HardwareGraph, TopologyKind};

use crate::config::{BackendKind, Config, Format};

type Res<T> = Result<T, String>;

trait Context<T> {
    fn ctx(self, what: impl std::fmt::Display) -> Res<T>;
}

impl<T, E: std::fmt::Display> Context<T> for Result<T, E> {
    fn ctx(self, what: impl std::fmt::Display) -> Res<T> {
        self.map_err(|e| format!("{what}: {e}"))
    }
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).ctx(path.display())
}

fn write(cfg: &Config, name: &str, text: &str) -> Res<PathBuf> {
    fs::create_dir_all(&cfg.out).ctx(cfg.out.display())?;
    let p = cfg.out.join(name);
    fs::write(&p, text).ctx(p.display())?;
    info!("wrote {}", p.display());
    Ok(p)
}

fn seed(cfg: &Config) -> Res<u64> {
    cfg.seed
        .ok_or_else(|| "seed is required: set `seed` in the config, pass --seed or --set seed=N".to_string())
}

fn summary(command: &str, files: &[PathBuf], extra: serde_json::Value) -> String {
    let mut v = json!({
        "command": command,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v.to_string()
}

fn has_data(cfg: &Config) -> bool {
    cfg.data.incidence.is_some() || !cfg.data.tracks.is_empty()
}

/// Incidence matrix from `data.incidence` or by binning `data.tracks`.
fn incidence(cfg: &Config) -> Res<IncidenceMatrix> {
    let d = &cfg.data;
    if let Some(p) = &d.incidence {
        let text = read(p)?;
        let parsed = if p.extension().is_some_and(|e| e == "csv") {
            IncidenceMatrix::from_csv(&text)
        } else {
            IncidenceMatrix::from_json(&text)
        };
        return parsed.ctx(p.display());
    }
    if d.tracks.is_empty() {
        return Err("no data: set data.tracks or data.incidence".into());
    }
    let threshold = d.threshold.ok_or("data.threshold is required to binarize tracks")?;
    let mut raw = Vec::new();
    for spec in &d.tracks {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (stem, p)
            }
        };
        let file = fs::File::open(&path).ctx(path.display())?;
        raw.push(parse_bedgraph(BufReader::new(file), &name).ctx(path.display())?);
    }
    let end = match d.end {
        Some(e) => e,
        None => {
            let last = raw
                .iter()
                .flat_map(|t| t.intervals.iter().map(|i| i.end))
                .max()
                .unwrap_or(d.start);
            d.start + (last.saturating_sub(d.start) / d.bin_size) * d.bin_size
        }
    };
    let mut rows = Vec::new();
    for t in &raw {
        let binned = bin_signal(t, d.bin_size, (d.start, end), d.aggregation).ctx(&t.marker_name)?;
        rows.push((
            t.marker_name.clone(),
            binarize(&binned, threshold, d.activation).ctx(&t.marker_name)?,
        ));
    }
    assemble(rows).ctx("incidence")
}

fn empirical(cfg: &Config, x: &IncidenceMatrix) -> Res<StatsSummary> {
    summarize(x, cfg.model.max_distance, cfg.model.boundary, cfg.model.normalization).ctx("statistics")
}

fn params_path(cfg: &Config) -> PathBuf {
    cfg.model.params.clone().unwrap_or_else(|| cfg.out.join("model.json"))
}

/// Learned parameters with the shape the config asks for. The marker count
/// and correlation length come from the parameter file.
fn load_model(cfg: &Config) -> Res<(ModelShape, CartesianParams)> {
    let p = params_path(cfg);
    let file = ModelFile::from_json(&read(&p)?).ctx(p.display())?;
    let (stored, params) = file.to_parts().ctx(p.display())?;
    if stored.max_distance != cfg.model.max_distance {
        return Err(format!(
            "model.max_distance is {} but {} has L = {}",
            cfg.model.max_distance,
            p.display(),
            stored.max_distance
        ));
    }
    let shape = ModelShape::new(
        stored.markers,
        cfg.model.nucleosomes,
        stored.max_distance,
        cfg.model.boundary,
    )
    .ctx("model shape")?;
    Ok((shape, params))
}

fn template(cfg: &Config, x: &IncidenceMatrix, shape: &ModelShape) -> Res<Option<Vec<i8>>> {
    let Some(start) = cfg.data.template_start else {
        return Ok(None);
    };
    let w = x.window(start, shape.nucleosomes).ctx("data.template_start")?;
    Ok(Some(incidence_to_spins(&w)))
}

fn hardware(cfg: &Config) -> Res<Option<HardwareGraph>> {
    let Some(kind) = &cfg.hardware.kind else {
        return Ok(None);
    };
    let kind: TopologyKind = kind.parse().ctx("hardware.kind")?;
    let mut hw = build_hardware(kind, cfg.hardware.m).ctx("hardware")?;
    if let Some(p) = &cfg.hardware.blocklist {
        let bl = Blocklist::parse(&read(p)?).ctx(p.display())?;
        hw = hw.with_blocklist(&bl).ctx(p.display())?;
    }
    Ok(Some(hw))
}

fn embed_config(cfg: &Config, seed: u64) -> EmbedConfig {
    let h = &cfg.hardware;
    EmbedConfig {
        seed,
        max_tries: h.max_tries,
        patience: h.patience,
        chain_patience: h.chain_patience,
        max_chain_warning: h.max_chain_warning,
        source_id: "objective".into(),
    }
}

fn schedule(cfg: &Config) -> Res<AnnealSchedule> {
    let s = &cfg.sampler;
    match (&s.schedule, &s.schedule_b) {
        (None, _) => Ok(AnnealSchedule::default()),
        (Some(a), None) => AnnealSchedule::from_csv(&read(a)?).ctx(a.display()),
        (Some(a), Some(b)) => AnnealSchedule::from_pair_csv(&read(a)?, &read(b)?).ctx(a.display()),
    }
}

fn backend(cfg: &Config) -> BackendSpec {
    let s = &cfg.sampler;
    match s.backend {
        BackendKind::Sa => BackendSpec::Sa(SaParams {
            beta_start: s.beta_start,
            beta_end: s.beta_end,
            sweeps: time_to_sweeps(s.anneal_time_us, s.sweeps_per_us),
        }),
        BackendKind::Sqa => BackendSpec::Sqa(SqaParams {
            beta: s.beta,
            trotter: s.trotter,
            anneal_time_us: s.anneal_time_us,
            sweeps_per_us: s.sweeps_per_us,
            readout: s.readout,
            world_line_moves: s.world_line_moves,
        }),
    }
}

fn pipeline_spec(cfg: &Config, seed: u64) -> Res<PipelineSpec> {
    let (shape, params) = load_model(cfg)?;
    let x = if has_data(cfg) { Some(incidence(cfg)?) } else { None };
    if let Some(x) = &x {
        if x.markers() != shape.markers {
            return Err(format!(
                "data has {} markers but the model has {}",
                x.markers(),
                shape.markers
            ));
        }
    }
    let empirical = x.as_ref().map(|x| empirical(cfg, x)).transpose()?;
    let template = match &x {
        Some(x) => template(cfg, x, &shape)?,
        None => None,
    };
    let hardware = match &cfg.hardware.kind {
        None => None,
        Some(k) => {
            let h = &cfg.hardware;
            let embedding = match &h.embedding {
                Some(p) => Some(Embedding::from_json(&read(p)?).ctx(p.display())?),
                None => None,
            };
            let blocklist = match &h.blocklist {
                Some(p) => Some(Blocklist::parse(&read(p)?).ctx(p.display())?),
                None => None,
            };
            Some(HardwareSpec {
                kind: k.parse().ctx("hardware.kind")?,
                m: h.m,
                chain_strength: h.chain_strength,
                placement: h.placement,
                policy: h.policy,
                embed: embed_config(cfg, 0),
                embedding,
                blocklist,
            })
        }
    };
    Ok(PipelineSpec {
        shape,
        params,
        empirical,
        incidence: x,
        normalization: cfg.model.normalization,
        template,
        bias_strength: cfg.sampler.bias_strength,
        threshold: cfg.model.threshold,
        backend: backend(cfg),
        schedule: schedule(cfg)?,
        reverse: cfg.sampler.reverse_s_r.map(|s_r| ReverseSpec {
            s_r,
            t_r_ns: cfg.sampler.reverse_t_r_ns,
        }),
        hardware,
        n_smpl: cfg.sampler.n_smpl,
        epsilon: cfg.eval.epsilon,
        seed,
    })
}

pub fn ingest(cfg: &Config) -> Res<String> {
    let x = incidence(cfg)?;
    let mut files = vec![write(cfg, "incidence.json", &x.to_json())?];
    if cfg.format == Format::Csv {
        files.push(write(cfg, "incidence.csv", &x.to_csv())?);
    }
    Ok(summary(
        "ingest",
        &files,
        json!({"markers": x.markers(), "nucleosomes": x.nucleosomes()}),
    ))
}

pub fn stats(cfg: &Config) -> Res<String> {
    let x = incidence(cfg)?;
    let s = empirical(cfg, &x)?;
    let mut files = vec![write(cfg, "stats.json", &s.to_json())?];
    if cfg.format == Format::Csv {
        files.push(write(cfg, "stats.csv", &s.to_csv())?);
    }
    Ok(summary(
        "stats",
        &files,
        json!({"markers": s.markers(), "L": s.max_distance}),
    ))
}

pub fn learn(cfg: &Config) -> Res<String> {
    let seed = seed(cfg)?;
    let x = incidence(cfg)?;
    let target = empirical(cfg, &x)?;
    let m = &cfg.model;
    let shape = ModelShape::new(x.markers(), m.nucleosomes, m.max_distance, m.boundary).ctx("model shape")?;
    let l = &cfg.learn;
    let lc = LearnConfig {
        beta: l.beta,
        n_steps: l.n_steps,
        n_samples: l.n_samples,
        learning_rate: GroupRates {
            q: l.rate_q,
            r: l.rate_r,
            s: l.rate_s,
        },
        rate_decay: l.rate_decay,
        error_threshold: l.error_threshold,
        max_iters: l.max_iters,
        init_scale: l.init_scale,
        seed,
        ..LearnConfig::default()
    };
    let outcome = learn_params(&target, &shape, &lc).ctx("learn")?;
    let file = ModelFile::new(&shape, &outcome.params).ctx("model")?;
    let files = vec![
        write(cfg, "model.json", &file.to_json())?,
        write(cfg, "learn_trace.csv", &outcome.trace.to_csv())?,
    ];
    let last = outcome.trace.rows.last().map(|r| r.total_error);
    Ok(summary(
        "learn",
        &files,
        json!({"converged": outcome.converged, "iterations": outcome.trace.rows.len(), "final_error": last}),
    ))
}

pub fn build(cfg: &Config) -> Res<String> {
    let (shape, params) = load_model(cfg)?;
    let model = build_ising(&shape, &params)
        .and_then(|m| m.apply_threshold(cfg.model.threshold))
        .ctx("build")?;
    let g = objective_graph(&model);
    let gm = metrics(&g).ctx("objective graph")?;
    let info = json!({
        "shape": shape.to_string(),
        "variables": model.n_vars,
        "couplings": model.edge_count(),
        "offset": model.offset,
        "max_abs_coupling": model.max_abs_coupling(),
        "objective_graph": gm,
    });
    let files = vec![
        write(cfg, "ising.txt", &model.to_edge_list())?,
        write(
            cfg,
            "objective.json",
            &serde_json::to_string_pretty(&info).expect("json"),
        )?,
    ];
    Ok(summary(
        "build",
        &files,
        json!({"variables": model.n_vars, "couplings": model.edge_count()}),
    ))
}

pub fn topology(cfg: &Config) -> Res<String> {
    let hw = hardware(cfg)?.ok_or("hardware.kind is required")?;
    let gm = metrics(&hw.graph).ctx("hardware graph")?;
    let m = json!({"kind": hw.kind.name(), "m": hw.m, "available": hw.n_available(), "metrics": gm});
    let files = vec![
        write(cfg, "topology.txt", &hw.to_edge_list())?,
        write(
            cfg,
            "topology_metrics.json",
            &serde_json::to_string_pretty(&m).expect("json"),
        )?,
    ];
    Ok(summary("topology", &files, m))
}

pub fn embed(cfg: &Config) -> Res<String> {
    let seed = seed(cfg)?;
    let hw = hardware(cfg)?.ok_or("hardware.kind is required")?;
    let (shape, params) = load_model(cfg)?;
    let model = build_ising(&shape, &params)
        .and_then(|m| m.apply_threshold(cfg.model.threshold))
        .ctx("build")?;
    let source = objective_graph(&model);
    // Same sub-stream as the sampling pipeline, so `sample` finds this embedding too.
    let found = find_embedding(&source, &hw, &embed_config(cfg, derive_seed(seed, 1))).ctx("embed")?;
    let cm = chain_metrics(&found.embedding, &source, &hw, true).ctx("embed")?;
    if cm.max_length > cfg.hardware.max_chain_warning {
        warn!("longest chain has {} qubits", cm.max_length);
    }
    let files = vec![
        write(cfg, "embedding.json", &found.embedding.to_json())?,
        write(cfg, "chains.csv", &cm.to_csv())?,
    ];
    Ok(summary(
        "embed",
        &files,
        json!({"tries": found.tries, "qubits": cm.total_qubits, "mean_chain_length": cm.mean_length, "max_chain_length": cm.max_length}),
    ))
}

pub fn sample(cfg: &Config) -> Res<String> {
    let seed = seed(cfg)?;
    let spec = pipeline_spec(cfg, seed)?;
    let run = eval::sample_pipeline(&spec)?;
    let mut files = vec![
        write(cfg, "samples.jsonl", &run.set.to_jsonl())?,
        write(cfg, "samples.csv", &run.set.to_csv())?,
    ];
    if let Some(cm) = &run.chain_metrics {
        files.push(write(cfg, "chains.csv", &cm.to_csv())?);
    }
    Ok(summary(
        "sample",
        &files,
        json!({
            "backend": run.set.backend,
            "distinct": run.set.records.len(),
            "reads": run.set.total_occurrences(),
            "mean_energy": run.set.mean_energy(),
            "chain_break_fraction": spec.hardware.as_ref().map(|_| run.set.chain_break_fraction()),
        }),
    ))
}

fn read_samples(path: &Path) -> Res<SampleSet> {
    let text = read(path)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: SampleRecord = serde_json::from_str(line).ctx(format!("{}:{}", path.display(), i + 1))?;
        records.push(r);
    }
    if records.is_empty() {
        return Err(format!("{}: no samples", path.display()));
    }
    let n: u64 = records.iter().map(|r| r.occurrences).sum();
    Ok(SampleSet {
        backend: "file".into(),
        params: SampleParams {
            anneal_time_us: None,
            chain_strength: None,
            n_smpl: n,
            n_anneals: n,
            n_copies: 1,
            beta_eff: None,
        },
        records,
    })
}

pub fn eval(cfg: &Config) -> Res<String> {
    let (shape, _) = load_model(cfg)?;
    let x = incidence(cfg)?;
    let emp = empirical(cfg, &x)?;
    let path = cfg
        .eval
        .samples
        .clone()
        .unwrap_or_else(|| cfg.out.join("samples.jsonl"));
    let set = read_samples(&path)?;
    if set.records.iter().any(|r| r.state.len() != shape.n_vars()) {
        return Err(format!("{}: states do not match model shape {shape}", path.display()));
    }
    let sampled = stats_of_samples(set.states(), &shape).ctx("sample statistics")?;
    let eps = cfg.eval.epsilon;
    let r2 = eval::r2_log(&emp, &sampled, eps).ok();
    let groups = eval::r2_log_groups(&emp, &sampled, eps).ctx("r2")?;
    let dist = match template(cfg, &x, &shape)? {
        Some(t) => Some(eval::distance_summary(&set, &t, &shape).ctx("distance")?),
        None => None,
    };
    let group_json: serde_json::Map<String, serde_json::Value> =
        groups.iter().map(|(g, v)| (g.name().to_string(), json!(v))).collect();
    let report = json!({
        "r2": r2,
        "r2_groups": group_json,
        "d_a": dist.map(|d| json!({"mean": d.mean, "min": d.min, "max": d.max})),
        "reads": set.total_occurrences(),
        "sampled": sampled,
    });
    let mut files = vec![write(
        cfg,
        "eval.json",
        &serde_json::to_string_pretty(&report).expect("json"),
    )?];
    match cfg.format {
        Format::Csv => {
            let mut csv = String::from("group,r2\n");
            csv.push_str(&format!("all,{}\n", r2.map(|v| v.to_string()).unwrap_or_default()));
            for (g, v) in &groups {
                csv.push_str(&format!(
                    "{},{}\n",
                    g.name(),
                    v.map(|v| v.to_string()).unwrap_or_default()
                ));
            }
            files.push(write(cfg, "eval.csv", &csv)?);
        }
        Format::Svg => files.push(write(cfg, "eval.svg", &eval::scatter_svg(&emp, &sampled, eps))?),
        Format::Json => {}
    }
    Ok(summary("eval", &files, json!({"r2": r2, "r2_groups": group_json})))
}

pub fn sweep(cfg: &Config) -> Res<String> {
    let seed = seed(cfg)?;
    let axis: Axis = cfg
        .sweep
        .axis
        .as_deref()
        .ok_or("sweep.axis is required (or --axis)")?
        .parse()
        .ctx("sweep.axis")?;
    let grid = parse_grid(
        axis,
        cfg.sweep.grid.as_deref().ok_or("sweep.grid is required (or --grid)")?,
    )
    .ctx("sweep.grid")?;
    let spec = pipeline_spec(cfg, seed)?;
    let report = eval::sweep(axis, &grid, &spec).ctx("sweep")?;
    let mut files = vec![write(cfg, "sweep.csv", &report.to_csv())?];
    match cfg.format {
        Format::Json => files.push(write(cfg, "sweep.json", &report.to_json())?),
        Format::Svg => files.push(write(cfg, "sweep.svg", &eval::sweep_svg(&report))?),
        Format::Csv => {}
    }
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    for r in report
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| (r.value, e)))
    {
        warn!("{axis} = {}: {}", r.0, r.1);
    }
    Ok(summary(
        "sweep",
        &files,
        json!({"axis": axis.name(), "points": report.rows.len(), "failed": failed}),
    ))
}

pub fn replicate(cfg: &Config) -> Res<String> {
    let seed = seed(cfg)?;
    let copies = cfg.replicate.copies;
    let (shape, params) = load_model(cfg)?;
    let logical = build_ising(&shape, &params)
        .and_then(|m| m.apply_threshold(cfg.model.threshold))
        .ctx("build")?;
    let replicated = replicate_ising(&logical, copies).ctx("replicate")?;
    let hw = hardware(cfg)?;
    let (cluster, _) = replicate_cluster(&objective_graph(&logical), copies, hw.as_ref()).ctx("replicate")?;
    let physical = match &hw {
        Some(hw) => {
            let e = find_embedding(&cluster, hw, &embed_config(cfg, derive_seed(seed, 1))).ctx("embed")?;
            Some(
                embed_ising(
                    &replicated,
                    &e.embedding,
                    hw,
                    cfg.hardware.chain_strength,
                    cfg.hardware.placement,
                )
                .ctx("embed")?,
            )
        }
        None => None,
    };
    let annealer: Box<dyn Annealer> = match backend(cfg) {
        BackendSpec::Sa(p) => Box::new(SimulatedAnnealer(p)),
        BackendSpec::Sqa(p) => Box::new(QuantumAnnealer {
            schedule: schedule(cfg)?,
            params: p,
        }),
    };
    let n_anneals = cfg.sampler.n_smpl.div_ceil(copies);
    let set = sample_cluster(
        annealer.as_ref(),
        &logical,
        &replicated,
        copies,
        physical.as_ref(),
        n_anneals,
        cfg.hardware.policy,
        derive_seed(seed, 0),
    )
    .ctx("sample")?;
    let files = vec![
        write(cfg, "cluster.txt", &cluster.to_edge_list("cluster", copies))?,
        write(cfg, "replicate.json", &set.to_json())?,
    ];
    Ok(summary(
        "replicate",
        &files,
        json!({"copies": copies, "anneals": n_anneals, "reads": set.total_occurrences(), "mean_energy": set.mean_energy()}),
    ))
}
