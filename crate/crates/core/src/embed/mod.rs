//! Minor embedding of objective graphs into hardware graphs.
//!
//! Each logical variable becomes a chain: a connected set of qubits, with
//! chains of coupled variables joined by at least one hardware edge. The
//! search lives in [`search`]; this module holds the embedding type, its
//! validation and metrics, and the mapping of logical models onto chains.

mod search;

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{IsingModel, ModelError};
use crate::rng::derived_rng;
use crate::topology::{Graph, HardwareGraph, TopologyKind};

use search::{Limits, Search};

/// Vendor guideline for the longest comfortable chain.
pub const DEFAULT_MAX_CHAIN_WARNING: usize = 7;

const NONE: usize = usize::MAX;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("source has {source_nodes} nodes but the target only {target_nodes} usable qubits")]
    SourceTooLarge { source_nodes: usize, target_nodes: usize },
    #[error("no embedding found after {tries} tries")]
    NotFound { tries: usize },
    #[error("invalid embedding: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("chain strength must be positive, got {0}")]
    ChainStrength(f64),
    #[error("unknown chain-break policy '{0}'")]
    UnknownPolicy(String),
    #[error("sample has {got} spins, expected {expected}")]
    SampleLength { got: usize, expected: usize },
    #[error("model has {model} variables, embedding has {chains} chains")]
    VariableMismatch { model: usize, chains: usize },
    #[error("invalid copy count {0}")]
    Copies(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ChainCount { chains: usize, nodes: usize },
    EmptyChain { var: usize },
    UnknownQubit { var: usize, qubit: usize },
    DisconnectedChain { var: usize },
    SharedQubit { qubit: usize, vars: (usize, usize) },
    MissingEdge { edge: (usize, usize) },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ChainCount { chains, nodes } => write!(f, "{chains} chains for {nodes} source nodes"),
            Violation::EmptyChain { var } => write!(f, "chain {var} is empty"),
            Violation::UnknownQubit { var, qubit } => write!(f, "chain {var} uses missing qubit {qubit}"),
            Violation::DisconnectedChain { var } => write!(f, "chain {var} is disconnected"),
            Violation::SharedQubit { qubit, vars } => {
                write!(f, "qubit {qubit} shared by chains {} and {}", vars.0, vars.1)
            }
            Violation::MissingEdge { edge } => {
                write!(f, "no coupler between chains of logical edge ({}, {})", edge.0, edge.1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TopologyKind,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub source_id: String,
    pub target: TargetSpec,
    /// Sorted qubit indices per logical variable.
    pub chains: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn n_qubits(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("embedding serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EmbedError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub seed: u64,
    pub max_tries: usize,
    /// Overlap-removal passes without progress before a try is abandoned.
    pub patience: usize,
    /// Chain-shortening passes without progress before the search stops.
    pub chain_patience: usize,
    pub max_chain_warning: usize,
    pub source_id: String,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_tries: 10,
            patience: 10,
            chain_patience: 10,
            max_chain_warning: DEFAULT_MAX_CHAIN_WARNING,
            source_id: "source".into(),
        }
    }
}

/// Outcome of a successful search with the try that produced it.
#[derive(Debug, Clone)]
pub struct EmbedOutcome {
    pub embedding: Embedding,
    pub tries: usize,
}

/// Unit chains `v -> v` when the source already sits inside the target.
fn identity_chains(source: &Graph, target: &HardwareGraph) -> Option<Vec<Vec<usize>>> {
    let fits = (0..source.n_nodes()).all(|v| v < target.graph.n_nodes() && target.available[v])
        && source.edges().iter().all(|&(u, v)| target.graph.has_edge(u, v));
    fits.then(|| (0..source.n_nodes()).map(|v| vec![v]).collect())
}

/// Seeded restarts; try `t` uses the stream derived from `(seed, t)`.
/// A source that is a subgraph of the target under the identity map gets
/// unit chains without a search, reported as zero tries.
pub fn find_embedding(source: &Graph, target: &HardwareGraph, cfg: &EmbedConfig) -> Result<EmbedOutcome, EmbedError> {
    let usable = target.n_available();
    if source.n_nodes() > usable {
        return Err(EmbedError::SourceTooLarge {
            source_nodes: source.n_nodes(),
            target_nodes: usable,
        });
    }
    let spec = TargetSpec {
        kind: target.kind,
        m: target.m,
    };
    if let Some(chains) = identity_chains(source, target) {
        return Ok(EmbedOutcome {
            embedding: Embedding {
                source_id: cfg.source_id.clone(),
                target: spec,
                chains,
            },
            tries: 0,
        });
    }
    let limits = Limits {
        patience: cfg.patience.max(1),
        chain_patience: cfg.chain_patience,
    };
    for t in 0..cfg.max_tries {
        let mut rng = derived_rng(cfg.seed, t as u64);
        let mut search = Search::new(source, target, &mut rng);
        let Some(chains) = search.run(limits, t + 1 == cfg.max_tries, &mut rng) else {
            log::debug!("embedding try {t} failed");
            continue;
        };
        let embedding = Embedding {
            source_id: cfg.source_id.clone(),
            target: spec,
            chains,
        };
        let violations = validate(&embedding, source, target);
        if !violations.is_empty() {
            log::debug!("embedding try {t} produced {} violations", violations.len());
            continue;
        }
        let longest = embedding.chains.iter().map(Vec::len).max().unwrap_or(0);
        if longest > cfg.max_chain_warning {
            log::warn!(
                "longest chain has {longest} qubits, above the recommended {}",
                cfg.max_chain_warning
            );
        }
        return Ok(EmbedOutcome {
            embedding,
            tries: t + 1,
        });
    }
    Err(EmbedError::NotFound { tries: cfg.max_tries })
}

fn chain_connected(chain: &[usize], target: &Graph) -> bool {
    let Some(&start) = chain.first() else {
        return false;
    };
    let mut seen = vec![false; chain.len()];
    seen[0] = true;
    let mut stack = vec![start];
    let mut count = 1;
    while let Some(q) = stack.pop() {
        for y in target.neighbors(q) {
            if let Ok(k) = chain.binary_search(y) {
                if !seen[k] {
                    seen[k] = true;
                    count += 1;
                    stack.push(*y);
                }
            }
        }
    }
    count == chain.len()
}

fn sorted_chain(chain: &[usize]) -> Vec<usize> {
    let mut c = chain.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Empty iff chains are nonempty, disjoint, connected, on usable qubits, and
/// every logical edge has a coupler between its two chains.
pub fn validate(e: &Embedding, source: &Graph, target: &HardwareGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if e.chains.len() != source.n_nodes() {
        out.push(Violation::ChainCount {
            chains: e.chains.len(),
            nodes: source.n_nodes(),
        });
        return out;
    }
    let n = target.graph.n_nodes();
    let chains: Vec<Vec<usize>> = e.chains.iter().map(|c| sorted_chain(c)).collect();
    let mut owner = vec![NONE; n];
    for (v, chain) in chains.iter().enumerate() {
        if chain.is_empty() {
            out.push(Violation::EmptyChain { var: v });
            continue;
        }
        let mut ok = true;
        for &q in chain {
            if q >= n || !target.available[q] {
                out.push(Violation::UnknownQubit { var: v, qubit: q });
                ok = false;
                continue;
            }
            if owner[q] != NONE {
                out.push(Violation::SharedQubit {
                    qubit: q,
                    vars: (owner[q], v),
                });
            } else {
                owner[q] = v;
            }
        }
        if ok && !chain_connected(chain, &target.graph) {
            out.push(Violation::DisconnectedChain { var: v });
        }
    }
    for &(a, b) in source.edges() {
        let linked = chains[a].iter().filter(|&&q| q < n).any(|&q| {
            target
                .graph
                .neighbors(q)
                .iter()
                .any(|y| chains[b].binary_search(y).is_ok())
        });
        if !linked {
            out.push(Violation::MissingEdge { edge: (a, b) });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMetrics {
    pub lengths: Vec<usize>,
    pub diameters: Vec<usize>,
    pub mean_length: f64,
    pub max_length: usize,
    pub mean_diameter: f64,
    pub max_diameter: usize,
    pub total_qubits: usize,
    /// Fraction of broken chains over a sample batch, when known.
    pub break_rate: Option<f64>,
}

impl ChainMetrics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("chain,L_C,D_C\n");
        for (k, (l, d)) in self.lengths.iter().zip(&self.diameters).enumerate() {
            let _ = writeln!(out, "{k},{l},{d}");
        }
        out
    }
}

/// Node count of the longest shortest path inside the chain.
pub fn chain_diameter(chain: &[usize], target: &Graph) -> usize {
    let chain = sorted_chain(chain);
    let mut best = 0;
    let mut hops = vec![usize::MAX; chain.len()];
    for s in 0..chain.len() {
        hops.fill(usize::MAX);
        hops[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(k) = queue.pop_front() {
            best = best.max(hops[k]);
            for y in target.neighbors(chain[k]) {
                if let Ok(j) = chain.binary_search(y) {
                    if hops[j] == usize::MAX {
                        hops[j] = hops[k] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    best + 1
}

/// `include_singletons = false` leaves length-1 chains out of the summary.
pub fn chain_metrics(
    e: &Embedding,
    source: &Graph,
    target: &HardwareGraph,
    include_singletons: bool,
) -> Result<ChainMetrics, EmbedError> {
    let violations = validate(e, source, target);
    if !violations.is_empty() {
        return Err(EmbedError::Invalid(violations));
    }
    let (lengths, diameters): (Vec<usize>, Vec<usize>) = e
        .chains
        .iter()
        .filter(|c| include_singletons || c.len() > 1)
        .map(|c| (c.len(), chain_diameter(c, &target.graph)))
        .unzip();
    let mean = |v: &[usize]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<usize>() as f64 / v.len() as f64
        }
    };
    Ok(ChainMetrics {
        mean_length: mean(&lengths),
        max_length: lengths.iter().copied().max().unwrap_or(0),
        mean_diameter: mean(&diameters),
        max_diameter: diameters.iter().copied().max().unwrap_or(0),
        total_qubits: e.n_qubits(),
        lengths,
        diameters,
        break_rate: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingPlacement {
    /// Whole coupling on the lexicographically first inter-chain coupler.
    #[default]
    First,
    /// Coupling divided equally over every inter-chain coupler.
    Spread,
}

/// Physical problem over the qubits used by an embedding, re-indexed
/// `0..qubits.len()` in ascending qubit order.
#[derive(Debug, Clone)]
pub struct PhysicalIsing {
    pub model: IsingModel,
    pub chain_strength: f64,
    /// Local index to hardware qubit.
    pub qubits: Vec<usize>,
    /// Chains in local indices.
    pub local_chains: Vec<Vec<usize>>,
    pub embedding: Embedding,
}

/// With intact chains the physical energy equals the logical energy: the
/// offset absorbs the `-J_C` contribution of every chain coupler.
pub fn embed_ising(
    model: &IsingModel,
    e: &Embedding,
    target: &HardwareGraph,
    chain_strength: f64,
    placement: CouplingPlacement,
) -> Result<PhysicalIsing, EmbedError> {
    if !(chain_strength > 0.0) {
        return Err(EmbedError::ChainStrength(chain_strength));
    }
    if model.n_vars != e.chains.len() {
        return Err(EmbedError::VariableMismatch {
            model: model.n_vars,
            chains: e.chains.len(),
        });
    }
    let chains: Vec<Vec<usize>> = e.chains.iter().map(|c| sorted_chain(c)).collect();
    let mut qubits: Vec<usize> = chains.iter().flatten().copied().collect();
    qubits.sort_unstable();
    let local = |q: usize| qubits.binary_search(&q).expect("qubit is in a chain");
    let local_chains: Vec<Vec<usize>> = chains.iter().map(|c| c.iter().map(|&q| local(q)).collect()).collect();

    let mut h = vec![0.0; qubits.len()];
    for (v, chain) in local_chains.iter().enumerate() {
        let share = model.h[v] / chain.len() as f64;
        for &k in chain {
            h[k] += share;
        }
    }
    let mut couplings = Vec::new();
    let mut offset = model.offset;
    for chain in &chains {
        for &q in chain {
            for &y in target.graph.neighbors(q) {
                if y > q && chain.binary_search(&y).is_ok() {
                    couplings.push(((local(q), local(y)), -chain_strength));
                    offset += chain_strength;
                }
            }
        }
    }
    let g = &target.graph;
    for (&(a, b), &jab) in model.j.iter().filter(|(_, &w)| w != 0.0) {
        let mut links = Vec::new();
        for &q in &chains[a] {
            for &y in g.neighbors(q) {
                if chains[b].binary_search(&y).is_ok() {
                    links.push((q.min(y), q.max(y)));
                }
            }
        }
        links.sort_unstable();
        if links.is_empty() {
            return Err(EmbedError::Invalid(vec![Violation::MissingEdge { edge: (a, b) }]));
        }
        match placement {
            CouplingPlacement::First => couplings.push(((local(links[0].0), local(links[0].1)), jab)),
            CouplingPlacement::Spread => {
                let share = jab / links.len() as f64;
                couplings.extend(links.iter().map(|&(x, y)| ((local(x), local(y)), share)));
            }
        }
    }
    let model = IsingModel::new(h, couplings, offset)?;
    Ok(PhysicalIsing {
        model,
        chain_strength,
        qubits,
        local_chains,
        embedding: e.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UnembedPolicy {
    /// Majority vote, split votes by a seeded coin flip.
    #[default]
    #[serde(rename = "majority")]
    Majority,
    #[serde(rename = "majority-up")]
    MajorityUp,
    #[serde(rename = "majority-down")]
    MajorityDown,
}

impl std::str::FromStr for UnembedPolicy {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(UnembedPolicy::Majority),
            "majority-up" => Ok(UnembedPolicy::MajorityUp),
            "majority-down" => Ok(UnembedPolicy::MajorityDown),
            _ => Err(EmbedError::UnknownPolicy(s.to_string())),
        }
    }
}

impl std::fmt::Display for UnembedPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnembedPolicy::Majority => "majority",
            UnembedPolicy::MajorityUp => "majority-up",
            UnembedPolicy::MajorityDown => "majority-down",
        })
    }
}

/// Logical spins and per-chain break flags from a physical sample indexed
/// like `chains`.
pub fn unembed<R: Rng + ?Sized>(
    sample: &[i8],
    chains: &[Vec<usize>],
    policy: UnembedPolicy,
    rng: &mut R,
) -> Result<(Vec<i8>, Vec<bool>), EmbedError> {
    let needed = chains.iter().flatten().copied().max().map_or(0, |q| q + 1);
    if sample.len() < needed {
        return Err(EmbedError::SampleLength {
            got: sample.len(),
            expected: needed,
        });
    }
    let mut spins = Vec::with_capacity(chains.len());
    let mut broken = Vec::with_capacity(chains.len());
    for chain in chains {
        let sum: i64 = chain.iter().map(|&q| i64::from(sample[q])).sum();
        broken.push(sum.unsigned_abs() as usize != chain.len());
        spins.push(match sum.cmp(&0) {
            Ordering::Greater => 1,
            Ordering::Less => -1,
            Ordering::Equal => match policy {
                UnembedPolicy::MajorityUp => 1,
                UnembedPolicy::MajorityDown => -1,
                UnembedPolicy::Majority => {
                    if rng.gen::<bool>() {
                        1
                    } else {
                        -1
                    }
                }
            },
        });
    }
    Ok((spins, broken))
}

/// Node `v` of copy `c` sits at `c * nodes_per_copy + v` in the union.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyMap {
    pub copies: usize,
    pub nodes_per_copy: usize,
}

impl CopyMap {
    pub fn node(&self, copy: usize, v: usize) -> usize {
        copy * self.nodes_per_copy + v
    }

    pub fn locate(&self, node: usize) -> (usize, usize) {
        (node / self.nodes_per_copy, node % self.nodes_per_copy)
    }

    pub fn copy_range(&self, copy: usize) -> std::ops::Range<usize> {
        copy * self.nodes_per_copy..(copy + 1) * self.nodes_per_copy
    }
}

/// Disjoint union of `n_copies` relabeled copies of `source`.
pub fn replicate_cluster(
    source: &Graph,
    n_copies: usize,
    target: Option<&HardwareGraph>,
) -> Result<(Graph, CopyMap), EmbedError> {
    if n_copies == 0 {
        return Err(EmbedError::Copies(0));
    }
    let per = source.n_nodes();
    if let Some(t) = target {
        if per * n_copies > t.n_available() {
            return Err(EmbedError::SourceTooLarge {
                source_nodes: per * n_copies,
                target_nodes: t.n_available(),
            });
        }
    }
    let edges = (0..n_copies).flat_map(|c| source.edges().iter().map(move |&(a, b)| (c * per + a, c * per + b)));
    let g = Graph::new(per * n_copies, edges).expect("copies of a valid graph");
    Ok((
        g,
        CopyMap {
            copies: n_copies,
            nodes_per_copy: per,
        },
    ))
}

/// Disjoint union of `model` copies in the same layout as `replicate_cluster`.
pub fn replicate_ising(model: &IsingModel, n_copies: usize) -> Result<IsingModel, EmbedError> {
    if n_copies == 0 {
        return Err(EmbedError::Copies(0));
    }
    let per = model.n_vars;
    let h = (0..n_copies).flat_map(|_| model.h.iter().copied()).collect();
    let j = (0..n_copies).flat_map(|c| model.j.iter().map(move |(&(a, b), &w)| ((c * per + a, c * per + b), w)));
    Ok(IsingModel::new(h, j, model.offset * n_copies as f64)?)
}
