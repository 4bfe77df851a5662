//! Hardware target graphs, objective graphs and their connectivity metrics.
//!
//! Node numbering of the generated hardware graphs:
//!
//! * Chimera(m): `((row * m + col) * 2 + u) * 4 + k` with cell `(row, col)`,
//!   orientation `u` (0 vertical, 1 horizontal) and shore index `k < 4`.
//! * Pegasus(m): fabric qubits `(u, w, k, z)` with `u < 2`, `w < m`,
//!   `k < 12`, `z < m - 1`, numbered consecutively in row-major order of
//!   that tuple after dropping the non-fabric qubits (`w = 0, k < 2` and
//!   `w = m - 1, k >= 10`).
//! * Zephyr(m), `t = 4`: `(((u * (2m + 1) + w) * t + k) * 2 + j) * m + z`.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Boundary, IsingModel};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("unsupported topology kind '{0}'")]
    UnsupportedKind(String),
    #[error("invalid size m = {m} for {kind}")]
    InvalidSize { kind: TopologyKind, m: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("graph metrics need at least two nodes")]
    Singleton,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Undirected simple graph with a sorted edge list and optional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    pub node_weights: Option<Vec<f64>>,
    pub edge_weights: Option<Vec<f64>>,
}

impl Graph {
    /// Edges are normalized to `u < v`, sorted and deduplicated.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TopologyError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(TopologyError::InvalidGraph(format!("self-loop at {a}")));
            }
            if a >= n_nodes || b >= n_nodes {
                return Err(TopologyError::InvalidGraph(format!(
                    "edge ({a}, {b}) outside {n_nodes} nodes"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self::from_sorted(n_nodes, set.into_iter().collect()))
    }

    fn from_sorted(n_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            n_nodes,
            edges,
            adjacency,
            node_weights: None,
            edge_weights: None,
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Self::from_sorted(n, edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n_nodes && self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n_nodes == 0 {
            return true;
        }
        let mut seen = vec![false; self.n_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n_nodes
    }

    /// Header `kind m |V| |E|` followed by one `u v` line per edge.
    pub fn to_edge_list(&self, kind: &str, m: usize) -> String {
        let mut out = format!("{kind} {m} {} {}\n", self.n_nodes, self.edges.len());
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// Returns the header's kind and size along with the graph.
    pub fn from_edge_list(text: &str) -> Result<(String, usize, Graph), TopologyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(TopologyError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(TopologyError::Parse {
                line: hl,
                msg: "header must be 'kind m |V| |E|'".into(),
            });
        }
        let num = |s: &str, line: usize| {
            s.parse::<usize>().map_err(|e| TopologyError::Parse {
                line,
                msg: format!("'{s}': {e}"),
            })
        };
        let m = num(fields[1], hl)?;
        let n = num(fields[2], hl)?;
        let e = num(fields[3], hl)?;
        let mut edges = Vec::with_capacity(e);
        for (ln, line) in lines {
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(TopologyError::Parse {
                    line: ln,
                    msg: "expected 'u v'".into(),
                });
            };
            edges.push((num(a, ln)?, num(b, ln)?));
        }
        let g = Graph::new(n, edges)?;
        if g.n_edges() != e {
            return Err(TopologyError::Parse {
                line: hl,
                msg: format!("header declares {e} edges, found {}", g.n_edges()),
            });
        }
        Ok((fields[0].to_string(), m, g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Chimera,
    Pegasus,
    Zephyr,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 3] = [TopologyKind::Chimera, TopologyKind::Pegasus, TopologyKind::Zephyr];

    pub fn max_degree(self) -> usize {
        match self {
            TopologyKind::Chimera => 6,
            TopologyKind::Pegasus => 15,
            TopologyKind::Zephyr => 20,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Chimera => "chimera",
            TopologyKind::Pegasus => "pegasus",
            TopologyKind::Zephyr => "zephyr",
        }
    }
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chimera" => Ok(TopologyKind::Chimera),
            "pegasus" => Ok(TopologyKind::Pegasus),
            "zephyr" => Ok(TopologyKind::Zephyr),
            _ => Err(TopologyError::UnsupportedKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardwareGraph {
    pub kind: TopologyKind,
    pub m: usize,
    pub graph: Graph,
    /// False for qubits removed by a blocklist.
    pub available: Vec<bool>,
}

impl HardwareGraph {
    pub fn n_available(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }

    /// Removes the listed qubits (with their couplers) and couplers.
    pub fn with_blocklist(&self, blocklist: &Blocklist) -> Result<HardwareGraph, TopologyError> {
        let n = self.graph.n_nodes();
        if let Some(&q) = blocklist.nodes.iter().find(|&&q| q >= n) {
            return Err(TopologyError::InvalidGraph(format!(
                "blocked qubit {q} outside {n} nodes"
            )));
        }
        let nodes: HashSet<usize> = blocklist.nodes.iter().copied().collect();
        let edges: HashSet<(usize, usize)> = blocklist.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let kept = self
            .graph
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| !nodes.contains(&a) && !nodes.contains(&b) && !edges.contains(&(a, b)))
            .collect();
        let mut available = self.available.clone();
        for &q in &nodes {
            available[q] = false;
        }
        Ok(HardwareGraph {
            kind: self.kind,
            m: self.m,
            graph: Graph::from_sorted(n, kept),
            available,
        })
    }

    pub fn check_degree_bound(&self) -> Result<(), TopologyError> {
        let d = self.graph.max_degree();
        if d > self.kind.max_degree() {
            return Err(TopologyError::InvalidGraph(format!(
                "{} max degree {d} exceeds {}",
                self.kind,
                self.kind.max_degree()
            )));
        }
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        self.graph.to_edge_list(self.kind.name(), self.m)
    }

    pub fn from_edge_list(text: &str) -> Result<HardwareGraph, TopologyError> {
        let (kind, m, graph) = Graph::from_edge_list(text)?;
        let kind: TopologyKind = kind.parse()?;
        let hw = HardwareGraph {
            kind,
            m,
            available: vec![true; graph.n_nodes()],
            graph,
        };
        hw.check_degree_bound()?;
        Ok(hw)
    }
}

/// Qubits and couplers to remove from an ideal hardware graph. Text form:
/// one qubit per line, or `u v` for a coupler; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Blocklist {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl Blocklist {
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut out = Blocklist::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
            match nums.as_deref() {
                Ok([q]) => out.nodes.push(*q),
                Ok([a, b]) => out.edges.push((*a, *b)),
                _ => {
                    return Err(TopologyError::Parse {
                        line: i + 1,
                        msg: format!("expected a qubit or a coupler, got '{line}'"),
                    })
                }
            }
        }
        Ok(out)
    }
}

pub fn build_hardware(kind: TopologyKind, m: usize) -> Result<HardwareGraph, TopologyError> {
    let graph = match kind {
        TopologyKind::Chimera if m >= 1 => chimera(m),
        TopologyKind::Pegasus if m >= 2 => pegasus(m),
        TopologyKind::Zephyr if m >= 1 => zephyr(m, 4),
        _ => return Err(TopologyError::InvalidSize { kind, m }),
    };
    Ok(HardwareGraph {
        kind,
        m,
        available: vec![true; graph.n_nodes()],
        graph,
    })
}

fn chimera(m: usize) -> Graph {
    let idx = |r: usize, c: usize, u: usize, k: usize| ((r * m + c) * 2 + u) * 4 + k;
    let mut edges = Vec::with_capacity(16 * m * m + 8 * m * (m - 1));
    for r in 0..m {
        for c in 0..m {
            for k in 0..4 {
                for kk in 0..4 {
                    edges.push((idx(r, c, 0, k), idx(r, c, 1, kk)));
                }
                if r + 1 < m {
                    edges.push((idx(r, c, 0, k), idx(r + 1, c, 0, k)));
                }
                if c + 1 < m {
                    edges.push((idx(r, c, 1, k), idx(r, c + 1, 1, k)));
                }
            }
        }
    }
    Graph::new(8 * m * m, edges).expect("chimera edges are valid")
}

fn pegasus(m: usize) -> Graph {
    const OFF0: [usize; 12] = [2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6];
    const OFF1: [usize; 12] = [6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10];
    let zs = m - 1;
    let coord = |u: usize, w: usize, k: usize, z: usize| ((u * m + w) * 12 + k) * zs + z;
    let fabric = |w: usize, k: usize| !(w == 0 && k < 2) && !(w == m - 1 && k >= 10);

    let total = 2 * m * 12 * zs;
    let mut compact = vec![usize::MAX; total];
    let mut next = 0;
    for u in 0..2 {
        for w in 0..m {
            for k in 0..12 {
                for z in 0..zs {
                    if fabric(w, k) {
                        compact[coord(u, w, k, z)] = next;
                        next += 1;
                    }
                }
            }
        }
    }

    let mut raw = Vec::new();
    for u in 0..2 {
        for w in 0..m {
            for k in 0..12 {
                for z in 0..zs.saturating_sub(1) {
                    raw.push((coord(u, w, k, z), coord(u, w, k, z + 1)));
                }
            }
            for k in (0..12).step_by(2) {
                for z in 0..zs {
                    raw.push((coord(u, w, k, z), coord(u, w, k + 1, z)));
                }
            }
        }
    }
    for w in 0..m {
        for kk in 0..12 {
            let lo = if w > 0 { 0 } else { OFF1[kk] };
            let hi = if w < m - 1 { 12 } else { OFF1[kk] };
            for k in lo..hi {
                for z in 0..zs {
                    let w2 = z + usize::from(kk < OFF0[k]);
                    let z2 = w as isize - isize::from(k < OFF1[kk]);
                    if w2 >= m || z2 < 0 || z2 as usize >= zs {
                        continue;
                    }
                    raw.push((coord(0, w, k, z), coord(1, w2, kk, z2 as usize)));
                }
            }
        }
    }
    let edges = raw
        .into_iter()
        .map(|(a, b)| (compact[a], compact[b]))
        .filter(|&(a, b)| a != usize::MAX && b != usize::MAX);
    Graph::new(next, edges).expect("pegasus edges are valid")
}

fn zephyr(m: usize, t: usize) -> Graph {
    let mm = 2 * m + 1;
    let idx = |u: usize, w: usize, k: usize, j: usize, z: usize| (((u * mm + w) * t + k) * 2 + j) * m + z;
    let mut edges = Vec::new();
    for u in 0..2 {
        for w in 0..mm {
            for k in 0..t {
                for j in 0..2 {
                    for z in 0..m.saturating_sub(1) {
                        edges.push((idx(u, w, k, j, z), idx(u, w, k, j, z + 1)));
                    }
                }
                for a in 0..2 {
                    for z in a..m {
                        edges.push((idx(u, w, k, 0, z), idx(u, w, k, 1, z - a)));
                    }
                }
            }
        }
    }
    for w in 0..m {
        for z in 0..m {
            for h in 0..t {
                for k in 0..t {
                    for i in 0..2 {
                        for j in 0..2 {
                            for a in 0..2 {
                                for b in 0..2 {
                                    let w0 = 2 * w + 1 + a * (2 * i) - a;
                                    let w1 = 2 * z + 1 + b * (2 * j) - b;
                                    edges.push((idx(0, w0, k, j, z), idx(1, w1, h, i, w)));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Graph::new(4 * t * m * mm, edges).expect("zephyr edges are valid")
}

/// One node per variable weighted by `h`, one edge per nonzero `J`.
pub fn objective_graph(model: &IsingModel) -> Graph {
    let (edges, weights): (Vec<_>, Vec<_>) = model
        .j
        .iter()
        .filter(|(_, &v)| v != 0.0)
        .map(|(&(a, b), &v)| ((a.min(b), a.max(b)), v))
        .unzip();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&k| edges[k]);
    let mut g = Graph::from_sorted(model.n_vars, order.iter().map(|&k| edges[k]).collect());
    g.node_weights = Some(model.h.clone());
    g.edge_weights = Some(order.iter().map(|&k| weights[k]).collect());
    g
}

pub fn marker_intersection_graph(markers: usize) -> Result<Graph, TopologyError> {
    if markers == 0 {
        return Err(TopologyError::InvalidParameters("M must be at least 1".into()));
    }
    Ok(Graph::complete(markers))
}

/// Node `n` is adjacent to `n + l` for `l = 1..=L`, wrapping modulo `N` when
/// periodic.
pub fn nucleosome_intersection_graph(
    nucleosomes: usize,
    max_distance: usize,
    boundary: Boundary,
) -> Result<Graph, TopologyError> {
    if nucleosomes == 0 || max_distance >= nucleosomes {
        return Err(TopologyError::InvalidParameters(format!(
            "need L < N, got N = {nucleosomes}, L = {max_distance}"
        )));
    }
    if boundary == Boundary::Periodic && 2 * max_distance >= nucleosomes {
        log::warn!("2L >= N: periodic nucleosome graph merges duplicate edges and is not 2L-regular");
    }
    let mut edges = Vec::new();
    for n in 0..nucleosomes {
        for l in 1..=max_distance {
            match boundary {
                Boundary::Open if n + l < nucleosomes => edges.push((n, n + l)),
                Boundary::Periodic => edges.push((n, (n + l) % nucleosomes)),
                _ => {}
            }
        }
    }
    Graph::new(nucleosomes, edges)
}

/// Product node `(a, b)` with `a` in `g1` and `b` in `g2` gets index
/// `b * |V1| + a`, so marker graph times nucleosome graph lines up with the
/// model's variable index `n * M + m`.
pub fn cartesian_product(g1: &Graph, g2: &Graph) -> Graph {
    let n1 = g1.n_nodes();
    let mut edges = Vec::with_capacity(g1.n_edges() * g2.n_nodes() + g2.n_edges() * n1);
    for b in 0..g2.n_nodes() {
        for &(a1, a2) in g1.edges() {
            edges.push((b * n1 + a1, b * n1 + a2));
        }
    }
    for &(b1, b2) in g2.edges() {
        for a in 0..n1 {
            let (x, y) = (b1 * n1 + a, b2 * n1 + a);
            edges.push((x.min(y), x.max(y)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::from_sorted(n1 * g2.n_nodes(), edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub nodes: usize,
    pub edges: usize,
    pub avg_degree: f64,
    pub gamma: f64,
}

pub fn metrics(g: &Graph) -> Result<GraphMetrics, TopologyError> {
    let v = g.n_nodes();
    if v < 2 {
        return Err(TopologyError::Singleton);
    }
    let e = g.n_edges() as f64;
    Ok(GraphMetrics {
        nodes: v,
        edges: g.n_edges(),
        avg_degree: 2.0 * e / v as f64,
        gamma: 2.0 * e / (v as f64 * (v as f64 - 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_ising, CartesianParams, ModelShape};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn chimera_unit_cell_is_k44() {
        let hw = build_hardware(TopologyKind::Chimera, 1).unwrap();
        assert_eq!(hw.graph.n_nodes(), 8);
        assert_eq!(hw.graph.n_edges(), 16);
        for a in 0..4 {
            for b in 4..8 {
                assert!(hw.graph.has_edge(a, b));
            }
        }
    }

    #[test]
    fn chimera_counts() {
        for m in 1..6 {
            let hw = build_hardware(TopologyKind::Chimera, m).unwrap();
            assert_eq!(hw.graph.n_nodes(), 8 * m * m);
            assert_eq!(hw.graph.n_edges(), 16 * m * m + 8 * m * (m - 1));
            hw.check_degree_bound().unwrap();
        }
        assert_eq!(build_hardware(TopologyKind::Chimera, 16).unwrap().graph.max_degree(), 6);
    }

    // Published fabric sizes: P6 has 680 qubits, P16 5640 qubits and 40484 couplers.
    #[test]
    fn pegasus_fixtures() {
        let p6 = build_hardware(TopologyKind::Pegasus, 6).unwrap();
        assert_eq!(p6.graph.n_nodes(), 680);
        let p16 = build_hardware(TopologyKind::Pegasus, 16).unwrap();
        assert_eq!(p16.graph.n_nodes(), 5640);
        assert_eq!(p16.graph.n_edges(), 40484);
        assert_eq!(p16.graph.max_degree(), 15);
        assert!(p16.graph.is_connected());
        for m in 2..8 {
            let g = build_hardware(TopologyKind::Pegasus, m).unwrap();
            assert_eq!(g.graph.n_nodes(), 24 * m * (m - 1) - 8 * (m - 1));
        }
    }

    #[test]
    fn zephyr_fixtures() {
        for m in 1..6 {
            let z = build_hardware(TopologyKind::Zephyr, m).unwrap();
            assert_eq!(z.graph.n_nodes(), 16 * m * (2 * m + 1));
            // 16 m^2 t^2 internal, 4 (2m+1) t (m-1) external, 2 (2m+1) t (2m-1) odd; t = 4
            let e = 256 * m * m + 16 * (2 * m + 1) * (m - 1) + 8 * (2 * m + 1) * (2 * m - 1);
            assert_eq!(z.graph.n_edges(), e, "m = {m}");
            z.check_degree_bound().unwrap();
        }
        let z4 = build_hardware(TopologyKind::Zephyr, 4).unwrap();
        assert_eq!(z4.graph.n_nodes(), 576);
        assert_eq!(z4.graph.max_degree(), 20);
        assert!(z4.graph.is_connected());
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in TopologyKind::ALL {
            assert_eq!(build_hardware(kind, 3).unwrap(), build_hardware(kind, 3).unwrap());
        }
    }

    #[test]
    fn bad_sizes_and_kinds() {
        assert!(build_hardware(TopologyKind::Chimera, 0).is_err());
        assert!(build_hardware(TopologyKind::Pegasus, 1).is_err());
        assert!("king".parse::<TopologyKind>().is_err());
        assert_eq!("Pegasus".parse::<TopologyKind>().unwrap(), TopologyKind::Pegasus);
    }

    #[test]
    fn intersection_graphs() {
        assert_eq!(marker_intersection_graph(3).unwrap().n_edges(), 3);
        assert_eq!(marker_intersection_graph(12).unwrap().n_edges(), 66);
        let g = nucleosome_intersection_graph(25, 5, Boundary::Periodic).unwrap();
        assert_eq!(g.n_edges(), 125);
        assert!((0..25).all(|v| g.degree(v) == 10));
        let c5 = nucleosome_intersection_graph(5, 1, Boundary::Periodic).unwrap();
        assert_eq!(c5.edges(), &[(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]);
        let p5 = nucleosome_intersection_graph(5, 1, Boundary::Open).unwrap();
        assert_eq!(p5.edges(), &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(nucleosome_intersection_graph(5, 5, Boundary::Open).is_err());
    }

    #[test]
    fn product_examples() {
        let k2 = Graph::complete(2);
        let sq = cartesian_product(&k2, &k2);
        assert_eq!(sq.n_edges(), 4);
        assert!((0..4).all(|v| sq.degree(v) == 2));
        let g = nucleosome_intersection_graph(7, 2, Boundary::Open).unwrap();
        let single = Graph::new(1, []).unwrap();
        assert_eq!(cartesian_product(&g, &single).edges(), g.edges());
    }

    #[test]
    fn full_model_graph_is_the_product() {
        let shape = ModelShape::new(12, 25, 5, Boundary::Periodic).unwrap();
        let mut p = CartesianParams::zeros(12, 5);
        for v in p.values_mut() {
            *v = 0.5;
        }
        let og = objective_graph(&build_ising(&shape, &p).unwrap());
        assert_eq!(og.n_nodes(), 300);
        assert_eq!(og.n_edges(), 3150);
        let prod = cartesian_product(
            &marker_intersection_graph(12).unwrap(),
            &nucleosome_intersection_graph(25, 5, Boundary::Periodic).unwrap(),
        );
        assert_eq!(og.edges(), prod.edges());
        let gm = metrics(&og).unwrap();
        assert!((gm.gamma - 2.0 * 3150.0 / (300.0 * 299.0)).abs() < 1e-15);
        assert!((gm.gamma - 0.0702).abs() < 5e-4);
    }

    #[test]
    fn metric_examples() {
        let k4 = metrics(&Graph::complete(4)).unwrap();
        assert_eq!((k4.avg_degree, k4.gamma), (3.0, 1.0));
        let c = nucleosome_intersection_graph(9, 1, Boundary::Periodic).unwrap();
        assert_eq!(metrics(&c).unwrap().avg_degree, 2.0);
        assert_eq!(metrics(&Graph::complete(1)), Err(TopologyError::Singleton));
    }

    #[test]
    fn edgeless_objective_graph() {
        let m = IsingModel::new(vec![1.0, 2.0], [], 0.0).unwrap();
        let g = objective_graph(&m);
        assert_eq!((g.n_nodes(), g.n_edges()), (2, 0));
        assert_eq!(g.node_weights.as_deref(), Some(&[1.0, 2.0][..]));
    }

    #[test]
    fn pruned_graph_is_subgraph() {
        let shape = ModelShape::new(3, 8, 2, Boundary::Open).unwrap();
        let p = CartesianParams::random(3, 2, 1.0, &mut rng_from_seed(4));
        let full = build_ising(&shape, &p).unwrap();
        let pruned = full.apply_threshold(0.2).unwrap();
        let (a, b) = (objective_graph(&full), objective_graph(&pruned));
        assert!(b.edges().iter().all(|e| a.edges().binary_search(e).is_ok()));
    }

    #[test]
    fn edge_list_round_trip_and_blocklist() {
        let hw = build_hardware(TopologyKind::Chimera, 2).unwrap();
        let back = HardwareGraph::from_edge_list(&hw.to_edge_list()).unwrap();
        assert_eq!(back, hw);
        assert!(Graph::from_edge_list("chimera 1 8 3\n0 4\n").is_err());
        let bl = Blocklist::parse("# dead\n0\n9 13\n").unwrap();
        let cut = hw.with_blocklist(&bl).unwrap();
        assert!(!cut.available[0] && cut.graph.degree(0) == 0);
        assert!(!cut.graph.has_edge(9, 13));
        assert_eq!(cut.graph.n_edges(), hw.graph.n_edges() - hw.graph.degree(0) - 1);
        assert!(hw
            .with_blocklist(&Blocklist {
                nodes: vec![99],
                edges: vec![]
            })
            .is_err());
    }

    proptest! {
        #[test]
        fn product_edge_count(n1 in 1usize..6, n2 in 2usize..9, l in 1usize..3) {
            prop_assume!(l < n2);
            let g1 = Graph::complete(n1);
            let g2 = nucleosome_intersection_graph(n2, l, Boundary::Open).unwrap();
            let p = cartesian_product(&g1, &g2);
            prop_assert_eq!(p.n_edges(), g1.n_edges() * n2 + g2.n_edges() * n1);
        }

        #[test]
        fn gamma_is_one_iff_complete(n in 2usize..10, drop in 0usize..3) {
            let full = Graph::complete(n);
            let edges: Vec<_> = full.edges().iter().copied().skip(drop).collect();
            let g = Graph::new(n, edges).unwrap();
            let gm = metrics(&g).unwrap();
            prop_assert!(gm.gamma <= 1.0);
            prop_assert_eq!(gm.gamma == 1.0, drop == 0);
        }
    }
}
