//! Rip-up and reroute search for minor embeddings.
//!
//! Chains are grown as Steiner trees towards the chains of placed neighbours
//! over qubit weights that grow exponentially with the number of chains
//! already holding a qubit. Overfull qubits are cleared by repeated passes
//! that tear chains out and route them again, and a final phase shortens the
//! chains of a valid embedding. Neighbouring chains also trade the dangling
//! ends of the paths that join them, which keeps chains short and clears
//! overlaps at the joins.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::Rng as ChainRng;
use crate::topology::{Graph, HardwareGraph};

const NONE: usize = usize::MAX;
const FAR: i64 = i64::MAX;

/// Heap key breaking distance ties by a random rank, carrying the qubit.
#[inline]
fn key(rank: u32, q: usize) -> u64 {
    (u64::from(rank) << 32) | q as u64
}

#[inline]
fn qubit_of(key: u64) -> usize {
    (key & 0xffff_ffff) as usize
}

#[derive(Debug, Clone, Copy)]
struct Node {
    qubit: usize,
    parent: usize,
    /// Children, plus links anchored here, plus one for the root's self-parent.
    refs: u32,
}

/// A chain kept as a rooted tree. A qubit with no references is a leaf
/// that can be dropped without disconnecting the chain or losing a link.
#[derive(Debug, Clone, Default)]
struct Chain {
    nodes: Vec<Node>,
    /// `(variable, qubit)`: where this chain meets the chain of `variable`,
    /// with the entry for its own label marking the root.
    links: Vec<(usize, usize)>,
}

impl Chain {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn find(&self, q: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.qubit == q)
    }

    fn contains(&self, q: usize) -> bool {
        self.find(q).is_some()
    }

    fn node_mut(&mut self, q: usize) -> &mut Node {
        let i = self.find(q).expect("qubit in chain");
        &mut self.nodes[i]
    }

    fn link(&self, x: usize) -> Option<usize> {
        self.links.iter().find(|l| l.0 == x).map(|l| l.1)
    }

    fn set_link(&mut self, x: usize, q: usize) {
        debug_assert!(self.link(x).is_none());
        self.links.push((x, q));
        self.node_mut(q).refs += 1;
    }

    fn drop_link(&mut self, x: usize) -> Option<usize> {
        let i = self.links.iter().position(|l| l.0 == x)?;
        let (_, q) = self.links.swap_remove(i);
        self.node_mut(q).refs -= 1;
        Some(q)
    }

    fn set_root(&mut self, label: usize, q: usize, fill: &mut [u32]) {
        self.links.push((label, q));
        self.nodes.push(Node {
            qubit: q,
            parent: q,
            refs: 2,
        });
        fill[q] += 1;
    }

    fn clear(&mut self, fill: &mut [u32]) {
        for n in &self.nodes {
            fill[n.qubit] -= 1;
        }
        self.nodes.clear();
        self.links.clear();
    }

    fn add_leaf(&mut self, q: usize, parent: usize, fill: &mut [u32]) {
        self.nodes.push(Node {
            qubit: q,
            parent,
            refs: 0,
        });
        fill[q] += 1;
        self.node_mut(parent).refs += 1;
    }

    /// Drops `q` if it is a leaf and returns its parent, else returns `q`.
    fn trim_leaf(&mut self, q: usize, fill: &mut [u32]) -> usize {
        let i = self.find(q).expect("qubit in chain");
        let n = self.nodes[i];
        if n.refs != 0 {
            return q;
        }
        fill[q] -= 1;
        self.nodes.swap_remove(i);
        self.node_mut(n.parent).refs -= 1;
        n.parent
    }

    /// Drops leaves from `q` upwards; returns the first qubit kept.
    fn trim_branch(&mut self, mut q: usize, fill: &mut [u32]) -> usize {
        let mut p = self.trim_leaf(q, fill);
        while p != q {
            q = p;
            p = self.trim_leaf(q, fill);
        }
        q
    }
}

#[derive(Debug, Default)]
struct Frozen {
    nodes: Vec<Node>,
    links: Vec<(usize, usize)>,
    /// Links other chains held to the frozen one.
    foreign: Vec<(usize, usize)>,
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (x, y) = v.split_at_mut(b);
        (&mut x[a], &mut y[0])
    } else {
        let (x, y) = v.split_at_mut(a);
        (&mut y[0], &mut x[b])
    }
}

#[derive(Debug, Clone)]
struct State {
    chains: Vec<Chain>,
    fill: Vec<u32>,
}

impl State {
    fn new(n_vars: usize, n_qubits: usize) -> Self {
        Self {
            chains: vec![Chain::default(); n_vars],
            fill: vec![0; n_qubits],
        }
    }

    fn max_fill(&self) -> u32 {
        self.fill.iter().copied().max().unwrap_or(0)
    }

    fn tear_out(&mut self, u: usize, nbrs: &[usize]) {
        self.chains[u].clear(&mut self.fill);
        for &v in nbrs {
            self.chains[v].drop_link(u);
        }
    }

    fn freeze_out(&mut self, u: usize, frozen: &mut Frozen) -> usize {
        frozen.foreign.clear();
        let links = std::mem::take(&mut self.chains[u].links);
        for &(v, _) in &links {
            if v != u {
                if let Some(q) = self.chains[v].drop_link(u) {
                    frozen.foreign.push((v, q));
                }
            }
        }
        frozen.links = links;
        for n in &self.chains[u].nodes {
            self.fill[n.qubit] -= 1;
        }
        frozen.nodes = std::mem::take(&mut self.chains[u].nodes);
        frozen.nodes.len()
    }

    fn thaw_back(&mut self, u: usize, frozen: &mut Frozen) {
        self.chains[u].clear(&mut self.fill);
        let c = &mut self.chains[u];
        c.nodes = std::mem::take(&mut frozen.nodes);
        c.links = std::mem::take(&mut frozen.links);
        for n in &c.nodes {
            self.fill[n.qubit] += 1;
        }
        for (v, q) in frozen.foreign.drain(..) {
            self.chains[v].set_link(u, q);
        }
    }

    /// Chain `this` takes over the dangling end of `other`'s path towards it,
    /// stopping once it holds `cap` qubits (0 for no cap).
    fn steal(&mut self, this: usize, other: usize, cap: usize) {
        let (a, b) = pair_mut(&mut self.chains, this, other);
        let fill = &mut self.fill;
        let (Some(mut q), Some(mut p)) = (a.link(other), b.link(this)) else {
            return;
        };
        a.drop_link(other);
        b.drop_link(this);
        while cap == 0 || a.len() < cap {
            let r = b.trim_leaf(p, fill);
            if r == p {
                break;
            }
            if !a.contains(p) {
                a.add_leaf(p, q, fill);
            } else if p != q {
                a.node_mut(p).refs += 1;
                a.trim_branch(q, fill);
                a.node_mut(p).refs -= 1;
            }
            q = p;
            p = r;
        }
        a.set_link(other, q);
        b.set_link(this, p);
    }

    fn steal_all(&mut self, u: usize, nbrs: &[usize]) {
        for &v in nbrs {
            if self.chains[u].link(v).is_some() && self.chains[v].link(u).is_some() {
                self.steal(u, v, 0);
            }
        }
    }

    fn flip_back(&mut self, u: usize, nbrs: &[usize], cap: usize) {
        for &v in nbrs {
            if !self.chains[v].is_empty() {
                self.steal(v, u, cap);
            }
        }
    }

    /// Extends chain `u` from `q` along `parent` until it meets chain `v`.
    fn link_path(&mut self, u: usize, v: usize, mut q: usize, parent: &[usize]) {
        let (a, b) = pair_mut(&mut self.chains, u, v);
        let fill = &mut self.fill;
        let mut p = parent[q];
        if p == NONE {
            p = q;
        } else {
            while !b.contains(p) {
                if a.contains(p) {
                    a.trim_branch(q, fill);
                } else {
                    a.add_leaf(p, q, fill);
                }
                q = p;
                p = parent[p];
            }
        }
        a.set_link(v, q);
        b.set_link(u, p);
    }

    /// Overlap statistics while qubits are shared (counts of qubits by fill,
    /// from fill 2 up), else chain-length statistics (counts by length).
    /// Returns whether the chains are disjoint.
    fn statistics(&self, stats: &mut Vec<usize>) -> bool {
        let w = self.max_fill() as usize;
        if w > 1 {
            stats.clear();
            stats.resize(w - 1, 0);
            for &f in &self.fill {
                if f > 1 {
                    stats[f as usize - 2] += 1;
                }
            }
            return false;
        }
        let longest = self.chains.iter().map(Chain::len).max().unwrap_or(0);
        stats.clear();
        stats.resize(longest + 1, 0);
        for c in &self.chains {
            stats[c.len()] += 1;
        }
        true
    }
}

/// Per-neighbour scratch for distance searches.
struct Scratch {
    dist: Vec<i64>,
    parent: Vec<usize>,
    visited: Vec<bool>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![FAR; n],
            parent: vec![NONE; n],
            visited: vec![false; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    Failed,
    Stalled,
    Improved,
}

#[derive(Debug, Clone, Copy)]
pub(super) struct Limits {
    pub patience: usize,
    pub chain_patience: usize,
}

pub(super) struct Search<'a> {
    target: &'a Graph,
    available: &'a [bool],
    nbrs: Vec<Vec<usize>>,
    n_qubits: usize,
    /// Bits left for path costs once the worst-case sum is accounted for.
    headroom: f64,
    weight_table: Vec<i64>,
    qubit_weight: Vec<i64>,
    total: Vec<i64>,
    scratch: Vec<Scratch>,
    heap: BinaryHeap<Reverse<(i64, u64)>>,
    /// Per-variable random tie-break ranks for equal-distance qubits.
    ranks: Vec<Vec<u32>>,
    frozen: Frozen,
    order: Vec<usize>,
    weight_bound: u32,
    default_bound: u32,
    embedded: bool,
    desperate: bool,
    improved: bool,
    target_chainsize: usize,
    pushback: usize,
    best: State,
    best_stats: Vec<usize>,
    tmp_stats: Vec<usize>,
}

impl<'a> Search<'a> {
    pub(super) fn new(source: &Graph, target: &'a HardwareGraph, rng: &mut ChainRng) -> Self {
        let n = target.graph.n_nodes();
        let n_vars = source.n_nodes();
        let nbrs: Vec<Vec<usize>> = (0..n_vars).map(|v| source.neighbors(v).to_vec()).collect();
        let max_deg = nbrs.iter().map(Vec::len).max().unwrap_or(0);
        let margin = (max_deg.max(1) * n.max(1)) as f64;
        let headroom = 63.0 - margin.log2();
        let mut base: Vec<u32> = (0..n as u32).collect();
        let ranks = (0..n_vars)
            .map(|_| {
                base.shuffle(rng);
                base.clone()
            })
            .collect();
        let default_bound = headroom.floor().clamp(2.0, 63.0) as u32;
        Self {
            target: &target.graph,
            available: &target.available,
            nbrs,
            n_qubits: n,
            headroom,
            weight_table: Vec::new(),
            qubit_weight: vec![0; n],
            total: vec![0; n],
            scratch: (0..max_deg).map(|_| Scratch::new(n)).collect(),
            heap: BinaryHeap::new(),
            ranks,
            frozen: Frozen::default(),
            order: Vec::new(),
            weight_bound: default_bound,
            default_bound,
            embedded: false,
            desperate: false,
            improved: false,
            target_chainsize: 0,
            pushback: 0,
            best: State::new(n_vars, n),
            best_stats: Vec::new(),
            tmp_stats: Vec::new(),
        }
    }

    fn n_vars(&self) -> usize {
        self.nbrs.len()
    }

    /// Weights `base^fill` up to the current worst fill, sized so that no path
    /// sum can overflow; fuller qubits are unreachable.
    fn compute_weights(&mut self, state: &State) {
        let w = state.max_fill().min(63) as usize;
        let log2base = if w == 0 { 1.0 } else { self.headroom / w as f64 };
        let base = log2base.exp2();
        self.weight_table.clear();
        let mut power = 1.0f64;
        for _ in 0..=w {
            self.weight_table.push(power.min(FAR as f64 / 2.0) as i64);
            power *= base;
        }
        for q in 0..self.n_qubits {
            self.qubit_weight[q] = if self.available[q] {
                self.weight_table.get(state.fill[q] as usize).copied().unwrap_or(FAR)
            } else {
                FAR
            };
        }
    }

    fn blocked(&self, state: &State, q: usize) -> bool {
        !self.available[q] || state.fill[q] >= self.weight_bound
    }

    /// Distances from chain `v` into slot `slot`. Qubits are settled when
    /// first reached, ties going to the lower random rank.
    fn distances_from(&mut self, state: &State, v: usize, slot: usize) {
        let s = &mut self.scratch[slot];
        s.visited.fill(false);
        let rank = &self.ranks[v];
        self.heap.clear();
        for n in &state.chains[v].nodes {
            self.heap.push(Reverse((0, key(rank[n.qubit], n.qubit))));
            s.parent[n.qubit] = NONE;
            s.visited[n.qubit] = true;
        }
        while let Some(Reverse((d, k))) = self.heap.pop() {
            let x = qubit_of(k);
            s.dist[x] = d;
            for &p in self.target.neighbors(x) {
                if s.visited[p] {
                    continue;
                }
                s.visited[p] = true;
                if !self.available[p] || state.fill[p] >= self.weight_bound {
                    s.dist[p] = FAR;
                } else {
                    s.parent[p] = x;
                    self.heap
                        .push(Reverse((d.saturating_add(self.qubit_weight[p]), key(rank[p], p))));
                }
            }
        }
    }

    fn accumulate(&mut self, state: &State, v: usize, slot: usize) {
        for n in &state.chains[v].nodes {
            let q = n.qubit;
            let w = self.qubit_weight[q];
            if self.total[q] != FAR && w != FAR && w > 0 && !self.blocked(state, q) {
                self.total[q] = self.total[q].saturating_add(w);
            } else {
                self.total[q] = FAR;
            }
        }
        let s = &self.scratch[slot];
        for q in 0..self.n_qubits {
            let ok = s.visited[q]
                && self.total[q] != FAR
                && s.dist[q] != FAR
                && self.available[q]
                && state.fill[q] < self.weight_bound;
            self.total[q] = if ok {
                self.total[q].saturating_add(s.dist[q])
            } else {
                FAR
            };
        }
    }

    fn root_costs(&mut self, state: &State, u: usize) {
        self.total.fill(0);
        self.compute_weights(state);
        let mut any = false;
        for slot in 0..self.nbrs[u].len() {
            let v = self.nbrs[u][slot];
            if state.chains[v].is_empty() {
                continue;
            }
            any = true;
            self.distances_from(state, v, slot);
            self.accumulate(state, v, slot);
        }
        if !any {
            for q in 0..self.n_qubits {
                self.total[q] = if self.blocked(state, q) {
                    FAR
                } else {
                    self.qubit_weight[q]
                };
            }
        }
    }

    /// Roots the chain at `q` and joins each placed neighbour from whichever
    /// branch point of the growing tree is nearest to it.
    fn construct(&mut self, state: &mut State, u: usize, q: usize) {
        state.chains[u].set_root(u, q, &mut state.fill);
        for slot in 0..self.nbrs[u].len() {
            let v = self.nbrs[u][slot];
            if state.chains[v].is_empty() {
                continue;
            }
            let s = &self.scratch[slot];
            let at = |p: usize| if s.visited[p] { s.dist[p] } else { FAR };
            let mut qv = q;
            let mut dq = at(q);
            for n in &state.chains[u].nodes {
                if n.refs > 1 && at(n.qubit) < dq {
                    dq = at(n.qubit);
                    qv = n.qubit;
                }
            }
            state.link_path(u, v, qv, &s.parent);
        }
    }

    fn find_chain_at(&mut self, state: &mut State, u: usize, cap: usize, rng: &mut ChainRng) -> bool {
        let nb = &mut self.nbrs[u];
        match nb.len() {
            0 | 1 => {}
            2 => {
                if rng.gen_bool(0.5) {
                    nb.swap(0, 1);
                }
            }
            len => {
                let i = rng.gen_range(0..len - 1);
                nb.swap(i, i + 1);
            }
        }
        if !nb.is_empty() {
            let v = nb[rng.gen_range(0..nb.len())];
            if v != u {
                let (a, b) = pair_mut(&mut self.ranks, u, v);
                std::mem::swap(a, b);
            }
        }
        self.root_costs(state, u);
        let lowest = self.total.iter().copied().min().unwrap_or(FAR);
        if lowest == FAR {
            return false;
        }
        let minima: Vec<usize> = (0..self.n_qubits).filter(|&q| self.total[q] == lowest).collect();
        let q0 = minima[rng.gen_range(0..minima.len())];
        self.construct(state, u, q0);
        let nbrs = std::mem::take(&mut self.nbrs[u]);
        state.flip_back(u, &nbrs, cap);
        self.nbrs[u] = nbrs;
        true
    }

    /// Once disjoint: grows unit-cost searches over free qubits from every
    /// neighbour in lockstep and keeps the first chain shorter than the
    /// current one (or the best found).
    fn find_short_chain(&mut self, state: &mut State, u: usize, cap: usize, rng: &mut ChainRng) {
        let mut frozen = std::mem::take(&mut self.frozen);
        let last_size = state.freeze_out(u, &mut frozen);
        self.nbrs[u].shuffle(rng);
        let degree = self.nbrs[u].len();
        let stop = last_size.max(cap);
        let mut best_size = usize::MAX;
        // Reached-by counts per qubit.
        self.total.fill(0);
        let mut queues: Vec<BinaryHeap<Reverse<(i64, u64)>>> = Vec::with_capacity(degree);
        for slot in 0..degree {
            let v = self.nbrs[u][slot];
            let s = &mut self.scratch[slot];
            s.visited.fill(false);
            let mut pq = BinaryHeap::new();
            for n in &state.chains[v].nodes {
                pq.push(Reverse((0, key(self.ranks[v][n.qubit], n.qubit))));
                s.parent[n.qubit] = NONE;
                s.dist[n.qubit] = 0;
                s.visited[n.qubit] = true;
            }
            queues.push(pq);
        }
        let mut done = false;
        'outer: for depth in 0..=last_size as i64 {
            for slot in 0..degree {
                let v = self.nbrs[u][slot];
                while let Some(&Reverse((d, k))) = queues[slot].peek() {
                    let q = qubit_of(k);
                    if d > depth {
                        break;
                    }
                    queues[slot].pop();
                    if state.fill[q] == 0 {
                        self.total[q] += 1;
                    }
                    if self.total[q] == degree as i64 {
                        self.construct(state, u, q);
                        let size = state.chains[u].len();
                        if size < best_size {
                            best_size = size;
                            if best_size < stop {
                                done = true;
                                break 'outer;
                            }
                            state.freeze_out(u, &mut frozen);
                        } else {
                            let nbrs = std::mem::take(&mut self.nbrs[u]);
                            state.tear_out(u, &nbrs);
                            self.nbrs[u] = nbrs;
                        }
                    }
                    let s = &mut self.scratch[slot];
                    for &p in self.target.neighbors(q) {
                        if !s.visited[p] {
                            s.visited[p] = true;
                            if self.available[p] && state.fill[p] == 0 {
                                s.parent[p] = q;
                                s.dist[p] = d + 1;
                                queues[slot].push(Reverse((d + 1, key(self.ranks[v][p], p))));
                            }
                        }
                    }
                }
            }
        }
        if !done {
            state.thaw_back(u, &mut frozen);
        }
        let nbrs = std::mem::take(&mut self.nbrs[u]);
        state.flip_back(u, &nbrs, cap);
        self.nbrs[u] = nbrs;
        self.frozen = frozen;
    }

    fn find_chain(&mut self, state: &mut State, u: usize, rng: &mut ChainRng) -> bool {
        let nbrs = std::mem::take(&mut self.nbrs[u]);
        if self.embedded || self.desperate {
            state.steal_all(u, &nbrs);
        }
        if self.embedded {
            self.nbrs[u] = nbrs;
            self.find_short_chain(state, u, self.target_chainsize, rng);
            return true;
        }
        state.tear_out(u, &nbrs);
        self.nbrs[u] = nbrs;
        self.find_chain_at(state, u, self.target_chainsize, rng)
    }

    fn check_improvement(&mut self, state: &State) -> bool {
        let mut tmp = std::mem::take(&mut self.tmp_stats);
        let disjoint = state.statistics(&mut tmp);
        let mut better = false;
        if disjoint && !self.embedded {
            better = true;
            self.embedded = true;
        }
        if !disjoint && self.embedded {
            self.tmp_stats = tmp;
            return false;
        }
        let minor_stat = *tmp.last().expect("non-empty statistics");
        let major = self.best_stats.len() as i64 - tmp.len() as i64;
        let minor = self.best_stats.last().map_or(0, |&b| b as i64 - minor_stat as i64);
        better |= major > 0 || self.best_stats.is_empty();
        if better && self.embedded {
            self.target_chainsize = tmp.len() - 1;
        }
        if !better && major == 0 && minor > 0 {
            better = true;
        }
        if !better && major == 0 && minor == 0 {
            for i in (0..tmp.len()).rev() {
                if tmp[i] != self.best_stats[i] {
                    better = tmp[i] < self.best_stats[i];
                    break;
                }
            }
        }
        if better {
            self.best.clone_from(state);
            std::mem::swap(&mut tmp, &mut self.best_stats);
        }
        self.tmp_stats = tmp;
        better
    }

    /// Orders variables by a priority-first traversal from random starts,
    /// preferring those with the most variables already ordered around them.
    fn priority_order(&mut self, rng: &mut ChainRng) -> Vec<usize> {
        let n = self.n_vars();
        let mut shuffled: Vec<usize> = (0..n).collect();
        shuffled.shuffle(rng);
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for &start in &shuffled {
            if visited[start] {
                continue;
            }
            let mut pq = BinaryHeap::new();
            pq.push(Reverse((0i64, shuffled[start], start)));
            while let Some(Reverse((_, _, x))) = pq.pop() {
                if visited[x] {
                    continue;
                }
                visited[x] = true;
                order.push(x);
                for &y in &self.nbrs[x] {
                    if !visited[y] {
                        let d = -(self.nbrs[y].iter().filter(|&&w| visited[w]).count() as i64);
                        pq.push(Reverse((d, shuffled[y], y)));
                    }
                }
            }
        }
        order
    }

    fn initialization_pass(&mut self, state: &mut State, rng: &mut ChainRng) -> bool {
        for u in self.priority_order(rng) {
            if !self.find_chain(state, u, rng) {
                return false;
            }
        }
        true
    }

    fn improve_overfill_pass(&mut self, state: &mut State, rng: &mut ChainRng) -> Pass {
        let mut improved = false;
        for u in self.priority_order(rng) {
            if !self.find_chain(state, u, rng) {
                return Pass::Failed;
            }
            improved |= self.check_improvement(state);
            if self.embedded {
                break;
            }
        }
        if improved {
            Pass::Improved
        } else {
            Pass::Stalled
        }
    }

    /// Re-routes each chain so that it never sits on a fuller qubit than it
    /// already did; a chain that cannot be re-routed keeps its old qubits.
    fn pushdown_overfill_pass(&mut self, state: &mut State, rng: &mut ChainRng) -> Pass {
        let old_bound = self.weight_bound;
        let mut improved = false;
        let mut order: Vec<usize> = (0..self.n_vars()).collect();
        order.shuffle(rng);
        for u in order {
            let nbrs = std::mem::take(&mut self.nbrs[u]);
            if self.pushback < self.n_vars() {
                state.steal_all(u, &nbrs);
                let worst = state.chains[u]
                    .nodes
                    .iter()
                    .map(|n| state.fill[n.qubit])
                    .max()
                    .unwrap_or(0);
                self.weight_bound = worst;
                let mut frozen = std::mem::take(&mut self.frozen);
                state.freeze_out(u, &mut frozen);
                self.nbrs[u] = nbrs;
                if !self.find_chain_at(state, u, 0, rng) {
                    self.pushback += 3;
                    state.thaw_back(u, &mut frozen);
                    let nbrs = std::mem::take(&mut self.nbrs[u]);
                    state.flip_back(u, &nbrs, 0);
                    self.nbrs[u] = nbrs;
                }
                self.frozen = frozen;
            } else {
                self.weight_bound = old_bound;
                state.steal_all(u, &nbrs);
                state.tear_out(u, &nbrs);
                self.nbrs[u] = nbrs;
                if !self.find_chain_at(state, u, 0, rng) {
                    self.weight_bound = old_bound;
                    return Pass::Failed;
                }
            }
            improved |= self.check_improvement(state);
            if self.embedded {
                break;
            }
        }
        self.weight_bound = old_bound;
        if improved {
            Pass::Improved
        } else {
            Pass::Stalled
        }
    }

    fn improve_chainlength_pass(&mut self, state: &mut State, rng: &mut ChainRng) -> Pass {
        let order = if self.improved && !self.order.is_empty() {
            self.order.clone()
        } else {
            self.priority_order(rng)
        };
        let mut improved = false;
        for &u in &order {
            self.find_chain(state, u, rng);
            improved |= self.check_improvement(state);
        }
        self.order = order;
        if improved {
            Pass::Improved
        } else {
            Pass::Stalled
        }
    }

    /// One attempt: place every chain, clear overlaps until progress stalls
    /// for `patience` passes, then shorten chains. Returns sorted chains.
    pub(super) fn run(&mut self, limits: Limits, last_try: bool, rng: &mut ChainRng) -> Option<Vec<Vec<usize>>> {
        let n_vars = self.n_vars();
        let mut state = State::new(n_vars, self.n_qubits);
        if n_vars == 0 {
            return Some(Vec::new());
        }
        self.weight_bound = self.default_bound;
        if !self.initialization_pass(&mut state, rng) {
            return None;
        }
        self.best_stats.clear();
        self.check_improvement(&state);
        self.improved = true;
        state.clone_from(&self.best);
        let mut patience = limits.patience;
        self.pushback = 0;
        while patience > 0 && !self.embedded {
            self.desperate = patience <= 1 || last_try;
            let pass = if self.pushback < n_vars {
                self.pushdown_overfill_pass(&mut state, rng)
            } else {
                self.pushback -= 1;
                self.improve_overfill_pass(&mut state, rng)
            };
            match pass {
                Pass::Failed => {
                    state.clone_from(&self.best);
                    patience -= 1;
                    self.improved = false;
                }
                Pass::Stalled => {
                    patience -= 1;
                    self.improved = false;
                }
                Pass::Improved => {
                    patience = limits.patience;
                    self.pushback = 0;
                    self.improved = true;
                }
            }
            log::trace!("overlap pass {pass:?}: {:?}", self.best_stats);
        }
        if !self.embedded {
            return None;
        }
        self.desperate = false;
        self.weight_bound = 1;
        state.clone_from(&self.best);
        let mut patience = limits.chain_patience;
        while patience > 0 {
            let last = state.clone();
            self.desperate = patience == 1;
            match self.improve_chainlength_pass(&mut state, rng) {
                Pass::Failed => {
                    state = last;
                    patience -= 1;
                }
                Pass::Stalled => {
                    patience -= 1;
                    self.improved = false;
                }
                Pass::Improved => {
                    patience = limits.chain_patience;
                    self.improved = true;
                }
            }
            log::trace!("chain pass: {:?}", self.best_stats);
        }
        Some(
            self.best
                .chains
                .iter()
                .map(|c| {
                    let mut qs: Vec<usize> = c.nodes.iter().map(|n| n.qubit).collect();
                    qs.sort_unstable();
                    qs
                })
                .collect(),
        )
    }
}
