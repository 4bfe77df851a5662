//! Compressed adjacency forms of QUBO and Ising models for single-variable
//! updates: the energy change of a flip comes from the variable's
//! neighbourhood only.

use rand::Rng;

use crate::model::{IsingModel, QuboModel};

#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl Csr {
    fn build<'a>(n: usize, edges: impl Iterator<Item = (&'a (usize, usize), &'a f64)> + Clone) -> Self {
        let mut degree = vec![0usize; n];
        for (&(a, b), _) in edges.clone() {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for (&(a, b), &w) in edges {
            neighbors[fill[a]] = b;
            weights[fill[a]] = w;
            fill[a] += 1;
            neighbors[fill[b]] = a;
            weights[fill[b]] = w;
            fill[b] += 1;
        }
        Self {
            offsets,
            neighbors,
            weights,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }
}

/// A model whose variables can be flipped one at a time.
pub trait FlipEnergy {
    type Var: Copy + PartialEq + std::fmt::Debug;

    fn n_vars(&self) -> usize;

    /// Energy change from flipping variable `i` of `state`.
    fn flip_delta(&self, state: &[Self::Var], i: usize) -> f64;

    fn flipped(v: Self::Var) -> Self::Var;

    fn random_var<R: Rng + ?Sized>(rng: &mut R) -> Self::Var;

    fn energy(&self, state: &[Self::Var]) -> f64;
}

#[derive(Debug, Clone)]
pub struct SparseQubo {
    linear: Vec<f64>,
    offset: f64,
    adj: Csr,
}

impl SparseQubo {
    pub fn new(model: &QuboModel) -> Self {
        Self {
            linear: model.linear.clone(),
            offset: model.offset,
            adj: Csr::build(model.n_vars, model.quadratic.iter()),
        }
    }
}

impl FlipEnergy for SparseQubo {
    type Var = u8;

    fn n_vars(&self) -> usize {
        self.linear.len()
    }

    #[inline]
    fn flip_delta(&self, x: &[u8], i: usize) -> f64 {
        let mut field = self.linear[i];
        for (j, w) in self.adj.row(i) {
            if x[j] != 0 {
                field += w;
            }
        }
        if x[i] == 0 {
            field
        } else {
            -field
        }
    }

    fn flipped(v: u8) -> u8 {
        1 - v
    }

    fn random_var<R: Rng + ?Sized>(rng: &mut R) -> u8 {
        u8::from(rng.gen::<bool>())
    }

    fn energy(&self, x: &[u8]) -> f64 {
        let mut e = self.offset;
        for i in 0..x.len() {
            if x[i] == 0 {
                continue;
            }
            e += self.linear[i];
            for (j, w) in self.adj.row(i) {
                if j < i && x[j] != 0 {
                    e += w;
                }
            }
        }
        e
    }
}

#[derive(Debug, Clone)]
pub struct SparseIsing {
    h: Vec<f64>,
    offset: f64,
    adj: Csr,
}

impl SparseIsing {
    pub fn new(model: &IsingModel) -> Self {
        Self {
            h: model.h.clone(),
            offset: model.offset,
            adj: Csr::build(model.n_vars, model.j.iter()),
        }
    }

    /// `h_i + sum_j J_ij s_j`.
    #[inline]
    pub fn local_field(&self, s: &[i8], i: usize) -> f64 {
        let mut f = self.h[i];
        for (j, w) in self.adj.row(i) {
            f += w * f64::from(s[j]);
        }
        f
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj.row(i)
    }

    pub fn field(&self, i: usize) -> f64 {
        self.h[i]
    }

    /// Sum of |h| and |J|, an upper bound on the energy range.
    pub fn scale(&self) -> f64 {
        self.h.iter().map(|h| h.abs()).sum::<f64>() + self.adj.weights.iter().map(|w| w.abs()).sum::<f64>() / 2.0
    }
}

impl FlipEnergy for SparseIsing {
    type Var = i8;

    fn n_vars(&self) -> usize {
        self.h.len()
    }

    #[inline]
    fn flip_delta(&self, s: &[i8], i: usize) -> f64 {
        -2.0 * f64::from(s[i]) * self.local_field(s, i)
    }

    fn flipped(v: i8) -> i8 {
        -v
    }

    fn random_var<R: Rng + ?Sized>(rng: &mut R) -> i8 {
        if rng.gen::<bool>() {
            1
        } else {
            -1
        }
    }

    fn energy(&self, s: &[i8]) -> f64 {
        let mut e = self.offset;
        for i in 0..s.len() {
            e += self.h[i] * f64::from(s[i]);
            for (j, w) in self.adj.row(i) {
                if j < i {
                    e += w * f64::from(s[i] * s[j]);
                }
            }
        }
        e
    }
}
