//! The Cartesian QUBO objective and its Ising form.
//!
//! Variables are the incidences `x[m][n]` flattened nucleosome-major:
//! `i = n * M + m`, so all markers of one nucleosome are contiguous.
//! Only two kinds of couplings exist: between markers on the same
//! nucleosome (`R`) and between the same marker on nucleosomes `l` apart
//! (`S`). Couplings between different markers on different nucleosomes are
//! always zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::IncidenceMatrix;

/// Default upper bound on the marker count of a model.
pub const DEFAULT_MAX_MARKERS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("parameter dimensions do not match shape: {0}")]
    ParamMismatch(String),
    #[error("state length {found} does not match {expected} variables")]
    StateLength { expected: usize, found: usize },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(ModelError::InvalidValue(format!("unknown boundary '{other}'"))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Structural parameters `[M, N, L]` plus the boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelShape {
    #[serde(rename = "M")]
    pub markers: usize,
    #[serde(rename = "N")]
    pub nucleosomes: usize,
    #[serde(rename = "L")]
    pub max_distance: usize,
    pub boundary: Boundary,
}

impl ModelShape {
    /// Validated shape with the default marker cap of 12.
    pub fn new(
        markers: usize,
        nucleosomes: usize,
        max_distance: usize,
        boundary: Boundary,
    ) -> Result<Self, ModelError> {
        Self::with_marker_cap(markers, nucleosomes, max_distance, boundary, DEFAULT_MAX_MARKERS)
    }

    pub fn with_marker_cap(
        markers: usize,
        nucleosomes: usize,
        max_distance: usize,
        boundary: Boundary,
        cap: usize,
    ) -> Result<Self, ModelError> {
        if markers == 0 || markers > cap {
            return Err(ModelError::InvalidShape(format!(
                "marker count {markers} outside 1..={cap}"
            )));
        }
        if nucleosomes == 0 {
            return Err(ModelError::InvalidShape("nucleosome count must be positive".into()));
        }
        if max_distance >= nucleosomes {
            return Err(ModelError::InvalidShape(format!(
                "correlation length {max_distance} must be below nucleosome count {nucleosomes}"
            )));
        }
        Ok(Self {
            markers,
            nucleosomes,
            max_distance,
            boundary,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.markers * self.nucleosomes
    }

    pub fn with_boundary(self, boundary: Boundary) -> Self {
        Self { boundary, ..self }
    }

    /// Nucleosome `l` positions after `n`, or `None` past an open boundary.
    #[inline]
    pub fn partner(&self, n: usize, l: usize) -> Option<usize> {
        let t = n + l;
        match self.boundary {
            Boundary::Periodic => Some(t % self.nucleosomes),
            Boundary::Open => (t < self.nucleosomes).then_some(t),
        }
    }

    /// `true` when periodic wrapping maps distinct `(n, l)` pairs onto the
    /// same variable pair (`2L >= N`).
    pub fn has_wrap_collisions(&self) -> bool {
        self.boundary == Boundary::Periodic && self.max_distance > 0 && 2 * self.max_distance >= self.nucleosomes
    }
}

impl std::fmt::Display for ModelShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{},{},{}] {}",
            self.markers, self.nucleosomes, self.max_distance, self.boundary
        )
    }
}

/// Variable index of marker `m` on nucleosome `n`.
pub fn index_map(m: usize, n: usize, shape: &ModelShape) -> Result<usize, ModelError> {
    if m >= shape.markers || n >= shape.nucleosomes {
        return Err(ModelError::IndexOutOfRange(format!(
            "(m={m}, n={n}) outside [{}, {}]",
            shape.markers, shape.nucleosomes
        )));
    }
    Ok(n * shape.markers + m)
}

/// `(m, n)` of variable `i` for a model with `markers` markers.
#[inline]
pub fn inverse_index(i: usize, markers: usize) -> (usize, usize) {
    (i % markers, i / markers)
}

/// Position-shared parameters: bias `q[m]`, intra-nucleosome couplings
/// `R[m1][m2]` (`m1 > m2`, stored once) and inter-nucleosome couplings
/// `S[m][l-1]` for distances `l = 1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianParams {
    markers: usize,
    max_distance: usize,
    q: Vec<f64>,
    r: Vec<f64>,
    s: Vec<f64>,
}

#[inline]
fn tri_index(m1: usize, m2: usize) -> usize {
    debug_assert!(m1 > m2);
    m1 * (m1 - 1) / 2 + m2
}

impl CartesianParams {
    pub fn zeros(markers: usize, max_distance: usize) -> Self {
        Self {
            markers,
            max_distance,
            q: vec![0.0; markers],
            r: vec![0.0; markers * markers.saturating_sub(1) / 2],
            s: vec![0.0; markers * max_distance],
        }
    }

    /// `r` lists the couplings in the order (1,0), (2,0), (2,1), (3,0), ...
    /// and `s` is indexed `[marker][distance - 1]`.
    pub fn new(q: Vec<f64>, r: Vec<f64>, s: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let markers = q.len();
        if r.len() != markers * markers.saturating_sub(1) / 2 {
            return Err(ModelError::ParamMismatch(format!(
                "{} intra couplings for {markers} markers",
                r.len()
            )));
        }
        if s.len() != markers {
            return Err(ModelError::ParamMismatch(format!(
                "{} inter-coupling rows for {markers} markers",
                s.len()
            )));
        }
        let max_distance = s.first().map_or(0, Vec::len);
        if s.iter().any(|row| row.len() != max_distance) {
            return Err(ModelError::ParamMismatch("ragged inter-coupling rows".into()));
        }
        let p = Self {
            markers,
            max_distance,
            q,
            r,
            s: s.into_iter().flatten().collect(),
        };
        if p.values().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidValue("non-finite parameter".into()));
        }
        Ok(p)
    }

    pub fn markers(&self) -> usize {
        self.markers
    }

    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    pub fn q(&self, m: usize) -> f64 {
        self.q[m]
    }

    /// Symmetric accessor; `r(m, m)` is 0.
    pub fn r(&self, m1: usize, m2: usize) -> f64 {
        match m1.cmp(&m2) {
            std::cmp::Ordering::Greater => self.r[tri_index(m1, m2)],
            std::cmp::Ordering::Less => self.r[tri_index(m2, m1)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn s(&self, m: usize, l: usize) -> f64 {
        self.s[m * self.max_distance + (l - 1)]
    }

    pub fn set_q(&mut self, m: usize, v: f64) {
        self.q[m] = v;
    }

    pub fn set_r(&mut self, m1: usize, m2: usize, v: f64) {
        let (a, b) = if m1 > m2 { (m1, m2) } else { (m2, m1) };
        assert!(a != b, "no self intra-coupling");
        self.r[tri_index(a, b)] = v;
    }

    pub fn set_s(&mut self, m: usize, l: usize, v: f64) {
        self.s[m * self.max_distance + (l - 1)] = v;
    }

    pub fn q_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn q_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }

    /// Packed intra couplings in (1,0), (2,0), (2,1), ... order.
    pub fn r_packed(&self) -> &[f64] {
        &self.r
    }

    pub fn r_packed_mut(&mut self) -> &mut [f64] {
        &mut self.r
    }

    /// Inter couplings flattened `[m * L + (l - 1)]`.
    pub fn s_flat(&self) -> &[f64] {
        &self.s
    }

    pub fn s_flat_mut(&mut self) -> &mut [f64] {
        &mut self.s
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.q.iter().chain(&self.r).chain(&self.s).copied()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.q.iter_mut().chain(&mut self.r).chain(&mut self.s)
    }

    /// Every parameter uniform in `[-scale, scale]`.
    pub fn random<R: rand::Rng + ?Sized>(markers: usize, max_distance: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(markers, max_distance);
        for v in p.values_mut() {
            *v = if scale > 0.0 {
                rng.gen_range(-scale..=scale)
            } else {
                0.0
            };
        }
        p
    }

    pub fn check_shape(&self, shape: &ModelShape) -> Result<(), ModelError> {
        if self.markers != shape.markers || self.max_distance != shape.max_distance {
            return Err(ModelError::ParamMismatch(format!(
                "params are [M={}, L={}], shape is {}",
                self.markers, self.max_distance, shape
            )));
        }
        Ok(())
    }
}

/// QUBO energy `offset + sum_i linear_i x_i + sum_{i>j} Q_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    pub n_vars: usize,
    pub linear: Vec<f64>,
    /// Keys satisfy `i > j`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub shape: Option<ModelShape>,
}

/// Ising energy `offset + sum_i h_i s_i + sum_{i>j} J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub n_vars: usize,
    pub h: Vec<f64>,
    /// Keys satisfy `i > j`.
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub shape: Option<ModelShape>,
}

#[inline]
fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a > b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn build_qubo(shape: &ModelShape, params: &CartesianParams) -> Result<QuboModel, ModelError> {
    params.check_shape(shape)?;
    let (mm, nn) = (shape.markers, shape.nucleosomes);
    let mut linear = vec![0.0; shape.n_vars()];
    let mut quadratic = BTreeMap::new();
    let mut merged = 0usize;
    for n in 0..nn {
        for m in 0..mm {
            linear[n * mm + m] = params.q(m);
        }
        for m1 in 1..mm {
            for m2 in 0..m1 {
                quadratic.insert((n * mm + m1, n * mm + m2), params.r(m1, m2));
            }
        }
    }
    for m in 0..mm {
        for l in 1..=shape.max_distance {
            for n in 0..nn {
                let Some(n2) = shape.partner(n, l) else { continue };
                if n2 == n {
                    continue;
                }
                let key = ordered(n * mm + m, n2 * mm + m);
                let w = params.s(m, l);
                match quadratic.entry(key) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(w);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += w;
                        merged += 1;
                    }
                }
            }
        }
    }
    if merged > 0 {
        log::warn!("{shape}: {merged} periodic inter-nucleosome edges coincide and were merged (2L >= N)");
    }
    Ok(QuboModel {
        n_vars: shape.n_vars(),
        linear,
        quadratic,
        offset: 0.0,
        shape: Some(*shape),
    })
}

fn check_len(expected: usize, found: usize) -> Result<(), ModelError> {
    if expected != found {
        return Err(ModelError::StateLength { expected, found });
    }
    Ok(())
}

impl QuboModel {
    pub fn energy(&self, x: &[u8]) -> Result<f64, ModelError> {
        check_len(self.n_vars, x.len())?;
        let mut e = self.offset;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                e += self.linear[i];
            }
        }
        for (&(i, j), &q) in &self.quadratic {
            if x[i] != 0 && x[j] != 0 {
                e += q;
            }
        }
        Ok(e)
    }

    /// Substitutes `x = (1 + s) / 2`.
    pub fn to_ising(&self) -> IsingModel {
        let mut h: Vec<f64> = self.linear.iter().map(|a| a / 2.0).collect();
        let mut offset = self.offset + self.linear.iter().sum::<f64>() / 2.0;
        let mut j = BTreeMap::new();
        for (&(a, b), &q) in &self.quadratic {
            let quarter = q / 4.0;
            j.insert((a, b), quarter);
            h[a] += quarter;
            h[b] += quarter;
            offset += quarter;
        }
        IsingModel {
            n_vars: self.n_vars,
            h,
            j,
            offset,
            shape: self.shape,
        }
    }
}

pub fn qubo_energy(model: &QuboModel, x: &[u8]) -> Result<f64, ModelError> {
    model.energy(x)
}

pub fn qubo_to_ising(model: &QuboModel) -> IsingModel {
    model.to_ising()
}

impl IsingModel {
    pub fn new(
        h: Vec<f64>,
        couplings: impl IntoIterator<Item = ((usize, usize), f64)>,
        offset: f64,
    ) -> Result<Self, ModelError> {
        let n_vars = h.len();
        let mut j = BTreeMap::new();
        for ((a, b), w) in couplings {
            if a == b || a >= n_vars || b >= n_vars {
                return Err(ModelError::IndexOutOfRange(format!("coupling ({a},{b})")));
            }
            *j.entry(ordered(a, b)).or_insert(0.0) += w;
        }
        Ok(Self {
            n_vars,
            h,
            j,
            offset,
            shape: None,
        })
    }

    pub fn energy(&self, s: &[i8]) -> Result<f64, ModelError> {
        check_len(self.n_vars, s.len())?;
        let mut e = self.offset;
        for (hi, &si) in self.h.iter().zip(s) {
            e += hi * f64::from(si);
        }
        for (&(a, b), &w) in &self.j {
            e += w * f64::from(s[a] * s[b]);
        }
        Ok(e)
    }

    /// Substitutes `s = 2x - 1`.
    pub fn to_qubo(&self) -> QuboModel {
        let mut linear: Vec<f64> = self.h.iter().map(|h| 2.0 * h).collect();
        let mut offset = self.offset - self.h.iter().sum::<f64>();
        let mut quadratic = BTreeMap::new();
        for (&(a, b), &w) in &self.j {
            quadratic.insert((a, b), 4.0 * w);
            linear[a] -= 2.0 * w;
            linear[b] -= 2.0 * w;
            offset += w;
        }
        QuboModel {
            n_vars: self.n_vars,
            linear,
            quadratic,
            offset,
            shape: self.shape,
        }
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.j.values().fold(0.0, |a, w| a.max(w.abs()))
    }

    pub fn edge_count(&self) -> usize {
        self.j.len()
    }

    /// Drops every coupling with `|J| < delta`; fields and offset stay.
    pub fn apply_threshold(&self, delta: f64) -> Result<IsingModel, ModelError> {
        if !(delta >= 0.0) {
            return Err(ModelError::InvalidValue(format!("threshold {delta} must be >= 0")));
        }
        let mut out = self.clone();
        out.j.retain(|_, w| w.abs() >= delta);
        Ok(out)
    }

    /// Shifts fields toward the template: `h_i -= f * A_i`.
    pub fn apply_bias(&self, bias: &TemplateBias) -> Result<IsingModel, ModelError> {
        if bias.spins.len() != self.n_vars {
            return Err(ModelError::ParamMismatch(format!(
                "template has {} entries, model has {} variables",
                bias.spins.len(),
                self.n_vars
            )));
        }
        if !(bias.strength >= 0.0) {
            return Err(ModelError::InvalidValue(format!(
                "bias strength {} must be >= 0",
                bias.strength
            )));
        }
        let mut out = self.clone();
        for (h, &a) in out.h.iter_mut().zip(&bias.spins) {
            *h -= bias.strength * f64::from(a);
        }
        Ok(out)
    }

    /// Text edge list:
    ///
    /// ```text
    /// ising <n_vars> <offset>
    /// <i> <h_i>          one line per variable
    /// <i> <j> <J_ij>     one line per coupling, i > j
    /// ```
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("ising {} {}\n", self.n_vars, self.offset);
        for (i, h) in self.h.iter().enumerate() {
            let _ = writeln!(out, "{i} {h}");
        }
        for (&(a, b), w) in &self.j {
            let _ = writeln!(out, "{a} {b} {w}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<IsingModel, ModelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let perr = |line: usize, msg: &str| ModelError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "missing header"))?;
        let hf: Vec<&str> = header.split_whitespace().collect();
        if hf.len() != 3 || hf[0] != "ising" {
            return Err(perr(hl, "header must be `ising <n_vars> <offset>`"));
        }
        let n_vars: usize = hf[1].parse().map_err(|_| perr(hl, "bad variable count"))?;
        let offset: f64 = hf[2].parse().map_err(|_| perr(hl, "bad offset"))?;
        let mut h = vec![0.0; n_vars];
        let mut couplings = Vec::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.len() {
                2 => {
                    let i: usize = f[0].parse().map_err(|_| perr(ln, "bad index"))?;
                    if i >= n_vars {
                        return Err(perr(ln, "variable index out of range"));
                    }
                    h[i] = f[1].parse().map_err(|_| perr(ln, "bad field"))?;
                }
                3 => {
                    let a: usize = f[0].parse().map_err(|_| perr(ln, "bad index"))?;
                    let b: usize = f[1].parse().map_err(|_| perr(ln, "bad index"))?;
                    let w: f64 = f[2].parse().map_err(|_| perr(ln, "bad coupling"))?;
                    couplings.push(((a, b), w));
                }
                _ => return Err(perr(ln, "expected `i h` or `i j J`")),
            }
        }
        IsingModel::new(h, couplings, offset)
    }
}

pub fn ising_energy(model: &IsingModel, s: &[i8]) -> Result<f64, ModelError> {
    model.energy(s)
}

pub fn apply_threshold(model: &IsingModel, delta: f64) -> Result<IsingModel, ModelError> {
    model.apply_threshold(delta)
}

pub fn apply_bias(model: &IsingModel, bias: &TemplateBias) -> Result<IsingModel, ModelError> {
    model.apply_bias(bias)
}

/// Template state `A` in {-1,+1}, stored in variable order, with bias
/// strength `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateBias {
    pub spins: Vec<i8>,
    pub strength: f64,
}

impl TemplateBias {
    pub fn new(spins: Vec<i8>, strength: f64) -> Result<Self, ModelError> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(ModelError::InvalidValue("template entries must be +1 or -1".into()));
        }
        if !(strength >= 0.0) {
            return Err(ModelError::InvalidValue(format!(
                "bias strength {strength} must be >= 0"
            )));
        }
        Ok(Self { spins, strength })
    }

    pub fn from_incidence(x: &IncidenceMatrix, strength: f64) -> Result<Self, ModelError> {
        Self::new(incidence_to_spins(x), strength)
    }
}

/// Incidence matrix to spins in variable order (0 -> -1, 1 -> +1).
pub fn incidence_to_spins(x: &IncidenceMatrix) -> Vec<i8> {
    let (mm, nn) = (x.markers(), x.nucleosomes());
    let mut out = vec![-1i8; mm * nn];
    for n in 0..nn {
        for m in 0..mm {
            if x.get(m, n) == 1 {
                out[n * mm + m] = 1;
            }
        }
    }
    out
}

#[inline]
pub fn spin_to_bit(s: i8) -> u8 {
    u8::from(s > 0)
}

#[inline]
pub fn bit_to_spin(x: u8) -> i8 {
    if x != 0 {
        1
    } else {
        -1
    }
}

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub shape: ShapeDims,
    pub boundary: Boundary,
    pub q: Vec<f64>,
    /// `[m1, m2, value]` triples with `m1 > m2`.
    #[serde(rename = "R")]
    pub r: Vec<(usize, usize, f64)>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeDims {
    #[serde(rename = "M")]
    pub markers: usize,
    #[serde(rename = "N")]
    pub nucleosomes: usize,
    #[serde(rename = "L")]
    pub max_distance: usize,
}

impl ModelFile {
    pub fn new(shape: &ModelShape, params: &CartesianParams) -> Result<Self, ModelError> {
        params.check_shape(shape)?;
        let mut r = Vec::new();
        for m1 in 1..params.markers() {
            for m2 in 0..m1 {
                r.push((m1, m2, params.r(m1, m2)));
            }
        }
        let s = (0..params.markers())
            .map(|m| (1..=params.max_distance()).map(|l| params.s(m, l)).collect())
            .collect();
        Ok(Self {
            shape: ShapeDims {
                markers: shape.markers,
                nucleosomes: shape.nucleosomes,
                max_distance: shape.max_distance,
            },
            boundary: shape.boundary,
            q: params.q_slice().to_vec(),
            r,
            s,
        })
    }

    pub fn to_parts(&self) -> Result<(ModelShape, CartesianParams), ModelError> {
        let shape = ModelShape::with_marker_cap(
            self.shape.markers,
            self.shape.nucleosomes,
            self.shape.max_distance,
            self.boundary,
            usize::MAX,
        )?;
        let mut params = CartesianParams::new(
            self.q.clone(),
            vec![0.0; self.q.len() * self.q.len().saturating_sub(1) / 2],
            self.s.clone(),
        )?;
        for &(m1, m2, v) in &self.r {
            if m1 <= m2 || m1 >= params.markers() {
                return Err(ModelError::ParamMismatch(format!("intra coupling ({m1},{m2})")));
            }
            params.set_r(m1, m2, v);
        }
        params.check_shape(&shape)?;
        Ok((shape, params))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }
}

/// Convenience: Cartesian parameters straight to the Ising form.
pub fn build_ising(shape: &ModelShape, params: &CartesianParams) -> Result<IsingModel, ModelError> {
    Ok(build_qubo(shape, params)?.to_ising())
}
