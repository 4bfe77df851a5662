//! Empirical moment statistics of incidence data and of sampled states.
//!
//! All moments are accumulated as integer co-incidence counts and divided
//! once at the end, so results do not depend on summation order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::IncidenceMatrix;
use crate::model::{Boundary, ModelShape};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("correlation length {l} must satisfy 1 <= L < N = {n}")]
    InvalidDistance { l: usize, n: usize },
    #[error("state shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no samples")]
    Empty,
}

/// Denominator used for open-boundary inter-nucleosome correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpenNormalization {
    /// Divide by the number of valid pairs, `N - l`.
    #[default]
    ValidTerms,
    /// Divide by `N` regardless of how many pairs exist.
    TotalN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub mu: Vec<f64>,
    /// M×M, symmetric, diagonal equal to `mu`.
    pub rho_intra: Vec<Vec<f64>>,
    /// M×L, column `l - 1` holds distance `l`.
    pub rho_inter: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    pub max_distance: usize,
    pub boundary: Boundary,
    #[serde(default)]
    pub open_normalization: OpenNormalization,
}

/// Moment groups, in flattening order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatGroup {
    Mu,
    RhoIntra,
    RhoInter,
}

impl StatGroup {
    pub const ALL: [StatGroup; 3] = [StatGroup::Mu, StatGroup::RhoIntra, StatGroup::RhoInter];

    pub fn name(self) -> &'static str {
        match self {
            StatGroup::Mu => "mu",
            StatGroup::RhoIntra => "rho_intra",
            StatGroup::RhoInter => "rho_inter",
        }
    }
}

impl StatsSummary {
    pub fn markers(&self) -> usize {
        self.mu.len()
    }

    /// Every independent statistic once: `mu`, then off-diagonal `rho_intra`
    /// for `m1 > m2` in (1,0), (2,0), (2,1), ... order, then `rho_inter`
    /// row-major.
    pub fn flatten(&self) -> Vec<(StatGroup, f64)> {
        let m = self.markers();
        let mut out = Vec::with_capacity(m + m * (m.saturating_sub(1)) / 2 + m * self.max_distance);
        out.extend(self.mu.iter().map(|&v| (StatGroup::Mu, v)));
        for m1 in 1..m {
            for m2 in 0..m1 {
                out.push((StatGroup::RhoIntra, self.rho_intra[m1][m2]));
            }
        }
        for row in &self.rho_inter {
            out.extend(row.iter().map(|&v| (StatGroup::RhoInter, v)));
        }
        out
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.flatten().into_iter().map(|(_, v)| v).collect()
    }

    pub fn same_layout(&self, other: &StatsSummary) -> bool {
        self.markers() == other.markers() && self.max_distance == other.max_distance
    }

    /// Largest absolute difference over all flattened statistics.
    pub fn max_abs_diff(&self, other: &StatsSummary) -> f64 {
        self.flat_values()
            .iter()
            .zip(other.flat_values())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Long-format CSV `group,i,j,value`. `rho_intra` lists the upper
    /// triangle including the diagonal; `rho_inter` uses `j = l`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,i,j,value\n");
        for (m, v) in self.mu.iter().enumerate() {
            let _ = writeln!(out, "mu,{m},,{v}");
        }
        for a in 0..self.markers() {
            for b in a..self.markers() {
                let _ = writeln!(out, "rho_intra,{a},{b},{}", self.rho_intra[a][b]);
            }
        }
        for (m, row) in self.rho_inter.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let _ = writeln!(out, "rho_inter,{m},{},{v}", k + 1);
            }
        }
        out
    }
}

/// Integer co-incidence counts for a fixed shape.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    markers: usize,
    nucleosomes: usize,
    max_distance: usize,
    boundary: Boundary,
    normalization: OpenNormalization,
    weight: u64,
    single: Vec<u64>,
    pair: Vec<u64>,
    lagged: Vec<u64>,
}

impl MomentAccumulator {
    pub fn new(shape: &ModelShape) -> Self {
        Self::with_normalization(shape, OpenNormalization::default())
    }

    pub fn with_normalization(shape: &ModelShape, normalization: OpenNormalization) -> Self {
        let m = shape.markers;
        Self {
            markers: m,
            nucleosomes: shape.nucleosomes,
            max_distance: shape.max_distance,
            boundary: shape.boundary,
            normalization,
            weight: 0,
            single: vec![0; m],
            pair: vec![0; m * m],
            lagged: vec![0; m * shape.max_distance],
        }
    }

    /// Adds one configuration with integer weight; `get(m, n)` returns the
    /// incidence of marker `m` at nucleosome `n`.
    pub fn add_with<F: Fn(usize, usize) -> bool>(&mut self, get: F, weight: u64) {
        let (mm, nn) = (self.markers, self.nucleosomes);
        for n in 0..nn {
            for a in 0..mm {
                if !get(a, n) {
                    continue;
                }
                self.single[a] += weight;
                for b in 0..mm {
                    if get(b, n) {
                        self.pair[a * mm + b] += weight;
                    }
                }
                for l in 1..=self.max_distance {
                    let t = n + l;
                    let partner = match self.boundary {
                        Boundary::Periodic => t % nn,
                        Boundary::Open if t < nn => t,
                        Boundary::Open => continue,
                    };
                    if get(a, partner) {
                        self.lagged[a * self.max_distance + l - 1] += weight;
                    }
                }
            }
        }
        self.weight += weight;
    }

    /// Bits in variable order `i = n * M + m`.
    pub fn add_bits(&mut self, bits: &[u8], weight: u64) -> Result<(), StatsError> {
        self.check_len(bits.len())?;
        let mm = self.markers;
        self.add_with(|m, n| bits[n * mm + m] != 0, weight);
        Ok(())
    }

    /// Spins in variable order; `+1` is an active incidence.
    pub fn add_spins(&mut self, spins: &[i8], weight: u64) -> Result<(), StatsError> {
        self.check_len(spins.len())?;
        let mm = self.markers;
        self.add_with(|m, n| spins[n * mm + m] > 0, weight);
        Ok(())
    }

    pub fn add_incidence(&mut self, x: &IncidenceMatrix, weight: u64) -> Result<(), StatsError> {
        if x.markers() != self.markers || x.nucleosomes() != self.nucleosomes {
            return Err(StatsError::ShapeMismatch(format!(
                "matrix is {}x{}, expected {}x{}",
                x.markers(),
                x.nucleosomes(),
                self.markers,
                self.nucleosomes
            )));
        }
        self.add_with(|m, n| x.get(m, n) == 1, weight);
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<(), StatsError> {
        if len != self.markers * self.nucleosomes {
            return Err(StatsError::ShapeMismatch(format!(
                "state has {len} entries, expected {}",
                self.markers * self.nucleosomes
            )));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        assert_eq!(
            (self.markers, self.nucleosomes, self.max_distance, self.boundary),
            (other.markers, other.nucleosomes, other.max_distance, other.boundary)
        );
        self.weight += other.weight;
        for (a, b) in self.single.iter_mut().zip(&other.single) {
            *a += b;
        }
        for (a, b) in self.pair.iter_mut().zip(&other.pair) {
            *a += b;
        }
        for (a, b) in self.lagged.iter_mut().zip(&other.lagged) {
            *a += b;
        }
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn finish(&self) -> Result<StatsSummary, StatsError> {
        if self.weight == 0 {
            return Err(StatsError::Empty);
        }
        let (mm, nn) = (self.markers, self.nucleosomes);
        let w = self.weight as f64;
        let denom = w * nn as f64;
        let mu: Vec<f64> = self.single.iter().map(|&c| c as f64 / denom).collect();
        let rho_intra = (0..mm)
            .map(|a| (0..mm).map(|b| self.pair[a * mm + b] as f64 / denom).collect())
            .collect();
        let rho_inter = (0..mm)
            .map(|a| {
                (1..=self.max_distance)
                    .map(|l| {
                        let terms = match (self.boundary, self.normalization) {
                            (Boundary::Open, OpenNormalization::ValidTerms) => nn - l,
                            _ => nn,
                        };
                        self.lagged[a * self.max_distance + l - 1] as f64 / (w * terms as f64)
                    })
                    .collect()
            })
            .collect();
        Ok(StatsSummary {
            mu,
            rho_intra,
            rho_inter,
            max_distance: self.max_distance,
            boundary: self.boundary,
            open_normalization: self.normalization,
        })
    }
}

pub fn mean_incidence(x: &IncidenceMatrix) -> Vec<f64> {
    let n = x.nucleosomes() as f64;
    (0..x.markers())
        .map(|m| x.row(m).iter().map(|&v| u64::from(v)).sum::<u64>() as f64 / n)
        .collect()
}

pub fn intra_corr(x: &IncidenceMatrix) -> Vec<Vec<f64>> {
    let mm = x.markers();
    let n = x.nucleosomes() as f64;
    (0..mm)
        .map(|a| {
            (0..mm)
                .map(|b| {
                    x.row(a)
                        .iter()
                        .zip(x.row(b))
                        .filter(|(&p, &q)| p == 1 && q == 1)
                        .count() as f64
                        / n
                })
                .collect()
        })
        .collect()
}

pub fn inter_corr(
    x: &IncidenceMatrix,
    max_distance: usize,
    boundary: Boundary,
    normalization: OpenNormalization,
) -> Result<Vec<Vec<f64>>, StatsError> {
    let nn = x.nucleosomes();
    if max_distance == 0 || max_distance >= nn {
        return Err(StatsError::InvalidDistance { l: max_distance, n: nn });
    }
    Ok((0..x.markers())
        .map(|m| {
            let row = x.row(m);
            (1..=max_distance)
                .map(|l| {
                    let (count, terms) = match boundary {
                        Boundary::Periodic => ((0..nn).filter(|&n| row[n] == 1 && row[(n + l) % nn] == 1).count(), nn),
                        Boundary::Open => {
                            let c = (0..nn - l).filter(|&n| row[n] == 1 && row[n + l] == 1).count();
                            let t = match normalization {
                                OpenNormalization::ValidTerms => nn - l,
                                OpenNormalization::TotalN => nn,
                            };
                            (c, t)
                        }
                    };
                    count as f64 / terms as f64
                })
                .collect()
        })
        .collect())
}

/// All moments of one incidence matrix.
pub fn summarize(
    x: &IncidenceMatrix,
    max_distance: usize,
    boundary: Boundary,
    normalization: OpenNormalization,
) -> Result<StatsSummary, StatsError> {
    let rho_inter = if max_distance == 0 {
        vec![Vec::new(); x.markers()]
    } else {
        inter_corr(x, max_distance, boundary, normalization)?
    };
    Ok(StatsSummary {
        mu: mean_incidence(x),
        rho_intra: intra_corr(x),
        rho_inter,
        max_distance,
        boundary,
        open_normalization: normalization,
    })
}

/// Occurrence-weighted statistics of spin states (variable order).
pub fn stats_of_samples<'a, I>(states: I, shape: &ModelShape) -> Result<StatsSummary, StatsError>
where
    I: IntoIterator<Item = (&'a [i8], u64)>,
{
    let mut acc = MomentAccumulator::new(shape);
    for (s, w) in states {
        acc.add_spins(s, w)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn mat(rows: &[&[u8]]) -> IncidenceMatrix {
        IncidenceMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_incidence(&mat(&[&[1, 1, 1, 1], &[1, 1, 1, 1]])), vec![1.0, 1.0]);
        assert_eq!(mean_incidence(&mat(&[&[1, 0, 1, 0]])), vec![0.5]);
        assert_eq!(mean_incidence(&mat(&[&[0, 0, 0]])), vec![0.0]);
    }

    #[test]
    fn intra_examples() {
        assert_eq!(intra_corr(&mat(&[&[1, 1], &[1, 1]]))[0][1], 1.0);
        assert_eq!(intra_corr(&mat(&[&[1, 0], &[0, 1]]))[0][1], 0.0);
        let r = intra_corr(&mat(&[&[1, 1, 0, 0], &[1, 0, 1, 0]]));
        assert_eq!(r[0][1], 0.25);
        assert_eq!(r[1][0], 0.25);
        assert_eq!(r[0][0], 0.5);
    }

    #[test]
    fn inter_examples() {
        let x = mat(&[&[1, 0, 1, 0]]);
        let r = inter_corr(&x, 2, Boundary::Periodic, OpenNormalization::ValidTerms).unwrap();
        assert_eq!(r[0], vec![0.0, 0.5]);
        let y = mat(&[&[1, 1, 1]]);
        let r = inter_corr(&y, 1, Boundary::Open, OpenNormalization::ValidTerms).unwrap();
        assert_eq!(r[0], vec![1.0]);
        let r = inter_corr(&y, 1, Boundary::Open, OpenNormalization::TotalN).unwrap();
        assert!((r[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(inter_corr(&y, 3, Boundary::Open, OpenNormalization::ValidTerms).is_err());
    }

    #[test]
    fn accumulator_matches_direct_functions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let rows: Vec<Vec<u8>> = (0..3).map(|_| (0..9).map(|_| rng.gen_range(0..2)).collect()).collect();
            let x = IncidenceMatrix::from_rows(&rows).unwrap();
            let shape = ModelShape::new(3, 9, 3, boundary).unwrap();
            let mut acc = MomentAccumulator::new(&shape);
            acc.add_incidence(&x, 1).unwrap();
            let direct = summarize(&x, 3, boundary, OpenNormalization::ValidTerms).unwrap();
            assert_eq!(acc.finish().unwrap(), direct);
        }
    }

    #[test]
    fn sample_weighting() {
        let shape = ModelShape::new(1, 2, 1, Boundary::Open).unwrap();
        let a: Vec<i8> = vec![1, 1];
        let b: Vec<i8> = vec![-1, -1];
        let s = stats_of_samples([(a.as_slice(), 1), (b.as_slice(), 3)], &shape).unwrap();
        assert_eq!(s.mu, vec![0.25]);
        assert_eq!(s.rho_inter[0], vec![0.25]);
        let single = stats_of_samples([(a.as_slice(), 1)], &shape).unwrap();
        assert_eq!(single.mu, vec![1.0]);
        assert!(matches!(
            stats_of_samples(std::iter::empty(), &shape),
            Err(StatsError::Empty)
        ));
        let short: Vec<i8> = vec![1];
        assert!(stats_of_samples([(short.as_slice(), 1)], &shape).is_err());
    }

    #[test]
    fn coin_flip_samples_have_half_mean() {
        // Binomial oracle: 1e4 samples x 4 positions, sd of the mean = 0.5/200.
        let shape = ModelShape::new(2, 4, 1, Boundary::Periodic).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let states: Vec<Vec<i8>> = (0..10_000)
            .map(|_| (0..8).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect())
            .collect();
        let s = stats_of_samples(states.iter().map(|v| (v.as_slice(), 1)), &shape).unwrap();
        for mu in s.mu {
            assert!((mu - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn flatten_order_and_csv() {
        let x = mat(&[&[1, 0, 1], &[1, 1, 0]]);
        let s = summarize(&x, 1, Boundary::Periodic, OpenNormalization::ValidTerms).unwrap();
        let groups: Vec<StatGroup> = s.flatten().into_iter().map(|(g, _)| g).collect();
        assert_eq!(
            groups,
            vec![
                StatGroup::Mu,
                StatGroup::Mu,
                StatGroup::RhoIntra,
                StatGroup::RhoInter,
                StatGroup::RhoInter
            ]
        );
        let csv = s.to_csv();
        assert!(csv.starts_with("group,i,j,value\nmu,0,,"));
        let back = StatsSummary::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    fn arb_matrix() -> impl Strategy<Value = IncidenceMatrix> {
        (1usize..4, 3usize..12).prop_flat_map(|(m, n)| {
            prop::collection::vec(0u8..2, m * n).prop_map(move |d| {
                let rows: Vec<Vec<u8>> = d.chunks(n).map(<[u8]>::to_vec).collect();
                IncidenceMatrix::from_rows(&rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn coincidence_bounded_by_marginals(x in arb_matrix(), periodic in any::<bool>()) {
            let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
            let s = summarize(&x, 1, boundary, OpenNormalization::TotalN).unwrap();
            for a in 0..x.markers() {
                for b in 0..x.markers() {
                    prop_assert!(s.rho_intra[a][b] <= s.mu[a].min(s.mu[b]) + 1e-15);
                    prop_assert_eq!(s.rho_intra[a][b], s.rho_intra[b][a]);
                }
                prop_assert_eq!(s.rho_intra[a][a], s.mu[a]);
                if periodic {
                    prop_assert!(s.rho_inter[a][0] <= s.mu[a] + 1e-15);
                }
            }
        }

        #[test]
        fn periodic_inter_is_shift_invariant(x in arb_matrix(), k in 0usize..12) {
            let n = x.nucleosomes();
            let rows: Vec<Vec<u8>> = (0..x.markers()).map(|m| {
                let mut r = x.row(m).to_vec();
                r.rotate_left(k % n);
                r
            }).collect();
            let y = IncidenceMatrix::from_rows(&rows).unwrap();
            let l = (n - 1).min(2);
            prop_assert_eq!(
                inter_corr(&x, l, Boundary::Periodic, OpenNormalization::ValidTerms).unwrap(),
                inter_corr(&y, l, Boundary::Periodic, OpenNormalization::ValidTerms).unwrap()
            );
        }

        #[test]
        fn concatenation_gives_size_weighted_means(a in arb_matrix(), extra in 1usize..8, seed in 0u64..100) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows_b: Vec<Vec<u8>> = (0..a.markers()).map(|_| (0..extra).map(|_| rng.gen_range(0..2)).collect()).collect();
            let b = IncidenceMatrix::from_rows(&rows_b).unwrap();
            let rows_c: Vec<Vec<u8>> = (0..a.markers()).map(|m| {
                let mut r = a.row(m).to_vec();
                r.extend_from_slice(b.row(m));
                r
            }).collect();
            let c = IncidenceMatrix::from_rows(&rows_c).unwrap();
            let (na, nb) = (a.nucleosomes() as f64, extra as f64);
            let (ma, mb, mc) = (mean_incidence(&a), mean_incidence(&b), mean_incidence(&c));
            let (ra, rb, rc) = (intra_corr(&a), intra_corr(&b), intra_corr(&c));
            for m in 0..a.markers() {
                prop_assert!((mc[m] - (na * ma[m] + nb * mb[m]) / (na + nb)).abs() < 1e-12);
                for k in 0..a.markers() {
                    prop_assert!((rc[m][k] - (na * ra[m][k] + nb * rb[m][k]) / (na + nb)).abs() < 1e-12);
                }
            }
        }
    }
}
