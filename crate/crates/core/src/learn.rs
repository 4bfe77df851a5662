//! Parameter learning by moment matching against Metropolis samples.
//!
//! Each iteration draws a batch of independent Boltzmann samples from the
//! current model, measures their moments and moves every parameter by
//! `rate * (sampled - target)`: a moment that is over-represented makes its
//! parameter more positive, which raises the energy of states carrying it.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{build_qubo, CartesianParams, ModelError, ModelShape};
use crate::rng::{derive_seed, derived_rng};
use crate::sparse::{FlipEnergy, SparseQubo};
use crate::stats::{MomentAccumulator, StatGroup, StatsError, StatsSummary};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid learning configuration: {0}")]
    Config(String),
    #[error("target statistics do not match shape {0}")]
    TargetMismatch(ModelShape),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Acceptance probability of a move with energy change `delta`.
#[inline]
pub fn acceptance_probability(delta: f64, beta: f64) -> f64 {
    if delta < 0.0 {
        1.0
    } else {
        (-beta * delta).exp()
    }
}

/// One Metropolis update: pick a variable uniformly, flip it with
/// probability `min(1, exp(-beta * dE))`. Returns whether it flipped.
pub fn metropolis_step<M: FlipEnergy, R: Rng + ?Sized>(
    model: &M,
    state: &mut [M::Var],
    beta: f64,
    rng: &mut R,
) -> bool {
    let i = rng.gen_range(0..model.n_vars());
    let delta = model.flip_delta(state, i);
    if delta < 0.0 || rng.gen::<f64>() < acceptance_probability(delta, beta) {
        state[i] = M::flipped(state[i]);
        true
    } else {
        false
    }
}

/// `n_steps` Metropolis updates from a uniformly random state.
pub fn boltzmann_sample<M: FlipEnergy, R: Rng + ?Sized>(
    model: &M,
    beta: f64,
    n_steps: usize,
    rng: &mut R,
) -> Vec<M::Var> {
    let mut state: Vec<M::Var> = (0..model.n_vars()).map(|_| M::random_var(rng)).collect();
    for _ in 0..n_steps {
        metropolis_step(model, &mut state, beta, rng);
    }
    state
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub beta: f64,
    /// Metropolis steps per sample.
    pub n_steps: usize,
    /// Samples per iteration.
    pub n_samples: usize,
    pub learning_rate: GroupRates,
    /// Rates shrink as `rate / (1 + decay * iteration)`.
    pub rate_decay: f64,
    pub error_threshold: f64,
    pub max_iters: usize,
    /// Weights of the mu, rho_intra and rho_inter groups in the total error.
    pub group_weights: [f64; 3],
    /// Initial parameters are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            n_steps: 1000,
            n_samples: 200,
            learning_rate: GroupRates { q: 1.0, r: 2.0, s: 2.0 },
            rate_decay: 0.0,
            error_threshold: 0.05,
            max_iters: 500,
            group_weights: [1.0, 1.0, 1.0],
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let mut bad = Vec::new();
        if !(self.beta > 0.0) {
            bad.push("beta");
        }
        if self.n_steps == 0 {
            bad.push("n_steps");
        }
        if self.n_samples == 0 {
            bad.push("n_samples");
        }
        let r = self.learning_rate;
        if !(r.q > 0.0 && r.r > 0.0 && r.s > 0.0) {
            bad.push("learning_rate");
        }
        if !(self.rate_decay >= 0.0) {
            bad.push("rate_decay");
        }
        if !(self.error_threshold > 0.0) {
            bad.push("error_threshold");
        }
        if self.max_iters == 0 {
            bad.push("max_iters");
        }
        if self.group_weights.iter().any(|w| !(*w >= 0.0)) {
            bad.push("group_weights");
        }
        if !(self.init_scale >= 0.0) {
            bad.push("init_scale");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(LearnError::Config(format!(
                "non-positive or invalid: {}",
                bad.join(", ")
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub total_error: f64,
    pub mu_error: f64,
    pub rho_intra_error: f64,
    pub rho_inter_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnTrace {
    pub rows: Vec<TraceRow>,
}

impl LearnTrace {
    pub fn total_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.total_error).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,total_error,mu_error,rho_intra_error,rho_inter_error\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration, r.total_error, r.mu_error, r.rho_intra_error, r.rho_inter_error
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub params: CartesianParams,
    pub trace: LearnTrace,
    pub converged: bool,
}

/// Per-group sums of absolute moment discrepancies.
pub fn moment_errors(sampled: &StatsSummary, target: &StatsSummary) -> [f64; 3] {
    let mut e = [0.0; 3];
    for ((g, a), (_, b)) in sampled.flatten().into_iter().zip(target.flatten()) {
        let k = StatGroup::ALL.iter().position(|&x| x == g).unwrap();
        e[k] += (a - b).abs();
    }
    e
}

/// Moments of `n_samples` independent Boltzmann samples of the model.
pub fn sample_moments(
    shape: &ModelShape,
    params: &CartesianParams,
    beta: f64,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<StatsSummary, LearnError> {
    let sparse = SparseQubo::new(&build_qubo(shape, params)?);
    let acc = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = derived_rng(seed, k as u64);
            let x = boltzmann_sample(&sparse, beta, n_steps, &mut rng);
            let mut acc = MomentAccumulator::new(shape);
            acc.add_bits(&x, 1).expect("sample has model length");
            acc
        })
        .reduce(
            || MomentAccumulator::new(shape),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    Ok(acc.finish()?)
}

pub fn learn_params(target: &StatsSummary, shape: &ModelShape, cfg: &LearnConfig) -> Result<LearnOutcome, LearnError> {
    cfg.validate()?;
    if target.markers() != shape.markers
        || target.max_distance != shape.max_distance
        || target.boundary != shape.boundary
    {
        return Err(LearnError::TargetMismatch(*shape));
    }
    let mut init_rng = derived_rng(cfg.seed, u64::MAX);
    let mut params = CartesianParams::random(shape.markers, shape.max_distance, cfg.init_scale, &mut init_rng);

    let mut trace = LearnTrace::default();
    let mut converged = false;
    for iter in 0..cfg.max_iters {
        let sampled = sample_moments(
            shape,
            &params,
            cfg.beta,
            cfg.n_steps,
            cfg.n_samples,
            derive_seed(cfg.seed, iter as u64),
        )?;
        let errs = moment_errors(&sampled, target);
        let total: f64 = errs.iter().zip(&cfg.group_weights).map(|(e, w)| e * w).sum();
        trace.rows.push(TraceRow {
            iteration: iter,
            total_error: total,
            mu_error: errs[0],
            rho_intra_error: errs[1],
            rho_inter_error: errs[2],
        });
        if total < cfg.error_threshold {
            converged = true;
            break;
        }
        let damp = 1.0 / (1.0 + cfg.rate_decay * iter as f64);
        let rates = cfg.learning_rate;
        let m = shape.markers;
        for a in 0..m {
            let v = params.q(a) + rates.q * damp * (sampled.mu[a] - target.mu[a]);
            params.set_q(a, v);
            for b in 0..a {
                let v = params.r(a, b) + rates.r * damp * (sampled.rho_intra[a][b] - target.rho_intra[a][b]);
                params.set_r(a, b, v);
            }
            for l in 1..=shape.max_distance {
                let v = params.s(a, l) + rates.s * damp * (sampled.rho_inter[a][l - 1] - target.rho_inter[a][l - 1]);
                params.set_s(a, l, v);
            }
        }
    }
    if !converged {
        log::warn!(
            "learning stopped at max_iters = {} with total error {:.4}",
            cfg.max_iters,
            trace.rows.last().map_or(f64::NAN, |r| r.total_error)
        );
    }
    Ok(LearnOutcome {
        params,
        trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Boundary, QuboModel};
    use crate::rng::rng_from_seed;
    use std::collections::BTreeMap;

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance_probability(-1.0, 1.0), 1.0);
        assert_eq!(acceptance_probability(0.0, 1.0), 1.0);
        assert!((acceptance_probability(2f64.ln(), 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn detailed_balance_identity() {
        // pi(a) P(a->b) = pi(b) P(b->a) with P = min(1, e^{-beta dE}) / n.
        let mut rng = rng_from_seed(3);
        for _ in 0..1000 {
            let beta: f64 = rng.gen_range(0.1..3.0);
            let ea: f64 = rng.gen_range(-5.0..5.0);
            let eb: f64 = rng.gen_range(-5.0..5.0);
            let lhs = (-beta * ea).exp() * acceptance_probability(eb - ea, beta);
            let rhs = (-beta * eb).exp() * acceptance_probability(ea - eb, beta);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(rhs));
        }
    }

    fn single(linear: f64) -> SparseQubo {
        SparseQubo::new(&QuboModel {
            n_vars: 1,
            linear: vec![linear],
            quadratic: BTreeMap::new(),
            offset: 0.0,
            shape: None,
        })
    }

    #[test]
    fn zero_model_marginals_are_half() {
        let shape = ModelShape::new(2, 3, 1, Boundary::Periodic).unwrap();
        let model = SparseQubo::new(&build_qubo(&shape, &CartesianParams::zeros(2, 1)).unwrap());
        let mut rng = rng_from_seed(1);
        let mut ones = vec![0usize; 6];
        for _ in 0..10_000 {
            let x = boltzmann_sample(&model, 1.0, 20, &mut rng);
            for (c, v) in ones.iter_mut().zip(x) {
                *c += usize::from(v);
            }
        }
        for c in ones {
            assert!((c as f64 / 1e4 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn strongly_penalized_variable_is_rarely_active() {
        // Exact marginal e^-10 / (1 + e^-10) ~ 4.5e-5.
        let model = single(10.0);
        let mut rng = rng_from_seed(2);
        let active: usize = (0..10_000)
            .map(|_| usize::from(boltzmann_sample(&model, 1.0, 10, &mut rng)[0]))
            .sum();
        assert!((active as f64) / 1e4 < 0.01);
    }

    #[test]
    fn metropolis_step_flips_downhill() {
        let model = single(-1.0);
        let mut rng = rng_from_seed(0);
        let mut x = vec![0u8];
        assert!(metropolis_step(&model, &mut x, 1.0, &mut rng));
        assert_eq!(x, vec![1]);
    }

    #[test]
    fn config_validation_lists_fields() {
        let cfg = LearnConfig {
            n_steps: 0,
            beta: -1.0,
            ..LearnConfig::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("beta") && msg.contains("n_steps"));
    }

    #[test]
    fn learns_suppression_from_empty_target() {
        let shape = ModelShape::new(2, 4, 1, Boundary::Periodic).unwrap();
        let target = StatsSummary {
            mu: vec![0.0; 2],
            rho_intra: vec![vec![0.0; 2]; 2],
            rho_inter: vec![vec![0.0]; 2],
            max_distance: 1,
            boundary: Boundary::Periodic,
            open_normalization: Default::default(),
        };
        let cfg = LearnConfig {
            n_steps: 200,
            n_samples: 100,
            max_iters: 200,
            error_threshold: 0.02,
            seed: 5,
            ..LearnConfig::default()
        };
        let out = learn_params(&target, &shape, &cfg).unwrap();
        assert!(out.params.q(0) > 1.0 && out.params.q(1) > 1.0);
        let check = sample_moments(&shape, &out.params, 1.0, 200, 2000, 99).unwrap();
        assert!(check.mu.iter().all(|&m| m < 0.05), "{:?}", check.mu);
        assert!(!out.trace.rows.is_empty() && out.trace.rows.len() <= 200);
        assert!(out.trace.to_csv().starts_with("iteration,total_error"));
    }

    #[test]
    fn learning_is_reproducible() {
        let shape = ModelShape::new(2, 3, 1, Boundary::Open).unwrap();
        let target = StatsSummary {
            mu: vec![0.3, 0.6],
            rho_intra: vec![vec![0.3, 0.2], vec![0.2, 0.6]],
            rho_inter: vec![vec![0.15], vec![0.4]],
            max_distance: 1,
            boundary: Boundary::Open,
            open_normalization: Default::default(),
        };
        let cfg = LearnConfig {
            n_steps: 50,
            n_samples: 20,
            max_iters: 5,
            seed: 11,
            ..LearnConfig::default()
        };
        let a = learn_params(&target, &shape, &cfg).unwrap();
        let b = learn_params(&target, &shape, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.trace, b.trace);
    }
}
