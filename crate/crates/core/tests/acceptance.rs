//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line even when the run succeeds.
//!
//! `cargo test --test acceptance -- 4 7` runs criteria 4 and 7 only.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use chromanneal::embed::{chain_diameter, find_embedding, replicate_ising, validate, EmbedConfig, UnembedPolicy};
use chromanneal::eval::{self, parse_grid, Axis, BackendSpec, PipelineSpec};
use chromanneal::learn::{boltzmann_sample, learn_params, sample_moments, GroupRates, LearnConfig};
use chromanneal::model::{build_ising, build_qubo, Boundary, CartesianParams, IsingModel, ModelShape, QuboModel};
use chromanneal::rng::{derived_rng, rng_from_seed};
use chromanneal::sampler::{
    reverse_anneal, sample_cluster, sample_many, AnnealSchedule, ReverseAnnealer, ReverseSchedule, SaParams,
    SimulatedAnnealer, SqaParams,
};
use chromanneal::sparse::{SparseIsing, SparseQubo};
use chromanneal::stats::{summarize, OpenNormalization, StatsSummary};
use chromanneal::topology::{
    build_hardware, cartesian_product, marker_intersection_graph, metrics, nucleosome_intersection_graph,
    objective_graph, Graph, TopologyKind,
};
use chromanneal::IncidenceMatrix;

/// What a criterion found, plus the files it would write, for the
/// determinism check.
struct Found {
    pass: bool,
    detail: String,
    artifact: String,
}

type Criterion = fn() -> Found;

const CRITERIA: &[(u32, &str, u64, Criterion)] = &[
    (1, "QUBO/Ising equivalence", 1, qubo_ising_equivalence),
    (2, "Boltzmann sampler", 30, boltzmann_sampler),
    (3, "graph identity", 1, graph_identity),
    (4, "embedding validity", 600, embedding_validity),
    (5, "chain metrics", 60, chain_metrics_relation),
    (6, "learning closure", 300, learning_closure),
    (7, "bias trend", 300, bias_trend),
    (8, "reverse annealing limits", 120, reverse_limits),
    (9, "threshold pruning", 10, threshold_pruning),
    (10, "cluster equivalence", 300, cluster_equivalence),
    (11, "boundary qubit cost", 600, boundary_cost),
];

fn main() {
    let wanted: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let mut failures = 0;
    let mut artifacts = BTreeMap::new();
    let mut timings = BTreeMap::new();
    for &(n, name, budget, f) in CRITERIA {
        if !selected(n) {
            continue;
        }
        let (found, took) = timed(f);
        let over = took > Duration::from_secs(budget);
        let pass = found.pass && !over;
        report(n, name, pass, &found.detail, took, over.then_some(budget));
        failures += usize::from(!pass);
        artifacts.insert(n, found.artifact);
        timings.insert(n, took);
    }
    if selected(12) {
        let (found, took) = timed(|| determinism(&artifacts, &timings));
        report(12, "determinism", found.pass, &found.detail, took, None);
        failures += usize::from(!found.pass);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn timed(f: impl FnOnce() -> Found) -> (Found, Duration) {
    let t = Instant::now();
    let found = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Found {
            pass: false,
            detail: format!("panicked: {msg}"),
            artifact: String::new(),
        }
    });
    (found, t.elapsed())
}

fn report(n: u32, name: &str, pass: bool, detail: &str, took: Duration, over: Option<u64>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let budget = over.map(|b| format!(", over the {b} s budget")).unwrap_or_default();
    println!(
        "criterion {n:>2} {verdict} {name}: {detail} [{:.2} s{budget}]",
        took.as_secs_f64()
    );
}

/// Criterion 12: a criterion run twice with the same seeds must produce
/// the same bytes. The slowest criteria are skipped to keep the suite short.
fn determinism(first: &BTreeMap<u32, String>, timings: &BTreeMap<u32, Duration>) -> Found {
    let mut checked = Vec::new();
    let mut differ = Vec::new();
    for &(n, _, _, f) in CRITERIA {
        let (Some(a), Some(t)) = (first.get(&n), timings.get(&n)) else {
            continue;
        };
        if *t > Duration::from_secs(60) {
            continue;
        }
        let again = catch_unwind(AssertUnwindSafe(f))
            .map(|r| r.artifact)
            .unwrap_or_default();
        checked.push(n);
        if again != *a || a.is_empty() {
            differ.push(n);
        }
    }
    Found {
        pass: differ.is_empty() && !checked.is_empty(),
        detail: format!("re-ran criteria {checked:?}; differing outputs: {differ:?}"),
        artifact: String::new(),
    }
}

// ---------------------------------------------------------------------------
// Oracles, written from the model definition rather than the library.

/// Direct energy of a binary configuration (variable index `n * M + m`).
fn cartesian_energy(shape: &ModelShape, p: &CartesianParams, x: &[u8]) -> f64 {
    let (mm, nn) = (shape.markers, shape.nucleosomes);
    let at = |m: usize, n: usize| f64::from(x[n * mm + m]);
    let mut e = 0.0;
    for n in 0..nn {
        for m in 0..mm {
            e += p.q(m) * at(m, n);
            for m2 in 0..m {
                e += p.r(m, m2) * at(m, n) * at(m2, n);
            }
            for l in 1..=shape.max_distance {
                let n2 = match shape.boundary {
                    Boundary::Periodic => (n + l) % nn,
                    Boundary::Open if n + l < nn => n + l,
                    Boundary::Open => continue,
                };
                e += p.s(m, l) * at(m, n) * at(m, n2);
            }
        }
    }
    e
}

fn bits(state: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((state >> i) & 1) as u8).collect()
}

/// Exact Boltzmann probabilities over all 2^n states.
fn exact_distribution(shape: &ModelShape, p: &CartesianParams, beta: f64) -> Vec<f64> {
    let n = shape.n_vars();
    let energies: Vec<f64> = (0..1u64 << n)
        .map(|s| cartesian_energy(shape, p, &bits(s, n)))
        .collect();
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Exact moments under the Boltzmann distribution, periodic boundary.
fn exact_moments(shape: &ModelShape, p: &CartesianParams, beta: f64) -> StatsSummary {
    let (mm, nn, ll) = (shape.markers, shape.nucleosomes, shape.max_distance);
    let probs = exact_distribution(shape, p, beta);
    let mut mu = vec![0.0; mm];
    let mut intra = vec![vec![0.0; mm]; mm];
    let mut inter = vec![vec![0.0; ll]; mm];
    for (s, &pr) in probs.iter().enumerate() {
        let x = bits(s as u64, shape.n_vars());
        let at = |m: usize, n: usize| f64::from(x[n * mm + m]);
        for n in 0..nn {
            for m in 0..mm {
                mu[m] += pr * at(m, n) / nn as f64;
                for m2 in 0..mm {
                    intra[m][m2] += pr * at(m, n) * at(m2, n) / nn as f64;
                }
                for l in 1..=ll {
                    inter[m][l - 1] += pr * at(m, n) * at(m, (n + l) % nn) / nn as f64;
                }
            }
        }
    }
    StatsSummary {
        mu,
        rho_intra: intra,
        rho_inter: inter,
        max_distance: ll,
        boundary: Boundary::Periodic,
        open_normalization: OpenNormalization::ValidTerms,
    }
}

fn random_params(shape: &ModelShape, scale: f64, seed: u64) -> CartesianParams {
    CartesianParams::random(shape.markers, shape.max_distance, scale, &mut rng_from_seed(seed))
}

/// Parameters with every coupling bounded away from zero.
fn dense_params(shape: &ModelShape, seed: u64) -> CartesianParams {
    let mut rng = rng_from_seed(seed);
    let mut p = CartesianParams::zeros(shape.markers, shape.max_distance);
    let mut draw = || {
        let v: f64 = rng.gen_range(0.5..1.0);
        if rng.gen::<bool>() {
            v
        } else {
            -v
        }
    };
    for v in p.values_mut() {
        *v = draw();
    }
    p
}

fn shape(m: usize, n: usize, l: usize, b: Boundary) -> ModelShape {
    ModelShape::new(m, n, l, b).unwrap()
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    eval::spearman(x, y).unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------

fn qubo_ising_equivalence() -> Found {
    let mut rng = rng_from_seed(1);
    let mut worst = 0.0f64;
    let mut artifact = String::new();
    for k in 0..100 {
        let n = 1 + k % 12;
        let mut dense = vec![vec![0.0; n]; n];
        let linear: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut quadratic = BTreeMap::new();
        for i in 0..n {
            for j in 0..i {
                if rng.gen_bool(0.6) {
                    let q = rng.gen_range(-2.0..2.0);
                    dense[i][j] = q;
                    quadratic.insert((i, j), q);
                }
            }
        }
        let offset = rng.gen_range(-1.0..1.0);
        let qubo = QuboModel {
            n_vars: n,
            linear: linear.clone(),
            quadratic,
            offset,
            shape: None,
        };
        let ising = qubo.to_ising();
        let back = ising.to_qubo();
        for s in 0..1u64 << n {
            let x = bits(s, n);
            let spins: Vec<i8> = x.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect();
            let mut direct = offset;
            for i in 0..n {
                direct += linear[i] * f64::from(x[i]);
                for j in 0..i {
                    direct += dense[i][j] * f64::from(x[i]) * f64::from(x[j]);
                }
            }
            let e_q = qubo.energy(&x).unwrap();
            let e_s = ising.energy(&spins).unwrap();
            let e_b = back.energy(&x).unwrap();
            worst = worst
                .max((e_q - direct).abs())
                .max((e_s - direct).abs())
                .max((e_b - direct).abs());
        }
        artifact.push_str(&format!("{k} {:?} {:?} {}\n", ising.h, ising.j, ising.offset));
    }
    Found {
        pass: worst <= 1e-9,
        detail: format!("100 models, 1..12 variables, max |dE| = {worst:.2e} (tolerance 1e-9)"),
        artifact,
    }
}

fn boltzmann_sampler() -> Found {
    let sh = shape(2, 3, 1, Boundary::Periodic);
    let p = random_params(&sh, 1.0, 2);
    let exact = exact_distribution(&sh, &p, 1.0);
    let qubo = SparseQubo::new(&build_qubo(&sh, &p).unwrap());
    let n_samples = 100_000;
    let mut counts = vec![0u64; exact.len()];
    for k in 0..n_samples {
        let mut rng = derived_rng(3, k);
        let x = boltzmann_sample(&qubo, 1.0, 200, &mut rng);
        let idx = x
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | (usize::from(b) << i));
        counts[idx] += 1;
    }
    let tv = 0.5
        * counts
            .iter()
            .zip(&exact)
            .map(|(&c, &p)| (c as f64 / n_samples as f64 - p).abs())
            .sum::<f64>();
    Found {
        pass: tv <= 0.03,
        detail: format!("[2,3,1], 1e5 samples, TV to exact enumeration = {tv:.4} (tolerance 0.03)"),
        artifact: format!("{counts:?}"),
    }
}

fn graph_identity() -> Found {
    let sh = shape(12, 25, 5, Boundary::Periodic);
    let model = build_ising(&sh, &dense_params(&sh, 4)).unwrap();
    let g = objective_graph(&model);
    // Independent edge list: K12 on every nucleosome plus same-marker links
    // at distances 1..5 around the ring.
    let (mm, nn) = (12, 25);
    let mut expected = BTreeSet::new();
    for n in 0..nn {
        for m1 in 0..mm {
            for m2 in 0..m1 {
                expected.insert((n * mm + m2, n * mm + m1));
            }
            for l in 1..=5 {
                let (a, b) = (n * mm + m1, ((n + l) % nn) * mm + m1);
                expected.insert((a.min(b), a.max(b)));
            }
        }
    }
    let found: BTreeSet<(usize, usize)> = g.edges().iter().copied().collect();
    let product = cartesian_product(
        &marker_intersection_graph(12).unwrap(),
        &nucleosome_intersection_graph(25, 5, Boundary::Periodic).unwrap(),
    );
    let gm = metrics(&g).unwrap();
    let pass = g.n_nodes() == 300
        && g.n_edges() == 3150
        && found == expected
        && product.edges() == g.edges()
        && (gm.gamma - 0.0702).abs() <= 0.0005;
    Found {
        pass,
        detail: format!(
            "{} nodes, {} edges, equals K12 x I25: {}, gamma = {:.5} (0.0702 +- 0.0005)",
            g.n_nodes(),
            g.n_edges(),
            found == expected && product.edges() == g.edges(),
            gm.gamma
        ),
        artifact: g.to_edge_list("objective", 0),
    }
}

fn embedding_validity() -> Found {
    let target = build_hardware(TopologyKind::Pegasus, 16).unwrap();
    let mut successes = 0;
    let mut violations = 0;
    let mut parts = Vec::new();
    let mut artifact = String::new();
    let mut l5 = None;
    for l in 1..=5 {
        let sh = shape(12, 25, l, Boundary::Periodic);
        let source = objective_graph(&build_ising(&sh, &dense_params(&sh, 5)).unwrap());
        let cfg = EmbedConfig {
            seed: 10 + l as u64,
            max_tries: 10,
            ..EmbedConfig::default()
        };
        match find_embedding(&source, &target, &cfg) {
            Ok(out) => {
                successes += 1;
                violations += validate(&out.embedding, &source, &target).len();
                let lens: Vec<usize> = out.embedding.chains.iter().map(Vec::len).collect();
                let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
                let max = lens.iter().copied().max().unwrap_or(0);
                parts.push(format!("L={l}: <L_C>={mean:.2} max={max} tries={}", out.tries));
                if l == 5 {
                    l5 = Some(mean);
                }
                artifact.push_str(&out.embedding.to_json());
            }
            Err(e) => parts.push(format!("L={l}: {e}")),
        }
    }
    // Published reference for L = 5: mean 11.67, accepted within a factor of 2.
    let soft = l5.map(|m| (11.67 / 2.0..=11.67 * 2.0).contains(&m));
    Found {
        pass: successes >= 4 && violations == 0 && soft != Some(false),
        detail: format!(
            "Pegasus-16, {successes}/5 embedded, {violations} violations; {}; L=5 within 2x of 11.67: {soft:?}",
            parts.join(", ")
        ),
        artifact,
    }
}

/// Node count of the longest shortest path, by BFS from every chain node.
fn diameter_oracle(chain: &[usize], g: &Graph) -> usize {
    let inside: BTreeSet<usize> = chain.iter().copied().collect();
    let mut best = 0;
    for &s in chain {
        let mut dist = HashMap::from([(s, 1usize)]);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if inside.contains(&v) && !dist.contains_key(&v) {
                    dist.insert(v, dist[&u] + 1);
                    queue.push_back(v);
                }
            }
        }
        best = best.max(*dist.values().max().unwrap());
    }
    best
}

fn chain_metrics_relation() -> Found {
    let star = Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let star_chain = [0, 1, 2, 3];
    let d_star = chain_diameter(&star_chain, &star);
    let hw = build_hardware(TopologyKind::Pegasus, 4).unwrap();
    let mut rng = rng_from_seed(6);
    let mut bad = 0;
    let mut artifact = String::new();
    for _ in 0..1000 {
        // Random connected chain grown from a random root.
        let len = rng.gen_range(1..=20);
        let root = loop {
            let q = rng.gen_range(0..hw.graph.n_nodes());
            if hw.graph.degree(q) > 0 {
                break q;
            }
        };
        let mut chain = vec![root];
        while chain.len() < len {
            let &u = chain.choose(&mut rng).unwrap();
            let nb: Vec<usize> = hw
                .graph
                .neighbors(u)
                .iter()
                .copied()
                .filter(|v| !chain.contains(v))
                .collect();
            if let Some(&v) = nb.choose(&mut rng) {
                chain.push(v);
            }
        }
        chain.sort_unstable();
        let d = chain_diameter(&chain, &hw.graph);
        if d > chain.len() || d != diameter_oracle(&chain, &hw.graph) {
            bad += 1;
        }
        artifact.push_str(&format!("{} {d}\n", chain.len()));
    }
    Found {
        pass: d_star == 3 && bad == 0,
        detail: format!(
            "star chain D_C = {d_star} < L_C = 4; 1000 random chains, {bad} with D_C > L_C or off the BFS oracle"
        ),
        artifact,
    }
}

fn learning_closure() -> Found {
    let sh = shape(3, 5, 1, Boundary::Periodic);
    let truth = random_params(&sh, 1.0, 7);
    let target = exact_moments(&sh, &truth, 1.0);
    let cfg = LearnConfig {
        beta: 1.0,
        n_steps: 150,
        n_samples: 2000,
        learning_rate: GroupRates { q: 1.0, r: 2.0, s: 2.0 },
        rate_decay: 0.02,
        error_threshold: 0.02,
        max_iters: 500,
        init_scale: 0.1,
        seed: 8,
        ..LearnConfig::default()
    };
    let out = learn_params(&target, &sh, &cfg).unwrap();
    let learned = exact_moments(&sh, &out.params, 1.0);
    let worst = learned.max_abs_diff(&target);
    Found {
        pass: worst <= 0.05 && out.trace.rows.len() <= 500,
        detail: format!(
            "[3,5,1], {} iterations, worst exact moment error {worst:.4} (tolerance 0.05)",
            out.trace.rows.len()
        ),
        artifact: out.trace.to_csv(),
    }
}

/// Ground-truth model, its Boltzmann moments and one Boltzmann state as
/// the template, on [4,10,2].
fn template_setup(seed: u64) -> PipelineSpec {
    let sh = shape(4, 10, 2, Boundary::Periodic);
    let p = random_params(&sh, 1.0, seed);
    let empirical = sample_moments(&sh, &p, 1.0, 2000, 4000, seed + 1).unwrap();
    let qubo = SparseQubo::new(&build_qubo(&sh, &p).unwrap());
    let x = boltzmann_sample(&qubo, 1.0, 2000, &mut rng_from_seed(seed + 2));
    PipelineSpec {
        shape: sh,
        params: p,
        empirical: Some(empirical),
        incidence: None,
        normalization: OpenNormalization::ValidTerms,
        template: Some(x.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect()),
        bias_strength: 0.0,
        threshold: 0.0,
        backend: BackendSpec::Sa(SaParams::default()),
        schedule: AnnealSchedule::default(),
        reverse: None,
        hardware: None,
        n_smpl: 300,
        epsilon: eval::DEFAULT_EPSILON,
        seed: seed + 3,
    }
}

fn bias_trend() -> Found {
    let spec = template_setup(9);
    let grid = parse_grid(Axis::BiasStrength, "0,1,2,5,10").unwrap();
    let report = eval::sweep(Axis::BiasStrength, &grid, &spec).unwrap();
    let (f, d) = report.series(|r| r.mean_d_a);
    let (_, r2) = report.series(|r| r.r2);
    let rho_d = spearman(&f, &d);
    let rho_r = spearman(&f, &r2);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    Found {
        pass: d.len() == 5 && r2.len() == 5 && rho_d <= -0.8 && rho_r <= -0.6,
        detail: format!(
            "f = 0 1 2 5 10: d_A = {} (rho {rho_d:.2} <= -0.8), R2 = {} (rho {rho_r:.2} <= -0.6)",
            fmt(&d),
            fmt(&r2)
        ),
        artifact: report.to_csv(),
    }
}

fn random_ising(n: usize, rng: &mut impl Rng) -> IsingModel {
    let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut j = Vec::new();
    for a in 0..n {
        for b in 0..a {
            if rng.gen_bool(0.5) {
                j.push(((a, b), rng.gen_range(-1.0..1.0)));
            }
        }
    }
    IsingModel::new(h, j, 0.0).unwrap()
}

fn random_spins(n: usize, rng: &mut impl Rng) -> Vec<i8> {
    (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
}

fn reverse_limits() -> Found {
    let mut rng = rng_from_seed(11);
    let params = SqaParams::default();
    let schedule = AnnealSchedule::default();
    let mut identical = 0;
    for k in 0..100 {
        let n = 2 + k % 11;
        let model = random_ising(n, &mut rng);
        let initial = random_spins(n, &mut rng);
        let rs = ReverseSchedule::new(1.0, 1000.0, initial.clone()).unwrap();
        let out = reverse_anneal(
            &SparseIsing::new(&model),
            &schedule,
            &rs,
            &params,
            &mut derived_rng(12, k as u64),
        )
        .unwrap();
        identical += usize::from(out == initial);
    }

    let sh = shape(3, 4, 1, Boundary::Periodic);
    let model = build_ising(&sh, &random_params(&sh, 1.0, 13)).unwrap();
    let initial = random_spins(sh.n_vars(), &mut rng);
    let mut means = Vec::new();
    let mut artifact = String::new();
    for s_r in [1.0, 0.8, 0.6, 0.4] {
        let annealer = ReverseAnnealer {
            schedule: schedule.clone(),
            reverse: ReverseSchedule::new(s_r, 1000.0, initial.clone()).unwrap(),
            params: params.clone(),
        };
        let set = sample_many(&annealer, &model, 200, 14).unwrap();
        means.push(eval::distance_summary(&set, &initial, &sh).unwrap().mean);
        artifact.push_str(&set.to_jsonl());
    }
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    Found {
        pass: identical == 100 && increasing,
        detail: format!(
            "s_R = 1 identity {identical}/100; mean d_A at s_R = 1.0 0.8 0.6 0.4: {} (strictly increasing: {increasing})",
            means.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
        ),
        artifact,
    }
}

/// Random 12-marker incidence with domain structure: each marker switches
/// state with a small probability per nucleosome.
fn domain_incidence(markers: usize, len: usize, seed: u64) -> IncidenceMatrix {
    let mut rng = rng_from_seed(seed);
    let mut data = Vec::with_capacity(markers * len);
    for _ in 0..markers {
        let mut on = rng.gen_bool(0.3);
        let flip = rng.gen_range(0.05..0.2);
        for _ in 0..len {
            if rng.gen_bool(flip) {
                on = !on;
            }
            data.push(u8::from(on));
        }
    }
    IncidenceMatrix::new((0..markers).map(|m| format!("m{m}")).collect(), len, data).unwrap()
}

fn threshold_pruning() -> Found {
    let sh = shape(12, 25, 5, Boundary::Periodic);
    let x = domain_incidence(12, 400, 15);
    let target = summarize(&x, 5, Boundary::Periodic, OpenNormalization::ValidTerms).unwrap();
    let cfg = LearnConfig {
        n_steps: 3000,
        n_samples: 40,
        max_iters: 15,
        seed: 16,
        ..LearnConfig::default()
    };
    let learned = learn_params(&target, &sh, &cfg).unwrap();
    let model = build_ising(&sh, &learned.params).unwrap();
    let top = model.max_abs_coupling();
    let deltas: Vec<f64> = (0..=20).map(|k| top * k as f64 / 20.0).collect();
    let counts: Vec<usize> = deltas
        .iter()
        .map(|&d| model.apply_threshold(d).unwrap().edge_count())
        .collect();
    let monotone = counts.windows(2).all(|w| w[1] <= w[0]);
    let zero = model.apply_threshold(0.0).unwrap();
    let same_bits = zero.j.len() == model.j.len()
        && zero
            .j
            .iter()
            .zip(&model.j)
            .all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits())
        && zero.h.iter().zip(&model.h).all(|(a, b)| a.to_bits() == b.to_bits());
    let artifact = deltas.iter().zip(&counts).map(|(d, c)| format!("{d},{c}\n")).collect();
    Found {
        pass: monotone && same_bits,
        detail: format!(
            "learned [12,25,5], 21 thresholds: edges {} -> {}, non-increasing: {monotone}; delta = 0 bit-identical: {same_bits}",
            counts[0],
            counts[counts.len() - 1]
        ),
        artifact,
    }
}

fn cluster_equivalence() -> Found {
    let sh = shape(4, 7, 1, Boundary::Periodic);
    let model = build_ising(&sh, &random_params(&sh, 1.0, 17)).unwrap();
    let sa = SimulatedAnnealer(SaParams::default());
    let sequential = sample_many(&sa, &model, 100, 18).unwrap();
    let replicated = replicate_ising(&model, 100).unwrap();
    let cluster = sample_cluster(&sa, &model, &replicated, 100, None, 1, UnembedPolicy::Majority, 18).unwrap();
    let a = sequential.stats(&sh).unwrap();
    let b = cluster.stats(&sh).unwrap();
    let worst = a.max_abs_diff(&b);
    Found {
        pass: cluster.total_occurrences() == 100 && worst <= 0.05,
        detail: format!(
            "[4,7,1], 100 copies in one anneal vs 100 anneals: worst moment difference {worst:.4} (tolerance 0.05)"
        ),
        artifact: format!("{}{}", sequential.to_jsonl(), cluster.to_jsonl()),
    }
}

fn boundary_cost() -> Found {
    let target = build_hardware(TopologyKind::Pegasus, 16).unwrap();
    let open = eval::shape_graph(&shape(6, 15, 2, Boundary::Open)).unwrap();
    let periodic = eval::shape_graph(&shape(6, 15, 2, Boundary::Periodic)).unwrap();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10 {
        let cfg = EmbedConfig {
            seed,
            ..EmbedConfig::default()
        };
        let q = |g: &Graph| find_embedding(g, &target, &cfg).ok().map(|o| o.embedding.n_qubits());
        let (o, p) = (q(&open), q(&periodic));
        if let (Some(o), Some(p)) = (o, p) {
            wins += usize::from(o <= p);
        }
        pairs.push(format!("{}/{}", fmt_opt(o), fmt_opt(p)));
    }
    Found {
        pass: wins >= 8,
        detail: format!(
            "[6,15,2] on Pegasus-16, open <= periodic qubits in {wins}/10 seeds (need 8); open/periodic: {}",
            pairs.join(" ")
        ),
        artifact: pairs.join(" "),
    }
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or("-".into(), |x| x.to_string())
}
