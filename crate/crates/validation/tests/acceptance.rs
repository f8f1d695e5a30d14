//! Acceptance suite: one PASS / FAIL / SKIPPED line per criterion.
//!
//! Thresholds and instance counts are pinned below. The process exits with a
//! non-zero status if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use feduhd::commands::cmd_run;
use feduhd::config::{ChannelConfig, DatasetSource, ExperimentConfig, Seeds};
use feduhd::experiment::{prepare, train};
use feduhd::parallel::{default_workers, RayonExecutor};
use feduhd_core::{
    acc, aggregate, comm_cost, kmeans, knn_filter, optimal_assignment, Assignment, ClientState, ClientUpdate,
    ClusterId, ClusterModel, Hypervector, Matrix,
};
use feduhd_validation::{acc_by_enumeration, best_injective_total};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BLOBS: &str = include_str!("../../../configs/blobs.example.toml");
const HAR: &str = include_str!("../../../configs/har.toml");

const ACC_CASES: usize = 500;
const ACC_TIME_LIMIT: Duration = Duration::from_secs(10);
const ASSIGNMENT_CASES: usize = 500;
const AGGREGATION_CASES: usize = 100;
const AGGREGATION_TOL: f64 = 1e-9;
const SYNTHETIC_SEEDS: u64 = 10;
const SYNTHETIC_MIN_ACC: f64 = 0.95;
const SYNTHETIC_MIN_PASSING: usize = 9;
const SYNTHETIC_TIME_LIMIT: Duration = Duration::from_secs(60);
const HAR_MIN_ACC: f64 = 0.66;
const HAR_TIME_LIMIT: Duration = Duration::from_secs(600);
const HAR_DIR_ENV: &str = "FEDUHD_HAR_DIR";
const ROBUSTNESS_SEEDS: u64 = 5;
const ROBUSTNESS_LOSS_RATES: [f64; 4] = [0.0, 0.1, 0.3, 0.5];
const ROBUSTNESS_OPERATING_POINT: f64 = 0.3;
const ROBUSTNESS_MAX_DEGRADATION: f64 = 25.0;
const KMEANS_CASES: usize = 200;
const KMEANS_TOL: f64 = 1e-9;
const KNN_CASES: usize = 200;

type Criterion = (&'static str, fn() -> Verdict);

enum Verdict {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok { Verdict::Pass(detail) } else { Verdict::Fail(detail) }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence: acc", acc_oracle),
        ("oracle equivalence: optimal_assignment", assignment_oracle),
        ("aggregation mean-consistency", aggregation_mean_consistency),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("HAR reproduction", har_reproduction),
        ("communication-cost accounting", communication_cost),
        ("robustness under packet loss", robustness),
        ("k-means monotonicity", kmeans_monotonicity),
        ("determinism across worker counts", determinism),
        ("kNN-filter suite", knn_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let (tag, detail) = match run() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skipped(d) => ("SKIPPED", d),
        };
        println!("{tag:<7} {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}


fn acc_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..ACC_CASES {
        let j = rng.random_range(1..=6u32);
        let k = rng.random_range(1..=4usize);
        let n = rng.random_range(1..=40usize);
        let pred: Vec<u32> = (0..n).map(|_| rng.random_range(0..j)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let ids: Vec<ClusterId> = pred.iter().map(|&p| ClusterId(p)).collect();
        if acc(&ids, &truth).unwrap() != acc_by_enumeration(&pred, &truth) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < ACC_TIME_LIMIT,
        format!("{mismatches}/{ACC_CASES} mismatches, {:.2} s (limit {} s)", elapsed.as_secs_f64(), ACC_TIME_LIMIT.as_secs()),
    )
}

fn assignment_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut mismatches = 0;
    for _ in 0..ASSIGNMENT_CASES {
        let small = rng.random_range(1..=7usize);
        let large = rng.random_range(small..=8usize);
        let (rows, cols) = if rng.random() { (small, large) } else { (large, small) };
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0..50) as f64).collect();
        let m = Matrix::new(rows, cols, data.clone()).unwrap();
        let a = optimal_assignment(&m);
        let mut seen = vec![false; cols];
        let injective = a.iter().flatten().all(|&c| !std::mem::replace(&mut seen[c], true));
        let total: f64 = a.iter().enumerate().filter_map(|(r, c)| c.map(|c| m.get(r, c))).sum();
        if !injective || a.iter().flatten().count() != rows.min(cols) || total != best_injective_total(rows, cols, &data) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches}/{ASSIGNMENT_CASES} mismatches"))
}

fn random_hv(rng: &mut ChaCha8Rng, dim: usize) -> Hypervector {
    Hypervector::new((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
}

fn aggregation_mean_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst: f64 = 0.0;
    let mut carry_forward_ok = true;
    for _ in 0..AGGREGATION_CASES {
        let clients = rng.random_range(1..=5usize);
        let j = rng.random_range(1..=4u32);
        let dim = rng.random_range(1..=16usize);
        let previous =
            ClusterModel::from_entries(dim, (1..=j).map(|id| (ClusterId(id), random_hv(&mut rng, dim), 0))).unwrap();

        let mut union: BTreeMap<u32, (Vec<f64>, usize)> = BTreeMap::new();
        let mut updates = Vec::new();
        for c in 0..clients {
            let mut groups: BTreeMap<u32, Vec<Hypervector>> = BTreeMap::new();
            for _ in 0..rng.random_range(0..12usize) {
                groups.entry(rng.random_range(1..=j)).or_default().push(random_hv(&mut rng, dim));
            }
            let mut model = ClusterModel::new(dim);
            for (&id, points) in &groups {
                let mut mean = vec![0.0; dim];
                for p in points {
                    for (m, v) in mean.iter_mut().zip(p.as_slice()) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= points.len() as f64);
                model.insert(ClusterId(id), Hypervector::new(mean).unwrap(), points.len()).unwrap();
                let entry = union.entry(id).or_insert_with(|| (vec![0.0; dim], 0));
                for p in points {
                    for (s, v) in entry.0.iter_mut().zip(p.as_slice()) {
                        *s += v;
                    }
                }
                entry.1 += points.len();
            }
            updates.push(ClientUpdate { client_id: c as u32, model });
        }

        let global = aggregate(&updates, &previous).unwrap();
        for id in 1..=j {
            let got = global.get(ClusterId(id)).unwrap();
            match union.get(&id) {
                Some((sum, n)) => {
                    for (g, s) in got.centroid.as_slice().iter().zip(sum) {
                        worst = worst.max((g - s / *n as f64).abs());
                    }
                }
                None => carry_forward_ok &= got.centroid == previous.get(ClusterId(id)).unwrap().centroid,
            }
        }
    }
    check(
        worst <= AGGREGATION_TOL && carry_forward_ok,
        format!("{AGGREGATION_CASES} instances, max |g - union mean| = {worst:.3e} (tol {AGGREGATION_TOL:e})"),
    )
}


fn blobs_config() -> ExperimentConfig {
    let config = ExperimentConfig::from_toml(BLOBS).unwrap();
    config.validate().unwrap();
    config
}

fn executor(config: &ExperimentConfig) -> RayonExecutor {
    RayonExecutor::new(default_workers(config.federation.num_clients)).unwrap()
}

fn final_acc(config: &ExperimentConfig, seeds: Seeds, channel: &ChannelConfig, exec: &RayonExecutor) -> f64 {
    let prepared = prepare(config, seeds).unwrap();
    train(config, seeds, &prepared, channel, exec).unwrap().last().unwrap().acc
}

fn synthetic_end_to_end() -> Verdict {
    let config = blobs_config();
    let b = config.dataset.blobs.as_ref().unwrap();
    assert_eq!((b.num_classes, b.feature_dim, config.federation.num_clients), (4, 16, 10));
    assert!(b.separation >= 8.0);
    assert_eq!((config.model.hdc_dim, config.model.num_clusters, config.model.local_epochs), (1024, 8, 10));
    assert_eq!((config.model.knn_k, config.model.rounds, config.federation.dirichlet_alpha), (8, 25, 0.1));
    assert_eq!(config.model.acc_mapping, Default::default());

    let exec = executor(&config);
    let start = Instant::now();
    let accs: Vec<f64> =
        (0..SYNTHETIC_SEEDS).map(|s| final_acc(&config, Seeds::all(s), &config.channel, &exec)).collect();
    let elapsed = start.elapsed();
    let passing = accs.iter().filter(|&&a| a >= SYNTHETIC_MIN_ACC).count();

    let mut many = config.clone();
    many.model.acc_mapping = feduhd::config::AccMapping::ManyToOne;
    let many_accs: Vec<f64> =
        (0..SYNTHETIC_SEEDS).map(|s| final_acc(&many, Seeds::all(s), &many.channel, &exec)).collect();

    let fmt = |v: &[f64]| v.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" ");
    check(
        passing >= SYNTHETIC_MIN_PASSING && elapsed < SYNTHETIC_TIME_LIMIT,
        format!(
            "{passing}/{SYNTHETIC_SEEDS} seeds reach ACC >= {SYNTHETIC_MIN_ACC} (need {SYNTHETIC_MIN_PASSING}), {:.1} s; \
             ACC [{}]; many-to-one ACC for reference [{}]",
            elapsed.as_secs_f64(),
            fmt(&accs),
            fmt(&many_accs)
        ),
    )
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn har_reproduction() -> Verdict {
    let dir = std::env::var_os(HAR_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data/UCI HAR Dataset"));
    if !dir.join("train/X_train.txt").is_file() {
        return Verdict::Skipped(format!("dataset not found at {} (set {HAR_DIR_ENV})", dir.display()));
    }
    let mut config = ExperimentConfig::from_toml(HAR).unwrap();
    assert_eq!(config.dataset.source, DatasetSource::UciHar);
    config.dataset.path = Some(dir);
    config.validate().unwrap();
    let exec = executor(&config);
    let start = Instant::now();
    let acc = final_acc(&config, config.seeds, &config.channel, &exec);
    let elapsed = start.elapsed();
    check(
        acc >= HAR_MIN_ACC && elapsed < HAR_TIME_LIMIT,
        format!("final ACC {acc:.4} (need >= {HAR_MIN_ACC}), {:.1} s", elapsed.as_secs_f64()),
    )
}

fn communication_cost() -> Verdict {
    let har = ExperimentConfig::from_toml(HAR).unwrap();
    let (i, j, d) = (har.federation.num_clients, har.model.num_clusters, har.model.hdc_dim);
    let formula = comm_cost(j, &vec![j; i], d, 1);

    // Round 0 never filters, so it exercises the no-removal case through the
    // full pipeline. Blobs stand in for the HAR data; a large alpha keeps
    // every client non-empty.
    let mut config = har.clone();
    config.dataset = blobs_config().dataset;
    config.dataset.blobs.as_mut().unwrap().num_classes = 6;
    config.federation.dirichlet_alpha = 1000.0;
    config.model.rounds = 1;
    config.validate().unwrap();
    let exec = executor(&config);
    let prepared = prepare(&config, config.seeds).unwrap();
    let record = train(&config, config.seeds, &prepared, &config.channel, &exec).unwrap().remove(0);

    let ok = formula.values_down == 120_000
        && formula.values_up == 120_120
        && record.values_down == 120_000
        && record.values_up == 120_120
        && record.removed_clusters_total == 0;
    check(
        ok,
        format!(
            "formula down {} up {}; pipeline round 0 down {} up {} (expected 120000 / 120120)",
            formula.values_down, formula.values_up, record.values_down, record.values_up
        ),
    )
}

fn robustness() -> Verdict {
    let config = blobs_config();
    let exec = executor(&config);
    let mut mean_deg = vec![0.0; ROBUSTNESS_LOSS_RATES.len()];
    for s in 0..ROBUSTNESS_SEEDS {
        let seeds = Seeds::all(s);
        let prepared = prepare(&config, seeds).unwrap();
        let run = |ch: &ChannelConfig| train(&config, seeds, &prepared, ch, &exec).unwrap().last().unwrap().acc;
        let base = run(&ChannelConfig::noiseless());
        for (k, &p) in ROBUSTNESS_LOSS_RATES.iter().enumerate() {
            let acc = run(&ChannelConfig::packet_loss(p));
            mean_deg[k] += feduhd_core::degradation(base, acc).unwrap() / ROBUSTNESS_SEEDS as f64;
        }
    }
    let at = ROBUSTNESS_LOSS_RATES.iter().position(|&p| p == ROBUSTNESS_OPERATING_POINT).unwrap();
    let monotone = mean_deg.windows(2).all(|w| w[1] >= w[0]);
    let table = ROBUSTNESS_LOSS_RATES
        .iter()
        .zip(&mean_deg)
        .map(|(p, d)| format!("p={p}: {d:.2}%"))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        mean_deg[at] <= ROBUSTNESS_MAX_DEGRADATION && monotone,
        format!(
            "mean degradation over {ROBUSTNESS_SEEDS} seeds [{table}]; limit {ROBUSTNESS_MAX_DEGRADATION}% at p={ROBUSTNESS_OPERATING_POINT}, monotone: {monotone}"
        ),
    )
}


fn kmeans_monotonicity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut violations = 0;
    let mut worst_rise: f64 = 0.0;
    for case in 0..KMEANS_CASES {
        let dim = rng.random_range(2..=64usize);
        let n = rng.random_range(1..=80usize);
        let j = rng.random_range(1..=8u32);
        let centers: Vec<Hypervector> = (0..3).map(|_| random_hv(&mut rng, dim)).collect();
        let points: Vec<Hypervector> = (0..n)
            .map(|_| {
                let c = &centers[rng.random_range(0..centers.len())];
                Hypervector::new(c.as_slice().iter().map(|v| v + rng.random_range(-2.0..2.0)).collect()).unwrap()
            })
            .collect();
        // Clients feed k-means through ClientState, which normalizes.
        let client = ClientState::new(case as u32, dim, points).unwrap();
        let init = ClusterModel::from_entries(dim, (1..=j).map(|id| (ClusterId(id), random_hv(&mut rng, dim), 0))).unwrap();
        let out = kmeans(&client.encoded_data, &init, rng.random_range(1..=15)).unwrap();
        for w in out.objective_trace.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
            if w[1] > w[0] + KMEANS_TOL {
                violations += 1;
            }
        }
    }
    check(
        violations == 0,
        format!("{KMEANS_CASES} instances, {violations} increases, largest step {worst_rise:.3e} (tol {KMEANS_TOL:e})"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (tag, workers) in [("a", 1), ("b", 1), ("c", 4), ("d", 16)] {
        let mut config = blobs_config();
        config.output_dir = dir.path().join(tag);
        config.workers = Some(workers);
        if let Err(e) = cmd_run(&config) {
            return Verdict::Fail(format!("run failed: {e}"));
        }
        outputs.push((workers, std::fs::read(config.output_dir.join("rounds.csv")).unwrap()));
    }
    let identical = outputs.iter().all(|(_, o)| *o == outputs[0].1);
    let workers: Vec<usize> = outputs.iter().map(|(w, _)| *w).collect();
    check(identical, format!("rounds.csv identical across 4 runs with workers {workers:?}: {identical}"))
}

fn model(entries: &[(u32, &[f64])]) -> ClusterModel {
    ClusterModel::from_entries(
        entries[0].1.len(),
        entries.iter().map(|(id, v)| (ClusterId(*id), Hypervector::new(v.to_vec()).unwrap(), 1)),
    )
    .unwrap()
}

fn knn_suite() -> Verdict {
    // Two centroids; every nearest neighbour of either was labelled 2.
    let data: Vec<Hypervector> = [[1.0, 0.05], [1.0, -0.05], [0.9, 0.3], [0.0, 1.0]]
        .iter()
        .map(|v| Hypervector::new(v.to_vec()).unwrap())
        .collect();
    let prev = Assignment(vec![ClusterId(2); 4]);
    let global = model(&[(1, &[1.0, 0.0]), (2, &[0.95, 0.2])]);
    let local = model(&[(1, &[0.0, 1.0]), (2, &[0.8, 0.3])]);
    let out = knn_filter(&local, &global, &data, &prev, 2).unwrap();
    let scenario_ok = out.removed.iter().copied().eq([ClusterId(1)])
        && out.survivors.iter().copied().eq([ClusterId(2)])
        && out.local.ids() == out.survivors;

    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mut broken = 0;
    for _ in 0..KNN_CASES {
        let dim = rng.random_range(2..=12usize);
        let n = rng.random_range(1..=30usize);
        let j = rng.random_range(1..=8u32);
        let data: Vec<Hypervector> = (0..n).map(|_| random_hv(&mut rng, dim)).collect();
        let prev = Assignment((0..n).map(|_| ClusterId(rng.random_range(1..=j))).collect());
        let global =
            ClusterModel::from_entries(dim, (1..=j).map(|id| (ClusterId(id), random_hv(&mut rng, dim), 0))).unwrap();
        let out = knn_filter(&global, &global, &data, &prev, rng.random_range(1..=n)).unwrap();
        let union: std::collections::BTreeSet<_> = out.survivors.union(&out.removed).copied().collect();
        if union != global.ids() || !out.survivors.is_disjoint(&out.removed) {
            broken += 1;
        }
    }
    check(
        scenario_ok && broken == 0,
        format!("removal scenario removes exactly centroid 1: {scenario_ok}; partition identity broken in {broken}/{KNN_CASES} cases"),
    )
}
