//! Labeled datasets, synthetic blobs, stratified splits and Dirichlet
//! label-skew partitioning.
//!
//! Labels are used only to shape partitions and to score clusterings; the
//! federated training path never reads them.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

/// `N×F` feature matrix (row-major) with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    feature_dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(feature_dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::invalid("feature_dim", "must be at least 1"));
        }
        if features.len() != labels.len() * feature_dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * feature_dim,
                found: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(LabeledDataset { feature_dim, features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// One more than the largest label, or 0 for an empty dataset.
    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.feature_dim)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let mut features = Vec::with_capacity(indices.len() * self.feature_dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        LabeledDataset {
            feature_dim: self.feature_dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Sample indices grouped by class, ascending within each class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.num_classes()];
        for (i, &y) in self.labels.iter().enumerate() {
            by_class[y].push(i);
        }
        by_class
    }

    pub fn class_histogram(&self, indices: &[usize]) -> Vec<usize> {
        let mut hist = vec![0; self.num_classes()];
        for &i in indices {
            hist[self.labels[i]] += 1;
        }
        hist
    }
}

/// Per-feature z-scoring fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &LabeledDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let f = data.feature_dim();
        let n = data.len() as f64;
        let mut mean = vec![0.0; f];
        for row in data.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; f];
        for row in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        // constant features are only centred
        let scale = var.into_iter().map(|v| if v > 0.0 { libm::sqrt(v) } else { 1.0 }).collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.feature_dim() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: data.feature_dim() });
        }
        let mut features = data.features.clone();
        for row in features.chunks_exact_mut(data.feature_dim) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(LabeledDataset { features, ..data.clone() })
    }
}

/// Isotropic Gaussian blobs with unit within-class standard deviation.
///
/// When `num_classes <= feature_dim`, class `c` is centred on the `c`-th axis
/// at distance `separation / √2`, so every pair of class means is exactly
/// `separation` apart. Otherwise means are random directions of that length.
pub fn make_blobs(
    num_classes: usize,
    per_class: usize,
    feature_dim: usize,
    separation: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if num_classes == 0 {
        return Err(Error::invalid("num_classes", "must be at least 1"));
    }
    if per_class == 0 {
        return Err(Error::invalid("per_class", "must be at least 1"));
    }
    if feature_dim == 0 {
        return Err(Error::invalid("feature_dim", "must be at least 1"));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::invalid("separation", "must be a positive finite number"));
    }
    let mut rng = seed::rng(seed, seed::stream::BLOBS);
    let radius = separation / core::f64::consts::SQRT_2;
    let means: Vec<Vec<f64>> = (0..num_classes)
        .map(|c| {
            if num_classes <= feature_dim {
                let mut m = vec![0.0; feature_dim];
                m[c] = radius;
                m
            } else {
                let d: Vec<f64> = (0..feature_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = libm::sqrt(d.iter().map(|v| v * v).sum::<f64>()).max(f64::MIN_POSITIVE);
                d.into_iter().map(|v| v * radius / n).collect()
            }
        })
        .collect();

    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(num_classes * per_class * feature_dim);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for _ in 0..per_class {
        for (c, mean) in means.iter().enumerate() {
            features.extend(mean.iter().map(|m| m + noise.sample(&mut rng)));
            labels.push(c);
        }
    }
    LabeledDataset::new(feature_dim, features, labels)
}

/// Index-level train/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split. `round(N · test_fraction)` test samples (clamped so both
/// sides are non-empty when `N ≥ 2`) are spread over classes by largest
/// remainder, and drawn uniformly within each class.
pub fn train_test_split(dataset: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test_fraction", "must lie strictly between 0 and 1"));
    }
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let n = dataset.len();
    let mut test_total = libm::floor(n as f64 * test_fraction + 0.5) as usize;
    if n >= 2 {
        test_total = test_total.clamp(1, n - 1);
    }
    let classes = dataset.class_indices();
    let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
    let quotas = largest_remainder(&weights, test_total, &sizes);

    let mut rng = seed::rng(seed, seed::stream::SPLIT);
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for (mut members, quota) in classes.into_iter().zip(quotas) {
        members.shuffle(&mut rng);
        split.test.extend_from_slice(&members[..quota]);
        split.train.extend_from_slice(&members[quota..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Integer allocation of `total` proportional to `weights`: floors first, then
/// one extra unit per largest fractional remainder (ties to the lower index).
/// No slot receives more than its `cap`.
fn largest_remainder(weights: &[f64], total: usize, caps: &[usize]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| if sum > 0.0 { w / sum * total as f64 } else { 0.0 }).collect();
    let mut counts: Vec<usize> = exact
        .iter()
        .zip(caps)
        .map(|(e, &cap)| (libm::floor(*e) as usize).min(cap))
        .collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - libm::floor(exact[a]);
        let rb = exact[b] - libm::floor(exact[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(counts.iter().sum());
    for &i in &order {
        if left == 0 {
            break;
        }
        if counts[i] < caps[i] {
            counts[i] += 1;
            left -= 1;
        }
    }
    // only reachable when caps bind
    let mut i = 0;
    while left > 0 && i < counts.len() {
        let room = caps[i] - counts[i];
        let take = room.min(left);
        counts[i] += take;
        left -= take;
        i += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    alpha: f64,
    num_clients: usize,
    seed: u64,
}

impl PartitionSpec {
    pub fn new(alpha: f64, num_clients: usize, seed: u64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", "must be a positive finite number"));
        }
        if num_clients == 0 {
            return Err(Error::invalid("num_clients", "must be at least 1"));
        }
        Ok(PartitionSpec { alpha, num_clients, seed })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_clients(&self) -> usize {
        self.num_clients
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Disjoint shards of dataset indices, one per client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub shards: Vec<Vec<usize>>,
}

impl Partition {
    /// Checks that shards are disjoint, in range and together cover `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for shard in &self.shards {
            for &i in shard {
                if i >= n {
                    return Err(Error::invalid("partition", alloc::format!("index {i} out of range for {n} samples")));
                }
                if seen[i] {
                    return Err(Error::invalid("partition", alloc::format!("index {i} appears twice")));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid("partition", alloc::format!("index {missing} is not assigned")));
        }
        Ok(())
    }

    pub fn class_histograms(&self, dataset: &LabeledDataset) -> Vec<Vec<usize>> {
        self.shards.iter().map(|s| dataset.class_histogram(s)).collect()
    }
}

/// Label-skew partition: for each class, client proportions are drawn from
/// `Dirichlet(alpha · 1)` and the (shuffled) class members are split by
/// largest-remainder rounding of those proportions.
pub fn dirichlet_partition(dataset: &LabeledDataset, spec: &PartitionSpec) -> Result<Partition> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let clients = spec.num_clients;
    let classes = dataset.class_indices();
    let largest_class = classes.iter().map(Vec::len).max().unwrap_or(0);
    if clients > largest_class {
        return Err(Error::DegeneratePartition { clients, largest_class });
    }

    let mut rng = seed::rng(spec.seed, seed::stream::PARTITION);
    let mut shards = vec![Vec::new(); clients];
    for mut members in classes {
        if members.is_empty() {
            continue;
        }
        let proportions = sample_dirichlet(spec.alpha, clients, &mut rng);
        let counts = largest_remainder(&proportions, members.len(), &vec![members.len(); clients]);
        members.shuffle(&mut rng);
        let mut rest = members.as_slice();
        for (shard, count) in shards.iter_mut().zip(counts) {
            let (take, tail) = rest.split_at(count);
            shard.extend_from_slice(take);
            rest = tail;
        }
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(Partition { shards })
}

/// Symmetric Dirichlet draw, computed in log space so that small `alpha`
/// does not underflow every component to zero. Uses
/// `Gamma(a) = Gamma(a + 1) · U^(1/a)`.
fn sample_dirichlet<R: Rng + ?Sized>(alpha: f64, size: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(alpha + 1.0, 1.0).expect("shape is positive");
    let logs: Vec<f64> = (0..size)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
            libm::log(g) + libm::log(u) / alpha
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| libm::exp(l - max)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}
