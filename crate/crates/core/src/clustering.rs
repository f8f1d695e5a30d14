//! Cluster models, k-means over hypervectors and the kNN centroid filter.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::hdc::{cosine_with_norms, norm, Hypervector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterId(pub u32);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub centroid: Hypervector,
    /// Number of samples last assigned to this cluster.
    pub size: usize,
}

/// Ordered map from cluster id to centroid and size. Every centroid has the
/// model's dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    dim: usize,
    entries: BTreeMap<ClusterId, Cluster>,
}

impl ClusterModel {
    pub fn new(dim: usize) -> Self {
        ClusterModel { dim, entries: BTreeMap::new() }
    }

    /// Builds a model from `(id, centroid, size)` triples. Duplicate ids are
    /// rejected.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ClusterId, Hypervector, usize)>,
    {
        let mut model = ClusterModel::new(dim);
        for (id, centroid, size) in entries {
            if model.entries.contains_key(&id) {
                return Err(Error::invalid("cluster_id", alloc::format!("duplicate id {id}")));
            }
            model.insert(id, centroid, size)?;
        }
        Ok(model)
    }

    /// Inserts or replaces the entry for `id`.
    pub fn insert(&mut self, id: ClusterId, centroid: Hypervector, size: usize) -> Result<()> {
        if centroid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: centroid.dim() });
        }
        self.entries.insert(id, Cluster { centroid, size });
        Ok(())
    }

    pub fn remove(&mut self, id: ClusterId) -> Option<Cluster> {
        self.entries.remove(&id)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ClusterId) -> Option<&Cluster> {
        self.entries.get(&id)
    }

    pub fn contains(&self, id: ClusterId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn ids(&self) -> BTreeSet<ClusterId> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClusterId, &Cluster)> + '_ {
        self.entries.iter().map(|(id, c)| (*id, c))
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = (ClusterId, &mut Cluster)> + '_ {
        self.entries.iter_mut().map(|(id, c)| (*id, c))
    }

    pub fn centroids(&self) -> impl Iterator<Item = (ClusterId, &Hypervector)> + '_ {
        self.entries.iter().map(|(id, c)| (*id, &c.centroid))
    }

    pub fn total_size(&self) -> usize {
        self.entries.values().map(|c| c.size).sum()
    }

    /// Copy keeping only the ids in `keep`.
    pub fn restricted_to(&self, keep: &BTreeSet<ClusterId>) -> ClusterModel {
        ClusterModel {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .filter(|(id, _)| keep.contains(id))
                .map(|(id, c)| (*id, c.clone()))
                .collect(),
        }
    }
}

/// One cluster id per encoded sample, aligned by index with the data.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment(pub Vec<ClusterId>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ClusterId] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    pub model: ClusterModel,
    pub assignment: Assignment,
    /// Lloyd iterations actually performed (at most the requested count).
    pub iterations: usize,
    /// Objective `Σ (1 − cos(x, assigned centroid))`, recorded after the first
    /// assignment and after every subsequent update and assignment step.
    pub objective_trace: Vec<f64>,
}

/// Lloyd's k-means with cosine assignment and arithmetic-mean updates.
///
/// Each iteration assigns every point to its most similar centroid (ties to
/// the lowest id) and moves each centroid to the mean of its points. A
/// centroid that receives no points keeps its position and reports size 0.
/// Stops after `iterations` rounds or once assignments stop changing. The
/// returned centroids are the means of the returned assignment.
///
/// The objective trace is non-increasing when all points share one norm,
/// which is how clients feed their (unit-normalized) hypervectors.
pub fn kmeans(data: &[Hypervector], init: &ClusterModel, iterations: usize) -> Result<KMeansOutcome> {
    if data.is_empty() {
        return Err(Error::Empty("k-means data"));
    }
    if init.is_empty() {
        return Err(Error::Empty("k-means initial centroids"));
    }
    if iterations == 0 {
        return Err(Error::invalid("iterations", "must be at least 1"));
    }
    let dim = init.dim();
    if let Some(bad) = data.iter().find(|h| h.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
    }

    let ids: Vec<ClusterId> = init.iter().map(|(id, _)| id).collect();
    let mut centroids: Vec<Vec<f64>> = init.iter().map(|(_, c)| c.centroid.as_slice().to_vec()).collect();
    let data_norms: Vec<f64> = data.iter().map(|h| h.norm()).collect();

    let mut trace = Vec::new();
    let mut labels = assign(data, &data_norms, &centroids);
    trace.push(objective(data, &data_norms, &centroids, &labels));
    let mut performed = 0;

    for _ in 0..iterations {
        performed += 1;
        update_means(data, &labels, &mut centroids);
        trace.push(objective(data, &data_norms, &centroids, &labels));
        let next = assign(data, &data_norms, &centroids);
        trace.push(objective(data, &data_norms, &centroids, &next));
        if next == labels {
            break;
        }
        labels = next;
        if performed == iterations {
            // keep centroids equal to the means of the returned assignment
            update_means(data, &labels, &mut centroids);
            trace.push(objective(data, &data_norms, &centroids, &labels));
        }
    }

    let mut sizes = vec![0usize; ids.len()];
    for &k in &labels {
        sizes[k] += 1;
    }
    let mut model = ClusterModel::new(dim);
    for ((id, c), size) in ids.iter().zip(centroids).zip(sizes) {
        model.insert(*id, Hypervector::from_vec_unchecked(c), size)?;
    }
    let assignment = Assignment(labels.iter().map(|&k| ids[k]).collect());
    Ok(KMeansOutcome { model, assignment, iterations: performed, objective_trace: trace })
}

// Index of the most similar centroid per point; ids are sorted, so the first
// maximum is the lowest id.
fn assign(data: &[Hypervector], data_norms: &[f64], centroids: &[Vec<f64>]) -> Vec<usize> {
    let cnorms: Vec<f64> = centroids.iter().map(|c| norm(c)).collect();
    data.iter()
        .zip(data_norms)
        .map(|(h, &hn)| {
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (k, (c, &cn)) in centroids.iter().zip(&cnorms).enumerate() {
                let sim = cosine_with_norms(h.as_slice(), hn, c, cn);
                if sim > best_sim {
                    best_sim = sim;
                    best = k;
                }
            }
            best
        })
        .collect()
}

fn update_means(data: &[Hypervector], labels: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = centroids[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (h, &k) in data.iter().zip(labels) {
        counts[k] += 1;
        for (s, v) in sums[k].iter_mut().zip(h.as_slice()) {
            *s += v;
        }
    }
    for ((c, s), n) in centroids.iter_mut().zip(sums).zip(counts) {
        if n == 0 {
            continue;
        }
        let n = n as f64;
        for (ci, si) in c.iter_mut().zip(s) {
            *ci = si / n;
        }
    }
}

fn objective(data: &[Hypervector], data_norms: &[f64], centroids: &[Vec<f64>], labels: &[usize]) -> f64 {
    let cnorms: Vec<f64> = centroids.iter().map(|c| norm(c)).collect();
    data.iter()
        .zip(data_norms)
        .zip(labels)
        .map(|((h, &hn), &k)| 1.0 - cosine_with_norms(h.as_slice(), hn, &centroids[k], cnorms[k]))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnFilterOutcome {
    pub survivors: BTreeSet<ClusterId>,
    pub removed: BTreeSet<ClusterId>,
    /// The previous local model with the removed ids dropped.
    pub local: ClusterModel,
}

/// Drops global centroids that the client's own data does not support.
///
/// For every global centroid `j`, the `k_n` samples most cosine-similar to it
/// are collected (equal similarities ordered by sample index). `j` survives
/// when at least one of them was assigned to `j` in the previous round.
/// Removed ids are dropped from the local model as well.
pub fn knn_filter(
    local_prev: &ClusterModel,
    global: &ClusterModel,
    data: &[Hypervector],
    assignment_prev: &Assignment,
    k_n: usize,
) -> Result<KnnFilterOutcome> {
    if global.is_empty() {
        return Err(Error::Empty("global model"));
    }
    if k_n == 0 {
        return Err(Error::invalid("k_n", "must be at least 1"));
    }
    if k_n > data.len() {
        return Err(Error::invalid(
            "k_n",
            alloc::format!("{k_n} neighbours requested but only {} samples", data.len()),
        ));
    }
    if assignment_prev.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), found: assignment_prev.len() });
    }
    if let Some(bad) = data.iter().find(|h| h.dim() != global.dim()) {
        return Err(Error::DimensionMismatch { expected: global.dim(), found: bad.dim() });
    }

    let data_norms: Vec<f64> = data.iter().map(|h| h.norm()).collect();
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(data.len());
    let mut survivors = BTreeSet::new();
    let mut removed = BTreeSet::new();

    for (id, centroid) in global.centroids() {
        let cn = centroid.norm();
        order.clear();
        order.extend(
            data.iter()
                .zip(&data_norms)
                .enumerate()
                .map(|(i, (h, &hn))| (cosine_with_norms(centroid.as_slice(), cn, h.as_slice(), hn), i)),
        );
        order.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        if order[..k_n].iter().any(|&(_, i)| assignment_prev.0[i] == id) {
            survivors.insert(id);
        } else {
            removed.insert(id);
        }
    }

    let mut local = local_prev.clone();
    for id in &removed {
        local.remove(*id);
    }
    Ok(KnnFilterOutcome { survivors, removed, local })
}

/// The per-client active cluster count `k_mi`.
pub fn active_cluster_count(survivors: &BTreeSet<ClusterId>) -> usize {
    survivors.len()
}
