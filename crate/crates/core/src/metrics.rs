//! Clustering accuracy under the best one-to-one cluster→class mapping, and
//! communication accounting.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::clustering::ClusterId;
use crate::error::{Error, Result};

/// Bytes per transmitted value on the wire (32-bit floats / integers).
pub const BYTES_PER_VALUE: u64 = 4;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: bad.len() });
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Maximum-weight one-to-one matching between rows and columns.
///
/// Returns, for every row, the matched column (or `None` when the matrix has
/// more rows than columns and the row is left out). Exactly `min(rows, cols)`
/// rows are matched. The rectangular problem is padded to a square one with
/// zero weights and solved with the O(n³) shortest-augmenting-path Hungarian
/// method on `max − w` costs.
pub fn optimal_assignment(weights: &Matrix) -> Vec<Option<usize>> {
    let (rows, cols) = (weights.rows, weights.cols);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    let top = weights.data.iter().copied().fold(0.0f64, f64::max);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols { top - weights.get(i, j) } else { top }
    };

    // 1-based potentials; column 0 is the virtual root
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; rows];
    for (j, &i) in matched_row.iter().enumerate().skip(1) {
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Counts of (predicted cluster, true class) pairs. Rows are the distinct
/// predicted ids in ascending order, columns the distinct classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub cluster_ids: Vec<ClusterId>,
    pub classes: Vec<usize>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(predicted: &[ClusterId], truth: &[usize]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch { expected: predicted.len(), found: truth.len() });
        }
        if predicted.is_empty() {
            return Err(Error::Empty("prediction"));
        }
        let rows: BTreeMap<ClusterId, usize> = predicted.iter().map(|&p| (p, 0)).collect();
        let cols: BTreeMap<usize, usize> = truth.iter().map(|&t| (t, 0)).collect();
        let rows: BTreeMap<ClusterId, usize> = rows.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
        let cols: BTreeMap<usize, usize> = cols.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
        let mut counts = vec![0u64; rows.len() * cols.len()];
        for (p, t) in predicted.iter().zip(truth) {
            counts[rows[p] * cols.len() + cols[t]] += 1;
        }
        Ok(ConfusionMatrix {
            cluster_ids: rows.into_keys().collect(),
            classes: cols.into_keys().collect(),
            counts,
        })
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.classes.len() + col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn as_matrix(&self) -> Matrix {
        Matrix {
            rows: self.cluster_ids.len(),
            cols: self.classes.len(),
            data: self.counts.iter().map(|&c| c as f64).collect(),
        }
    }

    /// Samples covered by the best one-to-one cluster→class mapping.
    pub fn best_matched(&self) -> u64 {
        optimal_assignment(&self.as_matrix())
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| self.count(r, c)))
            .sum()
    }

    /// Samples covered when every cluster takes its majority class.
    pub fn majority_matched(&self) -> u64 {
        (0..self.cluster_ids.len())
            .map(|r| (0..self.classes.len()).map(|c| self.count(r, c)).max().unwrap_or(0))
            .sum()
    }
}

/// How predicted clusters are matched to classes when scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mapping {
    /// Injective cluster→class mapping; surplus clusters score zero.
    #[default]
    OneToOne,
    /// Each cluster maps to its majority class; several clusters may share one.
    ManyToOne,
}

/// Unsupervised clustering accuracy: the fraction of samples correct under the
/// best injective mapping from predicted clusters to true classes. Clusters
/// left without a class count as errors.
pub fn acc(predicted: &[ClusterId], truth: &[usize]) -> Result<f64> {
    let cm = ConfusionMatrix::new(predicted, truth)?;
    Ok(cm.best_matched() as f64 / cm.total() as f64)
}

/// Clustering accuracy under the chosen `mapping`.
pub fn acc_with(predicted: &[ClusterId], truth: &[usize], mapping: Mapping) -> Result<f64> {
    let cm = ConfusionMatrix::new(predicted, truth)?;
    let hit = match mapping {
        Mapping::OneToOne => cm.best_matched(),
        Mapping::ManyToOne => cm.majority_matched(),
    };
    Ok(hit as f64 / cm.total() as f64)
}

/// Transmitted value counts. Downlink carries the global centroids to every
/// client; uplink carries each client's active centroids plus one size value
/// per centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CommCost {
    pub values_down: u64,
    pub values_up: u64,
}

impl CommCost {
    pub fn total_values(&self) -> u64 {
        self.values_down + self.values_up
    }

    pub fn bytes(&self) -> u64 {
        self.total_values() * BYTES_PER_VALUE
    }
}

impl core::ops::AddAssign for CommCost {
    fn add_assign(&mut self, rhs: Self) {
        self.values_down += rhs.values_down;
        self.values_up += rhs.values_up;
    }
}

/// Cost of `rounds` identical rounds in which `active_per_client.len()`
/// clients each receive `global_clusters` centroids of length `dim` and send
/// back `active_per_client[i]` centroids with their sizes.
pub fn comm_cost(global_clusters: usize, active_per_client: &[usize], dim: usize, rounds: usize) -> CommCost {
    let clients = active_per_client.len() as u64;
    let down = clients * global_clusters as u64 * dim as u64;
    let up: u64 = active_per_client.iter().map(|&a| a as u64 * (dim as u64 + 1)).sum();
    CommCost { values_down: down * rounds as u64, values_up: up * rounds as u64 }
}

/// Observables of one federated round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub acc: f64,
    pub values_up: u64,
    pub values_down: u64,
    pub removed_clusters_total: usize,
    /// Active cluster count `k_mi` of each participating client after the round.
    pub active_clusters_per_client: Vec<usize>,
}

impl RoundRecord {
    pub fn active_min(&self) -> usize {
        self.active_clusters_per_client.iter().copied().min().unwrap_or(0)
    }

    pub fn active_max(&self) -> usize {
        self.active_clusters_per_client.iter().copied().max().unwrap_or(0)
    }
}
