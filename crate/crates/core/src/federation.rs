//! Federated rounds: local clustering on clients, size-weighted aggregation on
//! the server.
//!
//! One round runs as follows. The server sends its global centroids to every
//! client through the downlink. From the second round on, each client first
//! drops the global centroids its own data does not support (see
//! [`knn_filter`]), then runs k-means from the remaining ones and reports its
//! centroids together with cluster sizes through the uplink. The server merges
//! the reports per cluster id, weighting each client's centroid by its share
//! of that cluster's samples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::channel::{ChannelModel, Direction};
use crate::clustering::{kmeans, knn_filter, Assignment, ClusterId, ClusterModel};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::hdc::{nearest_centroid, Hypervector, ProjectionMatrix};
use crate::metrics::{acc_with, comm_cost, Mapping, RoundRecord};
use crate::seed;

/// A client's encoded data and the state it carries between rounds.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub client_id: u32,
    /// Unit-normalized encodings of the client's samples.
    pub encoded_data: Vec<Hypervector>,
    /// Assignment from the most recent round, `None` before the first.
    pub assignment: Option<Assignment>,
    pub local_model: ClusterModel,
    /// Ids the client clustered with in its last round (`k_mi = active_ids.len()`).
    pub active_ids: BTreeSet<ClusterId>,
    /// Ids the kNN filter dropped in the last round.
    pub last_removed: BTreeSet<ClusterId>,
}

impl ClientState {
    /// Wraps already encoded hypervectors. They are normalized to unit length.
    pub fn new(client_id: u32, dim: usize, encoded: Vec<Hypervector>) -> Result<Self> {
        if let Some(bad) = encoded.iter().find(|h| h.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        Ok(ClientState {
            client_id,
            encoded_data: encoded.iter().map(Hypervector::normalized).collect(),
            assignment: None,
            local_model: ClusterModel::new(dim),
            active_ids: BTreeSet::new(),
            last_removed: BTreeSet::new(),
        })
    }

    /// Encodes every row of `data` with the shared projection.
    pub fn encode(client_id: u32, data: &LabeledDataset, proj: &ProjectionMatrix) -> Result<Self> {
        let encoded = data.rows().map(|row| proj.encode(row)).collect::<Result<Vec<_>>>()?;
        ClientState::new(client_id, proj.output_dim(), encoded)
    }

    pub fn num_samples(&self) -> usize {
        self.encoded_data.len()
    }

    /// Runs one round of local training against the received global model.
    ///
    /// Round 0 clusters from the full (initial) global model. Later rounds
    /// filter the global centroids against the previous assignment first; the
    /// neighbourhood size is capped at the number of local samples. When the
    /// filter would remove every centroid it is ignored for this round.
    /// A client without samples returns an empty update.
    pub fn client_round(
        &mut self,
        global: &ClusterModel,
        round: usize,
        local_epochs: usize,
        knn_k: usize,
    ) -> Result<ClientUpdate> {
        self.last_removed.clear();
        if self.encoded_data.is_empty() {
            self.active_ids.clear();
            return Ok(ClientUpdate { client_id: self.client_id, model: ClusterModel::new(global.dim()) });
        }

        let init = match &self.assignment {
            Some(prev) if round > 0 => {
                let k = knn_k.min(self.encoded_data.len());
                let outcome = knn_filter(&self.local_model, global, &self.encoded_data, prev, k)?;
                if outcome.survivors.is_empty() {
                    global.clone()
                } else {
                    let init = global.restricted_to(&outcome.survivors);
                    self.local_model = outcome.local;
                    self.last_removed = outcome.removed;
                    init
                }
            }
            _ => global.clone(),
        };

        let out = kmeans(&self.encoded_data, &init, local_epochs)?;
        self.active_ids = out.model.ids();
        self.assignment = Some(out.assignment);
        self.local_model = out.model;
        Ok(ClientUpdate { client_id: self.client_id, model: self.local_model.clone() })
    }
}

/// What a client sends to the server: its surviving centroids and their exact
/// sizes `S_ij` (stored in the model entries).
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: u32,
    pub model: ClusterModel,
}

impl ClientUpdate {
    pub fn sizes(&self) -> BTreeMap<ClusterId, usize> {
        self.model.iter().map(|(id, c)| (id, c.size)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.model.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ServerState {
    pub global_model: ClusterModel,
    /// Completed aggregations.
    pub round: usize,
    pub initial_model: ClusterModel,
}

impl ServerState {
    /// `num_clusters` random centroids with ids `1..=num_clusters` and i.i.d.
    /// standard normal entries.
    pub fn init_global(num_clusters: usize, dim: usize, seed: u64) -> Result<Self> {
        if num_clusters == 0 {
            return Err(Error::invalid("num_clusters", "must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::invalid("hdc_dim", "must be at least 1"));
        }
        let mut rng = seed::rng(seed, seed::stream::INIT_CENTROIDS);
        let mut model = ClusterModel::new(dim);
        for j in 1..=num_clusters as u32 {
            let values: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            model.insert(ClusterId(j), Hypervector::from_vec_unchecked(values), 0)?;
        }
        Ok(ServerState { global_model: model.clone(), round: 0, initial_model: model })
    }

    /// Replaces the global model with the aggregate of `updates` and advances
    /// the round counter.
    pub fn apply(&mut self, updates: &[ClientUpdate]) -> Result<()> {
        self.global_model = aggregate(updates, &self.global_model)?;
        self.round += 1;
        Ok(())
    }
}

/// Size-weighted merge of client centroids.
///
/// For every id reported with a positive total size,
/// `g_j = Σ_i (S_ij / Σ_i S_ij) · l_ij` and its size is `Σ_i S_ij`. Ids that
/// nobody reported (or reported only with size 0) keep the previous global
/// centroid with size 0.
pub fn aggregate(updates: &[ClientUpdate], previous: &ClusterModel) -> Result<ClusterModel> {
    if updates.is_empty() {
        return Err(Error::Empty("client updates"));
    }
    let dim = previous.dim();
    if let Some(bad) = updates.iter().find(|u| u.model.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.model.dim() });
    }

    let mut totals: BTreeMap<ClusterId, usize> = BTreeMap::new();
    for u in updates {
        for (id, c) in u.model.iter() {
            *totals.entry(id).or_default() += c.size;
        }
    }

    let mut merged = ClusterModel::new(dim);
    for (id, &total) in &totals {
        if total == 0 {
            continue;
        }
        let mut sum: Option<Vec<f64>> = None;
        for u in updates {
            let Some(c) = u.model.get(*id) else { continue };
            if c.size == 0 {
                continue;
            }
            let w = c.size as f64 / total as f64;
            match &mut sum {
                None => sum = Some(c.centroid.as_slice().iter().map(|v| w * v).collect()),
                Some(acc) => {
                    for (a, v) in acc.iter_mut().zip(c.centroid.as_slice()) {
                        *a += w * v;
                    }
                }
            }
        }
        let sum = sum.expect("positive total has a contributor");
        merged.insert(*id, Hypervector::from_vec_unchecked(sum), total)?;
    }
    for (id, c) in previous.iter() {
        if !merged.contains(id) {
            merged.insert(id, c.centroid.clone(), 0)?;
        }
    }
    Ok(merged)
}

/// Cluster id of the global centroid most similar to `h`.
pub fn predict(h: &Hypervector, global: &ClusterModel) -> Result<ClusterId> {
    if global.is_empty() {
        return Err(Error::Empty("global model"));
    }
    nearest_centroid(h, global.centroids())
}

/// Held-out encoded samples with their true classes.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub data: Vec<Hypervector>,
    pub labels: Vec<usize>,
    pub mapping: Mapping,
}

impl EvalSet {
    pub fn encode(data: &LabeledDataset, proj: &ProjectionMatrix) -> Result<Self> {
        let encoded = data.rows().map(|row| proj.encode(row)).collect::<Result<Vec<_>>>()?;
        Ok(EvalSet { data: encoded, labels: data.labels().to_vec(), mapping: Mapping::OneToOne })
    }

    pub fn predictions(&self, global: &ClusterModel) -> Result<Vec<ClusterId>> {
        self.data.iter().map(|h| predict(h, global)).collect()
    }

    pub fn accuracy(&self, global: &ClusterModel) -> Result<f64> {
        acc_with(&self.predictions(global)?, &self.labels, self.mapping)
    }

    pub fn with_mapping(mut self, mapping: Mapping) -> Self {
        self.mapping = mapping;
        self
    }
}

/// Runs a closure over every client, possibly in parallel.
///
/// Implementations must return results in client order and must not let one
/// client's closure observe another client's state.
pub trait ClientExecutor {
    fn map_clients<T, F>(&self, clients: &mut [ClientState], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ClientState) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialExecutor;

impl ClientExecutor for SequentialExecutor {
    fn map_clients<T, F>(&self, clients: &mut [ClientState], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ClientState) -> T + Sync + Send,
    {
        clients.iter_mut().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundParams {
    pub local_epochs: usize,
    pub knn_k: usize,
    pub rounds: usize,
}

struct ClientOutcome {
    update: ClientUpdate,
    removed: usize,
    active: usize,
}

/// Runs `params.rounds` federated rounds and returns one record per round.
///
/// Clients without samples sit out. Value counts follow the wire layout of
/// [`comm_cost`]: the full global model down to each participant, each
/// participant's active centroids plus sizes up.
pub fn run_rounds<X: ClientExecutor>(
    params: &RoundParams,
    clients: &mut [ClientState],
    server: &mut ServerState,
    channel: &ChannelModel,
    eval: &EvalSet,
    executor: &X,
) -> Result<Vec<RoundRecord>> {
    if params.rounds == 0 {
        return Err(Error::invalid("rounds", "must be at least 1"));
    }
    if params.local_epochs == 0 {
        return Err(Error::invalid("local_epochs", "must be at least 1"));
    }
    if params.knn_k == 0 {
        return Err(Error::invalid("knn_k", "must be at least 1"));
    }
    let dim = server.global_model.dim();
    let mut records = Vec::with_capacity(params.rounds);

    for _ in 0..params.rounds {
        let round = server.round;
        let global = server.global_model.clone();
        let outcomes = executor.map_clients(clients, |client| -> Result<Option<ClientOutcome>> {
            if client.num_samples() == 0 {
                return Ok(None);
            }
            let received = channel.transmit(&global, Direction::Downlink, round, client.client_id);
            let update = client.client_round(&received, round, params.local_epochs, params.knn_k)?;
            let sent = channel.transmit(&update.model, Direction::Uplink, round, client.client_id);
            Ok(Some(ClientOutcome {
                update: ClientUpdate { client_id: update.client_id, model: sent },
                removed: client.last_removed.len(),
                active: client.active_ids.len(),
            }))
        });

        let mut updates = Vec::new();
        let mut removed_total = 0;
        let mut active = Vec::new();
        for outcome in outcomes {
            if let Some(o) = outcome? {
                removed_total += o.removed;
                active.push(o.active);
                updates.push(o.update);
            }
        }
        if updates.is_empty() {
            return Err(Error::NoParticipants(round));
        }

        server.apply(&updates)?;
        let cost = comm_cost(global.len(), &active, dim, 1);
        records.push(RoundRecord {
            round,
            acc: eval.accuracy(&server.global_model)?,
            values_up: cost.values_up,
            values_down: cost.values_down,
            removed_clusters_total: removed_total,
            active_clusters_per_client: active,
        });
    }
    Ok(records)
}
