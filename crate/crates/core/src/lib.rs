//! Unsupervised federated clustering over hypervectors.
//!
//! Clients encode their local feature vectors into a shared hyperdimensional
//! space by random projection, run k-means over the encoded hypervectors, drop
//! global centroids that their local neighbourhood does not support, and send
//! the surviving centroids together with cluster sizes to a server that merges
//! them by size-weighted averaging.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `feduhd` companion crate.

#![no_std]

extern crate alloc;

pub mod channel;
pub mod clustering;
pub mod data;
mod error;
pub mod federation;
pub mod hdc;
pub mod metrics;
pub mod seed;

pub use channel::{degradation, ChannelKind, ChannelModel, Direction, Links};
pub use clustering::{
    active_cluster_count, kmeans, knn_filter, Assignment, Cluster, ClusterId, ClusterModel,
    KMeansOutcome, KnnFilterOutcome,
};
pub use data::{
    dirichlet_partition, make_blobs, train_test_split, LabeledDataset, Partition, PartitionSpec,
    Split, Standardizer,
};
pub use error::{Error, Result};
pub use federation::{
    aggregate, predict, run_rounds, ClientExecutor, ClientState, ClientUpdate, EvalSet,
    RoundParams, SequentialExecutor, ServerState,
};
pub use hdc::{cosine_similarity, encode, nearest_centroid, Hypervector, ProjectionMatrix};
pub use metrics::{
    acc, acc_with, comm_cost, optimal_assignment, CommCost, ConfusionMatrix, Mapping, Matrix,
    RoundRecord, BYTES_PER_VALUE,
};
