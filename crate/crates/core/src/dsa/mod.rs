//! Network simulator for classification-driven distributed scheduling.
//!
//! In-network links sense the channel, classify it, exchange requests and
//! responses with their neighbors, and transmit in the data slots they win.
//! Out-network users must be protected; jammers only add interference.
//! Two centralized TDMA schedules serve as baselines.

mod channel;
mod classifier;
mod graph;
mod protocol;
mod sim;
mod topology;

pub use channel::{evaluate_slot, SinrConfig, SlotOutcome, Transmission};
pub use classifier::{
    quantize_snr, sense_channel, table_accuracy, ChannelStatus, Classifier, EmitterView, SensingTruth, MCD_JAMMER_ACCURACY,
    PER_SNR_ACCURACY, SNR_GRID_DB, SUPERIMPOSED_ACCURACY, TABLE_ALL_ACCURACY,
};
pub use graph::{build_interference_graph, greedy_coloring, InterferenceGraph};
pub use protocol::{make_request, make_response, resolve_transmission, Request, RequestType, Response};
pub use sim::{
    benchmark_scheme_1, benchmark_scheme_2, run_simulation, ActivityModel, Metrics, SimOptions, SuperframeConfig,
    SuperframeRecord,
};
pub use topology::{generate_topology, Link, Node, Role, Topology, TopologyConfig};

use crate::nnet::NnetError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DsaError {
    #[error("could not place nodes so every in-network node has a neighbor")]
    InfeasiblePlacement,
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Classifier(#[from] NnetError),
}
