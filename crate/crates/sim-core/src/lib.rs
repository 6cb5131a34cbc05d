//! Discrete-time simulator of a service cluster governed by CPU quotas.
//!
//! Time advances in fixed scheduling periods (100 ms by default). Each
//! service owns a CPU quota in cores; within a period it may consume at most
//! `quota * period` CPU-milliseconds of work. Requests traverse a per-type
//! call graph of sequential stages, each stage fanning out to one or more
//! services in parallel. The engine exposes exactly the counters a
//! quota-tracking controller consumes: cumulative CPU usage and the
//! cumulative number of periods in which a service exhausted its quota with
//! work still pending.

pub mod engine;
pub mod metrics;
pub mod stats;

pub use engine::{
    Arrival, CallGraph, Cluster, CompletedRequest, PeriodReport, ServicePeriodReport, ServiceSpec,
    SimConfig, SimError,
};
pub use metrics::{ServiceWindow, WindowMetrics};
