//! Autoscaling strategies for the cluster simulator.
//!
//! Every strategy implements the [`Controller`] trait and is registered by
//! name in [`registry`]; the experiment harness selects one at runtime from
//! its config. Strategies:
//!
//! - `autothrottle`: per-service throttle-ratio controllers ([`captain`])
//!   coordinated by a cluster-wide contextual bandit ([`tower`]) that picks
//!   throttle-ratio targets from observed RPS.
//! - `k8s-cpu` / `k8s-cpu-fast`: utilization-threshold autoscalers
//!   ([`baselines`]) at slow / fast cadences.
//! - `static`: fixed allocations.
//! - `fixed-target`: captains tracking operator-supplied throttle targets,
//!   with no bandit on top.

pub mod api;
pub mod baselines;
pub mod captain;
pub mod registry;
pub mod strategy;
pub mod tower;

pub use api::{
    Controller, MinuteDecision, MinuteObservation, MinuteOutcome, PeriodObservation, Phase,
    PhaseContext, QuotaCommand, ServicePeriodStats,
};
pub use registry::{build_controller, controller_names, BuildContext, BuildError, ServiceView};
