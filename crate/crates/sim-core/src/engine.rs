//! The period-stepped cluster engine.
//!
//! Work is modeled as fluid CPU-milliseconds served FIFO per service: while a
//! service has queued work it serves at a rate of `quota_cores` CPU-ms per
//! wall-clock ms, so its per-period budget of `quota * period` is exhausted
//! exactly when it stays busy for the whole period. A service that exhausts
//! its budget with work left over counts one throttled period.
//!
//! Stage handoffs are period-aligned: a visit spawned mid-period (by the
//! completion of the previous stage plus the hop delay) becomes serviceable
//! at the next period boundary. Quota changes are staged the same way and
//! take effect at the next boundary.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub type ServiceIdx = usize;
pub type RequestTypeIdx = usize;

/// Engine-wide timing parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Length of one scheduling period in milliseconds.
    pub period_ms: f64,
    /// Periods per controller decision window.
    pub periods_per_window: usize,
    /// Seed for the run's random streams (arrivals, exploration, ...).
    /// The engine itself is deterministic and does not draw from it.
    pub seed: u64,
    /// Network delay added between call-graph stages, in milliseconds.
    pub hop_delay_ms: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            period_ms: 100.0,
            periods_per_window: 10,
            seed: 0,
            hop_delay_ms: 1.0,
        }
    }
}

/// Static description of one service.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub id: String,
    /// CPU-milliseconds consumed at this service per visit, by request type.
    pub demand_ms: HashMap<RequestTypeIdx, f64>,
    pub quota_min_cores: f64,
    pub quota_max_cores: f64,
}

/// Per-request-type stages; each stage is a set of services visited in
/// parallel, stages run in order. Acyclic by construction: a request only
/// ever moves to the next stage.
#[derive(Debug, Clone, Default)]
pub struct CallGraph {
    pub stages_per_type: Vec<Vec<Vec<ServiceIdx>>>,
}

impl CallGraph {
    pub fn request_types(&self) -> usize {
        self.stages_per_type.len()
    }
}

/// One request entering the cluster at the start of a period.
#[derive(Debug, Clone, Copy)]
pub struct Arrival {
    pub request_id: u64,
    pub rtype: RequestTypeIdx,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("arrival {request_id} references unknown request type {rtype}")]
    UnknownRequestType {
        request_id: u64,
        rtype: RequestTypeIdx,
    },
    #[error("quota for service {service} must be finite and non-negative, got {cores}")]
    InvalidQuota { service: ServiceIdx, cores: f64 },
    #[error("unknown service index {0}")]
    UnknownService(ServiceIdx),
}

#[derive(Debug, Clone, Copy)]
struct Visit {
    request: u64,
    remaining_ms: f64,
}

#[derive(Debug, Clone, Copy)]
struct DeferredVisit {
    avail_period: u64,
    seq: u64,
    visit: Visit,
}

#[derive(Debug)]
struct Service {
    spec: ServiceSpec,
    quota_cores: f64,
    staged_quota: Option<f64>,
    usage_total_ms: f64,
    nr_throttled: u64,
    /// Serviceable this period, FIFO.
    ready: std::collections::VecDeque<Visit>,
    /// Spawned mid-period; joins `ready` at its availability boundary.
    deferred: Vec<DeferredVisit>,
}

impl Service {
    fn pending_ready_ms(&self) -> f64 {
        self.ready.iter().map(|v| v.remaining_ms).sum()
    }

    fn pending_total_ms(&self) -> f64 {
        self.pending_ready_ms()
            + self
                .deferred
                .iter()
                .map(|d| d.visit.remaining_ms)
                .sum::<f64>()
    }
}

#[derive(Debug)]
struct RequestState {
    rtype: RequestTypeIdx,
    arrival_ms: f64,
    stage: usize,
    outstanding: usize,
    stage_done_at_ms: f64,
}

/// Everything the engine reports about one executed period.
#[derive(Debug, Clone)]
pub struct PeriodReport {
    pub period_index: u64,
    pub start_ms: f64,
    pub services: Vec<ServicePeriodReport>,
    pub completed: Vec<CompletedRequest>,
}

#[derive(Debug, Clone, Copy)]
pub struct ServicePeriodReport {
    /// Quota in effect during this period.
    pub quota_cores: f64,
    pub budget_ms: f64,
    /// CPU-ms of work serviceable at the period boundary.
    pub pending_start_ms: f64,
    pub served_ms: f64,
    /// CPU-ms of work left anywhere in the service's pipeline at period end.
    pub pending_end_ms: f64,
    pub throttled: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CompletedRequest {
    pub id: u64,
    pub rtype: RequestTypeIdx,
    pub arrival_ms: f64,
    pub completion_ms: f64,
}

impl CompletedRequest {
    pub fn latency_ms(&self) -> f64 {
        self.completion_ms - self.arrival_ms
    }
}

/// The simulated cluster: services, call graph, and in-flight requests.
#[derive(Debug)]
pub struct Cluster {
    config: SimConfig,
    services: Vec<Service>,
    graph: CallGraph,
    inflight: HashMap<u64, RequestState>,
    period_index: u64,
    visit_seq: u64,
}

impl Cluster {
    pub fn new(
        config: SimConfig,
        specs: Vec<ServiceSpec>,
        graph: CallGraph,
    ) -> Result<Self, SimError> {
        if !(config.period_ms > 0.0) {
            return Err(SimError::Config("period_ms must be positive".into()));
        }
        if config.periods_per_window < 1 {
            return Err(SimError::Config("periods_per_window must be >= 1".into()));
        }
        if !(config.hop_delay_ms >= 0.0) {
            return Err(SimError::Config("hop_delay_ms must be non-negative".into()));
        }
        for (idx, spec) in specs.iter().enumerate() {
            if !(spec.quota_min_cores > 0.0 && spec.quota_min_cores <= spec.quota_max_cores) {
                return Err(SimError::Config(format!(
                    "service {} ({}): need 0 < quota_min <= quota_max",
                    idx, spec.id
                )));
            }
            for (&rtype, &d) in &spec.demand_ms {
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(SimError::Config(format!(
                        "service {} ({}): demand for request type {} must be finite and >= 0",
                        idx, spec.id, rtype
                    )));
                }
            }
        }
        for (rtype, stages) in graph.stages_per_type.iter().enumerate() {
            if stages.is_empty() {
                return Err(SimError::Config(format!(
                    "request type {rtype}: call graph needs at least one stage"
                )));
            }
            for (stage_idx, stage) in stages.iter().enumerate() {
                if stage.is_empty() {
                    return Err(SimError::Config(format!(
                        "request type {rtype} stage {stage_idx}: empty stage"
                    )));
                }
                for &svc in stage {
                    let spec = specs.get(svc).ok_or_else(|| {
                        SimError::Config(format!(
                            "request type {rtype} stage {stage_idx}: unknown service index {svc}"
                        ))
                    })?;
                    if !spec.demand_ms.contains_key(&rtype) {
                        return Err(SimError::Config(format!(
                            "service {} ({}) is visited by request type {rtype} but has no demand entry",
                            svc, spec.id
                        )));
                    }
                }
            }
        }
        let services = specs
            .into_iter()
            .map(|spec| {
                let quota = spec.quota_max_cores;
                Service {
                    spec,
                    quota_cores: quota,
                    staged_quota: None,
                    usage_total_ms: 0.0,
                    nr_throttled: 0,
                    ready: Default::default(),
                    deferred: Vec::new(),
                }
            })
            .collect();
        Ok(Self {
            config,
            services,
            graph,
            inflight: HashMap::new(),
            period_index: 0,
            visit_seq: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn num_services(&self) -> usize {
        self.services.len()
    }

    pub fn service_id(&self, service: ServiceIdx) -> &str {
        &self.services[service].spec.id
    }

    pub fn quota_bounds(&self, service: ServiceIdx) -> (f64, f64) {
        let s = &self.services[service].spec;
        (s.quota_min_cores, s.quota_max_cores)
    }

    pub fn period_index(&self) -> u64 {
        self.period_index
    }

    /// Cumulative (throttled periods, CPU-ms used) counters for a service.
    /// Reading has no side effects; callers difference across periods.
    pub fn read_stats(&self, service: ServiceIdx) -> (u64, f64) {
        let s = &self.services[service];
        (s.nr_throttled, s.usage_total_ms)
    }

    /// Quota currently in effect (staged changes not yet visible).
    pub fn effective_quota(&self, service: ServiceIdx) -> f64 {
        self.services[service].quota_cores
    }

    /// Stage a quota change; it takes effect at the next period boundary.
    /// The value is clamped to the service's configured bounds.
    pub fn set_quota(&mut self, service: ServiceIdx, cores: f64) -> Result<(), SimError> {
        if service >= self.services.len() {
            return Err(SimError::UnknownService(service));
        }
        if !cores.is_finite() || cores < 0.0 {
            return Err(SimError::InvalidQuota { service, cores });
        }
        let s = &mut self.services[service];
        let clamped = cores.clamp(s.spec.quota_min_cores, s.spec.quota_max_cores);
        s.staged_quota = Some(clamped);
        Ok(())
    }

    /// Set a quota immediately, bypassing the boundary alignment. Intended
    /// for initialization before the first period runs.
    pub fn set_quota_immediate(&mut self, service: ServiceIdx, cores: f64) -> Result<(), SimError> {
        self.set_quota(service, cores)?;
        let s = &mut self.services[service];
        s.quota_cores = s.staged_quota.take().unwrap();
        Ok(())
    }

    /// Advance the cluster by one period, injecting `arrivals` at its start.
    pub fn step_period(&mut self, arrivals: &[Arrival]) -> Result<PeriodReport, SimError> {
        let period = self.period_index;
        let t0 = period as f64 * self.config.period_ms;
        let t_end = t0 + self.config.period_ms;

        for s in &mut self.services {
            if let Some(q) = s.staged_quota.take() {
                s.quota_cores = q;
            }
            // Visits that reached their availability boundary join the FIFO.
            if !s.deferred.is_empty() {
                s.deferred.sort_by_key(|d| (d.avail_period, d.seq));
                let split = s.deferred.partition_point(|d| d.avail_period <= period);
                for d in s.deferred.drain(..split) {
                    s.ready.push_back(d.visit);
                }
            }
        }

        for arrival in arrivals {
            if arrival.rtype >= self.graph.request_types() {
                return Err(SimError::UnknownRequestType {
                    request_id: arrival.request_id,
                    rtype: arrival.rtype,
                });
            }
            let stage0 = &self.graph.stages_per_type[arrival.rtype][0];
            self.inflight.insert(
                arrival.request_id,
                RequestState {
                    rtype: arrival.rtype,
                    arrival_ms: t0,
                    stage: 0,
                    outstanding: stage0.len(),
                    stage_done_at_ms: t0,
                },
            );
            for &svc in stage0 {
                let demand = self.services[svc].spec.demand_ms[&arrival.rtype];
                self.services[svc].ready.push_back(Visit {
                    request: arrival.request_id,
                    remaining_ms: demand,
                });
            }
        }

        // Serve every service for the period, recording visit completions.
        let mut completions: Vec<(f64, u64)> = Vec::new();
        let mut service_reports = Vec::with_capacity(self.services.len());
        for s in &mut self.services {
            let budget = s.quota_cores * self.config.period_ms;
            let pending_start = s.pending_ready_ms();
            let mut budget_left = budget;
            let mut cursor = t0;
            while budget_left > 0.0 {
                let Some(head) = s.ready.front_mut() else {
                    break;
                };
                let amount = head.remaining_ms.min(budget_left);
                head.remaining_ms -= amount;
                budget_left -= amount;
                // Accumulated rounding can push the cursor a hair past the
                // boundary; completions never land outside the period.
                cursor = (cursor + amount / s.quota_cores).min(t_end);
                if head.remaining_ms == 0.0 {
                    completions.push((cursor, head.request));
                    s.ready.pop_front();
                } else {
                    break; // budget exhausted mid-visit
                }
            }
            let served = budget - budget_left;
            s.usage_total_ms += served;
            let pending_end = s.pending_total_ms();
            let throttled = budget_left == 0.0 && pending_end > 0.0;
            if throttled {
                s.nr_throttled += 1;
            }
            service_reports.push(ServicePeriodReport {
                quota_cores: s.quota_cores,
                budget_ms: budget,
                pending_start_ms: pending_start,
                served_ms: served,
                pending_end_ms: pending_end,
                throttled,
            });
        }

        // Advance stages for requests whose current stage fully completed.
        // Processing in (time, request) order keeps spawn sequencing, and
        // therefore downstream FIFO order, deterministic.
        completions.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut completed = Vec::new();
        for (time, request_id) in completions {
            let state = self
                .inflight
                .get_mut(&request_id)
                .expect("completion for unknown request");
            state.outstanding -= 1;
            if time > state.stage_done_at_ms {
                state.stage_done_at_ms = time;
            }
            if state.outstanding > 0 {
                continue;
            }
            let stages = &self.graph.stages_per_type[state.rtype];
            if state.stage + 1 == stages.len() {
                let state = self.inflight.remove(&request_id).unwrap();
                completed.push(CompletedRequest {
                    id: request_id,
                    rtype: state.rtype,
                    arrival_ms: state.arrival_ms,
                    completion_ms: state.stage_done_at_ms,
                });
                continue;
            }
            state.stage += 1;
            let avail_ms = state.stage_done_at_ms + self.config.hop_delay_ms;
            // Handoffs are serviceable from the next boundary at the earliest.
            let avail_period = ((avail_ms / self.config.period_ms).ceil() as u64).max(period + 1);
            let next_stage = &stages[state.stage];
            state.outstanding = next_stage.len();
            state.stage_done_at_ms = avail_ms;
            let rtype = state.rtype;
            for &svc in next_stage {
                let demand = self.services[svc].spec.demand_ms[&rtype];
                let seq = self.visit_seq;
                self.visit_seq += 1;
                self.services[svc].deferred.push(DeferredVisit {
                    avail_period,
                    seq,
                    visit: Visit {
                        request: request_id,
                        remaining_ms: demand,
                    },
                });
            }
        }

        debug_assert!(completed.iter().all(|c| c.completion_ms <= t_end));
        self.period_index += 1;
        Ok(PeriodReport {
            period_index: period,
            start_ms: t0,
            services: service_reports,
            completed,
        })
    }
}
