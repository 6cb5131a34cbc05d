//! Experiment configuration: a single TOML file describing the application
//! topology, workload, controller choice, SLO, and durations.
//!
//! Parsing is strict (unknown fields are rejected) and semantic validation
//! reports the offending field path, so a bad config fails before any
//! simulation starts.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use controllers::captain::CaptainParams;
use controllers::tower::{TowerParams, TrainingLabel, DEFAULT_LADDER};
use controllers::{BuildContext, ServiceView};
use serde::Deserialize;
use sim_core::{CallGraph, ServiceSpec, SimConfig};
use workload::{gen_trace, load_trace, Composition, Trace, TraceKind};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub sim: SimSection,
    pub slo: SloSection,
    #[serde(default)]
    pub durations: DurationsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(rename = "service")]
    pub services: Vec<ServiceSection>,
    #[serde(rename = "request")]
    pub requests: Vec<RequestSection>,
    pub workload: WorkloadSection,
    pub controller: ControllerSection,
    pub correlate: Option<CorrelateSection>,
    pub sweep: Option<SweepSection>,
    pub fluctuate: Option<FluctuateSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub period_ms: f64,
    pub hop_delay_ms: f64,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            period_ms: 100.0,
            hop_delay_ms: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SloSection {
    /// Latency percentile the SLO is evaluated at, e.g. 0.99.
    pub percentile: f64,
    /// Upper bound on that percentile, in milliseconds.
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DurationsSection {
    /// Warm-up: RPS ramps up 10% every 5 s to the trace's initial rate.
    /// Excluded from all reports.
    pub warmup_s: u64,
    /// Exploration-stage length for learning controllers, in one-minute
    /// steps.
    pub exploration_steps: u64,
    /// Measured portion of the run.
    pub measurement_s: u64,
}

impl Default for DurationsSection {
    fn default() -> Self {
        Self {
            warmup_s: 60,
            exploration_steps: 0,
            measurement_s: 3600,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSection {
    pub id: String,
    pub quota_min_cores: f64,
    pub quota_max_cores: f64,
    /// CPU-milliseconds consumed per visit, keyed by request type name.
    pub demand_ms: HashMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestSection {
    pub name: String,
    pub fraction: f64,
    /// Ordered stages; each stage lists the services visited in parallel.
    pub stages: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    /// One of diurnal, constant, noisy, bursty, or file.
    pub kind: String,
    pub duration_s: Option<u64>,
    pub rps_min: Option<f64>,
    pub rps_avg: Option<f64>,
    pub rps_max: Option<f64>,
    /// Trace file for kind = "file".
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    /// Registered strategy name; see `controllers::controller_names()`.
    pub name: String,
    #[serde(default)]
    pub captain: CaptainSection,
    #[serde(default)]
    pub tower: TowerSection,
    pub k8s: Option<K8sSection>,
    #[serde(rename = "static")]
    pub static_alloc: Option<StaticSection>,
    pub fixed_target: Option<FixedTargetSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptainSection {
    pub window_periods: Option<usize>,
    pub history_periods: Option<usize>,
    pub alpha: Option<f64>,
    pub beta_max: Option<f64>,
    pub beta_min: Option<f64>,
    pub initial_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TowerSection {
    pub epsilon: Option<f64>,
    pub exploration_hold_steps: Option<u64>,
    pub training_samples_per_update: Option<usize>,
    /// Defaults to the cluster capacity (sum of quota maxima).
    pub alloc_norm_max_cores: Option<f64>,
    /// Defaults to 5x the SLO latency.
    pub latency_norm_max_ms: Option<f64>,
    pub bin_size_rps: Option<f64>,
    pub learning_rate: Option<f64>,
    /// "nn3" or "linear".
    pub model: Option<String>,
    /// "group-median" or "raw-sample" (ablation).
    pub training_label: Option<TrainingLabel>,
    pub ladder: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct K8sSection {
    pub utilization_threshold: f64,
    pub measure_interval_s: Option<f64>,
    pub lookback_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticSection {
    /// Cores per service id; services left out get their quota maximum.
    pub cores: HashMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedTargetSection {
    /// Throttle target applied to every service.
    pub target: f64,
    /// Per-service overrides by id.
    #[serde(default)]
    pub per_service: HashMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateSection {
    /// Services to sweep; defaults to all.
    pub services: Option<Vec<String>>,
    #[serde(default = "default_quota_points")]
    pub quota_points: usize,
    pub quota_min_cores: Option<f64>,
    pub quota_max_cores: Option<f64>,
    /// Measured seconds per sweep point.
    #[serde(default = "default_correlate_window")]
    pub window_s: u64,
}

fn default_quota_points() -> usize {
    40
}

fn default_correlate_window() -> u64 {
    120
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Utilization thresholds to try.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

fn default_thresholds() -> Vec<f64> {
    (1..=9).map(|t| t as f64 / 10.0).collect()
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuateSection {
    /// Half-ranges of the per-window uniform RPS resampling, in RPS.
    pub half_ranges: Vec<f64>,
    /// One-minute windows measured per range.
    #[serde(default = "default_fluctuate_windows")]
    pub windows: u64,
}

fn default_fluctuate_windows() -> u64 {
    60
}

/// Everything a run needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub sim: SimConfig,
    pub specs: Vec<ServiceSpec>,
    pub graph: CallGraph,
    pub composition: Composition,
    pub trace: Trace,
    pub slo_percentile: f64,
    pub slo_ms: f64,
    pub warmup_s: u64,
    pub exploration_steps: u64,
    pub measurement_s: u64,
    pub seed: u64,
    pub controller_name: String,
    pub build_ctx: BuildContext,
    pub out_dir: PathBuf,
    /// Keep per-hour raw latency logs in the artifacts (test hook).
    pub capture_raw_latencies: bool,
}

impl RunPlan {
    pub fn service_index(&self, id: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.id == id)
    }
}

impl std::str::FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    /// Validate and resolve into a run plan. `seed_override` and
    /// `out_dir_override` come from the CLI flags.
    pub fn plan(
        &self,
        seed_override: Option<u64>,
        out_dir_override: Option<PathBuf>,
    ) -> Result<RunPlan, ConfigError> {
        if self.services.is_empty() {
            return Err(invalid("service", "at least one [[service]] is required"));
        }
        if self.requests.is_empty() {
            return Err(invalid("request", "at least one [[request]] is required"));
        }
        if !(self.sim.period_ms > 0.0) {
            return Err(invalid("sim.period_ms", "must be positive"));
        }
        let ppm = 60_000.0 / self.sim.period_ms;
        if (ppm - ppm.round()).abs() > 1e-9 {
            return Err(invalid(
                "sim.period_ms",
                "one minute must be a whole number of periods",
            ));
        }
        if !(self.slo.percentile > 0.0 && self.slo.percentile < 1.0) {
            return Err(invalid("slo.percentile", "must be in (0, 1)"));
        }
        if !(self.slo.latency_ms > 0.0) {
            return Err(invalid("slo.latency_ms", "must be positive"));
        }
        // Keep every phase boundary on a decision-log minute.
        if !self.durations.warmup_s.is_multiple_of(60) {
            return Err(invalid("durations.warmup_s", "must be a multiple of 60"));
        }
        if !self.durations.measurement_s.is_multiple_of(60) {
            return Err(invalid(
                "durations.measurement_s",
                "must be a multiple of 60",
            ));
        }

        // Service table and request-type numbering follow file order.
        let mut service_index = HashMap::new();
        for (idx, svc) in self.services.iter().enumerate() {
            if service_index.insert(svc.id.clone(), idx).is_some() {
                return Err(invalid(
                    format!("service[{idx}].id"),
                    format!("duplicate service id {:?}", svc.id),
                ));
            }
            if !(svc.quota_min_cores > 0.0 && svc.quota_min_cores <= svc.quota_max_cores) {
                return Err(invalid(
                    format!("service[{idx}].quota_min_cores"),
                    "need 0 < quota_min_cores <= quota_max_cores",
                ));
            }
        }
        let mut request_index = HashMap::new();
        for (idx, req) in self.requests.iter().enumerate() {
            if request_index.insert(req.name.clone(), idx).is_some() {
                return Err(invalid(
                    format!("request[{idx}].name"),
                    format!("duplicate request type {:?}", req.name),
                ));
            }
        }

        let mut specs = Vec::with_capacity(self.services.len());
        for (idx, svc) in self.services.iter().enumerate() {
            let mut demand_ms = HashMap::new();
            for (rname, &ms) in &svc.demand_ms {
                let Some(&rtype) = request_index.get(rname) else {
                    return Err(invalid(
                        format!("service[{idx}].demand_ms.{rname}"),
                        "unknown request type",
                    ));
                };
                if !(ms >= 0.0) || !ms.is_finite() {
                    return Err(invalid(
                        format!("service[{idx}].demand_ms.{rname}"),
                        "must be finite and >= 0",
                    ));
                }
                demand_ms.insert(rtype, ms);
            }
            specs.push(ServiceSpec {
                id: svc.id.clone(),
                demand_ms,
                quota_min_cores: svc.quota_min_cores,
                quota_max_cores: svc.quota_max_cores,
            });
        }

        let mut stages_per_type = Vec::with_capacity(self.requests.len());
        for (ridx, req) in self.requests.iter().enumerate() {
            if req.stages.is_empty() {
                return Err(invalid(
                    format!("request[{ridx}].stages"),
                    "needs at least one stage",
                ));
            }
            let mut stages = Vec::with_capacity(req.stages.len());
            for (sidx, stage) in req.stages.iter().enumerate() {
                if stage.is_empty() {
                    return Err(invalid(
                        format!("request[{ridx}].stages[{sidx}]"),
                        "stage must visit at least one service",
                    ));
                }
                let mut visits = Vec::with_capacity(stage.len());
                for (vidx, name) in stage.iter().enumerate() {
                    let Some(&svc) = service_index.get(name) else {
                        return Err(invalid(
                            format!("request[{ridx}].stages[{sidx}][{vidx}]"),
                            format!("unknown service {name:?}"),
                        ));
                    };
                    if !specs[svc].demand_ms.contains_key(&ridx) {
                        return Err(invalid(
                            format!("request[{ridx}].stages[{sidx}][{vidx}]"),
                            format!(
                                "service {name:?} has no demand_ms entry for request {:?}",
                                req.name
                            ),
                        ));
                    }
                    visits.push(svc);
                }
                stages.push(visits);
            }
            stages_per_type.push(stages);
        }
        let graph = CallGraph { stages_per_type };

        let composition = Composition::new(self.requests.iter().map(|r| r.fraction).collect())
            .map_err(|e| invalid("request[*].fraction", e.to_string()))?;

        let seed = seed_override.unwrap_or(self.sim.seed);
        let trace = self.build_trace(seed)?;
        if trace.is_empty() && self.durations.measurement_s > 0 {
            return Err(invalid("workload", "trace is empty but measurement_s > 0"));
        }

        let capacity: f64 = self.services.iter().map(|s| s.quota_max_cores).sum();
        let captain = self.resolve_captain()?;
        let tower = self.resolve_tower(&trace, capacity, &captain)?;

        let mut build_ctx = BuildContext::new(
            self.services
                .iter()
                .map(|s| ServiceView {
                    id: s.id.clone(),
                    quota_min_cores: s.quota_min_cores,
                    quota_max_cores: s.quota_max_cores,
                })
                .collect(),
            self.sim.period_ms,
            seed,
        );
        build_ctx.captain = captain.clone();
        build_ctx.tower = tower;
        if let Some(k8s) = &self.controller.k8s {
            if !(k8s.utilization_threshold > 0.0 && k8s.utilization_threshold <= 1.0) {
                return Err(invalid(
                    "controller.k8s.utilization_threshold",
                    "must be in (0, 1]",
                ));
            }
            build_ctx.k8s_threshold = Some(k8s.utilization_threshold);
            if let (Some(m), Some(s)) = (k8s.measure_interval_s, k8s.lookback_s) {
                build_ctx.k8s_cadence = Some((m, s));
            } else if k8s.measure_interval_s.is_some() || k8s.lookback_s.is_some() {
                return Err(invalid(
                    "controller.k8s",
                    "measure_interval_s and lookback_s must be set together",
                ));
            }
        }
        if let Some(static_alloc) = &self.controller.static_alloc {
            for id in static_alloc.cores.keys() {
                if !service_index.contains_key(id) {
                    return Err(invalid(
                        format!("controller.static.cores.{id}"),
                        "unknown service",
                    ));
                }
            }
            build_ctx.static_cores = Some(
                self.services
                    .iter()
                    .map(|s| {
                        static_alloc
                            .cores
                            .get(&s.id)
                            .copied()
                            .unwrap_or(s.quota_max_cores)
                    })
                    .collect(),
            );
        }
        if let Some(fixed) = &self.controller.fixed_target {
            for id in fixed.per_service.keys() {
                if !service_index.contains_key(id) {
                    return Err(invalid(
                        format!("controller.fixed_target.per_service.{id}"),
                        "unknown service",
                    ));
                }
            }
            build_ctx.fixed_targets = Some(
                self.services
                    .iter()
                    .map(|s| {
                        fixed
                            .per_service
                            .get(&s.id)
                            .copied()
                            .unwrap_or(fixed.target)
                    })
                    .collect(),
            );
        }

        Ok(RunPlan {
            sim: SimConfig {
                period_ms: self.sim.period_ms,
                periods_per_window: captain.window_periods,
                seed,
                hop_delay_ms: self.sim.hop_delay_ms,
            },
            specs,
            graph,
            composition,
            trace,
            slo_percentile: self.slo.percentile,
            slo_ms: self.slo.latency_ms,
            warmup_s: self.durations.warmup_s,
            exploration_steps: self.durations.exploration_steps,
            measurement_s: self.durations.measurement_s,
            seed,
            controller_name: self.controller.name.clone(),
            build_ctx,
            out_dir: out_dir_override.unwrap_or_else(|| self.output.dir.clone()),
            capture_raw_latencies: false,
        })
    }

    fn build_trace(&self, seed: u64) -> Result<Trace, ConfigError> {
        let w = &self.workload;
        if w.kind == "file" {
            let path = w.path.as_ref().ok_or_else(|| {
                invalid("workload.path", "required when workload.kind = \"file\"")
            })?;
            return load_trace(path).map_err(|e| invalid("workload.path", e.to_string()));
        }
        let kind: TraceKind = w
            .kind
            .parse()
            .map_err(|e: String| invalid("workload.kind", e))?;
        let duration = w
            .duration_s
            .ok_or_else(|| invalid("workload.duration_s", "required for generated traces"))?;
        let (min, avg, max) = match (w.rps_min, w.rps_avg, w.rps_max) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(invalid(
                    "workload",
                    "rps_min, rps_avg, and rps_max are required for generated traces",
                ))
            }
        };
        gen_trace(kind, duration, min, avg, max, seed ^ 0x7472_6163)
            .map_err(|e| invalid("workload", e.to_string()))
    }

    fn resolve_captain(&self) -> Result<CaptainParams, ConfigError> {
        let section = &self.controller.captain;
        let mut params = CaptainParams::default();
        if let Some(v) = section.window_periods {
            params.window_periods = v;
        }
        if let Some(v) = section.history_periods {
            params.history_periods = v;
        }
        if let Some(v) = section.alpha {
            params.alpha = v;
        }
        if let Some(v) = section.beta_max {
            params.beta_max = v;
        }
        if let Some(v) = section.beta_min {
            params.beta_min = v;
        }
        if let Some(v) = section.initial_margin {
            params.initial_margin = v;
        }
        params
            .validate()
            .map_err(|e| invalid("controller.captain", e))?;
        Ok(params)
    }

    fn resolve_tower(
        &self,
        trace: &Trace,
        capacity_cores: f64,
        captain: &CaptainParams,
    ) -> Result<TowerParams, ConfigError> {
        let section = &self.controller.tower;
        let max_rps = if trace.is_empty() {
            0.0
        } else {
            trace.max_rps()
        };
        let bin_size = section.bin_size_rps.unwrap_or(20.0);
        let params = TowerParams {
            epsilon: section.epsilon.unwrap_or(0.10),
            exploration_stage_steps: self.durations.exploration_steps,
            exploration_hold_steps: section.exploration_hold_steps.unwrap_or(2),
            training_samples_per_update: section.training_samples_per_update.unwrap_or(10_000),
            slo_ms: self.slo.latency_ms,
            slo_percentile: self.slo.percentile,
            alloc_norm_max_cores: section.alloc_norm_max_cores.unwrap_or(capacity_cores),
            latency_norm_max_ms: section.latency_norm_max_ms.unwrap_or(0.0),
            bin_size_rps: bin_size,
            bin_feature_scale: (max_rps / bin_size).ceil().max(1.0),
            learning_rate: section.learning_rate.unwrap_or(0.5),
            model: section.model.clone().unwrap_or_else(|| "nn3".into()),
            training_label: section.training_label.unwrap_or_default(),
            ladder: section
                .ladder
                .clone()
                .unwrap_or_else(|| DEFAULT_LADDER.to_vec()),
        };
        params
            .validate()
            .map_err(|e| invalid("controller.tower", e))?;
        if self.controller.name == "autothrottle" || self.controller.name == "fixed-target" {
            let max_ladder = params.ladder.last().copied().unwrap_or(0.0);
            if max_ladder >= 1.0 / captain.alpha {
                return Err(invalid(
                    "controller.tower.ladder",
                    format!(
                        "max target {} outside the captain's supported range [0, {})",
                        max_ladder,
                        1.0 / captain.alpha
                    ),
                ));
            }
        }
        Ok(params)
    }
}
