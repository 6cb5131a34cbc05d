//! The experiment scenarios behind the CLI subcommands.

use anyhow::{bail, Context};
use controllers::build_controller;
use sim_core::stats::{pearson, percentile};

use crate::config::{ExperimentConfig, RunPlan};
use crate::runner::{run, RunArtifacts};

impl RunPlan {
    pub fn with_measurement_s(mut self, seconds: u64) -> Self {
        self.measurement_s = seconds;
        self
    }

    pub fn with_exploration_steps(mut self, steps: u64) -> Self {
        self.exploration_steps = steps;
        self.build_ctx.tower.exploration_stage_steps = steps;
        self
    }

    pub fn with_controller(mut self, name: &str) -> Self {
        self.controller_name = name.to_string();
        self
    }

    pub fn with_k8s_threshold(mut self, threshold: f64) -> Self {
        self.build_ctx.k8s_threshold = Some(threshold);
        self
    }

    pub fn with_trace(mut self, trace: workload::Trace) -> Self {
        self.trace = trace;
        self
    }
}

/// Build the configured controller and execute one full run.
pub fn scenario_run(plan: &RunPlan) -> anyhow::Result<RunArtifacts> {
    let controller = build_controller(&plan.controller_name, &plan.build_ctx)?;
    run(plan, controller).context("simulation failed")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationSignal {
    Ok,
    LowSignal,
    Undefined,
}

impl std::fmt::Display for CorrelationSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Ok => write!(f, "ok"),
            Self::LowSignal => write!(f, "low-signal"),
            Self::Undefined => write!(f, "undefined"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelatePoint {
    pub quota_cores: f64,
    pub p99_ms: f64,
    pub throttles: u64,
    pub utilization: f64,
}

#[derive(Debug, Clone)]
pub struct CorrelateRow {
    pub service: String,
    pub r_latency_throttles: Option<f64>,
    pub r_latency_utilization: Option<f64>,
    pub signal: CorrelationSignal,
    pub points: Vec<CorrelatePoint>,
}

/// Static-allocation quota sweep per service: hold everything else fixed,
/// set the swept service's quota to uniformly spaced values, and correlate
/// the observed tail latency with its throttle count and its utilization.
pub fn scenario_correlate(
    config: &ExperimentConfig,
    plan: &RunPlan,
) -> anyhow::Result<Vec<CorrelateRow>> {
    let section = config
        .correlate
        .as_ref()
        .context("correlate: missing [correlate] section")?;
    if section.quota_points < 2 {
        bail!("correlate.quota_points: need >= 2 sweep points");
    }
    if plan.build_ctx.static_cores.is_none() {
        bail!("correlate: requires [controller.static] base allocations");
    }
    let swept: Vec<String> = match &section.services {
        Some(list) => list.clone(),
        None => plan.specs.iter().map(|s| s.id.clone()).collect(),
    };

    let base = plan
        .clone()
        .with_controller("static")
        .with_exploration_steps(0)
        .with_measurement_s(section.window_s);

    let mut rows = Vec::new();
    for id in &swept {
        let service = plan
            .service_index(id)
            .with_context(|| format!("correlate.services: unknown service {id:?}"))?;
        let (bound_lo, bound_hi) = (
            plan.specs[service].quota_min_cores,
            plan.specs[service].quota_max_cores,
        );
        let lo = section.quota_min_cores.unwrap_or(bound_lo).max(bound_lo);
        let hi = section.quota_max_cores.unwrap_or(bound_hi).min(bound_hi);
        if !(lo < hi) {
            bail!("correlate: quota range [{lo}, {hi}] is empty for service {id:?}");
        }
        let n = section.quota_points;
        let mut points = Vec::with_capacity(n);
        for k in 0..n {
            let quota = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let mut variant = base.clone();
            variant.build_ctx.static_cores.as_mut().unwrap()[service] = quota;
            let artifacts = scenario_run(&variant)?;
            let (throttles, usage_ms) = artifacts.measurement_service_stats[service];
            let measured_ms = section.window_s as f64 * 1000.0;
            points.push(CorrelatePoint {
                quota_cores: quota,
                p99_ms: artifacts.summary.overall_p99_ms.unwrap_or(0.0),
                throttles,
                utilization: usage_ms / (quota * measured_ms),
            });
        }
        let lat: Vec<f64> = points.iter().map(|p| p.p99_ms).collect();
        let thr: Vec<f64> = points.iter().map(|p| p.throttles as f64).collect();
        let util: Vec<f64> = points.iter().map(|p| p.utilization).collect();
        let r_thr = pearson(&lat, &thr);
        let r_util = pearson(&lat, &util);
        let signal = match (r_thr, r_util) {
            (None, _) | (_, None) => CorrelationSignal::Undefined,
            (Some(a), Some(b)) if a.abs() < 0.3 && b.abs() < 0.3 => CorrelationSignal::LowSignal,
            _ => CorrelationSignal::Ok,
        };
        rows.push(CorrelateRow {
            service: id.clone(),
            r_latency_throttles: r_thr,
            r_latency_utilization: r_util,
            signal,
            points,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub threshold: f64,
    pub avg_alloc_cores: f64,
    pub slo_violated_hours: u64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Best threshold and its average allocation; `None` when no threshold
    /// met the SLO in every hour.
    pub best: Option<(f64, f64)>,
}

/// Run the configured k8s variant across utilization thresholds and pick
/// the cheapest one that met the SLO in every hour. Ties on allocation go
/// to the larger threshold.
pub fn scenario_sweep(config: &ExperimentConfig, plan: &RunPlan) -> anyhow::Result<SweepOutcome> {
    if plan.controller_name != "k8s-cpu" && plan.controller_name != "k8s-cpu-fast" {
        bail!(
            "sweep: controller.name must be k8s-cpu or k8s-cpu-fast, got {:?}",
            plan.controller_name
        );
    }
    let section = config.sweep.clone().unwrap_or_default();
    if section.thresholds.is_empty() {
        bail!("sweep.thresholds: must not be empty");
    }
    let mut rows = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    let mut thresholds = section.thresholds.clone();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for theta in thresholds {
        let variant = plan.clone().with_k8s_threshold(theta);
        let artifacts = scenario_run(&variant)?;
        let feasible = artifacts.summary.slo_met_every_hour && artifacts.summary.hours > 0;
        let alloc = artifacts.summary.avg_alloc_cores;
        if feasible && best.is_none_or(|(_, b)| alloc <= b) {
            best = Some((theta, alloc));
        }
        rows.push(SweepRow {
            threshold: theta,
            avg_alloc_cores: alloc,
            slo_violated_hours: artifacts.summary.slo_violated_hours,
            feasible,
        });
    }
    Ok(SweepOutcome { rows, best })
}

#[derive(Debug, Clone)]
pub struct FluctuateRow {
    pub half_range: f64,
    pub windows: usize,
    pub min_ms: f64,
    pub q1_ms: f64,
    pub median_ms: f64,
    pub q3_ms: f64,
    pub max_ms: f64,
}

/// Fluctuation tolerance: hold throttle targets fixed, resample RPS within
/// `base +- half_range` every minute, and summarize the per-window tail
/// latency distribution for each range.
pub fn scenario_fluctuate(
    config: &ExperimentConfig,
    plan: &RunPlan,
) -> anyhow::Result<Vec<FluctuateRow>> {
    if plan.controller_name != "fixed-target" {
        bail!(
            "fluctuate: controller.name must be fixed-target, got {:?}",
            plan.controller_name
        );
    }
    let section = config
        .fluctuate
        .as_ref()
        .context("fluctuate: missing [fluctuate] section")?;
    if section.half_ranges.is_empty() {
        bail!("fluctuate.half_ranges: must not be empty");
    }
    let mut rows = Vec::new();
    for &half_range in &section.half_ranges {
        if half_range < 0.0 {
            bail!("fluctuate.half_ranges: must be >= 0, got {half_range}");
        }
        // One shared fluctuation seed: ranges differ only in amplitude, so
        // wider ranges stress the same windows harder.
        let trace = plan
            .trace
            .fluctuate(half_range, 60.0, plan.seed ^ 0x666c_7563);
        let variant = plan
            .clone()
            .with_trace(trace)
            .with_exploration_steps(0)
            .with_measurement_s(section.windows * 60);
        let artifacts = scenario_run(&variant)?;
        let p99s: Vec<f64> = artifacts
            .measurement_minute_p99_ms
            .iter()
            .flatten()
            .copied()
            .collect();
        if p99s.is_empty() {
            bail!("fluctuate: no completed requests at half_range {half_range}");
        }
        let q = |p: f64| percentile(&p99s, p).unwrap();
        rows.push(FluctuateRow {
            half_range,
            windows: p99s.len(),
            min_ms: p99s.iter().copied().fold(f64::INFINITY, f64::min),
            q1_ms: q(0.25),
            median_ms: q(0.5),
            q3_ms: q(0.75),
            max_ms: p99s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    Ok(rows)
}
