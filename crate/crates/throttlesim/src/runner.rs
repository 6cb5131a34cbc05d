//! The experiment driver: warms up, explores, measures.
//!
//! The driver owns the simulated cluster and steps it one period at a time,
//! feeding the controller per-period stats and per-minute aggregates, and
//! applying the controller's quota commands at period boundaries. Reports
//! cover the measurement phase only; the decision log covers every minute
//! of the run.

use controllers::{
    Controller, MinuteObservation, PeriodObservation, Phase, PhaseContext, QuotaCommand,
    ServicePeriodStats,
};
use sim_core::stats::percentile;
use sim_core::{Arrival, Cluster, SimError, WindowMetrics};
use workload::ArrivalGen;

use crate::config::RunPlan;

/// One row of the per-minute decision log.
#[derive(Debug, Clone)]
pub struct DecisionRow {
    pub minute: u64,
    pub rps: f64,
    pub bin: Option<u64>,
    pub action: Option<(u8, u8)>,
    pub targets: Option<(f64, f64)>,
    pub cost: Option<f64>,
    pub slo_met: bool,
    pub total_alloc_cores: f64,
}

/// One row of the hourly report (measurement phase only).
#[derive(Debug, Clone)]
pub struct HourlyRow {
    pub hour: u64,
    pub avg_alloc_cores: f64,
    pub avg_used_cores: f64,
    /// None when no request completed in the hour (counts as SLO met).
    pub p99_ms: Option<f64>,
    pub slo_violated: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub controller: String,
    pub hours: u64,
    pub avg_alloc_cores: f64,
    pub avg_used_cores: f64,
    pub overall_p99_ms: Option<f64>,
    pub slo_violated_hours: u64,
    pub slo_met_every_hour: bool,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub decisions: Vec<DecisionRow>,
    pub hourly: Vec<HourlyRow>,
    pub summary: RunSummary,
    /// Cumulative (throttled periods, usage ms) per service over measurement.
    pub measurement_service_stats: Vec<(u64, f64)>,
    /// Per-minute tail latency during measurement, for window-level analyses.
    pub measurement_minute_p99_ms: Vec<Option<f64>>,
    /// Raw per-hour latency logs, kept only when the plan asks for them.
    pub raw_hour_latencies: Vec<Vec<f64>>,
}

pub fn run(plan: &RunPlan, mut controller: Box<dyn Controller>) -> Result<RunArtifacts, SimError> {
    let period_ms = plan.sim.period_ms;
    let periods_per_second = (1000.0 / period_ms).round() as u64;
    let periods_per_minute = 60 * periods_per_second;
    let periods_per_hour = 60 * periods_per_minute;

    let mut cluster = Cluster::new(plan.sim.clone(), plan.specs.clone(), plan.graph.clone())?;
    for QuotaCommand { service, cores } in controller.initial_quotas() {
        cluster.set_quota_immediate(service, cores)?;
    }
    let mut arrivals = ArrivalGen::new(plan.seed ^ 0x6172_7269_7665);
    let n_services = plan.specs.len();

    let mut decisions: Vec<DecisionRow> = Vec::new();
    let mut hourly: Vec<HourlyRow> = Vec::new();
    let mut minute = WindowMetrics::new(n_services);
    let mut minute_index: u64 = 0;
    let mut measurement_minute_p99 = Vec::new();

    // Measurement-phase accumulators.
    let mut measuring = false;
    let mut hour = WindowMetrics::new(n_services);
    let mut hour_index: u64 = 0;
    let mut run_total = WindowMetrics::new(n_services);
    let mut total_latencies: Vec<f64> = Vec::new();
    let mut raw_hour_latencies: Vec<Vec<f64>> = Vec::new();
    let mut measurement_start_stats: Vec<(u64, f64)> = Vec::new();

    // Per-phase usage profile handed to the controller at phase starts.
    let mut phase_usage = WindowMetrics::new(n_services);

    let initial_rps = if plan.trace.is_empty() {
        0.0
    } else {
        plan.trace.rps_at(0.0)
    };
    let trace_duration_s = plan.trace.duration_s();

    let phases: [(Phase, u64); 3] = [
        (Phase::Warmup, plan.warmup_s * periods_per_second),
        (
            Phase::Exploration,
            plan.exploration_steps * periods_per_minute,
        ),
        (Phase::Measurement, plan.measurement_s * periods_per_second),
    ];

    let mut stats_buf: Vec<ServicePeriodStats> = Vec::with_capacity(n_services);
    for (phase, phase_periods_total) in phases {
        let avg_usage: Vec<f64> = if phase_usage.periods == 0 {
            vec![0.0; n_services]
        } else {
            phase_usage
                .per_service
                .iter()
                .map(|s| s.usage_ms / (phase_usage.periods as f64 * period_ms))
                .collect()
        };
        controller.on_phase_start(
            phase,
            &PhaseContext {
                avg_usage_cores: &avg_usage,
            },
        );
        phase_usage.reset();
        if phase == Phase::Measurement {
            measuring = true;
            measurement_start_stats = (0..n_services).map(|s| cluster.read_stats(s)).collect();
        }

        for phase_period in 0..phase_periods_total {
            let batch: Vec<Arrival> = match phase {
                Phase::Warmup => {
                    // Ramp: 10% of the trace's initial rate, +10% every 5 s.
                    let t_s = (phase_period / periods_per_second) as f64;
                    let rps = (initial_rps * 0.1 * 1.1f64.powf(t_s / 5.0)).min(initial_rps);
                    arrivals.arrivals_at_rate(rps, &plan.composition, period_ms)
                }
                _ => {
                    let t_s = phase_period as f64 / periods_per_second as f64;
                    let wrapped = if trace_duration_s > 0.0 {
                        t_s % trace_duration_s
                    } else {
                        0.0
                    };
                    let rps = plan.trace.rps_at(wrapped);
                    arrivals.arrivals_at_rate(rps, &plan.composition, period_ms)
                }
            };

            let report = cluster.step_period(&batch)?;

            stats_buf.clear();
            for s in &report.services {
                stats_buf.push(ServicePeriodStats {
                    usage_ms: s.served_ms,
                    throttled: s.throttled,
                    quota_cores: s.quota_cores,
                });
            }
            minute.observe(&report, batch.len() as u64);
            phase_usage.observe(&report, 0);
            if measuring {
                hour.observe(&report, batch.len() as u64);
                run_total.observe(&report, batch.len() as u64);
                total_latencies.extend(report.completed.iter().map(|c| c.latency_ms()));
            }

            for cmd in controller.on_period(&PeriodObservation {
                period_index: report.period_index,
                services: &stats_buf,
            }) {
                cluster.set_quota(cmd.service, cmd.cores)?;
            }

            if (report.period_index + 1) % periods_per_minute == 0 {
                let avg_rps = minute.avg_rps(period_ms);
                let avg_alloc = minute.avg_total_alloc_cores();
                let outcome = controller.on_minute(&MinuteObservation {
                    minute_index,
                    avg_rps,
                    latencies_ms: &minute.latencies_ms,
                    avg_total_alloc_cores: avg_alloc,
                });
                for cmd in outcome.commands {
                    cluster.set_quota(cmd.service, cmd.cores)?;
                }
                let minute_p99 = percentile(&minute.latencies_ms, plan.slo_percentile);
                let slo_met = minute_p99.is_none_or(|p| p <= plan.slo_ms);
                if measuring {
                    measurement_minute_p99.push(minute_p99);
                }
                let decision = outcome.decision.unwrap_or_default();
                decisions.push(DecisionRow {
                    minute: minute_index,
                    rps: avg_rps,
                    bin: decision.bin,
                    action: decision.action,
                    targets: decision.targets,
                    cost: decision.raw_cost,
                    slo_met,
                    total_alloc_cores: avg_alloc,
                });
                minute.reset();
                minute_index += 1;
            }

            if measuring && hour.periods == periods_per_hour {
                hourly.push(close_hour(
                    &mut hour,
                    &mut raw_hour_latencies,
                    hour_index,
                    plan,
                ));
                hour_index += 1;
            }
        }
    }
    if hour.periods > 0 {
        hourly.push(close_hour(
            &mut hour,
            &mut raw_hour_latencies,
            hour_index,
            plan,
        ));
    }

    let measurement_service_stats: Vec<(u64, f64)> = (0..n_services)
        .map(|s| {
            let (thr, usage) = cluster.read_stats(s);
            let (thr0, usage0) = measurement_start_stats[s];
            (thr - thr0, usage - usage0)
        })
        .collect();

    let violated = hourly.iter().filter(|h| h.slo_violated).count() as u64;
    let summary = RunSummary {
        controller: plan.controller_name.clone(),
        hours: hourly.len() as u64,
        avg_alloc_cores: run_total.avg_total_alloc_cores(),
        avg_used_cores: run_total.avg_used_cores(period_ms),
        overall_p99_ms: percentile(&total_latencies, plan.slo_percentile),
        slo_violated_hours: violated,
        slo_met_every_hour: violated == 0,
    };
    Ok(RunArtifacts {
        decisions,
        hourly,
        summary,
        measurement_service_stats,
        measurement_minute_p99_ms: measurement_minute_p99,
        raw_hour_latencies,
    })
}

fn close_hour(
    hour: &mut WindowMetrics,
    raw: &mut Vec<Vec<f64>>,
    hour_index: u64,
    plan: &RunPlan,
) -> HourlyRow {
    let p99 = percentile(&hour.latencies_ms, plan.slo_percentile);
    let row = HourlyRow {
        hour: hour_index,
        avg_alloc_cores: hour.avg_total_alloc_cores(),
        avg_used_cores: hour.avg_used_cores(plan.sim.period_ms),
        p99_ms: p99,
        slo_violated: p99.is_some_and(|p| p > plan.slo_ms),
    };
    if plan.capture_raw_latencies {
        raw.push(std::mem::take(&mut hour.latencies_ms));
    }
    hour.reset();
    row
}
