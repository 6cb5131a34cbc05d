//! Aggregation of consecutive periods into the window-level metrics that
//! controllers and reports consume.

use crate::engine::PeriodReport;

#[derive(Debug, Clone, Copy, Default)]
pub struct ServiceWindow {
    pub usage_ms: f64,
    pub throttle_count: u64,
    /// Sum of per-period quotas; divide by the period count for the mean.
    pub quota_core_periods: f64,
}

/// Metrics accumulated over a contiguous run of periods. The latency list
/// contains exactly the requests that completed inside the window.
#[derive(Debug, Clone, Default)]
pub struct WindowMetrics {
    pub start_period: Option<u64>,
    pub periods: u64,
    pub per_service: Vec<ServiceWindow>,
    pub latencies_ms: Vec<f64>,
    pub arrivals: u64,
}

impl WindowMetrics {
    pub fn new(num_services: usize) -> Self {
        Self {
            per_service: vec![ServiceWindow::default(); num_services],
            ..Default::default()
        }
    }

    pub fn observe(&mut self, report: &PeriodReport, arrivals: u64) {
        if self.start_period.is_none() {
            self.start_period = Some(report.period_index);
        }
        self.periods += 1;
        self.arrivals += arrivals;
        for (acc, s) in self.per_service.iter_mut().zip(&report.services) {
            acc.usage_ms += s.served_ms;
            acc.throttle_count += u64::from(s.throttled);
            acc.quota_core_periods += s.quota_cores;
        }
        self.latencies_ms
            .extend(report.completed.iter().map(|c| c.latency_ms()));
    }

    pub fn avg_rps(&self, period_ms: f64) -> f64 {
        if self.periods == 0 {
            return 0.0;
        }
        self.arrivals as f64 / (self.periods as f64 * period_ms / 1000.0)
    }

    /// Mean over the window of the summed per-service quotas.
    pub fn avg_total_alloc_cores(&self) -> f64 {
        if self.periods == 0 {
            return 0.0;
        }
        let total: f64 = self.per_service.iter().map(|s| s.quota_core_periods).sum();
        total / self.periods as f64
    }

    /// Mean cores actually consumed across the cluster.
    pub fn avg_used_cores(&self, period_ms: f64) -> f64 {
        if self.periods == 0 {
            return 0.0;
        }
        let total: f64 = self.per_service.iter().map(|s| s.usage_ms).sum();
        total / (self.periods as f64 * period_ms)
    }

    pub fn reset(&mut self) {
        let n = self.per_service.len();
        *self = Self::new(n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Arrival, CallGraph, Cluster, ServiceSpec, SimConfig};

    #[test]
    fn windows_collect_exactly_in_window_completions() {
        let spec = ServiceSpec {
            id: "svc".into(),
            demand_ms: [(0usize, 120.0)].into_iter().collect(),
            quota_min_cores: 0.05,
            quota_max_cores: 1.0,
        };
        let graph = CallGraph {
            stages_per_type: vec![vec![vec![0]]],
        };
        let mut cluster = Cluster::new(SimConfig::default(), vec![spec], graph).unwrap();
        let mut w1 = WindowMetrics::new(1);
        // 120 ms of work at 1 core: completes in period 1, not period 0.
        let r0 = cluster
            .step_period(&[Arrival {
                request_id: 0,
                rtype: 0,
            }])
            .unwrap();
        w1.observe(&r0, 1);
        assert!(w1.latencies_ms.is_empty());
        assert_eq!(w1.per_service[0].usage_ms, 100.0);
        assert_eq!(w1.per_service[0].throttle_count, 1);

        let mut w2 = WindowMetrics::new(1);
        let r1 = cluster.step_period(&[]).unwrap();
        w2.observe(&r1, 0);
        assert_eq!(w2.latencies_ms, vec![120.0]);
        assert_eq!(w2.per_service[0].usage_ms, 20.0);
        assert_eq!(w2.per_service[0].throttle_count, 0);
    }

    #[test]
    fn window_averages() {
        let mut w = WindowMetrics::new(2);
        assert_eq!(w.avg_rps(100.0), 0.0);
        let report = PeriodReport {
            period_index: 0,
            start_ms: 0.0,
            services: vec![
                crate::engine::ServicePeriodReport {
                    quota_cores: 2.0,
                    budget_ms: 200.0,
                    pending_start_ms: 0.0,
                    served_ms: 50.0,
                    pending_end_ms: 0.0,
                    throttled: false,
                },
                crate::engine::ServicePeriodReport {
                    quota_cores: 1.0,
                    budget_ms: 100.0,
                    pending_start_ms: 0.0,
                    served_ms: 25.0,
                    pending_end_ms: 0.0,
                    throttled: false,
                },
            ],
            completed: vec![],
        };
        w.observe(&report, 3);
        w.observe(&report, 5);
        assert_eq!(w.periods, 2);
        assert_eq!(w.avg_rps(100.0), 40.0); // 8 arrivals over 0.2 s
        assert_eq!(w.avg_total_alloc_cores(), 3.0);
        assert_eq!(w.avg_used_cores(100.0), 0.75);
        w.reset();
        assert_eq!(w.periods, 0);
        assert_eq!(w.per_service.len(), 2);
    }
}
