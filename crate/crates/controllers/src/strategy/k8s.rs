//! Utilization-threshold autoscaling as a cluster strategy: one independent
//! ring per service, stepped every measurement interval.

use crate::api::{Controller, PeriodObservation, QuotaCommand};
use crate::baselines::{K8sParams, K8sState};

pub struct K8sController {
    name: &'static str,
    params: K8sParams,
    bounds: Vec<(f64, f64)>,
    states: Vec<K8sState>,
    usage_acc_ms: Vec<f64>,
    periods_per_interval: u64,
    periods_seen: u64,
    current_quota: Vec<f64>,
}

impl K8sController {
    pub fn new(
        name: &'static str,
        params: K8sParams,
        bounds: &[(f64, f64)],
        period_ms: f64,
    ) -> Result<Self, String> {
        params.validate()?;
        let interval_ms = params.measure_interval_s * 1000.0;
        let periods = interval_ms / period_ms;
        if (periods - periods.round()).abs() > 1e-9 || periods < 1.0 {
            return Err(format!(
                "measure_interval_s {} is not a whole number of {period_ms} ms periods",
                params.measure_interval_s
            ));
        }
        Ok(Self {
            name,
            params,
            bounds: bounds.to_vec(),
            states: vec![K8sState::default(); bounds.len()],
            usage_acc_ms: vec![0.0; bounds.len()],
            periods_per_interval: periods.round() as u64,
            periods_seen: 0,
            current_quota: bounds.iter().map(|&(_, hi)| hi).collect(),
        })
    }
}

impl Controller for K8sController {
    fn name(&self) -> &'static str {
        self.name
    }

    fn initial_quotas(&self) -> Vec<QuotaCommand> {
        self.current_quota
            .iter()
            .enumerate()
            .map(|(service, &cores)| QuotaCommand { service, cores })
            .collect()
    }

    fn on_period(&mut self, obs: &PeriodObservation<'_>) -> Vec<QuotaCommand> {
        for (service, stats) in obs.services.iter().enumerate() {
            self.usage_acc_ms[service] += stats.usage_ms;
        }
        self.periods_seen += 1;
        if !self.periods_seen.is_multiple_of(self.periods_per_interval) {
            return Vec::new();
        }
        let interval_ms = self.params.measure_interval_s * 1000.0;
        let mut commands = Vec::new();
        for service in 0..self.states.len() {
            let mean_usage_cores = self.usage_acc_ms[service] / interval_ms;
            self.usage_acc_ms[service] = 0.0;
            let (lo, hi) = self.bounds[service];
            let quota = self.states[service].step(mean_usage_cores, &self.params, lo, hi);
            if quota != self.current_quota[service] {
                self.current_quota[service] = quota;
                commands.push(QuotaCommand {
                    service,
                    cores: quota,
                });
            }
        }
        commands
    }
}
