//! Captains tracking operator-supplied static throttle targets, with no
//! bandit adjusting them. Used to measure how much workload fluctuation the
//! local control loops absorb on their own.

use crate::api::{Controller, PeriodObservation, QuotaCommand};
use crate::captain::{Captain, CaptainParams};

pub struct FixedTargetController {
    captains: Vec<Captain>,
    quota_max: Vec<f64>,
}

impl FixedTargetController {
    pub fn new(
        targets: Vec<f64>,
        services: &[(f64, f64)],
        period_ms: f64,
        captain_params: CaptainParams,
    ) -> Result<Self, String> {
        captain_params.validate()?;
        if targets.len() != services.len() {
            return Err(format!(
                "fixed targets list {} services, cluster has {}",
                targets.len(),
                services.len()
            ));
        }
        let mut captains = Vec::with_capacity(services.len());
        for (&target, &(lo, hi)) in targets.iter().zip(services) {
            let mut captain = Captain::new(captain_params.clone(), lo, hi, period_ms);
            captain.set_target(target).map_err(|e| e.to_string())?;
            captains.push(captain);
        }
        Ok(Self {
            captains,
            quota_max: services.iter().map(|&(_, hi)| hi).collect(),
        })
    }

    pub fn captain(&self, service: usize) -> &Captain {
        &self.captains[service]
    }
}

impl Controller for FixedTargetController {
    fn name(&self) -> &'static str {
        "fixed-target"
    }

    fn initial_quotas(&self) -> Vec<QuotaCommand> {
        self.quota_max
            .iter()
            .enumerate()
            .map(|(service, &cores)| QuotaCommand { service, cores })
            .collect()
    }

    fn on_period(&mut self, obs: &PeriodObservation<'_>) -> Vec<QuotaCommand> {
        let mut commands = Vec::new();
        for (service, stats) in obs.services.iter().enumerate() {
            if let Some(cores) = self.captains[service]
                .on_period(stats.usage_ms, stats.throttled)
                .quota_changed
            {
                commands.push(QuotaCommand { service, cores });
            }
        }
        commands
    }
}
