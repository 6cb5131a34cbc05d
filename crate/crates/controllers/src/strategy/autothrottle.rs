//! The bi-level strategy: per-service captains bridged to the tower.
//!
//! Captains run from the first period, initially tracking a target of zero
//! (scale up on any throttling), so the warm-up phase both provisions the
//! cluster and collects the usage profile. When the exploration phase
//! begins, services are clustered into high/low usage groups by k-means on
//! their warm-up average usage; from then on the tower dispatches a pair of
//! throttle targets each minute, one per group.

use sim_core::stats::percentile;

use crate::api::{
    Controller, MinuteObservation, MinuteOutcome, PeriodObservation, Phase, PhaseContext,
    QuotaCommand,
};
use crate::captain::{Captain, CaptainParams};
use crate::tower::{cluster_services, ClusterAssignment, Tower, TowerParams, TowerStepInput};

pub struct AutothrottleController {
    captains: Vec<Captain>,
    tower: Tower,
    slo_percentile: f64,
    assignment: Option<ClusterAssignment>,
    phase: Phase,
    quota_max: Vec<f64>,
}

impl AutothrottleController {
    pub fn new(
        services: &[(f64, f64)], // (quota_min, quota_max) per service
        period_ms: f64,
        captain_params: CaptainParams,
        tower_params: TowerParams,
        seed: u64,
    ) -> Result<Self, String> {
        captain_params.validate()?;
        let slo_percentile = tower_params.slo_percentile;
        let tower = Tower::new(tower_params, seed)?;
        if tower.ladder().max_target() >= 1.0 / captain_params.alpha {
            return Err(format!(
                "ladder max {} outside the supported target range [0, {})",
                tower.ladder().max_target(),
                1.0 / captain_params.alpha
            ));
        }
        let captains = services
            .iter()
            .map(|&(lo, hi)| Captain::new(captain_params.clone(), lo, hi, period_ms))
            .collect();
        Ok(Self {
            captains,
            tower,
            slo_percentile,
            assignment: None,
            phase: Phase::Warmup,
            quota_max: services.iter().map(|&(_, hi)| hi).collect(),
        })
    }

    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn assignment(&self) -> Option<&ClusterAssignment> {
        self.assignment.as_ref()
    }

    pub fn captain(&self, service: usize) -> &Captain {
        &self.captains[service]
    }

    fn dispatch_targets(&mut self, high: f64, low: f64) {
        let Some(assignment) = &self.assignment else {
            return;
        };
        for (group_idx, group) in assignment.groups.iter().enumerate() {
            let target = if group_idx == 0 { high } else { low };
            for &service in group {
                // The ladder is validated against alpha at build time.
                self.captains[service]
                    .set_target(target)
                    .expect("ladder target within captain range");
            }
        }
    }
}

impl Controller for AutothrottleController {
    fn name(&self) -> &'static str {
        "autothrottle"
    }

    fn initial_quotas(&self) -> Vec<QuotaCommand> {
        // Start over-provisioned; captains reclaim from there.
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

    fn on_minute(&mut self, obs: &MinuteObservation<'_>) -> MinuteOutcome {
        if self.phase == Phase::Warmup {
            return MinuteOutcome::default();
        }
        let out = self.tower.step(&TowerStepInput {
            avg_rps: obs.avg_rps,
            tail_latency_ms: percentile(obs.latencies_ms, self.slo_percentile),
            total_alloc_cores: obs.avg_total_alloc_cores,
        });
        let (high, low) = out.targets;
        self.dispatch_targets(high, low);
        MinuteOutcome {
            commands: Vec::new(),
            decision: Some(out.decision),
        }
    }

    fn on_phase_start(&mut self, phase: Phase, ctx: &PhaseContext<'_>) {
        self.phase = phase;
        if phase == Phase::Exploration && self.assignment.is_none() {
            // Freeze the usage groups from the warm-up profile.
            self.assignment = Some(cluster_services(ctx.avg_usage_cores, 2));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::api::ServicePeriodStats;

    fn controller() -> AutothrottleController {
        let tower_params = TowerParams {
            exploration_stage_steps: 0,
            epsilon: 0.0,
            alloc_norm_max_cores: 16.0,
            slo_ms: 200.0,
            ..TowerParams::default()
        };
        AutothrottleController::new(
            &[(0.05, 8.0), (0.05, 8.0)],
            100.0,
            CaptainParams::default(),
            tower_params,
            3,
        )
        .unwrap()
    }

    #[test]
    fn ladder_must_fit_the_captain_target_range() {
        let tower_params = TowerParams {
            ladder: vec![0.0, 0.2, 0.5],
            ..TowerParams::default()
        };
        let err = AutothrottleController::new(
            &[(0.05, 8.0)],
            100.0,
            CaptainParams::default(),
            tower_params,
            0,
        )
        .err()
        .unwrap();
        assert!(err.contains("supported target range"));
    }

    #[test]
    fn warmup_minutes_produce_no_decisions() {
        let mut c = controller();
        let out = c.on_minute(&MinuteObservation {
            minute_index: 0,
            avg_rps: 100.0,
            latencies_ms: &[10.0],
            avg_total_alloc_cores: 16.0,
        });
        assert!(out.decision.is_none());
    }

    #[test]
    fn exploration_start_freezes_usage_groups_and_targets_flow() {
        let mut c = controller();
        c.on_phase_start(
            Phase::Exploration,
            &PhaseContext {
                avg_usage_cores: &[4.0, 0.2],
            },
        );
        let assignment = c.assignment().unwrap();
        assert_eq!(assignment.groups, vec![vec![0], vec![1]]);

        let out = c.on_minute(&MinuteObservation {
            minute_index: 1,
            avg_rps: 100.0,
            latencies_ms: &[10.0, 20.0],
            avg_total_alloc_cores: 10.0,
        });
        let decision = out.decision.unwrap();
        let (high, low) = decision.targets.unwrap();
        assert_eq!(c.captain(0).target(), high);
        assert_eq!(c.captain(1).target(), low);
    }

    #[test]
    fn captains_scale_up_under_sustained_throttling() {
        let mut c = controller();
        let mut quota = 8.0;
        for period in 0..10 {
            let stats = [
                ServicePeriodStats {
                    usage_ms: quota * 100.0,
                    throttled: true,
                    quota_cores: quota,
                },
                ServicePeriodStats {
                    usage_ms: 10.0,
                    throttled: false,
                    quota_cores: 8.0,
                },
            ];
            let commands = c.on_period(&PeriodObservation {
                period_index: period,
                services: &stats,
            });
            for cmd in commands {
                if cmd.service == 0 {
                    quota = cmd.cores;
                }
            }
        }
        // Window ratio 1.0 against target 0: multiplicative scale-up fired
        // but the quota was already at its maximum.
        assert_eq!(quota, 8.0);
        assert_eq!(c.captain(0).target(), 0.0);
    }
}
