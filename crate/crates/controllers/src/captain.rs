//! Per-service quota controller tracking a CPU-throttle-ratio target.
//!
//! Two feedback loops act on the two OS counters (throttled periods and CPU
//! usage). Every `N` periods the window loop compares the measured throttle
//! ratio against the target: ratios above `alpha * target` scale the quota
//! up multiplicatively, proportionally to the excess; otherwise the quota
//! drops in one step to `max(history) + margin * stdev(history)` computed
//! over the last `M` periods of usage, guarded so only significant-yet-
//! moderate reductions go through. For `N` periods after each scale-down a
//! per-period rollback watch reverts reckless reductions to the previous
//! quota plus the difference.
//!
//! `margin` adapts: it grows whenever the measured ratio overshoots the
//! target and shrinks (never below zero) while the service runs quietly,
//! inflating scale-down headroom after recent over-throttling.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use sim_core::stats::sample_stdev;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptainParams {
    /// Periods per decision window (N).
    pub window_periods: usize,
    /// Usage-history length in periods (M).
    pub history_periods: usize,
    /// Scale-up sensitivity weight; supported targets lie in [0, 1/alpha).
    pub alpha: f64,
    /// A scale-down only fires when the proposed quota is at most this
    /// fraction of the current quota.
    pub beta_max: f64,
    /// A single scale-down never goes below this fraction of the current
    /// quota.
    pub beta_min: f64,
    /// Margin at startup, in usage standard deviations.
    pub initial_margin: f64,
}

impl Default for CaptainParams {
    fn default() -> Self {
        Self {
            window_periods: 10,
            history_periods: 50,
            alpha: 3.0,
            beta_max: 0.9,
            beta_min: 0.5,
            initial_margin: 1.0,
        }
    }
}

impl CaptainParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.window_periods < 1 {
            return Err("window_periods must be >= 1".into());
        }
        if self.history_periods < 2 {
            return Err("history_periods must be >= 2".into());
        }
        if !(self.alpha >= 1.0) {
            return Err("alpha must be >= 1".into());
        }
        if !(0.0 < self.beta_min && self.beta_min < self.beta_max && self.beta_max < 1.0) {
            return Err("need 0 < beta_min < beta_max < 1".into());
        }
        if !(self.initial_margin >= 0.0) {
            return Err("initial_margin must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowAction {
    ScaleUp { from: f64, to: f64 },
    ScaleDown { from: f64, to: f64 },
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RollbackAction {
    Inactive,
    Held,
    Reverted { from: f64, to: f64 },
}

#[derive(Debug, thiserror::Error)]
#[error("throttle target {target} outside supported range [0, {max})")]
pub struct TargetOutOfRange {
    pub target: f64,
    pub max: f64,
}

/// What one driver period did to the controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOutcome {
    /// New quota, when this period changed it.
    pub quota_changed: Option<f64>,
    pub rollback: RollbackAction,
    /// Window decision, on window-boundary periods.
    pub window: Option<WindowAction>,
}

/// Controller state for checkpointing and direct state-space exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptainSnapshot {
    pub quota: f64,
    pub margin: f64,
    pub throttle_target: f64,
    pub usage_history_ms: Vec<f64>,
    pub last_quota: f64,
    pub rollback_periods_left: usize,
    pub throttle_count_since_scaledown: u64,
}

/// Controller state for one service.
#[derive(Debug, Clone)]
pub struct Captain {
    params: CaptainParams,
    quota_min: f64,
    quota_max: f64,
    period_ms: f64,

    quota: f64,
    margin: f64,
    throttle_target: f64,
    usage_history_ms: VecDeque<f64>,
    window_throttle_count: u64,
    periods_seen: u64,
    last_quota: f64,
    rollback_periods_left: usize,
    throttle_count_since_scaledown: u64,
}

impl Captain {
    /// Starts over-provisioned at `quota_max` with an empty usage history;
    /// scale-down stays disabled until `M` periods have been observed.
    pub fn new(params: CaptainParams, quota_min: f64, quota_max: f64, period_ms: f64) -> Self {
        debug_assert!(params.validate().is_ok());
        debug_assert!(0.0 < quota_min && quota_min <= quota_max);
        let margin = params.initial_margin;
        Self {
            params,
            quota_min,
            quota_max,
            period_ms,
            quota: quota_max,
            margin,
            throttle_target: 0.0,
            usage_history_ms: VecDeque::new(),
            window_throttle_count: 0,
            periods_seen: 0,
            last_quota: quota_max,
            rollback_periods_left: 0,
            throttle_count_since_scaledown: 0,
        }
    }

    pub fn quota(&self) -> f64 {
        self.quota
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn target(&self) -> f64 {
        self.throttle_target
    }

    pub fn rollback_watch_active(&self) -> bool {
        self.rollback_periods_left > 0
    }

    /// Update the throttle-ratio target. Margin and usage history persist
    /// across target changes. Targets at or above `1/alpha` are rejected:
    /// the scale-up trigger could never fire there.
    pub fn set_target(&mut self, target: f64) -> Result<(), TargetOutOfRange> {
        let max = 1.0 / self.params.alpha;
        if !target.is_finite() || target < 0.0 || target >= max {
            return Err(TargetOutOfRange { target, max });
        }
        self.throttle_target = target;
        Ok(())
    }

    fn clamp(&self, cores: f64) -> f64 {
        cores.clamp(self.quota_min, self.quota_max)
    }

    /// Per-period driver: records usage, runs the rollback watch, and fires
    /// the window decision every `N` periods. Rollback runs first; the two
    /// margin updates can both apply on a boundary period, in event order.
    pub fn on_period(&mut self, usage_ms: f64, throttled: bool) -> PeriodOutcome {
        let before = self.quota;
        self.periods_seen += 1;
        self.usage_history_ms.push_back(usage_ms);
        while self.usage_history_ms.len() > self.params.history_periods {
            self.usage_history_ms.pop_front();
        }
        self.window_throttle_count += u64::from(throttled);
        let rollback = self.on_period_rollback_check(throttled);
        let window = if self
            .periods_seen
            .is_multiple_of(self.params.window_periods as u64)
        {
            let count = self.window_throttle_count;
            self.window_throttle_count = 0;
            Some(self.on_window(count))
        } else {
            None
        };
        PeriodOutcome {
            quota_changed: (self.quota != before).then_some(self.quota),
            rollback,
            window,
        }
    }

    /// Rebuild a captain at an arbitrary state point.
    pub fn from_snapshot(
        params: CaptainParams,
        quota_min: f64,
        quota_max: f64,
        period_ms: f64,
        snapshot: CaptainSnapshot,
    ) -> Self {
        let mut captain = Self::new(params, quota_min, quota_max, period_ms);
        captain.quota = snapshot.quota;
        captain.margin = snapshot.margin;
        captain.throttle_target = snapshot.throttle_target;
        captain.usage_history_ms = snapshot.usage_history_ms.into();
        captain.last_quota = snapshot.last_quota;
        captain.rollback_periods_left = snapshot.rollback_periods_left;
        captain.throttle_count_since_scaledown = snapshot.throttle_count_since_scaledown;
        captain
    }

    pub fn snapshot(&self) -> CaptainSnapshot {
        CaptainSnapshot {
            quota: self.quota,
            margin: self.margin,
            throttle_target: self.throttle_target,
            usage_history_ms: self.usage_history_ms.iter().copied().collect(),
            last_quota: self.last_quota,
            rollback_periods_left: self.rollback_periods_left,
            throttle_count_since_scaledown: self.throttle_count_since_scaledown,
        }
    }

    /// Window decision: multiplicative scale-up or instantaneous scale-down.
    pub fn on_window(&mut self, throttle_count_in_window: u64) -> WindowAction {
        let n = self.params.window_periods as f64;
        let ratio = throttle_count_in_window as f64 / n;
        self.margin = (self.margin + ratio - self.throttle_target).max(0.0);
        let from = self.quota;
        if ratio > self.params.alpha * self.throttle_target {
            self.quota =
                self.clamp(from * (1.0 + ratio - self.params.alpha * self.throttle_target));
            // The quota already moved up; a pending rollback watch would
            // only fight it.
            self.rollback_periods_left = 0;
            WindowAction::ScaleUp {
                from,
                to: self.quota,
            }
        } else {
            if self.usage_history_ms.len() < self.params.history_periods {
                return WindowAction::Hold;
            }
            let history_cores: Vec<f64> = self
                .usage_history_ms
                .iter()
                .map(|u| u / self.period_ms)
                .collect();
            let peak = history_cores
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let proposed = peak + self.margin * sample_stdev(&history_cores);
            if proposed <= self.params.beta_max * from {
                let to = self.clamp((self.params.beta_min * from).max(proposed));
                if to == from {
                    // Pinned at the floor; nothing was reclaimed, so there
                    // is nothing to watch for.
                    return WindowAction::Hold;
                }
                self.quota = to;
                self.last_quota = from;
                self.rollback_periods_left = self.params.window_periods;
                self.throttle_count_since_scaledown = 0;
                WindowAction::ScaleDown { from, to }
            } else {
                WindowAction::Hold
            }
        }
    }

    /// Rollback watch, run every period for the `N` periods after a
    /// scale-down. The accumulated throttle count is always divided by `N`,
    /// so the trigger can fire early in the watch.
    pub fn on_period_rollback_check(&mut self, throttled_this_period: bool) -> RollbackAction {
        if self.rollback_periods_left == 0 {
            return RollbackAction::Inactive;
        }
        self.throttle_count_since_scaledown += u64::from(throttled_this_period);
        let ratio = self.throttle_count_since_scaledown as f64 / self.params.window_periods as f64;
        if ratio > self.params.alpha * self.throttle_target {
            let from = self.quota;
            // Previous (higher) quota plus the difference: the extra grant
            // absorbs the backlog built up since the reckless scale-down.
            self.quota = self.clamp(self.last_quota + (self.last_quota - from));
            self.margin += ratio - self.throttle_target;
            self.rollback_periods_left = 0;
            RollbackAction::Reverted {
                from,
                to: self.quota,
            }
        } else {
            self.rollback_periods_left -= 1;
            RollbackAction::Held
        }
    }
}
