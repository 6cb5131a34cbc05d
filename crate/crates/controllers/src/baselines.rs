//! Utilization-threshold autoscaling, the reference baseline.
//!
//! Every `m` seconds the controller computes a candidate allocation
//! `usage / threshold` from the mean usage over the interval, and sets the
//! quota to the largest candidate seen in the last `s` seconds. The stock
//! cadence is m=15, s=300; the fast variant uses m=1, s=20.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct K8sParams {
    pub measure_interval_s: f64,
    pub lookback_s: f64,
    pub utilization_threshold: f64,
}

impl Default for K8sParams {
    fn default() -> Self {
        Self::stock(0.5)
    }
}

impl K8sParams {
    pub fn stock(threshold: f64) -> Self {
        Self {
            measure_interval_s: 15.0,
            lookback_s: 300.0,
            utilization_threshold: threshold,
        }
    }

    pub fn fast(threshold: f64) -> Self {
        Self {
            measure_interval_s: 1.0,
            lookback_s: 20.0,
            utilization_threshold: threshold,
        }
    }

    pub fn ring_len(&self) -> usize {
        (self.lookback_s / self.measure_interval_s).round() as usize
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.measure_interval_s > 0.0) {
            return Err("measure_interval_s must be positive".into());
        }
        if self.measure_interval_s > self.lookback_s {
            return Err("measure_interval_s must not exceed lookback_s".into());
        }
        let ratio = self.lookback_s / self.measure_interval_s;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err("lookback_s must be a multiple of measure_interval_s".into());
        }
        if !(self.utilization_threshold > 0.0 && self.utilization_threshold <= 1.0) {
            return Err("utilization_threshold must be in (0, 1]".into());
        }
        Ok(())
    }
}

/// Ring of candidate allocations from the last `s` seconds.
#[derive(Debug, Clone, Default)]
pub struct K8sState {
    ring: VecDeque<f64>,
}

impl K8sState {
    /// Push this interval's candidate and return the new quota: the largest
    /// candidate in the lookback window, clamped to the service's bounds.
    pub fn step(
        &mut self,
        usage_cores_avg: f64,
        params: &K8sParams,
        quota_min: f64,
        quota_max: f64,
    ) -> f64 {
        let candidate = usage_cores_avg / params.utilization_threshold;
        self.ring.push_back(candidate);
        while self.ring.len() > params.ring_len() {
            self.ring.pop_front();
        }
        let max = self.ring.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max.clamp(quota_min, quota_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_is_the_max_candidate_over_the_window() {
        let params = K8sParams::stock(0.5);
        let mut state = K8sState::default();
        let mut quota = 0.0;
        for usage in [2.0, 3.0, 2.5] {
            quota = state.step(usage, &params, 0.05, 64.0);
        }
        assert_eq!(quota, 6.0);
    }

    #[test]
    fn constant_usage_converges_to_usage_over_threshold() {
        let params = K8sParams::stock(0.4);
        let mut state = K8sState::default();
        let mut quota = 0.0;
        for _ in 0..params.ring_len() {
            quota = state.step(2.0, &params, 0.05, 64.0);
        }
        assert_eq!(quota, 5.0);
    }

    #[test]
    fn zero_usage_clamps_to_quota_min() {
        let params = K8sParams::fast(0.5);
        let mut state = K8sState::default();
        let quota = state.step(0.0, &params, 0.25, 64.0);
        assert_eq!(quota, 0.25);
    }

    #[test]
    fn quota_only_drops_when_the_peak_leaves_the_ring() {
        let params = K8sParams::fast(0.5); // ring of 20 entries
        let mut state = K8sState::default();
        let peak = state.step(5.0, &params, 0.05, 64.0);
        assert_eq!(peak, 10.0);
        for _ in 0..19 {
            assert_eq!(state.step(1.0, &params, 0.05, 64.0), 10.0);
        }
        // Entry 21 evicts the peak candidate.
        assert_eq!(state.step(1.0, &params, 0.05, 64.0), 2.0);
    }

    #[test]
    fn cadence_validation() {
        assert!(K8sParams::stock(0.5).validate().is_ok());
        assert!(K8sParams::fast(0.9).validate().is_ok());
        assert!(K8sParams {
            utilization_threshold: 0.0,
            ..K8sParams::stock(0.5)
        }
        .validate()
        .is_err());
        assert!(K8sParams {
            utilization_threshold: 1.5,
            ..K8sParams::stock(0.5)
        }
        .validate()
        .is_err());
        assert!(K8sParams {
            measure_interval_s: 7.0,
            lookback_s: 300.0,
            utilization_threshold: 0.5
        }
        .validate()
        .is_err());
    }
}
