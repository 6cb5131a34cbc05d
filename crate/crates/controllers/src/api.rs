//! The strategy interface between the experiment driver and a controller.
//!
//! The driver steps the simulation one period at a time and feeds every
//! controller the same observations: per-service period stats after each
//! period, and aggregate minute metrics at minute boundaries. Controllers
//! answer with quota commands, which the driver applies at the next period
//! boundary.

/// What one service did during one period.
#[derive(Debug, Clone, Copy)]
pub struct ServicePeriodStats {
    pub usage_ms: f64,
    pub throttled: bool,
    pub quota_cores: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PeriodObservation<'a> {
    pub period_index: u64,
    pub services: &'a [ServicePeriodStats],
}

/// Aggregate metrics for one simulated minute.
#[derive(Debug, Clone, Copy)]
pub struct MinuteObservation<'a> {
    pub minute_index: u64,
    /// Requests that arrived during the minute, divided by its length.
    pub avg_rps: f64,
    /// End-to-end latencies of requests completing in the minute.
    pub latencies_ms: &'a [f64],
    /// Sum of quotas across services, averaged over the minute's periods.
    pub avg_total_alloc_cores: f64,
}

/// Request to set a service's quota, applied at the next period boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotaCommand {
    pub service: usize,
    pub cores: f64,
}

/// One row of the per-minute decision log. Fields that only the bandit
/// strategy produces are `None` for the baselines, keeping the log schema
/// identical across strategies.
#[derive(Debug, Clone, Copy, Default)]
pub struct MinuteDecision {
    pub bin: Option<u64>,
    /// 1-based ladder indices of the action selected for the next minute.
    pub action: Option<(u8, u8)>,
    /// Throttle targets dispatched for the (high, low) usage groups.
    pub targets: Option<(f64, f64)>,
    /// Cost observed this minute for the previously selected action.
    pub raw_cost: Option<f64>,
    /// Median of the (bin, action) group after recording the cost.
    pub group_median: Option<f64>,
    pub explored: bool,
}

#[derive(Debug, Default)]
pub struct MinuteOutcome {
    pub commands: Vec<QuotaCommand>,
    pub decision: Option<MinuteDecision>,
}

/// Experiment phases, in order. Warm-up ramps the workload and collects the
/// usage profile; exploration lets learning strategies probe actions;
/// measurement is what reports are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Warmup,
    Exploration,
    Measurement,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseContext<'a> {
    /// Per-service average CPU usage (cores) over the phase just finished;
    /// empty at the start of the first phase.
    pub avg_usage_cores: &'a [f64],
}

/// A cluster autoscaling strategy.
pub trait Controller: Send {
    fn name(&self) -> &'static str;

    /// Quotas to apply before the first period runs.
    fn initial_quotas(&self) -> Vec<QuotaCommand>;

    fn on_period(&mut self, obs: &PeriodObservation<'_>) -> Vec<QuotaCommand>;

    fn on_minute(&mut self, _obs: &MinuteObservation<'_>) -> MinuteOutcome {
        MinuteOutcome::default()
    }

    fn on_phase_start(&mut self, _phase: Phase, _ctx: &PhaseContext<'_>) {}
}
