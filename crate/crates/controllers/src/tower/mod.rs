//! Application-level controller: a contextual bandit over throttle targets.
//!
//! Once per simulated minute the tower observes average RPS (the context,
//! quantized into bins), scores the previously dispatched action with a
//! cost built from the SLO outcome and the total allocation, records the
//! cost into median-denoised groups, refits its cost model on samples drawn
//! from those groups, and selects the next action: a pair of throttle
//! targets, one per service usage group.
//!
//! Selection runs in two regimes. During the exploration stage actions are
//! drawn uniformly at random and held for two steps, with only the settled
//! second step used for training. Afterwards the tower exploits the model's
//! argmin and explores only its single-step neighbors on the target ladder,
//! each with probability `epsilon / 4`.

pub mod kmeans;
pub mod ladder;
pub mod model;
pub mod store;

pub use kmeans::{cluster_services, ClusterAssignment};
pub use ladder::{ActionPair, ThrottleLadder, DEFAULT_LADDER};
pub use model::{argmin_action, build_model, CostModel, COST_CEILING};
pub use store::{SampleStore, TrainingLabel, TrainingSample};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::api::MinuteDecision;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TowerParams {
    /// Total probability of exploring a neighbor instead of the best action.
    pub epsilon: f64,
    /// Steps of uniform-random exploration before exploitation starts.
    pub exploration_stage_steps: u64,
    /// How many steps each exploration-stage action is held; only the last
    /// step of a hold produces a training sample.
    pub exploration_hold_steps: u64,
    pub training_samples_per_update: usize,
    /// Tail-latency objective evaluated per step.
    pub slo_ms: f64,
    pub slo_percentile: f64,
    /// Cluster capacity used to normalize the allocation cost into [0, 1].
    pub alloc_norm_max_cores: f64,
    /// Latency at which the violation cost saturates; defaults to 5x the
    /// SLO when left at 0.
    pub latency_norm_max_ms: f64,
    /// Context quantization: bin = floor(avg RPS / bin_size_rps).
    pub bin_size_rps: f64,
    /// Scale applied to the bin index before it enters the cost model.
    pub bin_feature_scale: f64,
    pub learning_rate: f64,
    /// Cost model name: "nn3" or "linear".
    pub model: String,
    pub training_label: TrainingLabel,
    pub ladder: Vec<f64>,
}

impl Default for TowerParams {
    fn default() -> Self {
        Self {
            epsilon: 0.10,
            exploration_stage_steps: 360,
            exploration_hold_steps: 2,
            training_samples_per_update: 10_000,
            slo_ms: 200.0,
            slo_percentile: 0.99,
            alloc_norm_max_cores: 100.0,
            latency_norm_max_ms: 0.0,
            bin_size_rps: 20.0,
            bin_feature_scale: 32.0,
            learning_rate: 0.5,
            model: "nn3".into(),
            training_label: TrainingLabel::GroupMedian,
            ladder: DEFAULT_LADDER.to_vec(),
        }
    }
}

impl TowerParams {
    /// Violation costs saturate here; 5x the SLO unless configured.
    pub fn latency_cap_ms(&self) -> f64 {
        if self.latency_norm_max_ms > 0.0 {
            self.latency_norm_max_ms
        } else {
            5.0 * self.slo_ms
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err("epsilon must be in [0, 1]".into());
        }
        if self.exploration_hold_steps < 1 {
            return Err("exploration_hold_steps must be >= 1".into());
        }
        if !(self.slo_ms > 0.0) {
            return Err("slo_ms must be positive".into());
        }
        if !(0.0 < self.slo_percentile && self.slo_percentile <= 1.0) {
            return Err("slo_percentile must be in (0, 1]".into());
        }
        if !(self.alloc_norm_max_cores > 0.0) {
            return Err("alloc_norm_max_cores must be positive".into());
        }
        if self.latency_cap_ms() <= self.slo_ms {
            return Err("latency_norm_max_ms must exceed slo_ms".into());
        }
        if !(self.bin_size_rps > 0.0) {
            return Err("bin_size_rps must be positive".into());
        }
        if !(self.bin_feature_scale > 0.0) {
            return Err("bin_feature_scale must be positive".into());
        }
        ThrottleLadder::new(self.ladder.clone()).map(|_| ())
    }
}

/// Per-step cost. Within SLO only the allocation matters, mapped linearly
/// into [0, 1]; on violation only the tail latency matters, mapped linearly
/// into [2, 3]. The gap makes every compliant step cheaper than every
/// violating one.
pub fn compute_cost(
    slo_met: bool,
    total_alloc_cores: f64,
    tail_latency_ms: f64,
    params: &TowerParams,
) -> f64 {
    debug_assert!(total_alloc_cores >= 0.0);
    if slo_met {
        (total_alloc_cores / params.alloc_norm_max_cores).clamp(0.0, 1.0)
    } else {
        let span = params.latency_cap_ms() - params.slo_ms;
        2.0 + ((tail_latency_ms - params.slo_ms) / span).clamp(0.0, 1.0)
    }
}

/// Epsilon-greedy over single-step ladder neighbors: the best action with
/// probability `1 - epsilon`, each of its up-to-four neighbors with
/// probability `epsilon / 4`. Probability mass of out-of-range neighbors
/// falls back to the best action.
pub fn select_action<R: Rng>(
    best: ActionPair,
    epsilon: f64,
    ladder_len: u8,
    rng: &mut R,
) -> (ActionPair, bool) {
    let u = rng.random::<f64>();
    if u >= epsilon {
        return (best, false);
    }
    let slot = ((u / (epsilon / 4.0)) as usize).min(3);
    match best.neighbors(ladder_len)[slot] {
        Some(neighbor) => (neighbor, true),
        None => (best, false),
    }
}

/// Uniform-random action schedule for the exploration stage: a fresh action
/// at the start of each hold, and a flag marking the hold's settled last
/// step (the only one whose outcome feeds training).
#[derive(Debug, Clone)]
pub struct ExplorationStage {
    hold_steps: u64,
    ladder_len: u8,
    held: Option<ActionPair>,
}

impl ExplorationStage {
    pub fn new(hold_steps: u64, ladder_len: u8) -> Self {
        assert!(hold_steps >= 1);
        Self {
            hold_steps,
            ladder_len,
            held: None,
        }
    }

    pub fn action_for_step<R: Rng>(&mut self, step_index: u64, rng: &mut R) -> (ActionPair, bool) {
        let pos = step_index % self.hold_steps;
        if pos == 0 || self.held.is_none() {
            self.held = Some(ActionPair::new(
                rng.random_range(1..=self.ladder_len),
                rng.random_range(1..=self.ladder_len),
            ));
        }
        (self.held.unwrap(), pos == self.hold_steps - 1)
    }
}

/// Minute metrics the tower consumes.
#[derive(Debug, Clone, Copy)]
pub struct TowerStepInput {
    pub avg_rps: f64,
    /// Tail latency of the minute; `None` when no requests completed, which
    /// counts as meeting the SLO.
    pub tail_latency_ms: Option<f64>,
    pub total_alloc_cores: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TowerStepOutput {
    pub action: ActionPair,
    /// Throttle targets for the (high, low) usage groups.
    pub targets: (f64, f64),
    pub decision: MinuteDecision,
}

/// The bandit's full state across steps.
pub struct Tower {
    params: TowerParams,
    ladder: ThrottleLadder,
    model: Box<dyn CostModel>,
    store: SampleStore,
    rng: ChaCha8Rng,
    exploration: ExplorationStage,
    step_index: u64,
    /// Action selected last step and whether its outcome trains the model.
    prev_selection: Option<(ActionPair, bool)>,
    /// Most recent model argmin (before exploration noise).
    last_best: Option<ActionPair>,
}

impl Tower {
    pub fn new(params: TowerParams, seed: u64) -> Result<Self, String> {
        params.validate()?;
        let ladder = ThrottleLadder::new(params.ladder.clone())?;
        let model = build_model(
            &params.model,
            ladder.len(),
            params.learning_rate,
            params.bin_feature_scale,
            seed ^ 0x746F776572,
        )?;
        let exploration = ExplorationStage::new(params.exploration_hold_steps, ladder.len());
        Ok(Self {
            params,
            ladder,
            model,
            store: SampleStore::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            exploration,
            step_index: 0,
            prev_selection: None,
            last_best: None,
        })
    }

    pub fn params(&self) -> &TowerParams {
        &self.params
    }

    pub fn ladder(&self) -> &ThrottleLadder {
        &self.ladder
    }

    pub fn store(&self) -> &SampleStore {
        &self.store
    }

    pub fn in_exploration_stage(&self) -> bool {
        self.step_index < self.params.exploration_stage_steps
    }

    /// The model's current argmin, once exploitation has started.
    pub fn exploited_action(&self) -> Option<ActionPair> {
        self.last_best
    }

    pub fn context_bin(&self, avg_rps: f64) -> u64 {
        (avg_rps.max(0.0) / self.params.bin_size_rps).floor() as u64
    }

    /// One tower step: score the previous action with this minute's
    /// outcome, train, and select the next action.
    pub fn step(&mut self, input: &TowerStepInput) -> TowerStepOutput {
        let bin = self.context_bin(input.avg_rps);
        let slo_met = input
            .tail_latency_ms
            .is_none_or(|p| p <= self.params.slo_ms);
        let mut raw_cost = None;
        let mut group_median = None;
        if let Some((prev_action, use_outcome)) = self.prev_selection {
            let cost = compute_cost(
                slo_met,
                input.total_alloc_cores,
                input.tail_latency_ms.unwrap_or(0.0),
                &self.params,
            );
            raw_cost = Some(cost);
            if use_outcome {
                group_median = Some(self.store.record(bin, prev_action, cost));
                let set = self.store.build_training_set(
                    self.params.training_samples_per_update,
                    &mut self.rng,
                    self.params.training_label,
                );
                if !set.is_empty() {
                    self.model.fit(&set);
                }
            }
        }

        let (action, explored) = if self.in_exploration_stage() {
            let (action, settles) = self
                .exploration
                .action_for_step(self.step_index, &mut self.rng);
            self.prev_selection = Some((action, settles));
            (action, true)
        } else {
            let best = argmin_action(self.model.as_ref(), bin, self.ladder.len());
            self.last_best = Some(best);
            let (action, explored) =
                select_action(best, self.params.epsilon, self.ladder.len(), &mut self.rng);
            self.prev_selection = Some((action, true));
            (action, explored)
        };
        self.step_index += 1;

        let targets = (self.ladder.target(action.i), self.ladder.target(action.j));
        TowerStepOutput {
            action,
            targets,
            decision: MinuteDecision {
                bin: Some(bin),
                action: Some((action.i, action.j)),
                targets: Some(targets),
                raw_cost,
                group_median,
                explored,
            },
        }
    }

    /// Metrics went missing this minute: repeat the previous action and
    /// record nothing.
    pub fn step_missing(&mut self) -> TowerStepOutput {
        let action = self
            .prev_selection
            .map(|(a, _)| a)
            .unwrap_or(ActionPair::new(1, 1));
        self.prev_selection = Some((action, false));
        self.step_index += 1;
        let targets = (self.ladder.target(action.i), self.ladder.target(action.j));
        TowerStepOutput {
            action,
            targets,
            decision: MinuteDecision {
                bin: None,
                action: Some((action.i, action.j)),
                targets: Some(targets),
                raw_cost: None,
                group_median: None,
                explored: false,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TowerParams {
        TowerParams {
            slo_ms: 200.0,
            alloc_norm_max_cores: 160.0,
            exploration_stage_steps: 0,
            ..TowerParams::default()
        }
    }

    #[test]
    fn cost_examples() {
        let p = TowerParams {
            alloc_norm_max_cores: 160.0,
            slo_ms: 200.0,
            ..TowerParams::default()
        };
        assert_eq!(compute_cost(true, 80.0, 0.0, &p), 0.5);
        assert_eq!(compute_cost(false, 80.0, 200.0, &p), 2.0);
        assert_eq!(compute_cost(false, 80.0, 10_000.0, &p), 3.0);
        // Disjoint ranges: any compliant step beats any violating one.
        assert!(compute_cost(true, 1e9, 0.0, &p) < compute_cost(false, 0.0, 200.0, &p));
    }

    #[test]
    fn latency_cap_defaults_to_five_times_slo() {
        let p = TowerParams {
            slo_ms: 100.0,
            latency_norm_max_ms: 0.0,
            ..TowerParams::default()
        };
        assert_eq!(p.latency_cap_ms(), 500.0);
        let mid = compute_cost(false, 0.0, 300.0, &p);
        assert!((mid - 2.5).abs() < 1e-12);
    }

    #[test]
    fn context_bins_quantize_rps() {
        let tower = Tower::new(params(), 1).unwrap();
        assert_eq!(tower.context_bin(237.0), 11);
        assert_eq!(tower.context_bin(0.0), 0);
        assert_eq!(tower.context_bin(19.99), 0);
        assert_eq!(tower.context_bin(20.0), 1);
    }

    #[test]
    fn ladder_endpoint_actions_map_to_their_targets() {
        let mut p = params();
        p.epsilon = 0.0;
        let mut tower = Tower::new(p, 1).unwrap();
        let ladder = tower.ladder().clone();
        assert_eq!(ladder.target(1), 0.0);
        assert_eq!(ladder.target(9), 0.30);
        // With no data the pessimistic model ties everywhere and the
        // tie-break picks (9, 9) = (0.30, 0.30).
        let out = tower.step(&TowerStepInput {
            avg_rps: 100.0,
            tail_latency_ms: Some(50.0),
            total_alloc_cores: 10.0,
        });
        assert_eq!(out.action, ActionPair::new(9, 9));
        assert_eq!(out.targets, (0.30, 0.30));
    }

    #[test]
    fn select_action_epsilon_zero_always_exploits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let best = ActionPair::new(3, 5);
        for _ in 0..1000 {
            assert_eq!(select_action(best, 0.0, 9, &mut rng), (best, false));
        }
    }

    #[test]
    fn select_action_interior_frequencies_match_the_spec_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let best = ActionPair::new(3, 5);
        let n = 200_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            let (a, _) = select_action(best, 0.1, 9, &mut rng);
            *counts.entry(a).or_insert(0usize) += 1;
        }
        let freq = |a: ActionPair| counts.get(&a).copied().unwrap_or(0) as f64 / n as f64;
        let sigma = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq(best) - 0.9).abs() <= 4.0 * sigma(0.9));
        for neighbor in best.neighbors(9).into_iter().flatten() {
            assert!((freq(neighbor) - 0.025).abs() <= 4.0 * sigma(0.025));
        }
        assert_eq!(counts.len(), 5);
    }

    #[test]
    fn select_action_corner_returns_oob_mass_to_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let best = ActionPair::new(1, 1);
        let n = 200_000;
        let mut best_count = 0usize;
        for _ in 0..n {
            let (a, explored) = select_action(best, 0.1, 9, &mut rng);
            if a == best {
                assert!(!explored);
                best_count += 1;
            } else {
                assert!(a == ActionPair::new(1, 2) || a == ActionPair::new(2, 1));
            }
        }
        let freq = best_count as f64 / n as f64;
        let sigma = (0.95f64 * 0.05 / n as f64).sqrt();
        assert!((freq - 0.95).abs() <= 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn exploration_moves_at_most_one_rung_per_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let best = ActionPair::new(4, 4);
        for _ in 0..10_000 {
            let (a, _) = select_action(best, 0.5, 9, &mut rng);
            let di = (a.i as i16 - best.i as i16).abs();
            let dj = (a.j as i16 - best.j as i16).abs();
            assert!(di + dj <= 1);
        }
    }

    #[test]
    fn exploration_stage_holds_actions_and_flags_the_settled_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut stage = ExplorationStage::new(2, 9);
        let (a0, t0) = stage.action_for_step(0, &mut rng);
        let (a1, t1) = stage.action_for_step(1, &mut rng);
        assert_eq!(a0, a1);
        assert!(!t0);
        assert!(t1);
        let mut settled = 0;
        for s in 2..360 {
            let (_, t) = stage.action_for_step(s, &mut rng);
            settled += usize::from(t);
        }
        assert_eq!(settled + usize::from(t0) + usize::from(t1), 180);
    }

    #[test]
    fn full_stage_emits_exactly_half_as_many_training_samples() {
        let mut p = params();
        p.exploration_stage_steps = 360;
        p.training_samples_per_update = 100;
        let mut tower = Tower::new(p, 5).unwrap();
        let input = TowerStepInput {
            avg_rps: 100.0,
            tail_latency_ms: Some(100.0),
            total_alloc_cores: 20.0,
        };
        let mut recorded = 0;
        for _ in 0..361 {
            let out = tower.step(&input);
            recorded += usize::from(out.decision.group_median.is_some());
        }
        // Steps 2, 4, ..., 360 score the settled minute of each hold.
        assert_eq!(recorded, 180);
    }

    #[test]
    fn zero_exploration_steps_skip_the_stage_entirely() {
        let mut tower = Tower::new(params(), 6).unwrap();
        assert!(!tower.in_exploration_stage());
        let out = tower.step(&TowerStepInput {
            avg_rps: 50.0,
            tail_latency_ms: None,
            total_alloc_cores: 5.0,
        });
        // First step has no previous action to score.
        assert!(out.decision.raw_cost.is_none());
        assert!(tower.exploited_action().is_some());
    }

    #[test]
    fn missing_metrics_repeat_the_previous_action_and_record_nothing() {
        let mut p = params();
        p.epsilon = 0.0;
        let mut tower = Tower::new(p, 7).unwrap();
        let out1 = tower.step(&TowerStepInput {
            avg_rps: 100.0,
            tail_latency_ms: Some(100.0),
            total_alloc_cores: 10.0,
        });
        let before = tower.store().group_count();
        let out2 = tower.step_missing();
        assert_eq!(out2.action, out1.action);
        assert_eq!(tower.store().group_count(), before);
        assert!(out2.decision.raw_cost.is_none());
    }

    #[test]
    fn empty_latency_window_counts_as_slo_met() {
        let mut p = params();
        p.alloc_norm_max_cores = 100.0;
        let mut tower = Tower::new(p, 8).unwrap();
        tower.step(&TowerStepInput {
            avg_rps: 0.0,
            tail_latency_ms: None,
            total_alloc_cores: 50.0,
        });
        let out = tower.step(&TowerStepInput {
            avg_rps: 0.0,
            tail_latency_ms: None,
            total_alloc_cores: 50.0,
        });
        // Scored as SLO met: cost = 50 / 100.
        assert_eq!(out.decision.raw_cost, Some(0.5));
    }
}
