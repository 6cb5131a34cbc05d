//! Grouped cost samples and the median-denoised training set.
//!
//! Observed costs are noisy; instead of training on each raw cost, samples
//! are grouped by (context bin, action) and the group median is used as the
//! training label. A `BTreeMap` keeps group iteration deterministic.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ladder::ActionPair;

pub type ContextBin = u64;

/// Append-only store of raw costs grouped by (bin, action).
#[derive(Debug, Clone, Default)]
pub struct SampleStore {
    /// Group values kept sorted for O(1) medians; insertion order is not
    /// needed anywhere.
    groups: BTreeMap<(ContextBin, ActionPair), Vec<f64>>,
}

/// How training labels are derived from a group. `GroupMedian` is the
/// production setting; `RawSample` (a random raw member per training row)
/// exists to measure what the denoising buys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingLabel {
    #[default]
    GroupMedian,
    RawSample,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingSample {
    pub bin: ContextBin,
    pub action: ActionPair,
    pub cost: f64,
}

impl SampleStore {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn group_len(&self, bin: ContextBin, action: ActionPair) -> usize {
        self.groups.get(&(bin, action)).map_or(0, Vec::len)
    }

    /// Append a raw cost and return the group median after insertion — the
    /// value used as the training label for this observation.
    pub fn record(&mut self, bin: ContextBin, action: ActionPair, raw_cost: f64) -> f64 {
        let group = self.groups.entry((bin, action)).or_default();
        let pos = group.partition_point(|&c| c < raw_cost);
        group.insert(pos, raw_cost);
        median_of_sorted(group)
    }

    pub fn group_median(&self, bin: ContextBin, action: ActionPair) -> Option<f64> {
        self.groups.get(&(bin, action)).map(|g| median_of_sorted(g))
    }

    /// Draw `n` training samples, groups chosen uniformly at random with
    /// replacement. Labels follow `label`; an empty store yields an empty
    /// set (callers skip training that step).
    pub fn build_training_set<R: Rng>(
        &self,
        n: usize,
        rng: &mut R,
        label: TrainingLabel,
    ) -> Vec<TrainingSample> {
        if self.groups.is_empty() || n == 0 {
            return Vec::new();
        }
        let entries: Vec<(&(ContextBin, ActionPair), &Vec<f64>)> = self.groups.iter().collect();
        let medians: Vec<f64> = entries.iter().map(|(_, g)| median_of_sorted(g)).collect();
        (0..n)
            .map(|_| {
                let idx = rng.random_range(0..entries.len());
                let (&(bin, action), group) = entries[idx];
                let cost = match label {
                    TrainingLabel::GroupMedian => medians[idx],
                    TrainingLabel::RawSample => group[rng.random_range(0..group.len())],
                };
                TrainingSample { bin, action, cost }
            })
            .collect()
    }
}

/// Median with the even-length convention fixed as the mean of the two
/// middle values.
fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}
