//! Cost-prediction models for the bandit.
//!
//! Both models regress observed cost on the context bin, with one output
//! per action, and train by plain SGD at the configured learning rate. They
//! initialize predictions at the worst cost so actions with no data are
//! never preferred over observed ones; the exploration stage is what seeds
//! the action space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ladder::ActionPair;
use super::store::TrainingSample;

/// Upper end of the cost range; also the pessimistic initial prediction.
pub const COST_CEILING: f64 = 3.0;

pub trait CostModel: Send {
    fn name(&self) -> &'static str;
    /// One SGD pass over the samples, in order.
    fn fit(&mut self, samples: &[TrainingSample]);
    fn predict(&self, bin: u64, action: ActionPair) -> f64;
}

/// Lowest predicted cost at `bin` over the whole action space. Exact ties
/// break toward the action with the larger `i + j` (higher targets cost
/// fewer CPUs), then the larger `i`.
pub fn argmin_action(model: &dyn CostModel, bin: u64, ladder_len: u8) -> ActionPair {
    let mut best = ActionPair::new(1, 1);
    let mut best_cost = f64::INFINITY;
    for action in ActionPair::all(ladder_len) {
        let cost = model.predict(bin, action);
        let better = cost < best_cost
            || (cost == best_cost
                && (action.i + action.j > best.i + best.j
                    || (action.i + action.j == best.i + best.j && action.i > best.i)));
        if better {
            best = action;
            best_cost = cost;
        }
    }
    best
}

/// Independent linear regressor per action: `cost ~ w * bin_feature + b`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    ladder_len: u8,
    learning_rate: f64,
    bin_scale: f64,
    weights: Vec<(f64, f64)>, // (w, b) per flat action index
}

impl LinearModel {
    pub fn new(ladder_len: u8, learning_rate: f64, bin_scale: f64) -> Self {
        let actions = ladder_len as usize * ladder_len as usize;
        Self {
            ladder_len,
            learning_rate,
            bin_scale,
            weights: vec![(0.0, COST_CEILING); actions],
        }
    }

    fn feature(&self, bin: u64) -> f64 {
        bin as f64 / self.bin_scale
    }
}

impl CostModel for LinearModel {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn fit(&mut self, samples: &[TrainingSample]) {
        for s in samples {
            let x = self.feature(s.bin);
            let (w, b) = self.weights[s.action.flat_index(self.ladder_len)];
            let err = w * x + b - s.cost;
            let slot = &mut self.weights[s.action.flat_index(self.ladder_len)];
            slot.0 = w - self.learning_rate * err * x;
            slot.1 = b - self.learning_rate * err;
        }
    }

    fn predict(&self, bin: u64, action: ActionPair) -> f64 {
        let (w, b) = self.weights[action.flat_index(self.ladder_len)];
        (w * self.feature(bin) + b).clamp(0.0, COST_CEILING)
    }
}

/// Shared shallow network: a tanh hidden layer over the bin feature, with
/// one linear output head per action. Each head also sees the bin feature
/// directly, so it subsumes the per-action linear fit; the shared hidden
/// units add nonlinearity in the context.
///
/// Heads start at exactly zero with the pessimistic bias, so untrained
/// actions tie exactly and the trunk stays put until heads carry signal.
/// The trunk learns at a damped rate: it aggregates gradient traffic from
/// the whole action space, and the full rate would saturate it.
#[derive(Debug, Clone)]
pub struct SharedNnModel {
    ladder_len: u8,
    hidden: usize,
    learning_rate: f64,
    bin_scale: f64,
    w_in: Vec<f64>,       // hidden
    b_in: Vec<f64>,       // hidden
    heads: Vec<Vec<f64>>, // per action: hidden weights
    head_skip: Vec<f64>,  // per action: direct bin-feature weight
    head_bias: Vec<f64>,  // per action
}

const TRUNK_LR_SCALE: f64 = 0.05;

impl SharedNnModel {
    pub fn new(
        ladder_len: u8,
        hidden: usize,
        learning_rate: f64,
        bin_scale: f64,
        seed: u64,
    ) -> Self {
        let actions = ladder_len as usize * ladder_len as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |scale: f64| (rng.random::<f64>() * 2.0 - 1.0) * scale;
        let w_in = (0..hidden).map(|_| draw(1.0)).collect();
        let b_in = (0..hidden).map(|_| draw(0.5)).collect();
        Self {
            ladder_len,
            hidden,
            learning_rate,
            bin_scale,
            w_in,
            b_in,
            heads: vec![vec![0.0; hidden]; actions],
            head_skip: vec![0.0; actions],
            head_bias: vec![COST_CEILING; actions],
        }
    }

    fn feature(&self, bin: u64) -> f64 {
        bin as f64 / self.bin_scale
    }

    fn hidden_activations(&self, x: f64) -> Vec<f64> {
        (0..self.hidden)
            .map(|k| (self.w_in[k] * x + self.b_in[k]).tanh())
            .collect()
    }

    fn raw_predict(&self, x: f64, h: &[f64], a: usize) -> f64 {
        self.head_bias[a]
            + self.head_skip[a] * x
            + self.heads[a]
                .iter()
                .zip(h)
                .map(|(v, hk)| v * hk)
                .sum::<f64>()
    }
}

impl CostModel for SharedNnModel {
    fn name(&self) -> &'static str {
        "nn3"
    }

    fn fit(&mut self, samples: &[TrainingSample]) {
        let lr = self.learning_rate;
        for s in samples {
            let x = self.feature(s.bin);
            let h = self.hidden_activations(x);
            let a = s.action.flat_index(self.ladder_len);
            let err = self.raw_predict(x, &h, a) - s.cost;
            // Backprop with the pre-update head weights.
            for (k, &hk) in h.iter().enumerate() {
                let dh = err * self.heads[a][k] * (1.0 - hk * hk);
                self.w_in[k] -= lr * TRUNK_LR_SCALE * dh * x;
                self.b_in[k] -= lr * TRUNK_LR_SCALE * dh;
            }
            for (head, &hk) in self.heads[a].iter_mut().zip(&h) {
                *head -= lr * err * hk;
            }
            self.head_skip[a] -= lr * err * x;
            self.head_bias[a] -= lr * err;
        }
    }

    fn predict(&self, bin: u64, action: ActionPair) -> f64 {
        let x = self.feature(bin);
        let h = self.hidden_activations(x);
        let a = action.flat_index(self.ladder_len);
        self.raw_predict(x, &h, a).clamp(0.0, COST_CEILING)
    }
}

/// Model registry: pick an implementation by name.
pub fn build_model(
    name: &str,
    ladder_len: u8,
    learning_rate: f64,
    bin_scale: f64,
    seed: u64,
) -> Result<Box<dyn CostModel>, String> {
    match name {
        "linear" => Ok(Box::new(LinearModel::new(
            ladder_len,
            learning_rate,
            bin_scale,
        ))),
        "nn3" => Ok(Box::new(SharedNnModel::new(
            ladder_len,
            3,
            learning_rate,
            bin_scale,
            seed,
        ))),
        other => Err(format!(
            "unknown cost model {other:?} (expected \"linear\" or \"nn3\")"
        )),
    }
}
