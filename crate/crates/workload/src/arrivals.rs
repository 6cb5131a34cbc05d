//! Poisson thinning of a trace into per-period request arrivals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use sim_core::Arrival;

use crate::{Trace, WorkloadError};

/// Request-type mix: fraction of traffic per type, indexed by type id.
#[derive(Debug, Clone)]
pub struct Composition {
    fractions: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Composition {
    pub fn new(fractions: Vec<f64>) -> Result<Self, WorkloadError> {
        let sum: f64 = fractions.iter().sum();
        if fractions.iter().any(|&f| !(f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(WorkloadError::BadComposition { sum });
        }
        let mut cumulative = Vec::with_capacity(fractions.len());
        let mut acc = 0.0;
        for &f in &fractions {
            acc += f;
            cumulative.push(acc);
        }
        Ok(Self {
            fractions,
            cumulative,
        })
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    fn sample(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c < u)
            .min(self.fractions.len() - 1)
    }
}

/// Seeded arrival generator. Counts arrive Poisson-distributed with mean
/// `rps * period_seconds`; types are drawn i.i.d. from the composition.
/// Request ids are unique across the generator's lifetime.
#[derive(Debug)]
pub struct ArrivalGen {
    rng: ChaCha8Rng,
    next_id: u64,
}

impl ArrivalGen {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_id: 0,
        }
    }

    /// Arrivals for one period. `period_index` addresses the trace directly;
    /// callers that loop a trace pass the wrapped index.
    pub fn arrivals_for_period(
        &mut self,
        trace: &Trace,
        composition: &Composition,
        period_index: u64,
        period_ms: f64,
    ) -> Vec<Arrival> {
        let t_s = period_index as f64 * period_ms / 1000.0;
        self.arrivals_at_rate(trace.rps_at(t_s), composition, period_ms)
    }

    /// Arrivals for one period at an explicit rate.
    pub fn arrivals_at_rate(
        &mut self,
        rps: f64,
        composition: &Composition,
        period_ms: f64,
    ) -> Vec<Arrival> {
        let lambda = rps * period_ms / 1000.0;
        if lambda <= 0.0 {
            return Vec::new();
        }
        let count = Poisson::new(lambda)
            .expect("positive lambda")
            .sample(&mut self.rng) as u64;
        (0..count)
            .map(|_| {
                let id = self.next_id;
                self.next_id += 1;
                let rtype = composition.sample(self.rng.random::<f64>());
                Arrival {
                    request_id: id,
                    rtype,
                }
            })
            .collect()
    }
}
