//! Fixed allocations for the whole run; the control condition for the
//! correlation microbenchmark.

use crate::api::{Controller, PeriodObservation, QuotaCommand};

pub struct StaticController {
    cores: Vec<f64>,
}

impl StaticController {
    /// `cores` per service, clamped to each service's quota bounds.
    pub fn new(cores: Vec<f64>, bounds: &[(f64, f64)]) -> Result<Self, String> {
        if cores.len() != bounds.len() {
            return Err(format!(
                "static allocation lists {} services, cluster has {}",
                cores.len(),
                bounds.len()
            ));
        }
        if cores.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err("static allocations must be finite and >= 0".into());
        }
        let cores = cores
            .into_iter()
            .zip(bounds)
            .map(|(c, &(lo, hi))| c.clamp(lo, hi))
            .collect();
        Ok(Self { cores })
    }
}

impl Controller for StaticController {
    fn name(&self) -> &'static str {
        "static"
    }

    fn initial_quotas(&self) -> Vec<QuotaCommand> {
        self.cores
            .iter()
            .enumerate()
            .map(|(service, &cores)| QuotaCommand { service, cores })
            .collect()
    }

    fn on_period(&mut self, _obs: &PeriodObservation<'_>) -> Vec<QuotaCommand> {
        Vec::new()
    }
}
