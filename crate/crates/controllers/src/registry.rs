//! Strategy registry: controllers are built by name from a shared context,
//! so the harness can select one at runtime from its config.

use crate::api::Controller;
use crate::baselines::K8sParams;
use crate::captain::CaptainParams;
use crate::strategy::autothrottle::AutothrottleController;
use crate::strategy::fixed_target::FixedTargetController;
use crate::strategy::k8s::K8sController;
use crate::strategy::static_alloc::StaticController;
use crate::tower::TowerParams;

#[derive(Debug, Clone)]
pub struct ServiceView {
    pub id: String,
    pub quota_min_cores: f64,
    pub quota_max_cores: f64,
}

/// Everything a factory might need. Strategy-specific sections are optional;
/// a factory errors out when its section is missing.
#[derive(Debug, Clone)]
pub struct BuildContext {
    pub services: Vec<ServiceView>,
    pub period_ms: f64,
    pub seed: u64,
    pub captain: CaptainParams,
    pub tower: TowerParams,
    /// Utilization threshold for the k8s variants.
    pub k8s_threshold: Option<f64>,
    /// Optional cadence override (measure_interval_s, lookback_s).
    pub k8s_cadence: Option<(f64, f64)>,
    /// Cores per service for `static`.
    pub static_cores: Option<Vec<f64>>,
    /// Throttle target per service for `fixed-target`.
    pub fixed_targets: Option<Vec<f64>>,
}

impl BuildContext {
    pub fn new(services: Vec<ServiceView>, period_ms: f64, seed: u64) -> Self {
        Self {
            services,
            period_ms,
            seed,
            captain: CaptainParams::default(),
            tower: TowerParams::default(),
            k8s_threshold: None,
            k8s_cadence: None,
            static_cores: None,
            fixed_targets: None,
        }
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.services
            .iter()
            .map(|s| (s.quota_min_cores, s.quota_max_cores))
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("unknown controller {name:?}; available: {available}")]
    UnknownName { name: String, available: String },
    #[error("controller {name}: missing required config: {what}")]
    MissingConfig {
        name: &'static str,
        what: &'static str,
    },
    #[error("controller {name}: {reason}")]
    Invalid { name: &'static str, reason: String },
}

type Factory = fn(&BuildContext) -> Result<Box<dyn Controller>, BuildError>;

const REGISTRY: &[(&str, Factory)] = &[
    ("autothrottle", build_autothrottle),
    ("k8s-cpu", build_k8s_stock),
    ("k8s-cpu-fast", build_k8s_fast),
    ("static", build_static),
    ("fixed-target", build_fixed_target),
];

pub fn controller_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(name, _)| *name).collect()
}

pub fn build_controller(name: &str, ctx: &BuildContext) -> Result<Box<dyn Controller>, BuildError> {
    match REGISTRY.iter().find(|(n, _)| *n == name) {
        Some((_, factory)) => factory(ctx),
        None => Err(BuildError::UnknownName {
            name: name.to_string(),
            available: controller_names().join(", "),
        }),
    }
}

fn build_autothrottle(ctx: &BuildContext) -> Result<Box<dyn Controller>, BuildError> {
    AutothrottleController::new(
        &ctx.bounds(),
        ctx.period_ms,
        ctx.captain.clone(),
        ctx.tower.clone(),
        ctx.seed,
    )
    .map(|c| Box::new(c) as Box<dyn Controller>)
    .map_err(|reason| BuildError::Invalid {
        name: "autothrottle",
        reason,
    })
}

fn build_k8s(
    ctx: &BuildContext,
    name: &'static str,
    default_params: fn(f64) -> K8sParams,
) -> Result<Box<dyn Controller>, BuildError> {
    let threshold = ctx.k8s_threshold.ok_or(BuildError::MissingConfig {
        name,
        what: "k8s utilization threshold",
    })?;
    let mut params = default_params(threshold);
    if let Some((m, s)) = ctx.k8s_cadence {
        params.measure_interval_s = m;
        params.lookback_s = s;
    }
    K8sController::new(name, params, &ctx.bounds(), ctx.period_ms)
        .map(|c| Box::new(c) as Box<dyn Controller>)
        .map_err(|reason| BuildError::Invalid { name, reason })
}

fn build_k8s_stock(ctx: &BuildContext) -> Result<Box<dyn Controller>, BuildError> {
    build_k8s(ctx, "k8s-cpu", K8sParams::stock)
}

fn build_k8s_fast(ctx: &BuildContext) -> Result<Box<dyn Controller>, BuildError> {
    build_k8s(ctx, "k8s-cpu-fast", K8sParams::fast)
}

fn build_static(ctx: &BuildContext) -> Result<Box<dyn Controller>, BuildError> {
    let cores = ctx.static_cores.clone().ok_or(BuildError::MissingConfig {
        name: "static",
        what: "per-service core allocations",
    })?;
    StaticController::new(cores, &ctx.bounds())
        .map(|c| Box::new(c) as Box<dyn Controller>)
        .map_err(|reason| BuildError::Invalid {
            name: "static",
            reason,
        })
}

fn build_fixed_target(ctx: &BuildContext) -> Result<Box<dyn Controller>, BuildError> {
    let targets = ctx.fixed_targets.clone().ok_or(BuildError::MissingConfig {
        name: "fixed-target",
        what: "per-service throttle targets",
    })?;
    FixedTargetController::new(targets, &ctx.bounds(), ctx.period_ms, ctx.captain.clone())
        .map(|c| Box::new(c) as Box<dyn Controller>)
        .map_err(|reason| BuildError::Invalid {
            name: "fixed-target",
            reason,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> BuildContext {
        BuildContext::new(
            vec![ServiceView {
                id: "svc".into(),
                quota_min_cores: 0.05,
                quota_max_cores: 8.0,
            }],
            100.0,
            42,
        )
    }

    #[test]
    fn every_registered_name_is_buildable_with_its_config() {
        let mut c = ctx();
        c.k8s_threshold = Some(0.5);
        c.static_cores = Some(vec![2.0]);
        c.fixed_targets = Some(vec![0.06]);
        for name in controller_names() {
            let controller = build_controller(name, &c).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(controller.name(), name);
        }
    }

    #[test]
    fn unknown_names_list_the_alternatives() {
        let err = build_controller("predictive", &ctx()).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("autothrottle") && msg.contains("k8s-cpu-fast"));
    }

    #[test]
    fn missing_sections_are_reported() {
        assert!(matches!(
            build_controller("static", &ctx()),
            Err(BuildError::MissingConfig { .. })
        ));
        assert!(matches!(
            build_controller("k8s-cpu", &ctx()),
            Err(BuildError::MissingConfig { .. })
        ));
    }
}
