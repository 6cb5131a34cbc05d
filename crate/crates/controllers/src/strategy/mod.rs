//! [`Controller`](crate::api::Controller) implementations for each strategy.

pub mod autothrottle;
pub mod fixed_target;
pub mod k8s;
pub mod static_alloc;
