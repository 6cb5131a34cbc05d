//! Workload traces and request arrivals.
//!
//! A trace is a sequence of `(t_seconds, rps)` points with strictly
//! increasing timestamps, held constant between points (zero-order hold).
//! Traces are either generated from one of four parametric shapes or loaded
//! from a plain-text file, and converted into per-period request arrivals by
//! Poisson thinning with a fixed request-type mix.

mod arrivals;
mod trace;

pub use arrivals::{ArrivalGen, Composition};
pub use trace::{gen_trace, load_trace, write_trace, Trace, TraceKind, TracePoint};

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("invalid RPS range: need 0 <= min <= avg <= max, got {min}/{avg}/{max}")]
    InvalidRange { min: f64, avg: f64, max: f64 },
    #[error("trace file {path}: {reason}")]
    TraceFile { path: String, reason: String },
    #[error("trace file {path}, line {line}: {reason}")]
    TraceLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("composition fractions must be non-negative and sum to 1, got sum {sum}")]
    BadComposition { sum: f64 },
}
