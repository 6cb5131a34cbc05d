//! Trace representation, generators, file replay, and fluctuation.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::WorkloadError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t_s: f64,
    pub rps: f64,
}

/// A workload trace: RPS over time, zero-order hold between points.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    points: Vec<TracePoint>,
}

impl Trace {
    pub fn from_points(points: Vec<TracePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].t_s < w[1].t_s));
        Self { points }
    }

    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Trace duration in seconds; the last point is held for one second.
    pub fn duration_s(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.t_s + 1.0)
    }

    /// RPS at time `t_s`: the value of the last point at or before `t_s`
    /// (the first point's value before the trace starts).
    pub fn rps_at(&self, t_s: f64) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        match self.points.partition_point(|p| p.t_s <= t_s) {
            0 => self.points[0].rps,
            idx => self.points[idx - 1].rps,
        }
    }

    pub fn min_rps(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.rps)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_rps(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.rps)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Time-weighted mean RPS over the trace duration.
    pub fn avg_rps(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let mut integral = 0.0;
        for w in self.points.windows(2) {
            integral += w[0].rps * (w[1].t_s - w[0].t_s);
        }
        integral += self.points.last().unwrap().rps; // final 1 s hold
        let span = self.duration_s() - self.points[0].t_s;
        integral / span
    }

    /// Resample RPS uniformly within `base +- half_range` (floored at 1)
    /// once per `window_s`-second window, mirroring short-term workload
    /// fluctuation around the original trace.
    pub fn fluctuate(&self, half_range: f64, window_s: f64, seed: u64) -> Trace {
        assert!(half_range >= 0.0, "half_range must be non-negative");
        assert!(window_s > 0.0, "window_s must be positive");
        if half_range == 0.0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut current_window = u64::MAX;
        let mut u = 0.0;
        let points = self
            .points
            .iter()
            .map(|p| {
                let window = (p.t_s / window_s).floor() as u64;
                if window != current_window {
                    current_window = window;
                    u = rng.random::<f64>();
                }
                let lo = (p.rps - half_range).max(1.0);
                let hi = p.rps + half_range;
                TracePoint {
                    t_s: p.t_s,
                    rps: lo + u * (hi - lo),
                }
            })
            .collect();
        Trace::from_points(points)
    }
}

/// The four parametric trace shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Diurnal,
    Constant,
    Noisy,
    Bursty,
}

impl std::str::FromStr for TraceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "diurnal" => Ok(Self::Diurnal),
            "constant" => Ok(Self::Constant),
            "noisy" => Ok(Self::Noisy),
            "bursty" => Ok(Self::Bursty),
            other => Err(format!(
                "unknown trace kind {other:?} (expected diurnal, constant, noisy, or bursty)"
            )),
        }
    }
}

/// Generate a one-point-per-second trace of the given shape. The result
/// stays within `[rps_min, rps_max]` and its mean lands within 5% of
/// `rps_avg` (the generators tune their shape parameter until it does).
pub fn gen_trace(
    kind: TraceKind,
    duration_s: u64,
    rps_min: f64,
    rps_avg: f64,
    rps_max: f64,
    seed: u64,
) -> Result<Trace, WorkloadError> {
    if !(rps_min >= 0.0 && rps_min <= rps_avg && rps_avg <= rps_max) || !rps_max.is_finite() {
        return Err(WorkloadError::InvalidRange {
            min: rps_min,
            avg: rps_avg,
            max: rps_max,
        });
    }
    if duration_s == 0 {
        return Ok(Trace::default());
    }
    if rps_max == rps_min {
        let points = (0..duration_s)
            .map(|t| TracePoint {
                t_s: t as f64,
                rps: rps_min,
            })
            .collect();
        return Ok(Trace::from_points(points));
    }
    let values = match kind {
        TraceKind::Diurnal => diurnal(duration_s, rps_min, rps_avg, rps_max),
        TraceKind::Constant => constant(duration_s, rps_min, rps_avg, rps_max, seed),
        TraceKind::Noisy => noisy(duration_s, rps_min, rps_avg, rps_max, seed),
        TraceKind::Bursty => bursty(duration_s, rps_min, rps_avg, rps_max, seed),
    };
    let points = values
        .into_iter()
        .enumerate()
        .map(|(t, rps)| TracePoint { t_s: t as f64, rps })
        .collect();
    Ok(Trace::from_points(points))
}

/// One smooth peak: a raised cosine taken to a power, with the exponent
/// solved so the trace mean hits the requested average.
fn diurnal(duration_s: u64, min: f64, avg: f64, max: f64) -> Vec<f64> {
    let target = ((avg - min) / (max - min)).clamp(1e-6, 1.0 - 1e-6);
    let shape = |gamma: f64| -> Vec<f64> {
        (0..duration_s)
            .map(|t| {
                let phase = 2.0 * std::f64::consts::PI * t as f64 / duration_s as f64;
                ((1.0 - phase.cos()) / 2.0).powf(gamma)
            })
            .collect()
    };
    // mean(s^gamma) decreases monotonically in gamma.
    let mut lo = 1e-3f64;
    let mut hi = 1e3f64;
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        let m = mean(&shape(mid));
        if m > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shape((lo * hi).sqrt())
        .into_iter()
        .map(|s| min + (max - min) * s)
        .collect()
}

fn constant(duration_s: u64, min: f64, avg: f64, max: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Keep 3 sigma inside the band so clipping cannot bias the mean.
    let sigma = ((max - min) / 8.0)
        .min((avg - min) / 3.0)
        .min((max - avg) / 3.0)
        .max(1e-9);
    let normal = Normal::new(0.0, sigma).unwrap();
    (0..duration_s)
        .map(|_| (avg + normal.sample(&mut rng)).clamp(min, max))
        .collect()
}

/// Mean-reverting wander, clipped to the bounds; the reversion level is
/// nudged until the clipped mean matches the requested average.
fn noisy(duration_s: u64, min: f64, avg: f64, max: f64, seed: u64) -> Vec<f64> {
    let kappa = 0.04f64;
    // Stationary spread of the unclipped walk is sigma / sqrt(2 kappa);
    // size it to roughly an eighth of the band.
    let sigma = (max - min) / 8.0 * (2.0 * kappa).sqrt();
    let generate = |mu: f64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut x = avg;
        (0..duration_s)
            .map(|_| {
                x = (x + kappa * (mu - x) + normal.sample(&mut rng)).clamp(min, max);
                x
            })
            .collect()
    };
    // The reversion level itself may sit outside the band: clipping near a
    // bound biases the realized mean, and the search compensates. Keep the
    // closest iterate in case the walk oscillates.
    let mut mu = avg;
    let mut values = generate(mu);
    let mut best = values.clone();
    let mut best_err = (avg - mean(&best)).abs();
    for _ in 0..30 {
        let err = avg - mean(&values);
        if err.abs() <= 0.005 * avg.max(1.0) {
            break;
        }
        mu += err;
        values = generate(mu);
        let abs_err = (avg - mean(&values)).abs();
        if abs_err < best_err {
            best = values.clone();
            best_err = abs_err;
        }
    }
    best
}

/// Constant base with random rectangular spikes to the maximum. Spikes are
/// placed first; the base level is then solved so the overall mean equals
/// the requested average exactly. If the spikes alone push the mean past
/// the budget, their density is halved and placement retried.
fn bursty(duration_s: u64, min: f64, avg: f64, max: f64, seed: u64) -> Vec<f64> {
    let spike_fraction = ((avg - min) / (max - min)).min(0.5) * 0.5;
    let mean_spike_len = 12.5;
    let spike_mask = |p_start: f64| -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spike_left = 0u64;
        (0..duration_s)
            .map(|_| {
                if spike_left > 0 {
                    spike_left -= 1;
                    true
                } else if rng.random::<f64>() < p_start {
                    spike_left = rng.random_range(5..=20) - 1;
                    true
                } else {
                    false
                }
            })
            .collect()
    };
    let mut p_start = spike_fraction / (mean_spike_len * (1.0 - spike_fraction));
    for _ in 0..30 {
        let mask = spike_mask(p_start);
        let spike_s = mask.iter().filter(|&&m| m).count() as f64;
        let t = duration_s as f64;
        if spike_s < t {
            let base = (avg * t - max * spike_s) / (t - spike_s);
            if base >= min {
                return mask
                    .into_iter()
                    .map(|spike| if spike { max } else { base })
                    .collect();
            }
        }
        p_start /= 2.0;
        if p_start < 1e-6 {
            break;
        }
    }
    // Too little headroom between avg and min for any spikes.
    vec![avg; duration_s as usize]
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Load a trace from a plain-text file: one `t_seconds,rps` record per line,
/// `.`-decimal reals, no header. Timestamps must be strictly increasing.
pub fn load_trace(path: &Path) -> Result<Trace, WorkloadError> {
    let display = path.display().to_string();
    let content = std::fs::read_to_string(path).map_err(|e| WorkloadError::TraceFile {
        path: display.clone(),
        reason: e.to_string(),
    })?;
    let mut points = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            return Err(WorkloadError::TraceLine {
                path: display,
                line: line_no,
                reason: "empty line".into(),
            });
        }
        let mut parts = line.splitn(2, ',');
        let t_raw = parts.next().unwrap_or("");
        let rps_raw = parts.next().ok_or_else(|| WorkloadError::TraceLine {
            path: display.clone(),
            line: line_no,
            reason: "expected `t_seconds,rps`".into(),
        })?;
        let t_s: f64 = t_raw.trim().parse().map_err(|_| WorkloadError::TraceLine {
            path: display.clone(),
            line: line_no,
            reason: format!("bad timestamp {t_raw:?}"),
        })?;
        let rps: f64 = rps_raw
            .trim()
            .parse()
            .map_err(|_| WorkloadError::TraceLine {
                path: display.clone(),
                line: line_no,
                reason: format!("bad rps {rps_raw:?}"),
            })?;
        if !t_s.is_finite() || t_s < 0.0 {
            return Err(WorkloadError::TraceLine {
                path: display,
                line: line_no,
                reason: format!("timestamp must be finite and >= 0, got {t_s}"),
            });
        }
        if !rps.is_finite() || rps < 0.0 {
            return Err(WorkloadError::TraceLine {
                path: display,
                line: line_no,
                reason: format!("rps must be finite and >= 0, got {rps}"),
            });
        }
        if let Some(last) = points.last() {
            let last: &TracePoint = last;
            if t_s <= last.t_s {
                return Err(WorkloadError::TraceLine {
                    path: display,
                    line: line_no,
                    reason: format!(
                        "timestamps must be strictly increasing ({} after {})",
                        t_s, last.t_s
                    ),
                });
            }
        }
        points.push(TracePoint { t_s, rps });
    }
    if points.is_empty() {
        return Err(WorkloadError::TraceFile {
            path: display,
            reason: "empty trace".into(),
        });
    }
    Ok(Trace::from_points(points))
}

/// Write a trace in the same format `load_trace` reads.
pub fn write_trace(trace: &Trace, path: &Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in trace.points() {
        writeln!(out, "{},{}", p.t_s, p.rps)?;
    }
    Ok(())
}
