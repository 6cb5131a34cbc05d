//! CSV and summary emission. Formatting is fixed-precision so reruns with
//! the same seed reproduce output files byte for byte.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::runner::{DecisionRow, HourlyRow, RunSummary};

pub fn fmt_f64(value: f64, decimals: usize) -> String {
    format!("{value:.decimals$}")
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f64(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| fmt_f64(x, decimals)).unwrap_or_default()
}

pub fn decision_log_csv(rows: &[DecisionRow]) -> String {
    let mut out = String::from(
        "minute,rps,bin,action_i,action_j,target_high,target_low,cost,slo_met,total_alloc_cores\n",
    );
    for r in rows {
        let (ai, aj) = match r.action {
            Some((i, j)) => (Some(i as u64), Some(j as u64)),
            None => (None, None),
        };
        let (th, tl) = match r.targets {
            Some((h, l)) => (Some(h), Some(l)),
            None => (None, None),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.minute,
            fmt_f64(r.rps, 3),
            opt_u64(r.bin),
            opt_u64(ai),
            opt_u64(aj),
            opt_f64(th, 2),
            opt_f64(tl, 2),
            opt_f64(r.cost, 6),
            u8::from(r.slo_met),
            fmt_f64(r.total_alloc_cores, 3),
        )
        .unwrap();
    }
    out
}

pub fn hourly_report_csv(rows: &[HourlyRow]) -> String {
    let mut out = String::from("hour,avg_alloc_cores,avg_used_cores,p99_ms,slo_violated\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.hour,
            fmt_f64(r.avg_alloc_cores, 3),
            fmt_f64(r.avg_used_cores, 3),
            opt_f64(r.p99_ms, 3),
            u8::from(r.slo_violated),
        )
        .unwrap();
    }
    out
}

pub fn write_file(path: &Path, content: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

/// Write the per-run pair of output files and return their paths.
pub fn write_run_outputs(
    out_dir: &Path,
    label: &str,
    decisions: &[DecisionRow],
    hourly: &[HourlyRow],
) -> anyhow::Result<(PathBuf, PathBuf)> {
    let decisions_path = out_dir.join(format!("{label}_decisions.csv"));
    let hourly_path = out_dir.join(format!("{label}_hourly.csv"));
    write_file(&decisions_path, &decision_log_csv(decisions))?;
    write_file(&hourly_path, &hourly_report_csv(hourly))?;
    Ok((decisions_path, hourly_path))
}

pub fn summary_text(summary: &RunSummary, extra: &[(&str, String)]) -> String {
    let mut out = String::from("run:\n");
    let _ = writeln!(out, "  controller: {}", summary.controller);
    let _ = writeln!(out, "  hours: {}", summary.hours);
    let _ = writeln!(
        out,
        "  avg_alloc_cores: {}",
        fmt_f64(summary.avg_alloc_cores, 3)
    );
    let _ = writeln!(
        out,
        "  avg_used_cores: {}",
        fmt_f64(summary.avg_used_cores, 3)
    );
    let _ = writeln!(
        out,
        "  p99_ms: {}",
        summary
            .overall_p99_ms
            .map(|p| fmt_f64(p, 3))
            .unwrap_or_else(|| "no-data".into())
    );
    let _ = writeln!(out, "  slo_violated_hours: {}", summary.slo_violated_hours);
    for (key, value) in extra {
        let _ = writeln!(out, "  {key}: {value}");
    }
    out
}
