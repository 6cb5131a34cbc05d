use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use throttlesim::config::ExperimentConfig;
use throttlesim::report::{self, fmt_f64};
use throttlesim::scenarios;

#[derive(Parser)]
#[command(
    name = "throttlesim",
    about = "Simulate CPU-quota-governed service clusters under different autoscalers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment end to end and write its reports.
    Run(CommonArgs),
    /// Static-quota sweeps measuring which proxy metric tracks latency.
    Correlate(CommonArgs),
    /// Sweep the k8s utilization threshold and pick the cheapest SLO-safe one.
    Sweep(CommonArgs),
    /// Measure tolerance to per-minute RPS fluctuation under fixed targets.
    Fluctuate(CommonArgs),
    /// Generate a workload trace file.
    GenTrace {
        /// diurnal, constant, noisy, or bursty.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        duration_s: u64,
        #[arg(long)]
        rps_min: f64,
        #[arg(long)]
        rps_avg: f64,
        #[arg(long)]
        rps_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (`t_seconds,rps` per line).
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &CommonArgs) -> anyhow::Result<(ExperimentConfig, throttlesim::config::RunPlan)> {
    let config = ExperimentConfig::from_path(&common.config)?;
    let plan = config.plan(common.seed, common.out_dir.clone())?;
    Ok((config, plan))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(common) => {
            let (_, plan) = load(&common)?;
            let artifacts = scenarios::scenario_run(&plan)?;
            let (decisions_path, hourly_path) = report::write_run_outputs(
                &plan.out_dir,
                "run",
                &artifacts.decisions,
                &artifacts.hourly,
            )?;
            print!(
                "{}",
                report::summary_text(
                    &artifacts.summary,
                    &[
                        ("decision_log", decisions_path.display().to_string()),
                        ("hourly_report", hourly_path.display().to_string()),
                    ],
                )
            );
        }
        Command::Correlate(common) => {
            let (config, plan) = load(&common)?;
            let rows = scenarios::scenario_correlate(&config, &plan)?;
            let mut summary =
                String::from("service,r_latency_throttles,r_latency_utilization,signal\n");
            let mut points = String::from("service,quota_cores,p99_ms,throttles,utilization\n");
            for row in &rows {
                let fmt_r = |r: Option<f64>| {
                    r.map(|v| fmt_f64(v, 4))
                        .unwrap_or_else(|| "undefined".into())
                };
                summary.push_str(&format!(
                    "{},{},{},{}\n",
                    row.service,
                    fmt_r(row.r_latency_throttles),
                    fmt_r(row.r_latency_utilization),
                    row.signal
                ));
                for p in &row.points {
                    points.push_str(&format!(
                        "{},{},{},{},{}\n",
                        row.service,
                        fmt_f64(p.quota_cores, 4),
                        fmt_f64(p.p99_ms, 3),
                        p.throttles,
                        fmt_f64(p.utilization, 4),
                    ));
                }
            }
            let summary_path = plan.out_dir.join("correlate.csv");
            let points_path = plan.out_dir.join("correlate_points.csv");
            report::write_file(&summary_path, &summary)?;
            report::write_file(&points_path, &points)?;
            println!("correlate:");
            for row in &rows {
                println!(
                    "  {}: r_throttles={} r_utilization={} ({})",
                    row.service,
                    row.r_latency_throttles
                        .map(|v| fmt_f64(v, 4))
                        .unwrap_or_else(|| "undefined".into()),
                    row.r_latency_utilization
                        .map(|v| fmt_f64(v, 4))
                        .unwrap_or_else(|| "undefined".into()),
                    row.signal
                );
            }
            println!("  table: {}", summary_path.display());
            println!("  points: {}", points_path.display());
        }
        Command::Sweep(common) => {
            let (config, plan) = load(&common)?;
            let outcome = scenarios::scenario_sweep(&config, &plan)?;
            let mut csv = String::from("threshold,avg_alloc_cores,slo_violated_hours,feasible\n");
            for row in &outcome.rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_f64(row.threshold, 2),
                    fmt_f64(row.avg_alloc_cores, 3),
                    row.slo_violated_hours,
                    u8::from(row.feasible),
                ));
            }
            let path = plan.out_dir.join("sweep.csv");
            report::write_file(&path, &csv)?;
            println!("sweep:");
            for row in &outcome.rows {
                println!(
                    "  theta {}: avg_alloc {} ({})",
                    fmt_f64(row.threshold, 2),
                    fmt_f64(row.avg_alloc_cores, 3),
                    if row.feasible {
                        "feasible"
                    } else {
                        "violates slo"
                    }
                );
            }
            match outcome.best {
                Some((theta, alloc)) => println!(
                    "  best: theta {} avg_alloc {}",
                    fmt_f64(theta, 2),
                    fmt_f64(alloc, 3)
                ),
                None => println!("  best: none feasible"),
            }
            println!("  table: {}", path.display());
        }
        Command::Fluctuate(common) => {
            let (config, plan) = load(&common)?;
            let rows = scenarios::scenario_fluctuate(&config, &plan)?;
            let mut csv = String::from("half_range,windows,min_ms,q1_ms,median_ms,q3_ms,max_ms\n");
            for row in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    fmt_f64(row.half_range, 1),
                    row.windows,
                    fmt_f64(row.min_ms, 3),
                    fmt_f64(row.q1_ms, 3),
                    fmt_f64(row.median_ms, 3),
                    fmt_f64(row.q3_ms, 3),
                    fmt_f64(row.max_ms, 3),
                ));
            }
            let path = plan.out_dir.join("fluctuate.csv");
            report::write_file(&path, &csv)?;
            println!("fluctuate:");
            for row in &rows {
                println!(
                    "  half_range {}: median p99 {} ms (max {} ms)",
                    fmt_f64(row.half_range, 1),
                    fmt_f64(row.median_ms, 3),
                    fmt_f64(row.max_ms, 3),
                );
            }
            println!("  table: {}", path.display());
        }
        Command::GenTrace {
            kind,
            duration_s,
            rps_min,
            rps_avg,
            rps_max,
            seed,
            out,
        } => {
            let kind: workload::TraceKind = kind.parse().map_err(|e: String| anyhow::anyhow!(e))?;
            let trace = workload::gen_trace(kind, duration_s, rps_min, rps_avg, rps_max, seed)?;
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            workload::write_trace(&trace, &out)
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "trace: {} points, rps min/avg/max = {}/{}/{} -> {}",
                trace.points().len(),
                fmt_f64(trace.min_rps(), 1),
                fmt_f64(trace.avg_rps(), 1),
                fmt_f64(trace.max_rps(), 1),
                out.display()
            );
        }
    }
    Ok(())
}
