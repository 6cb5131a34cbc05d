//! Subcommand-level checks against the compiled binary.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_throttlesim"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("throttlesim-cli-{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CONFIG: &str = r#"
[sim]
seed = 3

[slo]
percentile = 0.99
latency_ms = 250.0

[durations]
warmup_s = 60
exploration_steps = 0
measurement_s = 120

[[service]]
id = "api"
quota_min_cores = 0.05
quota_max_cores = 4.0
[service.demand_ms]
get = 5.0

[[request]]
name = "get"
fraction = 1.0
stages = [["api"]]

[workload]
kind = "constant"
duration_s = 120
rps_min = 50.0
rps_avg = 50.0
rps_max = 50.0

[controller]
name = "k8s-cpu-fast"
[controller.k8s]
utilization_threshold = 0.5
"#;

#[test]
fn run_writes_reports_and_exits_zero() {
    let dir = temp_dir("run");
    let config_path = dir.join("cfg.toml");
    std::fs::write(&config_path, CONFIG).unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config_path)
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("controller: k8s-cpu-fast"), "{stdout}");
    let decisions = std::fs::read_to_string(dir.join("run_decisions.csv")).unwrap();
    assert!(decisions.starts_with(
        "minute,rps,bin,action_i,action_j,target_high,target_low,cost,slo_met,total_alloc_cores\n"
    ));
    let hourly = std::fs::read_to_string(dir.join("run_hourly.csv")).unwrap();
    assert!(hourly.starts_with("hour,avg_alloc_cores,avg_used_cores,p99_ms,slo_violated\n"));
    // 120 s of measurement is a partial hour, still reported.
    assert_eq!(hourly.lines().count(), 2);
}

#[test]
fn invalid_config_fails_with_a_field_path() {
    let dir = temp_dir("badcfg");
    let config_path = dir.join("cfg.toml");
    std::fs::write(
        &config_path,
        CONFIG.replace("percentile = 0.99", "percentile = 2.0"),
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("slo.percentile"), "{stderr}");
}

#[test]
fn seed_override_changes_outputs_and_reruns_reproduce() {
    let dir = temp_dir("seeds");
    let config_path = dir.join("cfg.toml");
    std::fs::write(&config_path, CONFIG).unwrap();
    let run = |seed: &str, out: &str| {
        let out_dir = dir.join(out);
        let status = bin()
            .args(["run", "--config"])
            .arg(&config_path)
            .args(["--seed", seed, "--out-dir"])
            .arg(&out_dir)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(out_dir.join("run_decisions.csv")).unwrap()
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("6", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn gen_trace_produces_a_loadable_file() {
    let dir = temp_dir("gentrace");
    let path = dir.join("trace.csv");
    let out = bin()
        .args([
            "gen-trace",
            "--kind",
            "bursty",
            "--duration-s",
            "300",
            "--rps-min",
            "50",
            "--rps-avg",
            "80",
            "--rps-max",
            "200",
            "--seed",
            "9",
            "--out",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let trace = workload::load_trace(&path).unwrap();
    assert_eq!(trace.points().len(), 300);
    assert!(trace.min_rps() >= 50.0 && trace.max_rps() <= 200.0);
}

#[test]
fn unknown_trace_kind_is_a_clean_error() {
    let out = bin()
        .args([
            "gen-trace",
            "--kind",
            "spiky",
            "--duration-s",
            "10",
            "--rps-min",
            "1",
            "--rps-avg",
            "2",
            "--rps-max",
            "3",
            "--out",
            "/tmp/never.csv",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown trace kind"));
}
