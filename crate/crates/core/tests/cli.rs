use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awg-entangle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> Output {
    let out = dir.join(name);
    let mut args = vec![
        "--preset",
        "desk",
        "--set",
        "run.duration_s=60",
        "simulate",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn design_reports_spacing_and_ports() {
    let o = run(&["design", "--preset", "paper", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ghz = v["channel_spacing_ghz"].as_f64().unwrap();
    assert!((ghz - 200.0).abs() < 1e-6, "{ghz}");
    assert_eq!(v["ports"].as_array().unwrap().len(), 2);

    let text = run(&["design"]);
    assert_eq!(text.status.code(), Some(0));
    assert!(stdout(&text).contains("200.00 GHz"));
}

#[test]
fn design_rejects_offset_below_source_count() {
    let o = run(&["design", "--set", "ports.n_sources=3", "--set", "ports.channel_offset=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn three_sources_get_distinct_ports() {
    let o = run(&[
        "design",
        "--json",
        "--set",
        "ports.n_sources=3",
        "--set",
        "ports.channel_offset=4",
        "--set",
        "pump.phases_deg=[0.0, 0.0, 0.0]",
        "--set",
        "pump.amplitudes=[1.0, 1.0, 1.0]",
        "--set",
        "awg.port_offset_errors_ghz=[]",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ports = v["ports"].as_array().unwrap();
    assert_eq!(ports.len(), 3);
    let mut outputs: Vec<i64> = ports
        .iter()
        .flat_map(|p| [p["signal"].as_i64().unwrap(), p["idler"].as_i64().unwrap()])
        .collect();
    outputs.sort_unstable();
    outputs.dedup();
    assert_eq!(outputs.len(), 6);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let o = simulate(dir.path(), name, &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&a).starts_with("# seed=1"));

    let other = simulate(dir.path(), "c.csv", &["--set", "run.seed=2"]);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(a, fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn zero_pair_probability_leaves_accidentals() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), "dark.csv", &["--set", "pump.pair_probability=0.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("dark.csv")).unwrap();
    let (mut coinc, mut acc) = (0.0, 0.0);
    for line in text.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        coinc += cols[7].parse::<f64>().unwrap();
        acc += cols[8].parse::<f64>().unwrap();
    }
    // dark-count accidentals are ~4e-12 per gate: essentially nothing
    assert!(coinc <= 3.0 + 3.0 * acc.sqrt(), "{coinc} vs {acc}");
}

#[test]
fn analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.csv");
    let long = run(&[
        "--preset",
        "desk",
        "--set",
        "run.duration_s=300",
        "simulate",
        "--out",
        records.to_str().unwrap(),
    ]);
    assert_eq!(long.status.code(), Some(0), "{}", stderr(&long));
    let report = dir.path().join("report.json");
    let map = dir.path().join("map.csv");
    let o = run(&[
        "--preset",
        "desk",
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--map",
        map.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["seed"].as_u64(), Some(1));
    let vis = v["fit"]["v"].as_f64().unwrap();
    assert!(vis > 0.5 && vis < 1.0, "{vis}");
    assert!(v["chsh"]["s"].as_f64().unwrap() > 2.0);
    let map_text = fs::read_to_string(&map).unwrap();
    assert!(map_text.lines().nth(1).unwrap().starts_with("phi_a_deg,phi_b_deg"));
}

#[test]
fn short_run_reports_fit_without_chsh() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), "short.csv", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let records = dir.path().join("short.csv");
    let o = run(&["--preset", "desk", "analyze", "--records", records.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["fit"]["v"].as_f64().is_some());
    assert!(v["chsh"].is_null());
    assert!(v["chsh_error"].as_str().unwrap().contains("conjugate"));
    assert_eq!(v["bell_violation"].as_bool(), Some(false));
}

#[test]
fn analyze_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    fs::write(
        &path,
        "t_s,phi_a_deg,phi_b_deg,bin_a_deg,bin_b_deg,singles1,singles2,coinc,acc_est,discarded\n",
    )
    .unwrap();
    let o = run(&["analyze", "--records", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn analyze_reports_malformed_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "t_s,phi_a_deg,phi_b_deg,bin_a_deg,bin_b_deg,singles1,singles2,coinc,acc_est,discarded\n\
         0.2,10,20,3,3,100,100,4,0.1,0\n\
         0.4,10,twenty,3,3,100,100,4,0.1,0\n",
    )
    .unwrap();
    let o = run(&["analyze", "--records", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[awg]\npitch_um = 25.0\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "design"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pitch_um"), "{}", stderr(&o));
}

#[test]
fn missing_files_are_io_errors() {
    let o = run(&["--config", "/nonexistent/run.toml", "design"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["analyze", "--records", "/nonexistent/records.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn full_day_gives_432000_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("day.csv");
    let o = run(&["--preset", "paper", "simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("432000 records"), "{}", stdout(&o));
    let lines = fs::read_to_string(&out).unwrap().lines().count();
    assert_eq!(lines, 432_000 + 2);
}
