use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SCENARIO: &str = r#"
duration_s = 5
sample_interval_s = 1

[topology]
line = { len = 6, delay_us = 800, capacity_bps = 1000000000 }

[gos_nodes]
placement = "spacing"
k = 2

[[flows]]
fec = 1
src = "X1"
dst = "X6"
rate_bps = 2e6
level = 2
stop_s = 4

[drop]
model = "bernoulli"
rate = 0.02
"#;

fn gos_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gos-sim"))
        .args(args)
        .env_remove("GOS_SIM_TRACE")
        .output()
        .unwrap()
}

fn scenario(dir: &TempDir, body: &str) -> String {
    let p = dir.path().join("scenario.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_is_clean(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.chars().next().unwrap().is_ascii_alphabetic(), "{header}");
    let cols = header.split(',').count();
    for l in lines {
        assert_eq!(l.split(',').count(), cols, "{l}");
        for v in l.split(',') {
            let x: f64 = v.parse().unwrap();
            assert!(x.is_finite());
        }
    }
}

#[test]
fn run_writes_metrics() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, SCENARIO);
    let out = dir.path().join("out");
    let o = gos_sim(&["run", "--scenario", &sc, "--seed", "7", "--out", out.to_str().unwrap(), "--plot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["throughput.csv", "delivered.csv", "loss.csv", "diameters.csv"] {
        csv_is_clean(&out.join(f));
    }
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("conservation ticks=5 violations=0"), "{summary}");
    assert!(out.join("plot.gp").exists());
    assert!(!out.join("trace.txt").exists());
}

#[test]
fn same_seed_same_bytes() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, SCENARIO);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = gos_sim(&["run", "--scenario", &sc, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    for f in ["throughput.csv", "delivered.csv", "loss.csv", "diameters.csv", "summary.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn trace_is_opt_in() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, SCENARIO);
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_gos-sim"))
        .args(["run", "--scenario", &sc, "--out", out.to_str().unwrap()])
        .env("GOS_SIM_TRACE", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let trace = fs::read_to_string(out.join("trace.txt")).unwrap();
    assert!(trace.lines().all(|l| l.starts_with("t=")));
    assert!(trace.contains(" ev=drop "));
}

#[test]
fn missing_scenario_exits_2() {
    let o = gos_sim(&["run", "--scenario", "/no/such/scenario.toml", "--out", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/scenario.toml"));
}

#[test]
fn bad_scenario_exits_2_with_location() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "duration_s = 5\n[topology\nline = 3\n");
    let o = gos_sim(&["run", "--scenario", &sc, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let sc = scenario(&dir, &SCENARIO.replace("rate_bps = 2e6", "rate_bps = 9e6"));
    let o = gos_sim(&["run", "--scenario", &sc, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flows[0].rate_bps"), "{}", stderr(&o));
}

#[test]
fn compare_reports_every_seed_in_order() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, SCENARIO);
    let out = dir.path().join("cmp");
    let o = gos_sim(&["compare", "--scenario", &sc, "--seeds", "3", "--first-seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    csv_is_clean(&out.join("comparison.csv"));
    let csv = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let seeds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["4", "5", "6"]);
    assert!(fs::read_to_string(out.join("comparison.txt")).unwrap().contains("trend_gap_pct"));
}

fn curve_rows(text: &str) -> Vec<(usize, usize)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn curve_at_unit_overhead_is_the_diagonal() {
    let o = gos_sim(&["curve", "--d-gos", "1", "--i", "0", "--n", "2..100"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("n,bound,max_d\n"));
    let rows = curve_rows(&out);
    assert_eq!(rows.len(), 99);
    assert!(rows.iter().all(|&(n, d)| d == n - 1));
}

#[test]
fn curve_crossover_point() {
    let o = gos_sim(&["curve", "--d-gos", "1.00267", "--n", "251"]);
    assert!(o.status.success());
    assert_eq!(curve_rows(&stdout(&o)), [(251, 250)]);
    let o = gos_sim(&["curve", "--d-gos", "1.00267", "--n-min", "245", "--n-max", "260"]);
    let rows = curve_rows(&stdout(&o));
    assert_eq!(rows.iter().find(|r| r.0 == 252), Some(&(252, 250)));
}

#[test]
fn curve_rejects_out_of_domain_overhead() {
    for d in ["3.5", "0", "-1", "x"] {
        let o = gos_sim(&["curve", "--d-gos", d, "--n", "10"]);
        assert_eq!(o.status.code(), Some(2), "{d}");
    }
}

#[test]
fn bound_prints_both_values() {
    let o = gos_sim(&["bound", "--n", "101", "--d-gos", "1/2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("bound 251\n"), "{out}");
    assert!(out.contains("max_d 100\n"), "{out}");
}

#[test]
fn codec_check_passes_and_counts() {
    for count in ["0", "10000"] {
        let o = gos_sim(&["codec-check", "--count", count, "--seed", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/testdata/hello_req_gosreq.hex");
    let o = gos_sim(&["codec-check", "--count", "0", "--vector", golden]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn corrupted_vector_fails_with_dump() {
    let golden = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/testdata/path_gos_fec35.hex")).unwrap();
    // stretch the GoS Path object length from 12 to 16
    let bad = golden.replace("00 0c f8 01", "00 10 f8 01");
    assert_ne!(bad, golden);
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.hex");
    fs::write(&p, bad).unwrap();
    let o = gos_sim(&["codec-check", "--count", "0", "--vector", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("10 01 00 00 ff 00 00 24"), "{}", stderr(&o));
}

#[test]
fn generated_topology_parses() {
    let o = gos_sim(&["gen-topology", "--seed", "3", "--gos-k", "8"]);
    assert!(o.status.success());
    let t = gos_core::topology::parse_topology(&stdout(&o)).unwrap();
    assert_eq!(t.node_count(), 150);
    assert_eq!(t.nodes().iter().filter(|n| n.gos_capable).count(), 8);
}
