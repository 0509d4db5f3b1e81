//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p gos-core --test acceptance -- --nocapture` to see
//! the report.

#![allow(clippy::needless_range_loop)]

mod common;

use std::time::{Duration, Instant};

use gos_core::analytics::{
    gos_beats_e2e, gos_retx_any_diameter, max_diameter_bound, scalability_curve, total_e2e_segment, total_gos,
    AnalyticsParams,
};
use gos_core::codec::{decode, encode};
use gos_core::forwarding::{step, GosEvent, GosState};
use gos_core::simulation::{
    diameter_spacing_scenario, run_pair, run_scenario, MetricsSeries, ScenarioSpec,
};
use gos_core::topology::line_topology;
use num_rational::Rational64;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

struct Report {
    lines: Vec<String>,
    failed: Vec<usize>,
}

impl Report {
    fn record(&mut self, id: usize, name: &str, elapsed: Duration, limit: Duration, result: Result<String, String>) {
        let in_time = elapsed <= limit;
        let (ok, detail) = match result {
            Ok(d) if in_time => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} budget")),
            Err(d) => (false, d),
        };
        let line = format!(
            "criterion {id:>2} {:<4} {name} ({:.2}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        println!("{line}");
        self.lines.push(line);
        if !ok {
            self.failed.push(id);
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const D_GOS_GRID: [(i64, i64); 5] = [(1, 2), (1, 1), (3, 2), (2, 1), (5, 2)];

/// Random paths: a prefix of `i` links before the segment of `m` links and a
/// short tail after it.
fn grid_paths(rng: &mut ChaCha8Rng, per_len: usize) -> Vec<(Vec<u64>, usize, usize)> {
    let mut out = Vec::new();
    for m in 1..=64 {
        for _ in 0..per_len {
            let i = rng.gen_range(0..4);
            let tail = rng.gen_range(0..3);
            let delays: Vec<u64> = (0..i + m + tail).map(|_| rng.gen_range(1..=1000)).collect();
            out.push((delays, i, i + m));
        }
    }
    out
}

// Delays are scaled by the d_gos denominator so every oracle value is an
// integer numerator over `den`.
fn oracle_e2e(delays: &[u64], i: usize, n: usize) -> (i64, i64, i64) {
    let mut ddt = 0i64;
    for k in i..n {
        ddt += delays[k] as i64;
    }
    let mut retx = 0i64;
    for k in i..n {
        retx += 2 * delays[k] as i64;
    }
    (ddt, retx, ddt + retx)
}

fn oracle_gos(delays: &[u64], i: usize, n: usize, d: usize, num: i64) -> (i64, i64) {
    let mut ddt = 0i64;
    for k in i..n {
        ddt += num * delays[k] as i64;
    }
    let mut retx = 0i64;
    let mut k = n;
    while k > n - d {
        k -= 1;
        retx += 2 * num * delays[k] as i64;
    }
    (ddt, retx)
}

fn criterion_1(paths: &[(Vec<u64>, usize, usize)]) -> Result<String, String> {
    let mut cases = 0u64;
    for (delays, i, n) in paths {
        let (i, n) = (*i, *n);
        let e2e = total_e2e_segment(delays, i, n).map_err(|e| e.to_string())?;
        let (ed, er, et) = oracle_e2e(delays, i, n);
        check(
            e2e.ddt == ed.into() && e2e.retx == er.into() && e2e.total == et.into(),
            || format!("e2e mismatch on {delays:?} [{i},{n})"),
        )?;
        for &(num, den) in &D_GOS_GRID {
            let p = AnalyticsParams {
                d_gos: Rational64::new(num, den),
                i,
                n,
            };
            for d in 1..n - i {
                let r = total_gos(delays, d, &p).map_err(|e| e.to_string())?;
                let (od, or) = oracle_gos(delays, i, n, d, num);
                check(
                    r.ddt == Rational64::new(od, den)
                        && r.retx == Rational64::new(or, den)
                        && r.total == Rational64::new(od + or, den),
                    || format!("gos mismatch d={d} d_gos={num}/{den} on {delays:?} [{i},{n})"),
                )?;
                cases += 1;
            }
        }
    }
    Ok(format!("{} paths, {cases} (path, d, d_gos) cases exact", paths.len()))
}

fn criterion_2() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let links = rng.gen_range(1..=64);
        let delays: Vec<u64> = (0..links).map(|_| rng.gen_range(1..=1000)).collect();
        let i = rng.gen_range(0..links);
        let n = rng.gen_range(i + 1..=links);
        let &(num, den) = &D_GOS_GRID[rng.gen_range(0..D_GOS_GRID.len())];
        let d_gos = Rational64::new(num, den);
        let p = AnalyticsParams { d_gos, i, n };
        let retx = gos_retx_any_diameter(&delays, n - i, &p).map_err(|e| e.to_string())?;
        let e2e = total_e2e_segment(&delays, i, n).map_err(|e| e.to_string())?;
        check(retx == d_gos * e2e.retx, || {
            format!("retx {retx} != d_gos * {} on {delays:?} [{i},{n})", e2e.retx)
        })?;
        check(d_gos * e2e.ddt + retx == d_gos * e2e.total, || "total mismatch".into())?;
    }
    Ok("1000 paths, d = n - i equals scaled end-to-end".into())
}

fn criterion_3(paths: &[(Vec<u64>, usize, usize)]) -> Result<String, String> {
    let mut cases = 0u64;
    let mut faster = 0u64;
    for (delays, i, n) in paths {
        for &(num, den) in &D_GOS_GRID {
            let p = AnalyticsParams {
                d_gos: Rational64::new(num, den),
                i: *i,
                n: *n,
            };
            for d in 1..n - i {
                let v = gos_beats_e2e(delays, d, &p).map_err(|e| e.to_string())?;
                let direct = total_gos(delays, d, &p).unwrap().total < total_e2e_segment(delays, *i, *n).unwrap().total;
                check(v.half_plane == Some(direct) && v.gos_faster == direct, || {
                    format!("verdict {v:?} vs direct {direct} at d={d} d_gos={num}/{den}")
                })?;
                cases += 1;
                faster += u64::from(direct);
            }
        }
    }

    let one = Rational64::from_integer(1);
    let curve = scalability_curve(2..=400, 0, one).map_err(|e| e.to_string())?;
    check(curve.len() == 399, || format!("curve has {} points", curve.len()))?;
    for b in &curve {
        check(b.max_d == b.n - 1, || format!("d_gos=1: max_d({}) = {}", b.n, b.max_d))?;
    }

    // Any d_gos in [753/751, 750/748) puts the end of the linear rise at 251.
    let crossover = Rational64::new(100_267, 100_000);
    let at = |n| max_diameter_bound(n, 0, crossover).map(|b| b.max_d).map_err(|e| e.to_string());
    for n in 2..=251 {
        check(at(n)? == n - 1, || format!("crossover curve leaves the line at n={n}"))?;
    }
    check(at(251)? == 250 && at(252)? == 250, || "no (251, 250) point".into())?;
    Ok(format!(
        "{cases} verdicts agree ({faster} favour GoS); line over [2,400]; (251, 250) at d_gos=1.00267"
    ))
}

fn criterion_4() -> Result<String, String> {
    let mut runner = TestRunner::new(Config {
        cases: 100_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&common::arb_message(), |m| {
            let bytes = encode(&m);
            proptest::prop_assert_eq!(bytes.len() % 4, 0);
            proptest::prop_assert_eq!(decode(&bytes), Ok(m));
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;
    let golden = common::golden_vectors();
    for (file, msg) in &golden {
        let expected = common::testdata(file);
        check(encode(msg) == expected, || format!("{file}: encoding differs"))?;
        check(decode(&expected).as_ref() == Ok(msg), || format!("{file}: decoding differs"))?;
    }
    Ok(format!("100000 messages round-trip, {} golden vectors match", golden.len()))
}

fn criterion_5() -> Result<String, String> {
    use GosEvent::*;
    use GosState::*;
    let diagram = [
        (DataForwarding, LossDetected, LocalRecoveryRequest),
        (LocalRecoveryRequest, GosAckReceived, DataForwarding),
        (LocalRecoveryRequest, NoUpstream, DataForwarding),
        (DataForwarding, GosReqReceived, BufferAccess),
        (BufferAccess, BufferHit, LocalRetransmission),
        (BufferAccess, BufferMiss, LocalRecoveryRequest),
        (LocalRetransmission, LrpSent, DataForwarding),
    ];
    let mut accepted = 0;
    let mut rejected = 0;
    for s in GosState::ALL {
        for e in GosEvent::ALL {
            let expected = diagram.iter().find(|(a, b, _)| *a == s && *b == e).map(|t| t.2);
            match (step(s, e), expected) {
                (Ok(got), Some(want)) if got == want => accepted += 1,
                (Err(_), None) => rejected += 1,
                (got, want) => return Err(format!("({s:?}, {e:?}) gave {got:?}, expected {want:?}")),
            }
        }
    }
    Ok(format!("{accepted} transitions accepted, {rejected} pairs rejected"))
}

fn line_scenario(len: usize, delay_us: u64, duration_s: u64, drop: &str) -> ScenarioSpec {
    let text = format!(
        r#"
duration_s = {duration_s}
sample_interval_s = 1

[topology]
line = {{ len = {len}, delay_us = {delay_us}, capacity_bps = 1000000000 }}

[gos_nodes]
placement = "all"
buffer_bytes = 4000000

[[flows]]
fec = 1
src = "X1"
dst = "X{len}"
rate_bps = 4e6
level = 2
stop_s = {stop}

[drop]
{drop}
"#,
        stop = duration_s - 1
    );
    ScenarioSpec::from_toml(&text, None).expect("acceptance scenario")
}

struct Conservation {
    runs: usize,
    violations: u64,
    ticks: u64,
}

impl Conservation {
    fn add(&mut self, m: &MetricsSeries) {
        self.runs += 1;
        self.violations += m.conservation.violations + m.buffer_violations;
        self.ticks += m.conservation.ticks_checked;
    }
}

fn criterion_6(cons: &mut Conservation) -> Result<String, String> {
    let spec = line_scenario(5, 1, 2, "model = \"inject\"\ndrops = [{ node = \"X4\", fec = 1, pid = 10 }]");
    let m = run_scenario(&spec, 0).map_err(|e| e.to_string())?;
    cons.add(&m);
    let p = AnalyticsParams {
        d_gos: Rational64::from_integer(1),
        i: 0,
        n: 3,
    };
    let predicted = total_gos(&[1, 1, 1, 1], 1, &p).unwrap().retx;
    check(m.diameters.len() == 1 && m.diameters.get(&1) == Some(&1), || {
        format!("diameters {:?}", m.diameters)
    })?;
    check(m.recovery_latencies_us.len() == 1, || format!("latencies {:?}", m.recovery_latencies_us))?;
    let latency = Rational64::from_integer(m.recovery_latencies_us[0] as i64);
    let quantum = Rational64::from_integer(1);
    check(latency >= predicted - quantum && latency <= predicted + quantum, || {
        format!("latency {latency} vs predicted {predicted}")
    })?;
    check(m.head_end_retransmissions() == 0, || "head-end retransmitted".into())?;
    Ok(format!("d=1, latency {latency} us = predicted {predicted} us, 0 head-end retransmissions"))
}

fn criterion_7(cons: &mut Conservation) -> Result<String, String> {
    let spec = line_scenario(11, 1000, 60, "model = \"bernoulli\"\nrate = 0.01\nnodes = \"lsr\"");
    let runs: Vec<MetricsSeries> = SEEDS
        .par_iter()
        .map(|&s| run_scenario(&spec, s))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut d1 = 0;
    let mut total = 0;
    for m in &runs {
        cons.add(m);
        d1 += m.diameters.get(&1).copied().unwrap_or(0);
        total += m.recovered();
    }
    let share = d1 as f64 / total.max(1) as f64;
    check(total > 0 && share >= 0.99, || format!("{d1}/{total} recoveries at d=1 ({:.4})", share))?;
    Ok(format!("{d1}/{total} recoveries at d=1 ({:.2}%)", 100.0 * share))
}

fn criterion_8(cons: &mut Conservation) -> Result<String, String> {
    let t = line_topology(9, 1000, 1_000_000_000);
    let route = t.route_from_indices((0..9).collect()).unwrap();
    let mut variants: Vec<(String, ScenarioSpec)> = [1, 2, 4, 8]
        .iter()
        .map(|&k| (format!("k={k}"), diameter_spacing_scenario(&t, &route, k).unwrap()))
        .collect();
    let mut e2e = diameter_spacing_scenario(&t, &route, 1).unwrap();
    e2e.gos_enabled = false;
    variants.push(("E-E".into(), e2e));
    let mid = variants[0].1.duration_us / 2;

    let jobs: Vec<(usize, u64)> = (0..variants.len()).flat_map(|v| SEEDS.iter().map(move |&s| (v, s))).collect();
    let runs: Vec<MetricsSeries> = jobs
        .par_iter()
        .map(|&(v, s)| run_scenario(&variants[v].1, s))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for m in &runs {
        cons.add(m);
    }
    let frac = |v: usize| -> Vec<f64> {
        runs[v * SEEDS.len()..(v + 1) * SEEDS.len()]
            .iter()
            .map(|m| m.delivered_fraction_at(mid))
            .collect()
    };
    let means: Vec<f64> = (0..variants.len())
        .map(|v| frac(v).iter().sum::<f64>() / SEEDS.len() as f64)
        .collect();
    let summary = variants
        .iter()
        .zip(&means)
        .map(|((name, _), m)| format!("{name}:{m:.5}"))
        .collect::<Vec<_>>()
        .join(" > ");
    for v in 0..variants.len() - 1 {
        let (a, b) = (frac(v), frac(v + 1));
        let agree = a.iter().zip(&b).filter(|(x, y)| x > y).count();
        check(means[v] > means[v + 1] && agree >= 9, || {
            format!(
                "{summary}; {} vs {}: {agree}/10 seeds agree",
                variants[v].0,
                variants[v + 1].0
            )
        })?;
    }
    Ok(summary)
}

fn att_scenario() -> ScenarioSpec {
    let text = r#"
duration_s = 60
sample_interval_s = 1

[topology]
generate = "att_like"
seed = 1

[gos_nodes]
placement = "top_degree"
k = 8

[flow_generator]
count = 20
seed = 1
min_gos_nodes = 2
level = 1

[drop]
model = "bernoulli"
rate_min = 0.005
rate_max = 0.04
"#;
    ScenarioSpec::from_toml(text, None).expect("acceptance scenario")
}

fn criterion_9(cons: &mut Conservation) -> Result<String, String> {
    let spec = att_scenario();
    let pairs: Vec<(MetricsSeries, MetricsSeries)> = SEEDS
        .par_iter()
        .map(|&s| run_pair(&spec, s))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut thr_pos = 0;
    let mut loss_pos = 0;
    let (mut gt, mut et, mut gl, mut el) = (0.0, 0.0, 0.0, 0.0);
    for (g, e) in &pairs {
        cons.add(g);
        cons.add(e);
        gt += g.mean_throughput_bps();
        et += e.mean_throughput_bps();
        gl += g.head_end_loss();
        el += e.head_end_loss();
        thr_pos += usize::from(g.mean_throughput_bps() > e.mean_throughput_bps());
        loss_pos += usize::from(g.head_end_loss() < e.head_end_loss());
    }
    let n = pairs.len() as f64;
    let detail = format!(
        "throughput GoS {:.0} vs E-E {:.0} bps ({thr_pos}/10 seeds), loss GoS {:.5} vs E-E {:.5} ({loss_pos}/10 seeds)",
        gt / n,
        et / n,
        gl / n,
        el / n
    );
    check(gt > et && gl < el && thr_pos >= 9 && loss_pos >= 9, || detail.clone())?;
    Ok(detail)
}

#[test]
fn acceptance_criteria() {
    let mut report = Report {
        lines: Vec::new(),
        failed: Vec::new(),
    };
    let secs = Duration::from_secs;

    let paths = grid_paths(&mut ChaCha8Rng::seed_from_u64(1), 8);
    let (r, t) = timed(|| criterion_1(&paths));
    report.record(1, "delay totals match brute-force sums", t, secs(10), r);
    let (r, t) = timed(criterion_2);
    report.record(2, "full-diameter identity", t, secs(1), r);
    let (r, t) = timed(|| criterion_3(&paths));
    report.record(3, "half-plane agreement and scalability curve", t, secs(10), r);
    let (r, t) = timed(criterion_4);
    report.record(4, "codec round trip and golden vectors", t, secs(30), r);
    let (r, t) = timed(criterion_5);
    report.record(5, "state machine conformance", t, secs(1), r);

    let mut cons = Conservation {
        runs: 0,
        violations: 0,
        ticks: 0,
    };
    let (r, t) = timed(|| criterion_6(&mut cons));
    report.record(6, "deterministic single loss", t, secs(1), r);
    let (r, t) = timed(|| criterion_7(&mut cons));
    report.record(7, "diameter-one share on an all-GoS path", t, secs(60), r);
    let (r, t) = timed(|| criterion_8(&mut cons));
    report.record(8, "delivered fraction ordered by GoS spacing", t, secs(300), r);
    let (r, t) = timed(|| criterion_9(&mut cons));
    report.record(9, "GoS beats E-E on the AT&T-like network", t, secs(600), r);
    let r = check(cons.violations == 0, || format!("{} violations", cons.violations))
        .map(|()| format!("{} runs, {} ticks, 0 violations", cons.runs, cons.ticks));
    report.record(10, "conservation at every sample tick", Duration::ZERO, Duration::MAX, r);

    assert!(report.failed.is_empty(), "failed criteria {:?}\n{}", report.failed, report.lines.join("\n"));
}
