//! `gos-sim`: scenario runs, paired comparisons, diameter curves and codec
//! self-checks.

use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use gos_core::analytics::{self, AnalyticsError, CurveCsv};
use gos_core::codec::{
    self, ControlMessage, GosAckObject, GosLevel, GosPathObject, GosReqObject, GosResvObject,
};
use gos_core::simulation::{self, ScenarioSpec, SimError};
use gos_core::topology::{generate_att_like, place_gos_nodes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const RUN_HELP: &str = "\
Writes to --out:
  throughput.csv  t_s,total,fec_<n>...  delivered bits per second in each sample interval
  delivered.csv   t_s,total,fec_<n>...  in-order delivered packets / send slots so far
  loss.csv        t_s,total,fec_<n>...  head-end retransmissions / first transmissions so far
  diameters.csv   diameter,count        recovered losses by GoS-plane diameter
  summary.txt     totals, recovery histogram, conservation check
  plot.gp         gnuplot script for the CSVs (with --plot)
  trace.txt       event trace (when GOS_SIM_TRACE=1)";

const COMPARE_HELP: &str = "\
Writes comparison.csv (seed,gos_throughput_bps,e2e_throughput_bps,throughput_delta_bps,
gos_loss,e2e_loss,loss_delta) and comparison.txt to --out, or prints them when --out is
absent. Rows are in seed order.";

#[derive(Debug, Parser)]
#[command(name = "gos-sim", version, about = "GoS local recovery over MPLS: simulator and analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its metrics.
    #[command(after_help = RUN_HELP)]
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write a gnuplot script.
        #[arg(long)]
        plot: bool,
    },
    /// Run a scenario with GoS on and off over several seeds.
    #[command(after_help = COMPARE_HELP)]
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Number of seeds; seeds are first-seed, first-seed + 1, ...
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum feasible diameter over a range of LSP sizes (CSV n,bound,max_d).
    Curve {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 400)]
        n_max: usize,
        /// A single size `N` or a range `A..B`; overrides --n-min/--n-max.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, default_value_t = 0)]
        i: usize,
        /// Decimal or fraction `a/b`, inside (0, 3).
        #[arg(long)]
        d_gos: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diameter bound for one LSP size.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        i: usize,
        #[arg(long)]
        d_gos: String,
    },
    /// Round-trip random control messages and check hex vectors.
    CodecCheck {
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hex dump files that must decode and re-encode byte for byte.
        #[arg(long = "vector")]
        vectors: Vec<PathBuf>,
    },
    /// Write a generated AT&T-like topology.
    GenTopology {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Mark the k best-connected nodes GoS-capable.
        #[arg(long, default_value_t = 0)]
        gos_k: usize,
        #[arg(long, default_value_t = 1_000_000)]
        buffer_bytes: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with the exit status it maps to.
enum Failure {
    /// Bad input: configuration, arguments or files.
    Invalid(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Scenario(_) | SimError::Route { .. } => invalid(e),
        other => Failure::Internal(other.into()),
    }
}

fn analytics_failure(e: AnalyticsError) -> Failure {
    invalid(e)
}

fn load(path: &Path) -> Result<ScenarioSpec, Failure> {
    let spec = ScenarioSpec::load(path).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))?;
    spec.validate().map_err(|e| invalid(anyhow!("{}: {e}", path.display())))?;
    Ok(spec)
}

fn write(dir: &Path, name: &str, body: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn tracing_enabled() -> bool {
    std::env::var("GOS_SIM_TRACE").is_ok_and(|v| v == "1")
}

const PLOT: &str = r#"set datafile separator ","
set key autotitle columnhead
set xlabel "time (s)"
set terminal pngcairo size 900,540
set output "throughput.png"
set ylabel "throughput (bps)"
plot for [c=2:*] "throughput.csv" using 1:c with lines
set output "delivered.png"
set ylabel "delivered fraction"
plot for [c=2:*] "delivered.csv" using 1:c with lines
set output "loss.png"
set ylabel "head-end loss"
plot for [c=2:*] "loss.csv" using 1:c with lines
set output "diameters.png"
set xlabel "diameter"
set ylabel "recoveries"
set style fill solid
plot "diameters.csv" using 1:2 with boxes
"#;

fn cmd_run(scenario: &Path, seed: u64, out: &Path, plot: bool) -> Result<(), Failure> {
    let spec = load(scenario)?;
    let (m, trace) = simulation::run_scenario_traced(&spec, seed, tracing_enabled()).map_err(sim_failure)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(out, "throughput.csv", &m.throughput_csv())?;
    write(out, "delivered.csv", &m.delivered_csv())?;
    write(out, "loss.csv", &m.loss_csv())?;
    write(out, "diameters.csv", &m.diameters_csv())?;
    write(out, "summary.txt", &m.summary())?;
    if plot {
        write(out, "plot.gp", PLOT)?;
    }
    if !trace.is_empty() {
        let mut body = trace.join("\n");
        body.push('\n');
        write(out, "trace.txt", &body)?;
    }
    eprintln!(
        "seed {seed}: delivered {:.4}, recovered {}, head-end loss {:.4}",
        m.final_delivered_fraction(),
        m.recovered(),
        m.head_end_loss()
    );
    Ok(())
}

fn cmd_compare(scenario: &Path, seeds: u64, first: u64, out: Option<&Path>) -> Result<(), Failure> {
    if seeds == 0 {
        return Err(invalid(anyhow!("--seeds must be positive")));
    }
    let spec = load(scenario)?;
    let list: Vec<u64> = (first..first + seeds).collect();
    let pairs = list
        .par_iter()
        .map(|&s| simulation::run_pair(&spec, s).map(|(g, e)| (s, g, e)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(sim_failure)?;
    let report = simulation::ComparisonReport::from_pairs(pairs);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(dir, "comparison.csv", &report.csv())?;
            write(dir, "comparison.txt", &report.summary())?;
        }
        None => print!("{}\n{}", report.csv(), report.summary()),
    }
    Ok(())
}

fn parse_sizes(n: &str) -> Result<(usize, usize), Failure> {
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| invalid(anyhow!("--n: expected N or A..B, got {n:?}")))
    };
    match n.split_once("..") {
        Some((a, b)) => Ok((num(a)?, num(b.trim_start_matches('='))?)),
        None => {
            let v = num(n)?;
            Ok((v, v))
        }
    }
}

fn cmd_curve(n_min: usize, n_max: usize, n: Option<&str>, i: usize, d_gos: &str, out: Option<&Path>) -> Result<(), Failure> {
    let (lo, hi) = match n {
        Some(s) => parse_sizes(s)?,
        None => (n_min, n_max),
    };
    if lo > hi || hi <= i {
        return Err(invalid(anyhow!("empty size range {lo}..{hi} for i = {i}")));
    }
    let g = analytics::parse_d_gos(d_gos).map_err(analytics_failure)?;
    let curve = analytics::scalability_curve(lo..=hi, i, g).map_err(analytics_failure)?;
    emit(out, &CurveCsv(&curve).to_string())?;
    Ok(())
}

fn cmd_bound(n: usize, i: usize, d_gos: &str) -> Result<(), Failure> {
    let g = analytics::parse_d_gos(d_gos).map_err(analytics_failure)?;
    let b = analytics::max_diameter_bound(n, i, g).map_err(analytics_failure)?;
    println!("n {}\ni {i}\nd_gos {}\nbound {}\nmax_d {}", b.n, analytics::decimal(g), analytics::decimal(b.bound), b.max_d);
    Ok(())
}

fn random_message(rng: &mut ChaCha8Rng) -> ControlMessage {
    let addr = |rng: &mut ChaCha8Rng| Ipv4Addr::from(rng.gen::<u32>());
    let with = |rng: &mut ChaCha8Rng| rng.gen_bool(0.5);
    match rng.gen_range(0..4) {
        0 => ControlMessage::Path {
            session: rng.gen(),
            hop: addr(rng),
            gos_path: with(rng).then(|| GosPathObject {
                level: GosLevel(rng.gen()),
                gosp_phop: addr(rng),
            }),
        },
        1 => ControlMessage::Resv {
            session: rng.gen(),
            hop: addr(rng),
            gos_resv: with(rng).then(|| GosResvObject {
                granted_level: GosLevel(rng.gen()),
            }),
        },
        2 => ControlMessage::HelloReq {
            src_instance: rng.gen(),
            dst_instance: rng.gen(),
            gos_req: with(rng).then(|| GosReqObject {
                flow_id: rng.gen(),
                packet_id: rng.gen(),
            }),
        },
        _ => ControlMessage::HelloAck {
            src_instance: rng.gen(),
            dst_instance: rng.gen(),
            gos_ack: with(rng).then(|| GosAckObject {
                flow_id: rng.gen(),
                packet_id: rng.gen(),
                found: rng.gen(),
            }),
        },
    }
}

fn cmd_codec_check(count: u64, seed: u64, vectors: &[PathBuf]) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..count {
        let m = random_message(&mut rng);
        let bytes = codec::encode(&m);
        match codec::decode(&bytes) {
            Ok(back) if back == m => {}
            got => {
                return Err(Failure::Internal(anyhow!(
                    "message {k} failed the round trip: {m:?} came back as {got:?}\n{}",
                    codec::to_hex(&bytes)
                )))
            }
        }
    }
    for path in vectors {
        let text = fs::read_to_string(path).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))?;
        let bytes = codec::parse_hex(&text).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))?;
        let again = codec::decode(&bytes).map(|m| codec::encode(&m));
        if again.as_ref() != Ok(&bytes) {
            return Err(Failure::Internal(anyhow!(
                "{}: vector does not survive decode and encode ({})\n{}",
                path.display(),
                match again {
                    Err(e) => e.to_string(),
                    Ok(_) => "bytes differ".into(),
                },
                codec::to_hex(&bytes)
            )));
        }
    }
    println!("{count} random messages and {} vectors round-trip", vectors.len());
    Ok(())
}

fn cmd_gen_topology(seed: u64, gos_k: usize, buffer_bytes: u64, out: Option<&Path>) -> Result<(), Failure> {
    let mut t = generate_att_like(seed);
    if gos_k > 0 {
        if buffer_bytes == 0 {
            return Err(invalid(anyhow!("--buffer-bytes must be positive")));
        }
        t = t.with_gos_nodes(&place_gos_nodes(&t, gos_k), buffer_bytes);
    }
    emit(out, &t.to_string())?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            plot,
        } => cmd_run(&scenario, seed, &out, plot),
        Command::Compare {
            scenario,
            seeds,
            first_seed,
            out,
        } => cmd_compare(&scenario, seeds, first_seed, out.as_deref()),
        Command::Curve {
            n_min,
            n_max,
            n,
            i,
            d_gos,
            out,
        } => cmd_curve(n_min, n_max, n.as_deref(), i, &d_gos, out.as_deref()),
        Command::Bound { n, i, d_gos } => cmd_bound(n, i, &d_gos),
        Command::CodecCheck { count, seed, vectors } => cmd_codec_check(count, seed, &vectors),
        Command::GenTopology {
            seed,
            gos_k,
            buffer_bytes,
            out,
        } => cmd_gen_topology(seed, gos_k, buffer_bytes, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
