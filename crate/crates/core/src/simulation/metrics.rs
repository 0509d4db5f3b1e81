//! Run metrics and their CSV renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t_us: u64,
    /// Per flow, in flow order.
    pub throughput_bps: Vec<f64>,
    pub delivered_fraction: Vec<f64>,
    pub head_end_loss: Vec<f64>,
    pub total_throughput_bps: f64,
    pub total_delivered_fraction: f64,
    pub total_head_end_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSummary {
    pub fec: u32,
    pub src: String,
    pub dst: String,
    pub hops: usize,
    pub gos_nodes_on_path: usize,
    pub granted_level: u16,
    pub rate_bps: u64,
    /// Send opportunities over the flow's lifetime; the delivered-fraction
    /// denominator.
    pub slots: u64,
    pub emitted: u64,
    pub delivered_in_order: u64,
    pub received: u64,
    pub duplicates: u64,
    pub drops: u64,
    pub head_end_retransmissions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Conservation {
    pub ticks_checked: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub seed: u64,
    pub flows: Vec<FlowSummary>,
    pub samples: Vec<Sample>,
    /// Recovered losses by diameter.
    pub diameters: BTreeMap<u32, u64>,
    pub exhausted: u64,
    /// Recoveries still open when the run ended.
    pub unresolved: u64,
    pub recovery_latencies_us: Vec<u64>,
    pub conservation: Conservation,
    pub buffer_violations: u64,
    pub time_regressions: u64,
    pub events: u64,
    pub misrouted: u64,
    pub ack_timeouts: u64,
}

fn f(v: f64) -> String {
    debug_assert!(v.is_finite());
    format!("{v:.6}")
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsSeries {
    pub fn recovered(&self) -> u64 {
        self.diameters.values().sum()
    }

    /// Share of recoveries that succeeded at diameter 1.
    pub fn diameter_one_share(&self) -> f64 {
        ratio(self.diameters.get(&1).copied().unwrap_or(0), self.recovered())
    }

    pub fn mean_throughput_bps(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.total_throughput_bps).sum::<f64>() / self.samples.len() as f64
    }

    pub fn head_end_retransmissions(&self) -> u64 {
        self.flows.iter().map(|f| f.head_end_retransmissions).sum()
    }

    /// Head-end retransmissions over first transmissions, end of run.
    pub fn head_end_loss(&self) -> f64 {
        let emitted = self.flows.iter().map(|f| f.emitted).sum();
        ratio(self.head_end_retransmissions(), emitted)
    }

    pub fn final_delivered_fraction(&self) -> f64 {
        let slots = self.flows.iter().map(|f| f.slots).sum();
        ratio(self.flows.iter().map(|f| f.delivered_in_order).sum(), slots)
    }

    /// Aggregate delivered fraction at the last sample at or before `t_us`.
    pub fn delivered_fraction_at(&self, t_us: u64) -> f64 {
        self.samples
            .iter()
            .take_while(|s| s.t_us <= t_us)
            .last()
            .map_or(0.0, |s| s.total_delivered_fraction)
    }

    fn wide_csv(&self, pick: impl Fn(&Sample) -> (f64, &[f64])) -> String {
        let mut out = String::from("t_s,total");
        for fl in &self.flows {
            let _ = write!(out, ",fec_{}", fl.fec);
        }
        out.push('\n');
        for s in &self.samples {
            let (total, per) = pick(s);
            let _ = write!(out, "{},{}", f(s.t_us as f64 / 1e6), f(total));
            for v in per {
                let _ = write!(out, ",{}", f(*v));
            }
            out.push('\n');
        }
        out
    }

    /// `t_s,total,fec_<n>...` in bits per second.
    pub fn throughput_csv(&self) -> String {
        self.wide_csv(|s| (s.total_throughput_bps, &s.throughput_bps))
    }

    /// `t_s,total,fec_<n>...` as in-order delivered / total send slots.
    pub fn delivered_csv(&self) -> String {
        self.wide_csv(|s| (s.total_delivered_fraction, &s.delivered_fraction))
    }

    /// `t_s,total,fec_<n>...` as head-end retransmissions / first sends.
    pub fn loss_csv(&self) -> String {
        self.wide_csv(|s| (s.total_head_end_loss, &s.head_end_loss))
    }

    /// `diameter,count`.
    pub fn diameters_csv(&self) -> String {
        let mut out = String::from("diameter,count\n");
        for (d, c) in &self.diameters {
            let _ = writeln!(out, "{d},{c}");
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "events {}", self.events);
        let _ = writeln!(s, "flows {}", self.flows.len());
        for fl in &self.flows {
            let _ = writeln!(
                s,
                "flow fec={} {}->{} hops={} gos_on_path={} level={} rate_bps={} slots={} emitted={} delivered={} duplicates={} drops={} head_end_retx={}",
                fl.fec,
                fl.src,
                fl.dst,
                fl.hops,
                fl.gos_nodes_on_path,
                fl.granted_level,
                fl.rate_bps,
                fl.slots,
                fl.emitted,
                fl.delivered_in_order,
                fl.duplicates,
                fl.drops,
                fl.head_end_retransmissions
            );
        }
        let _ = writeln!(s, "mean_throughput_bps {}", f(self.mean_throughput_bps()));
        let _ = writeln!(s, "delivered_fraction {}", f(self.final_delivered_fraction()));
        let _ = writeln!(s, "head_end_loss {}", f(self.head_end_loss()));
        let _ = writeln!(s, "recovered {}", self.recovered());
        for (d, c) in &self.diameters {
            let _ = writeln!(s, "  d={d} {c}");
        }
        let _ = writeln!(s, "exhausted {}", self.exhausted);
        let _ = writeln!(s, "unresolved {}", self.unresolved);
        if !self.recovery_latencies_us.is_empty() {
            let mut l = self.recovery_latencies_us.clone();
            l.sort_unstable();
            let _ = writeln!(
                s,
                "recovery_latency_us min={} median={} max={}",
                l[0],
                l[l.len() / 2],
                l[l.len() - 1]
            );
        }
        let _ = writeln!(s, "ack_timeouts {}", self.ack_timeouts);
        let _ = writeln!(s, "misrouted {}", self.misrouted);
        let _ = writeln!(
            s,
            "conservation ticks={} violations={}",
            self.conservation.ticks_checked, self.conservation.violations
        );
        if let Some(v) = &self.conservation.first_violation {
            let _ = writeln!(s, "  first: {v}");
        }
        s
    }
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trend {
    pub slope: f64,
    pub intercept: f64,
}

impl Trend {
    pub fn fit(points: &[(f64, f64)]) -> Self {
        let n = points.len() as f64;
        if points.is_empty() {
            return Trend { slope: 0.0, intercept: 0.0 };
        }
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
        Trend {
            slope,
            intercept: my - slope * mx,
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// GoS and end-to-end results of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRun {
    pub seed: u64,
    pub gos_throughput_bps: f64,
    pub e2e_throughput_bps: f64,
    pub gos_loss: f64,
    pub e2e_loss: f64,
    /// `(t_us, gos - e2e)` delivered fraction per sample.
    pub delivered_delta: Vec<(u64, f64)>,
}

impl PairedRun {
    pub fn new(seed: u64, gos: &MetricsSeries, e2e: &MetricsSeries) -> Self {
        Self {
            seed,
            gos_throughput_bps: gos.mean_throughput_bps(),
            e2e_throughput_bps: e2e.mean_throughput_bps(),
            gos_loss: gos.head_end_loss(),
            e2e_loss: e2e.head_end_loss(),
            delivered_delta: gos
                .samples
                .iter()
                .zip(&e2e.samples)
                .map(|(a, b)| (a.t_us, a.total_delivered_fraction - b.total_delivered_fraction))
                .collect(),
        }
    }

    pub fn throughput_delta(&self) -> f64 {
        self.gos_throughput_bps - self.e2e_throughput_bps
    }

    pub fn loss_delta(&self) -> f64 {
        self.gos_loss - self.e2e_loss
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Sorted by seed.
    pub runs: Vec<PairedRun>,
    pub mean_throughput_delta: f64,
    pub mean_loss_delta: f64,
    pub gos_trend: Trend,
    pub e2e_trend: Trend,
    /// Mean relative gap between the two trend lines over the sampled
    /// span, in percent of the end-to-end trend.
    pub trend_gap_pct: f64,
}

impl ComparisonReport {
    /// Builds the report from `(seed, gos run, e2e run)` triples given in
    /// any order.
    pub fn from_pairs(mut pairs: Vec<(u64, MetricsSeries, MetricsSeries)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let runs: Vec<PairedRun> = pairs.iter().map(|(s, g, e)| PairedRun::new(*s, g, e)).collect();
        let n = runs.len().max(1) as f64;
        let mean_throughput_delta = runs.iter().map(PairedRun::throughput_delta).sum::<f64>() / n;
        let mean_loss_delta = runs.iter().map(PairedRun::loss_delta).sum::<f64>() / n;

        let points = |pick: fn(&(u64, MetricsSeries, MetricsSeries)) -> &MetricsSeries| {
            let mut acc: BTreeMap<u64, (f64, u32)> = BTreeMap::new();
            for p in &pairs {
                for s in &pick(p).samples {
                    let e = acc.entry(s.t_us).or_default();
                    e.0 += s.total_throughput_bps;
                    e.1 += 1;
                }
            }
            acc.into_iter()
                .map(|(t, (sum, c))| (t as f64 / 1e6, sum / f64::from(c)))
                .collect::<Vec<_>>()
        };
        let gp = points(|p| &p.1);
        let ep = points(|p| &p.2);
        let gos_trend = Trend::fit(&gp);
        let e2e_trend = Trend::fit(&ep);
        let gaps: Vec<f64> = ep
            .iter()
            .filter(|(x, _)| e2e_trend.at(*x) != 0.0)
            .map(|(x, _)| (gos_trend.at(*x) - e2e_trend.at(*x)) / e2e_trend.at(*x) * 100.0)
            .collect();
        let trend_gap_pct = if gaps.is_empty() {
            0.0
        } else {
            gaps.iter().sum::<f64>() / gaps.len() as f64
        };
        Self {
            runs,
            mean_throughput_delta,
            mean_loss_delta,
            gos_trend,
            e2e_trend,
            trend_gap_pct,
        }
    }

    /// `seed,gos_throughput_bps,e2e_throughput_bps,throughput_delta_bps,gos_loss,e2e_loss,loss_delta`.
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "seed,gos_throughput_bps,e2e_throughput_bps,throughput_delta_bps,gos_loss,e2e_loss,loss_delta\n",
        );
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.seed,
                f(r.gos_throughput_bps),
                f(r.e2e_throughput_bps),
                f(r.throughput_delta()),
                f(r.gos_loss),
                f(r.e2e_loss),
                f(r.loss_delta())
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let pos_t = self.runs.iter().filter(|r| r.throughput_delta() > 0.0).count();
        let neg_l = self.runs.iter().filter(|r| r.loss_delta() < 0.0).count();
        format!(
            "seeds {}\nmean_throughput_delta_bps {}\nmean_loss_delta {}\nseeds_with_higher_gos_throughput {}\nseeds_with_lower_gos_loss {}\ngos_trend slope={} intercept={}\ne2e_trend slope={} intercept={}\ntrend_gap_pct {}\n",
            self.runs.len(),
            f(self.mean_throughput_delta),
            f(self.mean_loss_delta),
            pos_t,
            neg_l,
            f(self.gos_trend.slope),
            f(self.gos_trend.intercept),
            f(self.e2e_trend.slope),
            f(self.e2e_trend.intercept),
            f(self.trend_gap_pct)
        )
    }
}
