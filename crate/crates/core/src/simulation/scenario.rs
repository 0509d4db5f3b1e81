//! Scenario files.
//!
//! A scenario is TOML:
//!
//! ```toml
//! duration_s = 60
//! sample_interval_s = 1
//! arrivals = "paced"         # or "poisson"
//!
//! [topology]
//! generate = "att_like"      # or: line = { len = 10, delay_us = 1000, capacity_bps = 1000000000 }
//! seed = 4                   # or: file = "net.topo" / inline = """..."""
//!
//! [gos_nodes]
//! placement = "top_degree"   # none | all | top_degree | spacing | list
//! k = 8
//! buffer_bytes = 1000000
//!
//! [[flows]]
//! fec = 1
//! src = "E001"
//! dst = "E017"
//! rate_bps = 2000000
//! level = 2
//!
//! [drop]
//! model = "bernoulli"        # none | bernoulli | inject | queue
//! rate = 0.01
//! nodes = "lsr"
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::codec::GosLevel;
use crate::topology::{
    generate_att_like, line_topology, parse_topology, place_gos_nodes, NodeIdx, NodeKind,
    RoutePath, Topology, TopologyError,
};

pub const MIN_RATE_BPS: u64 = 64_000;
pub const MAX_RATE_BPS: u64 = 4_000_000;
pub const DEFAULT_PACKET_BYTES: u32 = 1_000;
pub const DEFAULT_BUFFER_BYTES: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Topology {
        path: String,
        #[source]
        source: TopologyError,
    },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySource {
    AttLike { seed: u64 },
    Line { len: usize, delay_us: u64, capacity_bps: u64 },
    /// Topology file contents.
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GosPlacement {
    /// Keep the marks carried by the topology itself.
    FromTopology,
    None,
    All,
    TopDegree(usize),
    /// Every k-th node along the route of the first flow.
    Spacing(usize),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub fec: u32,
    pub src: String,
    pub dst: String,
    pub rate_bps: u64,
    pub packet_size_bytes: u32,
    pub level: GosLevel,
    pub start_us: u64,
    pub stop_us: u64,
    /// Explicit route; the shortest-delay path otherwise.
    pub route: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGenerator {
    pub count: usize,
    pub seed: Option<u64>,
    pub rate_min_bps: u64,
    pub rate_max_bps: u64,
    pub packet_size_bytes: u32,
    pub level: GosLevel,
    /// Only accept routes crossing at least this many GoS-capable nodes.
    pub min_gos_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeSelector {
    All,
    /// Interior (LSR) nodes only.
    Lsr,
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DropRate {
    Fixed(f64),
    /// Each selected node draws its own rate uniformly from the range.
    PerNode { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectedDrop {
    pub node: String,
    pub fec: u32,
    pub packet_id: u32,
    /// Which traversal of `node` by that packet (0 = first).
    pub pass: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DropSpec {
    None,
    Bernoulli { rate: DropRate, nodes: NodeSelector },
    Inject(Vec<InjectedDrop>),
    /// Finite per-link output queues with tail drop.
    Queue { capacity_packets: usize },
}

/// How a flow spaces its send opportunities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arrivals {
    /// Fixed interval `packet bits / rate`.
    #[default]
    Paced,
    /// Exponential gaps with the same mean.
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub topology: TopologySource,
    pub gos_nodes: GosPlacement,
    pub gos_buffer_bytes: u64,
    pub flows: Vec<FlowSpec>,
    pub flow_generator: Option<FlowGenerator>,
    pub drop: DropSpec,
    pub duration_us: u64,
    pub sample_interval_us: u64,
    /// `false` runs the same scenario with no GoS-capable nodes.
    pub gos_enabled: bool,
    pub reorder_window: u32,
    /// Overrides the head-end window.
    pub e2e_window: Option<u32>,
    pub arrivals: Arrivals,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    duration_s: f64,
    sample_interval_s: Option<f64>,
    gos_enabled: Option<bool>,
    reorder_window: Option<u32>,
    e2e_window: Option<u32>,
    arrivals: Option<String>,
    topology: RawTopology,
    gos_nodes: Option<RawGos>,
    #[serde(default)]
    flows: Vec<RawFlow>,
    flow_generator: Option<RawGenerator>,
    drop: Option<RawDrop>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    generate: Option<String>,
    seed: Option<u64>,
    line: Option<RawLine>,
    file: Option<PathBuf>,
    inline: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    len: usize,
    delay_us: u64,
    capacity_bps: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGos {
    placement: String,
    k: Option<usize>,
    ids: Option<Vec<String>>,
    buffer_bytes: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    fec: u32,
    src: String,
    dst: String,
    rate_bps: f64,
    packet_size_bytes: Option<u32>,
    level: Option<u16>,
    start_s: Option<f64>,
    stop_s: Option<f64>,
    route: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    count: usize,
    seed: Option<u64>,
    rate_min_bps: Option<f64>,
    rate_max_bps: Option<f64>,
    packet_size_bytes: Option<u32>,
    level: Option<u16>,
    min_gos_nodes: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawNodes {
    Named(String),
    List(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInject {
    node: String,
    fec: u32,
    pid: u32,
    pass: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrop {
    model: String,
    rate: Option<f64>,
    rate_min: Option<f64>,
    rate_max: Option<f64>,
    nodes: Option<RawNodes>,
    drops: Option<Vec<RawInject>>,
    capacity_packets: Option<usize>,
}

fn seconds_to_us(path: &str, s: f64) -> Result<u64, ScenarioError> {
    if !s.is_finite() || s < 0.0 {
        return Err(invalid(path, format!("{s} is not a valid time")));
    }
    Ok((s * 1e6).round() as u64)
}

fn rate_to_u64(path: &str, r: f64) -> Result<u64, ScenarioError> {
    if !r.is_finite() || r <= 0.0 || r.fract() != 0.0 {
        return Err(invalid(path, format!("{r} is not a whole positive rate")));
    }
    Ok(r as u64)
}

fn check_probability(path: &str, p: f64) -> Result<f64, ScenarioError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(path, format!("{p} is not a probability")));
    }
    Ok(p)
}

fn line_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl ScenarioSpec {
    /// Reads a scenario file; relative topology paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path.parent())
    }

    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_of(text, s.start));
            ScenarioError::Syntax {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let spec = Self::from_raw(raw, base_dir)?;
        spec.validate()?;
        Ok(spec)
    }

    fn from_raw(raw: RawScenario, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let duration_us = seconds_to_us("duration_s", raw.duration_s)?;
        let sample_interval_us = seconds_to_us("sample_interval_s", raw.sample_interval_s.unwrap_or(1.0))?;

        let t = raw.topology;
        let given = [t.generate.is_some(), t.line.is_some(), t.file.is_some(), t.inline.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(invalid("topology", "give exactly one of generate, line, file, inline"));
        }
        let topology = if let Some(g) = t.generate {
            if g != "att_like" {
                return Err(invalid("topology.generate", format!("unknown generator {g:?}")));
            }
            TopologySource::AttLike {
                seed: t.seed.unwrap_or(0),
            }
        } else if let Some(l) = t.line {
            TopologySource::Line {
                len: l.len,
                delay_us: l.delay_us,
                capacity_bps: l.capacity_bps,
            }
        } else if let Some(f) = t.file {
            let p = match base_dir {
                Some(b) if f.is_relative() => b.join(&f),
                _ => f,
            };
            let text = std::fs::read_to_string(&p).map_err(|source| ScenarioError::Io { path: p, source })?;
            TopologySource::Text(text)
        } else {
            TopologySource::Text(t.inline.unwrap_or_default())
        };

        let (gos_nodes, gos_buffer_bytes) = match raw.gos_nodes {
            None => (GosPlacement::FromTopology, DEFAULT_BUFFER_BYTES),
            Some(g) => {
                let need_k = |what: &str| {
                    g.k.ok_or_else(|| invalid("gos_nodes.k", format!("required for {what}")))
                };
                let placement = match g.placement.as_str() {
                    "none" => GosPlacement::None,
                    "all" => GosPlacement::All,
                    "top_degree" => GosPlacement::TopDegree(need_k("top_degree")?),
                    "spacing" => GosPlacement::Spacing(need_k("spacing")?),
                    "list" => GosPlacement::List(
                        g.ids.clone().ok_or_else(|| invalid("gos_nodes.ids", "required for list"))?,
                    ),
                    other => return Err(invalid("gos_nodes.placement", format!("unknown placement {other:?}"))),
                };
                (placement, g.buffer_bytes.unwrap_or(DEFAULT_BUFFER_BYTES))
            }
        };

        let mut flows = Vec::with_capacity(raw.flows.len());
        for (i, f) in raw.flows.into_iter().enumerate() {
            let p = |k: &str| format!("flows[{i}].{k}");
            let start_us = seconds_to_us(&p("start_s"), f.start_s.unwrap_or(0.0))?;
            let stop_us = match f.stop_s {
                Some(s) => seconds_to_us(&p("stop_s"), s)?,
                None => duration_us,
            };
            flows.push(FlowSpec {
                fec: f.fec,
                src: f.src,
                dst: f.dst,
                rate_bps: rate_to_u64(&p("rate_bps"), f.rate_bps)?,
                packet_size_bytes: f.packet_size_bytes.unwrap_or(DEFAULT_PACKET_BYTES),
                level: GosLevel(f.level.unwrap_or(0)),
                start_us,
                stop_us,
                route: f.route,
            });
        }

        let flow_generator = raw
            .flow_generator
            .map(|g| -> Result<FlowGenerator, ScenarioError> {
                Ok(FlowGenerator {
                    count: g.count,
                    seed: g.seed,
                    rate_min_bps: rate_to_u64("flow_generator.rate_min_bps", g.rate_min_bps.unwrap_or(MIN_RATE_BPS as f64))?,
                    rate_max_bps: rate_to_u64("flow_generator.rate_max_bps", g.rate_max_bps.unwrap_or(MAX_RATE_BPS as f64))?,
                    packet_size_bytes: g.packet_size_bytes.unwrap_or(DEFAULT_PACKET_BYTES),
                    level: GosLevel(g.level.unwrap_or(1)),
                    min_gos_nodes: g.min_gos_nodes.unwrap_or(0),
                })
            })
            .transpose()?;

        let drop = match raw.drop {
            None => DropSpec::None,
            Some(d) => match d.model.as_str() {
                "none" => DropSpec::None,
                "bernoulli" => {
                    let rate = match (d.rate, d.rate_min, d.rate_max) {
                        (Some(r), None, None) => DropRate::Fixed(check_probability("drop.rate", r)?),
                        (None, Some(lo), Some(hi)) => {
                            let min = check_probability("drop.rate_min", lo)?;
                            let max = check_probability("drop.rate_max", hi)?;
                            if min > max {
                                return Err(invalid("drop.rate_min", "exceeds drop.rate_max"));
                            }
                            DropRate::PerNode { min, max }
                        }
                        _ => return Err(invalid("drop", "give either rate or rate_min and rate_max")),
                    };
                    let nodes = match d.nodes {
                        None => NodeSelector::Lsr,
                        Some(RawNodes::Named(n)) => match n.as_str() {
                            "all" => NodeSelector::All,
                            "lsr" => NodeSelector::Lsr,
                            other => return Err(invalid("drop.nodes", format!("unknown selector {other:?}"))),
                        },
                        Some(RawNodes::List(ids)) => NodeSelector::List(ids),
                    };
                    DropSpec::Bernoulli { rate, nodes }
                }
                "inject" => DropSpec::Inject(
                    d.drops
                        .unwrap_or_default()
                        .into_iter()
                        .map(|r| InjectedDrop {
                            node: r.node,
                            fec: r.fec,
                            packet_id: r.pid,
                            pass: r.pass.unwrap_or(0),
                        })
                        .collect(),
                ),
                "queue" => DropSpec::Queue {
                    capacity_packets: d
                        .capacity_packets
                        .ok_or_else(|| invalid("drop.capacity_packets", "required for queue"))?,
                },
                other => return Err(invalid("drop.model", format!("unknown model {other:?}"))),
            },
        };

        let arrivals = match raw.arrivals.as_deref() {
            None | Some("paced") => Arrivals::Paced,
            Some("poisson") => Arrivals::Poisson,
            Some(other) => return Err(invalid("arrivals", format!("unknown arrival process {other:?}"))),
        };

        Ok(Self {
            topology,
            gos_nodes,
            gos_buffer_bytes,
            flows,
            flow_generator,
            drop,
            duration_us,
            sample_interval_us,
            gos_enabled: raw.gos_enabled.unwrap_or(true),
            reorder_window: raw.reorder_window.unwrap_or(crate::forwarding::DEFAULT_REORDER_WINDOW),
            e2e_window: raw.e2e_window,
            arrivals,
        })
    }

    /// Checks everything that does not depend on the run seed.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.duration_us == 0 {
            return Err(invalid("duration_s", "must be positive"));
        }
        if self.sample_interval_us == 0 || self.sample_interval_us > self.duration_us {
            return Err(invalid("sample_interval_s", "must be positive and at most duration_s"));
        }
        if self.e2e_window == Some(0) {
            return Err(invalid("e2e_window", "must be positive"));
        }
        let t = self.build_topology()?;
        let node = |path: String, id: &str| -> Result<NodeIdx, ScenarioError> {
            t.idx(id).ok_or_else(|| invalid(path, format!("unknown node {id:?}")))
        };

        if !matches!(self.gos_nodes, GosPlacement::None | GosPlacement::FromTopology) && self.gos_buffer_bytes == 0 {
            return Err(invalid("gos_nodes.buffer_bytes", "must be positive"));
        }
        match &self.gos_nodes {
            GosPlacement::TopDegree(k) if *k > t.node_count() => {
                return Err(invalid("gos_nodes.k", format!("only {} nodes", t.node_count())));
            }
            GosPlacement::Spacing(0) | GosPlacement::TopDegree(0) => {
                return Err(invalid("gos_nodes.k", "must be positive"));
            }
            GosPlacement::Spacing(_) if self.flows.is_empty() => {
                return Err(invalid("gos_nodes", "spacing needs at least one flow"));
            }
            GosPlacement::List(ids) => {
                for (i, id) in ids.iter().enumerate() {
                    node(format!("gos_nodes.ids[{i}]"), id)?;
                }
            }
            _ => {}
        }

        if self.flows.is_empty() && self.flow_generator.is_none() {
            return Err(invalid("flows", "no flows and no flow_generator"));
        }
        let mut fecs = BTreeSet::new();
        for (i, f) in self.flows.iter().enumerate() {
            let p = |k: &str| format!("flows[{i}].{k}");
            if !fecs.insert(f.fec) {
                return Err(invalid(p("fec"), format!("duplicate FEC {}", f.fec)));
            }
            let s = node(p("src"), &f.src)?;
            let d = node(p("dst"), &f.dst)?;
            if s == d {
                return Err(invalid(p("dst"), "equals src"));
            }
            for (end, idx) in [("src", s), ("dst", d)] {
                if t.node(idx).kind != NodeKind::Ler {
                    return Err(invalid(p(end), format!("{} is not an LER", t.node(idx).id)));
                }
            }
            if !(MIN_RATE_BPS..=MAX_RATE_BPS).contains(&f.rate_bps) {
                return Err(invalid(
                    p("rate_bps"),
                    format!("{} outside [{MIN_RATE_BPS}, {MAX_RATE_BPS}]", f.rate_bps),
                ));
            }
            if f.packet_size_bytes == 0 {
                return Err(invalid(p("packet_size_bytes"), "must be positive"));
            }
            if f.start_us >= f.stop_us || f.stop_us > self.duration_us {
                return Err(invalid(p("stop_s"), "need start_s < stop_s <= duration_s"));
            }
            if let Some(r) = &f.route {
                if r.first() != Some(&f.src) || r.last() != Some(&f.dst) {
                    return Err(invalid(p("route"), "must run from src to dst"));
                }
                let ids: Vec<&str> = r.iter().map(String::as_str).collect();
                t.route_from_ids(&ids).map_err(|e| invalid(p("route"), e.to_string()))?;
            }
        }
        if let Some(g) = &self.flow_generator {
            if g.count == 0 {
                return Err(invalid("flow_generator.count", "must be positive"));
            }
            if g.rate_min_bps < MIN_RATE_BPS || g.rate_max_bps > MAX_RATE_BPS || g.rate_min_bps > g.rate_max_bps {
                return Err(invalid(
                    "flow_generator.rate_min_bps",
                    format!("rates must satisfy {MIN_RATE_BPS} <= min <= max <= {MAX_RATE_BPS}"),
                ));
            }
            if g.packet_size_bytes == 0 {
                return Err(invalid("flow_generator.packet_size_bytes", "must be positive"));
            }
            if t.nodes().iter().filter(|n| n.kind == NodeKind::Ler).count() < 2 {
                return Err(invalid("flow_generator", "topology has fewer than two LERs"));
            }
        }
        match &self.drop {
            DropSpec::Bernoulli {
                nodes: NodeSelector::List(ids),
                ..
            } => {
                for (i, id) in ids.iter().enumerate() {
                    node(format!("drop.nodes[{i}]"), id)?;
                }
            }
            DropSpec::Inject(drops) => {
                for (i, d) in drops.iter().enumerate() {
                    node(format!("drop.drops[{i}].node"), &d.node)?;
                }
            }
            DropSpec::Queue { capacity_packets: 0 } => {
                return Err(invalid("drop.capacity_packets", "must be positive"));
            }
            _ => {}
        }
        Ok(())
    }

    /// The topology without GoS marks.
    pub fn build_topology(&self) -> Result<Topology, ScenarioError> {
        match &self.topology {
            TopologySource::AttLike { seed } => Ok(generate_att_like(*seed)),
            TopologySource::Line {
                len,
                delay_us,
                capacity_bps,
            } => {
                if *len < 2 || *delay_us == 0 || *capacity_bps == 0 {
                    return Err(invalid("topology.line", "need len >= 2 and positive delay and capacity"));
                }
                Ok(line_topology(*len, *delay_us, *capacity_bps))
            }
            TopologySource::Text(text) => parse_topology(text).map_err(|source| ScenarioError::Topology {
                path: "topology".into(),
                source,
            }),
        }
    }

    /// GoS-capable nodes for this scenario, regardless of `gos_enabled`.
    /// `first_route` is needed for spacing placement.
    pub fn gos_set(&self, t: &Topology, first_route: Option<&RoutePath>) -> Result<BTreeSet<NodeIdx>, ScenarioError> {
        Ok(match &self.gos_nodes {
            GosPlacement::FromTopology => (0..t.node_count()).filter(|&i| t.node(i).gos_capable).collect(),
            GosPlacement::None => BTreeSet::new(),
            GosPlacement::All => (0..t.node_count()).collect(),
            GosPlacement::TopDegree(k) => place_gos_nodes(t, *k),
            GosPlacement::List(ids) => ids.iter().filter_map(|id| t.idx(id)).collect(),
            GosPlacement::Spacing(k) => {
                let route = first_route.ok_or_else(|| invalid("gos_nodes", "spacing needs a flow route"))?;
                let positions = spacing_positions(route.nodes.len(), *k)
                    .map_err(|m| invalid("gos_nodes.k", m))?;
                positions.into_iter().map(|p| route.nodes[p]).collect()
            }
        })
    }
}

/// Route positions marked GoS-capable when every `k`-th node is.
pub fn spacing_positions(route_len: usize, k: usize) -> Result<Vec<usize>, String> {
    if k == 0 || k >= route_len {
        return Err(format!("spacing {k} needs 0 < k < route length {route_len}"));
    }
    let mut v: Vec<usize> = (0..route_len).step_by(k).collect();
    if v.last() != Some(&(route_len - 1)) {
        v.push(route_len - 1);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
duration_s = 10
sample_interval_s = 0.5

[topology]
line = { len = 5, delay_us = 1000, capacity_bps = 1000000000 }

[gos_nodes]
placement = "all"
buffer_bytes = 100000

[[flows]]
fec = 1
src = "X1"
dst = "X5"
rate_bps = 4e6
level = 2

[drop]
model = "bernoulli"
rate = 0.01
"#;

    #[test]
    fn parses_basic_scenario() {
        let s = ScenarioSpec::from_toml(BASIC, None).unwrap();
        assert_eq!(s.duration_us, 10_000_000);
        assert_eq!(s.sample_interval_us, 500_000);
        assert_eq!(s.gos_nodes, GosPlacement::All);
        assert_eq!(s.flows[0].rate_bps, 4_000_000);
        assert_eq!(s.flows[0].stop_us, 10_000_000);
        assert_eq!(
            s.drop,
            DropSpec::Bernoulli {
                rate: DropRate::Fixed(0.01),
                nodes: NodeSelector::Lsr
            }
        );
        assert!(s.gos_enabled);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let bad = BASIC.replace("rate_bps = 4e6", "rate_bps = = 4e6");
        match ScenarioSpec::from_toml(&bad, None) {
            Err(ScenarioError::Syntax { line, .. }) => assert_eq!(line, 16),
            other => panic!("{other:?}"),
        }
        let unknown = BASIC.replace("level = 2", "levle = 2");
        assert!(matches!(ScenarioSpec::from_toml(&unknown, None), Err(ScenarioError::Syntax { line: 17, .. })));
    }

    #[test]
    fn validation_errors_name_the_field() {
        let cases = [
            ("rate_bps = 4e6", "rate_bps = 5e6", "flows[0].rate_bps"),
            ("dst = \"X5\"", "dst = \"X1\"", "flows[0].dst"),
            ("dst = \"X5\"", "dst = \"X3\"", "flows[0].dst"),
            ("dst = \"X5\"", "dst = \"Q\"", "flows[0].dst"),
            ("rate = 0.01", "rate = 1.5", "drop.rate"),
            ("placement = \"all\"", "placement = \"spacing\"", "gos_nodes.k"),
        ];
        for (from, to, path) in cases {
            let text = BASIC.replace(from, to);
            match ScenarioSpec::from_toml(&text, None) {
                Err(ScenarioError::Invalid { path: p, .. }) => assert_eq!(p, path, "{to}"),
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn topology_errors_keep_their_line() {
        let text = r#"
duration_s = 1
[topology]
inline = """
node A 10.0.0.1 LER 0 0
bogus
"""
[[flows]]
fec = 1
src = "A"
dst = "A"
rate_bps = 64000
"#;
        let err = ScenarioSpec::from_toml(text, None).unwrap_err();
        assert!(matches!(err, ScenarioError::Topology { source: TopologyError::Syntax { line: 2, .. }, .. }), "{err}");
    }

    #[test]
    fn spacing_arithmetic() {
        assert_eq!(spacing_positions(9, 1).unwrap(), (0..9).collect::<Vec<_>>());
        assert_eq!(spacing_positions(9, 2).unwrap(), [0, 2, 4, 6, 8]);
        assert_eq!(spacing_positions(9, 8).unwrap(), [0, 8]);
        assert!(spacing_positions(9, 9).is_err());
    }
}
