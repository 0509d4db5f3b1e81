//! Directed-graph domain model, the line-oriented topology file format, a
//! seeded backbone generator and minimum-delay routing.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dense index of a node inside one [`Topology`].
pub type NodeIdx = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Ler,
    Lsr,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Ler => f.write_str("LER"),
            NodeKind::Lsr => f.write_str("LSR"),
        }
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "LER" => Ok(NodeKind::Ler),
            "LSR" => Ok(NodeKind::Lsr),
            other => Err(format!("unknown node kind `{other}` (expected LER or LSR)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: String,
    pub address: Ipv4Addr,
    pub kind: NodeKind,
    pub gos_capable: bool,
    /// Zero unless `gos_capable`.
    pub gos_buffer_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    pub delay_us: u64,
    pub capacity_bps: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("duplicate node address {0}")]
    DuplicateAddress(Ipv4Addr),
    #[error("link references unknown node `{0}`")]
    DanglingEndpoint(String),
    #[error("link {from}->{to}: {field} must be positive")]
    NonPositive {
        from: String,
        to: String,
        field: &'static str,
    },
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate link {0}->{1}")]
    DuplicateLink(String, String),
    #[error("GoS-capable node `{0}` needs a positive buffer size")]
    MissingGosBuffer(String),
    #[error("node `{0}` is not GoS-capable but declares a buffer")]
    UnexpectedGosBuffer(String),
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<TopologyError>,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RouteError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("source and destination are both `{0}`")]
    SameEndpoints(String),
    #[error("node `{0}` appears twice in the route")]
    RepeatedNode(String),
    #[error("`{dst}` is unreachable from `{src}`")]
    Unreachable { src: String, dst: String },
}

/// Validated, immutable directed graph.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<NodeSpec>,
    links: Vec<LinkSpec>,
    index: HashMap<String, NodeIdx>,
    // (from, to) per link, parallel to `links`
    ends: Vec<(NodeIdx, NodeIdx)>,
    out_links: Vec<Vec<usize>>,
    link_lookup: HashMap<(NodeIdx, NodeIdx), usize>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.links == other.links
    }
}

impl Eq for Topology {}

impl Topology {
    pub fn new(nodes: Vec<NodeSpec>, links: Vec<LinkSpec>) -> Result<Self, TopologyError> {
        let mut index = HashMap::with_capacity(nodes.len());
        let mut addresses = HashSet::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            validate_node(n)?;
            if index.insert(n.id.clone(), i).is_some() {
                return Err(TopologyError::DuplicateId(n.id.clone()));
            }
            if !addresses.insert(n.address) {
                return Err(TopologyError::DuplicateAddress(n.address));
            }
        }

        let mut ends = Vec::with_capacity(links.len());
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut link_lookup = HashMap::with_capacity(links.len());
        for (li, l) in links.iter().enumerate() {
            let (from, to) = resolve_link(&index, l)?;
            if link_lookup.insert((from, to), li).is_some() {
                return Err(TopologyError::DuplicateLink(l.from.clone(), l.to.clone()));
            }
            ends.push((from, to));
            out_links[from].push(li);
        }

        Ok(Self {
            nodes,
            links,
            index,
            ends,
            out_links,
            link_lookup,
        })
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn node(&self, idx: NodeIdx) -> &NodeSpec {
        &self.nodes[idx]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn idx(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn node_by_address(&self, addr: Ipv4Addr) -> Option<NodeIdx> {
        self.nodes.iter().position(|n| n.address == addr)
    }

    /// Index into [`Topology::links`] of the directed link `from -> to`.
    pub fn link_between(&self, from: NodeIdx, to: NodeIdx) -> Option<usize> {
        self.link_lookup.get(&(from, to)).copied()
    }

    pub fn link_ends(&self, link: usize) -> (NodeIdx, NodeIdx) {
        self.ends[link]
    }

    pub fn out_links(&self, node: NodeIdx) -> impl Iterator<Item = (usize, &LinkSpec)> + '_ {
        self.out_links[node].iter().map(move |&li| (li, &self.links[li]))
    }

    /// Number of unordered node pairs joined by at least one link.
    pub fn physical_link_count(&self) -> usize {
        self.ends
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect::<HashSet<_>>()
            .len()
    }

    /// Distinct neighbours in either direction.
    pub fn degree(&self, node: NodeIdx) -> usize {
        self.neighbours(node).len()
    }

    fn neighbours(&self, node: NodeIdx) -> BTreeSet<NodeIdx> {
        self.ends
            .iter()
            .filter_map(|&(a, b)| {
                if a == node {
                    Some(b)
                } else if b == node {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Weak connectivity over the whole node set.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut undirected = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.ends {
            undirected[a].push(b);
            undirected[b].push(a);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &m in &undirected[n] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Copy of this topology with GoS capability replaced: nodes in `gos`
    /// get `buffer_bytes`, every other node loses its buffer.
    pub fn with_gos_nodes(&self, gos: &BTreeSet<NodeIdx>, buffer_bytes: u64) -> Topology {
        let mut t = self.clone();
        for (i, n) in t.nodes.iter_mut().enumerate() {
            n.gos_capable = gos.contains(&i);
            n.gos_buffer_bytes = if n.gos_capable { buffer_bytes } else { 0 };
        }
        t
    }

    pub fn route_ids<'a>(&'a self, route: &RoutePath) -> Vec<&'a str> {
        route.nodes.iter().map(|&n| self.nodes[n].id.as_str()).collect()
    }

    /// Builds a [`RoutePath`] from explicit node ids, checking every hop.
    pub fn route_from_ids(&self, ids: &[&str]) -> Result<RoutePath, RouteError> {
        let nodes = ids
            .iter()
            .map(|id| self.idx(id).ok_or_else(|| RouteError::UnknownNode(id.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        self.route_from_indices(nodes)
    }

    pub fn route_from_indices(&self, nodes: Vec<NodeIdx>) -> Result<RoutePath, RouteError> {
        let mut link_delays = Vec::with_capacity(nodes.len().saturating_sub(1));
        for w in nodes.windows(2) {
            let li = self.link_between(w[0], w[1]).ok_or_else(|| RouteError::Unreachable {
                src: self.nodes[w[0]].id.clone(),
                dst: self.nodes[w[1]].id.clone(),
            })?;
            link_delays.push(self.links[li].delay_us);
        }
        let mut seen = HashSet::new();
        if let Some(&dup) = nodes.iter().find(|n| !seen.insert(**n)) {
            return Err(RouteError::RepeatedNode(self.nodes[dup].id.clone()));
        }
        Ok(RoutePath::new(nodes, link_delays))
    }
}

fn validate_node(n: &NodeSpec) -> Result<(), TopologyError> {
    match (n.gos_capable, n.gos_buffer_bytes) {
        (true, 0) => Err(TopologyError::MissingGosBuffer(n.id.clone())),
        (false, b) if b > 0 => Err(TopologyError::UnexpectedGosBuffer(n.id.clone())),
        _ => Ok(()),
    }
}

fn resolve_link(
    index: &HashMap<String, NodeIdx>,
    l: &LinkSpec,
) -> Result<(NodeIdx, NodeIdx), TopologyError> {
    let from = *index
        .get(&l.from)
        .ok_or_else(|| TopologyError::DanglingEndpoint(l.from.clone()))?;
    let to = *index
        .get(&l.to)
        .ok_or_else(|| TopologyError::DanglingEndpoint(l.to.clone()))?;
    if from == to {
        return Err(TopologyError::SelfLoop(l.from.clone()));
    }
    for (field, v) in [("delay_us", l.delay_us), ("capacity_bps", l.capacity_bps)] {
        if v == 0 {
            return Err(TopologyError::NonPositive {
                from: l.from.clone(),
                to: l.to.clone(),
                field,
            });
        }
    }
    Ok((from, to))
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            writeln!(
                f,
                "node {} {} {} {} {}",
                n.id,
                n.address,
                n.kind,
                u8::from(n.gos_capable),
                n.gos_buffer_bytes
            )?;
        }
        for l in &self.links {
            writeln!(f, "link {} {} {} {}", l.from, l.to, l.delay_us, l.capacity_bps)?;
        }
        Ok(())
    }
}

/// Parses the line-oriented topology format:
///
/// ```text
/// # comment
/// node <id> <dotted-quad> <LER|LSR> <gos:0|1> <buffer-bytes>
/// link <from> <to> <delay_us> <capacity_bps>
/// ```
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    // line numbers for re-anchoring validation errors
    let mut node_lines = Vec::new();
    let mut link_lines = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let syntax = |message: String| TopologyError::Syntax { line, message };
        match fields[0] {
            "node" => {
                if fields.len() != 6 {
                    return Err(syntax(format!(
                        "`node` takes 5 fields, found {}",
                        fields.len() - 1
                    )));
                }
                let address = fields[2]
                    .parse::<Ipv4Addr>()
                    .map_err(|_| syntax(format!("bad address `{}`", fields[2])))?;
                let kind = fields[3].parse::<NodeKind>().map_err(syntax)?;
                let gos_capable = match fields[4] {
                    "0" => false,
                    "1" => true,
                    other => return Err(syntax(format!("gos flag must be 0 or 1, got `{other}`"))),
                };
                let gos_buffer_bytes = parse_u64(fields[5], "buffer-bytes").map_err(syntax)?;
                nodes.push(NodeSpec {
                    id: fields[1].to_string(),
                    address,
                    kind,
                    gos_capable,
                    gos_buffer_bytes,
                });
                node_lines.push(line);
            }
            "link" => {
                if fields.len() != 5 {
                    return Err(syntax(format!(
                        "`link` takes 4 fields, found {}",
                        fields.len() - 1
                    )));
                }
                links.push(LinkSpec {
                    from: fields[1].to_string(),
                    to: fields[2].to_string(),
                    delay_us: parse_u64(fields[3], "delay_us").map_err(syntax)?,
                    capacity_bps: parse_u64(fields[4], "capacity_bps").map_err(syntax)?,
                });
                link_lines.push(line);
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }

    // Validate incrementally so errors point at the offending line.
    let mut seen_ids = HashSet::new();
    let mut seen_addrs = HashSet::new();
    for (n, &line) in nodes.iter().zip(&node_lines) {
        let err = validate_node(n).err().or_else(|| {
            if !seen_ids.insert(n.id.as_str()) {
                Some(TopologyError::DuplicateId(n.id.clone()))
            } else if !seen_addrs.insert(n.address) {
                Some(TopologyError::DuplicateAddress(n.address))
            } else {
                None
            }
        });
        if let Some(e) = err {
            return Err(at_line(line, e));
        }
    }
    let index: HashMap<String, NodeIdx> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.clone(), i))
        .collect();
    let mut seen_links = HashSet::new();
    for (l, &line) in links.iter().zip(&link_lines) {
        let ends = resolve_link(&index, l).map_err(|e| at_line(line, e))?;
        if !seen_links.insert(ends) {
            return Err(at_line(
                line,
                TopologyError::DuplicateLink(l.from.clone(), l.to.clone()),
            ));
        }
    }

    Topology::new(nodes, links)
}

fn at_line(line: usize, e: TopologyError) -> TopologyError {
    TopologyError::AtLine {
        line,
        source: Box::new(e),
    }
}

fn parse_u64(s: &str, what: &str) -> Result<u64, String> {
    s.parse::<u64>()
        .map_err(|_| format!("{what} must be a non-negative integer, got `{s}`"))
}

/// Ordered node list of a route with its per-link delays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutePath {
    pub nodes: Vec<NodeIdx>,
    /// `link_delays[l]` is the delay of the link `nodes[l] -> nodes[l + 1]`.
    pub link_delays: Vec<u64>,
    pub total_delay_us: u64,
}

impl RoutePath {
    pub fn new(nodes: Vec<NodeIdx>, link_delays: Vec<u64>) -> Self {
        debug_assert_eq!(nodes.len(), link_delays.len() + 1);
        let total_delay_us = link_delays.iter().sum();
        Self {
            nodes,
            link_delays,
            total_delay_us,
        }
    }

    pub fn hop_count(&self) -> usize {
        self.link_delays.len()
    }

    pub fn position(&self, node: NodeIdx) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    /// Delay of the route segment between positions `from..to` (`from <= to`).
    pub fn segment_delay(&self, from: usize, to: usize) -> u64 {
        self.link_delays[from..to].iter().sum()
    }

    pub fn ingress(&self) -> NodeIdx {
        self.nodes[0]
    }

    pub fn egress(&self) -> NodeIdx {
        *self.nodes.last().expect("route has nodes")
    }
}

/// Minimum-total-delay route from `src` to `dst` (Dijkstra over link delays).
///
/// Ties between equal-delay routes resolve toward lower node indices so the
/// result is stable across runs.
pub fn shortest_delay_path(t: &Topology, src: &str, dst: &str) -> Result<RoutePath, RouteError> {
    let s = t
        .idx(src)
        .ok_or_else(|| RouteError::UnknownNode(src.to_string()))?;
    let d = t
        .idx(dst)
        .ok_or_else(|| RouteError::UnknownNode(dst.to_string()))?;
    if s == d {
        return Err(RouteError::SameEndpoints(src.to_string()));
    }

    let n = t.node_count();
    let mut dist = vec![u64::MAX; n];
    let mut prev: Vec<Option<NodeIdx>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0;
    heap.push(Reverse((0u64, s)));

    while let Some(Reverse((du, u))) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        if u == d {
            break;
        }
        for (li, link) in t.out_links(u) {
            let (_, v) = t.link_ends(li);
            let alt = du + link.delay_us;
            if alt < dist[v] {
                dist[v] = alt;
                prev[v] = Some(u);
                heap.push(Reverse((alt, v)));
            }
        }
    }

    if dist[d] == u64::MAX {
        return Err(RouteError::Unreachable {
            src: src.to_string(),
            dst: dst.to_string(),
        });
    }

    let mut nodes = vec![d];
    let mut cur = d;
    while let Some(p) = prev[cur] {
        nodes.push(p);
        cur = p;
    }
    nodes.reverse();
    let route = t
        .route_from_indices(nodes)
        .expect("dijkstra yields a valid simple route");
    debug_assert_eq!(route.total_delay_us, dist[d]);
    Ok(route)
}

/// The `k` nodes of highest degree; equal degrees resolve by ascending id.
pub fn place_gos_nodes(t: &Topology, k: usize) -> BTreeSet<NodeIdx> {
    let mut ranked: Vec<NodeIdx> = (0..t.node_count()).collect();
    ranked.sort_by(|&a, &b| {
        t.degree(b)
            .cmp(&t.degree(a))
            .then_with(|| t.node(a).id.cmp(&t.node(b).id))
    });
    ranked.into_iter().take(k).collect()
}

pub const ATT_LER_COUNT: usize = 120;
pub const ATT_LSR_COUNT: usize = 30;
pub const ATT_LINK_COUNT: usize = 180;
pub const ATT_MIN_CAPACITY_BPS: u64 = 45_000_000;
pub const ATT_MAX_CAPACITY_BPS: u64 = 2_500_000_000;

// Continental-scale placement area (km) and fibre propagation delay.
const AREA_KM: (f64, f64) = (4_500.0, 2_500.0);
const US_PER_KM: f64 = 5.0;

/// Seeded backbone with 30 LSRs forming a meshed core and 120 LERs each
/// homed on their nearest core router; 180 bidirectional links.
pub fn generate_att_like(seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let place = |rng: &mut ChaCha8Rng| (rng.gen_range(0.0..AREA_KM.0), rng.gen_range(0.0..AREA_KM.1));

    let core_pos: Vec<(f64, f64)> = (0..ATT_LSR_COUNT).map(|_| place(&mut rng)).collect();
    let edge_pos: Vec<(f64, f64)> = (0..ATT_LER_COUNT).map(|_| place(&mut rng)).collect();
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();

    let mut nodes = Vec::with_capacity(ATT_LSR_COUNT + ATT_LER_COUNT);
    for i in 0..ATT_LSR_COUNT {
        nodes.push(NodeSpec {
            id: format!("C{:02}", i + 1),
            address: Ipv4Addr::new(10, 0, 0, (i + 1) as u8),
            kind: NodeKind::Lsr,
            gos_capable: false,
            gos_buffer_bytes: 0,
        });
    }
    for i in 0..ATT_LER_COUNT {
        nodes.push(NodeSpec {
            id: format!("E{:03}", i + 1),
            address: Ipv4Addr::new(10, 1, 0, (i + 1) as u8),
            kind: NodeKind::Ler,
            gos_capable: false,
            gos_buffer_bytes: 0,
        });
    }

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    // Core spanning tree: each router joins its nearest predecessor.
    for i in 1..ATT_LSR_COUNT {
        let j = (0..i)
            .min_by(|&a, &b| dist(core_pos[i], core_pos[a]).total_cmp(&dist(core_pos[i], core_pos[b])))
            .expect("i >= 1");
        pairs.insert(key(i, j));
    }
    // Densify the core with short chords until the mesh has its share of links.
    let core_links = ATT_LINK_COUNT - ATT_LER_COUNT;
    while pairs.len() < core_links {
        let u = rng.gen_range(0..ATT_LSR_COUNT);
        let nearest_free = (0..ATT_LSR_COUNT)
            .filter(|&v| v != u && !pairs.contains(&key(u, v)))
            .min_by(|&a, &b| dist(core_pos[u], core_pos[a]).total_cmp(&dist(core_pos[u], core_pos[b])));
        if let Some(v) = nearest_free {
            pairs.insert(key(u, v));
        }
    }
    // Edge routers home on the closest core router.
    for (e, &p) in edge_pos.iter().enumerate() {
        let c = (0..ATT_LSR_COUNT)
            .min_by(|&a, &b| dist(p, core_pos[a]).total_cmp(&dist(p, core_pos[b])))
            .expect("core is non-empty");
        pairs.insert((c, ATT_LSR_COUNT + e));
    }

    let pos = |i: usize| {
        if i < ATT_LSR_COUNT {
            core_pos[i]
        } else {
            edge_pos[i - ATT_LSR_COUNT]
        }
    };
    let mut links = Vec::with_capacity(2 * pairs.len());
    for &(a, b) in &pairs {
        let delay_us = ((dist(pos(a), pos(b)) * US_PER_KM).round() as u64).max(1);
        let capacity_bps = rng.gen_range(ATT_MIN_CAPACITY_BPS..=ATT_MAX_CAPACITY_BPS);
        for (from, to) in [(a, b), (b, a)] {
            links.push(LinkSpec {
                from: nodes[from].id.clone(),
                to: nodes[to].id.clone(),
                delay_us,
                capacity_bps,
            });
        }
    }

    Topology::new(nodes, links).expect("generator output is valid")
}

/// Bidirectional chain `X1 .. Xn` with uniform delay and capacity, all LSRs
/// except the two LER ends.
pub fn line_topology(len: usize, delay_us: u64, capacity_bps: u64) -> Topology {
    let nodes: Vec<NodeSpec> = (0..len)
        .map(|i| NodeSpec {
            id: format!("X{}", i + 1),
            address: Ipv4Addr::new(10, 0, (i / 250) as u8, (i % 250 + 1) as u8),
            kind: if i == 0 || i + 1 == len {
                NodeKind::Ler
            } else {
                NodeKind::Lsr
            },
            gos_capable: false,
            gos_buffer_bytes: 0,
        })
        .collect();
    let mut links = Vec::new();
    for i in 1..len {
        for (a, b) in [(i - 1, i), (i, i - 1)] {
            links.push(LinkSpec {
                from: nodes[a].id.clone(),
                to: nodes[b].id.clone(),
                delay_us,
                capacity_bps,
            });
        }
    }
    Topology::new(nodes, links).expect("line topology is valid")
}
