//! Discrete-event simulation of GoS flows over a signaled MPLS domain.

pub mod drop;
pub mod metrics;
pub mod scenario;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::{self, CodecError, ControlMessage};
use crate::control_plane::{ControlPlane, Label, SignalingError};
use crate::forwarding::{
    lsp_segment_delay, DataPacket, DataPlane, E2eSender, E2eSink, Emit, ForwardAction, ForwardError,
    PacketOrigin, RecoveryOutcome,
};
use crate::topology::{shortest_delay_path, NodeIdx, NodeKind, RouteError, RoutePath, Topology};

pub use drop::DropModel;
pub use metrics::{ComparisonReport, Conservation, FlowSummary, MetricsSeries, PairedRun, Sample, Trend};
pub use scenario::{
    spacing_positions, Arrivals, DropRate, DropSpec, FlowGenerator, FlowSpec, GosPlacement, InjectedDrop, NodeSelector,
    ScenarioError, ScenarioSpec, TopologySource,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("flow {fec}: {source}")]
    Route {
        fec: u32,
        #[source]
        source: RouteError,
    },
    #[error("flow {fec}: {source}")]
    Signaling {
        fec: u32,
        #[source]
        source: SignalingError,
    },
    #[error(transparent)]
    Forwarding(#[from] ForwardError),
    #[error("control message: {0}")]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timer {
    SendSlot { flow: usize, slot: u64 },
    Rto { flow: usize },
    AckTimeout { node: NodeIdx, attempt: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    PacketArrival { node: NodeIdx, packet: DataPacket },
    /// Encoded GoSReq/GoSAck in transit.
    ControlArrival {
        from: NodeIdx,
        to: NodeIdx,
        bytes: Vec<u8>,
        attempt: usize,
    },
    /// Cumulative transport ack reaching the head end.
    TransportAck { flow: usize, cum: u32 },
    TimerFire(Timer),
    FlowStart(usize),
    FlowStop(usize),
    SampleTick,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    pub time: u64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, seq)
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug)]
struct FlowRun {
    spec: FlowSpec,
    route: RoutePath,
    ingress_label: Label,
    granted_level: u16,
    gos_on_path: usize,
    bits: u64,
    slots: u64,
    sender: E2eSender,
    sink: E2eSink,
    timer_at: Option<u64>,
    stopped: bool,
    dropped: HashSet<u32>,
    drops: u64,
    window_bits: u64,
    /// Gap source for Poisson arrivals.
    gaps: Option<ChaCha8Rng>,
}

impl FlowRun {
    fn slot_time(&self, slot: u64) -> u64 {
        let off = u128::from(slot) * u128::from(self.bits) * 1_000_000 / u128::from(self.spec.rate_bps);
        self.spec.start_us + off as u64
    }

    /// Time of the send opportunity after `slot`, which fired at `now`.
    fn next_slot_time(&mut self, slot: u64, now: u64) -> u64 {
        match &mut self.gaps {
            None => self.slot_time(slot + 1),
            Some(rng) => {
                let mean = self.bits as f64 * 1e6 / self.spec.rate_bps as f64;
                let u: f64 = rng.gen();
                now + (-(1.0 - u).ln() * mean).round() as u64
            }
        }
    }
}

const ARRIVAL_STREAM: u64 = 0x6172_7269_7661_6c73;

/// A resolved scenario: topology with GoS marks, routes and flows.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub topology: Topology,
    pub flows: Vec<(FlowSpec, RoutePath)>,
}

fn route_for(t: &Topology, f: &FlowSpec) -> Result<RoutePath, SimError> {
    let r = match &f.route {
        Some(ids) => {
            let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
            t.route_from_ids(&ids)
        }
        None => shortest_delay_path(t, &f.src, &f.dst),
    };
    r.map_err(|source| SimError::Route { fec: f.fec, source })
}

/// Resolves topology, GoS placement and flows for `seed`.
pub fn prepare(spec: &ScenarioSpec, seed: u64) -> Result<Prepared, SimError> {
    spec.validate()?;
    let base = spec.build_topology()?;
    let mut flows = Vec::new();
    for f in &spec.flows {
        flows.push((f.clone(), route_for(&base, f)?));
    }
    let gos = spec.gos_set(&base, flows.first().map(|(_, r)| r))?;

    if let Some(g) = &spec.flow_generator {
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed.unwrap_or(seed));
        let lers: Vec<NodeIdx> = (0..base.node_count())
            .filter(|&i| base.node(i).kind == NodeKind::Ler)
            .collect();
        let mut fec = flows.iter().map(|(f, _)| f.fec).max().unwrap_or(0) + 1;
        for _ in 0..g.count {
            let mut found = None;
            for _ in 0..10_000 {
                let s = lers[rng.gen_range(0..lers.len())];
                let d = lers[rng.gen_range(0..lers.len())];
                if s == d {
                    continue;
                }
                let Ok(r) = shortest_delay_path(&base, &base.node(s).id, &base.node(d).id) else {
                    continue;
                };
                if r.nodes.iter().filter(|n| gos.contains(n)).count() >= g.min_gos_nodes {
                    found = Some((s, d, r));
                    break;
                }
            }
            let (s, d, r) = found.ok_or_else(|| ScenarioError::Invalid {
                path: "flow_generator.min_gos_nodes".into(),
                message: format!("no LER pair found whose route crosses {} GoS nodes", g.min_gos_nodes),
            })?;
            let rate = rng.gen_range(g.rate_min_bps..=g.rate_max_bps);
            flows.push((
                FlowSpec {
                    fec,
                    src: base.node(s).id.clone(),
                    dst: base.node(d).id.clone(),
                    rate_bps: rate,
                    packet_size_bytes: g.packet_size_bytes,
                    level: g.level,
                    start_us: 0,
                    stop_us: spec.duration_us,
                    route: None,
                },
                r,
            ));
            fec += 1;
        }
    }

    let topology = if !spec.gos_enabled {
        base.with_gos_nodes(&Default::default(), 0)
    } else if spec.gos_nodes == GosPlacement::FromTopology {
        base
    } else {
        base.with_gos_nodes(&gos, spec.gos_buffer_bytes)
    };
    Ok(Prepared { topology, flows })
}

struct Engine<'a> {
    spec: &'a ScenarioSpec,
    topo: Topology,
    cp: ControlPlane,
    dp: DataPlane,
    drop: DropModel,
    queue: BinaryHeap<SimEvent>,
    seq: u64,
    now: u64,
    flows: Vec<FlowRun>,
    fec_index: HashMap<u32, usize>,
    passes: HashMap<(NodeIdx, u32, u32), u32>,
    link_busy: Vec<u64>,
    samples: Vec<Sample>,
    conservation: Conservation,
    buffer_violations: u64,
    time_regressions: u64,
    events: u64,
    trace: Option<Vec<String>>,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a ScenarioSpec, seed: u64, trace: bool) -> Result<Self, SimError> {
        let Prepared { topology, flows } = prepare(spec, seed)?;
        let mut cp = ControlPlane::new(&topology);
        let mut runs = Vec::with_capacity(flows.len());
        let mut fec_index = HashMap::new();
        for (f, route) in flows {
            let lsp = cp
                .signal_lsp(&topology, &route, f.fec, f.level)
                .map_err(|source| SimError::Signaling { fec: f.fec, source })?;
            let bits = u64::from(f.packet_size_bytes) * 8;
            let span = u128::from(f.stop_us - f.start_us) * u128::from(f.rate_bps);
            let slots = span.div_ceil(u128::from(bits) * 1_000_000) as u64;
            let rtt = 2 * route.total_delay_us;
            let interval = (bits * 1_000_000 / f.rate_bps).max(1);
            let window = spec
                .e2e_window
                .unwrap_or_else(|| E2eSender::default_window(rtt, interval));
            fec_index.insert(f.fec, runs.len());
            runs.push(FlowRun {
                ingress_label: lsp.ingress_label,
                granted_level: lsp.level.value(),
                gos_on_path: lsp.gosp.len(),
                route,
                bits,
                slots,
                sender: E2eSender::new(window, rtt),
                sink: E2eSink::default(),
                timer_at: None,
                stopped: false,
                dropped: HashSet::new(),
                drops: 0,
                window_bits: 0,
                gaps: (spec.arrivals == Arrivals::Poisson)
                    .then(|| ChaCha8Rng::seed_from_u64(seed ^ ARRIVAL_STREAM ^ (u64::from(f.fec) << 20))),
                spec: f,
            });
        }
        // signaling messages are not part of the data-plane run
        cp.take_transcript();
        let mut dp = DataPlane::with_reorder_window(&topology, spec.reorder_window);
        dp.refresh_quotas(&cp);
        if trace {
            dp.enable_trace();
        }
        let drop = DropModel::new(&spec.drop, &topology, seed);
        let links = topology.links().len();
        Ok(Self {
            spec,
            topo: topology,
            cp,
            dp,
            drop,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            flows: runs,
            fec_index,
            passes: HashMap::new(),
            link_busy: vec![0; links],
            samples: Vec::new(),
            conservation: Conservation::default(),
            buffer_violations: 0,
            time_regressions: 0,
            events: 0,
            trace: trace.then(Vec::new),
        })
    }

    fn schedule(&mut self, time: u64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(SimEvent { time, seq, kind });
    }

    fn trace(&mut self, node: NodeIdx, ev: &str, fec: u32, pid: u32, detail: impl std::fmt::Display) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(format!(
                "t={} node={} ev={} fec={} pid={} detail={}",
                self.now,
                self.topo.node(node).id,
                ev,
                fec,
                pid,
                detail
            ));
        }
    }

    fn flush_dp_trace(&mut self) {
        if let Some(trace) = &mut self.trace {
            for e in self.dp.take_trace() {
                trace.push(format!(
                    "t={} node={} ev={} fec={} pid={} detail={}",
                    e.t,
                    self.topo.node(e.node).id,
                    e.ev,
                    e.fec,
                    e.pid,
                    e.detail
                ));
            }
        }
    }

    fn run(mut self) -> Result<(MetricsSeries, Vec<String>), SimError> {
        for i in 0..self.flows.len() {
            let (start, stop) = (self.flows[i].spec.start_us, self.flows[i].spec.stop_us);
            self.schedule(start, EventKind::FlowStart(i));
            self.schedule(stop, EventKind::FlowStop(i));
        }
        self.schedule(self.spec.sample_interval_us, EventKind::SampleTick);

        while let Some(ev) = self.queue.pop() {
            if ev.time > self.spec.duration_us {
                self.queue.push(ev);
                break;
            }
            if ev.time < self.now {
                self.time_regressions += 1;
            }
            self.now = ev.time;
            self.events += 1;
            self.dispatch(ev.kind)?;
            self.flush_dp_trace();
        }
        Ok(self.finish())
    }

    fn dispatch(&mut self, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::PacketArrival { node, packet } => self.on_packet(node, packet),
            EventKind::ControlArrival {
                from,
                to,
                bytes,
                attempt,
            } => self.on_control(from, to, &bytes, attempt),
            EventKind::TransportAck { flow, cum } => {
                self.flows[flow].sender.on_ack(cum, self.now);
                self.arm(flow);
                Ok(())
            }
            EventKind::TimerFire(Timer::SendSlot { flow, slot }) => self.on_slot(flow, slot),
            EventKind::TimerFire(Timer::Rto { flow }) => self.on_rto(flow),
            EventKind::TimerFire(Timer::AckTimeout { node, attempt }) => {
                self.dp.on_ack_timeout(node, attempt)?;
                Ok(())
            }
            EventKind::FlowStart(flow) => self.on_slot(flow, 0),
            EventKind::FlowStop(flow) => {
                self.flows[flow].stopped = true;
                Ok(())
            }
            EventKind::SampleTick => {
                self.sample();
                let next = self.now + self.spec.sample_interval_us;
                if next <= self.spec.duration_us {
                    self.schedule(next, EventKind::SampleTick);
                }
                Ok(())
            }
        }
    }

    fn on_slot(&mut self, fi: usize, slot: u64) -> Result<(), SimError> {
        let f = &mut self.flows[fi];
        if f.stopped || slot >= f.slots {
            return Ok(());
        }
        if let Some(pid) = f.sender.send_new(self.now) {
            let pkt = DataPacket::new(f.ingress_label, f.spec.fec, pid, f.spec.packet_size_bytes, self.now);
            let ingress = f.route.ingress();
            self.on_packet(ingress, pkt)?;
            self.arm(fi);
        }
        let now = self.now;
        let f = &mut self.flows[fi];
        if slot + 1 < f.slots {
            let t = f.next_slot_time(slot, now);
            self.schedule(t, EventKind::TimerFire(Timer::SendSlot { flow: fi, slot: slot + 1 }));
        }
        Ok(())
    }

    fn on_rto(&mut self, fi: usize) -> Result<(), SimError> {
        self.flows[fi].timer_at = None;
        let retx = self.flows[fi].sender.e2e_transport_step(self.now);
        for pid in retx {
            let f = &self.flows[fi];
            let mut pkt = DataPacket::new(f.ingress_label, f.spec.fec, pid, f.spec.packet_size_bytes, self.now);
            pkt.origin = PacketOrigin::HeadEnd;
            let ingress = f.route.ingress();
            self.trace(ingress, "head_end_retx", f.spec.fec, pid, "rto");
            self.on_packet(ingress, pkt)?;
        }
        self.arm(fi);
        Ok(())
    }

    fn arm(&mut self, fi: usize) {
        let f = &mut self.flows[fi];
        if f.timer_at.is_some() {
            return;
        }
        if let Some(d) = f.sender.next_deadline() {
            let at = d.max(self.now + 1);
            f.timer_at = Some(at);
            self.schedule(at, EventKind::TimerFire(Timer::Rto { flow: fi }));
        }
    }

    fn link_arrival(&mut self, from: NodeIdx, to: NodeIdx, bits: u64) -> u64 {
        let li = self
            .topo
            .link_between(from, to)
            .expect("LSP hops follow topology links");
        let link = &self.topo.links()[li];
        if self.drop.queue_capacity().is_some() {
            let tx = (bits * 1_000_000 / link.capacity_bps).max(1);
            let start = self.link_busy[li].max(self.now);
            self.link_busy[li] = start + tx;
            start + tx + link.delay_us
        } else {
            self.now + link.delay_us
        }
    }

    fn queue_full(&self, node: NodeIdx, label: Label, bits: u64) -> bool {
        let Some(cap) = self.drop.queue_capacity() else {
            return false;
        };
        let Some(next) = self.cp.fib_lookup(node, label).and_then(|e| e.next_hop) else {
            return false;
        };
        let li = self.topo.link_between(node, next).expect("FIB follows links");
        let tx = (bits * 1_000_000 / self.topo.links()[li].capacity_bps).max(1);
        let backlog = self.link_busy[li].saturating_sub(self.now).div_ceil(tx);
        backlog >= cap as u64
    }

    fn on_packet(&mut self, node: NodeIdx, mut pkt: DataPacket) -> Result<(), SimError> {
        let Some(&fi) = self.fec_index.get(&pkt.fec) else {
            return Ok(());
        };
        let key = (node, pkt.fec, pkt.packet_id);
        let pass = self.passes.entry(key).or_insert(0);
        let this_pass = *pass;
        *pass += 1;
        let bits = self.flows[fi].bits;
        let congested = self.drop.drops(node, pkt.fec, pkt.packet_id, this_pass)
            || self.queue_full(node, pkt.label, bits);

        let (action, emits) = match self.dp.forward_packet(&self.cp, node, &mut pkt, congested, self.now) {
            Ok(r) => r,
            Err(ForwardError::Misrouted { .. }) => {
                self.trace(node, "misrouted", pkt.fec, pkt.packet_id, pkt.label);
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        match action {
            ForwardAction::Forwarded(next) => {
                let at = self.link_arrival(node, next, bits);
                self.schedule(at, EventKind::PacketArrival { node: next, packet: pkt });
            }
            ForwardAction::Dropped => {
                let f = &mut self.flows[fi];
                f.dropped.insert(pkt.packet_id);
                f.drops += 1;
            }
            ForwardAction::Delivered => {
                let f = &mut self.flows[fi];
                let r = f.sink.receive(pkt.packet_id);
                f.window_bits += u64::from(r.newly_in_order) * f.bits;
                let back = self.now + f.route.total_delay_us;
                let detail = if r.duplicate { "duplicate" } else { "new" };
                self.trace(node, "deliver", pkt.fec, pkt.packet_id, detail);
                self.schedule(back, EventKind::TransportAck { flow: fi, cum: r.cum_ack });
            }
        }
        self.apply(emits);
        Ok(())
    }

    fn apply(&mut self, emits: Vec<Emit>) {
        for e in emits {
            match e {
                Emit::Control { from, to, msg, attempt } => {
                    let fec = match msg {
                        ControlMessage::HelloReq { gos_req: Some(r), .. } => r.flow_id,
                        ControlMessage::HelloAck { gos_ack: Some(a), .. } => a.flow_id,
                        _ => 0,
                    };
                    let delay = lsp_segment_delay(&self.cp, fec, from, to).unwrap_or(1).max(1);
                    let bytes = codec::encode(&msg);
                    self.schedule(self.now + delay, EventKind::ControlArrival { from, to, bytes, attempt });
                }
                Emit::Data { from, to, packet } => {
                    let bits = u64::from(packet.size_bytes) * 8;
                    let at = self.link_arrival(from, to, bits);
                    self.schedule(at, EventKind::PacketArrival { node: to, packet });
                }
                Emit::AckTimeout { node, attempt, after_us } => {
                    self.schedule(
                        self.now + after_us,
                        EventKind::TimerFire(Timer::AckTimeout { node, attempt }),
                    );
                }
            }
        }
    }

    fn on_control(&mut self, from: NodeIdx, to: NodeIdx, bytes: &[u8], attempt: usize) -> Result<(), SimError> {
        match codec::decode(bytes)? {
            ControlMessage::HelloReq { gos_req: Some(r), .. } => {
                let emits = self.dp.handle_gos_req(&self.cp, to, from, r, attempt, self.now)?;
                self.apply(emits);
            }
            ControlMessage::HelloAck { gos_ack: Some(a), .. } => {
                self.dp.handle_gos_ack(to, a, attempt, self.now)?;
            }
            _ => {}
        }
        Ok(())
    }

    fn sample(&mut self) {
        let secs = self.spec.sample_interval_us as f64 / 1e6;
        let mut s = Sample {
            t_us: self.now,
            throughput_bps: Vec::with_capacity(self.flows.len()),
            delivered_fraction: Vec::with_capacity(self.flows.len()),
            head_end_loss: Vec::with_capacity(self.flows.len()),
            total_throughput_bps: 0.0,
            total_delivered_fraction: 0.0,
            total_head_end_loss: 0.0,
        };
        let (mut delivered, mut slots, mut retx, mut emitted) = (0u64, 0u64, 0u64, 0u64);
        for f in &mut self.flows {
            let bps = f.window_bits as f64 / secs;
            f.window_bits = 0;
            s.throughput_bps.push(bps);
            s.total_throughput_bps += bps;
            let d = u64::from(f.sink.in_order());
            s.delivered_fraction.push(metrics::ratio(d, f.slots));
            let (r, e) = (f.sender.retransmissions(), u64::from(f.sender.emitted()));
            s.head_end_loss.push(metrics::ratio(r, e));
            delivered += d;
            slots += f.slots;
            retx += r;
            emitted += e;
        }
        s.total_delivered_fraction = metrics::ratio(delivered, slots);
        s.total_head_end_loss = metrics::ratio(retx, emitted);
        self.samples.push(s);

        self.check_conservation();
        if let Err(e) = self.dp.check_buffers() {
            self.buffer_violations += 1;
            self.trace(0, "buffer_invariant", 0, 0, e);
        }
    }

    /// Every emitted packet must be delivered, in flight, buffered
    /// somewhere, or have been dropped.
    fn check_conservation(&mut self) {
        let in_flight: HashSet<(u32, u32)> = self
            .queue
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::PacketArrival { packet, .. } => Some((packet.fec, packet.packet_id)),
                _ => None,
            })
            .collect();
        let buffered: HashSet<(u32, u32)> = self.dp.buffered_ids().collect();
        self.conservation.ticks_checked += 1;
        for f in &self.flows {
            let fec = f.spec.fec;
            for pid in f.sink.in_order()..f.sender.emitted() {
                let ok = f.sink.has(pid)
                    || in_flight.contains(&(fec, pid))
                    || buffered.contains(&(fec, pid))
                    || f.dropped.contains(&pid);
                if !ok {
                    self.conservation.violations += 1;
                    self.conservation.first_violation.get_or_insert_with(|| {
                        format!("t={} fec={fec} pid={pid} unaccounted", self.now)
                    });
                }
            }
        }
    }

    fn finish(mut self) -> (MetricsSeries, Vec<String>) {
        let mut diameters = BTreeMap::new();
        let (mut exhausted, mut unresolved) = (0, 0);
        let mut latencies = Vec::new();
        for r in self.dp.records() {
            match r.outcome {
                Some(RecoveryOutcome::Recovered(d)) => {
                    *diameters.entry(d).or_insert(0u64) += 1;
                    if let Some(l) = r.latency {
                        latencies.push(l);
                    }
                }
                Some(RecoveryOutcome::Exhausted) => exhausted += 1,
                None => unresolved += 1,
            }
        }
        let flows = self
            .flows
            .iter()
            .map(|f| FlowSummary {
                fec: f.spec.fec,
                src: f.spec.src.clone(),
                dst: f.spec.dst.clone(),
                hops: f.route.hop_count(),
                gos_nodes_on_path: f.gos_on_path,
                granted_level: f.granted_level,
                rate_bps: f.spec.rate_bps,
                slots: f.slots,
                emitted: u64::from(f.sender.emitted()),
                delivered_in_order: u64::from(f.sink.in_order()),
                received: f.sink.received(),
                duplicates: f.sink.duplicates(),
                drops: f.drops,
                head_end_retransmissions: f.sender.retransmissions(),
            })
            .collect();
        self.flush_dp_trace();
        let m = MetricsSeries {
            seed: 0,
            flows,
            samples: std::mem::take(&mut self.samples),
            diameters,
            exhausted,
            unresolved,
            recovery_latencies_us: latencies,
            conservation: std::mem::take(&mut self.conservation),
            buffer_violations: self.buffer_violations,
            time_regressions: self.time_regressions,
            events: self.events,
            misrouted: self.dp.misrouted(),
            ack_timeouts: self.dp.ack_timeouts(),
        };
        (m, self.trace.take().unwrap_or_default())
    }
}

/// Runs `spec` once. Identical `(spec, seed)` give identical results.
pub fn run_scenario(spec: &ScenarioSpec, seed: u64) -> Result<MetricsSeries, SimError> {
    run_scenario_traced(spec, seed, false).map(|(m, _)| m)
}

/// Like [`run_scenario`], also returning the event trace when `trace` is set.
pub fn run_scenario_traced(spec: &ScenarioSpec, seed: u64, trace: bool) -> Result<(MetricsSeries, Vec<String>), SimError> {
    let (mut m, t) = Engine::new(spec, seed, trace)?.run()?;
    m.seed = seed;
    Ok((m, t))
}

/// Runs `spec` with GoS enabled and disabled under the same seed.
pub fn run_pair(spec: &ScenarioSpec, seed: u64) -> Result<(MetricsSeries, MetricsSeries), SimError> {
    let mut on = spec.clone();
    on.gos_enabled = true;
    let mut off = spec.clone();
    off.gos_enabled = false;
    Ok((run_scenario(&on, seed)?, run_scenario(&off, seed)?))
}

pub fn compare_gos_vs_e2e(spec: &ScenarioSpec, seeds: &[u64]) -> Result<ComparisonReport, SimError> {
    let mut pairs = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let (g, e) = run_pair(spec, s)?;
        pairs.push((s, g, e));
    }
    Ok(ComparisonReport::from_pairs(pairs))
}

/// Single-flow scenario along `route` with GoS on every `k`-th route node,
/// Bernoulli drops of 1% on interior route nodes, 60 s.
pub fn diameter_spacing_scenario(t: &Topology, route: &RoutePath, k: usize) -> Result<ScenarioSpec, ScenarioError> {
    let positions = spacing_positions(route.nodes.len(), k).map_err(|message| ScenarioError::Invalid {
        path: "gos_nodes.k".into(),
        message,
    })?;
    let ids: Vec<String> = route.nodes.iter().map(|&n| t.node(n).id.clone()).collect();
    let bare = t.with_gos_nodes(&Default::default(), 0);
    let spec = ScenarioSpec {
        topology: TopologySource::Text(bare.to_string()),
        gos_nodes: GosPlacement::List(positions.iter().map(|&p| ids[p].clone()).collect()),
        gos_buffer_bytes: scenario::DEFAULT_BUFFER_BYTES,
        flows: vec![FlowSpec {
            fec: 1,
            src: ids[0].clone(),
            dst: ids[ids.len() - 1].clone(),
            rate_bps: scenario::MAX_RATE_BPS,
            packet_size_bytes: scenario::DEFAULT_PACKET_BYTES,
            level: crate::codec::GosLevel(2),
            start_us: 0,
            stop_us: 60_000_000,
            route: Some(ids.clone()),
        }],
        flow_generator: None,
        drop: DropSpec::Bernoulli {
            rate: DropRate::Fixed(0.01),
            nodes: NodeSelector::List(ids[1..ids.len() - 1].to_vec()),
        },
        duration_us: 60_000_000,
        sample_interval_us: 1_000_000,
        gos_enabled: true,
        reorder_window: crate::forwarding::DEFAULT_REORDER_WINDOW,
        e2e_window: None,
        arrivals: Arrivals::Paced,
    };
    spec.validate()?;
    Ok(spec)
}
