//! Data plane: label switching, GoS buffering, loss detection and local
//! recovery.
//!
//! [`DataPlane`] does no scheduling of its own. Each handler returns the
//! messages, packets and timers it produced as [`Emit`] values and the
//! caller decides when they arrive.

pub mod buffer;
pub mod fsm;
pub mod gap;
pub mod transport;

use std::collections::{BTreeMap, HashMap};
use std::net::Ipv4Addr;

use thiserror::Error;

use crate::codec::{ControlMessage, GosAckObject, GosReqObject};
use crate::control_plane::{ControlPlane, Label};
use crate::topology::{NodeIdx, Topology};

pub use buffer::{GosBuffer, InsertOutcome};
pub use fsm::{step, GosEvent, GosState, IllegalTransition, TRANSITIONS};
pub use gap::{GapTracker, DEFAULT_REORDER_WINDOW};
pub use transport::{E2eSender, E2eSink, SinkReceipt};

/// How long a requester waits for a GoSAck, in multiples of the one-hop
/// round trip to its GoSP PHOP.
pub const ACK_TIMEOUT_RTTS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketOrigin {
    /// First transmission by the head end.
    First,
    /// Head-end retransmission.
    HeadEnd,
    /// Locally recovered copy re-forwarded by this GoS node.
    Local(NodeIdx),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPacket {
    pub label: Label,
    pub fec: u32,
    pub packet_id: u32,
    pub size_bytes: u32,
    pub created_at: u64,
    pub origin: PacketOrigin,
}

impl DataPacket {
    pub fn new(label: Label, fec: u32, packet_id: u32, size_bytes: u32, created_at: u64) -> Self {
        Self {
            label,
            fec,
            packet_id,
            size_bytes,
            created_at,
            origin: PacketOrigin::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardAction {
    Forwarded(NodeIdx),
    Dropped,
    Delivered,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForwardError {
    #[error("no FIB entry for label {label} at node {node}")]
    Misrouted { node: NodeIdx, label: Label },
    #[error("node {0} is not GoS-capable")]
    NotGosCapable(NodeIdx),
    #[error("node {node} has no GoS Table row for privileged FEC {fec}")]
    NoGosRow { node: NodeIdx, fec: u32 },
    #[error("GoSP PHOP {0} is not a known node")]
    UnknownPhop(Ipv4Addr),
    #[error(transparent)]
    Fsm(#[from] IllegalTransition),
}

/// Something a handler wants delivered later.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Emit {
    Control {
        from: NodeIdx,
        to: NodeIdx,
        msg: ControlMessage,
        attempt: usize,
    },
    Data {
        from: NodeIdx,
        to: NodeIdx,
        packet: DataPacket,
    },
    AckTimeout {
        node: NodeIdx,
        attempt: usize,
        after_us: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecoveryOutcome {
    Recovered(u32),
    Exhausted,
}

/// One loss and everything done to repair it locally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryRecord {
    pub fec: u32,
    pub packet_id: u32,
    /// Node that dropped the packet or declared it missing.
    pub loss_node: NodeIdx,
    pub started_at: u64,
    pub outcome: Option<RecoveryOutcome>,
    /// Time from detection until the recovered copy reached `loss_node`.
    pub latency: Option<u64>,
    pub requests: u32,
    pub acks: u32,
    pub found_acks: u32,
    /// GoSP nodes upstream of `loss_node` on this LSP.
    pub upstream_gosp: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlowWindow {
    pub incoming: u64,
    pub outgoing: u64,
}

/// Flow-conservation check over one measurement window: violated when more
/// packets entered than left.
pub fn congestion_check(incoming: u64, outgoing: u64) -> bool {
    incoming > outgoing
}

/// Delay along the LSP of `fec` between two of its nodes, in either order.
pub fn lsp_segment_delay(cp: &ControlPlane, fec: u32, a: NodeIdx, b: NodeIdx) -> Option<u64> {
    let route = &cp.lsp(fec)?.route;
    let (pa, pb) = (route.position(a)?, route.position(b)?);
    Some(route.segment_delay(pa.min(pb), pa.max(pb)))
}

/// One trace line, minus the timestamp formatting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub t: u64,
    pub node: NodeIdx,
    pub ev: &'static str,
    pub fec: u32,
    pub pid: u32,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
struct Context {
    state: GosState,
}

#[derive(Debug, Clone)]
struct NodeData {
    gos_capable: bool,
    buffer: GosBuffer,
    gaps: HashMap<u32, GapTracker>,
    // keyed by recovery attempt
    contexts: BTreeMap<usize, Context>,
    window: FlowWindow,
}

#[derive(Debug, Clone)]
pub struct DataPlane {
    nodes: Vec<NodeData>,
    by_address: HashMap<Ipv4Addr, NodeIdx>,
    reorder_window: u32,
    records: Vec<RecoveryRecord>,
    // (node, fec, pid) -> attempts waiting for that packet to come back
    awaiting: HashMap<(NodeIdx, u32, u32), Vec<usize>>,
    transitions: BTreeMap<(GosState, GosEvent, GosState), u64>,
    misrouted: u64,
    ack_timeouts: u64,
    trace: Option<Vec<TraceEvent>>,
}

impl DataPlane {
    pub fn new(t: &Topology) -> Self {
        Self::with_reorder_window(t, DEFAULT_REORDER_WINDOW)
    }

    pub fn with_reorder_window(t: &Topology, reorder_window: u32) -> Self {
        let nodes = t
            .nodes()
            .iter()
            .map(|n| NodeData {
                gos_capable: n.gos_capable,
                buffer: GosBuffer::new(n.gos_buffer_bytes),
                gaps: HashMap::new(),
                contexts: BTreeMap::new(),
                window: FlowWindow::default(),
            })
            .collect();
        let by_address = t
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.address, i))
            .collect();
        Self {
            nodes,
            by_address,
            reorder_window,
            records: Vec::new(),
            awaiting: HashMap::new(),
            transitions: BTreeMap::new(),
            misrouted: 0,
            ack_timeouts: 0,
            trace: None,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn trace_event(&mut self, t: u64, node: NodeIdx, ev: &'static str, fec: u32, pid: u32, detail: impl Into<String>) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TraceEvent {
                t,
                node,
                ev,
                fec,
                pid,
                detail: detail.into(),
            });
        }
    }

    /// Recomputes every buffer's per-flow quotas from the GoS Tables.
    /// Returns the `(node, fec, packet_id)` copies evicted by shrinking quotas.
    pub fn refresh_quotas(&mut self, cp: &ControlPlane) -> Vec<(NodeIdx, u32, u32)> {
        let mut evicted = Vec::new();
        for (i, n) in self.nodes.iter_mut().enumerate() {
            if n.gos_capable {
                let flows = cp.privileged_flows_at(i);
                for (fec, pid) in n.buffer.set_quotas(&flows) {
                    evicted.push((i, fec, pid));
                }
                n.gaps.retain(|fec, _| flows.iter().any(|(f, _)| f == fec));
            }
        }
        evicted
    }

    pub fn buffer(&self, node: NodeIdx) -> &GosBuffer {
        &self.nodes[node].buffer
    }

    pub fn buffer_insert(&mut self, node: NodeIdx, pkt: &DataPacket) -> InsertOutcome {
        self.nodes[node].buffer.insert(pkt)
    }

    pub fn buffer_lookup(&self, node: NodeIdx, fec: u32, packet_id: u32) -> Option<&DataPacket> {
        self.nodes[node].buffer.lookup(fec, packet_id)
    }

    pub fn buffer_evict(&mut self, node: NodeIdx, fec: u32) -> Option<DataPacket> {
        self.nodes[node].buffer.evict(fec)
    }

    pub fn records(&self) -> &[RecoveryRecord] {
        &self.records
    }

    /// Every transition taken so far, with counts.
    pub fn transitions(&self) -> &BTreeMap<(GosState, GosEvent, GosState), u64> {
        &self.transitions
    }

    pub fn misrouted(&self) -> u64 {
        self.misrouted
    }

    pub fn ack_timeouts(&self) -> u64 {
        self.ack_timeouts
    }

    pub fn window(&self, node: NodeIdx) -> FlowWindow {
        self.nodes[node].window
    }

    /// Returns and clears the node's ingress/egress counters.
    pub fn take_window(&mut self, node: NodeIdx) -> FlowWindow {
        std::mem::take(&mut self.nodes[node].window)
    }

    /// Recoveries still running at `node`.
    pub fn active_contexts(&self, node: NodeIdx) -> impl Iterator<Item = (usize, GosState)> + '_ {
        self.nodes[node].contexts.iter().map(|(&a, c)| (a, c.state))
    }

    fn transition(&mut self, node: NodeIdx, attempt: usize, event: GosEvent) -> Result<GosState, ForwardError> {
        let ctx = self.nodes[node]
            .contexts
            .entry(attempt)
            .or_insert(Context {
                state: GosState::DataForwarding,
            });
        let from = ctx.state;
        let to = step(from, event)?;
        ctx.state = to;
        if to == GosState::DataForwarding {
            self.nodes[node].contexts.remove(&attempt);
        }
        *self.transitions.entry((from, event, to)).or_default() += 1;
        Ok(to)
    }

    fn phop_of(&self, cp: &ControlPlane, node: NodeIdx, fec: u32) -> Result<Option<NodeIdx>, ForwardError> {
        let row = cp
            .gos_table_lookup(node, fec)
            .ok_or(ForwardError::NoGosRow { node, fec })?;
        if !row.has_upstream() {
            return Ok(None);
        }
        self.by_address
            .get(&row.gosp_phop)
            .copied()
            .map(Some)
            .ok_or(ForwardError::UnknownPhop(row.gosp_phop))
    }

    fn privileged_here(&self, cp: &ControlPlane, node: NodeIdx, fec: u32) -> bool {
        self.nodes[node].gos_capable && cp.lsp(fec).is_some_and(|l| l.is_privileged())
    }

    fn one_hop_rtt(cp: &ControlPlane, fec: u32, a: NodeIdx, b: NodeIdx) -> u64 {
        2 * lsp_segment_delay(cp, fec, a, b).unwrap_or(1).max(1)
    }

    fn request(
        &mut self,
        cp: &ControlPlane,
        from: NodeIdx,
        to: NodeIdx,
        attempt: usize,
        now: u64,
    ) -> Vec<Emit> {
        let rec = &mut self.records[attempt];
        rec.requests += 1;
        let (fec, pid) = (rec.fec, rec.packet_id);
        self.trace_event(now, from, "gos_req", fec, pid, format!("to={to} attempt={attempt}"));
        vec![
            Emit::Control {
                from,
                to,
                msg: ControlMessage::HelloReq {
                    src_instance: from as u32 + 1,
                    dst_instance: to as u32 + 1,
                    gos_req: Some(GosReqObject {
                        flow_id: fec,
                        packet_id: pid,
                    }),
                },
                attempt,
            },
            Emit::AckTimeout {
                node: from,
                attempt,
                after_us: ACK_TIMEOUT_RTTS * Self::one_hop_rtt(cp, fec, from, to),
            },
        ]
    }

    fn finish(&mut self, attempt: usize, outcome: RecoveryOutcome, now: u64) {
        let rec = &mut self.records[attempt];
        if rec.outcome.is_none() {
            rec.outcome = Some(outcome);
        }
        let (node, fec, pid) = (rec.loss_node, rec.fec, rec.packet_id);
        let detail = format!("attempt={attempt} outcome={outcome:?}");
        self.trace_event(now, node, "recovery", fec, pid, detail);
    }

    /// Opens a recovery for a packet lost at (or detected missing by) `node`.
    fn start_recovery(
        &mut self,
        cp: &ControlPlane,
        node: NodeIdx,
        fec: u32,
        pid: u32,
        now: u64,
    ) -> Result<Vec<Emit>, ForwardError> {
        let phop = self.phop_of(cp, node, fec)?;
        let upstream_gosp = cp
            .lsp(fec)
            .and_then(|l| l.gosp.iter().position(|&g| g == node))
            .unwrap_or(0) as u32;
        let attempt = self.records.len();
        self.records.push(RecoveryRecord {
            fec,
            packet_id: pid,
            loss_node: node,
            started_at: now,
            outcome: None,
            latency: None,
            requests: 0,
            acks: 0,
            found_acks: 0,
            upstream_gosp,
        });
        self.transition(node, attempt, GosEvent::LossDetected)?;
        match phop {
            Some(up) => {
                self.awaiting.entry((node, fec, pid)).or_default().push(attempt);
                Ok(self.request(cp, node, up, attempt, now))
            }
            None => {
                self.transition(node, attempt, GosEvent::NoUpstream)?;
                self.finish(attempt, RecoveryOutcome::Exhausted, now);
                Ok(Vec::new())
            }
        }
    }

    /// Switches `pkt` at `node`. `congested` is the drop model's verdict for
    /// this traversal.
    pub fn forward_packet(
        &mut self,
        cp: &ControlPlane,
        node: NodeIdx,
        pkt: &mut DataPacket,
        congested: bool,
        now: u64,
    ) -> Result<(ForwardAction, Vec<Emit>), ForwardError> {
        let Some(entry) = cp.fib_lookup(node, pkt.label).copied() else {
            self.misrouted += 1;
            return Err(ForwardError::Misrouted {
                node,
                label: pkt.label,
            });
        };
        self.nodes[node].window.incoming += 1;

        if let Some(attempts) = self.awaiting.remove(&(node, pkt.fec, pkt.packet_id)) {
            for a in attempts {
                let rec = &mut self.records[a];
                rec.latency.get_or_insert(now - rec.started_at);
            }
        }

        if congested {
            self.trace_event(now, node, "drop", pkt.fec, pkt.packet_id, format!("{:?}", pkt.origin));
            let emits = self.on_packet_drop(cp, node, pkt, now)?;
            return Ok((ForwardAction::Dropped, emits));
        }

        let mut emits = Vec::new();
        if self.privileged_here(cp, node, pkt.fec) {
            let window = self.reorder_window;
            let declared = self.nodes[node]
                .gaps
                .entry(pkt.fec)
                .or_insert_with(|| GapTracker::new(window))
                .observe(pkt.packet_id);
            for missing in declared {
                self.trace_event(now, node, "gap", pkt.fec, missing, "declared missing");
                emits.extend(self.start_recovery(cp, node, pkt.fec, missing, now)?);
            }
            self.nodes[node].buffer.insert(pkt);
        }

        self.nodes[node].window.outgoing += 1;
        match (entry.out_label, entry.next_hop) {
            (Some(out), Some(next)) => {
                pkt.label = out;
                Ok((ForwardAction::Forwarded(next), emits))
            }
            _ => Ok((ForwardAction::Delivered, emits)),
        }
    }

    /// Reacts to a packet dropped at `node`: a GoS node on a privileged LSP
    /// asks its GoSP PHOP for a copy. Anything else is left to the
    /// end-to-end transport.
    pub fn on_packet_drop(
        &mut self,
        cp: &ControlPlane,
        node: NodeIdx,
        pkt: &DataPacket,
        now: u64,
    ) -> Result<Vec<Emit>, ForwardError> {
        if !self.privileged_here(cp, node, pkt.fec) {
            return Ok(Vec::new());
        }
        let window = self.reorder_window;
        self.nodes[node]
            .gaps
            .entry(pkt.fec)
            .or_insert_with(|| GapTracker::new(window))
            .mark_handled(pkt.packet_id);
        self.start_recovery(cp, node, pkt.fec, pkt.packet_id, now)
    }

    /// Answers a GoSReq that `requester` sent to `node` for `attempt`.
    pub fn handle_gos_req(
        &mut self,
        cp: &ControlPlane,
        node: NodeIdx,
        requester: NodeIdx,
        req: GosReqObject,
        attempt: usize,
        now: u64,
    ) -> Result<Vec<Emit>, ForwardError> {
        if !self.nodes[node].gos_capable {
            return Err(ForwardError::NotGosCapable(node));
        }
        let GosReqObject { flow_id: fec, packet_id: pid } = req;
        self.transition(node, attempt, GosEvent::GosReqReceived)?;
        let hit = self.nodes[node].buffer.lookup(fec, pid).cloned();
        let ack = |found| Emit::Control {
            from: node,
            to: requester,
            msg: ControlMessage::HelloAck {
                src_instance: node as u32 + 1,
                dst_instance: requester as u32 + 1,
                gos_ack: Some(GosAckObject {
                    flow_id: fec,
                    packet_id: pid,
                    found,
                }),
            },
            attempt,
        };

        if let Some(mut copy) = hit {
            self.transition(node, attempt, GosEvent::BufferHit)?;
            let entry = cp
                .fib_lookup(node, copy.label)
                .copied()
                .ok_or(ForwardError::Misrouted { node, label: copy.label })?;
            let mut emits = vec![ack(true)];
            if let (Some(out), Some(next)) = (entry.out_label, entry.next_hop) {
                copy.label = out;
                copy.origin = PacketOrigin::Local(node);
                self.trace_event(now, node, "lrp", fec, pid, format!("to={next}"));
                emits.push(Emit::Data {
                    from: node,
                    to: next,
                    packet: copy,
                });
            }
            self.transition(node, attempt, GosEvent::LrpSent)?;
            let d = self.records[attempt].requests;
            self.finish(attempt, RecoveryOutcome::Recovered(d), now);
            return Ok(emits);
        }

        self.transition(node, attempt, GosEvent::BufferMiss)?;
        let mut emits = vec![ack(false)];
        let phop = if cp.gos_table_lookup(node, fec).is_some() {
            self.phop_of(cp, node, fec)?
        } else {
            None
        };
        match phop {
            Some(up) => emits.extend(self.request(cp, node, up, attempt, now)),
            None => {
                self.transition(node, attempt, GosEvent::NoUpstream)?;
                self.finish(attempt, RecoveryOutcome::Exhausted, now);
            }
        }
        Ok(emits)
    }

    /// A GoSAck for `attempt` reached `node`.
    pub fn handle_gos_ack(&mut self, node: NodeIdx, ack: GosAckObject, attempt: usize, now: u64) -> Result<(), ForwardError> {
        let rec = &mut self.records[attempt];
        rec.acks += 1;
        if ack.found {
            rec.found_acks += 1;
        }
        self.trace_event(now, node, "gos_ack", ack.flow_id, ack.packet_id, format!("found={}", ack.found));
        if self.nodes[node].contexts.contains_key(&attempt) {
            self.transition(node, attempt, GosEvent::GosAckReceived)?;
        }
        Ok(())
    }

    /// The wait for a GoSAck ran out; the requester gives up on it.
    pub fn on_ack_timeout(&mut self, node: NodeIdx, attempt: usize) -> Result<(), ForwardError> {
        if self.nodes[node]
            .contexts
            .get(&attempt)
            .is_some_and(|c| c.state == GosState::LocalRecoveryRequest)
        {
            self.ack_timeouts += 1;
            self.transition(node, attempt, GosEvent::GosAckReceived)?;
        }
        Ok(())
    }

    /// Every stored `(fec, packet_id)` across all buffers.
    pub fn buffered_ids(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.nodes.iter().flat_map(|n| n.buffer.all_ids())
    }

    pub fn check_buffers(&self) -> Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            n.buffer.check_invariants().map_err(|e| format!("node {i}: {e}"))?;
        }
        Ok(())
    }
}
