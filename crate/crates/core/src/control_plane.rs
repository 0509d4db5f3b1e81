//! LSP establishment with GoS-plane construction.
//!
//! A Path message travels from ingress to egress carrying the requested GoS
//! level and the address of the last GoS node it crossed; every GoS node
//! stores that address as its GoSP PHOP and overwrites it with its own.
//! The Resv message travels back, binding labels hop by hop and confirming
//! (or lowering) the level each GoS node can afford. Both messages go through
//! the wire codec at every hop.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use thiserror::Error;

use crate::codec::{
    self, CodecError, ControlMessage, GosLevel, GosPathObject, GosResvObject, GosTableEntry,
};
use crate::topology::{NodeIdx, RoutePath, Topology};

pub type Label = u32;

/// Lowest label handed out; 0..=15 are reserved.
pub const MIN_LABEL: Label = 16;
pub const MAX_LABEL: Label = (1 << 20) - 1;

/// Buffer bytes a GoS node sets aside per unit of GoS level.
pub const DEFAULT_LEVEL_UNIT_BYTES: u64 = 1_500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FibEntry {
    pub in_label: Label,
    /// `None` at the egress, where the label is popped.
    pub out_label: Option<Label>,
    pub next_hop: Option<NodeIdx>,
    pub fec: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LspDescriptor {
    pub fec: u32,
    pub route: RoutePath,
    pub requested_level: GosLevel,
    /// Level confirmed by the Resv; may be lower than requested.
    pub level: GosLevel,
    /// GoS-capable route nodes, in route order.
    pub gosp: Vec<NodeIdx>,
    /// Label the ingress classifies the FEC into.
    pub ingress_label: Label,
}

impl LspDescriptor {
    pub fn is_privileged(&self) -> bool {
        self.level.is_privileged()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignalingError {
    #[error("route is invalid: {0}")]
    InvalidRoute(String),
    #[error("FEC {0} is already signaled")]
    DuplicateFec(u32),
    #[error("label space exhausted at node {0}")]
    LabelSpaceExhausted(String),
    #[error("FEC {0} is not signaled")]
    UnknownFec(u32),
    #[error("signaling message rejected: {0}")]
    Codec(#[from] CodecError),
}

/// Rows removed by a teardown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Removed {
    pub fib_rows: usize,
    pub gos_rows: usize,
}

/// One signaling message as it crossed a link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
struct NodeState {
    address: Ipv4Addr,
    gos_capable: bool,
    buffer_bytes: u64,
    reserved_bytes: u64,
    next_label: Label,
    fib: BTreeMap<Label, FibEntry>,
    gos_table: BTreeMap<u32, GosTableEntry>,
}

impl NodeState {
    fn affordable(&self, requested: GosLevel, unit: u64) -> GosLevel {
        let free = self.buffer_bytes.saturating_sub(self.reserved_bytes) / unit.max(1);
        GosLevel(requested.0.min(free.min(u64::from(u16::MAX)) as u16))
    }

    fn alloc_label(&mut self) -> Label {
        let l = self.next_label;
        self.next_label += 1;
        l
    }
}

#[derive(Debug, Clone)]
pub struct ControlPlane {
    nodes: Vec<NodeState>,
    lsps: BTreeMap<u32, LspDescriptor>,
    level_unit_bytes: u64,
    transcript: Vec<TranscriptEntry>,
}

impl ControlPlane {
    pub fn new(t: &Topology) -> Self {
        Self::with_level_unit(t, DEFAULT_LEVEL_UNIT_BYTES)
    }

    pub fn with_level_unit(t: &Topology, level_unit_bytes: u64) -> Self {
        let nodes = t
            .nodes()
            .iter()
            .map(|n| NodeState {
                address: n.address,
                gos_capable: n.gos_capable,
                buffer_bytes: n.gos_buffer_bytes,
                reserved_bytes: 0,
                next_label: MIN_LABEL,
                fib: BTreeMap::new(),
                gos_table: BTreeMap::new(),
            })
            .collect();
        Self {
            nodes,
            lsps: BTreeMap::new(),
            level_unit_bytes,
            transcript: Vec::new(),
        }
    }

    pub fn lsp(&self, fec: u32) -> Option<&LspDescriptor> {
        self.lsps.get(&fec)
    }

    pub fn lsps(&self) -> impl Iterator<Item = &LspDescriptor> {
        self.lsps.values()
    }

    pub fn fib_lookup(&self, node: NodeIdx, label: Label) -> Option<&FibEntry> {
        self.nodes[node].fib.get(&label)
    }

    pub fn fib(&self, node: NodeIdx) -> impl Iterator<Item = &FibEntry> {
        self.nodes[node].fib.values()
    }

    pub fn gos_table_lookup(&self, node: NodeIdx, fec: u32) -> Option<&GosTableEntry> {
        self.nodes[node].gos_table.get(&fec)
    }

    pub fn gos_table(&self, node: NodeIdx) -> impl Iterator<Item = &GosTableEntry> {
        self.nodes[node].gos_table.values()
    }

    /// `(fec, level)` of every privileged flow with a GoS row at `node`.
    pub fn privileged_flows_at(&self, node: NodeIdx) -> Vec<(u32, GosLevel)> {
        self.nodes[node]
            .gos_table
            .values()
            .map(|e| (e.fec, e.level))
            .collect()
    }

    pub fn reserved_bytes(&self, node: NodeIdx) -> u64 {
        self.nodes[node].reserved_bytes
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Vec<TranscriptEntry> {
        std::mem::take(&mut self.transcript)
    }

    /// Node whose address is `addr`.
    pub fn node_by_address(&self, addr: Ipv4Addr) -> Option<NodeIdx> {
        self.nodes.iter().position(|n| n.address == addr)
    }

    fn check_route(&self, t: &Topology, route: &RoutePath) -> Result<(), SignalingError> {
        let bad = |m: String| Err(SignalingError::InvalidRoute(m));
        if route.nodes.len() < 2 {
            return bad("fewer than two nodes".into());
        }
        if route.nodes.iter().any(|&n| n >= self.nodes.len()) {
            return bad("node index out of range".into());
        }
        match t.route_from_indices(route.nodes.clone()) {
            Ok(r) if r.link_delays == route.link_delays => Ok(()),
            Ok(_) => bad("link delays do not match the topology".into()),
            Err(e) => bad(e.to_string()),
        }
    }

    /// Establishes the LSP for `fec` along `route` and returns its descriptor.
    pub fn signal_lsp(
        &mut self,
        t: &Topology,
        route: &RoutePath,
        fec: u32,
        level: GosLevel,
    ) -> Result<LspDescriptor, SignalingError> {
        self.check_route(t, route)?;
        if self.lsps.contains_key(&fec) {
            return Err(SignalingError::DuplicateFec(fec));
        }
        if let Some(&n) = route
            .nodes
            .iter()
            .find(|&&n| self.nodes[n].next_label > MAX_LABEL)
        {
            return Err(SignalingError::LabelSpaceExhausted(t.node(n).id.clone()));
        }

        let privileged = level.is_privileged();
        let hops = &route.nodes;

        // Path: ingress -> egress.
        let mut msg = codec::encode(&ControlMessage::Path {
            session: fec,
            hop: Ipv4Addr::UNSPECIFIED,
            gos_path: privileged.then_some(GosPathObject {
                level,
                gosp_phop: Ipv4Addr::UNSPECIFIED,
            }),
        });
        let mut affordable = vec![GosLevel::NONE; hops.len()];
        for (pos, &node) in hops.iter().enumerate() {
            if pos > 0 {
                self.transcript.push(TranscriptEntry {
                    from: hops[pos - 1],
                    to: node,
                    bytes: msg.clone(),
                });
            }
            let state = &mut self.nodes[node];
            if !state.gos_capable {
                codec::rewrite_hop(&mut msg, state.address)?;
                continue;
            }
            let ControlMessage::Path { gos_path, .. } = codec::decode(&msg)? else {
                unreachable!("Path stays a Path");
            };
            let gos_path = gos_path.map(|g| {
                affordable[pos] = state.affordable(g.level, self.level_unit_bytes);
                state.gos_table.insert(
                    fec,
                    GosTableEntry {
                        fec,
                        level: g.level,
                        gosp_phop: g.gosp_phop,
                    },
                );
                GosPathObject {
                    level: g.level,
                    gosp_phop: state.address,
                }
            });
            msg = codec::encode(&ControlMessage::Path {
                session: fec,
                hop: state.address,
                gos_path,
            });
        }

        // Resv: egress -> ingress, binding labels as it goes.
        let mut msg = codec::encode(&ControlMessage::Resv {
            session: fec,
            hop: Ipv4Addr::UNSPECIFIED,
            gos_resv: privileged.then_some(GosResvObject {
                granted_level: level,
            }),
        });
        let mut downstream_label: Option<Label> = None;
        for pos in (0..hops.len()).rev() {
            let node = hops[pos];
            if pos + 1 < hops.len() {
                self.transcript.push(TranscriptEntry {
                    from: hops[pos + 1],
                    to: node,
                    bytes: msg.clone(),
                });
            }
            let state = &mut self.nodes[node];
            let in_label = state.alloc_label();
            state.fib.insert(
                in_label,
                FibEntry {
                    in_label,
                    out_label: downstream_label,
                    next_hop: hops.get(pos + 1).copied(),
                    fec,
                },
            );
            downstream_label = Some(in_label);

            if !state.gos_capable {
                codec::rewrite_hop(&mut msg, state.address)?;
                continue;
            }
            let ControlMessage::Resv { gos_resv, .. } = codec::decode(&msg)? else {
                unreachable!("Resv stays a Resv");
            };
            let gos_resv = gos_resv.map(|g| GosResvObject {
                granted_level: g.granted_level.min(affordable[pos]),
            });
            msg = codec::encode(&ControlMessage::Resv {
                session: fec,
                hop: state.address,
                gos_resv,
            });
        }
        let ControlMessage::Resv { gos_resv, .. } = codec::decode(&msg)? else {
            unreachable!("Resv stays a Resv");
        };
        let granted = gos_resv.map_or(GosLevel::NONE, |g| g.granted_level);

        // Confirmation: settle every GoS row on the end-to-end granted level.
        for &node in hops {
            let unit = self.level_unit_bytes;
            let state = &mut self.nodes[node];
            if !state.gos_capable || !privileged {
                continue;
            }
            if granted.is_privileged() {
                if let Some(row) = state.gos_table.get_mut(&fec) {
                    row.level = granted;
                    state.reserved_bytes += u64::from(granted.0) * unit;
                }
            } else {
                state.gos_table.remove(&fec);
            }
        }

        let lsp = LspDescriptor {
            fec,
            route: route.clone(),
            requested_level: level,
            level: granted,
            gosp: hops
                .iter()
                .copied()
                .filter(|&n| self.nodes[n].gos_capable)
                .collect(),
            ingress_label: downstream_label.expect("route has an ingress"),
        };
        self.lsps.insert(fec, lsp.clone());
        Ok(lsp)
    }

    /// Removes every FIB and GoS row for `fec` and releases its reservation.
    pub fn teardown_lsp(&mut self, fec: u32) -> Result<Removed, SignalingError> {
        let lsp = self.lsps.remove(&fec).ok_or(SignalingError::UnknownFec(fec))?;
        let mut removed = Removed::default();
        for &node in &lsp.route.nodes {
            let state = &mut self.nodes[node];
            let before = state.fib.len();
            state.fib.retain(|_, e| e.fec != fec);
            removed.fib_rows += before - state.fib.len();
            if let Some(row) = state.gos_table.remove(&fec) {
                removed.gos_rows += 1;
                state.reserved_bytes = state
                    .reserved_bytes
                    .saturating_sub(u64::from(row.level.0) * self.level_unit_bytes);
            }
        }
        Ok(removed)
    }

    /// Follows FIB entries from the ingress label and returns the nodes visited.
    pub fn trace_labels(&self, fec: u32) -> Option<Vec<NodeIdx>> {
        let lsp = self.lsps.get(&fec)?;
        let mut node = lsp.route.ingress();
        let mut label = lsp.ingress_label;
        let mut visited = vec![node];
        for _ in 0..self.nodes.len() {
            let e = self.fib_lookup(node, label)?;
            match (e.next_hop, e.out_label) {
                (Some(next), Some(out)) => {
                    node = next;
                    label = out;
                    visited.push(node);
                }
                _ => return Some(visited),
            }
        }
        None
    }

    #[cfg(test)]
    fn set_next_label(&mut self, node: NodeIdx, label: Label) {
        self.nodes[node].next_label = label;
    }
}
