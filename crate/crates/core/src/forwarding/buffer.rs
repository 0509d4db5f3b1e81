//! GoS packet buffer: per-flow FIFO stores under level-proportional quotas.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::codec::GosLevel;

use super::DataPacket;

#[derive(Debug, Clone, Default)]
struct FlowStore {
    // (insertion sequence, packet), oldest first
    entries: VecDeque<(u64, DataPacket)>,
    index: HashMap<u32, u64>,
    bytes: u64,
}

impl FlowStore {
    fn pop_oldest(&mut self) -> Option<DataPacket> {
        let (_, p) = self.entries.pop_front()?;
        self.index.remove(&p.packet_id);
        self.bytes -= u64::from(p.size_bytes);
        Some(p)
    }
}

/// What an insert did.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InsertOutcome {
    pub stored: bool,
    /// Packet ids evicted from the inserting flow to make room.
    pub evicted: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct GosBuffer {
    capacity: u64,
    quotas: BTreeMap<u32, u64>,
    flows: BTreeMap<u32, FlowStore>,
    next_seq: u64,
}

impl GosBuffer {
    pub fn new(capacity_bytes: u64) -> Self {
        Self {
            capacity: capacity_bytes,
            quotas: BTreeMap::new(),
            flows: BTreeMap::new(),
            next_seq: 0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn quota(&self, fec: u32) -> u64 {
        self.quotas.get(&fec).copied().unwrap_or(0)
    }

    pub fn used(&self) -> u64 {
        self.flows.values().map(|f| f.bytes).sum()
    }

    pub fn stored_ids(&self, fec: u32) -> impl Iterator<Item = u32> + '_ {
        self.flows
            .get(&fec)
            .into_iter()
            .flat_map(|f| f.entries.iter().map(|(_, p)| p.packet_id))
    }

    /// Every stored `(fec, packet_id)`.
    pub fn all_ids(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.flows
            .iter()
            .flat_map(|(&f, s)| s.entries.iter().map(move |(_, p)| (f, p.packet_id)))
    }

    pub fn len(&self, fec: u32) -> usize {
        self.flows.get(&fec).map_or(0, |f| f.entries.len())
    }

    /// Splits the capacity among `flows` in proportion to their GoS level
    /// and trims any flow already above its new share. Returns evicted
    /// `(fec, packet_id)` pairs.
    pub fn set_quotas(&mut self, flows: &[(u32, GosLevel)]) -> Vec<(u32, u32)> {
        let total: u64 = flows.iter().map(|(_, l)| u64::from(l.0)).sum();
        self.quotas = flows
            .iter()
            .filter(|(_, l)| l.is_privileged())
            .map(|&(fec, l)| {
                let share = (u128::from(self.capacity) * u128::from(l.0) / u128::from(total)) as u64;
                (fec, share)
            })
            .collect();

        let mut evicted = Vec::new();
        let quotas = &self.quotas;
        self.flows.retain(|fec, store| {
            let quota = quotas.get(fec).copied().unwrap_or(0);
            while store.bytes > quota {
                let p = store.pop_oldest().expect("bytes > 0 implies entries");
                evicted.push((*fec, p.packet_id));
            }
            quota > 0
        });
        evicted
    }

    /// Stores a copy, evicting the flow's oldest packets if its quota is
    /// full. A packet larger than the whole quota is not stored. A packet
    /// already held is left where it is.
    pub fn insert(&mut self, pkt: &DataPacket) -> InsertOutcome {
        let quota = self.quota(pkt.fec);
        let size = u64::from(pkt.size_bytes);
        if size > quota {
            return InsertOutcome::default();
        }
        let store = self.flows.entry(pkt.fec).or_default();
        if store.index.contains_key(&pkt.packet_id) {
            return InsertOutcome::default();
        }
        let mut evicted = Vec::new();
        while store.bytes + size > quota {
            evicted.push(store.pop_oldest().expect("over quota implies entries").packet_id);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        store.entries.push_back((seq, pkt.clone()));
        store.index.insert(pkt.packet_id, seq);
        store.bytes += size;
        InsertOutcome {
            stored: true,
            evicted,
        }
    }

    pub fn lookup(&self, fec: u32, packet_id: u32) -> Option<&DataPacket> {
        let store = self.flows.get(&fec)?;
        let seq = *store.index.get(&packet_id)?;
        // sequence numbers are increasing but not contiguous within a flow
        let pos = store.entries.binary_search_by_key(&seq, |(s, _)| *s).ok()?;
        Some(&store.entries[pos].1)
    }

    /// Evicts the oldest packet of `fec`.
    pub fn evict(&mut self, fec: u32) -> Option<DataPacket> {
        self.flows.get_mut(&fec)?.pop_oldest()
    }

    /// Drops everything held for `fec` and forgets its quota.
    pub fn drop_flow(&mut self, fec: u32) -> Vec<u32> {
        self.quotas.remove(&fec);
        self.flows
            .remove(&fec)
            .map(|s| s.entries.into_iter().map(|(_, p)| p.packet_id).collect())
            .unwrap_or_default()
    }

    /// Checks the capacity, quota and FIFO-suffix invariants.
    ///
    /// The FIFO property: within a flow the stored packets are exactly the
    /// most recent insertions of that flow, in insertion order.
    pub fn check_invariants(&self) -> Result<(), String> {
        let used = self.used();
        if used > self.capacity {
            return Err(format!("used {used} exceeds capacity {}", self.capacity));
        }
        for (fec, store) in &self.flows {
            let quota = self.quota(*fec);
            if store.bytes > quota {
                return Err(format!("fec {fec}: {} bytes over quota {quota}", store.bytes));
            }
            let bytes: u64 = store.entries.iter().map(|(_, p)| u64::from(p.size_bytes)).sum();
            if bytes != store.bytes {
                return Err(format!("fec {fec}: byte count drifted"));
            }
            if store.entries.len() != store.index.len() {
                return Err(format!("fec {fec}: index out of sync"));
            }
            if !store.entries.iter().zip(store.entries.iter().skip(1)).all(|(a, b)| a.0 < b.0) {
                return Err(format!("fec {fec}: entries out of insertion order"));
            }
        }
        Ok(())
    }
}
