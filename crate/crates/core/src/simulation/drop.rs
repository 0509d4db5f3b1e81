//! Drop decisions.
//!
//! Bernoulli coins are drawn from a generator keyed by
//! `(seed, node, fec, packet id, pass)`, so two runs sharing a seed see the
//! same decision for the same traversal whether or not GoS is enabled.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::{NodeIdx, NodeKind, Topology};

use super::scenario::{DropRate, DropSpec, NodeSelector};

const RATE_STREAM: u64 = 0x6472_6f70_7261_7465;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform `[0, 1)` sample tied to one traversal.
pub fn crn_uniform(seed: u64, node: NodeIdx, fec: u32, pid: u32, pass: u32) -> f64 {
    let key = [node as u64, u64::from(fec), u64::from(pid), u64::from(pass)]
        .into_iter()
        .fold(splitmix(seed), |h, x| splitmix(h ^ x));
    ChaCha8Rng::seed_from_u64(key).gen::<f64>()
}

#[derive(Debug, Clone)]
enum Kind {
    None,
    Bernoulli(Vec<f64>),
    Inject(HashSet<(NodeIdx, u32, u32, u32)>),
    Queue(usize),
}

#[derive(Debug, Clone)]
pub struct DropModel {
    seed: u64,
    kind: Kind,
}

impl DropModel {
    pub fn new(spec: &DropSpec, t: &Topology, seed: u64) -> Self {
        let kind = match spec {
            DropSpec::None => Kind::None,
            DropSpec::Bernoulli { rate, nodes } => {
                let selected = |i: NodeIdx| match nodes {
                    NodeSelector::All => true,
                    NodeSelector::Lsr => t.node(i).kind == NodeKind::Lsr,
                    NodeSelector::List(ids) => ids.iter().any(|id| t.idx(id) == Some(i)),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ RATE_STREAM));
                let rates = (0..t.node_count())
                    .map(|i| match *rate {
                        DropRate::Fixed(p) => {
                            if selected(i) {
                                p
                            } else {
                                0.0
                            }
                        }
                        DropRate::PerNode { min, max } => {
                            // draw for every node so selection does not shift the stream
                            let p = if min == max { min } else { rng.gen_range(min..=max) };
                            if selected(i) {
                                p
                            } else {
                                0.0
                            }
                        }
                    })
                    .collect();
                Kind::Bernoulli(rates)
            }
            DropSpec::Inject(drops) => Kind::Inject(
                drops
                    .iter()
                    .filter_map(|d| t.idx(&d.node).map(|n| (n, d.fec, d.packet_id, d.pass)))
                    .collect(),
            ),
            DropSpec::Queue { capacity_packets } => Kind::Queue(*capacity_packets),
        };
        Self { seed, kind }
    }

    /// Drop probability configured at `node` (Bernoulli mode).
    pub fn rate(&self, node: NodeIdx) -> f64 {
        match &self.kind {
            Kind::Bernoulli(r) => r[node],
            _ => 0.0,
        }
    }

    /// Queue capacity when the queue model is active.
    pub fn queue_capacity(&self) -> Option<usize> {
        match self.kind {
            Kind::Queue(c) => Some(c),
            _ => None,
        }
    }

    /// Whether the `pass`-th traversal of `node` by `(fec, pid)` is dropped.
    /// Always `false` in queue mode, where drops come from occupancy.
    pub fn drops(&self, node: NodeIdx, fec: u32, pid: u32, pass: u32) -> bool {
        match &self.kind {
            Kind::None | Kind::Queue(_) => false,
            Kind::Bernoulli(rates) => {
                let p = rates[node];
                p > 0.0 && crn_uniform(self.seed, node, fec, pid, pass) < p
            }
            Kind::Inject(set) => set.contains(&(node, fec, pid, pass)),
        }
    }
}
