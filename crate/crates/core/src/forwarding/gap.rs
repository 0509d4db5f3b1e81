//! Packet-id gap detection with a reorder window.

use std::collections::{BTreeMap, BTreeSet};

pub const DEFAULT_REORDER_WINDOW: u32 = 3;

/// Per-flow view of which packet ids a node has seen.
///
/// An id skipped over by a later arrival becomes *pending*; it is declared
/// missing once `window` further arrivals have been observed without it
/// showing up.
#[derive(Debug, Clone)]
pub struct GapTracker {
    window: u32,
    /// Lowest id not yet accounted for.
    next_expected: u32,
    highest_seen: Option<u32>,
    /// Ids above `next_expected` already seen or declared.
    resolved: BTreeSet<u32>,
    pending: BTreeMap<u32, u32>,
}

impl Default for GapTracker {
    fn default() -> Self {
        Self::new(DEFAULT_REORDER_WINDOW)
    }
}

impl GapTracker {
    pub fn new(window: u32) -> Self {
        Self {
            window,
            next_expected: 0,
            highest_seen: None,
            resolved: BTreeSet::new(),
            pending: BTreeMap::new(),
        }
    }

    /// Starts tracking at `first` instead of 0.
    pub fn starting_at(window: u32, first: u32) -> Self {
        Self {
            next_expected: first,
            highest_seen: first.checked_sub(1),
            ..Self::new(window)
        }
    }

    pub fn pending(&self) -> impl Iterator<Item = u32> + '_ {
        self.pending.keys().copied()
    }

    /// Records an arrival and returns the ids declared missing by it.
    pub fn observe(&mut self, id: u32) -> Vec<u32> {
        if id < self.next_expected || self.resolved.contains(&id) {
            return Vec::new();
        }
        let late = self.pending.remove(&id).is_some();
        self.resolved.insert(id);

        let mut declared = Vec::new();
        if !late {
            // every earlier-revealed gap sees one more arrival
            for (&m, count) in self.pending.iter_mut() {
                *count += 1;
                if *count >= self.window {
                    declared.push(m);
                }
            }
            for m in &declared {
                self.pending.remove(m);
                self.resolved.insert(*m);
            }
            let from = self.highest_seen.map_or(self.next_expected, |h| h + 1);
            if id > from {
                for m in from..id {
                    if !self.resolved.contains(&m) {
                        if self.window == 0 {
                            self.resolved.insert(m);
                            declared.push(m);
                        } else {
                            self.pending.insert(m, 0);
                        }
                    }
                }
            }
            if self.highest_seen.is_none_or(|h| id > h) {
                self.highest_seen = Some(id);
            }
        }
        self.advance();
        declared
    }

    /// Accounts for an id handled elsewhere (for instance a drop at this
    /// node), so it is never declared.
    pub fn mark_handled(&mut self, id: u32) {
        if id < self.next_expected {
            return;
        }
        self.pending.remove(&id);
        self.resolved.insert(id);
        if self.highest_seen.is_none_or(|h| id > h) {
            let from = self.highest_seen.map_or(self.next_expected, |h| h + 1);
            for m in from..id {
                if !self.resolved.contains(&m) {
                    self.pending.insert(m, 0);
                }
            }
            self.highest_seen = Some(id);
        }
        self.advance();
    }

    fn advance(&mut self) {
        while self.resolved.remove(&self.next_expected) {
            self.next_expected += 1;
        }
    }
}
