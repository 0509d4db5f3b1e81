//! Simplified reliable end-to-end transport used as the recovery baseline.
//!
//! The sink acknowledges cumulatively. The head end paces new packets at the
//! flow rate, keeps at most `window` packets unacknowledged, and retransmits
//! the oldest unacknowledged packet once it has waited longer than the RTO.
//! There is no congestion control and no backoff.

use std::collections::{BTreeMap, BTreeSet};

pub const RTO_RTT_MULTIPLIER: u64 = 2;
pub const MIN_WINDOW: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Outstanding {
    first_sent: u64,
    last_sent: u64,
    retransmitted: bool,
}

#[derive(Debug, Clone)]
pub struct E2eSender {
    window: u32,
    next_new: u32,
    cum_ack: u32,
    outstanding: BTreeMap<u32, Outstanding>,
    rtt_us: u64,
    retransmissions: u64,
}

impl E2eSender {
    /// `initial_rtt_us` seeds the RTT estimate (normally twice the path delay).
    pub fn new(window: u32, initial_rtt_us: u64) -> Self {
        Self {
            window: window.max(1),
            next_new: 0,
            cum_ack: 0,
            outstanding: BTreeMap::new(),
            rtt_us: initial_rtt_us.max(1),
            retransmissions: 0,
        }
    }

    /// Window covering one round trip of paced sends, at least [`MIN_WINDOW`].
    pub fn default_window(rtt_us: u64, send_interval_us: u64) -> u32 {
        let per_rtt = rtt_us.div_ceil(send_interval_us.max(1)) + 1;
        (per_rtt.min(u64::from(u32::MAX)) as u32).max(MIN_WINDOW)
    }

    pub fn rtt_us(&self) -> u64 {
        self.rtt_us
    }

    pub fn rto_us(&self) -> u64 {
        RTO_RTT_MULTIPLIER * self.rtt_us
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn emitted(&self) -> u32 {
        self.next_new
    }

    pub fn cum_ack(&self) -> u32 {
        self.cum_ack
    }

    pub fn retransmissions(&self) -> u64 {
        self.retransmissions
    }

    pub fn in_flight(&self) -> usize {
        self.outstanding.len()
    }

    pub fn is_unacked(&self, pid: u32) -> bool {
        self.outstanding.contains_key(&pid)
    }

    pub fn can_send_new(&self) -> bool {
        (self.outstanding.len() as u32) < self.window
    }

    /// Takes the next fresh packet id, if the window allows.
    pub fn send_new(&mut self, now: u64) -> Option<u32> {
        if !self.can_send_new() {
            return None;
        }
        let pid = self.next_new;
        self.next_new += 1;
        self.outstanding.insert(
            pid,
            Outstanding {
                first_sent: now,
                last_sent: now,
                retransmitted: false,
            },
        );
        Some(pid)
    }

    /// Processes a cumulative ack ("every id below `cum` arrived").
    pub fn on_ack(&mut self, cum: u32, now: u64) {
        if cum <= self.cum_ack {
            return;
        }
        if let Some(o) = self.outstanding.get(&(cum - 1)) {
            if !o.retransmitted {
                self.rtt_us = self.rtt_us.min(now.saturating_sub(o.first_sent).max(1));
            }
        }
        self.outstanding = self.outstanding.split_off(&cum);
        self.cum_ack = cum;
    }

    /// Earliest time a retransmission could become due, if anything is
    /// outstanding.
    pub fn next_deadline(&self) -> Option<u64> {
        self.outstanding
            .values()
            .next()
            .map(|o| o.last_sent + self.rto_us() + 1)
    }

    /// Retransmits the oldest unacknowledged packet when its timer expired.
    pub fn e2e_transport_step(&mut self, now: u64) -> Vec<u32> {
        let rto = self.rto_us();
        let Some((&pid, o)) = self.outstanding.iter_mut().next() else {
            return Vec::new();
        };
        if now.saturating_sub(o.last_sent) > rto {
            o.last_sent = now;
            o.retransmitted = true;
            self.retransmissions += 1;
            vec![pid]
        } else {
            Vec::new()
        }
    }
}

/// Receiving end: de-duplicates and computes the cumulative ack.
#[derive(Debug, Clone, Default)]
pub struct E2eSink {
    cum: u32,
    above: BTreeSet<u32>,
    duplicates: u64,
}

/// Result of a sink arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SinkReceipt {
    pub duplicate: bool,
    /// Packets that became deliverable in order with this arrival.
    pub newly_in_order: u32,
    pub cum_ack: u32,
}

impl E2eSink {
    pub fn receive(&mut self, pid: u32) -> SinkReceipt {
        if pid < self.cum || !self.above.insert(pid) {
            self.duplicates += 1;
            return SinkReceipt {
                duplicate: true,
                newly_in_order: 0,
                cum_ack: self.cum,
            };
        }
        let before = self.cum;
        while self.above.remove(&self.cum) {
            self.cum += 1;
        }
        SinkReceipt {
            duplicate: false,
            newly_in_order: self.cum - before,
            cum_ack: self.cum,
        }
    }

    pub fn has(&self, pid: u32) -> bool {
        pid < self.cum || self.above.contains(&pid)
    }

    pub fn in_order(&self) -> u32 {
        self.cum
    }

    pub fn received(&self) -> u64 {
        u64::from(self.cum) + self.above.len() as u64
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_flow_never_retransmits() {
        let mut s = E2eSender::new(8, 10);
        let mut sink = E2eSink::default();
        for now in 0..100u64 {
            if let Some(pid) = s.send_new(now) {
                let r = sink.receive(pid);
                s.on_ack(r.cum_ack, now + 10);
            }
            assert!(s.e2e_transport_step(now + 10).is_empty());
        }
        assert_eq!(s.retransmissions(), 0);
        assert_eq!(sink.in_order(), 100);
    }

    #[test]
    fn single_loss_retransmitted_once_after_rto() {
        // unit-delay path of 4 hops: RTT 8, RTO 16
        let mut s = E2eSender::new(8, 8);
        let mut sink = E2eSink::default();
        for now in 0..3u64 {
            let pid = s.send_new(now).unwrap();
            if pid != 1 {
                let r = sink.receive(pid);
                s.on_ack(r.cum_ack, now + 8);
            }
        }
        assert_eq!(s.cum_ack(), 1);
        let mut retx = Vec::new();
        for now in 3..=40u64 {
            for pid in s.e2e_transport_step(now) {
                retx.push((now, pid));
                let r = sink.receive(pid);
                s.on_ack(r.cum_ack, now + 8);
            }
        }
        assert_eq!(retx, vec![(1 + 16 + 1, 1)]);
        assert_eq!(sink.in_order(), 3);
        assert_eq!(s.retransmissions(), 1);
    }

    #[test]
    fn local_recovery_before_rto_prevents_retransmission() {
        let mut s = E2eSender::new(8, 8);
        let mut sink = E2eSink::default();
        s.send_new(0).unwrap();
        // recovered copy reaches the sink well inside the RTO
        let r = sink.receive(0);
        s.on_ack(r.cum_ack, 12);
        for now in 0..50 {
            assert!(s.e2e_transport_step(now).is_empty());
        }
    }

    #[test]
    fn window_blocks_and_sink_dedups() {
        let mut s = E2eSender::new(2, 8);
        assert!(s.send_new(0).is_some());
        assert!(s.send_new(0).is_some());
        assert!(s.send_new(0).is_none());
        let mut sink = E2eSink::default();
        assert!(!sink.receive(1).duplicate);
        assert!(sink.receive(1).duplicate);
        assert_eq!(sink.receive(0).newly_in_order, 2);
        assert_eq!(E2eSender::default_window(100, 30), 5);
        assert_eq!(E2eSender::default_window(1000, 30), 35);
    }
}
