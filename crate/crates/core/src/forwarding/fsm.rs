//! Per-recovery state machine of a GoS-capable node.
//!
//! ```text
//!                 loss detected                 GoSReq received
//!  DataForwarding ─────────────► LocalRecoveryRequest ◄──────┐
//!     ▲    ▲   │                   │    (GoSAck / no upstream) │ miss
//!     │    │   └──GoSReq──► BufferAccess ──────────────────────┘
//!     │    │                     │ hit
//!     │    └── LRP sent ── LocalRetransmission
//! ```
//!
//! A node may run several recoveries at once; each one carries its own state.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GosState {
    DataForwarding,
    LocalRecoveryRequest,
    BufferAccess,
    LocalRetransmission,
}

impl GosState {
    pub const ALL: [GosState; 4] = [
        GosState::DataForwarding,
        GosState::LocalRecoveryRequest,
        GosState::BufferAccess,
        GosState::LocalRetransmission,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GosEvent {
    /// The node itself dropped, or declared missing, a privileged packet.
    LossDetected,
    GosReqReceived,
    BufferHit,
    BufferMiss,
    LrpSent,
    /// A GoSAck came back (or the wait for it timed out).
    GosAckReceived,
    /// The node is the head of the GoS plane and cannot escalate further.
    NoUpstream,
}

impl GosEvent {
    pub const ALL: [GosEvent; 7] = [
        GosEvent::LossDetected,
        GosEvent::GosReqReceived,
        GosEvent::BufferHit,
        GosEvent::BufferMiss,
        GosEvent::LrpSent,
        GosEvent::GosAckReceived,
        GosEvent::NoUpstream,
    ];
}

impl fmt::Display for GosState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for GosEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("illegal transition: {event} in state {state}")]
pub struct IllegalTransition {
    pub state: GosState,
    pub event: GosEvent,
}

/// Every accepted `(state, event) -> state` triple.
pub const TRANSITIONS: [(GosState, GosEvent, GosState); 7] = {
    use GosEvent::*;
    use GosState::*;
    [
        (DataForwarding, LossDetected, LocalRecoveryRequest),
        (LocalRecoveryRequest, GosAckReceived, DataForwarding),
        (LocalRecoveryRequest, NoUpstream, DataForwarding),
        (DataForwarding, GosReqReceived, BufferAccess),
        (BufferAccess, BufferHit, LocalRetransmission),
        (LocalRetransmission, LrpSent, DataForwarding),
        (BufferAccess, BufferMiss, LocalRecoveryRequest),
    ]
};

pub fn step(state: GosState, event: GosEvent) -> Result<GosState, IllegalTransition> {
    use GosEvent::*;
    use GosState::*;
    match (state, event) {
        (DataForwarding, LossDetected) => Ok(LocalRecoveryRequest),
        (LocalRecoveryRequest, GosAckReceived | NoUpstream) => Ok(DataForwarding),
        (DataForwarding, GosReqReceived) => Ok(BufferAccess),
        (BufferAccess, BufferHit) => Ok(LocalRetransmission),
        (LocalRetransmission, LrpSent) => Ok(DataForwarding),
        (BufferAccess, BufferMiss) => Ok(LocalRecoveryRequest),
        _ => Err(IllegalTransition { state, event }),
    }
}
