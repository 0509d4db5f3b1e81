#![allow(dead_code)]

use std::net::Ipv4Addr;

use gos_core::codec::{ControlMessage, GosAckObject, GosLevel, GosPathObject, GosReqObject, GosResvObject};
use proptest::prelude::*;

pub fn arb_addr() -> impl Strategy<Value = Ipv4Addr> {
    any::<u32>().prop_map(Ipv4Addr::from)
}

pub fn arb_message() -> impl Strategy<Value = ControlMessage> {
    let path = (any::<u32>(), arb_addr(), proptest::option::of((any::<u16>(), arb_addr()))).prop_map(
        |(session, hop, g)| ControlMessage::Path {
            session,
            hop,
            gos_path: g.map(|(level, gosp_phop)| GosPathObject {
                level: GosLevel(level),
                gosp_phop,
            }),
        },
    );
    let resv = (any::<u32>(), arb_addr(), proptest::option::of(any::<u16>())).prop_map(|(session, hop, g)| {
        ControlMessage::Resv {
            session,
            hop,
            gos_resv: g.map(|l| GosResvObject {
                granted_level: GosLevel(l),
            }),
        }
    });
    let req = (any::<u32>(), any::<u32>(), proptest::option::of((any::<u32>(), any::<u32>()))).prop_map(
        |(src_instance, dst_instance, r)| ControlMessage::HelloReq {
            src_instance,
            dst_instance,
            gos_req: r.map(|(flow_id, packet_id)| GosReqObject { flow_id, packet_id }),
        },
    );
    let ack = (
        any::<u32>(),
        any::<u32>(),
        proptest::option::of((any::<u32>(), any::<u32>(), any::<bool>())),
    )
        .prop_map(|(src_instance, dst_instance, a)| ControlMessage::HelloAck {
            src_instance,
            dst_instance,
            gos_ack: a.map(|(flow_id, packet_id, found)| GosAckObject {
                flow_id,
                packet_id,
                found,
            }),
        });
    prop_oneof![path, resv, req, ack]
}

pub fn testdata(name: &str) -> Vec<u8> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    gos_core::codec::parse_hex(&text).unwrap()
}

/// Golden vectors paired with the message each one encodes.
pub fn golden_vectors() -> Vec<(&'static str, ControlMessage)> {
    vec![
        (
            "path_gos_fec35.hex",
            ControlMessage::Path {
                session: 35,
                hop: Ipv4Addr::new(10, 0, 0, 1),
                gos_path: Some(GosPathObject {
                    level: GosLevel(0b1011),
                    gosp_phop: Ipv4Addr::new(0, 0, 160, 12),
                }),
            },
        ),
        (
            "resv_gos_fec35.hex",
            ControlMessage::Resv {
                session: 35,
                hop: Ipv4Addr::new(10, 0, 0, 2),
                gos_resv: Some(GosResvObject {
                    granted_level: GosLevel(11),
                }),
            },
        ),
        (
            "hello_req_gosreq.hex",
            ControlMessage::HelloReq {
                src_instance: 1,
                dst_instance: 2,
                gos_req: Some(GosReqObject {
                    flow_id: 35,
                    packet_id: 7,
                }),
            },
        ),
        (
            "hello_ack_plain.hex",
            ControlMessage::HelloAck {
                src_instance: 2,
                dst_instance: 1,
                gos_ack: None,
            },
        ),
        (
            "hello_ack_found.hex",
            ControlMessage::HelloAck {
                src_instance: 2,
                dst_instance: 1,
                gos_ack: Some(GosAckObject {
                    flow_id: 35,
                    packet_id: 7,
                    found: true,
                }),
            },
        ),
    ]
}
