//! Wire format of the GoS-extended RSVP-TE control messages.
//!
//! Every message is an 8-byte common header followed by RSVP-style objects
//! framed as `{length:16, class_num:8, c_type:8, body}` in network byte
//! order. `length` counts the 4-byte object header and is always a multiple
//! of four; bodies are zero-padded up to that boundary.
//!
//! ```text
//! common header  | 0x10 | msg_type | checksum(0) | ttl | 0 | length:16 |
//! SESSION   (1)  | session_id:32 |
//! RSVP_HOP  (3)  | hop_address:32 |
//! HELLO    (22)  | src_instance:32 | dst_instance:32 |      c_type 1 = request, 2 = ack
//! GOS_PATH (248) | level:16 | gosp_phop:32 | pad:16 |
//! GOS_RESV (249) | granted_level:16 | pad:16 |
//! GOS_REQ  (250) | flow_id:32 | packet_id:32 |
//! GOS_ACK  (251) | flow_id:32 | packet_id:32 | flags:32 |  bit 0 = found
//! ```
//!
//! Objects with a class number the decoder does not know are skipped and
//! reported, so nodes without GoS support can still relay GoS objects.

use std::fmt;
use std::net::Ipv4Addr;

use thiserror::Error;

pub const RSVP_VERSION: u8 = 1;
pub const COMMON_HEADER_LEN: usize = 8;
pub const OBJECT_HEADER_LEN: usize = 4;
const DEFAULT_TTL: u8 = 255;

pub const MSG_PATH: u8 = 1;
pub const MSG_RESV: u8 = 2;
pub const MSG_HELLO: u8 = 20;

pub const CLASS_SESSION: u8 = 1;
pub const CLASS_RSVP_HOP: u8 = 3;
pub const CLASS_HELLO: u8 = 22;
pub const CLASS_GOS_PATH: u8 = 248;
pub const CLASS_GOS_RESV: u8 = 249;
pub const CLASS_GOS_REQ: u8 = 250;
pub const CLASS_GOS_ACK: u8 = 251;

const CTYPE_DEFAULT: u8 = 1;
const CTYPE_HELLO_REQUEST: u8 = 1;
const CTYPE_HELLO_ACK: u8 = 2;

const ACK_FOUND: u32 = 0x1;

/// Privilege level of a flow; 0 means the flow has no GoS privilege.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GosLevel(pub u16);

impl GosLevel {
    pub const NONE: GosLevel = GosLevel(0);

    pub fn is_privileged(self) -> bool {
        self.0 > 0
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn to_binary_string(self) -> String {
        format!("{:016b}", self.0)
    }
}

impl fmt::Display for GosLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LevelParseError {
    #[error("GoS level string is longer than 16 bits ({0} characters)")]
    TooLong(usize),
    #[error("GoS level string contains non-binary character `{0}`")]
    NonBinary(char),
    #[error("empty GoS level string")]
    Empty,
}

/// Parses a GoS level written as a binary string, as in a GoS Table dump.
/// Strings shorter than 16 characters are read as if zero-padded on the left.
pub fn parse_gos_level(binary: &str) -> Result<GosLevel, LevelParseError> {
    if binary.is_empty() {
        return Err(LevelParseError::Empty);
    }
    if let Some(c) = binary.chars().find(|c| *c != '0' && *c != '1') {
        return Err(LevelParseError::NonBinary(c));
    }
    if binary.len() > 16 {
        return Err(LevelParseError::TooLong(binary.len()));
    }
    let value = binary
        .bytes()
        .fold(0u16, |acc, b| (acc << 1) | u16::from(b - b'0'));
    Ok(GosLevel(value))
}

/// One row of a node's GoS Table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GosTableEntry {
    pub fec: u32,
    pub level: GosLevel,
    /// Previous GoS hop; `0.0.0.0` at the head of the GoS plane.
    pub gosp_phop: Ipv4Addr,
}

impl GosTableEntry {
    pub fn has_upstream(&self) -> bool {
        !self.gosp_phop.is_unspecified()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GosPathObject {
    pub level: GosLevel,
    pub gosp_phop: Ipv4Addr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GosResvObject {
    pub granted_level: GosLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GosReqObject {
    pub flow_id: u32,
    pub packet_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GosAckObject {
    pub flow_id: u32,
    pub packet_id: u32,
    pub found: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMessage {
    Path {
        session: u32,
        hop: Ipv4Addr,
        gos_path: Option<GosPathObject>,
    },
    Resv {
        session: u32,
        hop: Ipv4Addr,
        gos_resv: Option<GosResvObject>,
    },
    HelloReq {
        src_instance: u32,
        dst_instance: u32,
        gos_req: Option<GosReqObject>,
    },
    HelloAck {
        src_instance: u32,
        dst_instance: u32,
        gos_ack: Option<GosAckObject>,
    },
}

impl ControlMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ControlMessage::Path { .. } => "Path",
            ControlMessage::Resv { .. } => "Resv",
            ControlMessage::HelloReq { .. } => "HelloReq",
            ControlMessage::HelloAck { .. } => "HelloAck",
        }
    }
}

/// An object the decoder stepped over because its class is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkippedObject {
    pub offset: usize,
    pub class_num: u8,
    pub c_type: u8,
    pub length: u16,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("message shorter than the {COMMON_HEADER_LEN}-byte common header ({0} bytes)")]
    ShortHeader(usize),
    #[error("unsupported RSVP version {0}")]
    BadVersion(u8),
    #[error("header declares {declared} bytes but {actual} were supplied")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("unknown message type {0}")]
    UnknownMessageType(u8),
    #[error("object at offset {offset}: length {length} exceeds the {remaining} remaining bytes")]
    Truncated {
        offset: usize,
        length: usize,
        remaining: usize,
    },
    #[error("object at offset {offset}: length {length} is not a positive multiple of 4")]
    Misaligned { offset: usize, length: usize },
    #[error("object header at offset {offset} cut short")]
    ShortObjectHeader { offset: usize },
    #[error("class {class_num}/c-type {c_type}: body is {actual} bytes, expected {expected}")]
    BadBodyLength {
        class_num: u8,
        c_type: u8,
        expected: usize,
        actual: usize,
    },
    #[error("class {class_num}: unsupported c-type {c_type}")]
    BadCType { class_num: u8, c_type: u8 },
    #[error("class {0}: non-zero padding or reserved bits")]
    NonZeroReserved(u8),
    #[error("class {0} appears more than once")]
    Duplicate(u8),
    #[error("mandatory class {0} missing")]
    Missing(u8),
    #[error("class {class_num} is not allowed in message type {msg_type}")]
    Unexpected { class_num: u8, msg_type: u8 },
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(msg_type: u8) -> Self {
        let mut buf = Vec::with_capacity(48);
        buf.extend_from_slice(&[RSVP_VERSION << 4, msg_type, 0, 0, DEFAULT_TTL, 0, 0, 0]);
        Self { buf }
    }

    fn object(&mut self, class_num: u8, c_type: u8, body: &[u8]) {
        let padded = (body.len() + 3) & !3;
        let length = (OBJECT_HEADER_LEN + padded) as u16;
        self.buf.extend_from_slice(&length.to_be_bytes());
        self.buf.push(class_num);
        self.buf.push(c_type);
        self.buf.extend_from_slice(body);
        self.buf.resize(self.buf.len() + padded - body.len(), 0);
    }

    fn finish(mut self) -> Vec<u8> {
        let len = self.buf.len() as u16;
        self.buf[6..8].copy_from_slice(&len.to_be_bytes());
        self.buf
    }
}

fn cat(parts: &[&[u8]]) -> Vec<u8> {
    parts.concat()
}

/// Encodes a message; optional GoS objects follow the mandatory ones.
pub fn encode(msg: &ControlMessage) -> Vec<u8> {
    match *msg {
        ControlMessage::Path {
            session,
            hop,
            gos_path,
        } => {
            let mut w = Writer::new(MSG_PATH);
            w.object(CLASS_SESSION, CTYPE_DEFAULT, &session.to_be_bytes());
            w.object(CLASS_RSVP_HOP, CTYPE_DEFAULT, &hop.octets());
            if let Some(g) = gos_path {
                w.object(
                    CLASS_GOS_PATH,
                    CTYPE_DEFAULT,
                    &cat(&[&g.level.0.to_be_bytes(), &g.gosp_phop.octets()]),
                );
            }
            w.finish()
        }
        ControlMessage::Resv {
            session,
            hop,
            gos_resv,
        } => {
            let mut w = Writer::new(MSG_RESV);
            w.object(CLASS_SESSION, CTYPE_DEFAULT, &session.to_be_bytes());
            w.object(CLASS_RSVP_HOP, CTYPE_DEFAULT, &hop.octets());
            if let Some(g) = gos_resv {
                w.object(CLASS_GOS_RESV, CTYPE_DEFAULT, &g.granted_level.0.to_be_bytes());
            }
            w.finish()
        }
        ControlMessage::HelloReq {
            src_instance,
            dst_instance,
            gos_req,
        } => {
            let mut w = Writer::new(MSG_HELLO);
            w.object(
                CLASS_HELLO,
                CTYPE_HELLO_REQUEST,
                &cat(&[&src_instance.to_be_bytes(), &dst_instance.to_be_bytes()]),
            );
            if let Some(r) = gos_req {
                w.object(
                    CLASS_GOS_REQ,
                    CTYPE_DEFAULT,
                    &cat(&[&r.flow_id.to_be_bytes(), &r.packet_id.to_be_bytes()]),
                );
            }
            w.finish()
        }
        ControlMessage::HelloAck {
            src_instance,
            dst_instance,
            gos_ack,
        } => {
            let mut w = Writer::new(MSG_HELLO);
            w.object(
                CLASS_HELLO,
                CTYPE_HELLO_ACK,
                &cat(&[&src_instance.to_be_bytes(), &dst_instance.to_be_bytes()]),
            );
            if let Some(a) = gos_ack {
                let flags = if a.found { ACK_FOUND } else { 0 };
                w.object(
                    CLASS_GOS_ACK,
                    CTYPE_DEFAULT,
                    &cat(&[
                        &a.flow_id.to_be_bytes(),
                        &a.packet_id.to_be_bytes(),
                        &flags.to_be_bytes(),
                    ]),
                );
            }
            w.finish()
        }
    }
}

/// A framed object borrowed from a message buffer.
#[derive(Debug, Clone, Copy)]
pub struct RawObject<'a> {
    pub offset: usize,
    pub class_num: u8,
    pub c_type: u8,
    pub body: &'a [u8],
}

/// Validates the common header and splits the object area into frames.
pub fn split_objects(bytes: &[u8]) -> Result<(u8, Vec<RawObject<'_>>), CodecError> {
    if bytes.len() < COMMON_HEADER_LEN {
        return Err(CodecError::ShortHeader(bytes.len()));
    }
    let version = bytes[0] >> 4;
    if version != RSVP_VERSION {
        return Err(CodecError::BadVersion(version));
    }
    let msg_type = bytes[1];
    let declared = u16::from_be_bytes([bytes[6], bytes[7]]) as usize;
    if declared != bytes.len() {
        return Err(CodecError::LengthMismatch {
            declared,
            actual: bytes.len(),
        });
    }

    let mut objects = Vec::new();
    let mut off = COMMON_HEADER_LEN;
    while off < bytes.len() {
        let remaining = bytes.len() - off;
        if remaining < OBJECT_HEADER_LEN {
            return Err(CodecError::ShortObjectHeader { offset: off });
        }
        let length = u16::from_be_bytes([bytes[off], bytes[off + 1]]) as usize;
        if length < OBJECT_HEADER_LEN || !length.is_multiple_of(4) {
            return Err(CodecError::Misaligned { offset: off, length });
        }
        if length > remaining {
            return Err(CodecError::Truncated {
                offset: off,
                length,
                remaining,
            });
        }
        objects.push(RawObject {
            offset: off,
            class_num: bytes[off + 2],
            c_type: bytes[off + 3],
            body: &bytes[off + OBJECT_HEADER_LEN..off + length],
        });
        off += length;
    }
    Ok((msg_type, objects))
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

fn be16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

fn expect_body(o: &RawObject<'_>, expected: usize) -> Result<(), CodecError> {
    if o.c_type != CTYPE_DEFAULT && o.class_num != CLASS_HELLO {
        return Err(CodecError::BadCType {
            class_num: o.class_num,
            c_type: o.c_type,
        });
    }
    if o.body.len() != expected {
        return Err(CodecError::BadBodyLength {
            class_num: o.class_num,
            c_type: o.c_type,
            expected,
            actual: o.body.len(),
        });
    }
    Ok(())
}

fn zeroed(o: &RawObject<'_>, range: std::ops::Range<usize>) -> Result<(), CodecError> {
    if o.body[range].iter().any(|&b| b != 0) {
        Err(CodecError::NonZeroReserved(o.class_num))
    } else {
        Ok(())
    }
}

fn set_once<T>(slot: &mut Option<T>, class_num: u8, value: T) -> Result<(), CodecError> {
    if slot.is_some() {
        return Err(CodecError::Duplicate(class_num));
    }
    *slot = Some(value);
    Ok(())
}

#[derive(Default)]
struct Fields {
    session: Option<u32>,
    hop: Option<Ipv4Addr>,
    hello: Option<(u8, u32, u32)>,
    gos_path: Option<GosPathObject>,
    gos_resv: Option<GosResvObject>,
    gos_req: Option<GosReqObject>,
    gos_ack: Option<GosAckObject>,
}

/// Decodes a message and lists any objects of unknown class it skipped.
pub fn decode_report(bytes: &[u8]) -> Result<(ControlMessage, Vec<SkippedObject>), CodecError> {
    let (msg_type, objects) = split_objects(bytes)?;
    if !matches!(msg_type, MSG_PATH | MSG_RESV | MSG_HELLO) {
        return Err(CodecError::UnknownMessageType(msg_type));
    }

    let allowed: &[u8] = match msg_type {
        MSG_PATH => &[CLASS_SESSION, CLASS_RSVP_HOP, CLASS_GOS_PATH],
        MSG_RESV => &[CLASS_SESSION, CLASS_RSVP_HOP, CLASS_GOS_RESV],
        _ => &[CLASS_HELLO, CLASS_GOS_REQ, CLASS_GOS_ACK],
    };

    let mut f = Fields::default();
    let mut skipped = Vec::new();
    for o in &objects {
        let known = matches!(
            o.class_num,
            CLASS_SESSION
                | CLASS_RSVP_HOP
                | CLASS_HELLO
                | CLASS_GOS_PATH
                | CLASS_GOS_RESV
                | CLASS_GOS_REQ
                | CLASS_GOS_ACK
        );
        if !known {
            skipped.push(SkippedObject {
                offset: o.offset,
                class_num: o.class_num,
                c_type: o.c_type,
                length: (o.body.len() + OBJECT_HEADER_LEN) as u16,
            });
            continue;
        }
        if !allowed.contains(&o.class_num) {
            return Err(CodecError::Unexpected {
                class_num: o.class_num,
                msg_type,
            });
        }
        match o.class_num {
            CLASS_SESSION => {
                expect_body(o, 4)?;
                set_once(&mut f.session, o.class_num, be32(o.body))?;
            }
            CLASS_RSVP_HOP => {
                expect_body(o, 4)?;
                set_once(&mut f.hop, o.class_num, Ipv4Addr::from(be32(o.body)))?;
            }
            CLASS_HELLO => {
                if o.c_type != CTYPE_HELLO_REQUEST && o.c_type != CTYPE_HELLO_ACK {
                    return Err(CodecError::BadCType {
                        class_num: o.class_num,
                        c_type: o.c_type,
                    });
                }
                expect_body(o, 8)?;
                let v = (o.c_type, be32(&o.body[0..4]), be32(&o.body[4..8]));
                set_once(&mut f.hello, o.class_num, v)?;
            }
            CLASS_GOS_PATH => {
                expect_body(o, 8)?;
                zeroed(o, 6..8)?;
                let v = GosPathObject {
                    level: GosLevel(be16(&o.body[0..2])),
                    gosp_phop: Ipv4Addr::from(be32(&o.body[2..6])),
                };
                set_once(&mut f.gos_path, o.class_num, v)?;
            }
            CLASS_GOS_RESV => {
                expect_body(o, 4)?;
                zeroed(o, 2..4)?;
                let v = GosResvObject {
                    granted_level: GosLevel(be16(&o.body[0..2])),
                };
                set_once(&mut f.gos_resv, o.class_num, v)?;
            }
            CLASS_GOS_REQ => {
                expect_body(o, 8)?;
                let v = GosReqObject {
                    flow_id: be32(&o.body[0..4]),
                    packet_id: be32(&o.body[4..8]),
                };
                set_once(&mut f.gos_req, o.class_num, v)?;
            }
            CLASS_GOS_ACK => {
                expect_body(o, 12)?;
                let flags = be32(&o.body[8..12]);
                if flags & !ACK_FOUND != 0 {
                    return Err(CodecError::NonZeroReserved(o.class_num));
                }
                let v = GosAckObject {
                    flow_id: be32(&o.body[0..4]),
                    packet_id: be32(&o.body[4..8]),
                    found: flags & ACK_FOUND != 0,
                };
                set_once(&mut f.gos_ack, o.class_num, v)?;
            }
            _ => unreachable!("filtered above"),
        }
    }

    let msg = match msg_type {
        MSG_PATH | MSG_RESV => {
            let session = f.session.ok_or(CodecError::Missing(CLASS_SESSION))?;
            let hop = f.hop.ok_or(CodecError::Missing(CLASS_RSVP_HOP))?;
            if msg_type == MSG_PATH {
                ControlMessage::Path {
                    session,
                    hop,
                    gos_path: f.gos_path,
                }
            } else {
                ControlMessage::Resv {
                    session,
                    hop,
                    gos_resv: f.gos_resv,
                }
            }
        }
        _ => {
            let (c_type, src_instance, dst_instance) =
                f.hello.ok_or(CodecError::Missing(CLASS_HELLO))?;
            if c_type == CTYPE_HELLO_REQUEST {
                if f.gos_ack.is_some() {
                    return Err(CodecError::Unexpected {
                        class_num: CLASS_GOS_ACK,
                        msg_type,
                    });
                }
                ControlMessage::HelloReq {
                    src_instance,
                    dst_instance,
                    gos_req: f.gos_req,
                }
            } else {
                if f.gos_req.is_some() {
                    return Err(CodecError::Unexpected {
                        class_num: CLASS_GOS_REQ,
                        msg_type,
                    });
                }
                ControlMessage::HelloAck {
                    src_instance,
                    dst_instance,
                    gos_ack: f.gos_ack,
                }
            }
        }
    };
    Ok((msg, skipped))
}

pub fn decode(bytes: &[u8]) -> Result<ControlMessage, CodecError> {
    decode_report(bytes).map(|(m, _)| m)
}

/// Rewrites the RSVP_HOP object in place and leaves every other object,
/// known or not, byte-for-byte untouched. This is all a node without GoS
/// support does to a Path or Resv it relays.
pub fn rewrite_hop(bytes: &mut [u8], hop: Ipv4Addr) -> Result<(), CodecError> {
    let offset = {
        let (_, objects) = split_objects(bytes)?;
        let o = objects
            .iter()
            .find(|o| o.class_num == CLASS_RSVP_HOP)
            .ok_or(CodecError::Missing(CLASS_RSVP_HOP))?;
        expect_body(o, 4)?;
        o.offset
    };
    let body = offset + OBJECT_HEADER_LEN;
    bytes[body..body + 4].copy_from_slice(&hop.octets());
    Ok(())
}

/// Space-separated lowercase hex, 16 bytes per line.
pub fn to_hex(bytes: &[u8]) -> String {
    bytes
        .chunks(16)
        .map(|c| c.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a hex dump; whitespace is ignored and `#` starts a comment.
pub fn parse_hex(text: &str) -> Result<Vec<u8>, hex::FromHexError> {
    let digits: String = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.chars().filter(|c| !c.is_whitespace()))
        .collect();
    hex::decode(digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_levels() {
        assert_eq!(parse_gos_level("0000000000001011"), Ok(GosLevel(11)));
        assert_eq!(parse_gos_level("0000000000000001"), Ok(GosLevel(1)));
        assert_eq!(parse_gos_level("000000000010010"), Ok(GosLevel(18)));
        assert_eq!(parse_gos_level("1"), Ok(GosLevel(1)));
        assert_eq!(parse_gos_level("1111111111111111"), Ok(GosLevel(u16::MAX)));
    }

    #[test]
    fn level_errors() {
        assert_eq!(
            parse_gos_level("00000000000010110"),
            Err(LevelParseError::TooLong(17))
        );
        assert_eq!(parse_gos_level("0102"), Err(LevelParseError::NonBinary('2')));
        assert_eq!(parse_gos_level(""), Err(LevelParseError::Empty));
        assert_eq!(GosLevel(11).to_binary_string(), "0000000000001011");
    }

    fn req(flow_id: u32, packet_id: u32) -> ControlMessage {
        ControlMessage::HelloReq {
            src_instance: 1,
            dst_instance: 2,
            gos_req: Some(GosReqObject { flow_id, packet_id }),
        }
    }

    #[test]
    fn gos_req_object_layout() {
        let bytes = encode(&req(35, 7));
        let tail = &bytes[bytes.len() - 12..];
        assert_eq!(tail[..4], [0x00, 0x0c, CLASS_GOS_REQ, 0x01]);
        assert_eq!(tail[4..], [0, 0, 0, 0x23, 0, 0, 0, 0x07]);
    }

    #[test]
    fn gos_path_object_layout() {
        let m = ControlMessage::Path {
            session: 35,
            hop: Ipv4Addr::new(0, 0, 160, 12),
            gos_path: Some(GosPathObject {
                level: GosLevel(11),
                gosp_phop: Ipv4Addr::new(0, 0, 160, 12),
            }),
        };
        let bytes = encode(&m);
        let obj = &bytes[bytes.len() - 12..];
        assert_eq!(obj[..4], [0x00, 0x0c, CLASS_GOS_PATH, 0x01]);
        assert_eq!(obj[4..10], [0x00, 0x0b, 0x00, 0x00, 0xa0, 0x0c]);
        assert_eq!(decode(&bytes), Ok(m));
    }

    #[test]
    fn hello_ack_without_extension() {
        let plain = ControlMessage::HelloAck {
            src_instance: 9,
            dst_instance: 4,
            gos_ack: None,
        };
        let bytes = encode(&plain);
        assert_eq!(bytes.len(), COMMON_HEADER_LEN + 12);
        assert_eq!(bytes[1], MSG_HELLO);
        assert_eq!(bytes[COMMON_HEADER_LEN + 3], CTYPE_HELLO_ACK);
        assert_eq!(decode(&bytes), Ok(plain));
    }

    #[test]
    fn truncated_object() {
        let mut bytes = encode(&req(1, 2));
        // Claim a 16-byte GoSReq when only 12 bytes remain in the message.
        let off = bytes.len() - 12;
        bytes[off..off + 2].copy_from_slice(&16u16.to_be_bytes());
        let mut cut = bytes[..off + 10].to_vec();
        let total = cut.len() as u16;
        cut[6..8].copy_from_slice(&total.to_be_bytes());
        assert_eq!(
            decode(&cut),
            Err(CodecError::Truncated {
                offset: off,
                length: 16,
                remaining: 10
            })
        );
    }

    #[test]
    fn misaligned_object() {
        let mut bytes = encode(&req(1, 2));
        let off = bytes.len() - 12;
        bytes[off..off + 2].copy_from_slice(&10u16.to_be_bytes());
        assert_eq!(
            decode(&bytes),
            Err(CodecError::Misaligned { offset: off, length: 10 })
        );
    }

    #[test]
    fn duplicate_gos_req() {
        let bytes = encode(&req(1, 2));
        let obj = bytes[bytes.len() - 12..].to_vec();
        let mut doubled = bytes.clone();
        doubled.extend_from_slice(&obj);
        let total = doubled.len() as u16;
        doubled[6..8].copy_from_slice(&total.to_be_bytes());
        assert_eq!(decode(&doubled), Err(CodecError::Duplicate(CLASS_GOS_REQ)));
    }

    #[test]
    fn unknown_class_is_skipped_and_reported() {
        let mut bytes = encode(&req(5, 6));
        bytes.extend_from_slice(&[0x00, 0x08, 200, 0x01, 0xde, 0xad, 0xbe, 0xef]);
        let total = bytes.len() as u16;
        bytes[6..8].copy_from_slice(&total.to_be_bytes());
        let (m, skipped) = decode_report(&bytes).unwrap();
        assert_eq!(m, req(5, 6));
        assert_eq!(skipped.len(), 1);
        assert_eq!((skipped[0].class_num, skipped[0].length), (200, 8));
    }

    #[test]
    fn misplaced_objects_are_rejected() {
        let path = encode(&ControlMessage::Path {
            session: 1,
            hop: Ipv4Addr::new(10, 0, 0, 1),
            gos_path: None,
        });
        let mut bytes = path.clone();
        bytes.extend_from_slice(&[0, 12, CLASS_GOS_REQ, 1, 0, 0, 0, 1, 0, 0, 0, 2]);
        let total = bytes.len() as u16;
        bytes[6..8].copy_from_slice(&total.to_be_bytes());
        assert_eq!(
            decode(&bytes),
            Err(CodecError::Unexpected {
                class_num: CLASS_GOS_REQ,
                msg_type: MSG_PATH
            })
        );
        assert_eq!(decode(&path[..4]), Err(CodecError::ShortHeader(4)));
    }

    #[test]
    fn relaying_preserves_gos_object() {
        let m = ControlMessage::Path {
            session: 77,
            hop: Ipv4Addr::new(10, 0, 0, 1),
            gos_path: Some(GosPathObject {
                level: GosLevel(3),
                gosp_phop: Ipv4Addr::new(10, 0, 0, 1),
            }),
        };
        let mut bytes = encode(&m);
        rewrite_hop(&mut bytes, Ipv4Addr::new(10, 0, 0, 2)).unwrap();
        assert_eq!(
            decode(&bytes),
            Ok(ControlMessage::Path {
                session: 77,
                hop: Ipv4Addr::new(10, 0, 0, 2),
                gos_path: m_gos(&m),
            })
        );
    }

    fn m_gos(m: &ControlMessage) -> Option<GosPathObject> {
        match m {
            ControlMessage::Path { gos_path, .. } => *gos_path,
            _ => None,
        }
    }

    #[test]
    fn hex_helpers() {
        let bytes = parse_hex("# header\n10 01 00 00\nff00 # trailing\n").unwrap();
        assert_eq!(bytes, [0x10, 0x01, 0x00, 0x00, 0xff, 0x00]);
        assert_eq!(to_hex(&bytes), "10 01 00 00 ff 00");
        assert!(parse_hex("1").is_err());
    }
}
