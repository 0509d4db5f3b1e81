mod common;

use gos_core::codec::{decode, encode, split_objects, ControlMessage, COMMON_HEADER_LEN};
use proptest::prelude::*;

/// Offsets of every object length field in an encoded message.
fn length_fields(bytes: &[u8]) -> Vec<usize> {
    split_objects(bytes).unwrap().1.iter().map(|o| o.offset).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn round_trip(m in common::arb_message()) {
        let bytes = encode(&m);
        prop_assert_eq!(decode(&bytes), Ok(m));
    }

    #[test]
    fn objects_are_word_aligned(m in common::arb_message()) {
        let bytes = encode(&m);
        prop_assert_eq!(bytes.len() % 4, 0);
        let (_, objects) = split_objects(&bytes).unwrap();
        let mut covered = COMMON_HEADER_LEN;
        for o in &objects {
            prop_assert_eq!(o.offset, covered);
            covered += 4 + o.body.len();
            prop_assert_eq!((4 + o.body.len()) % 4, 0);
        }
        prop_assert_eq!(covered, bytes.len());
    }

    #[test]
    fn corrupted_length_never_misreads(m in common::arb_message(), pick in any::<prop::sample::Index>(), hi in any::<bool>(), value in any::<u8>()) {
        let mut bytes = encode(&m);
        let fields = length_fields(&bytes);
        let at = fields[pick.index(fields.len())] + usize::from(!hi);
        if bytes[at] == value {
            return Ok(());
        }
        bytes[at] = value;
        // a frame that swallows its neighbour must fail on the body length
        // rather than reinterpret the neighbour's bytes
        if let Ok(back) = decode(&bytes) {
            prop_assert_eq!(back, m);
        }
    }
}

#[test]
fn golden_vectors_match() {
    for (file, msg) in common::golden_vectors() {
        let bytes = common::testdata(file);
        assert_eq!(encode(&msg), bytes, "{file}");
        assert_eq!(decode(&bytes), Ok(msg), "{file}");
    }
}

#[test]
fn plain_hello_ack_has_no_extension() {
    let plain = ControlMessage::HelloAck {
        src_instance: 2,
        dst_instance: 1,
        gos_ack: None,
    };
    let bytes = encode(&plain);
    assert_eq!(split_objects(&bytes).unwrap().1.len(), 1);
    assert_eq!(bytes, common::testdata("hello_ack_plain.hex"));
}
