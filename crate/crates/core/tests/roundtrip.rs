mod common;

use proptest::prelude::*;

use sentinel::corpus::builtin_corpus;
use sentinel::wat::leb128::{read_signed, read_unsigned, write_i64, write_u64};
use sentinel::wat::{assemble, decode_module, encode_module, parse_wat, validate_module};

use common::{arb_module, arb_typed_text, LEB_BOUNDARIES};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decode_inverts_encode(m in arb_module()) {
        let bytes = encode_module(&m).expect("generated modules are encodable");
        let back = decode_module(&bytes).expect("own output decodes");
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(encode_module(&back).unwrap(), bytes);
    }

    #[test]
    fn encode_is_pure(m in arb_module()) {
        prop_assert_eq!(encode_module(&m).unwrap(), encode_module(&m.clone()).unwrap());
    }

    #[test]
    fn unsigned_varint_round_trips(n in any::<u64>()) {
        let mut buf = Vec::new();
        write_u64(&mut buf, n);
        prop_assert_eq!(read_unsigned(&buf, 64).unwrap(), (n, buf.len()));
    }

    #[test]
    fn signed_varint_round_trips(n in any::<i64>()) {
        let mut buf = Vec::new();
        write_i64(&mut buf, n);
        prop_assert_eq!(read_signed(&buf, 64).unwrap(), (n, buf.len()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Well-typed text assembles byte-for-byte like the `wat` crate, and
    /// both validators accept it.
    #[test]
    fn typed_text_matches_wat_crate(text in arb_typed_text()) {
        let ours = assemble(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let theirs = wat::parse_str(&text).expect("wat crate parses");
        prop_assert_eq!(&ours, &theirs, "{}", text);
        let report = validate_module(&parse_wat(&text).unwrap());
        prop_assert!(report.is_valid(), "{:?}\n{}", report.violations, text);
        wasmparser::Validator::new().validate_all(&ours).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    }
}

#[test]
fn varint_boundaries() {
    let expected_len = [1usize, 1, 2, 3, 5, 10];
    for (&n, &len) in LEB_BOUNDARIES.iter().zip(&expected_len) {
        let mut buf = Vec::new();
        write_u64(&mut buf, n);
        assert_eq!(buf.len(), len, "{n}");
        assert_eq!(read_unsigned(&buf, 64).unwrap(), (n, len));
    }
    let mut buf = Vec::new();
    write_u64(&mut buf, 624485);
    assert_eq!(buf, [0xe5, 0x8e, 0x26]);
}

#[test]
fn corpus_agrees_with_wasmparser() {
    for case in builtin_corpus() {
        let bytes = case.module_bytes().expect("assembles");
        let ours = validate_module(&decode_module(&bytes).expect("decodes")).is_valid();
        let theirs = wasmparser::Validator::new().validate_all(&bytes).is_ok();
        assert_eq!(ours, theirs, "{}", case.id);
        assert_eq!(ours, !case.expects_invalid(), "{}", case.id);
    }
}
