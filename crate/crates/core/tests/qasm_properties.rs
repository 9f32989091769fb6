mod common;

use proptest::prelude::*;
use vqpulse_core::qasm::{parse, serialize};
use vqpulse_core::Error;

const TOKENS: &[&str] = &[
    "qubits", "params", "rz", "rx", "h", "cx", "swap", "q[", "t[", "]", "(", ")", ";", ",",
    "*", "+", "-", "pi", "0", "1", "2.5", "1e3", "#", "\n", " ", "@", "99999999999999999999",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn serialize_then_parse_is_identity(c in common::circuit(4, 40)) {
        prop_assert_eq!(parse(&serialize(&c)).unwrap(), c);
    }

    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,200}") {
        let _ = parse(&s);
    }

    #[test]
    fn token_soup_is_parsed_or_rejected(parts in proptest::collection::vec(0..TOKENS.len(), 0..40)) {
        let text: String = parts.iter().map(|&i| TOKENS[i]).collect();
        match parse(&text) {
            Ok(_) => {}
            Err(Error::Syntax { line, column, .. }) => prop_assert!(line >= 1 && column >= 1),
            Err(_) => {}
        }
    }

    #[test]
    fn mutated_documents_never_panic(c in common::circuit(3, 10), cut in 0usize..400, byte in 0u8..128) {
        let mut text = serialize(&c).into_bytes();
        if !text.is_empty() {
            let at = cut % text.len();
            text[at] = byte;
        }
        let _ = parse(&String::from_utf8_lossy(&text));
    }
}
