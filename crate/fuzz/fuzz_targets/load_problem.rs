//! Fuzzes the problem-document decoder: accepted documents must survive a
//! serialize/reparse round trip unchanged, and instantiation may reject
//! but must never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use semichaos::cli::document::parse_document;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_document(src) else { return };
    let json = serde_json::to_string(&doc).expect("accepted documents serialize");
    let again = parse_document(&json)
        .unwrap_or_else(|e| panic!("serialized document rejected: {json}: {e}"));
    let json2 = serde_json::to_string(&again).unwrap();
    assert_eq!(json, json2, "document round trip is not a fixed point");
    let _ = doc.instantiate();
});
