#![no_main]

use egosense::{EmbeddingMatrix, Format, VectorKind};
use libfuzzer_sys::fuzz_target;

// Anything that parses must serialize to a fixed point.
fuzz_target!(|data: &[u8]| {
    let Ok(m) = EmbeddingMatrix::read(data, Format::Text, VectorKind::Word) else {
        return;
    };
    let mut once = Vec::new();
    m.write(&mut once, Format::Text).unwrap();
    let again = EmbeddingMatrix::read(&once[..], Format::Text, VectorKind::Word).unwrap();
    let mut twice = Vec::new();
    again.write(&mut twice, Format::Text).unwrap();
    assert_eq!(once, twice);
});
