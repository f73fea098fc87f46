#![no_main]

use egosense::{EmbeddingMatrix, Format, VectorKind};
use libfuzzer_sys::fuzz_target;

// Anything that parses must serialize to a fixed point.
fuzz_target!(|data: &[u8]| {
    let Ok(m) = EmbeddingMatrix::read(data, Format::Binary, VectorKind::Word) else {
        return;
    };
    let mut once = Vec::new();
    m.write(&mut once, Format::Binary).unwrap();
    let again = EmbeddingMatrix::read(&once[..], Format::Binary, VectorKind::Word).unwrap();
    let mut twice = Vec::new();
    again.write(&mut twice, Format::Binary).unwrap();
    assert_eq!(once, twice);
});
