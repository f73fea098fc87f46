#![no_main]

use egosense::wsd::read_batch;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(items) = read_batch(data) {
        assert!(items.iter().all(|i| !i.target.is_empty()));
    }
});
