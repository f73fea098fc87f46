#![no_main]

use egosense::eval::read_twsi_contexts;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_twsi_contexts(data);
});
