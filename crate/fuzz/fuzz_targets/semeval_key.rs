#![no_main]

use egosense::eval::read_semeval_key;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_semeval_key(data);
});
