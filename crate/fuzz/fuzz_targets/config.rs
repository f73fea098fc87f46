#![no_main]

use egosense_cli::{parse_config, PipelineConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(map) = parse_config(text) {
        let _ = PipelineConfig::from_map(&map);
    }
});
