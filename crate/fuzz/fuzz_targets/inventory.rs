#![no_main]

use egosense::SenseInventory;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(inv) = SenseInventory::read(data) else {
        return;
    };
    let mut once = Vec::new();
    inv.write(&mut once).unwrap();
    let again = SenseInventory::read(&once[..]).unwrap();
    let mut twice = Vec::new();
    again.write(&mut twice).unwrap();
    assert_eq!(once, twice);
});
