#![no_main]

use egosense::SimilarityGraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&top_n, body)) = data.split_first() else {
        return;
    };
    let top_n = usize::from(top_n % 16) + 1;
    let Ok((g, _)) = SimilarityGraph::read(body, top_n) else {
        return;
    };
    assert!(g.iter().all(|(_, ns)| ns.len() <= top_n));
    let mut once = Vec::new();
    g.write(&mut once).unwrap();
    let (again, _) = SimilarityGraph::read(&once[..], top_n).unwrap();
    let mut twice = Vec::new();
    again.write(&mut twice).unwrap();
    assert_eq!(once, twice);
});
