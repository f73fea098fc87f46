use std::collections::{BTreeSet, HashMap, HashSet};

use egosense::knn::{Neighbor, SimilarityGraph};
use egosense::synthetic::{community_words, planted_graph, TARGET};
use egosense::wsi::{
    build_ego_network, chinese_whispers, induce_inventory, induce_word, EgoNetwork, InductionParams, SenseCluster,
    SenseInventory,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(n_big: usize, n: usize, k: usize, seed: u64) -> InductionParams {
    InductionParams {
        ego_size: n_big,
        connectivity: n,
        min_cluster_size: k,
        max_iterations: 20,
        seed,
    }
}

/// Every word gets `degree` distinct random neighbors with random weights.
fn random_graph(seed: u64, words: usize, degree: usize) -> SimilarityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..words).map(|i| format!("v{i:03}")).collect();
    let mut g = SimilarityGraph::new(degree);
    for (i, w) in vocab.iter().enumerate() {
        let others: Vec<&String> = vocab.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).collect();
        let list = others
            .choose_multiple(&mut rng, degree)
            .map(|v| Neighbor {
                word: (*v).clone(),
                weight: rng.gen_range(0.0..1.0),
            })
            .collect();
        g.insert(w.clone(), list);
    }
    g
}

/// Random graph whose words carry one of `topics` hidden labels; same-topic
/// pairs get a weight bonus.
fn topical_graph(seed: u64, words: usize, degree: usize, topics: usize) -> SimilarityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic: Vec<usize> = (0..words).map(|_| rng.gen_range(0..topics)).collect();
    let vocab: Vec<String> = (0..words).map(|i| format!("v{i:03}")).collect();
    let mut g = SimilarityGraph::new(degree);
    for i in 0..words {
        let list = (0..words)
            .filter(|&j| j != i)
            .map(|j| Neighbor {
                word: vocab[j].clone(),
                weight: rng.gen_range(0.0..0.5) + if topic[i] == topic[j] { 0.5 } else { 0.0 },
            })
            .collect();
        g.insert(vocab[i].clone(), list);
    }
    g
}

fn member_sets(clusters: &[SenseCluster]) -> BTreeSet<BTreeSet<String>> {
    clusters
        .iter()
        .map(|c| c.members.iter().map(|m| m.word.clone()).collect())
        .collect()
}

#[test]
fn ego_network_matches_two_loop_reference() {
    let g = random_graph(1, 200, 60);
    let (big_n, n) = (50, 10);
    for target in ["v000", "v077", "v199"] {
        let net = build_ego_network(target, &g, big_n, n).unwrap();
        let nodes: Vec<String> = g.neighbors(target).unwrap()[..big_n].iter().map(|x| x.word.clone()).collect();
        assert_eq!(net.nodes, nodes);

        let mut reference: HashMap<(String, String), f64> = HashMap::new();
        for v in &nodes {
            for u in g.neighbors(v).unwrap().iter().take(n) {
                if nodes.contains(&u.word) {
                    let key = if *v < u.word {
                        (v.clone(), u.word.clone())
                    } else {
                        (u.word.clone(), v.clone())
                    };
                    let w = reference.entry(key).or_insert(u.weight);
                    *w = w.max(u.weight);
                }
            }
        }
        let got: HashMap<(String, String), f64> = net
            .edges()
            .into_iter()
            .map(|(a, b, w)| {
                let (x, y) = (net.nodes[a].clone(), net.nodes[b].clone());
                (if x < y { (x, y) } else { (y, x) }, w)
            })
            .collect();
        assert_eq!(got, reference);
    }
}

#[test]
fn node_without_inside_neighbors_is_isolated() {
    let mut g = SimilarityGraph::new(5);
    let n = |w: &str, x: f64| Neighbor { word: w.into(), weight: x };
    g.insert("t", vec![n("a", 0.9), n("b", 0.8), n("c", 0.7)]);
    g.insert("a", vec![n("b", 0.5)]);
    g.insert("b", vec![n("a", 0.5)]);
    g.insert("c", vec![n("z", 0.9), n("t", 0.8)]);
    let net = build_ego_network("t", &g, 3, 2).unwrap();
    assert!(net.adjacency[2].is_empty());
    assert_eq!(net.edges(), vec![(0, 1, 0.5)]);
}

fn clique_edges(offset: usize, size: usize, weight: f64) -> Vec<(usize, usize, f64)> {
    let mut e = Vec::new();
    for a in offset..offset + size {
        for b in a + 1..offset + size {
            e.push((a, b, weight));
        }
    }
    e
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

#[test]
fn separate_cliques_become_separate_clusters() {
    let mut edges = clique_edges(0, 5, 1.0);
    edges.extend(clique_edges(5, 5, 1.0));
    let net = EgoNetwork::from_edges("t", names(10), &edges);
    for seed in 0..50 {
        let c = chinese_whispers(&net, 20, seed);
        assert_eq!(c.clusters(), vec![(0..5).collect::<Vec<_>>(), (5..10).collect()]);
    }
}

#[test]
fn triangle_is_one_cluster() {
    let net = EgoNetwork::from_edges("t", names(3), &clique_edges(0, 3, 0.5));
    let c = chinese_whispers(&net, 20, 9);
    assert_eq!(c.clusters(), vec![vec![0, 1, 2]]);
    assert!(c.converged);
}

#[test]
fn bridged_cliques_split_under_every_seed() {
    let mut edges = clique_edges(0, 10, 1.0);
    edges.extend(clique_edges(10, 10, 1.0));
    edges.push((3, 14, 0.1));
    let net = EgoNetwork::from_edges("t", names(20), &edges);
    for seed in 0..20 {
        let c = chinese_whispers(&net, 20, seed);
        assert_eq!(c.clusters(), vec![(0..10).collect::<Vec<_>>(), (10..20).collect()]);
    }
}

#[test]
fn disconnected_components_never_merge() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for fixture in 0..100 {
        let sizes: Vec<usize> = (0..rng.gen_range(2..6)).map(|_| rng.gen_range(1..9)).collect();
        let total: usize = sizes.iter().sum();
        let mut perm: Vec<usize> = (0..total).collect();
        perm.shuffle(&mut rng);
        let mut component = vec![0; total];
        let mut edges = Vec::new();
        let mut offset = 0;
        for (ci, &s) in sizes.iter().enumerate() {
            for a in offset..offset + s {
                component[perm[a]] = ci;
                for b in a + 1..offset + s {
                    edges.push((perm[a], perm[b], rng.gen_range(0.01..1.0)));
                }
            }
            offset += s;
        }
        let net = EgoNetwork::from_edges("t", names(total), &edges);
        let c = chinese_whispers(&net, 20, fixture);
        assert!(c.converged && c.sweeps <= 20, "fixture {fixture} took {} sweeps", c.sweeps);
        for cluster in c.clusters() {
            let comps: HashSet<usize> = cluster.iter().map(|&v| component[v]).collect();
            assert_eq!(comps.len(), 1, "fixture {fixture} merged components");
        }
    }
}

#[test]
fn empty_network_gives_empty_partition() {
    let net = EgoNetwork::from_edges("t", Vec::new(), &[]);
    assert!(chinese_whispers(&net, 20, 1).clusters().is_empty());
}

#[test]
fn planted_communities_give_two_senses() {
    let groups = community_words(10);
    let expected: BTreeSet<BTreeSet<String>> =
        groups.iter().map(|g| g.iter().cloned().collect()).collect();
    for seed in 0..20 {
        let g = planted_graph(seed, 10, 0.8, 0.05);
        for k in [2, 5] {
            let (senses, _) = induce_word(TARGET, &g, &params(200, 200, k, seed)).unwrap();
            assert_eq!(senses.len(), 2, "seed {seed}, k {k}");
            assert_eq!(member_sets(&senses), expected);
            for s in &senses {
                for m in &s.members {
                    let w = g.neighbors(TARGET).unwrap().iter().find(|n| n.word == m.word).unwrap().weight;
                    assert_eq!(m.weight, w);
                }
            }
        }
    }
}

#[test]
fn oversized_k_leaves_every_word_empty() {
    let g = planted_graph(3, 10, 0.8, 0.05);
    let (inv, stats) = induce_inventory(&g, &params(20, 20, 21, 1), None).unwrap();
    assert_eq!(inv.len(), g.len());
    assert_eq!(inv.sense_count(), 0);
    assert_eq!(stats.empty_words, g.len());
}

#[test]
fn finer_connectivity_gives_at_least_as_many_senses() {
    let (mut coarse, mut fine) = (0.0, 0.0);
    for seed in 0..20 {
        let g = topical_graph(1000 + seed, 260, 220, 8);
        let targets: Vec<String> = g.words().take(25).map(str::to_owned).collect();
        let (a, _) = induce_inventory(&g, &params(200, 200, 15, seed), Some(&targets)).unwrap();
        let (b, _) = induce_inventory(&g, &params(200, 50, 5, seed), Some(&targets)).unwrap();
        assert!(b.average_senses() >= a.average_senses(), "graph {seed}");
        coarse += a.average_senses();
        fine += b.average_senses();
    }
    assert!(fine >= coarse, "fine {fine} < coarse {coarse}");
}

#[test]
fn larger_k_keeps_a_subset_of_clusters() {
    let g = random_graph(8, 150, 80);
    let (k5, _) = induce_inventory(&g, &params(60, 8, 5, 4), None).unwrap();
    let (k15, _) = induce_inventory(&g, &params(60, 8, 15, 4), None).unwrap();
    for (word, senses) in k15.iter() {
        let small = member_sets(k5.senses(word).unwrap());
        assert!(member_sets(senses).is_subset(&small), "{word}");
    }
}

#[test]
fn targets_never_belong_to_their_own_senses() {
    let mut g = random_graph(12, 80, 40);
    let n = |w: &str| Neighbor { word: w.into(), weight: 2.0 };
    g.insert("v001", vec![n("v001"), n("v002")]);
    let (inv, _) = induce_inventory(&g, &params(40, 10, 1, 0), None).unwrap();
    for (word, senses) in inv.iter() {
        for s in senses {
            assert!(s.members.iter().all(|m| m.word != word));
        }
    }
}

#[test]
fn sense_ids_follow_size_order() {
    let g = random_graph(21, 120, 60);
    let (inv, _) = induce_inventory(&g, &params(60, 5, 1, 3), None).unwrap();
    for (_, senses) in inv.iter() {
        for (i, pair) in senses.windows(2).enumerate() {
            assert_eq!(pair[0].sense_id as usize, i);
            let first = |c: &SenseCluster| c.members.iter().map(|m| m.word.clone()).min().unwrap();
            assert!(
                pair[0].len() > pair[1].len() || (pair[0].len() == pair[1].len() && first(&pair[0]) < first(&pair[1]))
            );
        }
    }
}

#[test]
fn inventory_is_identical_across_thread_pools() {
    let g = random_graph(5, 150, 70);
    let p = params(50, 10, 3, 77);
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let (inv, _) = pool.install(|| induce_inventory(&g, &p, None).unwrap());
        let mut out = Vec::new();
        inv.write(&mut out).unwrap();
        out
    };
    let one = render(1);
    assert_eq!(one, render(8));
    assert_eq!(one, render(1));
}

#[test]
fn induced_inventory_round_trips() {
    let g = random_graph(6, 100, 50);
    let (inv, _) = induce_inventory(&g, &params(50, 10, 2, 1), None).unwrap();
    let mut buf = Vec::new();
    inv.write(&mut buf).unwrap();
    assert_eq!(SenseInventory::read(&buf[..]).unwrap(), inv);
}

#[test]
fn inventory_line_parses() {
    let inv = SenseInventory::read("table\t0\tchair:0.9,desk:0.8\n".as_bytes()).unwrap();
    let c = inv.sense("table", 0).unwrap();
    assert_eq!(c.members.len(), 2);
    assert_eq!(c.members[1].word, "desk");
    assert!(SenseInventory::read("t\t0\ta:1\nt\t0\tb:1\n".as_bytes()).is_err());
}

fn inventory() -> impl Strategy<Value = SenseInventory> {
    let cluster = prop::collection::btree_map("[a-z]{1,5}", 0.001f64..10.0, 0..6);
    let entry = ("[a-z]{1,5}", prop::collection::vec(cluster, 0..4));
    prop::collection::btree_map("[a-z]{1,5}", entry.prop_map(|e| e.1), 0..8).prop_map(|entries| {
        let mut inv = SenseInventory::new(egosense::wsi::InventorySource::External);
        for (word, clusters) in entries {
            let clusters = clusters
                .into_iter()
                .enumerate()
                .map(|(i, members)| SenseCluster {
                    word: word.clone(),
                    sense_id: i as u32,
                    members: members
                        .into_iter()
                        .filter(|(m, _)| *m != word)
                        .map(|(m, w)| Neighbor { word: m, weight: w })
                        .collect(),
                })
                .collect();
            inv.insert(word, clusters).unwrap();
        }
        inv
    })
}

proptest! {
    #[test]
    fn inventory_tsv_round_trip_is_identity(inv in inventory()) {
        let mut buf = Vec::new();
        inv.write(&mut buf).unwrap();
        prop_assert_eq!(SenseInventory::read(&buf[..]).unwrap(), inv);
    }
}
