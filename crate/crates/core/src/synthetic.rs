//! Seeded synthetic data with a known sense structure: one ambiguous word
//! whose neighborhood splits into two planted communities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embedding::{EmbeddingMatrix, VectorKind};
use crate::knn::{Neighbor, SimilarityGraph};

pub const TARGET: &str = "table";

const FURNITURE: [&str; 10] = [
    "chair", "desk", "bench", "stool", "sofa", "cabinet", "shelf", "couch", "dresser", "bed",
];
const DATA: [&str; 10] = [
    "list", "chart", "index", "graph", "diagram", "ranking", "column", "matrix", "grid", "spreadsheet",
];

/// Member names of the two communities.
pub fn community_words(size: usize) -> [Vec<String>; 2] {
    let names = |base: &[&str], prefix: &str| -> Vec<String> {
        (0..size)
            .map(|i| match base.get(i) {
                Some(w) => (*w).to_owned(),
                None => format!("{prefix}{i}"),
            })
            .collect()
    };
    [names(&FURNITURE, "furniture"), names(&DATA, "data")]
}

/// A similarity graph in which the neighbors of [`TARGET`] form two
/// communities of `size` words. Intra-community weights are drawn around
/// `intra`, inter-community weights around `inter`.
pub fn planted_graph(seed: u64, size: usize, intra: f64, inter: f64) -> SimilarityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = community_words(size);
    let mut g = SimilarityGraph::new(4 * size + 1);
    let jitter = |rng: &mut ChaCha8Rng, center: f64, spread: f64| center + rng.gen_range(-spread..spread);

    let target_list = groups
        .iter()
        .flatten()
        .map(|w| Neighbor {
            word: w.clone(),
            weight: jitter(&mut rng, 0.6, 0.05),
        })
        .collect();
    g.insert(TARGET, target_list);

    for (gi, group) in groups.iter().enumerate() {
        for w in group {
            let mut list = vec![Neighbor {
                word: TARGET.to_owned(),
                weight: jitter(&mut rng, 0.6, 0.05),
            }];
            for (gj, other) in groups.iter().enumerate() {
                for v in other {
                    if v == w {
                        continue;
                    }
                    let weight = if gi == gj {
                        jitter(&mut rng, intra, 0.05)
                    } else {
                        jitter(&mut rng, inter, 0.02).max(0.0)
                    };
                    list.push(Neighbor {
                        word: v.clone(),
                        weight,
                    });
                }
            }
            g.insert(w.clone(), list);
        }
    }
    g
}

/// Embeddings with the same planted structure.
#[derive(Debug, Clone)]
pub struct PlantedEmbeddings {
    pub matrix: EmbeddingMatrix,
    pub communities: [Vec<String>; 2],
    /// Unit direction of each community.
    pub centroids: [Vec<f64>; 2],
}

/// Two communities of `size` words clustered around orthogonal directions,
/// [`TARGET`] halfway between them, and `fillers` unrelated words living in
/// the remaining dimensions. `noise` is the per-component standard
/// deviation added to every vector.
pub fn planted_embeddings(seed: u64, dim: usize, size: usize, fillers: usize, noise: f64) -> PlantedEmbeddings {
    assert!(dim >= 3, "need at least 3 dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).expect("valid standard deviation");
    let communities = community_words(size);
    let mut centroids = [vec![0.0; dim], vec![0.0; dim]];
    centroids[0][0] = 1.0;
    centroids[1][1] = 1.0;

    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    let noisy = |rng: &mut ChaCha8Rng, base: &[f64]| -> Vec<f32> {
        base.iter().map(|&x| (x + normal.sample(rng)) as f32).collect()
    };
    let mid: Vec<f64> = (0..dim)
        .map(|i| if i < 2 { std::f64::consts::FRAC_1_SQRT_2 } else { 0.0 })
        .collect();
    rows.push((TARGET.to_owned(), noisy(&mut rng, &mid)));
    for (c, group) in communities.iter().enumerate() {
        for w in group {
            let v = noisy(&mut rng, &centroids[c]);
            rows.push((w.clone(), v));
        }
    }
    let unit = Normal::new(0.0, 1.0).expect("valid standard deviation");
    for i in 0..fillers {
        let mut v: Vec<f64> = (0..dim).map(|d| if d < 2 { 0.0 } else { unit.sample(&mut rng) }).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        rows.push((format!("filler{i}"), noisy(&mut rng, &v)));
    }
    PlantedEmbeddings {
        matrix: EmbeddingMatrix::from_rows(rows, VectorKind::Word).expect("synthetic rows are valid"),
        communities,
        centroids,
    }
}
