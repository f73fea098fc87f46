//! Writes the planted two-sense fixture as word2vec text to the given path.

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "planted.vec".into());
    let p = egosense::synthetic::planted_embeddings(17, 16, 10, 30, 0.08);
    p.matrix
        .save(&path, egosense::Format::Text)
        .expect("cannot write fixture");
}
