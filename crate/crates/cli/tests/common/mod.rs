#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use egosense::synthetic::planted_embeddings;
use egosense::Format;

pub const PLANTED_SEED: u64 = 17;

/// Induction flags under which the planted fixture's ego network holds
/// only the two communities.
pub const PLANTED_FLAGS: [&str; 8] = ["--top-n", "20", "--N", "20", "--n", "10", "--k", "5"];

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub embeddings: PathBuf,
    pub twsi: PathBuf,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

const TWSI_INVENTORY: &str = "\
table\t0\tchair:3,desk:2,bench:1,sofa:1
table\t1\tlist:3,chart:2,grid:1,index:1
";

const TWSI_CONTEXTS: &[(u32, &str)] = &[
    (0, "put the table next to the chair"),
    (0, "a table and a desk and a stool"),
    (0, "the sofa faced the table"),
    (0, "table legs like a bench"),
    (0, "move the cabinet beside the table"),
    (1, "the table lists every chart"),
    (1, "sort the table like a spreadsheet"),
    (1, "a table is a grid of rows"),
    (1, "the table has an index column"),
    (1, "each ranking in the table"),
];

/// Planted two-sense embeddings plus a TWSI-style dataset for `table`.
pub fn planted_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let embeddings = dir.path().join("planted.vec");
    planted_embeddings(PLANTED_SEED, 16, 10, 30, 0.08)
        .matrix
        .save(&embeddings, Format::Text)
        .unwrap();
    let twsi = dir.path().join("twsi");
    fs::create_dir(&twsi).unwrap();
    fs::write(twsi.join("inventory.tsv"), TWSI_INVENTORY).unwrap();
    let contexts: String = TWSI_CONTEXTS
        .iter()
        .enumerate()
        .map(|(i, (g, s))| format!("c{i}\ttable\t{g}\t{s}\n"))
        .collect();
    fs::write(twsi.join("contexts.tsv"), contexts).unwrap();
    Fixture { dir, embeddings, twsi }
}

pub fn egosense<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_egosense"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// All files under `dir`, sorted by name, with their bytes.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}
