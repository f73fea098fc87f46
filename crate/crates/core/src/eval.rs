//! Mapping-based WSD evaluation against a gold sense inventory, baselines,
//! clustering comparison metrics and dataset loaders.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::hash::Hash;
use std::io::{BufRead, BufReader};
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pooling::SenseKey;
use crate::wsd::tokenize;
use crate::wsi::{word_seed, InventorySource, SenseCluster, SenseInventory};

/// One sense-labelled occurrence of a target word.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub target: String,
    pub context: Vec<String>,
    pub gold_sense: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldDataset {
    pub instances: Vec<Instance>,
    pub gold_inventory: SenseInventory,
    /// Original sense labels where the source uses non-numeric ids.
    pub sense_names: HashMap<SenseKey, String>,
}

impl GoldDataset {
    /// Checks that every gold label exists in the gold inventory.
    pub fn new(instances: Vec<Instance>, gold_inventory: SenseInventory) -> Result<Self> {
        for inst in &instances {
            if gold_inventory.sense(&inst.target, inst.gold_sense).is_none() {
                return Err(Error::Integrity(format!(
                    "instance {} labelled {}#{} which is not in the gold inventory",
                    inst.id, inst.target, inst.gold_sense
                )));
            }
        }
        Ok(GoldDataset {
            instances,
            gold_inventory,
            sense_names: HashMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Distinct targets in instance order.
    pub fn targets(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.instances
            .iter()
            .map(|i| i.target.as_str())
            .filter(|t| seen.insert(*t))
            .collect()
    }

    /// Keeps the first `per_sense` instances of every gold sense, dropping
    /// targets with fewer than two gold senses.
    pub fn balanced(&self, per_sense: usize) -> GoldDataset {
        self.balanced_by(per_sense, |group| group.iter().copied().take(per_sense).collect())
    }

    /// Like [`balanced`](Self::balanced) but draws a seeded sample of each
    /// oversized sense group (kept in file order).
    pub fn balanced_resampled(&self, per_sense: usize, seed: u64) -> GoldDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.balanced_by(per_sense, |group| {
            if group.len() <= per_sense {
                return group.to_vec();
            }
            let mut picked: Vec<usize> = sample(&mut rng, group.len(), per_sense)
                .into_iter()
                .map(|i| group[i])
                .collect();
            picked.sort_unstable();
            picked
        })
    }

    fn balanced_by(&self, per_sense: usize, mut pick: impl FnMut(&[usize]) -> Vec<usize>) -> GoldDataset {
        let mut groups: IndexMap<(&str, u32), Vec<usize>> = IndexMap::new();
        for (i, inst) in self.instances.iter().enumerate() {
            let polysemous = self
                .gold_inventory
                .senses(&inst.target)
                .is_some_and(|s| s.len() >= 2);
            if polysemous && per_sense > 0 {
                groups.entry((&inst.target, inst.gold_sense)).or_default().push(i);
            }
        }
        let mut keep: Vec<usize> = groups.values().flat_map(|g| pick(g)).collect();
        keep.sort_unstable();
        GoldDataset {
            instances: keep.into_iter().map(|i| self.instances[i].clone()).collect(),
            gold_inventory: self.gold_inventory.clone(),
            sense_names: self.sense_names.clone(),
        }
    }
}

/// How bag-of-words vectors are weighted when matching senses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BowWeighting {
    /// Use the cluster member weights.
    #[default]
    AsGiven,
    /// Every member counts 1.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingOptions {
    /// A sense maps only when its best cosine exceeds this value.
    pub threshold: f64,
    pub induced_weighting: BowWeighting,
    pub gold_weighting: BowWeighting,
}

impl Default for MappingOptions {
    fn default() -> Self {
        MappingOptions {
            threshold: 0.0,
            induced_weighting: BowWeighting::AsGiven,
            gold_weighting: BowWeighting::AsGiven,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedSense {
    pub gold_sense: u32,
    pub cosine: f64,
}

/// Partial function from induced senses to gold senses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SenseMapping {
    pairs: HashMap<SenseKey, Option<MappedSense>>,
}

impl SenseMapping {
    pub fn insert(&mut self, key: SenseKey, target: Option<MappedSense>) {
        self.pairs.insert(key, target);
    }

    pub fn get(&self, word: &str, induced: u32) -> Option<u32> {
        self.lookup(&SenseKey::new(word, induced)).map(|m| m.gold_sense)
    }

    pub fn lookup(&self, key: &SenseKey) -> Option<MappedSense> {
        self.pairs.get(key).copied().flatten()
    }

    pub fn mapped(&self) -> usize {
        self.pairs.values().filter(|v| v.is_some()).count()
    }

    pub fn unmapped(&self) -> usize {
        self.pairs.values().filter(|v| v.is_none()).count()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Mapping entries sorted by key.
    pub fn entries(&self) -> Vec<(&SenseKey, Option<MappedSense>)> {
        let mut v: Vec<_> = self.pairs.iter().map(|(k, m)| (k, *m)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }
}

fn bag_of_words(cluster: &SenseCluster, weighting: BowWeighting) -> BTreeMap<&str, f64> {
    let mut bow = BTreeMap::new();
    for m in &cluster.members {
        let w = match weighting {
            BowWeighting::AsGiven => m.weight,
            BowWeighting::Binary => 1.0,
        };
        *bow.entry(m.word.as_str()).or_insert(0.0) += w;
    }
    bow
}

fn sparse_cosine(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let d: f64 = small
        .iter()
        .filter_map(|(k, x)| large.get(k).map(|y| x * y))
        .sum();
    if d == 0.0 {
        return 0.0;
    }
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

/// Maps every induced sense of a word shared by both inventories to the
/// gold sense with the most similar bag of words.
pub fn map_inventories(induced: &SenseInventory, gold: &SenseInventory, opts: &MappingOptions) -> SenseMapping {
    let mut mapping = SenseMapping::default();
    for (word, induced_senses) in induced.iter() {
        let Some(gold_senses) = gold.senses(word) else {
            continue;
        };
        let gold_bows: Vec<(u32, BTreeMap<&str, f64>)> = gold_senses
            .iter()
            .map(|g| (g.sense_id, bag_of_words(g, opts.gold_weighting)))
            .collect();
        for s in induced_senses {
            let bow = bag_of_words(s, opts.induced_weighting);
            let mut best: Option<MappedSense> = None;
            // Gold senses are in ascending id order, so strict `>` keeps the
            // lowest id among ties.
            for (gid, gbow) in &gold_bows {
                let c = sparse_cosine(&bow, gbow);
                if c > opts.threshold && best.is_none_or(|b| c > b.cosine) {
                    best = Some(MappedSense {
                        gold_sense: *gid,
                        cosine: c,
                    });
                }
            }
            mapping.insert(SenseKey::new(word, s.sense_id), best);
        }
    }
    mapping
}

/// Precision, recall and F of sense predictions after mapping.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WsdReport {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    /// All instances.
    pub total: usize,
    /// Predictions that map to a gold sense.
    pub mapped: usize,
    /// Predictions without a gold counterpart, failures included.
    pub unmapped: usize,
    /// Predictor failures.
    pub failed: usize,
    pub correct: usize,
}

impl WsdReport {
    fn from_counts(c: Counts) -> Self {
        let precision = if c.mapped > 0 {
            c.correct as f64 / c.mapped as f64
        } else {
            0.0
        };
        let recall = if c.total > 0 {
            c.correct as f64 / c.total as f64
        } else {
            0.0
        };
        let fscore = if precision > 0.0 && recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        WsdReport {
            precision,
            recall,
            fscore,
            total: c.total,
            mapped: c.mapped,
            unmapped: c.unmapped,
            failed: c.failed,
            correct: c.correct,
        }
    }

    pub const TSV_HEADER: &'static str = "system\tprecision\trecall\tfscore\ttotal\tmapped\tunmapped\tfailed\tcorrect";

    pub fn tsv_row(&self, name: &str) -> String {
        format!(
            "{name}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}",
            self.precision, self.recall, self.fscore, self.total, self.mapped, self.unmapped, self.failed, self.correct
        )
    }
}

/// Fixed-width table of named reports.
pub fn render_table(rows: &[(String, WsdReport)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}  {:>8}", "system", "prec", "recall", "F", "n");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{name:<width$}  {:>6.3}  {:>6.3}  {:>6.3}  {:>8}",
            r.precision, r.recall, r.fscore, r.total
        );
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    total: usize,
    mapped: usize,
    unmapped: usize,
    failed: usize,
    correct: usize,
}

impl Counts {
    fn merge(self, o: Counts) -> Counts {
        Counts {
            total: self.total + o.total,
            mapped: self.mapped + o.mapped,
            unmapped: self.unmapped + o.unmapped,
            failed: self.failed + o.failed,
            correct: self.correct + o.correct,
        }
    }
}

/// What a system said about one instance, in gold-sense space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Gold(u32),
    Unmapped,
    Failed,
}

fn tally(outcomes: impl ParallelIterator<Item = (u32, Outcome)>) -> WsdReport {
    let counts = outcomes
        .map(|(gold, o)| {
            let mut c = Counts {
                total: 1,
                ..Counts::default()
            };
            match o {
                Outcome::Gold(g) => {
                    c.mapped = 1;
                    c.correct = usize::from(g == gold);
                }
                Outcome::Unmapped => c.unmapped = 1,
                Outcome::Failed => {
                    c.unmapped = 1;
                    c.failed = 1;
                }
            }
            c
        })
        .reduce(Counts::default, Counts::merge);
    WsdReport::from_counts(counts)
}

/// Scores a predictor that returns induced sense ids for each instance.
/// Precision is over mapped predictions, recall over all instances.
pub fn evaluate_wsd<F, E>(dataset: &GoldDataset, predictor: F, mapping: &SenseMapping) -> WsdReport
where
    F: Fn(&Instance) -> std::result::Result<u32, E> + Sync,
    E: std::fmt::Display,
{
    tally(dataset.instances.par_iter().map(|inst| {
        let outcome = match predictor(inst) {
            Ok(sense) => match mapping.get(&inst.target, sense) {
                Some(g) => Outcome::Gold(g),
                None => Outcome::Unmapped,
            },
            Err(e) => {
                log::warn!("prediction failed for instance {}: {e}", inst.id);
                Outcome::Failed
            }
        };
        (inst.gold_sense, outcome)
    }))
}

/// Scores a predictor that answers directly in gold sense ids.
pub fn evaluate_gold_predictions<F>(dataset: &GoldDataset, predictor: F) -> WsdReport
where
    F: Fn(&Instance) -> Option<u32> + Sync,
{
    tally(dataset.instances.par_iter().map(|inst| {
        let o = predictor(inst).map_or(Outcome::Unmapped, Outcome::Gold);
        (inst.gold_sense, o)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineReports {
    /// Correct whenever some induced sense maps to the gold sense.
    pub upper_bound: WsdReport,
    /// Most frequent gold sense per target, counted over the dataset.
    pub gold_mfs: WsdReport,
    /// The largest induced cluster (sense 0) through the mapping.
    pub induced_mfs: WsdReport,
    pub random_gold: WsdReport,
    pub random_induced: WsdReport,
}

impl BaselineReports {
    pub fn named(&self) -> Vec<(String, WsdReport)> {
        vec![
            ("upper-bound".into(), self.upper_bound),
            ("mfs-gold".into(), self.gold_mfs),
            ("mfs-induced".into(), self.induced_mfs),
            ("random-gold".into(), self.random_gold),
            ("random-induced".into(), self.random_induced),
        ]
    }
}

pub fn baselines(dataset: &GoldDataset, induced: &SenseInventory, mapping: &SenseMapping, seed: u64) -> BaselineReports {
    let upper_bound = evaluate_gold_predictions(dataset, |inst| {
        let reachable = induced.senses(&inst.target)?.iter().any(|s| {
            mapping.get(&inst.target, s.sense_id) == Some(inst.gold_sense)
        });
        reachable.then_some(inst.gold_sense)
    });

    let mut freq: HashMap<(&str, u32), usize> = HashMap::new();
    for inst in &dataset.instances {
        *freq.entry((inst.target.as_str(), inst.gold_sense)).or_default() += 1;
    }
    let mut mfs: HashMap<&str, (usize, u32)> = HashMap::new();
    for (&(t, s), &n) in &freq {
        let e = mfs.entry(t).or_insert((n, s));
        if n > e.0 || (n == e.0 && s < e.1) {
            *e = (n, s);
        }
    }
    let gold_mfs = evaluate_gold_predictions(dataset, |inst| mfs.get(inst.target.as_str()).map(|e| e.1));

    let induced_mfs = evaluate_wsd(
        dataset,
        |inst| match induced.senses(&inst.target).and_then(|s| s.first()) {
            Some(c) => Ok(c.sense_id),
            None => Err(Error::UnknownTarget(inst.target.clone())),
        },
        mapping,
    );

    let pick = |inst: &Instance, senses: &[SenseCluster], salt: u64| -> Option<u32> {
        if senses.is_empty() {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(word_seed(seed ^ salt, &inst.id));
        Some(senses[rng.gen_range(0..senses.len())].sense_id)
    };
    let random_gold = evaluate_gold_predictions(dataset, |inst| {
        pick(inst, dataset.gold_inventory.senses(&inst.target).unwrap_or_default(), 0)
    });
    let random_induced = evaluate_wsd(
        dataset,
        |inst| {
            pick(inst, induced.senses(&inst.target).unwrap_or_default(), 1)
                .ok_or_else(|| Error::UnknownTarget(inst.target.clone()))
        },
        mapping,
    );

    BaselineReports {
        upper_bound,
        gold_mfs,
        induced_mfs,
        random_gold,
        random_induced,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterScores {
    pub nmi: f64,
    pub bcubed_precision: f64,
    pub bcubed_recall: f64,
    pub bcubed_f: f64,
}

/// Crisp NMI (arithmetic-mean normalization) and B-Cubed between two
/// labelings of the same instances.
pub fn clustering_metrics<K, P, G>(predicted: &HashMap<K, P>, gold: &HashMap<K, G>) -> Result<ClusterScores>
where
    K: Eq + Hash,
    P: Eq + Hash,
    G: Eq + Hash,
{
    if predicted.len() != gold.len() || predicted.keys().any(|k| !gold.contains_key(k)) {
        return Err(Error::LabelMismatch);
    }
    if predicted.is_empty() {
        return Err(Error::InvalidParameter("no instances to compare".into()));
    }
    let mut joint: HashMap<(&P, &G), usize> = HashMap::new();
    let mut pred_sizes: HashMap<&P, usize> = HashMap::new();
    let mut gold_sizes: HashMap<&G, usize> = HashMap::new();
    for (k, p) in predicted {
        let g = &gold[k];
        *joint.entry((p, g)).or_default() += 1;
        *pred_sizes.entry(p).or_default() += 1;
        *gold_sizes.entry(g).or_default() += 1;
    }
    let n = predicted.len() as f64;

    let entropy = |sizes: Vec<usize>| -> f64 {
        sizes
            .into_iter()
            .map(|c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let hp = entropy(pred_sizes.values().copied().collect());
    let hg = entropy(gold_sizes.values().copied().collect());
    let mut mi = 0.0;
    let mut precision = 0.0;
    let mut recall = 0.0;
    for (&(p, g), &c) in &joint {
        let c = c as f64;
        let a = pred_sizes[p] as f64;
        let b = gold_sizes[g] as f64;
        mi += c / n * (n * c / (a * b)).ln();
        precision += c * c / a;
        recall += c * c / b;
    }
    let nmi = if hp + hg == 0.0 {
        1.0
    } else {
        (mi / ((hp + hg) / 2.0)).clamp(0.0, 1.0)
    };
    let precision = precision / n;
    let recall = recall / n;
    let bcubed_f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ClusterScores {
        nmi,
        bcubed_precision: precision,
        bcubed_recall: recall,
        bcubed_f,
    })
}

/// Clustering metrics computed per target and averaged over targets.
pub fn evaluate_clustering<F>(dataset: &GoldDataset, predictor: F) -> Result<ClusterScores>
where
    F: Fn(&Instance) -> Option<u32> + Sync,
{
    let mut per_target: IndexMap<&str, (HashMap<usize, i64>, HashMap<usize, u32>)> = IndexMap::new();
    for (i, inst) in dataset.instances.iter().enumerate() {
        let e = per_target.entry(&inst.target).or_default();
        // Missing predictions form one shared "no answer" cluster.
        e.0.insert(i, predictor(inst).map_or(-1, i64::from));
        e.1.insert(i, inst.gold_sense);
    }
    if per_target.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    let scores: Vec<ClusterScores> = per_target
        .values()
        .map(|(p, g)| clustering_metrics(p, g))
        .collect::<Result<_>>()?;
    let k = scores.len() as f64;
    let avg = |f: fn(&ClusterScores) -> f64| scores.iter().map(f).sum::<f64>() / k;
    Ok(ClusterScores {
        nmi: avg(|s| s.nmi),
        bcubed_precision: avg(|s| s.bcubed_precision),
        bcubed_recall: avg(|s| s.bcubed_recall),
        bcubed_f: avg(|s| s.bcubed_f),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path.to_owned())),
        Err(e) => Err(e.into()),
    }
}

/// Sentence tokens without occurrences of the target.
pub fn context_tokens(sentence: &str, target: &str) -> Vec<String> {
    tokenize(sentence).into_iter().filter(|t| t != target).collect()
}

/// Loads a TWSI-style dataset directory holding `inventory.tsv` (the gold
/// inventory, substitutions as members) and `contexts.tsv`
/// (`id<TAB>target<TAB>goldSenseId<TAB>sentence`).
pub fn load_twsi(dir: impl AsRef<Path>) -> Result<GoldDataset> {
    let dir = dir.as_ref();
    let inv_path = dir.join("inventory.tsv");
    let ctx_path = dir.join("contexts.tsv");
    let inventory = SenseInventory::read(open(&inv_path)?)?;
    let instances = read_twsi_contexts(open(&ctx_path)?)?;
    GoldDataset::new(instances, inventory)
}

pub fn read_twsi_contexts<R: BufRead>(reader: R) -> Result<Vec<Instance>> {
    let mut instances = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut f = line.splitn(4, '\t');
        let (Some(id), Some(target), Some(sense), Some(sentence)) = (f.next(), f.next(), f.next(), f.next())
        else {
            return Err(Error::parse(lineno, "expected id<TAB>target<TAB>senseId<TAB>sentence"));
        };
        if id.is_empty() || target.is_empty() {
            return Err(Error::parse(lineno, "empty id or target"));
        }
        let gold_sense = sense
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid sense id {sense:?}")))?;
        instances.push(Instance {
            id: id.to_owned(),
            target: target.to_owned(),
            context: context_tokens(sentence, target),
            gold_sense,
        });
    }
    Ok(instances)
}

/// Loads a SemEval-2013-style directory holding `contexts.tsv`
/// (`id<TAB>lemma.pos<TAB>sentence`) and `gold.key`
/// (`lemma.pos id sense[/weight] ...`). The heaviest gold sense of an
/// instance is its crisp label; sense labels become per-lemma ids in order
/// of first appearance.
pub fn load_semeval13(dir: impl AsRef<Path>) -> Result<GoldDataset> {
    let dir = dir.as_ref();
    let key_path = dir.join("gold.key");
    let ctx_path = dir.join("contexts.tsv");
    let keys = read_semeval_key(open(&key_path)?)?;
    let mut instances = Vec::new();
    let mut ids: IndexMap<String, IndexMap<String, u32>> = IndexMap::new();
    for (lineno, line) in open(&ctx_path)?.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut f = line.splitn(3, '\t');
        let (Some(id), Some(lemma_pos), Some(sentence)) = (f.next(), f.next(), f.next()) else {
            return Err(Error::parse(lineno, "expected id<TAB>lemma.pos<TAB>sentence"));
        };
        let label = keys
            .get(id)
            .ok_or_else(|| Error::Integrity(format!("instance {id} has no gold key")))?;
        let lemma = strip_pos(lemma_pos);
        let table = ids.entry(lemma.to_owned()).or_default();
        let next = table.len() as u32;
        let gold_sense = *table.entry(label.clone()).or_insert(next);
        instances.push(Instance {
            id: id.to_owned(),
            target: lemma.to_owned(),
            context: context_tokens(sentence, lemma),
            gold_sense,
        });
    }
    let mut inventory = SenseInventory::new(InventorySource::External);
    let mut names = HashMap::new();
    for (lemma, table) in &ids {
        let clusters = table
            .iter()
            .map(|(label, &id)| {
                names.insert(SenseKey::new(lemma.clone(), id), label.clone());
                SenseCluster {
                    word: lemma.clone(),
                    sense_id: id,
                    members: Vec::new(),
                }
            })
            .collect();
        inventory.insert(lemma.clone(), clusters)?;
    }
    let mut dataset = GoldDataset::new(instances, inventory)?;
    dataset.sense_names = names;
    Ok(dataset)
}

/// Parses a gold key file into instance id → heaviest sense label.
pub fn read_semeval_key<R: BufRead>(reader: R) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut f = line.split_whitespace();
        let (Some(_lemma), Some(id)) = (f.next(), f.next()) else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(lineno, "expected lemma.pos id sense..."));
        };
        let mut best: Option<(f64, &str)> = None;
        for item in f {
            let (label, weight) = match item.rsplit_once('/') {
                Some((l, w)) => (
                    l,
                    w.parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("invalid sense weight in {item:?}")))?,
                ),
                None => (item, 1.0),
            };
            if best.is_none_or(|b| weight > b.0) {
                best = Some((weight, label));
            }
        }
        let (_, label) = best.ok_or_else(|| Error::parse(lineno, "no sense listed"))?;
        if out.insert(id.to_owned(), label.to_owned()).is_some() {
            return Err(Error::parse(lineno, format!("duplicate instance {id}")));
        }
    }
    Ok(out)
}

fn strip_pos(lemma_pos: &str) -> &str {
    match lemma_pos.rsplit_once('.') {
        Some((lemma, pos)) if !lemma.is_empty() && pos.len() == 1 => lemma,
        _ => lemma_pos,
    }
}
