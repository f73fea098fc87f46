//! Disambiguation of a target word in context with sense vectors.
//!
//! Two scoring strategies are supported. `Probability` scores a sense by the
//! logistic of its dot product with the mean *context* embedding of the
//! context words. `Similarity` scores it by cosine with the mean *word*
//! embedding. Optional filtering keeps only the `p` context words whose
//! scores vary most across the senses of the target.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::embedding::{cosine, dot, widen, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::pooling::{SenseKey, SenseVectorStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Probability,
    #[default]
    Similarity,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prob" | "probability" => Ok(Strategy::Probability),
            "sim" | "similarity" => Ok(Strategy::Similarity),
            other => Err(Error::InvalidParameter(format!("unknown strategy {other:?}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Probability => "prob",
            Strategy::Similarity => "sim",
        })
    }
}

pub const DEFAULT_FILTER_P: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct DisambiguationRequest {
    pub target: String,
    pub context: Vec<String>,
    pub strategy: Strategy,
    pub filter_p: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenseScore {
    pub sense_id: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisambiguationResult {
    pub chosen: u32,
    /// One score per sense, ascending by sense id. Empty on fallback.
    pub scores: Vec<SenseScore>,
    /// Context words that entered the mean vector.
    pub used_context: Vec<String>,
    pub strategy: Strategy,
    /// No usable context; the first (largest) sense was returned.
    pub fallback: bool,
}

impl DisambiguationResult {
    pub fn chosen_score(&self) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.sense_id == self.chosen)
            .map(|s| s.score)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextMean {
    pub vector: Vec<f64>,
    pub used: Vec<String>,
    pub missing: Vec<String>,
}

/// Arithmetic mean of the vectors of the context words present in `m`.
pub fn mean_context_vector<S: AsRef<str>>(context: &[S], m: &EmbeddingMatrix) -> Result<ContextMean> {
    let mut acc = vec![0.0f64; m.dim()];
    let mut used = Vec::new();
    let mut missing = Vec::new();
    for word in context {
        let word = word.as_ref();
        match m.get(word) {
            Some(row) => {
                for (a, &x) in acc.iter_mut().zip(row) {
                    *a += f64::from(x);
                }
                used.push(word.to_owned());
            }
            None => missing.push(word.to_owned()),
        }
    }
    if used.is_empty() {
        return Err(Error::NoResolvableContext);
    }
    let k = used.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(ContextMean {
        vector: acc,
        used,
        missing,
    })
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Logistic of `cbar · s`.
pub fn score_probability(sense: &[f64], cbar: &[f64]) -> Result<f64> {
    if sense.len() != cbar.len() {
        return Err(Error::DimensionMismatch {
            expected: sense.len(),
            found: cbar.len(),
        });
    }
    Ok(sigmoid(dot(cbar, sense)))
}

/// Cosine between `s` and `cbar`.
pub fn score_similarity(sense: &[f64], cbar: &[f64]) -> Result<f64> {
    cosine(sense, cbar)
}

fn single_score(strategy: Strategy, sense: &[f64], v: &[f64]) -> Result<f64> {
    match strategy {
        Strategy::Probability => score_probability(sense, v),
        Strategy::Similarity => score_similarity(sense, v),
    }
}

/// How much the score of each context word varies across `senses`
/// (max minus min). Words absent from `m` score 0.
pub fn discriminativeness<S: AsRef<str>>(
    context: &[S],
    senses: &[&[f64]],
    strategy: Strategy,
    m: &EmbeddingMatrix,
) -> Vec<f64> {
    context
        .iter()
        .map(|w| {
            let Some(row) = m.get(w.as_ref()) else {
                return 0.0;
            };
            let v = widen(row);
            let (lo, hi) = senses
                .iter()
                .filter_map(|s| single_score(strategy, s, &v).ok())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            if hi >= lo {
                hi - lo
            } else {
                0.0
            }
        })
        .collect()
}

/// Keeps the `p` most discriminative context words, in their original
/// order. Ties favour earlier words.
pub fn filter_context<S: AsRef<str>>(
    context: &[S],
    senses: &[&[f64]],
    strategy: Strategy,
    p: usize,
    m: &EmbeddingMatrix,
) -> Vec<String> {
    if p >= context.len() {
        return context.iter().map(|w| w.as_ref().to_owned()).collect();
    }
    let scores = discriminativeness(context, senses, strategy, m);
    let mut order: Vec<usize> = (0..context.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order.into_iter().take(p).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| context[i].as_ref().to_owned()).collect()
}

pub fn disambiguate(
    req: &DisambiguationRequest,
    store: &SenseVectorStore,
    word_m: &EmbeddingMatrix,
    context_m: Option<&EmbeddingMatrix>,
) -> Result<DisambiguationResult> {
    let senses = store.senses_of(&req.target);
    if senses.is_empty() {
        return Err(Error::UnknownTarget(req.target.clone()));
    }
    let m = match req.strategy {
        Strategy::Probability => context_m.ok_or(Error::MissingContextMatrix)?,
        Strategy::Similarity => word_m,
    };
    if m.dim() != store.dim() {
        return Err(Error::DimensionMismatch {
            expected: store.dim(),
            found: m.dim(),
        });
    }
    let vectors: Vec<&[f64]> = senses.iter().map(|s| s.1).collect();
    let context = match req.filter_p {
        Some(0) => return Err(Error::InvalidParameter("filter p must be at least 1".into())),
        Some(p) => filter_context(&req.context, &vectors, req.strategy, p, m),
        None => req.context.clone(),
    };
    let fallback = || DisambiguationResult {
        chosen: senses[0].0,
        scores: Vec::new(),
        used_context: Vec::new(),
        strategy: req.strategy,
        fallback: true,
    };
    let mean = match mean_context_vector(&context, m) {
        Ok(mean) => mean,
        Err(Error::NoResolvableContext) => return Ok(fallback()),
        Err(e) => return Err(e),
    };

    // Rank on the quantity inside the logistic, which stays distinct where
    // the probability itself saturates.
    let mut scores = Vec::with_capacity(senses.len());
    let mut best: Option<(f64, u32)> = None;
    for &(sense_id, s) in &senses {
        let (rank_key, score) = match req.strategy {
            Strategy::Probability => {
                let logit = dot(&mean.vector, s);
                (logit, sigmoid(logit))
            }
            Strategy::Similarity => match score_similarity(s, &mean.vector) {
                Ok(c) => (c, c),
                Err(Error::ZeroNorm) => return Ok(fallback()),
                Err(e) => return Err(e),
            },
        };
        if best.is_none_or(|(b, _)| rank_key > b) {
            best = Some((rank_key, sense_id));
        }
        scores.push(SenseScore { sense_id, score });
    }
    Ok(DisambiguationResult {
        chosen: best.expect("at least one sense").1,
        scores,
        used_context: mean.used,
        strategy: req.strategy,
        fallback: false,
    })
}

/// One line of a batch request file: `id<TAB>target<TAB>context`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchItem {
    pub id: String,
    pub target: String,
    pub context: Vec<String>,
}

pub fn read_batch<R: BufRead>(reader: R) -> Result<Vec<BatchItem>> {
    let mut items = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(id), Some(target), Some(context)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(lineno + 1, "expected id<TAB>target<TAB>context"));
        };
        if id.is_empty() || target.is_empty() {
            return Err(Error::parse(lineno + 1, "empty id or target"));
        }
        items.push(BatchItem {
            id: id.to_owned(),
            target: target.to_owned(),
            context: tokenize(context),
        });
    }
    Ok(items)
}

/// Writes `id<TAB>word#senseId<TAB>score`; fallbacks carry score `NaN`.
pub fn write_batch_line<W: Write>(mut w: W, id: &str, target: &str, result: &DisambiguationResult) -> Result<()> {
    let key = SenseKey::new(target, result.chosen);
    let score = result.chosen_score().unwrap_or(f64::NAN);
    writeln!(w, "{id}\t{key}\t{score}")?;
    Ok(())
}

/// Whitespace tokenization with surrounding ASCII punctuation stripped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::VectorKind;
    use crate::pooling::PoolingMode;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    fn matrix() -> EmbeddingMatrix {
        let h = std::f32::consts::FRAC_1_SQRT_2;
        EmbeddingMatrix::from_rows(
            [
                ("a", vec![1.0, 0.0]),
                ("b", vec![h, h]),
                ("x", vec![2.0, 0.0]),
                ("y", vec![0.0, 2.0]),
                ("z", vec![0.1, 3.0]),
            ],
            VectorKind::Word,
        )
        .unwrap()
    }

    fn store() -> SenseVectorStore {
        let mut s = SenseVectorStore::new(2, PoolingMode::Weighted, "test");
        s.insert(SenseKey::new("t", 0), &[1.0, 0.0]).unwrap();
        s.insert(SenseKey::new("t", 1), &[0.0, 1.0]).unwrap();
        s.insert(SenseKey::new("mono", 0), &[0.5, 0.5]).unwrap();
        s
    }

    fn req(target: &str, ctx: &[&str], strategy: Strategy, p: Option<usize>) -> DisambiguationRequest {
        DisambiguationRequest {
            target: target.into(),
            context: words(ctx),
            strategy,
            filter_p: p,
        }
    }

    #[test]
    fn mean_vector_examples() {
        let m = matrix();
        assert_eq!(mean_context_vector(&["a"], &m).unwrap().vector, [1.0, 0.0]);
        let mean = mean_context_vector(&["x", "nope", "y"], &m).unwrap();
        assert_eq!(mean.vector, [1.0, 1.0]);
        assert_eq!(mean.missing, ["nope"]);
        assert!(matches!(mean_context_vector(&["nope"], &m), Err(Error::NoResolvableContext)));
        assert!(matches!(
            mean_context_vector::<&str>(&[], &m),
            Err(Error::NoResolvableContext)
        ));
    }

    #[test]
    fn probability_scores() {
        assert_eq!(score_probability(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.5);
        let m = 4.0f64;
        let s = vec![1.0 / m.sqrt(); 4];
        let c: Vec<f64> = s.iter().map(|x| x * 10.0).collect();
        // logistic(±10) at 40 significant digits
        let hi = 0.999_954_602_131_297_565_605_495_223_767_236_5;
        let lo = 4.539_786_870_243_439_450_477_623_276_348_945e-5;
        assert!((score_probability(&s, &c).unwrap() - hi).abs() < 1e-9);
        let neg: Vec<f64> = c.iter().map(|x| -x).collect();
        assert!((score_probability(&s, &neg).unwrap() - lo).abs() < 1e-9);
        assert!(score_probability(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn similarity_scores() {
        assert!((score_similarity(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(score_similarity(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.0);
        assert!(score_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn filter_keeps_discriminative_word() {
        let senses: [&[f64]; 2] = [&[1.0, 0.0], &[0.0, 1.0]];
        let kept = filter_context(&["b", "a"], &senses, Strategy::Similarity, 1, &matrix());
        assert_eq!(kept, ["a"]);
        let d = discriminativeness(&["a", "b"], &senses, Strategy::Similarity, &matrix());
        assert!((d[0] - 1.0).abs() < 1e-12);
        assert!(d[1].abs() < 1e-7);
    }

    #[test]
    fn filter_monosemous_keeps_first_words() {
        let senses: [&[f64]; 1] = [&[1.0, 0.0]];
        let kept = filter_context(&["z", "y", "a", "x"], &senses, Strategy::Similarity, 2, &matrix());
        assert_eq!(kept, ["z", "y"]);
    }

    #[test]
    fn filter_identity_and_order() {
        let senses: [&[f64]; 2] = [&[1.0, 0.0], &[0.0, 1.0]];
        let ctx = ["b", "nope", "a", "y"];
        assert_eq!(filter_context(&ctx, &senses, Strategy::Similarity, 4, &matrix()), ctx);
        assert_eq!(filter_context(&ctx, &senses, Strategy::Similarity, 9, &matrix()), ctx);
        // a and y both discriminate fully; original order is kept.
        assert_eq!(filter_context(&ctx, &senses, Strategy::Similarity, 2, &matrix()), ["a", "y"]);
        assert!(filter_context::<&str>(&[], &senses, Strategy::Similarity, 2, &matrix()).is_empty());
    }

    #[test]
    fn chooses_matching_sense() {
        let m = matrix();
        let r = disambiguate(&req("t", &["y", "z"], Strategy::Similarity, None), &store(), &m, None).unwrap();
        assert_eq!(r.chosen, 1);
        assert_eq!(r.scores.len(), 2);
        assert!(!r.fallback);
        let r = disambiguate(&req("t", &["x"], Strategy::Probability, None), &store(), &m, Some(&m)).unwrap();
        assert_eq!(r.chosen, 0);
        assert!(r.chosen_score().unwrap() > 0.5);
    }

    #[test]
    fn empty_context_falls_back_to_first_sense() {
        let m = matrix();
        let r = disambiguate(&req("t", &[], Strategy::Similarity, Some(2)), &store(), &m, None).unwrap();
        assert_eq!(r.chosen, 0);
        assert!(r.fallback);
        let r = disambiguate(&req("t", &["nope"], Strategy::Similarity, None), &store(), &m, None).unwrap();
        assert!(r.fallback);
    }

    #[test]
    fn monosemous_target() {
        let m = matrix();
        let r = disambiguate(&req("mono", &["y"], Strategy::Similarity, Some(1)), &store(), &m, None).unwrap();
        assert_eq!(r.chosen, 0);
        assert_eq!(r.scores.len(), 1);
    }

    #[test]
    fn errors() {
        let m = matrix();
        assert!(matches!(
            disambiguate(&req("zz", &["a"], Strategy::Similarity, None), &store(), &m, None),
            Err(Error::UnknownTarget(_))
        ));
        assert!(matches!(
            disambiguate(&req("t", &["a"], Strategy::Probability, None), &store(), &m, None),
            Err(Error::MissingContextMatrix)
        ));
        assert!(disambiguate(&req("t", &["a"], Strategy::Similarity, Some(0)), &store(), &m, None).is_err());
    }

    #[test]
    fn ties_pick_lowest_sense() {
        let m = matrix();
        let r = disambiguate(&req("t", &["b"], Strategy::Similarity, None), &store(), &m, None).unwrap();
        let (s0, s1) = (r.scores[0].score, r.scores[1].score);
        if s0 == s1 {
            assert_eq!(r.chosen, 0);
        }
    }

    #[test]
    fn batch_parsing() {
        let items = read_batch("1\ttable\tThey bought chairs, for the kitchen.\n\n2\tbank\t\n".as_bytes()).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].context, ["They", "bought", "chairs", "for", "the", "kitchen"]);
        assert!(items[1].context.is_empty());
        assert!(read_batch("1\ttable\n".as_bytes()).is_err());
    }

    #[test]
    fn batch_output_line() {
        let m = matrix();
        let r = disambiguate(&req("t", &["y"], Strategy::Similarity, None), &store(), &m, None).unwrap();
        let mut out = Vec::new();
        write_batch_line(&mut out, "7", "t", &r).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "7\tt#1\t1\n");
    }
}
