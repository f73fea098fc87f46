//! Dense word and context embedding matrices in the word2vec interchange
//! formats.
//!
//! Vectors are stored as `f32`, the native precision of both formats, and
//! every computation downstream widens to `f64`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// On-disk layout of an embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Text,
    Binary,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(Format::Text),
            "binary" | "bin" => Ok(Format::Binary),
            other => Err(Error::InvalidParameter(format!(
                "unknown embedding format {other:?}"
            ))),
        }
    }
}

/// Which parameter matrix of a CBOW-style model the vectors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VectorKind {
    Word,
    Context,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VectorQueryOptions {
    /// Return unit-L2 rows.
    pub normalize: bool,
}

/// A vocabulary-indexed dense matrix. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    kind: VectorKind,
    dim: usize,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from row-major `data`, validating every invariant the
    /// loaders enforce.
    pub fn new(vocab: Vec<String>, dim: usize, data: Vec<f32>, kind: VectorKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedHeader("dimension must be positive".into()));
        }
        if vocab.is_empty() {
            return Err(Error::MalformedHeader("vocabulary must not be empty".into()));
        }
        if data.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.len() * dim,
                found: data.len(),
            });
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, token) in vocab.iter().enumerate() {
            validate_token(token)?;
            let row = &data[i * dim..(i + 1) * dim];
            validate_row(token, row)?;
            if index.insert(token.clone(), i).is_some() {
                return Err(Error::DuplicateToken(token.clone()));
            }
        }
        Ok(EmbeddingMatrix {
            kind,
            dim,
            vocab,
            index,
            data,
        })
    }

    /// Builds a matrix from `(token, vector)` rows.
    pub fn from_rows<S, I>(rows: I, kind: VectorKind) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, Vec<f32>)>,
    {
        let mut vocab = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (token, row) in rows {
            let token = token.into();
            let expected = *dim.get_or_insert(row.len());
            if row.len() != expected {
                return Err(Error::RowLength {
                    entry: vocab.len(),
                    token,
                    expected,
                    found: row.len(),
                });
            }
            vocab.push(token);
            data.extend_from_slice(&row);
        }
        EmbeddingMatrix::new(vocab, dim.unwrap_or(0), data, kind)
    }

    pub fn load(path: impl AsRef<Path>, format: Format, kind: VectorKind) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_owned()),
            _ => Error::Io(e),
        })?;
        Self::read(BufReader::new(file), format, kind)
    }

    pub fn read<R: BufRead>(reader: R, format: Format, kind: VectorKind) -> Result<Self> {
        match format {
            Format::Text => read_text(reader, kind),
            Format::Binary => read_binary(reader, kind),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, format: Format) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write(&mut writer, format)?;
        writer.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, mut writer: W, format: Format) -> Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dim)?;
        for (token, row) in self.iter() {
            match format {
                Format::Text => {
                    writer.write_all(token.as_bytes())?;
                    for x in row {
                        // f32 Display is the shortest string that parses back
                        // to the same bits.
                        write!(writer, " {x}")?;
                    }
                    writer.write_all(b"\n")?;
                }
                Format::Binary => {
                    writer.write_all(token.as_bytes())?;
                    writer.write_all(b" ")?;
                    for x in row {
                        writer.write_all(&x.to_le_bytes())?;
                    }
                    writer.write_all(b"\n")?;
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> VectorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index_of(token).map(|i| self.row(i))
    }

    /// The row for `token` widened to `f64`, optionally unit-normalized.
    pub fn lookup(&self, token: &str, opts: VectorQueryOptions) -> Option<Vec<f64>> {
        let mut v = widen(self.get(token)?);
        if opts.normalize {
            let n = l2_norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
        }
        Some(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> + '_ {
        self.vocab
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(t, r)| (t.as_str(), r))
    }

    /// L2 norm of every row, in `f64`.
    pub fn norms(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim)
            .map(|r| r.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt())
            .collect()
    }
}

pub fn widen(row: &[f32]) -> Vec<f64> {
    row.iter().map(|&x| f64::from(x)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

fn validate_token(token: &str) -> Result<()> {
    if token.is_empty() || token.chars().any(char::is_whitespace) {
        return Err(Error::InvalidToken(token.to_owned()));
    }
    Ok(())
}

fn validate_row(token: &str, row: &[f32]) -> Result<()> {
    if row.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(token.to_owned()));
    }
    if row.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector(token.to_owned()));
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let (Some(n), Some(d), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(Error::MalformedHeader(line.to_owned()));
    };
    let n = n
        .parse::<usize>()
        .map_err(|_| Error::MalformedHeader(line.to_owned()))?;
    let d = d
        .parse::<usize>()
        .map_err(|_| Error::MalformedHeader(line.to_owned()))?;
    if n == 0 || d == 0 {
        return Err(Error::MalformedHeader(line.to_owned()));
    }
    Ok((n, d))
}

// Pre-allocation is capped so a lying header cannot exhaust memory before
// the body is read.
const MAX_PREALLOC: usize = 1 << 20;

fn read_text<R: BufRead>(reader: R, kind: VectorKind) -> Result<EmbeddingMatrix> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("empty file".into()))??;
    let (n, dim) = parse_header(&header)?;

    let mut vocab = Vec::with_capacity(n.min(MAX_PREALLOC));
    let mut data = Vec::with_capacity(n.saturating_mul(dim).min(MAX_PREALLOC));
    for (lineno, line) in lines.enumerate() {
        let lineno = lineno + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if vocab.len() == n {
            return Err(Error::parse(lineno, format!("more than {n} entries")));
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default().to_owned();
        let start = data.len();
        for field in fields {
            let x: f32 = field
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid number {field:?}")))?;
            data.push(x);
        }
        let found = data.len() - start;
        if found != dim {
            return Err(Error::RowLength {
                entry: vocab.len(),
                token,
                expected: dim,
                found,
            });
        }
        vocab.push(token);
    }
    if vocab.len() != n {
        return Err(Error::MalformedHeader(format!(
            "header declares {n} entries, file has {}",
            vocab.len()
        )));
    }
    EmbeddingMatrix::new(vocab, dim, data, kind)
}

fn read_binary<R: BufRead>(mut reader: R, kind: VectorKind) -> Result<EmbeddingMatrix> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    if header.last() != Some(&b'\n') {
        return Err(Error::MalformedHeader("missing header line".into()));
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;
    let (n, dim) = parse_header(header)?;

    let mut vocab = Vec::with_capacity(n.min(MAX_PREALLOC));
    let mut data = Vec::with_capacity(n.saturating_mul(dim).min(MAX_PREALLOC));
    let mut buf = vec![0u8; 4 * dim.min(MAX_PREALLOC)];
    let mut token = Vec::new();
    for entry in 0..n {
        // The newline written after the previous vector is optional.
        let next = reader.fill_buf()?;
        if next.first() == Some(&b'\n') {
            reader.consume(1);
        }
        token.clear();
        reader.read_until(b' ', &mut token)?;
        if token.pop() != Some(b' ') {
            return Err(Error::RowLength {
                entry,
                token: String::from_utf8_lossy(&token).into_owned(),
                expected: dim,
                found: 0,
            });
        }
        let token = String::from_utf8(std::mem::take(&mut token))
            .map_err(|e| Error::InvalidToken(String::from_utf8_lossy(e.as_bytes()).into_owned()))?;
        let mut remaining = dim;
        while remaining > 0 {
            let chunk = remaining.min(buf.len() / 4);
            let bytes = &mut buf[..chunk * 4];
            if let Err(e) = reader.read_exact(bytes) {
                return match e.kind() {
                    std::io::ErrorKind::UnexpectedEof => Err(Error::RowLength {
                        entry,
                        token,
                        expected: dim,
                        found: dim - remaining,
                    }),
                    _ => Err(e.into()),
                };
            }
            data.extend(
                bytes
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            );
            remaining -= chunk;
        }
        vocab.push(token);
    }
    let mut rest = Vec::new();
    reader.take(2).read_to_end(&mut rest)?;
    if !(rest.is_empty() || rest == b"\n") {
        return Err(Error::MalformedHeader(format!(
            "trailing data after {n} entries"
        )));
    }
    EmbeddingMatrix::new(vocab, dim, data, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::read(s.as_bytes(), Format::Text, VectorKind::Word)
    }

    #[test]
    fn minimal_text_file() {
        let m = text("2 3\na 1 0 0\nb 0 1 0").unwrap();
        assert_eq!(m.vocab(), ["a", "b"]);
        assert_eq!(m.dim(), 3);
        assert_eq!(m.get("b").unwrap(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn duplicate_token_is_rejected() {
        assert!(matches!(
            text("2 3\na 1 0 0\na 0 1 0"),
            Err(Error::DuplicateToken(t)) if t == "a"
        ));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(text(""), Err(Error::MalformedHeader(_))));
        assert!(matches!(text("2\na 1"), Err(Error::MalformedHeader(_))));
        assert!(matches!(text("x 3\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(text("1 3\na 1 0"), Err(Error::RowLength { found: 2, .. })));
        assert!(matches!(text("1 2\na 1 NaN"), Err(Error::NonFinite(_))));
        assert!(matches!(text("1 2\na 1 inf"), Err(Error::NonFinite(_))));
        assert!(matches!(text("1 2\na 0 0"), Err(Error::ZeroVector(_))));
        assert!(matches!(text("1 2\na 1 x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(text("2 2\na 1 1"), Err(Error::MalformedHeader(_))));
        assert!(matches!(text("1 2\na 1 1\nb 1 1"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn word2vec_trailing_space_is_accepted() {
        let m = text("1 2\nword 0.5 -0.25 \n\n").unwrap();
        assert_eq!(m.get("word").unwrap(), [0.5, -0.25]);
    }

    #[test]
    fn binary_without_trailing_newlines() {
        let mut bytes = b"2 2\n".to_vec();
        bytes.extend(b"a ");
        bytes.extend(1f32.to_le_bytes());
        bytes.extend(2f32.to_le_bytes());
        bytes.extend(b"b ");
        bytes.extend(3f32.to_le_bytes());
        bytes.extend(4f32.to_le_bytes());
        let m = EmbeddingMatrix::read(&bytes[..], Format::Binary, VectorKind::Context).unwrap();
        assert_eq!(m.kind(), VectorKind::Context);
        assert_eq!(m.get("b").unwrap(), [3.0, 4.0]);
    }

    #[test]
    fn truncated_binary_is_an_error() {
        let mut bytes = b"1 2\na ".to_vec();
        bytes.extend(1f32.to_le_bytes());
        let err = EmbeddingMatrix::read(&bytes[..], Format::Binary, VectorKind::Word).unwrap_err();
        assert!(matches!(err, Error::RowLength { expected: 2, .. }));
    }

    #[test]
    fn single_word_header() {
        let m = EmbeddingMatrix::from_rows([("w", vec![1.0, 2.0, 3.0])], VectorKind::Word).unwrap();
        let mut out = Vec::new();
        m.write(&mut out, Format::Text).unwrap();
        assert!(out.starts_with(b"1 3\n"));
        let mut out = Vec::new();
        m.write(&mut out, Format::Binary).unwrap();
        assert!(out.starts_with(b"1 3\n"));
    }

    #[test]
    fn text_to_binary_round_trip() {
        let m = text("2 3\na 1 0 0\nb 0 1 0").unwrap();
        let mut out = Vec::new();
        m.write(&mut out, Format::Binary).unwrap();
        let back = EmbeddingMatrix::read(&out[..], Format::Binary, VectorKind::Word).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn lookup_normalizes() {
        let m = text("1 2\na 3 4").unwrap();
        let v = m.lookup("a", VectorQueryOptions { normalize: true }).unwrap();
        assert!((l2_norm(&v) - 1.0).abs() < 1e-12);
        assert_eq!(v, [0.6, 0.8]);
        assert_eq!(m.lookup("a", VectorQueryOptions::default()).unwrap(), [3.0, 4.0]);
        assert!(m.lookup("zz", VectorQueryOptions::default()).is_none());
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.7, 2.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 32 / sqrt(14 * 77), evaluated at 40 significant digits.
        let expected = 0.974_631_846_197_076_271_078_572_491_126_122_9;
        assert!((cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
        assert!(matches!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
