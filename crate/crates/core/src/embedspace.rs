//! Monolingual word-embedding spaces.
//!
//! The text format is the word2vec/fastText `.vec` layout: a header line
//! `N d`, then one line per word with the token followed by `d` decimal
//! components. Rows keep file order, which for these releases is frequency
//! order, so row index doubles as frequency rank.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default number of rows read from an embedding file.
pub const DEFAULT_MAX_VOCAB: usize = 200_000;

/// Maximum allowed deviation of a row norm from 1 in a normalized space.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// A frequency-ordered vocabulary with one vector per word.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    lang: String,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: DMatrix<f64>,
    normalized: bool,
}

impl EmbeddingSpace {
    /// Builds a space from an in-memory vocabulary and matrix.
    ///
    /// Rows must be finite and tokens unique. The space is not normalized;
    /// call [`EmbeddingSpace::normalize`] if cosine retrieval is intended.
    pub fn new(lang: impl Into<String>, words: Vec<String>, vectors: DMatrix<f64>) -> Result<Self> {
        if words.len() != vectors.nrows() {
            return Err(Error::Shape(format!(
                "{} words but {} vector rows",
                words.len(),
                vectors.nrows()
            )));
        }
        if words.is_empty() || vectors.ncols() == 0 {
            return Err(Error::Shape("empty embedding space".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token {w:?}")));
            }
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            let row = pos % vectors.nrows();
            return Err(Error::NonFinite(format!("vector of {:?}", words[row])));
        }
        Ok(EmbeddingSpace {
            lang: lang.into(),
            words,
            index,
            vectors,
            normalized: false,
        })
    }

    /// Rescales every row to unit Euclidean norm.
    pub fn normalize(&mut self) -> Result<()> {
        normalize_rows(&mut self.vectors).map_err(|row| Error::ZeroVector(self.words[row].clone()))?;
        self.normalized = true;
        Ok(())
    }

    pub fn with_lang(mut self, lang: impl Into<String>) -> Self {
        self.lang = lang.into();
        self
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Stacks the requested rows into a new matrix. Indices may repeat.
    pub fn gather_rows(&self, indices: &[usize]) -> Result<DMatrix<f64>> {
        let len = self.len();
        if let Some(&index) = indices.iter().find(|&&i| i >= len) {
            return Err(Error::OutOfRange { index, len });
        }
        Ok(self.vectors.select_rows(indices))
    }

    /// Reads a space from a `.vec` file.
    ///
    /// The language tag defaults to the file stem.
    pub fn load(path: impl AsRef<Path>, max_vocab: usize, unit_normalize: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let lang = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        read_embeddings(BufReader::new(file), path, max_vocab, unit_normalize)
            .map(|space| space.with_lang(lang))
    }

    /// Writes the space in `.vec` format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        write_embeddings(self, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Parses `.vec` text. First occurrence of a token wins; reading stops once
/// `max_vocab` rows have been accepted.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    source: &Path,
    max_vocab: usize,
    unit_normalize: bool,
) -> Result<EmbeddingSpace> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        msg,
    };

    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(source, e))?,
        None => return Err(parse_err(1, "missing header".into())),
    };
    let header_fields: Vec<&str> = fields(&header).collect();
    let (declared, dim) = match header_fields.as_slice() {
        [n, d] => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) if d > 0 => (n, d),
            _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
        },
        _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
    };

    let cap = declared.min(max_vocab);
    let mut words = Vec::with_capacity(cap);
    let mut seen: HashMap<String, usize> = HashMap::with_capacity(cap);
    let mut data: Vec<f64> = Vec::with_capacity(cap * dim);

    for (lineno, line) in lines.enumerate() {
        if words.len() >= max_vocab {
            break;
        }
        let lineno = lineno + 2;
        let line = line.map_err(|e| Error::io(source, e))?;
        let mut it = fields(&line);
        let Some(token) = it.next() else {
            continue;
        };
        let start = data.len();
        for field in it {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid number {field:?}")))?;
            if !v.is_finite() {
                data.truncate(start);
                return Err(parse_err(lineno, format!("non-finite component for {token:?}")));
            }
            data.push(v);
        }
        let got = data.len() - start;
        if got != dim {
            return Err(parse_err(
                lineno,
                format!("expected {dim} components for {token:?}, found {got}"),
            ));
        }
        if seen.contains_key(token) {
            data.truncate(start);
            continue;
        }
        seen.insert(token.to_owned(), words.len());
        words.push(token.to_owned());
    }

    if words.len() < 2 {
        return Err(Error::TooFewRows(words.len()));
    }
    let vectors = DMatrix::from_row_slice(words.len(), dim, &data);
    let mut space = EmbeddingSpace {
        lang: String::new(),
        words,
        index: seen,
        vectors,
        normalized: false,
    };
    if unit_normalize {
        space.normalize()?;
    }
    Ok(space)
}

/// Writes `.vec` text using shortest round-trip float formatting.
pub fn write_embeddings<W: Write>(space: &EmbeddingSpace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {}", space.len(), space.dim())?;
    for (i, word) in space.words.iter().enumerate() {
        w.write_all(word.as_bytes())?;
        for v in space.vectors.row(i).iter() {
            write!(w, " {v}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.trim_end_matches(['\r', '\n'])
        .split([' ', '\t'])
        .filter(|s| !s.is_empty())
}

/// Normalizes each row in place. On a zero row returns its index.
pub(crate) fn normalize_rows(m: &mut DMatrix<f64>) -> std::result::Result<(), usize> {
    for (i, mut row) in m.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(i);
        }
        row /= norm;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str, max_vocab: usize, norm: bool) -> Result<EmbeddingSpace> {
        read_embeddings(Cursor::new(text), Path::new("mem"), max_vocab, norm)
    }

    #[test]
    fn normalizes_axis_vector() {
        let s = parse("2 3\na 1 0 0\nb 0 2 0", 10, true).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dim(), 3);
        let b = s.lookup("b").unwrap();
        assert_eq!(s.vectors().row(b).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        assert!(s.is_normalized());
    }

    #[test]
    fn first_duplicate_wins() {
        let s = parse("3 2\na 1 0\na 0 1\nb 1 1", 10, false).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.vectors()[(0, 0)], 1.0);
        assert_eq!(s.vectors()[(0, 1)], 0.0);
        assert_eq!(s.words(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn lookup_present_and_absent() {
        let s = parse("2 3\na 1 0 0\nb 0 2 0", 10, true).unwrap();
        assert_eq!(s.lookup("a"), Some(0));
        assert_eq!(s.lookup("zz"), None);
        for (n, w) in s.words().iter().enumerate() {
            assert_eq!(s.lookup(w), Some(n));
        }
    }

    #[test]
    fn max_vocab_stops_reading() {
        let s = parse("4 1\na 1\nb 2\nc 3\nd x", 3, false).unwrap();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn tabs_and_repeated_spaces_separate() {
        let s = parse("2 2\na\t1   2\r\nb  3\t\t4\n", 10, false).unwrap();
        assert_eq!(s.vectors()[(1, 1)], 4.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(parse("2\na 1", 10, false), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("x y\na 1", 10, false), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse("2 2\na 1 0\nb 1", 10, false),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(parse("2 2\na 0 0\nb 1 0", 10, true), Err(Error::ZeroVector(t)) if t == "a"));
        assert!(matches!(parse("1 2\na 1 0", 10, false), Err(Error::TooFewRows(1))));
        assert!(matches!(parse("2 1\na 1\na 2", 10, false), Err(Error::TooFewRows(1))));
        assert!(matches!(parse("2 1\na NaN\nb 1", 10, false), Err(Error::Parse { .. })));
    }

    #[test]
    fn gather_rows_swaps_and_duplicates() {
        let s = parse("2 2\na 1 2\nb 3 4", 10, false).unwrap();
        let m = s.gather_rows(&[1, 0]).unwrap();
        assert_eq!(m.row(0), s.vectors().row(1));
        assert_eq!(m.row(1), s.vectors().row(0));
        let d = s.gather_rows(&[0, 0]).unwrap();
        assert_eq!(d.row(0), d.row(1));
        assert!(matches!(s.gather_rows(&[2]), Err(Error::OutOfRange { index: 2, len: 2 })));
    }

    #[test]
    fn new_rejects_duplicates_and_nan() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(EmbeddingSpace::new("x", vec!["a".into(), "a".into()], m.clone()).is_err());
        let bad = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(matches!(
            EmbeddingSpace::new("x", vec!["a".into(), "b".into()], bad),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut s = parse("3 3\na 1 2 3\nb -4 0.5 2\nc 0.1 0.1 9", 10, true).unwrap();
        let once = s.vectors().clone();
        s.normalize().unwrap();
        let drift = (s.vectors() - &once).abs().max();
        assert!(drift <= 1e-12, "drift {drift}");
        for row in s.vectors().row_iter() {
            assert!((row.norm() - 1.0).abs() <= NORM_TOLERANCE);
        }
    }
}
