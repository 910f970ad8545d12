//! Translation lexicons at the row-index level.
//!
//! Dictionary files hold one `src_word tgt_word` pair per line. A source word
//! may appear on several lines; each line is then an alternative gold answer.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::embedspace::EmbeddingSpace;
use crate::error::{Error, Result};

/// Index pairs `(src row, tgt row)` between two spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairLexicon {
    pub src_space: String,
    pub tgt_space: String,
    pub pairs: Vec<(usize, usize)>,
    pub unique: bool,
}

/// Pivot-centered triples `(pivot row, l2 row, l3 row)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleLexicon {
    pub pivot_space: String,
    pub l2_space: String,
    pub l3_space: String,
    pub triples: Vec<(usize, usize, usize)>,
}

/// A training lexicon for either two- or three-way alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lexicon {
    Pairs(PairLexicon),
    Triples(TripleLexicon),
}

impl Lexicon {
    pub fn len(&self) -> usize {
        match self {
            Lexicon::Pairs(p) => p.len(),
            Lexicon::Triples(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of spaces the lexicon connects.
    pub fn arity(&self) -> usize {
        match self {
            Lexicon::Pairs(_) => 2,
            Lexicon::Triples(_) => 3,
        }
    }

    pub fn space_ids(&self) -> Vec<&str> {
        match self {
            Lexicon::Pairs(p) => vec![&p.src_space, &p.tgt_space],
            Lexicon::Triples(t) => vec![&t.pivot_space, &t.l2_space, &t.l3_space],
        }
    }

    /// Row indices per space, one column of the lexicon each.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        match self {
            Lexicon::Pairs(p) => vec![
                p.pairs.iter().map(|&(s, _)| s).collect(),
                p.pairs.iter().map(|&(_, t)| t).collect(),
            ],
            Lexicon::Triples(t) => vec![
                t.triples.iter().map(|&(a, _, _)| a).collect(),
                t.triples.iter().map(|&(_, b, _)| b).collect(),
                t.triples.iter().map(|&(_, _, c)| c).collect(),
            ],
        }
    }
}

impl PairLexicon {
    /// Builds a lexicon, checking every index against its space.
    pub fn for_spaces(
        src: &EmbeddingSpace,
        tgt: &EmbeddingSpace,
        pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        for &(s, t) in &pairs {
            if s >= src.len() {
                return Err(Error::OutOfRange { index: s, len: src.len() });
            }
            if t >= tgt.len() {
                return Err(Error::OutOfRange { index: t, len: tgt.len() });
            }
        }
        Ok(PairLexicon {
            src_space: src.lang().to_owned(),
            tgt_space: tgt.lang().to_owned(),
            pairs,
            unique: false,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Drops repeated pairs, keeping first occurrences in order.
    pub fn dedup(mut self) -> Self {
        let mut seen = HashSet::with_capacity(self.pairs.len());
        self.pairs.retain(|p| seen.insert(*p));
        self.unique = true;
        self
    }

    pub fn reversed(&self) -> Self {
        PairLexicon {
            src_space: self.tgt_space.clone(),
            tgt_space: self.src_space.clone(),
            pairs: self.pairs.iter().map(|&(s, t)| (t, s)).collect(),
            unique: self.unique,
        }
    }

    /// Gold targets grouped by source row, sources in first-seen order.
    pub fn by_source(&self) -> Vec<(usize, Vec<usize>)> {
        let mut order = Vec::new();
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(s, t) in &self.pairs {
            let entry = groups.entry(s).or_insert_with(|| {
                order.push(s);
                Vec::new()
            });
            if !entry.contains(&t) {
                entry.push(t);
            }
        }
        order
            .into_iter()
            .map(|s| {
                let targets = groups.remove(&s).unwrap_or_default();
                (s, targets)
            })
            .collect()
    }
}

impl TripleLexicon {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Projects onto pivot→l2 pairs, deduplicated.
    pub fn pivot_l2_pairs(&self) -> PairLexicon {
        PairLexicon {
            src_space: self.pivot_space.clone(),
            tgt_space: self.l2_space.clone(),
            pairs: self.triples.iter().map(|&(p, a, _)| (p, a)).collect(),
            unique: false,
        }
        .dedup()
    }
}

/// How many source words of a dictionary file survived the vocabulary filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    pub kept_source_types: usize,
    pub total_source_types: usize,
    pub oov_lines: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total_source_types == 0 {
            0.0
        } else {
            self.kept_source_types as f64 / self.total_source_types as f64
        }
    }

    pub fn skipped_source_types(&self) -> usize {
        self.total_source_types - self.kept_source_types
    }
}

pub fn parse_dictionary_file(
    path: impl AsRef<Path>,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
) -> Result<(PairLexicon, Coverage)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dictionary(BufReader::new(file), path, src, tgt)
}

/// Keeps the lines whose two words are both in vocabulary.
pub fn parse_dictionary<R: BufRead>(
    reader: R,
    source: &Path,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
) -> Result<(PairLexicon, Coverage)> {
    let mut pairs = Vec::new();
    let mut all_types: HashSet<String> = HashSet::new();
    let mut kept_types: HashSet<usize> = HashSet::new();
    let mut oov_lines = 0;

    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        let fields: Vec<&str> = line
            .trim_end_matches('\r')
            .split([' ', '\t'])
            .filter(|s| !s.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        let [s, t] = fields.as_slice() else {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line: n + 1,
                msg: format!("expected 2 fields, found {}", fields.len()),
            });
        };
        all_types.insert((*s).to_owned());
        match (src.lookup(s), tgt.lookup(t)) {
            (Some(i), Some(j)) => {
                kept_types.insert(i);
                pairs.push((i, j));
            }
            _ => oov_lines += 1,
        }
    }

    if pairs.is_empty() {
        return Err(Error::EmptyLexicon(format!(
            "no in-vocabulary pair in {}",
            source.display()
        )));
    }
    let coverage = Coverage {
        kept_source_types: kept_types.len(),
        total_source_types: all_types.len(),
        oov_lines,
    };
    let lexicon = PairLexicon {
        src_space: src.lang().to_owned(),
        tgt_space: tgt.lang().to_owned(),
        pairs,
        unique: false,
    }
    .dedup();
    Ok((lexicon, coverage))
}

/// Pairs every token spelled identically in both vocabularies.
pub fn seed_identical(src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Result<PairLexicon> {
    shared_tokens(src, tgt, |_| true)
        .ok_or_else(|| Error::EmptyLexicon("empty seed: no identical tokens".into()))
}

/// Pairs shared tokens made only of ASCII digits.
pub fn seed_numerals(src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Result<PairLexicon> {
    shared_tokens(src, tgt, is_numeral)
        .ok_or_else(|| Error::EmptyLexicon("empty seed: no shared numerals".into()))
}

pub fn is_numeral(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit())
}

fn shared_tokens(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    keep: impl Fn(&str) -> bool,
) -> Option<PairLexicon> {
    let pairs: Vec<(usize, usize)> = src
        .words()
        .iter()
        .enumerate()
        .filter(|(_, w)| keep(w))
        .filter_map(|(i, w)| tgt.lookup(w).map(|j| (i, j)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    Some(PairLexicon {
        src_space: src.lang().to_owned(),
        tgt_space: tgt.lang().to_owned(),
        pairs,
        unique: true,
    })
}

/// Joins two lexicons that share their source (pivot) space.
///
/// Every pivot row contributes the cross product of its l2 and l3
/// translations.
pub fn triangulate(pivot_l2: &PairLexicon, pivot_l3: &PairLexicon) -> Result<TripleLexicon> {
    if pivot_l2.src_space != pivot_l3.src_space {
        return Err(Error::SpaceMismatch(format!(
            "pivot spaces differ: {} vs {}",
            pivot_l2.src_space, pivot_l3.src_space
        )));
    }
    let mut l3_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(m, l) in &pivot_l3.pairs {
        l3_of.entry(m).or_default().push(l);
    }
    let mut seen = HashSet::new();
    let mut triples = Vec::new();
    for &(m, n) in &pivot_l2.pairs {
        if let Some(ls) = l3_of.get(&m) {
            for &l in ls {
                if seen.insert((m, n, l)) {
                    triples.push((m, n, l));
                }
            }
        }
    }
    Ok(TripleLexicon {
        pivot_space: pivot_l2.src_space.clone(),
        l2_space: pivot_l2.tgt_space.clone(),
        l3_space: pivot_l3.tgt_space.clone(),
        triples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::io::Cursor;

    fn space(lang: &str, words: &[&str]) -> EmbeddingSpace {
        let n = words.len();
        let m = DMatrix::from_fn(n, 2, |i, j| (i * 2 + j + 1) as f64);
        EmbeddingSpace::new(lang, words.iter().map(|w| w.to_string()).collect(), m).unwrap()
    }

    fn parse(text: &str, src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Result<(PairLexicon, Coverage)> {
        parse_dictionary(Cursor::new(text), Path::new("mem"), src, tgt)
    }

    #[test]
    fn dictionary_full_coverage() {
        let src = space("en", &["a", "b"]);
        let tgt = space("es", &["x", "y"]);
        let (lex, cov) = parse("a x\nb y", &src, &tgt).unwrap();
        assert_eq!(lex.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(cov.fraction(), 1.0);
    }

    #[test]
    fn dictionary_oov_lowers_coverage() {
        let src = space("en", &["a", "b"]);
        let tgt = space("es", &["x", "z"]);
        let (lex, cov) = parse("a x\nb y", &src, &tgt).unwrap();
        assert_eq!(lex.pairs, vec![(0, 0)]);
        assert_eq!(cov.fraction(), 0.5);
        assert_eq!(cov.oov_lines, 1);
    }

    #[test]
    fn dictionary_rejects_multiword_and_empty() {
        let src = space("en", &["a", "b"]);
        let tgt = space("es", &["x", "y"]);
        assert!(matches!(parse("a x y\n", &src, &tgt), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("q r\n", &src, &tgt), Err(Error::EmptyLexicon(_))));
    }

    #[test]
    fn identical_seed_and_errors() {
        let a = space("a", &["a", "b", "c"]);
        let b = space("b", &["b", "c", "d"]);
        let lex = seed_identical(&a, &b).unwrap();
        assert_eq!(lex.pairs, vec![(1, 0), (2, 1)]);
        assert_eq!(seed_identical(&b, &a).unwrap().pairs, vec![(0, 1), (1, 2)]);
        let c = space("c", &["e", "f"]);
        assert!(matches!(seed_identical(&a, &c), Err(Error::EmptyLexicon(_))));
    }

    #[test]
    fn numeral_seed_digits_only() {
        let a = space("a", &["1900", "2", "dog", "x1", ""]);
        let b = space("b", &["dog", "2", "x1", "1900"]);
        let lex = seed_numerals(&a, &b).unwrap();
        assert_eq!(lex.pairs, vec![(0, 3), (1, 1)]);
        let c = space("c", &["dog", "cat"]);
        assert!(matches!(seed_numerals(&a, &c), Err(Error::EmptyLexicon(_))));
    }

    #[test]
    fn triangulate_single_and_cross_product() {
        let l2 = PairLexicon {
            src_space: "en".into(),
            tgt_space: "he".into(),
            pairs: vec![(4, 1)],
            unique: true,
        };
        let l3 = PairLexicon {
            src_space: "en".into(),
            tgt_space: "ar".into(),
            pairs: vec![(4, 7)],
            unique: true,
        };
        assert_eq!(triangulate(&l2, &l3).unwrap().triples, vec![(4, 1, 7)]);

        let l2 = PairLexicon { pairs: vec![(0, 1), (0, 2)], ..l2 };
        let l3 = PairLexicon { pairs: vec![(0, 5), (0, 6), (0, 7), (9, 9)], ..l3 };
        let t = triangulate(&l2, &l3).unwrap();
        assert_eq!(t.len(), 6);

        let none = PairLexicon { pairs: vec![(3, 3)], ..l3.clone() };
        assert!(triangulate(&l2, &none).unwrap().is_empty());

        let wrong = PairLexicon { src_space: "de".into(), ..l3 };
        assert!(matches!(triangulate(&l2, &wrong), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn by_source_groups_alternatives() {
        let lex = PairLexicon {
            src_space: "a".into(),
            tgt_space: "b".into(),
            pairs: vec![(3, 1), (2, 0), (3, 4), (3, 1)],
            unique: false,
        };
        assert_eq!(lex.by_source(), vec![(3, vec![1, 4]), (2, vec![0])]);
    }
}
