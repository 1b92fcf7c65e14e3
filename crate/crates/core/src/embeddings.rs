//! Pretrained word vectors: loading, centroids and normalized
//! bag-of-words distributions.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {reason}")]
    UnparseableLine { line: usize, reason: String },
    #[error("embedding file contains no vectors")]
    Empty,
}

/// Word to dense vector map with a single dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dimension,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Adds a vector; returns false (and keeps the old one) for a repeated
    /// word.
    ///
    /// # Panics
    /// On a wrong-length or non-finite vector.
    pub fn insert(&mut self, word: &str, vector: &[T]) -> bool {
        assert_eq!(vector.len(), self.dimension, "vector length");
        assert!(vector.iter().all(|v| v.is_finite()), "non-finite component");
        if self.index.contains_key(word) {
            return false;
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
        true
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Words in file order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Reads the word2vec text format: an optional `count dim` header, then
    /// `word v1 ... vd` per line. `key_prefix` is stripped from words that
    /// carry it (e.g. `/c/en/`). The first occurrence of a word wins.
    pub fn load(path: &Path, key_prefix: &str) -> Result<Self, EmbeddingError> {
        let io_err = |source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut table: Option<Self> = None;
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(io_err)?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else {
                continue;
            };
            let rest: Vec<&str> = fields.collect();
            if line_no == 1 && rest.len() == 1 && is_header(word, rest[0]) {
                continue;
            }
            let values = rest
                .iter()
                .map(|f| match f.parse::<T>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(EmbeddingError::UnparseableLine {
                        line: line_no,
                        reason: format!("bad component '{f}'"),
                    }),
                })
                .collect::<Result<Vec<T>, _>>()?;
            if values.is_empty() {
                return Err(EmbeddingError::UnparseableLine {
                    line: line_no,
                    reason: "word without vector".into(),
                });
            }
            let table = table.get_or_insert_with(|| Self::new(values.len()));
            if values.len() != table.dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    line: line_no,
                    expected: table.dimension,
                    found: values.len(),
                });
            }
            let key = word.strip_prefix(key_prefix).unwrap_or(word);
            table.insert(key, &values);
        }
        table.ok_or(EmbeddingError::Empty)
    }

    /// Writes the table with a header line. Components use the shortest
    /// round-trip representation, so `load` restores identical bits.
    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let io_err = |source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        writeln!(out, "{} {}", self.len(), self.dimension).map_err(io_err)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(out, "{word}").map_err(io_err)?;
            for v in self.row(i) {
                write!(out, " {v:?}").map_err(io_err)?;
            }
            writeln!(out).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

fn is_header(a: &str, b: &str) -> bool {
    a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok()
}

/// Normalized bag-of-words over embedded points.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDistribution<T> {
    /// (vector, weight); weights are positive and sum to one.
    pub points: Vec<(Vec<T>, T)>,
}

impl<T: Scalar> WordDistribution<T> {
    /// Builds a distribution from raw positive masses, normalizing them.
    pub fn from_masses(points: Vec<(Vec<T>, T)>) -> Option<Self> {
        let total: T = points.iter().map(|(_, w)| *w).sum();
        if points.is_empty() || total <= T::zero() {
            return None;
        }
        Some(WordDistribution {
            points: points.into_iter().map(|(v, w)| (v, w / total)).collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.points[0].0.len()
    }

    /// Weighted mean of the points.
    pub fn mean(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.dimension()];
        for (v, w) in &self.points {
            for (a, x) in acc.iter_mut().zip(v) {
                *a = *a + *w * *x;
            }
        }
        acc
    }
}

/// Unweighted mean of the embeddings of in-table tokens, counting repeats.
pub fn centroid<T: Scalar, S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable<T>) -> Option<Vec<T>> {
    let mut acc = vec![T::zero(); table.dimension()];
    let mut n = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t.as_ref())) {
        for (a, x) in acc.iter_mut().zip(v) {
            *a = *a + *x;
        }
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let n = T::of_count(n);
    Some(acc.into_iter().map(|a| a / n).collect())
}

/// One point per distinct in-table token, weighted by its share of the
/// in-table token count. Points are ordered by word.
pub fn word_distribution<T: Scalar, S: AsRef<str>>(
    tokens: &[S],
    table: &EmbeddingTable<T>,
) -> Option<WordDistribution<T>> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        let t = t.as_ref();
        if table.get(t).is_some() {
            *counts.entry(t).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return None;
    }
    let total = T::of_count(total);
    let points = counts
        .into_iter()
        .map(|(w, c)| {
            let v = table.get(w).expect("counted words are in the table").to_vec();
            (v, T::of_count(c) / total)
        })
        .collect();
    Some(WordDistribution { points })
}

/// Euclidean distance between two equal-length vectors.
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<T>()
        .sqrt()
}
