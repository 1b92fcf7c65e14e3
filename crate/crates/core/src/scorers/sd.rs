//! Sentence-level similarity/dissimilarity scoring.
//!
//! For a (supporting, candidate) pair, a sentence-by-sentence similarity
//! matrix is reduced by `f` along each supporting sentence's row and by `g`
//! over the resulting column of row values. Word-based (inverse Manhattan
//! over sentence term vectors) and embedding-based matrices are reduced
//! separately and summed.

use std::collections::HashMap;

use super::{Agg, EmbeddingMode, Method, ScoredInstance, ScorerConfig, ScorerError, SdParams};
use crate::corpus::TaskInstance;
use crate::embeddings::{centroid, euclidean, word_distribution, EmbeddingTable, WordDistribution};
use crate::textproc::{sentence_term_vector, TermVector, TokenizedSpeech, Vocabulary};
use crate::transport::wmd;
use crate::Scalar;

/// Smallest value a positive product aggregation reports.
const PRODUCT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SdVariant {
    /// Word-based plus embedding-based similarities.
    Full,
    /// Embedding-based similarity only.
    EmbeddingOnly,
}

impl SdVariant {
    pub fn method(self) -> Method {
        match self {
            SdVariant::Full => Method::SD,
            SdVariant::EmbeddingOnly => Method::SDe,
        }
    }

    pub fn from_method(method: Method) -> Option<Self> {
        match method {
            Method::SD => Some(SdVariant::Full),
            Method::SDe => Some(SdVariant::EmbeddingOnly),
            _ => None,
        }
    }
}

/// Precomputed representations of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SdSentence<T> {
    /// Normalized term frequencies; absent when no vocabulary is used.
    pub terms: Option<TermVector<T>>,
    pub centroid: Option<Vec<T>>,
    pub distribution: Option<WordDistribution<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdSpeech<T> {
    pub sentences: Vec<SdSentence<T>>,
}

impl<T: Scalar> SdSpeech<T> {
    /// Stems feed the term vectors, surface tokens feed the embeddings.
    pub fn build(tok: &TokenizedSpeech, vocab: Option<&Vocabulary>, table: &EmbeddingTable<T>) -> Self {
        let sentences = tok
            .sentence_tokens
            .iter()
            .zip(&tok.stemmed_tokens)
            .map(|(tokens, stems)| SdSentence {
                terms: vocab.map(|v| sentence_term_vector(stems, v)),
                centroid: centroid(tokens, table),
                distribution: word_distribution(tokens, table),
            })
            .collect();
        SdSpeech { sentences }
    }
}

/// `1 / (1 + L1(s, t))`. Empty vectors act as zero vectors.
pub fn sentence_similarity_word<T: Scalar>(s: &TermVector<T>, t: &TermVector<T>) -> T {
    T::one() / (T::one() + super::manhattan(s, t))
}

fn embedding_similarity<T: Scalar>(
    a: &SdSentence<T>,
    b: &SdSentence<T>,
    mode: EmbeddingMode,
) -> Result<T, ScorerError> {
    let distance = match mode {
        EmbeddingMode::Centroid => match (&a.centroid, &b.centroid) {
            (Some(x), Some(y)) => euclidean(x, y),
            _ => return Ok(T::zero()),
        },
        EmbeddingMode::Wmd => match (&a.distribution, &b.distribution) {
            (Some(x), Some(y)) => wmd(x, y)?,
            _ => return Ok(T::zero()),
        },
    };
    Ok(T::one() / (T::one() + distance))
}

/// Inverse embedding distance between two token lists; zero when either
/// has no token in the table.
pub fn sentence_similarity_embedding<T: Scalar, S: AsRef<str>>(
    s: &[S],
    t: &[S],
    table: &EmbeddingTable<T>,
    mode: EmbeddingMode,
) -> Result<T, ScorerError> {
    let sentence = |tokens: &[S]| SdSentence {
        terms: None,
        centroid: centroid(tokens, table),
        distribution: word_distribution(tokens, table),
    };
    embedding_similarity(&sentence(s), &sentence(t), mode)
}

fn reduce<T: Scalar>(values: &[T], agg: Agg) -> T {
    match agg {
        Agg::Min => values.iter().copied().fold(T::infinity(), T::min),
        Agg::Max => values.iter().copied().fold(T::neg_infinity(), T::max),
        Agg::Avg => values.iter().copied().sum::<T>() / T::of_count(values.len()),
        Agg::Product => {
            if values.iter().all(|v| *v > T::zero()) {
                let log_sum: T = values.iter().map(|v| v.ln()).sum();
                log_sum.exp().max(T::of(PRODUCT_FLOOR))
            } else {
                values.iter().fold(T::one(), |acc, &v| acc * v)
            }
        }
    }
}

fn check_matrix<T>(matrix: &[Vec<T>]) -> Result<(), ScorerError> {
    if matrix.is_empty() || matrix.iter().any(Vec::is_empty) {
        return Err(ScorerError::EmptyMatrix);
    }
    Ok(())
}

/// `g` over supporting sentences of (`f` over candidate sentences).
pub fn aggregate<T: Scalar>(matrix: &[Vec<T>], f: Agg, g: Agg) -> Result<T, ScorerError> {
    check_matrix(matrix)?;
    let rows: Vec<T> = matrix.iter().map(|row| reduce(row, f)).collect();
    Ok(reduce(&rows, g))
}

/// All 16 `(f, g)` aggregations, indexed by `f.index() * 4 + g.index()`.
pub fn aggregate_all<T: Scalar>(matrix: &[Vec<T>]) -> Result<[T; 16], ScorerError> {
    check_matrix(matrix)?;
    let mut out = [T::zero(); 16];
    for f in Agg::ALL {
        let rows: Vec<T> = matrix.iter().map(|row| reduce(row, f)).collect();
        for g in Agg::ALL {
            out[f.index() * 4 + g.index()] = reduce(&rows, g);
        }
    }
    Ok(out)
}

/// Per-candidate aggregations, reusable across every SD parameter choice.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAggregates<T> {
    /// Absent for the embedding-only variant.
    pub word: Option<[T; 16]>,
    pub embedding: [T; 16],
}

impl<T: Scalar> CandidateAggregates<T> {
    fn term(&self, f: Agg, g: Agg) -> T {
        let k = f.index() * 4 + g.index();
        self.embedding[k] + self.word.map_or(T::zero(), |w| w[k])
    }
}

fn lookup<'a, T>(speeches: &'a HashMap<String, SdSpeech<T>>, id: &str) -> &'a SdSpeech<T> {
    speeches
        .get(id)
        .unwrap_or_else(|| panic!("no sentence features for speech {id}"))
}

/// Similarity matrices for every candidate of `instance`, reduced by all
/// aggregator pairs.
pub fn sd_aggregates<T: Scalar>(
    instance: &TaskInstance,
    speeches: &HashMap<String, SdSpeech<T>>,
    variant: SdVariant,
    mode: EmbeddingMode,
) -> Result<Vec<CandidateAggregates<T>>, ScorerError> {
    let sup = lookup(speeches, &instance.supporting_id);
    instance
        .candidate_ids
        .iter()
        .map(|c| {
            let cand = lookup(speeches, c);
            let embedding = sup
                .sentences
                .iter()
                .map(|s| {
                    cand.sentences
                        .iter()
                        .map(|t| embedding_similarity(s, t, mode))
                        .collect::<Result<Vec<T>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let word = match variant {
                SdVariant::EmbeddingOnly => None,
                SdVariant::Full => {
                    let matrix: Vec<Vec<T>> = sup
                        .sentences
                        .iter()
                        .map(|s| {
                            cand.sentences
                                .iter()
                                .map(|t| {
                                    let (a, b) = (
                                        s.terms.as_ref().expect("SD needs sentence term vectors"),
                                        t.terms.as_ref().expect("SD needs sentence term vectors"),
                                    );
                                    sentence_similarity_word(a, b)
                                })
                                .collect()
                        })
                        .collect();
                    Some(aggregate_all(&matrix)?)
                }
            };
            Ok(CandidateAggregates {
                word,
                embedding: aggregate_all(&embedding)?,
            })
        })
        .collect()
}

/// `alpha * sim - (1 - alpha) * dissim` from cached aggregations.
pub fn combine_sd<T: Scalar>(aggregates: &CandidateAggregates<T>, params: &SdParams) -> T {
    let alpha = T::of(params.alpha);
    let sim = aggregates.term(params.agg_f_sim, params.agg_g_sim);
    let dissim = aggregates.term(params.agg_f_dissim, params.agg_g_dissim);
    alpha * sim - (T::one() - alpha) * dissim
}

/// Scores with SD or SD-e according to `config`.
pub fn score_sd<T: Scalar>(
    instance: &TaskInstance,
    speeches: &HashMap<String, SdSpeech<T>>,
    config: &ScorerConfig,
) -> Result<ScoredInstance, ScorerError> {
    config.validate()?;
    let variant = SdVariant::from_method(config.method)
        .ok_or_else(|| ScorerError::InvalidConfig(format!("{} is not an SD method", config.method)))?;
    let params = config.sd_params.expect("validated");
    let aggregates = sd_aggregates(instance, speeches, variant, config.embedding_mode)?;
    let scores = aggregates.iter().map(|a| combine_sd(a, &params).to_f64_lossy());
    ScoredInstance::from_candidate_scores(instance, scores)
}
