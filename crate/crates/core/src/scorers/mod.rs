//! Candidate scorers. Every scorer maps a [`TaskInstance`] to one finite
//! score per candidate; higher means more likely to be the true counter.

mod external;
mod mi;
mod ngrams;
mod sd;
mod similarity;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TaskInstance;
use crate::transport::TransportError;
use crate::Score;

pub use external::{score_external, ExternalScores};
pub use mi::{
    binary_contingency, conditional_mutual_information, mutual_information,
    mutual_information_from_counts, score_cmi, score_mi,
};
pub use ngrams::score_ngrams;
pub use sd::{
    aggregate, aggregate_all, combine_sd, sd_aggregates, score_sd, sentence_similarity_embedding,
    sentence_similarity_word, CandidateAggregates, SdSentence, SdSpeech, SdVariant,
};
pub use similarity::{cosine, inverse_jensen_shannon, jensen_shannon_divergence, manhattan};

pub use similarity::{score_cosine, score_js};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("aggregation over an empty similarity matrix")]
    EmptyMatrix,
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("no external score for supporting {supporting_id}, candidate {candidate_id}")]
    MissingScore {
        supporting_id: String,
        candidate_id: String,
    },
    #[error("malformed score file at line {line}: {reason}")]
    MalformedScoreFile { line: usize, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scorer config: {0}")]
    InvalidConfig(String),
    #[error("non-finite score for candidate {0}")]
    NonFiniteScore(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cos")]
    Cos,
    #[serde(rename = "js")]
    JS,
    #[serde(rename = "sd")]
    SD,
    #[serde(rename = "sde")]
    SDe,
    #[serde(rename = "ngrs")]
    Ngrams,
    #[serde(rename = "mi")]
    MI,
    #[serde(rename = "cmi")]
    CMI,
    #[serde(rename = "external")]
    External,
}

impl Method {
    /// Identifier used in file names and on the command line.
    pub fn slug(self) -> &'static str {
        match self {
            Method::Cos => "cos",
            Method::JS => "js",
            Method::SD => "sd",
            Method::SDe => "sde",
            Method::Ngrams => "ngrs",
            Method::MI => "mi",
            Method::CMI => "cmi",
            Method::External => "external",
        }
    }

    /// Display name used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Cos => "Cos",
            Method::JS => "JS",
            Method::SD => "SD",
            Method::SDe => "SD-e",
            Method::Ngrams => "ngrs",
            Method::MI => "MI",
            Method::CMI => "c-MI",
            Method::External => "External",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, Method::SD | Method::SDe)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect();
        Ok(match key.as_str() {
            "cos" | "cosine" => Method::Cos,
            "js" => Method::JS,
            "sd" => Method::SD,
            "sde" => Method::SDe,
            "ngrs" | "ngrams" => Method::Ngrams,
            "mi" => Method::MI,
            "cmi" => Method::CMI,
            "external" | "ext" => Method::External,
            _ => return Err(format!("unknown method '{s}'")),
        })
    }
}

/// Aggregation function over a row or column of sentence similarities.
/// Declaration order is the tie-break order used by tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agg {
    Min,
    Max,
    Avg,
    Product,
}

impl Agg {
    pub const ALL: [Agg; 4] = [Agg::Min, Agg::Max, Agg::Avg, Agg::Product];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Agg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agg::Min => "min",
            Agg::Max => "max",
            Agg::Avg => "avg",
            Agg::Product => "product",
        })
    }
}

/// Aggregators and weighting for the similarity/dissimilarity score
/// `alpha * sim - (1 - alpha) * dissim`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SdParams {
    pub agg_f_sim: Agg,
    pub agg_g_sim: Agg,
    pub agg_f_dissim: Agg,
    pub agg_g_dissim: Agg,
    pub alpha: f64,
}

impl SdParams {
    pub fn validate(&self) -> Result<(), ScorerError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ScorerError::InvalidConfig(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if (self.agg_f_sim, self.agg_g_sim) == (self.agg_f_dissim, self.agg_g_dissim) {
            return Err(ScorerError::InvalidConfig(
                "sim and dissim must use different aggregator pairs".into(),
            ));
        }
        Ok(())
    }
}

/// How an embedding-based sentence similarity is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    /// Distance between the mean embeddings of the two sentences.
    #[default]
    Centroid,
    /// Word mover's distance between the two bag-of-words distributions.
    Wmd,
}

impl FromStr for EmbeddingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "centroid" => Ok(EmbeddingMode::Centroid),
            "wmd" => Ok(EmbeddingMode::Wmd),
            other => Err(format!("unknown embedding mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd_params: Option<SdParams>,
    #[serde(default)]
    pub embedding_mode: EmbeddingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_path: Option<PathBuf>,
}

impl ScorerConfig {
    pub fn new(method: Method) -> Self {
        ScorerConfig {
            method,
            sd_params: None,
            embedding_mode: EmbeddingMode::default(),
            external_path: None,
        }
    }

    pub fn sd(variant: SdVariant, params: SdParams, mode: EmbeddingMode) -> Self {
        ScorerConfig {
            method: variant.method(),
            sd_params: Some(params),
            embedding_mode: mode,
            external_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), ScorerError> {
        match (self.method.needs_embeddings(), &self.sd_params) {
            (true, Some(p)) => p.validate()?,
            (true, None) => {
                return Err(ScorerError::InvalidConfig(format!(
                    "{} requires sd_params",
                    self.method
                )))
            }
            (false, Some(_)) => {
                return Err(ScorerError::InvalidConfig(format!(
                    "{} does not take sd_params",
                    self.method
                )))
            }
            (false, None) => {}
        }
        if self.method == Method::External && self.external_path.is_none() {
            return Err(ScorerError::InvalidConfig(
                "external method requires external_path".into(),
            ));
        }
        Ok(())
    }
}

/// Scores of one instance and the induced ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub instance: TaskInstance,
    pub scores: BTreeMap<String, Score>,
    /// Candidates by descending score; ties go to the smaller id.
    pub ranking: Vec<String>,
}

impl ScoredInstance {
    pub fn new(instance: TaskInstance, scores: BTreeMap<String, Score>) -> Result<Self, ScorerError> {
        debug_assert!(instance.candidate_ids.iter().all(|c| scores.contains_key(c)));
        debug_assert_eq!(scores.len(), instance.candidate_ids.len());
        if let Some((id, _)) = scores.iter().find(|(_, s)| !s.is_finite()) {
            return Err(ScorerError::NonFiniteScore(id.clone()));
        }
        let ranking = rank(&scores);
        Ok(ScoredInstance {
            instance,
            scores,
            ranking,
        })
    }

    /// Builds from per-candidate scores listed in `candidate_ids` order.
    pub(crate) fn from_candidate_scores(
        instance: &TaskInstance,
        scores: impl IntoIterator<Item = Score>,
    ) -> Result<Self, ScorerError> {
        let scores = instance.candidate_ids.iter().cloned().zip(scores).collect();
        Self::new(instance.clone(), scores)
    }
}

/// Candidate ids ordered by descending score, ties by ascending id.
pub fn rank(scores: &BTreeMap<String, Score>) -> Vec<String> {
    let mut ids: Vec<(&String, Score)> = scores.iter().map(|(k, &v)| (k, v)).collect();
    ids.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ids.into_iter().map(|(k, _)| k.clone()).collect()
}
