use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{ScoredInstance, ScorerError};
use crate::corpus::TaskInstance;

#[derive(Deserialize)]
struct Record {
    supporting_id: String,
    candidate_id: String,
    score: f64,
}

/// Scores produced outside this crate, keyed by (supporting, candidate).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores {
    scores: HashMap<(String, String), f64>,
}

impl ExternalScores {
    /// Reads JSONL records `{"supporting_id", "candidate_id", "score"}`.
    /// A pair may repeat only with the same score.
    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let io_err = |source| ScorerError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::open(path).map_err(io_err)?;
        let mut scores = HashMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| ScorerError::MalformedScoreFile {
                line: n + 1,
                reason,
            };
            let record: Record = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            if !record.score.is_finite() {
                return Err(malformed("score is not finite".into()));
            }
            let key = (record.supporting_id, record.candidate_id);
            match scores.get(&key) {
                Some(&previous) if previous != record.score => {
                    return Err(malformed(format!(
                        "conflicting scores {previous} and {} for ({}, {})",
                        record.score, key.0, key.1
                    )))
                }
                _ => {
                    scores.insert(key, record.score);
                }
            }
        }
        Ok(ExternalScores { scores })
    }

    pub fn get(&self, supporting_id: &str, candidate_id: &str) -> Option<f64> {
        self.scores
            .get(&(supporting_id.to_string(), candidate_id.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn score_external(
    instance: &TaskInstance,
    external: &ExternalScores,
) -> Result<ScoredInstance, ScorerError> {
    let scores = instance
        .candidate_ids
        .iter()
        .map(|c| {
            external
                .get(&instance.supporting_id, c)
                .ok_or_else(|| ScorerError::MissingScore {
                    supporting_id: instance.supporting_id.clone(),
                    candidate_id: c.clone(),
                })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    ScoredInstance::from_candidate_scores(instance, scores)
}
