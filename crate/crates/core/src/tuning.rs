//! Exhaustive grid search over SD aggregators and alpha.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TaskInstance;
use crate::scorers::{
    combine_sd, sd_aggregates, Agg, CandidateAggregates, EmbeddingMode, ScorerConfig, ScorerError,
    SdParams, SdSpeech, SdVariant,
};

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("tuning set is empty")]
    EmptyTuningSet,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    Mrr,
    #[serde(rename = "accuracy_top1")]
    AccuracyTop1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub agg_functions: Vec<Agg>,
    /// Strictly increasing, within [0, 1].
    pub alpha_values: Vec<f64>,
    #[serde(default)]
    pub objective: Objective,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            agg_functions: Agg::ALL.to_vec(),
            alpha_values: (0..=10).map(|k| k as f64 / 10.0).collect(),
            objective: Objective::Mrr,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), TuningError> {
        if self.alpha_values.is_empty() {
            return Err(TuningError::InvalidGrid("no alpha values".into()));
        }
        if self.alpha_values.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(TuningError::InvalidGrid("alpha outside [0, 1]".into()));
        }
        if self.alpha_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TuningError::InvalidGrid("alpha values must increase strictly".into()));
        }
        let mut aggs = self.agg_functions.clone();
        aggs.sort();
        aggs.dedup();
        if aggs.len() != self.agg_functions.len() {
            return Err(TuningError::InvalidGrid("repeated aggregator".into()));
        }
        if self.combinations().is_empty() {
            return Err(TuningError::InvalidGrid("no admissible combination".into()));
        }
        Ok(())
    }

    /// Every admissible parameter set, in ascending lexicographic order of
    /// (f_sim, g_sim, f_dissim, g_dissim, alpha).
    pub fn combinations(&self) -> Vec<SdParams> {
        let mut aggs = self.agg_functions.clone();
        aggs.sort();
        let mut out = Vec::new();
        for &fs in &aggs {
            for &gs in &aggs {
                for &fd in &aggs {
                    for &gd in &aggs {
                        if (fs, gs) == (fd, gd) {
                            continue;
                        }
                        for &alpha in &self.alpha_values {
                            out.push(SdParams {
                                agg_f_sim: fs,
                                agg_g_sim: gs,
                                agg_f_dissim: fd,
                                agg_g_dissim: gd,
                                alpha,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Similarity aggregations of one instance, shared by every grid point.
#[derive(Debug, Clone)]
pub struct CachedInstance {
    pub instance: TaskInstance,
    pub aggregates: Vec<CandidateAggregates<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedConfig {
    pub config: ScorerConfig,
    pub objective: Objective,
    pub objective_value: f64,
    pub n_instances: usize,
}

/// Reciprocal rank of the best gold candidate under `scores`, with the
/// ranking's tie-break (higher score first, then smaller id).
pub fn reciprocal_rank(instance: &TaskInstance, scores: &[f64]) -> f64 {
    let ids = &instance.candidate_ids;
    let mut best = usize::MAX;
    for (g, id) in ids.iter().enumerate() {
        if !instance.is_gold(id) {
            continue;
        }
        let ahead = (0..ids.len())
            .filter(|&c| {
                c != g && scores[c].total_cmp(&scores[g]).then_with(|| ids[g].cmp(&ids[c])).is_gt()
            })
            .count();
        best = best.min(ahead + 1);
    }
    1.0 / best as f64
}

/// Objective value of `params` over the cached tuning set.
pub fn objective_value(cache: &[CachedInstance], params: &SdParams, objective: Objective) -> f64 {
    let total: f64 = cache
        .iter()
        .map(|c| {
            let scores: Vec<f64> = c.aggregates.iter().map(|a| combine_sd(a, params)).collect();
            let rr = reciprocal_rank(&c.instance, &scores);
            match objective {
                Objective::Mrr => rr,
                Objective::AccuracyTop1 => {
                    if rr == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        })
        .sum();
    total / cache.len() as f64
}

/// Computes the aggregation cache for `instances`.
pub fn build_cache(
    instances: &[TaskInstance],
    speeches: &HashMap<String, SdSpeech<f64>>,
    variant: SdVariant,
    mode: EmbeddingMode,
) -> Result<Vec<CachedInstance>, TuningError> {
    instances
        .par_iter()
        .map(|i| {
            Ok(CachedInstance {
                instance: i.clone(),
                aggregates: sd_aggregates(i, speeches, variant, mode)?,
            })
        })
        .collect()
}

/// Best grid point over a prepared cache. Ties go to the first point in
/// lexicographic order.
pub fn tune_cached(
    cache: &[CachedInstance],
    grid: &GridSpec,
) -> Result<(SdParams, f64), TuningError> {
    if cache.is_empty() {
        return Err(TuningError::EmptyTuningSet);
    }
    grid.validate()?;
    let combos = grid.combinations();
    let values: Vec<f64> = combos
        .par_iter()
        .map(|p| objective_value(cache, p, grid.objective))
        .collect();
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    Ok((combos[best], values[best]))
}

/// Tunes SD or SD-e on `instances` (validation for SD, train plus
/// validation for SD-e).
pub fn tune_sd(
    instances: &[TaskInstance],
    speeches: &HashMap<String, SdSpeech<f64>>,
    grid: &GridSpec,
    variant: SdVariant,
    mode: EmbeddingMode,
) -> Result<TunedConfig, TuningError> {
    if instances.is_empty() {
        return Err(TuningError::EmptyTuningSet);
    }
    grid.validate()?;
    let cache = build_cache(instances, speeches, variant, mode)?;
    let (params, value) = tune_cached(&cache, grid)?;
    Ok(TunedConfig {
        config: ScorerConfig::sd(variant, params, mode),
        objective: grid.objective,
        objective_value: value,
        n_instances: instances.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Setting;

    #[test]
    fn default_grid_size() {
        let grid = GridSpec::default();
        grid.validate().unwrap();
        assert_eq!(grid.combinations().len(), 240 * 11);
        let first = grid.combinations()[0];
        assert_eq!(
            (first.agg_f_sim, first.agg_g_sim, first.agg_f_dissim, first.agg_g_dissim, first.alpha),
            (Agg::Min, Agg::Min, Agg::Min, Agg::Max, 0.0)
        );
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec {
            alpha_values: vec![0.5, 0.2],
            ..GridSpec::default()
        };
        assert!(g.validate().is_err());
        g.alpha_values = vec![];
        assert!(g.validate().is_err());
        g.alpha_values = vec![1.5];
        assert!(g.validate().is_err());
        let single = GridSpec {
            agg_functions: vec![Agg::Max],
            alpha_values: vec![0.5],
            objective: Objective::Mrr,
        };
        assert!(single.validate().is_err());
    }

    fn inst(candidates: &[&str], gold: &[&str]) -> TaskInstance {
        TaskInstance {
            supporting_id: "s".into(),
            candidate_ids: candidates.iter().map(|s| s.to_string()).collect(),
            gold_ids: gold.iter().map(|s| s.to_string()).collect(),
            setting: Setting::All,
        }
    }

    #[test]
    fn reciprocal_rank_tie_break() {
        let i = inst(&["a", "b", "c"], &["b"]);
        assert_eq!(reciprocal_rank(&i, &[1.0, 1.0, 0.0]), 0.5);
        assert_eq!(reciprocal_rank(&i, &[0.0, 1.0, 1.0]), 1.0);
        let two = inst(&["a", "b", "c"], &["b", "c"]);
        assert_eq!(reciprocal_rank(&two, &[3.0, 1.0, 2.0]), 0.5);
    }

    #[test]
    fn one_admissible_combination_is_returned() {
        let grid = GridSpec {
            agg_functions: vec![Agg::Min, Agg::Max],
            alpha_values: vec![0.3],
            objective: Objective::Mrr,
        };
        let cache = vec![CachedInstance {
            instance: inst(&["a", "b"], &["a"]),
            aggregates: vec![
                CandidateAggregates {
                    word: None,
                    embedding: [0.5; 16],
                };
                2
            ],
        }];
        let (params, _) = tune_cached(&cache, &grid).unwrap();
        assert_eq!(params, grid.combinations()[0]);
        assert!(tune_cached(&[], &grid).is_err());
    }

    #[test]
    fn better_combination_wins() {
        // gold "b" wins only when sim uses (max, max)
        let mut gold = [0.0; 16];
        gold[Agg::Max.index() * 4 + Agg::Max.index()] = 1.0;
        let other = [0.5; 16];
        let cache = vec![CachedInstance {
            instance: inst(&["a", "b"], &["b"]),
            aggregates: vec![
                CandidateAggregates {
                    word: None,
                    embedding: other,
                },
                CandidateAggregates {
                    word: None,
                    embedding: gold,
                },
            ],
        }];
        let grid = GridSpec {
            alpha_values: vec![1.0],
            ..GridSpec::default()
        };
        let (params, value) = tune_cached(&cache, &grid).unwrap();
        assert_eq!((params.agg_f_sim, params.agg_g_sim), (Agg::Max, Agg::Max));
        assert_eq!(value, 1.0);
    }
}
