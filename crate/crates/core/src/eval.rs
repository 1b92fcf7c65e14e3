//! Ranking metrics: top-1 accuracy, mean reciprocal rank and the random
//! baseline, plus a comparison table across methods.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Setting, TaskInstance};
use crate::scorers::ScoredInstance;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("instance mismatch: {0}")]
    InstanceMismatch(String),
    #[error("no instances to evaluate")]
    EmptyInstanceSet,
}

/// Outcome for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub supporting_id: String,
    pub ranking: Vec<String>,
    pub gold_ids: Vec<String>,
    pub reciprocal_rank: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub setting: Setting,
    pub method: String,
    pub n_instances: usize,
    pub accuracy_top1: f64,
    pub mrr: f64,
    pub random_baseline: f64,
    pub rows: Vec<EvalRow>,
}

/// 1-based position of the best-ranked gold candidate.
pub fn best_gold_rank(ranking: &[String], gold_ids: &[String]) -> Option<usize> {
    ranking
        .iter()
        .position(|id| gold_ids.contains(id))
        .map(|p| p + 1)
}

fn check_pair(instance: &TaskInstance, scored: &ScoredInstance) -> Result<(), EvalError> {
    if scored.instance != *instance {
        return Err(EvalError::InstanceMismatch(format!(
            "expected supporting speech {}, got {}",
            instance.supporting_id, scored.instance.supporting_id
        )));
    }
    let mut ranked = scored.ranking.clone();
    ranked.sort();
    if ranked != instance.candidate_ids {
        return Err(EvalError::InstanceMismatch(format!(
            "ranking of {} is not a permutation of its candidates",
            instance.supporting_id
        )));
    }
    if instance.gold_ids.is_empty() {
        return Err(EvalError::InstanceMismatch(format!(
            "{} has no gold candidate",
            instance.supporting_id
        )));
    }
    Ok(())
}

/// Scores `scored` against `instances`, pairwise in order. Every instance
/// must share one setting.
pub fn evaluate(
    method: &str,
    instances: &[TaskInstance],
    scored: &[ScoredInstance],
) -> Result<EvalReport, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::EmptyInstanceSet);
    }
    if instances.len() != scored.len() {
        return Err(EvalError::InstanceMismatch(format!(
            "{} instances but {} scored",
            instances.len(),
            scored.len()
        )));
    }
    let setting = instances[0].setting;
    if let Some(other) = instances.iter().find(|i| i.setting != setting) {
        return Err(EvalError::InstanceMismatch(format!(
            "mixed settings {setting} and {}",
            other.setting
        )));
    }
    let mut rows = Vec::with_capacity(instances.len());
    for (instance, s) in instances.iter().zip(scored) {
        check_pair(instance, s)?;
        let rank = best_gold_rank(&s.ranking, &instance.gold_ids).expect("gold is a candidate");
        rows.push(EvalRow {
            supporting_id: instance.supporting_id.clone(),
            ranking: s.ranking.clone(),
            gold_ids: instance.gold_ids.clone(),
            reciprocal_rank: 1.0 / rank as f64,
            hit: rank == 1,
        });
    }
    let n = rows.len() as f64;
    let hits = rows.iter().filter(|r| r.hit).count() as f64;
    let rr_sum: f64 = rows.iter().map(|r| r.reciprocal_rank).sum();
    Ok(EvalReport {
        setting,
        method: method.to_string(),
        n_instances: rows.len(),
        accuracy_top1: hits / n,
        mrr: rr_sum / n,
        random_baseline: random_baseline(instances)?,
        rows,
    })
}

/// Expected top-1 accuracy of a uniformly random ranking.
pub fn random_baseline(instances: &[TaskInstance]) -> Result<f64, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::EmptyInstanceSet);
    }
    let sum: f64 = instances
        .iter()
        .map(|i| i.gold_ids.len() as f64 / i.candidate_ids.len() as f64)
        .sum();
    Ok(sum / instances.len() as f64)
}

/// Top-1 accuracy averaged over `trials` seeded shuffles of every
/// candidate list.
pub fn random_baseline_empirical(
    instances: &[TaskInstance],
    trials: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if instances.is_empty() || trials == 0 {
        return Err(EvalError::EmptyInstanceSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        for instance in instances {
            let mut order = instance.candidate_ids.clone();
            order.shuffle(&mut rng);
            if instance.is_gold(&order[0]) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / (trials * instances.len()) as f64)
}

/// Accuracy and MRR of one method in one setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub accuracy_top1: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub cells: BTreeMap<Setting, Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub settings: Vec<Setting>,
    /// Sorted by All-setting MRR, best first.
    pub rows: Vec<ComparisonRow>,
    pub random_baseline: BTreeMap<Setting, f64>,
}

/// Groups reports by method and orders methods by their All-setting MRR.
/// Methods without an All report go last; ties resolve by method name.
pub fn compare_methods(reports: &[EvalReport]) -> ComparisonTable {
    let mut by_method: BTreeMap<String, BTreeMap<Setting, Cell>> = BTreeMap::new();
    let mut random_baseline = BTreeMap::new();
    for r in reports {
        by_method.entry(r.method.clone()).or_default().insert(
            r.setting,
            Cell {
                accuracy_top1: r.accuracy_top1,
                mrr: r.mrr,
            },
        );
        random_baseline.entry(r.setting).or_insert(r.random_baseline);
    }
    let mut rows: Vec<ComparisonRow> = by_method
        .into_iter()
        .map(|(method, cells)| ComparisonRow { method, cells })
        .collect();
    let key = |row: &ComparisonRow| row.cells.get(&Setting::All).map(|c| c.mrr);
    rows.sort_by(|a, b| match (key(a), key(b)) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.method.cmp(&b.method)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.method.cmp(&b.method),
    });
    ComparisonTable {
        settings: Setting::ALL.to_vec(),
        rows,
        random_baseline,
    }
}

impl ComparisonTable {
    /// Plain-text table: accuracy in percent, MRR as a fraction, `-` for
    /// missing cells, and a closing `Rand` row.
    pub fn render(&self) -> String {
        let mut header = vec!["Method".to_string()];
        for s in &self.settings {
            let name = match s {
                Setting::All => "All",
                Setting::Explicit => "Explicit",
                Setting::Implicit => "Implicit",
            };
            header.push(format!("{name} Acc"));
            header.push(format!("{name} MRR"));
        }
        let mut lines = vec![header];
        for row in &self.rows {
            let mut line = vec![row.method.clone()];
            for s in &self.settings {
                match row.cells.get(s) {
                    Some(c) => {
                        line.push(format!("{:.1}", c.accuracy_top1 * 100.0));
                        line.push(format!("{:.2}", c.mrr));
                    }
                    None => line.extend(["-".to_string(), "-".to_string()]),
                }
            }
            lines.push(line);
        }
        let mut rand = vec!["Rand".to_string()];
        for s in &self.settings {
            match self.random_baseline.get(s) {
                Some(r) => rand.push(format!("{:.1}", r * 100.0)),
                None => rand.push("-".to_string()),
            }
            rand.push("-".to_string());
        }
        lines.push(rand);

        let columns = lines[0].len();
        let widths: Vec<usize> = (0..columns)
            .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &lines {
            let mut text = String::new();
            for (c, cell) in line.iter().enumerate() {
                if c == 0 {
                    write!(text, "{cell:<w$}", w = widths[c]).unwrap();
                } else {
                    write!(text, "  {cell:>w$}", w = widths[c]).unwrap();
                }
            }
            out.push_str(text.trim_end());
            out.push('\n');
        }
        out
    }
}
