use std::collections::{BTreeSet, HashMap};

use super::{ScoredInstance, ScorerError};
use crate::corpus::TaskInstance;
use crate::textproc::{Ngram, NgramSet};

fn lookup<'a>(sets: &'a HashMap<String, NgramSet>, id: &str) -> &'a NgramSet {
    sets.get(id)
        .unwrap_or_else(|| panic!("no ngram set for speech {id}"))
}

/// Total token length of the ngrams shared by the supporting speech and a
/// candidate but absent from every other candidate.
pub fn score_ngrams(
    instance: &TaskInstance,
    ngram_sets: &HashMap<String, NgramSet>,
) -> Result<ScoredInstance, ScorerError> {
    let sup = lookup(ngram_sets, &instance.supporting_id);
    let candidates: Vec<&NgramSet> = instance
        .candidate_ids
        .iter()
        .map(|c| lookup(ngram_sets, c))
        .collect();
    // how many candidates mention each supporting-speech ngram
    let mut mentions: HashMap<&Ngram, usize> = HashMap::new();
    for cand in &candidates {
        for gram in cand.ngrams.intersection(&sup.ngrams) {
            *mentions.entry(gram).or_default() += 1;
        }
    }
    let scores = candidates.iter().map(|cand| {
        let exclusive: BTreeSet<&Ngram> = cand
            .ngrams
            .intersection(&sup.ngrams)
            .filter(|g| mentions[g] == 1)
            .collect();
        exclusive.iter().map(|g| g.len()).sum::<usize>() as f64
    });
    ScoredInstance::from_candidate_scores(instance, scores)
}
