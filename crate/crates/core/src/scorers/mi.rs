//! Mutual information between binary presence vectors.
//!
//! Vocabulary indices are the samples: each index `i` yields the pair
//! `(s_i, c_i)` of supporting and candidate presence bits. Logs are base 2.

use std::collections::HashMap;

use super::{ScoredInstance, ScorerError};
use crate::corpus::TaskInstance;
use crate::textproc::TermVector;
use crate::Scalar;

/// 2x2 contingency table, `counts[s][c]`.
pub type Contingency = [[u64; 2]; 2];

/// Empirical mutual information of a contingency table, in bits. Zero when
/// the table is empty or either marginal is constant.
pub fn mutual_information_from_counts<T: Scalar>(counts: &Contingency) -> T {
    let total: u64 = counts.iter().flatten().sum();
    let rows = [counts[0][0] + counts[0][1], counts[1][0] + counts[1][1]];
    let cols = [counts[0][0] + counts[1][0], counts[0][1] + counts[1][1]];
    if total == 0 || rows.contains(&0) || cols.contains(&0) {
        return T::zero();
    }
    let n = T::of_count(total as usize);
    let mut mi = T::zero();
    for a in 0..2 {
        for b in 0..2 {
            if counts[a][b] == 0 {
                continue;
            }
            let joint = T::of_count(counts[a][b] as usize) / n;
            let pa = T::of_count(rows[a] as usize) / n;
            let pb = T::of_count(cols[b] as usize) / n;
            mi = mi + joint * (joint / (pa * pb)).log2();
        }
    }
    mi.max(T::zero())
}

fn intersection_size<T>(a: &TermVector<T>, b: &TermVector<T>) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.entries.len() && j < b.entries.len() {
        match a.entries[i].0.cmp(&b.entries[j].0) {
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    n
}

/// Contingency of two binary vectors over a vocabulary of `vocab_size`.
pub fn binary_contingency<T>(s: &TermVector<T>, c: &TermVector<T>, vocab_size: usize) -> Contingency {
    let both = intersection_size(s, c);
    let s_only = s.entries.len() - both;
    let c_only = c.entries.len() - both;
    let neither = vocab_size - both - s_only - c_only;
    [
        [neither as u64, c_only as u64],
        [s_only as u64, both as u64],
    ]
}

pub fn mutual_information<T: Scalar>(s: &TermVector<T>, c: &TermVector<T>, vocab_size: usize) -> T {
    mutual_information_from_counts(&binary_contingency(s, c, vocab_size))
}

/// Mutual information of `s` and `c` conditioned on presence in the other
/// candidates.
///
/// The samples are all (other candidate `j`, index `i`) pairs. They are
/// split by `k = v_j[i]`; within each part the MI of the replicated
/// `(s_i, c_i)` values is computed, and the parts are mixed by their share
/// of samples. With no other candidates this is plain MI.
pub fn conditional_mutual_information<T: Scalar>(
    s: &TermVector<T>,
    c: &TermVector<T>,
    others: &[&TermVector<T>],
    vocab_size: usize,
) -> T {
    if others.is_empty() {
        return mutual_information(s, c, vocab_size);
    }
    // presence count of each index across the other candidates
    let mut present: HashMap<usize, u64> = HashMap::new();
    for other in others {
        for i in other.indices() {
            *present.entry(i).or_default() += 1;
        }
    }
    let present_total: u64 = present.values().sum();
    let weight = |v: &TermVector<T>, pred: &dyn Fn(usize) -> bool| -> u64 {
        v.indices()
            .filter(|&i| pred(i))
            .map(|i| present.get(&i).copied().unwrap_or(0))
            .sum()
    };
    let in_s = |i: usize| s.entries.binary_search_by_key(&i, |&(k, _)| k).is_ok();
    let in_c = |i: usize| c.entries.binary_search_by_key(&i, |&(k, _)| k).is_ok();

    let mut on = [[0u64; 2]; 2];
    on[1][1] = weight(s, &|i| in_c(i));
    on[1][0] = weight(s, &|i| !in_c(i));
    on[0][1] = weight(c, &|i| !in_s(i));
    on[0][0] = present_total - on[1][1] - on[1][0] - on[0][1];

    let replicas = others.len() as u64;
    let base = binary_contingency(s, c, vocab_size);
    let mut off = [[0u64; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            off[a][b] = replicas * base[a][b] - on[a][b];
        }
    }

    let samples = T::of_count((replicas * vocab_size as u64) as usize);
    if samples == T::zero() {
        return T::zero();
    }
    let off_total: u64 = off.iter().flatten().sum();
    let p_on = T::of_count(present_total as usize) / samples;
    let p_off = T::of_count(off_total as usize) / samples;
    p_off * mutual_information_from_counts::<T>(&off) + p_on * mutual_information_from_counts::<T>(&on)
}

fn lookup<'a, T>(vectors: &'a HashMap<String, TermVector<T>>, id: &str) -> &'a TermVector<T> {
    vectors
        .get(id)
        .unwrap_or_else(|| panic!("no binary vector for speech {id}"))
}

/// MI between each candidate's binary vector and the supporting speech's.
pub fn score_mi<T: Scalar>(
    instance: &TaskInstance,
    binary: &HashMap<String, TermVector<T>>,
    vocab_size: usize,
) -> Result<ScoredInstance, ScorerError> {
    let sup = lookup(binary, &instance.supporting_id);
    let scores = instance
        .candidate_ids
        .iter()
        .map(|c| mutual_information(sup, lookup(binary, c), vocab_size).to_f64_lossy());
    ScoredInstance::from_candidate_scores(instance, scores)
}

/// MI conditioned on the other candidates of the same instance.
pub fn score_cmi<T: Scalar>(
    instance: &TaskInstance,
    binary: &HashMap<String, TermVector<T>>,
    vocab_size: usize,
) -> Result<ScoredInstance, ScorerError> {
    let sup = lookup(binary, &instance.supporting_id);
    let vectors: Vec<&TermVector<T>> = instance
        .candidate_ids
        .iter()
        .map(|c| lookup(binary, c))
        .collect();
    let scores = (0..vectors.len()).map(|k| {
        let others: Vec<&TermVector<T>> = vectors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, v)| *v)
            .collect();
        conditional_mutual_information(sup, vectors[k], &others, vocab_size).to_f64_lossy()
    });
    ScoredInstance::from_candidate_scores(instance, scores)
}
