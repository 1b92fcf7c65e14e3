//! Brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rebutrank_core::scorers::{Agg, EmbeddingMode, SdParams};
use rebutrank_core::textproc::{TokenizedSpeech, Vocabulary};
use rebutrank_core::EmbeddingTable64;

fn plogp_ratio(joint: f64, a: f64, b: f64) -> f64 {
    if joint == 0.0 {
        0.0
    } else {
        joint * (joint / (a * b)).log2()
    }
}

/// MI in bits of paired binary samples, from an explicit joint table.
pub fn mi_of_samples(samples: &[(bool, bool)]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mut joint = [[0.0f64; 2]; 2];
    for &(x, y) in samples {
        joint[x as usize][y as usize] += 1.0 / n;
    }
    let px = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let py = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            mi += plogp_ratio(joint[x][y], px[x], py[y]);
        }
    }
    mi.max(0.0)
}

pub fn mi_dense(s: &[bool], c: &[bool]) -> f64 {
    let samples: Vec<(bool, bool)> = s.iter().copied().zip(c.iter().copied()).collect();
    mi_of_samples(&samples)
}

/// Materializes every (other candidate, index) sample, splits it by the
/// other candidate's bit and mixes the two partition MIs by their share.
pub fn cmi_table(s: &[bool], c: &[bool], others: &[Vec<bool>]) -> f64 {
    if others.is_empty() {
        return mi_dense(s, c);
    }
    let mut parts: [Vec<(bool, bool)>; 2] = [Vec::new(), Vec::new()];
    for o in others {
        for i in 0..s.len() {
            parts[o[i] as usize].push((s[i], c[i]));
        }
    }
    let total = (others.len() * s.len()) as f64;
    if total == 0.0 {
        return 0.0;
    }
    parts
        .iter()
        .map(|p| p.len() as f64 / total * mi_of_samples(p))
        .sum()
}

/// Optimal transport cost from a generic LP solver.
pub fn lp_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = cost
        .iter()
        .map(|row| row.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, &s) in supply.iter().enumerate() {
        let terms: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        problem.add_constraint(&terms, ComparisonOp::Eq, s);
    }
    for (j, &d) in demand.iter().enumerate() {
        let terms: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        problem.add_constraint(&terms, ComparisonOp::Eq, d);
    }
    problem.solve().expect("transport LP is feasible").objective()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Random weights in sixteenths, normalized to one.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=16)).collect();
    let total: u32 = raw.iter().sum();
    raw.iter().map(|&r| r as f64 / total as f64).collect()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect()
}

/// Every stopword-free window of 2 to 4 tokens inside a sentence, minus
/// those contained in a longer retained window.
pub fn ngrams_brute(sentences: &[Vec<String>], stopwords: &HashSet<String>) -> BTreeSet<Vec<String>> {
    let mut all = BTreeSet::new();
    for s in sentences {
        for start in 0..s.len() {
            for len in 2..=4 {
                if start + len > s.len() {
                    break;
                }
                let window = &s[start..start + len];
                if window.iter().any(|t| stopwords.contains(t)) {
                    continue;
                }
                all.insert(window.to_vec());
            }
        }
    }
    let is_sub = |small: &Vec<String>, big: &Vec<String>| {
        big.len() > small.len() && (0..=big.len() - small.len()).any(|k| big[k..k + small.len()] == small[..])
    };
    all.iter()
        .filter(|g| !all.iter().any(|h| is_sub(g, h)))
        .cloned()
        .collect()
}

/// Total length of ngrams shared by the supporting speech and exactly one
/// candidate.
pub fn ngram_scores_brute(sup: &BTreeSet<Vec<String>>, cands: &[BTreeSet<Vec<String>>]) -> Vec<f64> {
    (0..cands.len())
        .map(|k| {
            let shared: BTreeSet<&Vec<String>> = sup.intersection(&cands[k]).collect();
            let exclusive = shared.into_iter().filter(|g| {
                cands
                    .iter()
                    .enumerate()
                    .all(|(j, other)| j == k || !other.contains(*g))
            });
            exclusive.map(|g| g.len() as f64).sum()
        })
        .collect()
}

pub fn reduce_plain(values: &[f64], agg: Agg) -> f64 {
    match agg {
        Agg::Min => {
            let mut m = values[0];
            for &v in values {
                if v < m {
                    m = v;
                }
            }
            m
        }
        Agg::Max => {
            let mut m = values[0];
            for &v in values {
                if v > m {
                    m = v;
                }
            }
            m
        }
        Agg::Avg => {
            let mut s = 0.0;
            for &v in values {
                s += v;
            }
            s / values.len() as f64
        }
        Agg::Product => {
            let mut p = 1.0;
            for &v in values {
                p *= v;
            }
            p
        }
    }
}

pub fn aggregate_nested(matrix: &[Vec<f64>], f: Agg, g: Agg) -> f64 {
    let mut rows = Vec::new();
    for row in matrix {
        rows.push(reduce_plain(row, f));
    }
    reduce_plain(&rows, g)
}

fn dense_freq(stems: &[String], terms: &[String]) -> Vec<f64> {
    let mut v = vec![0.0; terms.len()];
    let mut total = 0.0;
    for s in stems {
        if let Some(i) = terms.iter().position(|t| t == s) {
            v[i] += 1.0;
            total += 1.0;
        }
    }
    if total > 0.0 {
        for x in &mut v {
            *x /= total;
        }
    }
    v
}

fn embedded(tokens: &[String], table: &EmbeddingTable64) -> Vec<Vec<f64>> {
    tokens
        .iter()
        .filter_map(|t| table.get(t).map(|v| v.to_vec()))
        .collect()
}

/// Sentence embedding similarity recomputed from scratch.
pub fn embedding_similarity_ref(s: &[String], t: &[String], table: &EmbeddingTable64, mode: EmbeddingMode) -> f64 {
    let (a, b) = (embedded(s, table), embedded(t, table));
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let d = match mode {
        EmbeddingMode::Centroid => {
            let mean = |pts: &[Vec<f64>]| {
                let mut m = vec![0.0; pts[0].len()];
                for p in pts {
                    for (k, x) in p.iter().enumerate() {
                        m[k] += x / pts.len() as f64;
                    }
                }
                m
            };
            euclid(&mean(&a), &mean(&b))
        }
        EmbeddingMode::Wmd => {
            let supply = vec![1.0 / a.len() as f64; a.len()];
            let demand = vec![1.0 / b.len() as f64; b.len()];
            let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| euclid(x, y)).collect()).collect();
            lp_transport(&supply, &demand, &cost)
        }
    };
    1.0 / (1.0 + d)
}

/// Word and embedding similarity matrices of two speeches, by nested loops.
pub fn sd_matrices(
    sup: &TokenizedSpeech,
    cand: &TokenizedSpeech,
    vocab: &Vocabulary,
    table: &EmbeddingTable64,
    mode: EmbeddingMode,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut word = Vec::new();
    let mut emb = Vec::new();
    for i in 0..sup.sentence_tokens.len() {
        let mut wrow = Vec::new();
        let mut erow = Vec::new();
        for j in 0..cand.sentence_tokens.len() {
            let p = dense_freq(&sup.stemmed_tokens[i], &vocab.terms);
            let q = dense_freq(&cand.stemmed_tokens[j], &vocab.terms);
            let l1: f64 = p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum();
            wrow.push(1.0 / (1.0 + l1));
            erow.push(embedding_similarity_ref(
                &sup.sentence_tokens[i],
                &cand.sentence_tokens[j],
                table,
                mode,
            ));
        }
        word.push(wrow);
        emb.push(erow);
    }
    (word, emb)
}

/// The SD score from precomputed matrices; `word` is `None` for SD-e.
pub fn sd_reference(word: Option<&[Vec<f64>]>, emb: &[Vec<f64>], p: &SdParams) -> f64 {
    let part = |f: Agg, g: Agg| {
        aggregate_nested(emb, f, g) + word.map_or(0.0, |w| aggregate_nested(w, f, g))
    };
    let sim = part(p.agg_f_sim, p.agg_g_sim);
    let dissim = part(p.agg_f_dissim, p.agg_g_dissim);
    p.alpha * sim - (1.0 - p.alpha) * dissim
}

/// All 240 admissible aggregator assignments at one alpha.
pub fn all_sd_params(alpha: f64) -> Vec<SdParams> {
    let mut out = Vec::new();
    for fs in Agg::ALL {
        for gs in Agg::ALL {
            for fd in Agg::ALL {
                for gd in Agg::ALL {
                    if (fs, gs) != (fd, gd) {
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

/// Vocabulary over exactly `terms`.
pub fn vocabulary_of(terms: &[&str]) -> Vocabulary {
    let entries: Vec<String> = terms
        .iter()
        .map(|t| format!(r#"{{"term":"{t}","pair_freq":1}}"#))
        .collect();
    Vocabulary::from_json(&format!(
        r#"{{"threshold":0.0,"pairs":1,"terms":[{}]}}"#,
        entries.join(",")
    ))
    .expect("vocabulary json")
}

/// Speech from token lists; stems are the tokens themselves.
pub fn speech_of(id: &str, sentences: Vec<Vec<String>>) -> TokenizedSpeech {
    TokenizedSpeech {
        speech_id: id.to_string(),
        stemmed_tokens: sentences.clone(),
        sentence_tokens: sentences,
    }
}

pub fn random_sentences(rng: &mut ChaCha8Rng, pool: &[&str], max_sentences: usize, max_len: usize) -> Vec<Vec<String>> {
    let n = rng.gen_range(1..=max_sentences);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            (0..len).map(|_| pool[rng.gen_range(0..pool.len())].to_string()).collect()
        })
        .collect()
}

pub fn toy_table(rng: &mut ChaCha8Rng, words: &[&str], dim: usize) -> EmbeddingTable64 {
    let mut table = EmbeddingTable64::new(dim);
    for w in words {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        table.insert(w, &v);
    }
    table
}
