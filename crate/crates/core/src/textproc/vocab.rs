use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TextError, TokenizedSpeech};
use crate::corpus::TaskInstance;
use crate::Scalar;

/// Minimum share of training speech-pairs a term must occur in.
pub const DEFAULT_TERM_THRESHOLD: f64 = 0.01;

/// Unit over which term frequency is counted when building the vocabulary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabularyMode {
    /// (supporting, candidate) pairs of the training instances; a term counts
    /// once per pair if either speech contains it.
    #[default]
    SpeechPairs,
    /// Distinct speeches appearing in the training instances.
    Speeches,
}

/// Stemmed unigram vocabulary, indexed in lexicographic term order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub threshold: f64,
    /// Size of the counting universe (pairs, or speeches).
    pub pairs: usize,
    pub terms: Vec<String>,
    pub term_to_index: HashMap<String, usize>,
    /// Parallel to `terms`.
    pub doc_pair_frequency: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    threshold: f64,
    pairs: usize,
    terms: Vec<VocabularyEntry>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyEntry {
    term: String,
    pair_freq: usize,
}

impl Vocabulary {
    fn from_counts(threshold: f64, pairs: usize, counts: BTreeMap<String, usize>) -> Self {
        let mut terms = Vec::with_capacity(counts.len());
        let mut doc_pair_frequency = Vec::with_capacity(counts.len());
        for (term, freq) in counts {
            terms.push(term);
            doc_pair_frequency.push(freq);
        }
        let term_to_index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            threshold,
            pairs,
            terms,
            term_to_index,
            doc_pair_frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn frequency(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_pair_frequency[i])
    }

    /// A copy without the given terms (used to drop stopword stems).
    pub fn without(&self, excluded: &HashSet<String>) -> Vocabulary {
        let counts = self
            .terms
            .iter()
            .zip(&self.doc_pair_frequency)
            .filter(|(t, _)| !excluded.contains(*t))
            .map(|(t, &f)| (t.clone(), f))
            .collect();
        Vocabulary::from_counts(self.threshold, self.pairs, counts)
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            threshold: self.threshold,
            pairs: self.pairs,
            terms: self
                .terms
                .iter()
                .zip(&self.doc_pair_frequency)
                .map(|(term, &pair_freq)| VocabularyEntry {
                    term: term.clone(),
                    pair_freq,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TextError> {
        let file: VocabularyFile = serde_json::from_str(text)?;
        let counts = file
            .terms
            .into_iter()
            .map(|e| (e.term, e.pair_freq))
            .collect();
        Ok(Vocabulary::from_counts(file.threshold, file.pairs, counts))
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        fs::write(path, self.to_json()).map_err(|source| TextError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Builds the vocabulary from training instances. A term is kept when its
/// frequency is at least `threshold` times the universe size, with no
/// rounding.
pub fn build_vocabulary(
    train_instances: &[TaskInstance],
    tokenized: &HashMap<String, TokenizedSpeech>,
    threshold: f64,
    mode: VocabularyMode,
) -> Result<Vocabulary, TextError> {
    if train_instances.is_empty() {
        return Err(TextError::EmptyTrainingSet);
    }
    let ids: BTreeSet<&str> = train_instances
        .iter()
        .flat_map(|i| {
            std::iter::once(i.supporting_id.as_str()).chain(i.candidate_ids.iter().map(String::as_str))
        })
        .collect();
    let stem_sets: HashMap<&str, BTreeSet<&str>> = ids
        .iter()
        .map(|&id| {
            let tok = tokenized
                .get(id)
                .unwrap_or_else(|| panic!("speech {id} was not tokenized"));
            (id, tok.stems().collect())
        })
        .collect();

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let universe = match mode {
        VocabularyMode::SpeechPairs => {
            let mut pairs = 0;
            for instance in train_instances {
                let sup = &stem_sets[instance.supporting_id.as_str()];
                for cand_id in &instance.candidate_ids {
                    let cand = &stem_sets[cand_id.as_str()];
                    for term in sup.union(cand) {
                        *counts.entry(term.to_string()).or_default() += 1;
                    }
                    pairs += 1;
                }
            }
            pairs
        }
        VocabularyMode::Speeches => {
            for terms in stem_sets.values() {
                for term in terms {
                    *counts.entry(term.to_string()).or_default() += 1;
                }
            }
            ids.len()
        }
    };
    let min = threshold * universe as f64;
    counts.retain(|_, freq| *freq as f64 >= min);
    Ok(Vocabulary::from_counts(threshold, universe, counts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    NormalizedFreq,
    Binary,
}

/// Sparse vector over a vocabulary, entries sorted by term index.
#[derive(Debug, Clone, PartialEq)]
pub struct TermVector<T> {
    pub entries: Vec<(usize, T)>,
    pub kind: VectorKind,
}

impl<T: Scalar> TermVector<T> {
    pub fn empty(kind: VectorKind) -> Self {
        TermVector {
            entries: Vec::new(),
            kind,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> T {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn total(&self) -> T {
        self.entries.iter().map(|&(_, w)| w).sum()
    }
}

/// Term vector from a stream of stems; out-of-vocabulary stems are ignored.
pub fn term_vector_from_stems<'a, T: Scalar>(
    stems: impl IntoIterator<Item = &'a str>,
    vocab: &Vocabulary,
    kind: VectorKind,
) -> TermVector<T> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for stem in stems {
        if let Some(i) = vocab.index_of(stem) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    let entries = counts
        .into_iter()
        .map(|(i, c)| {
            let w = match kind {
                VectorKind::NormalizedFreq => T::of_count(c) / T::of_count(total),
                VectorKind::Binary => T::one(),
            };
            (i, w)
        })
        .collect();
    TermVector { entries, kind }
}

/// Whole-speech term vector.
pub fn term_vector<T: Scalar>(
    tok: &TokenizedSpeech,
    vocab: &Vocabulary,
    kind: VectorKind,
) -> TermVector<T> {
    term_vector_from_stems(tok.stems(), vocab, kind)
}

/// Normalized-frequency vector of one sentence's stems.
pub fn sentence_term_vector<T: Scalar>(stems: &[String], vocab: &Vocabulary) -> TermVector<T> {
    term_vector_from_stems(
        stems.iter().map(String::as_str),
        vocab,
        VectorKind::NormalizedFreq,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Setting;

    fn tok(id: &str, stems: &[&str]) -> (String, TokenizedSpeech) {
        let stems: Vec<String> = stems.iter().map(|s| s.to_string()).collect();
        (
            id.to_string(),
            TokenizedSpeech {
                speech_id: id.into(),
                sentence_tokens: vec![stems.clone()],
                stemmed_tokens: vec![stems],
            },
        )
    }

    fn vocab_of(terms: &[&str]) -> Vocabulary {
        Vocabulary::from_counts(
            0.01,
            1,
            terms.iter().map(|t| (t.to_string(), 1)).collect(),
        )
    }

    /// `n_pairs` training pairs (one supporting speech, n candidates); the
    /// term "rare" occurs in the first `rare_in` candidates only, "common" in
    /// the supporting speech.
    fn fixture(n_pairs: usize, rare_in: usize) -> (Vec<TaskInstance>, HashMap<String, TokenizedSpeech>) {
        let mut tokenized: HashMap<_, _> = [tok("sup", &["common"])].into_iter().collect();
        let mut candidates = Vec::new();
        for c in 0..n_pairs {
            let id = format!("c{c:04}");
            let stems: &[&str] = if c < rare_in { &["rare", "x"] } else { &["x"] };
            tokenized.extend([tok(&id, stems)]);
            candidates.push(id);
        }
        let instance = TaskInstance {
            supporting_id: "sup".into(),
            gold_ids: vec![candidates[0].clone()],
            candidate_ids: candidates,
            setting: Setting::All,
        };
        (vec![instance], tokenized)
    }

    /// Independent count: enumerate pairs, test membership directly.
    fn brute_pair_freq(
        instances: &[TaskInstance],
        tokenized: &HashMap<String, TokenizedSpeech>,
        term: &str,
    ) -> (usize, usize) {
        let has = |id: &str| tokenized[id].stems().any(|s| s == term);
        let mut hits = 0;
        let mut pairs = 0;
        for inst in instances {
            for c in &inst.candidate_ids {
                pairs += 1;
                if has(&inst.supporting_id) || has(c) {
                    hits += 1;
                }
            }
        }
        (hits, pairs)
    }

    #[test]
    fn one_percent_boundary_is_inclusive() {
        let (inst, tokd) = fixture(100, 1);
        let vocab = build_vocabulary(&inst, &tokd, 0.01, VocabularyMode::SpeechPairs).unwrap();
        assert_eq!(vocab.pairs, 100);
        assert_eq!(vocab.frequency("rare"), Some(1));
        assert_eq!(vocab.frequency("common"), Some(100));
        assert_eq!(vocab.frequency("x"), Some(100));
    }

    #[test]
    fn below_threshold_dropped() {
        let (inst, tokd) = fixture(250, 2);
        assert_eq!(brute_pair_freq(&inst, &tokd, "rare"), (2, 250));
        let vocab = build_vocabulary(&inst, &tokd, 0.01, VocabularyMode::SpeechPairs).unwrap();
        assert_eq!(vocab.frequency("rare"), None);
        let (inst, tokd) = fixture(250, 3);
        let vocab = build_vocabulary(&inst, &tokd, 0.01, VocabularyMode::SpeechPairs).unwrap();
        assert_eq!(vocab.frequency("rare"), Some(3));
    }

    #[test]
    fn speech_mode_counts_speeches() {
        let (inst, tokd) = fixture(10, 2);
        let vocab = build_vocabulary(&inst, &tokd, 0.25, VocabularyMode::Speeches).unwrap();
        assert_eq!(vocab.pairs, 11);
        assert_eq!(vocab.frequency("x"), Some(10));
        assert_eq!(vocab.frequency("rare"), None);
        assert_eq!(vocab.frequency("common"), None);
    }

    #[test]
    fn empty_training_set() {
        let err = build_vocabulary(&[], &HashMap::new(), 0.01, VocabularyMode::SpeechPairs);
        assert!(matches!(err, Err(TextError::EmptyTrainingSet)));
    }

    #[test]
    fn terms_indexed_lexicographically() {
        let (inst, tokd) = fixture(5, 5);
        let vocab = build_vocabulary(&inst, &tokd, 0.01, VocabularyMode::SpeechPairs).unwrap();
        assert_eq!(vocab.terms, ["common", "rare", "x"]);
        assert_eq!(vocab.index_of("x"), Some(2));
        let reloaded = Vocabulary::from_json(&vocab.to_json()).unwrap();
        assert_eq!(reloaded, vocab);
    }

    #[test]
    fn normalized_and_binary_vectors() {
        let vocab = vocab_of(&["ban", "gambl"]);
        let stems = ["ban", "ban", "gambl", "zzz"];
        let v: TermVector<f64> = term_vector_from_stems(stems, &vocab, VectorKind::NormalizedFreq);
        assert_eq!(v.entries, vec![(0, 2.0 / 3.0), (1, 1.0 / 3.0)]);
        let b: TermVector<f64> = term_vector_from_stems(stems, &vocab, VectorKind::Binary);
        assert_eq!(b.entries, vec![(0, 1.0), (1, 1.0)]);
        let none: TermVector<f64> = term_vector_from_stems(["zzz"], &vocab, VectorKind::NormalizedFreq);
        assert!(none.is_empty());
    }

    #[test]
    fn sentence_vector_matches_speech_vector() {
        let vocab = vocab_of(&["a", "b", "c"]);
        let (_, t) = tok("s", &["a", "b", "b", "q"]);
        let speech: TermVector<f64> = term_vector(&t, &vocab, VectorKind::NormalizedFreq);
        let sentence: TermVector<f64> = sentence_term_vector(&t.stemmed_tokens[0], &vocab);
        assert_eq!(speech, sentence);
        let empty: TermVector<f64> = sentence_term_vector(&[], &vocab);
        assert!(empty.is_empty());
        let s1: TermVector<f64> = sentence_term_vector(&["a".into()], &vocab);
        let s2: TermVector<f64> = sentence_term_vector(&["c".into()], &vocab);
        assert!(s1.indices().all(|i| s2.get(i) == 0.0));
    }

    #[test]
    fn without_drops_terms() {
        let vocab = vocab_of(&["a", "the", "z"]);
        let excluded: HashSet<String> = ["the".to_string()].into();
        let v = vocab.without(&excluded);
        assert_eq!(v.terms, ["a", "z"]);
        assert_eq!(v.index_of("z"), Some(1));
    }
}
