use std::collections::BTreeSet;

use super::{StopwordList, TokenizedSpeech};

pub const MIN_NGRAM_LEN: usize = 2;
pub const MAX_NGRAM_LEN: usize = 4;

pub type Ngram = Vec<String>;

/// Maximal stopword-free ngrams of one speech.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramSet {
    pub speech_id: String,
    pub ngrams: BTreeSet<Ngram>,
}

/// Contiguous windows of 2 to 4 surface tokens inside each sentence. Windows
/// holding a stopword are discarded, then every window that is a contiguous
/// part of a longer surviving window (anywhere in the speech) is discarded.
pub fn extract_ngrams(tok: &TokenizedSpeech, stopwords: &StopwordList) -> NgramSet {
    let mut candidates: BTreeSet<Ngram> = BTreeSet::new();
    for sentence in &tok.sentence_tokens {
        for run in sentence.split(|t| stopwords.contains(t)) {
            for len in MIN_NGRAM_LEN..=MAX_NGRAM_LEN {
                for window in run.windows(len) {
                    candidates.insert(window.to_vec());
                }
            }
        }
    }

    let mut contained: BTreeSet<&[String]> = BTreeSet::new();
    for gram in &candidates {
        for len in MIN_NGRAM_LEN..gram.len() {
            contained.extend(gram.windows(len));
        }
    }
    let ngrams = candidates
        .iter()
        .filter(|g| !contained.contains(g.as_slice()))
        .cloned()
        .collect();
    NgramSet {
        speech_id: tok.speech_id.clone(),
        ngrams,
    }
}

impl NgramSet {
    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn contains(&self, gram: &[String]) -> bool {
        self.ngrams.contains(gram)
    }
}
