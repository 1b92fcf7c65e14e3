//! Text normalization: tokens, stems, stopwords, vocabulary, term vectors
//! and maximal ngrams.

mod ngrams;
pub mod porter;
mod vocab;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::Speech;

pub use ngrams::{extract_ngrams, Ngram, NgramSet, MAX_NGRAM_LEN, MIN_NGRAM_LEN};
pub use vocab::{
    build_vocabulary, sentence_term_vector, term_vector, term_vector_from_stems, TermVector,
    VectorKind, Vocabulary, VocabularyMode, DEFAULT_TERM_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("vocabulary needs at least one training instance")]
    EmptyTrainingSet,
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed vocabulary file: {0}")]
    MalformedVocabulary(#[from] serde_json::Error),
}

/// Per-sentence tokens of one speech, raw and stemmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSpeech {
    pub speech_id: String,
    pub sentence_tokens: Vec<Vec<String>>,
    pub stemmed_tokens: Vec<Vec<String>>,
}

impl TokenizedSpeech {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentence_tokens.iter().flatten().map(String::as_str)
    }

    pub fn stems(&self) -> impl Iterator<Item = &str> {
        self.stemmed_tokens.iter().flatten().map(String::as_str)
    }
}

/// Splits on whitespace, trims punctuation from both ends of each piece and
/// lowercases. Pieces that are pure punctuation vanish.
pub fn tokenize_sentence(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .map(|piece| piece.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|piece| !piece.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn tokenize(speech: &Speech) -> TokenizedSpeech {
    let sentence_tokens: Vec<Vec<String>> = speech
        .sentences
        .iter()
        .map(|s| tokenize_sentence(s))
        .collect();
    let stemmed_tokens = sentence_tokens
        .iter()
        .map(|tokens| tokens.iter().map(|t| porter::stem(t)).collect())
        .collect();
    TokenizedSpeech {
        speech_id: speech.id.clone(),
        sentence_tokens,
        stemmed_tokens,
    }
}

/// Lowercase stopword set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

impl StopwordList {
    /// The bundled English list (179 function words).
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopwordList { words }
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Porter stems of the stopwords, for filtering stemmed vocabularies.
    pub fn stems(&self) -> HashSet<String> {
        self.words.iter().map(|w| porter::stem(w)).collect()
    }
}

impl FromIterator<String> for StopwordList {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        StopwordList {
            words: iter.into_iter().map(|w| w.to_lowercase()).collect(),
        }
    }
}
