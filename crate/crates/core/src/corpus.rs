//! Speech corpus: loading, validation, motion-level splits and task
//! instance construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separator between sentences inside a CSV transcript cell.
pub const CSV_SENTENCE_SEPARATOR: &str = "\\n";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("speech {id} has a dangling counter link to {target}: {reason}")]
    DanglingCounterLink {
        id: String,
        target: String,
        reason: String,
    },
    #[error("duplicate speech id {0}")]
    DuplicateId(String),
    #[error("need at least 5 motions to split 60/20/20, found {0}")]
    TooFewMotions(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Supporting,
    Opposing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterKind {
    Explicit,
    Implicit,
}

/// Which counters count as gold, and which are dropped from the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    All,
    Explicit,
    Implicit,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::All, Setting::Explicit, Setting::Implicit];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::All => "all",
            Setting::Explicit => "explicit",
            Setting::Implicit => "implicit",
        }
    }

    /// Counter kind admitted as gold; `None` admits both.
    fn gold_kind(self) -> Option<CounterKind> {
        match self {
            Setting::All => None,
            Setting::Explicit => Some(CounterKind::Explicit),
            Setting::Implicit => Some(CounterKind::Implicit),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(Setting::All),
            "explicit" => Ok(Setting::Explicit),
            "implicit" => Ok(Setting::Implicit),
            other => Err(format!("unknown setting '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guess from the file extension; anything that is not `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("unknown corpus format '{other}'")),
        }
    }
}

/// One transcribed speech.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Speech {
    pub id: String,
    pub motion_id: String,
    pub stance: Stance,
    pub author_id: String,
    /// One sentence per entry, trimmed and non-empty.
    pub sentences: Vec<String>,
    pub counter_of: Option<String>,
    pub counter_kind: Option<CounterKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MotionSpeeches {
    pub supporting: Vec<String>,
    pub opposing: Vec<String>,
}

/// Validated, immutable view of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusIndex {
    pub speeches: BTreeMap<String, Speech>,
    pub by_motion: BTreeMap<String, MotionSpeeches>,
    /// Supporting id to its counters, sorted by opposing id. Every supporting
    /// speech has an entry, possibly empty.
    pub counters_of: BTreeMap<String, Vec<(String, CounterKind)>>,
}

impl CorpusIndex {
    /// Validates the relational structure and builds the lookup maps.
    pub fn from_speeches(speeches: Vec<Speech>) -> Result<Self, CorpusError> {
        let lines: Vec<usize> = (1..=speeches.len()).collect();
        Self::build(speeches, &lines)
    }

    fn build(speeches: Vec<Speech>, lines: &[usize]) -> Result<Self, CorpusError> {
        let mut map = BTreeMap::new();
        for (pos, speech) in speeches.into_iter().enumerate() {
            validate_speech(&speech, lines.get(pos).copied().unwrap_or(pos + 1))?;
            if map.contains_key(&speech.id) {
                return Err(CorpusError::DuplicateId(speech.id));
            }
            map.insert(speech.id.clone(), speech);
        }

        let mut by_motion: BTreeMap<String, MotionSpeeches> = BTreeMap::new();
        let mut counters_of: BTreeMap<String, Vec<(String, CounterKind)>> = BTreeMap::new();
        for speech in map.values() {
            let group = by_motion.entry(speech.motion_id.clone()).or_default();
            match speech.stance {
                Stance::Supporting => {
                    group.supporting.push(speech.id.clone());
                    counters_of.entry(speech.id.clone()).or_default();
                }
                Stance::Opposing => group.opposing.push(speech.id.clone()),
            }
        }
        for speech in map.values() {
            let (Some(target), Some(kind)) = (&speech.counter_of, speech.counter_kind) else {
                continue;
            };
            let dangling = |reason: &str| CorpusError::DanglingCounterLink {
                id: speech.id.clone(),
                target: target.clone(),
                reason: reason.to_string(),
            };
            let supporting = map.get(target).ok_or_else(|| dangling("no such speech"))?;
            if supporting.stance != Stance::Supporting {
                return Err(dangling("target is not a supporting speech"));
            }
            if supporting.motion_id != speech.motion_id {
                return Err(dangling("target belongs to a different motion"));
            }
            counters_of
                .get_mut(target)
                .expect("every supporting speech has an entry")
                .push((speech.id.clone(), kind));
        }
        // map iteration is id-ordered, so every list above is already sorted.
        Ok(CorpusIndex {
            speeches: map,
            by_motion,
            counters_of,
        })
    }

    pub fn speech(&self, id: &str) -> Option<&Speech> {
        self.speeches.get(id)
    }

    pub fn motions(&self) -> impl Iterator<Item = &str> {
        self.by_motion.keys().map(String::as_str)
    }

    pub fn num_motions(&self) -> usize {
        self.by_motion.len()
    }
}

fn validate_speech(speech: &Speech, line: usize) -> Result<(), CorpusError> {
    let malformed = |reason: String| CorpusError::MalformedRow { line, reason };
    for (name, value) in [
        ("id", &speech.id),
        ("motion_id", &speech.motion_id),
        ("author_id", &speech.author_id),
    ] {
        if value.trim().is_empty() {
            return Err(malformed(format!("missing {name}")));
        }
    }
    if speech.sentences.is_empty() {
        return Err(malformed("transcript has no sentences".into()));
    }
    if speech.sentences.iter().any(|s| s.trim().is_empty()) {
        return Err(malformed("transcript contains an empty sentence".into()));
    }
    if speech.counter_of.is_some() != speech.counter_kind.is_some() {
        return Err(malformed(
            "counter_of and counter_kind must be given together".into(),
        ));
    }
    if speech.counter_of.is_some() && speech.stance != Stance::Opposing {
        return Err(malformed("only opposing speeches can be counters".into()));
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct CsvRow {
    id: Option<String>,
    motion_id: Option<String>,
    stance: Option<String>,
    author_id: Option<String>,
    counter_of: Option<String>,
    counter_kind: Option<String>,
    transcript: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct JsonRow {
    id: Option<String>,
    motion_id: Option<String>,
    stance: Option<String>,
    author_id: Option<String>,
    #[serde(default)]
    counter_of: Option<String>,
    #[serde(default)]
    counter_kind: Option<String>,
    transcript: Option<Vec<String>>,
}

fn required(value: Option<String>, name: &str, line: usize) -> Result<String, CorpusError> {
    match value {
        Some(v) if !v.trim().is_empty() => Ok(v.trim().to_string()),
        _ => Err(CorpusError::MalformedRow {
            line,
            reason: format!("missing {name}"),
        }),
    }
}

fn optional(value: Option<String>) -> Option<String> {
    value
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
}

fn parse_stance(value: &str, line: usize) -> Result<Stance, CorpusError> {
    match value.to_ascii_lowercase().as_str() {
        "supporting" => Ok(Stance::Supporting),
        "opposing" => Ok(Stance::Opposing),
        other => Err(CorpusError::MalformedRow {
            line,
            reason: format!("unknown stance '{other}'"),
        }),
    }
}

fn parse_kind(value: Option<String>, line: usize) -> Result<Option<CounterKind>, CorpusError> {
    let Some(value) = optional(value) else {
        return Ok(None);
    };
    match value.to_ascii_lowercase().as_str() {
        "explicit" => Ok(Some(CounterKind::Explicit)),
        "implicit" => Ok(Some(CounterKind::Implicit)),
        other => Err(CorpusError::MalformedRow {
            line,
            reason: format!("unknown counter_kind '{other}'"),
        }),
    }
}

fn clean_sentences<I: IntoIterator<Item = String>>(raw: I) -> Vec<String> {
    raw.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Splits a CSV transcript cell into sentences. Both the escaped separator
/// and real line breaks delimit sentences.
pub fn split_transcript(cell: &str) -> Vec<String> {
    clean_sentences(
        cell.split(CSV_SENTENCE_SEPARATOR)
            .flat_map(str::lines)
            .map(str::to_string),
    )
}

#[allow(clippy::too_many_arguments)]
fn speech_from_fields(
    line: usize,
    id: Option<String>,
    motion_id: Option<String>,
    stance: Option<String>,
    author_id: Option<String>,
    counter_of: Option<String>,
    counter_kind: Option<String>,
    sentences: Option<Vec<String>>,
) -> Result<Speech, CorpusError> {
    let id = required(id, "id", line)?;
    let motion_id = required(motion_id, "motion_id", line)?;
    let stance = parse_stance(&required(stance, "stance", line)?, line)?;
    let author_id = required(author_id, "author_id", line)?;
    let sentences = sentences.ok_or_else(|| CorpusError::MalformedRow {
        line,
        reason: "missing transcript".into(),
    })?;
    Ok(Speech {
        id,
        motion_id,
        stance,
        author_id,
        sentences,
        counter_of: optional(counter_of),
        counter_kind: parse_kind(counter_kind, line)?,
    })
}

/// Loads and validates a corpus file.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<CorpusIndex, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut speeches = Vec::new();
    let mut lines = Vec::new();
    match format {
        CorpusFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .from_reader(BufReader::new(file));
            for record in reader.deserialize::<CsvRow>() {
                let row = record.map_err(|e| CorpusError::MalformedRow {
                    line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                    reason: e.to_string(),
                })?;
                // Header is line 1; `csv` does not hand out positions for
                // deserialized rows, so count them.
                let line = lines.len() + 2;
                let sentences = row.transcript.as_deref().map(split_transcript);
                speeches.push(speech_from_fields(
                    line,
                    row.id,
                    row.motion_id,
                    row.stance,
                    row.author_id,
                    row.counter_of,
                    row.counter_kind,
                    sentences,
                )?);
                lines.push(line);
            }
        }
        CorpusFormat::Jsonl => {
            for (n, text) in BufReader::new(file).lines().enumerate() {
                let line = n + 1;
                let text = text.map_err(io_err)?;
                if text.trim().is_empty() {
                    continue;
                }
                let row: JsonRow =
                    serde_json::from_str(&text).map_err(|e| CorpusError::MalformedRow {
                        line,
                        reason: e.to_string(),
                    })?;
                speeches.push(speech_from_fields(
                    line,
                    row.id,
                    row.motion_id,
                    row.stance,
                    row.author_id,
                    row.counter_of,
                    row.counter_kind,
                    row.transcript.map(clean_sentences),
                )?);
                lines.push(line);
            }
        }
    }
    CorpusIndex::build(speeches, &lines)
}

fn stance_str(stance: Stance) -> &'static str {
    match stance {
        Stance::Supporting => "supporting",
        Stance::Opposing => "opposing",
    }
}

fn kind_str(kind: CounterKind) -> &'static str {
    match kind {
        CounterKind::Explicit => "explicit",
        CounterKind::Implicit => "implicit",
    }
}

/// Writes the corpus in id order; `load_corpus` reproduces an equal index.
pub fn write_corpus(
    index: &CorpusIndex,
    path: &Path,
    format: CorpusFormat,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    match format {
        CorpusFormat::Csv => {
            let mut writer = csv::Writer::from_writer(BufWriter::new(file));
            for s in index.speeches.values() {
                writer
                    .serialize(CsvRow {
                        id: Some(s.id.clone()),
                        motion_id: Some(s.motion_id.clone()),
                        stance: Some(stance_str(s.stance).into()),
                        author_id: Some(s.author_id.clone()),
                        counter_of: s.counter_of.clone(),
                        counter_kind: s.counter_kind.map(|k| kind_str(k).into()),
                        transcript: Some(s.sentences.join(CSV_SENTENCE_SEPARATOR)),
                    })
                    .map_err(|e| io_err(e.into()))?;
            }
            writer.flush().map_err(io_err)?;
        }
        CorpusFormat::Jsonl => {
            let mut writer = BufWriter::new(file);
            for s in index.speeches.values() {
                let row = JsonRow {
                    id: Some(s.id.clone()),
                    motion_id: Some(s.motion_id.clone()),
                    stance: Some(stance_str(s.stance).into()),
                    author_id: Some(s.author_id.clone()),
                    counter_of: s.counter_of.clone(),
                    counter_kind: s.counter_kind.map(|k| kind_str(k).into()),
                    transcript: Some(s.sentences.clone()),
                };
                let text = serde_json::to_string(&row).map_err(|e| io_err(e.into()))?;
                writeln!(writer, "{text}").map_err(io_err)?;
            }
            writer.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

/// Motion-level train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: BTreeSet<String>,
    pub validation: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl SplitAssignment {
    pub fn motions(&self, split: Split) -> &BTreeSet<String> {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn split_of(&self, motion: &str) -> Option<Split> {
        [Split::Train, Split::Validation, Split::Test]
            .into_iter()
            .find(|&s| self.motions(s).contains(motion))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split manifest serializes")
    }
}

/// Split sizes for `total` motions at 60/20/20, largest remainder first,
/// ties toward train and then validation.
pub fn split_sizes(total: usize) -> [usize; 3] {
    const PERCENT: [usize; 3] = [60, 20, 20];
    let mut sizes = PERCENT.map(|p| total * p / 100);
    let remainders = PERCENT.map(|p| total * p % 100);
    let mut order = [0usize, 1, 2];
    // stable sort keeps train before validation before test on ties
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]));
    let missing = total - sizes.iter().sum::<usize>();
    for &k in order.iter().take(missing) {
        sizes[k] += 1;
    }
    sizes
}

/// Randomly partitions the motions 60/20/20. Deterministic in `seed`.
pub fn split_motions(index: &CorpusIndex, seed: u64) -> Result<SplitAssignment, CorpusError> {
    let mut motions: Vec<String> = index.by_motion.keys().cloned().collect();
    if motions.len() < 5 {
        return Err(CorpusError::TooFewMotions(motions.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    motions.shuffle(&mut rng);
    let [n_train, n_validation, _] = split_sizes(motions.len());
    let mut rest = motions.into_iter();
    let train = rest.by_ref().take(n_train).collect();
    let validation = rest.by_ref().take(n_validation).collect();
    let test = rest.collect();
    Ok(SplitAssignment {
        seed,
        train,
        validation,
        test,
    })
}

/// One supporting speech with its candidate opposing speeches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub supporting_id: String,
    /// Sorted by id.
    pub candidate_ids: Vec<String>,
    /// Sorted by id; a subset of `candidate_ids`.
    pub gold_ids: Vec<String>,
    pub setting: Setting,
}

impl TaskInstance {
    pub fn is_gold(&self, id: &str) -> bool {
        self.gold_ids.binary_search_by(|g| g.as_str().cmp(id)).is_ok()
    }
}

/// Builds one instance per qualifying supporting speech of `motions`.
///
/// Opposing speeches by the supporting speech's author are never candidates.
/// Under the Explicit and Implicit settings, counters of the other kind are
/// removed from the pool. A supporting speech is kept only if it still has a
/// gold counter and at least one other candidate.
pub fn build_instances(
    index: &CorpusIndex,
    motions: &BTreeSet<String>,
    setting: Setting,
) -> Vec<TaskInstance> {
    let mut out = Vec::new();
    for motion in motions {
        let Some(group) = index.by_motion.get(motion) else {
            continue;
        };
        for sup_id in &group.supporting {
            let sup = &index.speeches[sup_id];
            let counters = &index.counters_of[sup_id];
            let kind_of = |id: &str| {
                counters
                    .iter()
                    .find(|(c, _)| c == id)
                    .map(|&(_, kind)| kind)
            };
            let mut candidate_ids = Vec::new();
            let mut gold_ids = Vec::new();
            for opp_id in &group.opposing {
                if index.speeches[opp_id].author_id == sup.author_id {
                    continue;
                }
                match (kind_of(opp_id), setting.gold_kind()) {
                    (None, _) => {}
                    (Some(_), None) => gold_ids.push(opp_id.clone()),
                    (Some(kind), Some(wanted)) if kind == wanted => gold_ids.push(opp_id.clone()),
                    (Some(_), Some(_)) => continue,
                }
                candidate_ids.push(opp_id.clone());
            }
            if gold_ids.is_empty() || candidate_ids.len() == gold_ids.len() {
                continue;
            }
            out.push(TaskInstance {
                supporting_id: sup_id.clone(),
                candidate_ids,
                gold_ids,
                setting,
            });
        }
    }
    out.sort_by(|a, b| a.supporting_id.cmp(&b.supporting_id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn speech(id: &str, motion: &str, stance: Stance, author: &str) -> Speech {
        Speech {
            id: id.into(),
            motion_id: motion.into(),
            stance,
            author_id: author.into(),
            sentences: vec![format!("sentence of {id}.")],
            counter_of: None,
            counter_kind: None,
        }
    }

    fn counter(id: &str, motion: &str, author: &str, of: &str, kind: CounterKind) -> Speech {
        Speech {
            counter_of: Some(of.into()),
            counter_kind: Some(kind),
            ..speech(id, motion, Stance::Opposing, author)
        }
    }

    fn four_candidate_motion() -> CorpusIndex {
        CorpusIndex::from_speeches(vec![
            speech("s1", "m", Stance::Supporting, "alice"),
            speech("s2", "m", Stance::Supporting, "bob"),
            counter("o1", "m", "carol", "s1", CounterKind::Explicit),
            counter("o2", "m", "dan", "s1", CounterKind::Implicit),
            counter("o3", "m", "erin", "s2", CounterKind::Explicit),
            speech("o4", "m", Stance::Opposing, "frank"),
        ])
        .unwrap()
    }

    fn motions(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counters_of_is_inverse_of_links() {
        let index = four_candidate_motion();
        assert_eq!(
            index.counters_of["s1"],
            vec![
                ("o1".to_string(), CounterKind::Explicit),
                ("o2".to_string(), CounterKind::Implicit)
            ]
        );
        assert_eq!(index.counters_of["s2"].len(), 1);
        assert_eq!(index.by_motion["m"].opposing.len(), 4);
    }

    #[test]
    fn link_to_other_motion_is_dangling() {
        let err = CorpusIndex::from_speeches(vec![
            speech("s1", "m1", Stance::Supporting, "a"),
            speech("s2", "m2", Stance::Supporting, "b"),
            counter("o1", "m2", "c", "s1", CounterKind::Explicit),
        ])
        .unwrap_err();
        assert!(matches!(err, CorpusError::DanglingCounterLink { .. }), "{err}");
    }

    #[test]
    fn link_to_missing_or_opposing_speech_is_dangling() {
        let missing = CorpusIndex::from_speeches(vec![counter(
            "o1",
            "m",
            "c",
            "nope",
            CounterKind::Explicit,
        )]);
        assert!(matches!(missing, Err(CorpusError::DanglingCounterLink { .. })));
        let to_opposing = CorpusIndex::from_speeches(vec![
            speech("o0", "m", Stance::Opposing, "a"),
            counter("o1", "m", "c", "o0", CounterKind::Explicit),
        ]);
        assert!(matches!(to_opposing, Err(CorpusError::DanglingCounterLink { .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = CorpusIndex::from_speeches(vec![
            speech("s1", "m", Stance::Supporting, "a"),
            speech("s1", "m", Stance::Supporting, "b"),
        ])
        .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(id) if id == "s1"));
    }

    #[test]
    fn invariant_violations_are_malformed() {
        let mut s = speech("s1", "m", Stance::Supporting, "a");
        s.counter_of = Some("x".into());
        s.counter_kind = Some(CounterKind::Explicit);
        assert!(matches!(
            CorpusIndex::from_speeches(vec![s]),
            Err(CorpusError::MalformedRow { .. })
        ));
        let mut s = speech("o1", "m", Stance::Opposing, "a");
        s.counter_kind = Some(CounterKind::Explicit);
        assert!(matches!(
            CorpusIndex::from_speeches(vec![s]),
            Err(CorpusError::MalformedRow { .. })
        ));
        let mut s = speech("o1", "m", Stance::Opposing, "a");
        s.sentences.clear();
        assert!(matches!(
            CorpusIndex::from_speeches(vec![s]),
            Err(CorpusError::MalformedRow { .. })
        ));
    }

    #[test]
    fn four_candidate_example_per_setting() {
        let index = four_candidate_motion();
        let m = motions(&["m"]);
        let all = build_instances(&index, &m, Setting::All);
        let s1 = all.iter().find(|i| i.supporting_id == "s1").unwrap();
        assert_eq!(s1.candidate_ids, ["o1", "o2", "o3", "o4"]);
        assert_eq!(s1.gold_ids, ["o1", "o2"]);

        let explicit = build_instances(&index, &m, Setting::Explicit);
        let s1 = explicit.iter().find(|i| i.supporting_id == "s1").unwrap();
        assert_eq!(s1.candidate_ids, ["o1", "o3", "o4"]);
        assert_eq!(s1.gold_ids, ["o1"]);

        let implicit = build_instances(&index, &m, Setting::Implicit);
        let s1 = implicit.iter().find(|i| i.supporting_id == "s1").unwrap();
        assert_eq!(s1.candidate_ids, ["o2", "o3", "o4"]);
        assert_eq!(s1.gold_ids, ["o2"]);
        // s2 has no implicit counter
        assert!(implicit.iter().all(|i| i.supporting_id != "s2"));
    }

    #[test]
    fn only_own_counters_fails_criterion_b() {
        let index = CorpusIndex::from_speeches(vec![
            speech("s1", "m", Stance::Supporting, "a"),
            counter("o1", "m", "b", "s1", CounterKind::Explicit),
            counter("o2", "m", "c", "s1", CounterKind::Implicit),
        ])
        .unwrap();
        assert!(build_instances(&index, &motions(&["m"]), Setting::All).is_empty());
    }

    #[test]
    fn same_author_distractor_excluded() {
        let index = CorpusIndex::from_speeches(vec![
            speech("s1", "m", Stance::Supporting, "alice"),
            counter("o1", "m", "bob", "s1", CounterKind::Explicit),
            speech("o2", "m", Stance::Opposing, "alice"),
        ])
        .unwrap();
        assert!(build_instances(&index, &motions(&["m"]), Setting::All).is_empty());

        let index = CorpusIndex::from_speeches(vec![
            speech("s1", "m", Stance::Supporting, "alice"),
            counter("o1", "m", "bob", "s1", CounterKind::Explicit),
            speech("o2", "m", Stance::Opposing, "alice"),
            speech("o3", "m", Stance::Opposing, "carol"),
        ])
        .unwrap();
        let inst = build_instances(&index, &motions(&["m"]), Setting::All);
        assert_eq!(inst[0].candidate_ids, ["o1", "o3"]);
    }

    #[test]
    fn split_sizes_round_toward_train() {
        assert_eq!(split_sizes(10), [6, 2, 2]);
        assert_eq!(split_sizes(5), [3, 1, 1]);
        assert_eq!(split_sizes(6), [4, 1, 1]);
        assert_eq!(split_sizes(7), [4, 2, 1]);
        for n in 5..200 {
            assert_eq!(split_sizes(n).iter().sum::<usize>(), n);
        }
    }

    fn many_motions(n: usize) -> CorpusIndex {
        CorpusIndex::from_speeches(
            (0..n)
                .map(|i| speech(&format!("s{i}"), &format!("m{i:02}"), Stance::Supporting, "a"))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_is_deterministic_partition() {
        let index = many_motions(10);
        let a = split_motions(&index, 7).unwrap();
        let b = split_motions(&index, 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!((a.train.len(), a.validation.len(), a.test.len()), (6, 2, 2));
        let c = split_motions(&index, 8).unwrap();
        assert_ne!(a, c);
        for split in [&a, &c] {
            let union: BTreeSet<_> = split
                .train
                .iter()
                .chain(&split.validation)
                .chain(&split.test)
                .collect();
            assert_eq!(union.len(), 10);
        }
        let five = split_motions(&many_motions(5), 1).unwrap();
        assert_eq!(
            (five.train.len(), five.validation.len(), five.test.len()),
            (3, 1, 1)
        );
    }

    #[test]
    fn too_few_motions() {
        assert!(matches!(
            split_motions(&many_motions(4), 0),
            Err(CorpusError::TooFewMotions(4))
        ));
    }

    #[test]
    fn transcript_cell_splitting() {
        assert_eq!(
            split_transcript("First one.\\nSecond one.\\n  \\nThird."),
            ["First one.", "Second one.", "Third."]
        );
        assert_eq!(split_transcript("a\nb"), ["a", "b"]);
    }
}
