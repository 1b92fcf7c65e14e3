//! End-to-end runs: load a corpus, split it, build features, tune SD,
//! score and evaluate every configured method, and write reports.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    build_instances, load_corpus, split_motions, CorpusError, CorpusFormat, CorpusIndex, Setting,
    Split, SplitAssignment, TaskInstance,
};
use crate::embeddings::{EmbeddingError, EmbeddingTable};
use crate::eval::{compare_methods, evaluate, random_baseline_empirical, ComparisonTable, EvalError, EvalReport};
use crate::scorers::{
    score_cmi, score_cosine, score_external, score_js, score_mi, score_ngrams, score_sd,
    EmbeddingMode, ExternalScores, Method, ScoredInstance, ScorerConfig, ScorerError, SdSpeech,
    SdVariant,
};
use crate::textproc::{
    build_vocabulary, extract_ngrams, term_vector, tokenize, NgramSet, StopwordList, TermVector,
    TextError, TokenizedSpeech, VectorKind, Vocabulary, VocabularyMode, DEFAULT_TERM_THRESHOLD,
};
use crate::tuning::{tune_sd, GridSpec, TunedConfig, TuningError};

/// Shuffles used when the random baseline is estimated empirically.
pub const EMPIRICAL_BASELINE_TRIALS: usize = 1000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tuning(#[from] TuningError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid run config: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    /// Taken from the corpus file extension when absent.
    pub format: Option<CorpusFormat>,
    pub embeddings_path: Option<PathBuf>,
    pub embedding_key_prefix: String,
    /// The bundled English list when absent.
    pub stopwords_path: Option<PathBuf>,
    pub seed: u64,
    pub split: Split,
    pub settings: Vec<Setting>,
    pub methods: Vec<Method>,
    pub external_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub rand_empirical: bool,
    pub embedding_mode: EmbeddingMode,
    pub term_threshold: f64,
    pub vocabulary_mode: VocabularyMode,
    pub grid: GridSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_path: PathBuf::new(),
            format: None,
            embeddings_path: None,
            embedding_key_prefix: String::new(),
            stopwords_path: None,
            seed: 42,
            split: Split::Test,
            settings: Setting::ALL.to_vec(),
            methods: vec![Method::Cos, Method::JS, Method::Ngrams, Method::MI, Method::CMI],
            external_path: None,
            output_dir: PathBuf::from("out"),
            jobs: 0,
            rand_empirical: false,
            embedding_mode: EmbeddingMode::default(),
            term_threshold: DEFAULT_TERM_THRESHOLD,
            vocabulary_mode: VocabularyMode::default(),
            grid: GridSpec::default(),
        }
    }
}

/// The parts of a run config that can change results.
#[derive(Serialize)]
struct SemanticConfig<'a> {
    format: Option<CorpusFormat>,
    embedding_key_prefix: &'a str,
    seed: u64,
    split: Split,
    settings: &'a [Setting],
    methods: &'a [Method],
    rand_empirical: bool,
    embedding_mode: EmbeddingMode,
    term_threshold: f64,
    vocabulary_mode: VocabularyMode,
    grid: &'a GridSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| PipelineError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.corpus_path.as_os_str().is_empty() {
            return Err(PipelineError::Config("no corpus path".into()));
        }
        if let Some(m) = self.methods.iter().find(|m| m.needs_embeddings()) {
            if self.embeddings_path.is_none() {
                return Err(PipelineError::Config(format!("{m} requires an embeddings file")));
            }
        }
        if self.methods.contains(&Method::External) && self.external_path.is_none() {
            return Err(PipelineError::Config("External requires a score file".into()));
        }
        if self.settings.is_empty() {
            return Err(PipelineError::Config("no settings selected".into()));
        }
        if !(self.term_threshold >= 0.0 && self.term_threshold <= 1.0) {
            return Err(PipelineError::Config(format!(
                "term threshold {} outside [0, 1]",
                self.term_threshold
            )));
        }
        self.grid.validate()?;
        Ok(())
    }

    pub fn corpus_format(&self) -> CorpusFormat {
        self.format
            .unwrap_or_else(|| CorpusFormat::from_path(&self.corpus_path))
    }

    /// SHA-256 of the result-affecting settings; paths and worker count are
    /// left out.
    pub fn hash(&self) -> String {
        let semantic = SemanticConfig {
            format: Some(self.corpus_format()),
            embedding_key_prefix: &self.embedding_key_prefix,
            seed: self.seed,
            split: self.split,
            settings: &self.settings,
            methods: &self.methods,
            rand_empirical: self.rand_empirical,
            embedding_mode: self.embedding_mode,
            term_threshold: self.term_threshold,
            vocabulary_mode: self.vocabulary_mode,
            grid: &self.grid,
        };
        let json = serde_json::to_vec(&semantic).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Counts for one split and setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: Split,
    pub setting: Setting,
    pub instances: usize,
    /// Distinct opposing speeches appearing as candidates.
    pub opposing: usize,
    pub mean_candidates: f64,
    /// Share of candidates that are gold, in percent.
    pub percent_positive: f64,
}

impl SplitStats {
    pub fn from_instances(split: Split, setting: Setting, instances: &[TaskInstance]) -> Self {
        let opposing: BTreeSet<&str> = instances
            .iter()
            .flat_map(|i| i.candidate_ids.iter().map(String::as_str))
            .collect();
        let candidates: usize = instances.iter().map(|i| i.candidate_ids.len()).sum();
        let gold: usize = instances.iter().map(|i| i.gold_ids.len()).sum();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        SplitStats {
            split,
            setting,
            instances: instances.len(),
            opposing: opposing.len(),
            mean_candidates: ratio(candidates, instances.len()),
            percent_positive: 100.0 * ratio(gold, candidates),
        }
    }
}

/// Aligned text table of split statistics, one row per split and setting.
pub fn render_stats(stats: &[SplitStats]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<10}  {:<8}  {:>11}  {:>9}  {:>10}  {:>10}",
        "Split", "Setting", "#supporting", "#opposing", "candidates", "% positive"
    )
    .unwrap();
    for s in stats {
        writeln!(
            out,
            "{:<10}  {:<8}  {:>11}  {:>9}  {:>10.2}  {:>10.1}",
            s.split.as_str(),
            s.setting.as_str(),
            s.instances,
            s.opposing,
            s.mean_candidates,
            s.percent_positive
        )
        .unwrap();
    }
    out
}

/// One written report with its provenance header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config_hash: String,
    pub seed: u64,
    pub corpus_checksum: String,
    pub split: Split,
    pub scorer: ScorerConfig,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRun {
    pub reports: Vec<ReportFile>,
    pub table: ComparisonTable,
}

/// A loaded corpus with its split, tokenization and run settings.
pub struct Experiment {
    pub config: RunConfig,
    pub index: CorpusIndex,
    pub split: SplitAssignment,
    pub corpus_checksum: String,
    pub stopwords: StopwordList,
    pub tokenized: HashMap<String, TokenizedSpeech>,
    embeddings: Option<EmbeddingTable<f64>>,
    pool: rayon::ThreadPool,
}

impl Experiment {
    pub fn load(config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let bytes = fs::read(&config.corpus_path).map_err(io_err(&config.corpus_path))?;
        let corpus_checksum = hex::encode(Sha256::digest(&bytes));
        let index = load_corpus(&config.corpus_path, config.corpus_format())?;
        let split = split_motions(&index, config.seed)?;
        let stopwords = match &config.stopwords_path {
            Some(p) => StopwordList::load(p)?,
            None => StopwordList::english(),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| PipelineError::Config(format!("cannot start {} workers: {e}", config.jobs)))?;
        let tokenized = pool.install(|| {
            index
                .speeches
                .par_iter()
                .map(|(id, s)| (id.clone(), tokenize(s)))
                .collect()
        });
        Ok(Experiment {
            config,
            index,
            split,
            corpus_checksum,
            stopwords,
            tokenized,
            embeddings: None,
            pool,
        })
    }

    /// Instances of one split and setting.
    pub fn instances(&self, split: Split, setting: Setting) -> Vec<TaskInstance> {
        build_instances(&self.index, self.split.motions(split), setting)
    }

    pub fn split_stats(&self) -> Vec<SplitStats> {
        let mut out = Vec::new();
        for split in [Split::Train, Split::Validation, Split::Test] {
            for setting in Setting::ALL {
                out.push(SplitStats::from_instances(
                    split,
                    setting,
                    &self.instances(split, setting),
                ));
            }
        }
        out
    }

    /// Term vocabulary from the training pairs of the All setting.
    pub fn vocabulary(&self) -> Result<Vocabulary, PipelineError> {
        let train = self.instances(Split::Train, Setting::All);
        Ok(build_vocabulary(
            &train,
            &self.tokenized,
            self.config.term_threshold,
            self.config.vocabulary_mode,
        )?)
    }

    fn embeddings(&mut self) -> Result<&EmbeddingTable<f64>, PipelineError> {
        if self.embeddings.is_none() {
            let path = self
                .config
                .embeddings_path
                .clone()
                .ok_or_else(|| PipelineError::Config("no embeddings file".into()))?;
            let table = EmbeddingTable::load(&path, &self.config.embedding_key_prefix)?;
            self.embeddings = Some(table);
        }
        Ok(self.embeddings.as_ref().expect("just loaded"))
    }

    fn sd_speeches(
        &mut self,
        instances: &[TaskInstance],
        vocab: Option<&Vocabulary>,
    ) -> Result<HashMap<String, SdSpeech<f64>>, PipelineError> {
        let ids: BTreeSet<&str> = instances
            .iter()
            .flat_map(|i| {
                std::iter::once(i.supporting_id.as_str())
                    .chain(i.candidate_ids.iter().map(String::as_str))
            })
            .collect();
        self.embeddings()?;
        let table = self.embeddings.as_ref().expect("loaded");
        let tokenized = &self.tokenized;
        Ok(self.pool.install(|| {
            ids.par_iter()
                .map(|id| (id.to_string(), SdSpeech::build(&tokenized[*id], vocab, table)))
                .collect()
        }))
    }

    /// Tunes SD on validation instances or SD-e on train plus validation,
    /// both in the All setting.
    pub fn tune(&mut self, variant: SdVariant) -> Result<TunedConfig, PipelineError> {
        let (instances, vocab) = match variant {
            SdVariant::Full => (
                self.instances(Split::Validation, Setting::All),
                Some(self.vocabulary()?),
            ),
            SdVariant::EmbeddingOnly => {
                let mut all = self.instances(Split::Train, Setting::All);
                all.extend(self.instances(Split::Validation, Setting::All));
                (all, None)
            }
        };
        let speeches = self.sd_speeches(&instances, vocab.as_ref())?;
        let grid = self.config.grid.clone();
        let mode = self.config.embedding_mode;
        Ok(self
            .pool
            .install(|| tune_sd(&instances, &speeches, &grid, variant, mode))?)
    }

    fn score_all(
        &self,
        instances: &[TaskInstance],
        score: impl Fn(&TaskInstance) -> Result<ScoredInstance, ScorerError> + Sync,
    ) -> Result<Vec<ScoredInstance>, PipelineError> {
        Ok(self
            .pool
            .install(|| instances.par_iter().map(&score).collect::<Result<Vec<_>, _>>())?)
    }

    fn vectors(&self, vocab: &Vocabulary, kind: VectorKind) -> HashMap<String, TermVector<f64>> {
        self.pool.install(|| {
            self.tokenized
                .par_iter()
                .map(|(id, tok)| (id.clone(), term_vector(tok, vocab, kind)))
                .collect()
        })
    }

    fn ngram_sets(&self) -> HashMap<String, NgramSet> {
        self.pool.install(|| {
            self.tokenized
                .par_iter()
                .map(|(id, tok)| (id.clone(), extract_ngrams(tok, &self.stopwords)))
                .collect()
        })
    }

    /// Scores `instances` with one method. SD and SD-e take their
    /// parameters from `config`.
    pub fn score(
        &mut self,
        config: &ScorerConfig,
        instances: &[TaskInstance],
        vocab: &Vocabulary,
    ) -> Result<Vec<ScoredInstance>, PipelineError> {
        config.validate()?;
        match config.method {
            Method::Cos | Method::JS => {
                let vectors = self.vectors(vocab, VectorKind::NormalizedFreq);
                let f = if config.method == Method::Cos {
                    score_cosine::<f64>
                } else {
                    score_js::<f64>
                };
                self.score_all(instances, |i| f(i, &vectors))
            }
            Method::MI | Method::CMI => {
                let mi_vocab = vocab.without(&self.stopwords.stems());
                let vectors = self.vectors(&mi_vocab, VectorKind::Binary);
                let size = mi_vocab.len();
                let f = if config.method == Method::MI {
                    score_mi::<f64>
                } else {
                    score_cmi::<f64>
                };
                self.score_all(instances, |i| f(i, &vectors, size))
            }
            Method::Ngrams => {
                let sets = self.ngram_sets();
                self.score_all(instances, |i| score_ngrams(i, &sets))
            }
            Method::SD | Method::SDe => {
                let word_vocab = (config.method == Method::SD).then_some(vocab);
                let speeches = self.sd_speeches(instances, word_vocab)?;
                self.score_all(instances, |i| score_sd(i, &speeches, config))
            }
            Method::External => {
                let path = config.external_path.as_ref().expect("validated");
                let scores = ExternalScores::load(path)?;
                self.score_all(instances, |i| score_external(i, &scores))
            }
        }
    }

    /// Scorer configs for the run's methods. SD and SD-e come from `tuned`.
    pub fn scorer_configs(
        &self,
        tuned: &BTreeMap<Method, ScorerConfig>,
    ) -> Result<Vec<ScorerConfig>, PipelineError> {
        self.config
            .methods
            .iter()
            .map(|&m| match m {
                Method::SD | Method::SDe => {
                    let cfg = tuned.get(&m).cloned().ok_or_else(|| {
                        PipelineError::Config(format!("{m} has no tuned configuration; run tune first"))
                    })?;
                    if cfg.embedding_mode != self.config.embedding_mode {
                        return Err(PipelineError::Config(format!(
                            "{m} was tuned with embedding mode {:?}, not {:?}; tune again",
                            cfg.embedding_mode, self.config.embedding_mode
                        )));
                    }
                    Ok(cfg)
                }
                Method::External => Ok(ScorerConfig {
                    external_path: self.config.external_path.clone(),
                    ..ScorerConfig::new(m)
                }),
                _ => Ok(ScorerConfig::new(m)),
            })
            .collect()
    }

    /// Runs every configured method on the configured split and settings.
    /// Settings without instances are skipped.
    pub fn evaluate(
        &mut self,
        tuned: &BTreeMap<Method, ScorerConfig>,
    ) -> Result<EvaluationRun, PipelineError> {
        let configs = self.scorer_configs(tuned)?;
        let vocab = self.vocabulary()?;
        let hash = self.config.hash();
        let mut reports = Vec::new();
        let settings = self.config.settings.clone();
        for setting in settings {
            let instances = self.instances(self.config.split, setting);
            if instances.is_empty() {
                continue;
            }
            let baseline = if self.config.rand_empirical {
                Some(random_baseline_empirical(
                    &instances,
                    EMPIRICAL_BASELINE_TRIALS,
                    self.config.seed,
                )?)
            } else {
                None
            };
            for cfg in &configs {
                let scored = self.score(cfg, &instances, &vocab)?;
                let mut report = evaluate(cfg.method.label(), &instances, &scored)?;
                if let Some(b) = baseline {
                    report.random_baseline = b;
                }
                reports.push(ReportFile {
                    config_hash: hash.clone(),
                    seed: self.config.seed,
                    corpus_checksum: self.corpus_checksum.clone(),
                    split: self.config.split,
                    scorer: cfg.clone(),
                    report,
                });
            }
        }
        let plain: Vec<EvalReport> = reports.iter().map(|r| r.report.clone()).collect();
        Ok(EvaluationRun {
            reports,
            table: compare_methods(&plain),
        })
    }
}

/// Report file name for a method and setting.
pub fn report_file_name(method: Method, setting: Setting) -> String {
    format!("report_{}_{}.json", method.slug(), setting.as_str())
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Writes each report as JSON plus `table.txt` into `dir`.
pub fn write_reports(dir: &Path, run: &EvaluationRun) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for r in &run.reports {
        let path = dir.join(report_file_name(r.scorer.method, r.report.setting));
        let mut json = serde_json::to_string_pretty(r).expect("report serializes");
        json.push('\n');
        write_text(&path, &json)?;
    }
    write_text(&dir.join("table.txt"), &run.table.render())
}

/// Writes the split manifest `split.json` into `dir`.
pub fn write_split(dir: &Path, split: &SplitAssignment) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_text(&dir.join("split.json"), &(split.to_json() + "\n"))
}

/// File name of a tuned config.
pub fn tuned_file_name(variant: SdVariant) -> &'static str {
    match variant {
        SdVariant::Full => "sd.json",
        SdVariant::EmbeddingOnly => "sde.json",
    }
}

pub fn write_tuned(dir: &Path, tuned: &TunedConfig) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let variant = SdVariant::from_method(tuned.config.method)
        .ok_or_else(|| PipelineError::Config("tuned config is not an SD method".into()))?;
    let path = dir.join(tuned_file_name(variant));
    let json = serde_json::to_string_pretty(tuned).expect("tuned config serializes") + "\n";
    write_text(&path, &json)?;
    Ok(path)
}

/// Reads a tuned config; a bare scorer config is accepted too.
pub fn read_tuned(path: &Path) -> Result<ScorerConfig, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let json_err = |source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    };
    let cfg = match serde_json::from_str::<TunedConfig>(&text) {
        Ok(t) => t.config,
        Err(_) => serde_json::from_str::<ScorerConfig>(&text).map_err(json_err)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Tuned configs found in `dir` for the SD methods among `methods`.
pub fn read_tuned_dir(
    dir: &Path,
    methods: &[Method],
) -> Result<BTreeMap<Method, ScorerConfig>, PipelineError> {
    let mut out = BTreeMap::new();
    for &m in methods {
        if let Some(variant) = SdVariant::from_method(m) {
            let path = dir.join(tuned_file_name(variant));
            if path.exists() {
                out.insert(m, read_tuned(&path)?);
            }
        }
    }
    Ok(out)
}
