mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rebutrank_core::corpus::{Setting, Split, TaskInstance};
use rebutrank_core::eval::evaluate;
use rebutrank_core::pipeline::{Experiment, RunConfig};
use rebutrank_core::scorers::{score_sd, Agg, EmbeddingMode, Method, ScorerConfig, SdSpeech, SdVariant};
use rebutrank_core::tuning::{tune_sd, GridSpec, Objective};
use serde_json::json;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/data").join(name)
}

fn line(id: &str, motion: &str, stance: &str, author: &str, counter: Option<(&str, &str)>) -> String {
    json!({
        "id": id,
        "motion_id": motion,
        "stance": stance,
        "author_id": author,
        "counter_of": counter.map(|c| c.0),
        "counter_kind": counter.map(|c| c.1),
        "transcript": [format!("speech {id} about {motion}.")],
    })
    .to_string()
}

fn small_corpus(dir: &Path) -> PathBuf {
    let lines = [
        line("s1", "m1", "supporting", "a1", None),
        line("o1", "m1", "opposing", "a2", Some(("s1", "explicit"))),
        line("o2", "m1", "opposing", "a3", Some(("s1", "implicit"))),
        line("o3", "m1", "opposing", "a4", None),
        line("s2", "m2", "supporting", "a1", None),
        line("o4", "m2", "opposing", "a2", Some(("s2", "implicit"))),
        line("o5", "m2", "opposing", "a1", None),
        line("s3", "m3", "supporting", "a5", None),
        line("s4", "m3", "supporting", "a6", None),
        line("o6", "m3", "opposing", "a7", Some(("s3", "explicit"))),
        line("s5", "m4", "supporting", "a8", None),
        line("o7", "m4", "opposing", "a9", Some(("s5", "explicit"))),
        line("o8", "m4", "opposing", "a10", None),
        line("s6", "m5", "supporting", "a11", None),
    ];
    let path = dir.join("small.jsonl");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

/// (instances, distinct opposing, candidates, gold) contributed by one motion.
fn hand_count(motion: &str, setting: Setting) -> (usize, Vec<&'static str>, usize, usize) {
    match (motion, setting) {
        ("m1", Setting::All) => (1, vec!["o1", "o2", "o3"], 3, 2),
        ("m1", Setting::Explicit) => (1, vec!["o1", "o3"], 2, 1),
        ("m1", Setting::Implicit) => (1, vec!["o2", "o3"], 2, 1),
        ("m4", Setting::All | Setting::Explicit) => (1, vec!["o7", "o8"], 2, 1),
        _ => (0, vec![], 0, 0),
    }
}

#[test]
fn split_statistics_match_hand_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        corpus_path: small_corpus(dir.path()),
        methods: vec![],
        ..RunConfig::default()
    };
    let exp = Experiment::load(cfg).unwrap();
    let sizes: Vec<usize> = [Split::Train, Split::Validation, Split::Test]
        .iter()
        .map(|&s| exp.split.motions(s).len())
        .collect();
    assert_eq!(sizes, [3, 1, 1]);
    let mut totals = BTreeMap::new();
    for stats in exp.split_stats() {
        let (mut inst, mut opp, mut cands, mut gold) = (0, Vec::new(), 0, 0);
        for motion in exp.split.motions(stats.split) {
            let (i, o, c, g) = hand_count(motion, stats.setting);
            inst += i;
            opp.extend(o);
            cands += c;
            gold += g;
        }
        assert_eq!(stats.instances, inst);
        assert_eq!(stats.opposing, opp.len());
        if inst > 0 {
            assert_eq!(stats.mean_candidates, cands as f64 / inst as f64);
            assert!((stats.percent_positive - 100.0 * gold as f64 / cands as f64).abs() < 1e-12);
        }
        *totals.entry(stats.setting).or_insert(0) += stats.instances;
    }
    assert_eq!(totals[&Setting::All], 2);
    assert_eq!(totals[&Setting::Explicit], 2);
    assert_eq!(totals[&Setting::Implicit], 1);
}

#[test]
fn seed_moves_motions_but_keeps_totals() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let total = |seed| {
        let exp = Experiment::load(RunConfig { corpus_path: corpus.clone(), seed, methods: vec![], ..RunConfig::default() }).unwrap();
        exp.split_stats().iter().map(|s| s.instances).sum::<usize>()
    };
    assert_eq!(total(1), total(42));
    assert_eq!(total(7), 5);
}

fn fixture_config(jobs: usize) -> RunConfig {
    RunConfig {
        corpus_path: data("fixture_corpus.jsonl"),
        embeddings_path: Some(data("toy_embeddings.txt")),
        methods: vec![Method::Cos, Method::JS, Method::Ngrams, Method::MI, Method::CMI, Method::SDe],
        jobs,
        grid: GridSpec {
            agg_functions: vec![Agg::Min, Agg::Max, Agg::Avg],
            alpha_values: vec![0.0, 0.5, 1.0],
            objective: Objective::Mrr,
        },
        ..RunConfig::default()
    }
}

fn fixture_run(jobs: usize) -> String {
    let mut exp = Experiment::load(fixture_config(jobs)).unwrap();
    let tuned = exp.tune(SdVariant::EmbeddingOnly).unwrap();
    let map = BTreeMap::from([(Method::SDe, tuned.config.clone())]);
    let run = exp.evaluate(&map).unwrap();
    serde_json::to_string(&(tuned, run.reports)).unwrap() + &run.table.render()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let one = fixture_run(1);
    assert_eq!(one, fixture_run(4));
    assert_eq!(one, fixture_run(8));
}

fn verbatim_fixture(seed: u64) -> (Vec<TaskInstance>, HashMap<String, SdSpeech<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = ["ban", "gambl", "harm", "tax", "vote", "risk", "odd"];
    let table = common::toy_table(&mut rng, &pool[..6], 4);
    let vocab = common::vocabulary_of(&["ban", "gambl", "harm", "risk", "tax", "vote"]);
    let mut speeches = HashMap::new();
    let mut instances = Vec::new();
    for k in 0..6 {
        let sup_id = format!("s{k}");
        let sentences = common::random_sentences(&mut rng, &pool, 3, 4);
        let mut ids = Vec::new();
        for c in 0..3 {
            let id = format!("s{k}c{c}");
            let text = if c == 1 {
                sentences.clone()
            } else {
                common::random_sentences(&mut rng, &pool, 3, 4)
            };
            speeches.insert(id.clone(), SdSpeech::build(&common::speech_of(&id, text), Some(&vocab), &table));
            ids.push(id);
        }
        speeches.insert(sup_id.clone(), SdSpeech::build(&common::speech_of(&sup_id, sentences), Some(&vocab), &table));
        instances.push(TaskInstance {
            supporting_id: sup_id,
            gold_ids: vec![ids[1].clone()],
            candidate_ids: ids,
            setting: Setting::All,
        });
    }
    (instances, speeches)
}

#[test]
fn verbatim_counter_is_found_by_tuning() {
    let (instances, speeches) = verbatim_fixture(11);
    let grid = GridSpec::default();
    let tuned = tune_sd(&instances, &speeches, &grid, SdVariant::Full, EmbeddingMode::Centroid).unwrap();
    assert_eq!(tuned.objective_value, 1.0);
    assert_eq!(tuned.n_instances, 6);
}

#[test]
fn tuning_is_exhaustive() {
    let grid = GridSpec {
        agg_functions: vec![Agg::Min, Agg::Avg, Agg::Product],
        alpha_values: vec![0.0, 0.3, 0.6, 1.0],
        objective: Objective::Mrr,
    };
    for seed in 0..4 {
        let (instances, speeches) = verbatim_fixture(100 + seed);
        for mode in [EmbeddingMode::Centroid, EmbeddingMode::Wmd] {
            let tuned = tune_sd(&instances, &speeches, &grid, SdVariant::Full, mode).unwrap();
            let mut best: Option<(f64, ScorerConfig)> = None;
            for params in grid.combinations() {
                let cfg = ScorerConfig::sd(SdVariant::Full, params, mode);
                let scored: Vec<_> = instances.iter().map(|i| score_sd(i, &speeches, &cfg).unwrap()).collect();
                let mrr = evaluate("SD", &instances, &scored).unwrap().mrr;
                if best.as_ref().is_none_or(|(b, _)| mrr > *b + 1e-12) {
                    best = Some((mrr, cfg));
                }
            }
            let (mrr, cfg) = best.unwrap();
            assert!((tuned.objective_value - mrr).abs() < 1e-12);
            assert_eq!(tuned.config, cfg);
        }
    }
}
