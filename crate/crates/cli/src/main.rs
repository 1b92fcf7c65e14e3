use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rebutrank_core::corpus::{CorpusFormat, Setting, Split};
use rebutrank_core::pipeline::{
    read_tuned_dir, render_stats, write_reports, write_split, write_tuned, Experiment, RunConfig,
};
use rebutrank_core::scorers::{EmbeddingMode, Method, SdVariant};
use rebutrank_core::transport::{emd, TransportProblem};

/// Counter-speech retrieval experiments.
#[derive(Parser)]
#[command(name = "rebutrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the corpus by motion and print per-split statistics.
    Ingest(RunArgs),
    /// Grid-search SD and SD-e parameters and write sd.json / sde.json.
    Tune(RunArgs),
    /// Score and evaluate the configured methods.
    Evaluate(EvaluateArgs),
    /// Solve one transport problem given as JSON.
    Emd {
        #[arg(long)]
        problem: PathBuf,
    },
}

/// Options shared by the corpus-level commands. Flags override the config
/// file.
#[derive(Args)]
struct RunArgs {
    /// JSON file mirroring the run config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    format: Option<CorpusFormat>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embedding_key_prefix: Option<String>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<Split>,
    #[arg(long, value_delimiter = ',')]
    settings: Option<Vec<Setting>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// JSONL score file for the External method; adds it to the methods.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    rand_empirical: bool,
    #[arg(long)]
    embedding_mode: Option<EmbeddingMode>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Directory holding sd.json / sde.json; defaults to the output directory.
    #[arg(long)]
    tuned: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.corpus {
            cfg.corpus_path = v.clone();
        }
        if let Some(v) = self.format {
            cfg.format = Some(v);
        }
        if let Some(v) = &self.embeddings {
            cfg.embeddings_path = Some(v.clone());
        }
        if let Some(v) = &self.embedding_key_prefix {
            cfg.embedding_key_prefix = v.clone();
        }
        if let Some(v) = &self.stopwords {
            cfg.stopwords_path = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.split {
            cfg.split = v;
        }
        if let Some(v) = &self.settings {
            cfg.settings = v.clone();
        }
        if let Some(v) = &self.methods {
            cfg.methods = v.clone();
        }
        if let Some(v) = &self.external {
            cfg.external_path = Some(v.clone());
            if !cfg.methods.contains(&Method::External) {
                cfg.methods.push(Method::External);
            }
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if self.rand_empirical {
            cfg.rand_empirical = true;
        }
        if let Some(v) = self.embedding_mode {
            cfg.embedding_mode = v;
        }
        let mut seen = Vec::new();
        cfg.methods.retain(|m| {
            let fresh = !seen.contains(m);
            seen.push(*m);
            fresh
        });
        Ok(cfg)
    }
}

fn ingest(args: RunArgs) -> Result<()> {
    let mut cfg = args.config()?;
    cfg.methods.clear();
    let exp = Experiment::load(cfg)?;
    write_split(&exp.config.output_dir, &exp.split)?;
    print!("{}", render_stats(&exp.split_stats()));
    Ok(())
}

fn tune(args: RunArgs) -> Result<()> {
    let mut cfg = args.config()?;
    if args.methods.is_none() {
        cfg.methods = vec![Method::SD, Method::SDe];
    }
    let variants: Vec<SdVariant> = cfg.methods.iter().filter_map(|&m| SdVariant::from_method(m)).collect();
    if variants.is_empty() {
        bail!("tune needs sd or sde among the methods");
    }
    cfg.methods.retain(|m| m.needs_embeddings());
    let mut exp = Experiment::load(cfg)?;
    for variant in variants {
        let tuned = exp.tune(variant)?;
        let path = write_tuned(&exp.config.output_dir, &tuned)?;
        println!(
            "{}: {} = {:.4} on {} instances -> {}",
            variant.method(),
            serde_json::to_string(&tuned.config.sd_params)?,
            tuned.objective_value,
            tuned.n_instances,
            path.display()
        );
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = args.run.config()?;
    let tuned_dir = args.tuned.unwrap_or_else(|| cfg.output_dir.clone());
    let tuned = read_tuned_dir(&tuned_dir, &cfg.methods)?;
    let mut exp = Experiment::load(cfg)?;
    let run = exp.evaluate(&tuned)?;
    if run.reports.is_empty() {
        bail!("no instances in the {} split for the selected settings", exp.config.split);
    }
    write_reports(&exp.config.output_dir, &run)?;
    print!("{}", run.table.render());
    Ok(())
}

fn solve(problem: PathBuf) -> Result<()> {
    let text = fs::read_to_string(&problem).with_context(|| format!("reading {}", problem.display()))?;
    let p: TransportProblem<f64> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", problem.display()))?;
    let plan = emd(&p)?;
    println!("{}", serde_json::to_string_pretty(&plan)?);
    println!("objective {}", plan.objective);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Tune(a) => tune(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Emd { problem } => solve(problem),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
