use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resfault::pipeline::{io, mcnemar_pair, Pipeline, PipelineConfig, RepoConfig, Stage, Table};

#[derive(Parser)]
#[command(name = "resfault", version, about = "Residual-fault prediction toolkit")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Add a repository to the configured ones (repeatable).
    #[arg(long, global = true)]
    repo: Vec<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan repositories for bug-fixing commits.
    Mine,
    /// Label commits as residual or non-residual.
    Classify,
    /// Product and process metrics of the methods each fix touches.
    Metrics,
    /// Train the n-gram model and score ENT.
    Entropy,
    /// Join labels and metrics into the dataset.
    Assemble,
    /// Commit-grouped train/test split.
    Split,
    /// Train all model families.
    Train,
    /// Score models on the test split.
    Evaluate,
    /// McNemar's test between models (all pairs, or one with --a/--b).
    Mcnemar {
        #[arg(long, requires = "b")]
        a: Option<String>,
        #[arg(long, requires = "a")]
        b: Option<String>,
    },
    /// Importance and Shapley reports for the supervised models.
    Explain,
    /// Compare the metric space with an embedding file.
    Repr {
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Statement-level dataset statistics.
    Stats,
    /// Run every stage, skipping up-to-date ones.
    Run,
}

fn config(cli: &Cli) -> resfault::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.repos.extend(cli.repo.iter().map(|p| RepoConfig {
        path: p.clone(),
        issues: None,
        contributors: None,
    }));
    if let Command::Repr {
        embeddings: Some(e),
    } = &cli.command
    {
        cfg.repr.embeddings = Some(e.clone());
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> resfault::Result<()> {
    let pipeline = Pipeline::new(config(cli)?)?;
    let stage = match &cli.command {
        Command::Mine => Stage::Mine,
        Command::Classify => Stage::Classify,
        Command::Metrics => Stage::Metrics,
        Command::Entropy => Stage::Entropy,
        Command::Assemble => Stage::Assemble,
        Command::Split => Stage::Split,
        Command::Train => Stage::Train,
        Command::Evaluate => Stage::Evaluate,
        Command::Mcnemar { a: Some(a), b: Some(b) } => {
            let preds = Table::read(&pipeline.path("predictions.csv"))?;
            let pair = mcnemar_pair(&preds, a, b)?;
            println!("{}", serde_json::to_string_pretty(&pair)?);
            return Ok(());
        }
        Command::Mcnemar { .. } => Stage::Mcnemar,
        Command::Explain => Stage::Explain,
        Command::Repr { .. } => Stage::Repr,
        Command::Stats => Stage::Stats,
        Command::Run => {
            for o in pipeline.run()? {
                println!("{:<10} {}", o.stage.name(), if o.skipped { "up to date" } else { "done" });
            }
            return Ok(());
        }
    };
    pipeline.run_stage(stage)?;
    if stage == Stage::Evaluate {
        print!("{}", io::read_text(&pipeline.path("eval_report.txt"))?);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
