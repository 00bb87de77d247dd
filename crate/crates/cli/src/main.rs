use std::path::PathBuf;
use std::process::ExitCode;

use cbsev::harness::{run_all, run_stage, PipelineConfig, Stage, StageReport, Workspace};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cbsev", version, about = "Cyberbullying severity pipeline")]
struct Cli {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding the pipeline artifacts
    #[arg(long, global = true, default_value = "workspace")]
    workspace: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus
    Generate,
    /// Window the corpus and assign severity labels
    Label,
    /// Build the feature matrix
    Features,
    /// Train CBoW word embeddings
    TrainEmbeddings,
    /// Fit the LDA topic model
    TrainTopics,
    /// Train the LSTM and the logistic-regression baseline
    Train,
    /// Score both models on the validation split
    Evaluate,
    /// LIME and Shapley explanations
    Explain,
    /// Bundle a run summary
    Report,
    /// Run every stage in order
    All,
    /// Print the effective configuration with all keys
    Config,
}

fn stage_of(c: &Command) -> Option<Stage> {
    Some(match c {
        Command::Generate => Stage::Generate,
        Command::Label => Stage::Label,
        Command::Features => Stage::Features,
        Command::TrainEmbeddings => Stage::TrainEmbeddings,
        Command::TrainTopics => Stage::TrainTopics,
        Command::Train => Stage::Train,
        Command::Evaluate => Stage::Evaluate,
        Command::Explain => Stage::Explain,
        Command::Report => Stage::Report,
        Command::All | Command::Config => return None,
    })
}

fn emit(reports: &[StageReport], format: Format) -> cbsev::Result<()> {
    match format {
        Format::Text => reports.iter().for_each(|r| print!("{}", r.text)),
        Format::Json => println!("{}", serde_json_string(reports)?),
    }
    Ok(())
}

fn serde_json_string(reports: &[StageReport]) -> cbsev::Result<String> {
    Ok(if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])?
    } else {
        serde_json::to_string_pretty(reports)?
    })
}

fn run(cli: Cli) -> cbsev::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Command::Config = cli.command {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let ws = Workspace::new(&cli.workspace)?;
    let reports = match stage_of(&cli.command) {
        Some(stage) => vec![run_stage(stage, &ws, &cfg)?],
        None => run_all(&ws, &cfg)?,
    };
    emit(&reports, cli.format)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
