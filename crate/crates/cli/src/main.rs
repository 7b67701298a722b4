use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fanlink_cli::{commands, CliError, Overrides, PipelineConfig, ResolverChoice};
use fanlink_core::evaluation::Mode;
use fanlink_core::learners::ModelKind;

#[derive(Parser)]
#[command(name = "fanlink", version, about = "Link EPG TV shows to social-network fanpages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse the EPG and aggregate records into shows.
    Ingest,
    /// Search fanpages for each show and write candidate edges.
    Block,
    /// Label unlabeled candidate pairs interactively.
    Label,
    /// Train the configured learner on labeled candidates.
    Train,
    /// Cross-validate every resolver and report both selection modes.
    Evaluate,
    /// Select pages for each show and write the link graph.
    Resolve,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Logistic,
    LinearSvm,
    RandomForest,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MostSuitable,
    AnythingSuitable,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResolverArg {
    ScoreModel,
    Learner,
}

#[derive(clap::Args)]
struct Opts {
    /// JSON pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    epg: Option<PathBuf>,
    #[arg(long, global = true)]
    pages: Option<PathBuf>,
    /// Channel directory JSON.
    #[arg(long, global = true)]
    directory: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Candidates kept per show.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Score-model decision threshold in [0, 10].
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    learner: Option<LearnerArg>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Cost of a false positive.
    #[arg(long, global = true)]
    c_fp: Option<f64>,
    /// Cost of a false negative.
    #[arg(long, global = true)]
    c_fn: Option<f64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Weight of confidence against engagement when ranking.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, value_enum)]
    resolver: Option<ResolverArg>,
}

impl Opts {
    fn into_config(self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        cfg.apply(Overrides {
            epg: self.epg,
            pages: self.pages,
            directory: self.directory,
            labels: self.labels,
            output_dir: self.out,
            model: self.model,
            k: self.k,
            threshold: self.threshold,
            learner: self.learner.map(|l| match l {
                LearnerArg::Logistic => ModelKind::Logistic,
                LearnerArg::LinearSvm => ModelKind::LinearSvm,
                LearnerArg::RandomForest => ModelKind::RandomForest,
            }),
            seed: self.seed,
            folds: self.folds,
            c_fp: self.c_fp,
            c_fn: self.c_fn,
            mode: self.mode.map(|m| match m {
                ModeArg::MostSuitable => Mode::MostSuitable,
                ModeArg::AnythingSuitable => Mode::AnythingSuitable,
            }),
            alpha: self.alpha,
            resolver: self.resolver.map(|r| match r {
                ResolverArg::ScoreModel => ResolverChoice::ScoreModel,
                ResolverArg::Learner => ResolverChoice::Learner,
            }),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = cli.opts.into_config()?;
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Block => commands::block(&cfg),
        Command::Label => {
            let stdin = std::io::stdin();
            commands::label(&cfg, &mut stdin.lock(), &mut std::io::stdout())
        }
        Command::Train => commands::train(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Resolve => commands::resolve(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
