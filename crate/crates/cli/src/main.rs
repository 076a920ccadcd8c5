use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqlrerank_core::corpus::Split;
use sqlrerank_core::harness::{self, BindingKind, HarnessError, RunConfig};
use sqlrerank_core::{Strategy, VerificationPromptVariant};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "sqlrerank", version, about = "Candidate generation, execution labeling and test-time selection for text-to-SQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Sample candidate pools, or replay `pools_file`
    Generate,
    /// Execute gold and candidate queries; write labels and the verifier dataset
    Label,
    /// Class-balance the verifier dataset per question
    Balance,
    /// Score every candidate with the configured verifier
    Score,
    /// Run each selection strategy on the full pools
    Select,
    /// EX per strategy and Pass@N; writes results.json
    Evaluate,
    /// EX and Pass@n on pool prefixes; writes sweep.csv
    Sweep,
    /// Print and save the human-readable report
    Report,
    /// Every stage in order
    Run,
    /// Print the effective configuration as TOML
    Config,
}

/// Flags that override the config file.
#[derive(Args)]
struct Overrides {
    /// TOML run configuration; relative paths inside resolve against its directory
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    dataset_root: Option<PathBuf>,
    #[arg(long, global = true)]
    split: Option<Split>,
    /// Replay candidate pools from this file
    #[arg(long, global = true)]
    pools: Option<PathBuf>,
    /// Candidates per question
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    exec_timeout_secs: Option<f64>,
    /// Worker threads over questions (0 = all cores)
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Selection seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// remote, mock-hash or oracle
    #[arg(long, global = true)]
    scorer: Option<BindingKind>,
    #[arg(long, global = true)]
    scorer_url: Option<String>,
    /// sql-only, data-only, data-plus-sql or instruction
    #[arg(long, global = true)]
    variant: Option<VerificationPromptVariant>,
    /// Comma-separated: baseline-first, majority, ex-bon, orm-bon
    #[arg(long, global = true, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// Comma-separated prefix sizes for the sweep
    #[arg(long, global = true, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Only executable candidates compete in verifier best-of-N
    #[arg(long, global = true)]
    prefilter_executable: bool,
    /// Non-executable candidates form their own majority-vote cluster
    #[arg(long, global = true)]
    maj_include_errors: bool,
}

impl Overrides {
    fn config(&self) -> Result<RunConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = &self.dataset_root {
            cfg.dataset.root = v.clone();
        }
        if let Some(v) = self.split {
            cfg.dataset.split = v;
        }
        if let Some(v) = &self.pools {
            cfg.pools_file = Some(v.clone());
        }
        if let Some(v) = self.n {
            cfg.generation.n_candidates = v;
        }
        if let Some(v) = self.temperature {
            cfg.generation.temperature = v;
        }
        if let Some(v) = self.exec_timeout_secs {
            cfg.execution.timeout_secs = v;
        }
        if let Some(v) = self.parallelism {
            cfg.execution.parallelism = v;
        }
        if let Some(v) = self.seed {
            cfg.selection.seed = v;
        }
        if let Some(v) = self.scorer {
            cfg.scoring.binding = v;
        }
        if let Some(v) = &self.scorer_url {
            cfg.scoring.url = v.clone();
        }
        if let Some(v) = self.variant {
            cfg.scoring.variant = v;
        }
        if let Some(v) = &self.strategies {
            cfg.selection.strategies = v.clone();
        }
        if let Some(v) = &self.n_values {
            cfg.sweep.n_values = v.clone();
        }
        cfg.scoring.prefilter_executable |= self.prefilter_executable;
        cfg.selection.maj_include_errors |= self.maj_include_errors;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = cli.overrides.config()?;
    match cli.command {
        Command::Generate => {
            let s = harness::cmd_generate(&cfg)?;
            println!("pools written: {}, already present: {}, without pool: {}", s.written, s.skipped, s.missing.len());
        }
        Command::Label => {
            let s = harness::cmd_label(&cfg)?;
            println!(
                "labeled {} questions ({} new, {} gold failures); dataset: {} examples, {} correct ({:.2}%), {} incorrect ({:.2}%)",
                s.questions,
                s.newly_labeled,
                s.gold_failures,
                s.stats.n_examples,
                s.stats.n_correct,
                s.stats.pct_correct,
                s.stats.n_incorrect,
                s.stats.pct_incorrect
            );
        }
        Command::Balance => {
            let s = harness::cmd_balance(&cfg)?;
            println!("balanced dataset: {} -> {} examples", s.before.n_examples, s.after.n_examples);
        }
        Command::Score => {
            let s = harness::cmd_score(&cfg)?;
            println!("scored {} pools, {} already present", s.scored, s.skipped);
        }
        Command::Select => {
            let s = harness::cmd_select(&cfg)?;
            println!("selected for {} questions, {} already present", s.selected, s.skipped);
        }
        Command::Evaluate => print!("{}", harness::cmd_evaluate(&cfg)?.render_table()),
        Command::Sweep => {
            let rows = harness::cmd_sweep(&cfg)?;
            println!("{} sweep rows written to {}", rows.len(), cfg.paths().sweep.display());
        }
        Command::Report => print!("{}", harness::cmd_report(&cfg)?),
        Command::Run => print!("{}", harness::cmd_run(&cfg)?),
        Command::Config => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
