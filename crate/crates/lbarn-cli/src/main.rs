//! `lbarn` command line: train boosted autoregressive networks on binary
//! data, evaluate exact log-likelihoods, sample, impute, inspect variable
//! importance and compute conditional-entropy orderings.

mod commands;
mod io_ext;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "lbarn", version, about = "Autoregressive networks with boosted-tree conditionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on train/validation splits and write a model file.
    Train(TrainArgs),
    /// Evaluate mean test log-likelihood of a trained model.
    Eval(EvalArgs),
    /// Draw samples from a trained model.
    Sample(SampleArgs),
    /// Complete partially observed rows (missing entries marked '?').
    Impute(ImputeArgs),
    /// Per-predictor split-gain importance for one modeled dimension.
    Importance(ImportanceArgs),
    /// Conditional-entropy variable ordering from training data.
    Order(OrderArgs),
    /// Refit leaf values of a trained model on pooled train+valid data.
    Refit(RefitArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Training split in dense text format.
    #[arg(long, value_name = "PATH")]
    train: String,
    /// Validation split in dense text format.
    #[arg(long, value_name = "PATH")]
    valid: String,
    /// Optional test split evaluated after training.
    #[arg(long, value_name = "PATH")]
    test: Option<String>,
    /// Output model file.
    #[arg(long, value_name = "PATH")]
    model: String,
    /// Leaf budget J per tree (boosted), or growth cap (single-tree baseline,
    /// default 512).
    #[arg(long, value_name = "J")]
    leaves: Option<usize>,
    /// Shrinkage factor.
    #[arg(long, value_name = "NU", default_value_t = 0.02)]
    shrinkage: f64,
    /// Maximum boosting rounds per dimension.
    #[arg(long, value_name = "T", default_value_t = 1000)]
    rounds: usize,
    /// Selection method: individual, common, linearized-forward or
    /// linearized-backward.
    #[arg(long, default_value = "individual")]
    selection: String,
    /// Variable ordering: natural, file:PATH, entropy-increasing or
    /// entropy-decreasing.
    #[arg(long, value_name = "MODE[:PATH]", default_value = "natural")]
    order: String,
    /// Seed for seeded operations (recorded; training itself is
    /// deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the parallel map over dimensions.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Refit leaf values on pooled train+valid after selection.
    #[arg(long)]
    refit: bool,
    /// Train the single probability-estimation-tree baseline instead of
    /// boosting.
    #[arg(long = "baseline-tree")]
    baseline_tree: bool,
    /// Smoothing pseudocount for the baseline (default: grid
    /// 0.1/0.5/1/2 chosen on validation).
    #[arg(long, value_name = "A")]
    pseudocount: Option<f64>,
    /// Disable the early exit on stalled train likelihood.
    #[arg(long = "no-early-exit")]
    no_early_exit: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    model: String,
    /// Dataset to evaluate.
    #[arg(long, value_name = "PATH", alias = "test")]
    data: String,
    /// Optional output file for per-sample log-likelihoods.
    #[arg(long, value_name = "PATH")]
    per_sample: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_name = "PATH")]
    model: String,
    /// Number of samples to draw.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (dense text format).
    #[arg(long, value_name = "PATH")]
    out: String,
}

#[derive(Args)]
struct ImputeArgs {
    #[arg(long, value_name = "PATH")]
    model: String,
    /// Partially observed rows; tokens are 0, 1 or '?'.
    #[arg(long, value_name = "PATH")]
    data: String,
    /// Completions per input row.
    #[arg(long = "n-samples", default_value_t = 1)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: String,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long, value_name = "PATH")]
    model: String,
    /// Modeled dimension to report on (1-based column index).
    #[arg(long)]
    dim: usize,
    /// Optional output file for the importance table.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
}

#[derive(Args)]
struct OrderArgs {
    /// Training data used to estimate conditional entropies.
    #[arg(long, value_name = "PATH")]
    train: String,
    /// increasing or decreasing conditional entropy.
    #[arg(long, default_value = "increasing")]
    direction: String,
    /// Output permutation file (one line of 1-based column indices).
    #[arg(long, value_name = "PATH")]
    out: String,
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Probe booster leaf budget.
    #[arg(long = "probe-leaves", default_value_t = 4)]
    probe_leaves: usize,
    /// Probe booster rounds.
    #[arg(long = "probe-rounds", default_value_t = 50)]
    probe_rounds: usize,
    /// Probe booster shrinkage.
    #[arg(long = "probe-shrinkage", default_value_t = 0.1)]
    probe_shrinkage: f64,
    /// Score at most this many candidates per greedy step.
    #[arg(long = "candidate-cap")]
    candidate_cap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RefitArgs {
    /// Model to refit.
    #[arg(long, value_name = "PATH")]
    model: String,
    #[arg(long, value_name = "PATH")]
    train: String,
    #[arg(long, value_name = "PATH")]
    valid: String,
    /// Output model file (defaults to overwriting --model).
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::Sample(args) => commands::sample(args),
        Command::Impute(args) => commands::impute(args),
        Command::Importance(args) => commands::importance(args),
        Command::Order(args) => commands::order(args),
        Command::Refit(args) => commands::refit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
