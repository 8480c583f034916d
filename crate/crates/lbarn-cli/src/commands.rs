//! Subcommand implementations.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use lbarn::{
    entropy_ordering, load_model, save_model, train_arn, train_baseline, variable_importance,
    BaselineOptions, BinaryDataset, BoostConfig, EntropyDirection, Error, OrderingChoice,
    ProbeConfig, Result, SelectionMethod, TrainOptions,
};

use crate::io_ext;
use crate::report::{machine_section, truncation_table};
use crate::{EvalArgs, ImportanceArgs, ImputeArgs, OrderArgs, RefitArgs, SampleArgs, TrainArgs};

fn load_dataset(path: &str, tag: &str) -> Result<BinaryDataset> {
    Ok(BinaryDataset::load(path)?.with_split_tag(tag))
}

fn parse_order_flag(value: &str) -> Result<OrderingChoice> {
    match value {
        "natural" => Ok(OrderingChoice::Natural),
        "entropy-increasing" => Ok(OrderingChoice::EntropyIncreasing),
        "entropy-decreasing" => Ok(OrderingChoice::EntropyDecreasing),
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                Ok(OrderingChoice::Explicit(io_ext::read_ordering_file(path)?))
            } else {
                Err(Error::Config(format!(
                    "unknown ordering mode {other:?}; expected natural, file:PATH, \
                     entropy-increasing or entropy-decreasing"
                )))
            }
        }
    }
}

pub fn train(args: TrainArgs) -> Result<()> {
    let train_ds = load_dataset(&args.train, "train")?;
    let valid_ds = load_dataset(&args.valid, "valid")?;
    let ordering = parse_order_flag(&args.order)?;
    let dataset_name = Path::new(&args.train)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned());

    #[derive(Serialize)]
    struct TrainPayload {
        report: lbarn::TrainReport,
        model_path: String,
        kind: &'static str,
        pseudocount: Option<f64>,
        per_dim_leaves: Option<Vec<usize>>,
        test: Option<lbarn::EvalSummary>,
    }

    let (model, mut payload) = if args.baseline_tree {
        let mut opts = BaselineOptions {
            max_leaves: args.leaves.unwrap_or(lbarn::train::BASELINE_DEFAULT_MAX_LEAVES),
            pseudocounts: match args.pseudocount {
                Some(a) => vec![a],
                None => lbarn::train::BASELINE_PSEUDOCOUNT_GRID.to_vec(),
            },
            ordering,
            workers: args.workers,
            seed: args.seed,
            dataset_name,
            ..BaselineOptions::default()
        };
        opts.probe.seed = args.seed;
        let outcome = train_baseline(&train_ds, &valid_ds, &opts)?;
        println!("trained single-tree baseline network");
        println!(
            "dimensions: {}   train rows: {}   valid rows: {}",
            outcome.report.n_dims, outcome.report.n_train, outcome.report.n_valid
        );
        println!("pseudocount: {}", outcome.pseudocount);
        println!(
            "leaves per dimension: min {}, max {}",
            outcome.per_dim_leaves.iter().min().unwrap(),
            outcome.per_dim_leaves.iter().max().unwrap()
        );
        let payload = TrainPayload {
            report: outcome.report.clone(),
            model_path: args.model.clone(),
            kind: "single-tree-baseline",
            pseudocount: Some(outcome.pseudocount),
            per_dim_leaves: Some(outcome.per_dim_leaves.clone()),
            test: None,
        };
        print_means(&outcome.report);
        (outcome.model, payload)
    } else {
        let selection = SelectionMethod::from_str(&args.selection)?;
        let mut opts = TrainOptions {
            boost: BoostConfig {
                rounds: args.rounds,
                leaves: args.leaves.unwrap_or(8),
                shrinkage: args.shrinkage,
                early_exit: !args.no_early_exit,
                ..BoostConfig::default()
            },
            selection,
            ordering,
            refit: args.refit,
            workers: args.workers,
            seed: args.seed,
            dataset_name,
            ..TrainOptions::default()
        };
        opts.probe.seed = args.seed;
        let outcome = train_arn(&train_ds, &valid_ds, &opts)?;
        println!("trained boosted autoregressive network");
        println!(
            "dimensions: {}   train rows: {}   valid rows: {}",
            outcome.report.n_dims, outcome.report.n_train, outcome.report.n_valid
        );
        println!(
            "selection: {}   refit: {}",
            outcome.report.selection, outcome.report.refit
        );
        print!("{}", truncation_table(&outcome.report.truncations));
        let payload = TrainPayload {
            report: outcome.report.clone(),
            model_path: args.model.clone(),
            kind: "boosted",
            pseudocount: None,
            per_dim_leaves: None,
            test: None,
        };
        print_means(&outcome.report);
        (outcome.model, payload)
    };

    save_model(&model, &args.model)?;
    println!("model written to {}", args.model);

    if let Some(test_path) = &args.test {
        let test_ds = load_dataset(test_path, "test")?;
        if test_ds.n_dims() != model.n_dims() {
            return Err(Error::DimensionMismatch(format!(
                "test data has {} dimensions, model has {}",
                test_ds.n_dims(),
                model.n_dims()
            )));
        }
        let mut summary = model.evaluate(&test_ds);
        summary.per_sample.clear();
        println!(
            "test mean log-likelihood: {:.4} nats (std error {:.4}, {} rows)",
            summary.mean, summary.std_error, summary.n_samples
        );
        payload.test = Some(summary);
    }

    println!("wall time: {:.2}s", payload.report.wall_time_secs);
    machine_section(&payload);
    Ok(())
}

fn print_means(report: &lbarn::TrainReport) {
    println!(
        "train mean LL: {:.4} nats   valid mean LL: {:.4} nats (at selection)",
        report.train_ll_mean, report.valid_ll_mean
    );
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let ds = load_dataset(&args.data, "eval")?;
    if ds.n_dims() != model.n_dims() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} dimensions, model has {}",
            ds.n_dims(),
            model.n_dims()
        )));
    }
    let mut summary = model.evaluate(&ds);
    println!(
        "mean log-likelihood: {:.6} nats   std error: {:.6}   rows: {}",
        summary.mean, summary.std_error, summary.n_samples
    );
    if let Some(path) = &args.per_sample {
        let text: String = summary
            .per_sample
            .iter()
            .map(|v| format!("{v}\n"))
            .collect();
        fs::write(path, text).map_err(|source| Error::Io {
            path: Path::new(path).to_path_buf(),
            source,
        })?;
        println!("per-sample log-likelihoods written to {path}");
    }
    summary.per_sample.clear();
    machine_section(&summary);
    Ok(())
}

pub fn sample(args: SampleArgs) -> Result<()> {
    if args.n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let model = load_model(&args.model)?;
    let ds = model.sample(args.seed, args.n);
    ds.save(&args.out)?;
    println!("{} samples written to {}", args.n, args.out);

    #[derive(Serialize)]
    struct Payload<'a> {
        out: &'a str,
        n: usize,
        seed: u64,
        n_dims: usize,
    }
    machine_section(&Payload {
        out: &args.out,
        n: args.n,
        seed: args.seed,
        n_dims: ds.n_dims(),
    });
    Ok(())
}

pub fn impute(args: ImputeArgs) -> Result<()> {
    if args.n_samples == 0 {
        return Err(Error::Config("completions per row must be at least 1".into()));
    }
    let model = load_model(&args.model)?;
    let rows = io_ext::read_partial_rows(&args.data)?;
    let mut out_text = String::new();
    for (i, partial) in rows.iter().enumerate() {
        let completions = model.impute(partial, args.seed.wrapping_add(i as u64), args.n_samples)?;
        for row in completions {
            for (c, bit) in row.iter().enumerate() {
                if c > 0 {
                    out_text.push(' ');
                }
                out_text.push(if *bit == 1 { '1' } else { '0' });
            }
            out_text.push('\n');
        }
    }
    fs::write(&args.out, out_text).map_err(|source| Error::Io {
        path: Path::new(&args.out).to_path_buf(),
        source,
    })?;
    println!(
        "{} completions ({} per row) written to {}",
        rows.len() * args.n_samples,
        args.n_samples,
        args.out
    );

    #[derive(Serialize)]
    struct Payload<'a> {
        out: &'a str,
        rows: usize,
        n_samples: usize,
        seed: u64,
    }
    machine_section(&Payload {
        out: &args.out,
        rows: rows.len(),
        n_samples: args.n_samples,
        seed: args.seed,
    });
    Ok(())
}

pub fn importance(args: ImportanceArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    if args.dim == 0 || args.dim > model.n_dims() {
        return Err(Error::Config(format!(
            "--dim is 1-based and must lie in 1..={}",
            model.n_dims()
        )));
    }
    let report = variable_importance(&model, args.dim - 1);
    let mut table = String::new();
    table.push_str(&format!("importance for dimension {}\n", args.dim));
    if report.no_active_gain {
        table.push_str("(no active trees / no accrued gain)\n");
    } else {
        table.push_str("predictor  gain          share\n");
        let mut entries: Vec<(&usize, &f64)> = report.gains.iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(a.1));
        for (var, gain) in entries {
            table.push_str(&format!(
                "{:>9}  {:<12.6}  {:.4}\n",
                var + 1,
                gain,
                report.normalized[var]
            ));
        }
        table.push_str(&format!("total gain: {:.6}\n", report.total_gain));
    }
    print!("{table}");
    if let Some(path) = &args.out {
        fs::write(path, &table).map_err(|source| Error::Io {
            path: Path::new(path).to_path_buf(),
            source,
        })?;
    }

    #[derive(Serialize)]
    struct Payload {
        target_dim: usize,
        gains: std::collections::BTreeMap<usize, f64>,
        normalized: std::collections::BTreeMap<usize, f64>,
        total_gain: f64,
        no_active_gain: bool,
    }
    machine_section(&Payload {
        target_dim: report.target_dim + 1,
        gains: report.gains.iter().map(|(&v, &g)| (v + 1, g)).collect(),
        normalized: report.normalized.iter().map(|(&v, &g)| (v + 1, g)).collect(),
        total_gain: report.total_gain,
        no_active_gain: report.no_active_gain,
    });
    Ok(())
}

pub fn order(args: OrderArgs) -> Result<()> {
    let train_ds = load_dataset(&args.train, "train")?;
    let direction = match args.direction.as_str() {
        "increasing" => EntropyDirection::Increasing,
        "decreasing" => EntropyDirection::Decreasing,
        other => {
            return Err(Error::Config(format!(
                "unknown direction {other:?}; expected increasing or decreasing"
            )))
        }
    };
    let probe = ProbeConfig {
        boost: BoostConfig {
            rounds: args.probe_rounds,
            leaves: args.probe_leaves,
            shrinkage: args.probe_shrinkage,
            ..BoostConfig::default()
        },
        candidate_cap: args.candidate_cap,
        seed: args.seed,
    };
    probe.boost.validate()?;
    let result = lbarn::train::run_in_pool(args.workers, || {
        entropy_ordering(&train_ds, direction, &probe)
    })?;
    io_ext::write_ordering_file(&args.out, &result.permutation)?;
    println!("ordering ({}) written to {}", args.direction, args.out);
    println!("step  column  entropy (nats)");
    for (step, (&col, &h)) in result
        .permutation
        .iter()
        .zip(&result.per_step_entropy)
        .enumerate()
    {
        println!("{:>4}  {:>6}  {:.4}", step + 1, col + 1, h);
    }

    #[derive(Serialize)]
    struct Payload<'a> {
        out: &'a str,
        direction: &'a str,
        permutation: Vec<usize>,
        per_step_entropy: &'a [f64],
    }
    machine_section(&Payload {
        out: &args.out,
        direction: &args.direction,
        permutation: result.permutation.iter().map(|&c| c + 1).collect(),
        per_step_entropy: &result.per_step_entropy,
    });
    Ok(())
}

pub fn refit(args: RefitArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let train_ds = load_dataset(&args.train, "train")?;
    let valid_ds = load_dataset(&args.valid, "valid")?;
    let pooled = train_ds.vstack(&valid_ds)?;
    let cfg = model.meta().config.clone();
    let refitted = lbarn::train::run_in_pool(args.workers, || {
        lbarn::refit_leaves(&model, &pooled, &cfg)
    })??;
    let out = args.out.as_deref().unwrap_or(&args.model);
    save_model(&refitted, out)?;
    println!(
        "leaves refit on {} pooled rows; model written to {}",
        pooled.n_samples(),
        out
    );

    #[derive(Serialize)]
    struct Payload<'a> {
        out: &'a str,
        pooled_rows: usize,
    }
    machine_section(&Payload {
        out,
        pooled_rows: pooled.n_samples(),
    });
    Ok(())
}
