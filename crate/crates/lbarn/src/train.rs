//! End-to-end training drivers: parallel boosting over dimensions, model
//! selection, optional refit on pooled data, and the single-tree baseline
//! network.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{entropy_ordering, EntropyDirection, ProbeConfig};
use crate::booster::{boost_dimension, BoostConfig, ConditionalModel, SelectionTrace};
use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::network::{ArnModel, ModelKind, ModelMeta};
use crate::selection::{
    refit_leaves, select_common, select_individual, select_linearized, LinearizedDirection,
    SelectionMethod, SelectionResult,
};
use crate::tree::grow_probability_tree;

#[derive(Debug, Clone, PartialEq)]
pub enum OrderingChoice {
    /// Original column order.
    Natural,
    /// Explicit permutation of original column indices.
    Explicit(Vec<usize>),
    EntropyIncreasing,
    EntropyDecreasing,
}

impl OrderingChoice {
    pub fn name(&self) -> &'static str {
        match self {
            OrderingChoice::Natural => "natural",
            OrderingChoice::Explicit(_) => "explicit",
            OrderingChoice::EntropyIncreasing => "entropy-increasing",
            OrderingChoice::EntropyDecreasing => "entropy-decreasing",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub boost: BoostConfig,
    pub selection: SelectionMethod,
    pub ordering: OrderingChoice,
    /// Probe configuration for entropy-based orderings.
    pub probe: ProbeConfig,
    /// Refit leaf values on pooled train + validation data after selection.
    pub refit: bool,
    /// Worker threads for the parallel map over dimensions; `None` uses the
    /// global pool. Outputs are identical for any worker count.
    pub workers: Option<usize>,
    /// Seed recorded in the model and used for seeded steps (candidate
    /// subsampling in entropy orderings). Boosting itself needs no RNG.
    pub seed: u64,
    pub dataset_name: Option<String>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            boost: BoostConfig::default(),
            selection: SelectionMethod::Individual,
            ordering: OrderingChoice::Natural,
            probe: ProbeConfig::default(),
            refit: false,
            workers: None,
            seed: 0,
            dataset_name: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_dims: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub ordering: Vec<usize>,
    pub truncations: Vec<usize>,
    /// Per-sample means at the selected truncations (before any refit).
    pub train_ll_mean: f64,
    pub valid_ll_mean: f64,
    pub selection: String,
    pub refit: bool,
    pub wall_time_secs: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: ArnModel,
    pub selection: SelectionResult,
    pub traces: Vec<SelectionTrace>,
    pub report: TrainReport,
}

/// Train a boosted autoregressive network: boost every position of the
/// ordering independently (parallel map over dimensions), pick truncations
/// with the configured selection procedure, and optionally refit leaf values
/// on the pooled train + validation data.
pub fn train_arn(
    train: &BinaryDataset,
    valid: &BinaryDataset,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    opts.boost.validate()?;
    if train.n_dims() != valid.n_dims() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} dimensions, valid has {}",
            train.n_dims(),
            valid.n_dims()
        )));
    }
    let started = Instant::now();
    let d = train.n_dims();
    let ordering = resolve_ordering(train, &opts.ordering, &opts.probe, opts.workers)?;

    // Common selection needs every dimension trained to the same number of
    // rounds, so the early-exit speedup is forced off for it.
    let mut boost_cfg = opts.boost.clone();
    if opts.selection == SelectionMethod::Common {
        boost_cfg.early_exit = false;
    }

    let pairs: Vec<(ConditionalModel, SelectionTrace)> = run_in_pool(opts.workers, || {
        (0..d)
            .into_par_iter()
            .map(|pos| boost_dimension(train, valid, &ordering, pos, &boost_cfg))
            .collect()
    })?;
    let (conditionals, traces): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();

    let selection = match opts.selection {
        SelectionMethod::Individual => select_individual(&traces),
        SelectionMethod::Common => select_common(&traces)?,
        SelectionMethod::LinearizedForward => {
            select_linearized(&traces, LinearizedDirection::Forward)
        }
        SelectionMethod::LinearizedBackward => {
            select_linearized(&traces, LinearizedDirection::Backward)
        }
    };

    let mut meta = ModelMeta::new(ModelKind::Boosted, boost_cfg.clone(), selection.method.name());
    meta.dataset = opts.dataset_name.clone();
    meta.selection_valid_ll = Some(selection.valid_ll_at_choice);
    meta.ordering_mode = opts.ordering.name().to_string();
    meta.seed = opts.seed;
    let mut model = ArnModel::new(ordering.clone(), conditionals, meta)?;
    model.set_truncations(&selection.truncations);

    if opts.refit {
        let pooled = train.vstack(valid)?;
        model = refit_leaves(&model, &pooled, &boost_cfg)?;
    }

    let train_ll_sum: f64 = traces
        .iter()
        .zip(&selection.truncations)
        .map(|(tr, &t)| tr.train_ll[t])
        .sum();
    let report = TrainReport {
        n_dims: d,
        n_train: train.n_samples(),
        n_valid: valid.n_samples(),
        ordering,
        truncations: selection.truncations.clone(),
        train_ll_mean: train_ll_sum / train.n_samples() as f64,
        valid_ll_mean: selection.valid_ll_at_choice / valid.n_samples() as f64,
        selection: selection.method.name().to_string(),
        refit: opts.refit,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        model,
        selection,
        traces,
        report,
    })
}

pub const BASELINE_DEFAULT_MAX_LEAVES: usize = 512;
pub const BASELINE_PSEUDOCOUNT_GRID: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

#[derive(Debug, Clone)]
pub struct BaselineOptions {
    /// Growth cap on leaves per tree; the per-dimension leaf count is chosen
    /// on validation data from the greedy growth prefixes.
    pub max_leaves: usize,
    /// Candidate smoothing pseudocounts; one is chosen for all dimensions on
    /// validation data.
    pub pseudocounts: Vec<f64>,
    pub ordering: OrderingChoice,
    pub probe: ProbeConfig,
    pub workers: Option<usize>,
    pub seed: u64,
    pub dataset_name: Option<String>,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self {
            max_leaves: BASELINE_DEFAULT_MAX_LEAVES,
            pseudocounts: BASELINE_PSEUDOCOUNT_GRID.to_vec(),
            ordering: OrderingChoice::Natural,
            probe: ProbeConfig::default(),
            workers: None,
            seed: 0,
            dataset_name: None,
        }
    }
}

#[derive(Debug)]
pub struct BaselineOutcome {
    pub model: ArnModel,
    pub pseudocount: f64,
    pub per_dim_leaves: Vec<usize>,
    pub report: TrainReport,
}

/// Train the single probability-estimation-tree network: one greedily grown
/// tree per dimension, the leaf count per dimension picked on validation
/// from the growth prefixes, and a single smoothing pseudocount shared by
/// all dimensions, also picked on validation.
pub fn train_baseline(
    train: &BinaryDataset,
    valid: &BinaryDataset,
    opts: &BaselineOptions,
) -> Result<BaselineOutcome> {
    if train.n_dims() != valid.n_dims() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} dimensions, valid has {}",
            train.n_dims(),
            valid.n_dims()
        )));
    }
    if opts.pseudocounts.is_empty() || opts.pseudocounts.iter().any(|&a| a <= 0.0) {
        return Err(Error::Config("pseudocount grid must be positive".into()));
    }
    if opts.max_leaves < 1 {
        return Err(Error::Config("baseline leaf cap must be at least 1".into()));
    }
    let started = Instant::now();
    let d = train.n_dims();
    let ordering = resolve_ordering(train, &opts.ordering, &opts.probe, opts.workers)?;

    struct DimFit {
        tree: crate::tree::ProbabilityTree,
        valid_ll: f64,
        train_ll: f64,
    }

    let mut best: Option<(f64, f64, Vec<DimFit>)> = None; // (pseudocount, total valid ll, fits)
    for &pc in &opts.pseudocounts {
        let fits: Vec<DimFit> = run_in_pool(opts.workers, || {
            (0..d)
                .into_par_iter()
                .map(|pos| {
                    let (train_preds, train_y) = train.prefix_view_ordered(&ordering, pos);
                    let (valid_preds, valid_y) = valid.prefix_view_ordered(&ordering, pos);
                    let growth =
                        grow_probability_tree(&train_preds, train_y, opts.max_leaves, pc);
                    let valid_lls = growth.prefix_log_likelihoods(&valid_preds, valid_y);
                    let mut best_j = 0;
                    let mut best_ll = valid_lls[0];
                    for (j, &ll) in valid_lls.iter().enumerate().skip(1) {
                        if ll > best_ll {
                            best_ll = ll;
                            best_j = j;
                        }
                    }
                    let train_lls = growth.prefix_log_likelihoods(&train_preds, train_y);
                    DimFit {
                        tree: growth.prefix_tree(best_j),
                        valid_ll: best_ll,
                        train_ll: train_lls[best_j],
                    }
                })
                .collect()
        })?;
        let total: f64 = fits.iter().map(|f| f.valid_ll).sum();
        if best.as_ref().is_none_or(|(_, b, _)| total > *b) {
            best = Some((pc, total, fits));
        }
    }
    let (pseudocount, total_valid_ll, fits) = best.expect("nonempty grid");

    let per_dim_leaves: Vec<usize> = fits.iter().map(|f| f.tree.n_leaves()).collect();
    let train_ll_sum: f64 = fits.iter().map(|f| f.train_ll).sum();
    let conditionals: Vec<ConditionalModel> = fits
        .iter()
        .enumerate()
        .map(|(pos, f)| ConditionalModel::from_parts(pos, vec![f.tree.to_log_odds_tree()], 1.0, 1))
        .collect();

    let mut meta = ModelMeta::new(
        ModelKind::SingleTreeBaseline,
        BoostConfig {
            rounds: 1,
            leaves: opts.max_leaves,
            shrinkage: 1.0,
            early_exit: false,
            ..BoostConfig::default()
        },
        "baseline",
    );
    meta.pseudocount = Some(pseudocount);
    meta.dataset = opts.dataset_name.clone();
    meta.selection_valid_ll = Some(total_valid_ll);
    meta.ordering_mode = opts.ordering.name().to_string();
    meta.seed = opts.seed;
    let model = ArnModel::new(ordering.clone(), conditionals, meta)?;

    let report = TrainReport {
        n_dims: d,
        n_train: train.n_samples(),
        n_valid: valid.n_samples(),
        ordering,
        truncations: vec![1; d],
        train_ll_mean: train_ll_sum / train.n_samples() as f64,
        valid_ll_mean: total_valid_ll / valid.n_samples() as f64,
        selection: "baseline".to_string(),
        refit: false,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(BaselineOutcome {
        model,
        pseudocount,
        per_dim_leaves,
        report,
    })
}

/// Resolve an ordering choice to a permutation of original column indices.
pub fn resolve_ordering(
    train: &BinaryDataset,
    choice: &OrderingChoice,
    probe: &ProbeConfig,
    workers: Option<usize>,
) -> Result<Vec<usize>> {
    let d = train.n_dims();
    match choice {
        OrderingChoice::Natural => Ok((0..d).collect()),
        OrderingChoice::Explicit(perm) => {
            if perm.len() != d {
                return Err(Error::Config(format!(
                    "ordering lists {} dimensions, data has {}",
                    perm.len(),
                    d
                )));
            }
            let mut seen = vec![false; d];
            for &c in perm {
                if c >= d || seen[c] {
                    return Err(Error::Config(format!(
                        "ordering is not a permutation of 1..={d}"
                    )));
                }
                seen[c] = true;
            }
            Ok(perm.clone())
        }
        OrderingChoice::EntropyIncreasing => Ok(run_in_pool(workers, || {
            entropy_ordering(train, EntropyDirection::Increasing, probe)
        })?
        .permutation),
        OrderingChoice::EntropyDecreasing => Ok(run_in_pool(workers, || {
            entropy_ordering(train, EntropyDirection::Decreasing, probe)
        })?
        .permutation),
    }
}

/// Run a closure inside a dedicated rayon pool of the requested size, or on
/// the global pool when no size is given.
pub fn run_in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            if w == 0 {
                return Err(Error::Config("worker count must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("failed to build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
