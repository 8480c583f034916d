//! Variable importance from accumulated split gains, conditional-entropy
//! variable orderings, and the stacked-copies robustness fixture.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::booster::{boost_core, BoostConfig};
use crate::data::BinaryDataset;
use crate::error::Result;
use crate::network::ArnModel;

/// Accumulated split gain per predictor for one modeled dimension, reported
/// in original column indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub target_dim: usize,
    pub gains: BTreeMap<usize, f64>,
    /// Fraction of the total gain per predictor; empty when the dimension
    /// has no active gain (for example truncation 0).
    pub normalized: BTreeMap<usize, f64>,
    pub total_gain: f64,
    pub no_active_gain: bool,
}

/// Sum the accrued split gains over the active (truncated) trees of the
/// conditional that models original column `target_dim`, mapping predictor
/// positions back to original column indices.
pub fn variable_importance(model: &ArnModel, target_dim: usize) -> ImportanceReport {
    let pos = model
        .ordering()
        .iter()
        .position(|&c| c == target_dim)
        .unwrap_or_else(|| panic!("dimension {target_dim} out of range"));
    let cond = &model.conditionals()[pos];
    let mut gains: BTreeMap<usize, f64> = BTreeMap::new();
    for tree in &cond.trees()[..cond.truncation()] {
        for (&var, &gain) in tree.gain_per_var() {
            *gains.entry(model.ordering()[var]).or_insert(0.0) += gain;
        }
    }
    let total_gain: f64 = gains.values().sum();
    let normalized = if total_gain > 0.0 {
        gains.iter().map(|(&v, &g)| (v, g / total_gain)).collect()
    } else {
        BTreeMap::new()
    };
    ImportanceReport {
        target_dim,
        no_active_gain: total_gain <= 0.0,
        gains,
        normalized,
        total_gain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyDirection {
    Increasing,
    Decreasing,
}

/// Configuration of the probe boosters used to estimate conditional
/// entropies, plus optional candidate subsampling for large D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub boost: BoostConfig,
    /// When set, each greedy step scores at most this many candidates,
    /// subsampled deterministically from the remaining variables.
    pub candidate_cap: Option<usize>,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            boost: BoostConfig {
                rounds: 50,
                leaves: 4,
                shrinkage: 0.1,
                ..BoostConfig::default()
            },
            candidate_cap: None,
            seed: 0,
        }
    }
}

/// A variable ordering together with the estimated conditional entropy
/// (nats) recorded when each variable was selected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderingResult {
    pub permutation: Vec<usize>,
    pub per_step_entropy: Vec<f64>,
}

/// Greedy conditional-entropy ordering: repeatedly select the variable with
/// the highest estimated `H(x_v | x_selected)`, estimated as the average
/// train negative log-likelihood of a small probe booster of `x_v` on the
/// selected columns. Ties break toward the lower variable index. The
/// decreasing direction is the exact reverse of the increasing order.
pub fn entropy_ordering(
    train: &BinaryDataset,
    direction: EntropyDirection,
    probe: &ProbeConfig,
) -> OrderingResult {
    let d = train.n_dims();
    let mut selected: Vec<usize> = Vec::with_capacity(d);
    let mut entropies: Vec<f64> = Vec::with_capacity(d);
    let mut remaining: Vec<usize> = (0..d).collect();

    for step in 0..d {
        let candidates: Vec<usize> = match probe.candidate_cap {
            Some(cap) if remaining.len() > cap => {
                let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
                rng.set_stream(step as u64 + 1);
                let mut pool = remaining.clone();
                pool.shuffle(&mut rng);
                let mut picked: Vec<usize> = pool.into_iter().take(cap).collect();
                picked.sort_unstable();
                picked
            }
            _ => remaining.clone(),
        };

        let predictor_cols: Vec<&[u8]> = selected.iter().map(|&c| train.column(c)).collect();
        let scores: Vec<(usize, f64)> = candidates
            .par_iter()
            .map(|&v| (v, probe_entropy(&predictor_cols, train.column(v), &probe.boost)))
            .collect();

        let (mut best_v, mut best_h) = scores[0];
        for &(v, h) in &scores[1..] {
            if h > best_h {
                best_h = h;
                best_v = v;
            }
        }
        selected.push(best_v);
        entropies.push(best_h);
        remaining.retain(|&v| v != best_v);
    }

    match direction {
        EntropyDirection::Increasing => OrderingResult {
            permutation: selected,
            per_step_entropy: entropies,
        },
        EntropyDirection::Decreasing => {
            selected.reverse();
            entropies.reverse();
            OrderingResult {
                permutation: selected,
                per_step_entropy: entropies,
            }
        }
    }
}

/// Plug-in estimate of `H(target | predictors)` in nats: the average train
/// negative log-likelihood of a probe booster after its final round.
fn probe_entropy(predictors: &[&[u8]], target: &[u8], cfg: &BoostConfig) -> f64 {
    let (_, train_ll, _) = boost_core(predictors, target, None, cfg);
    -train_ll.last().unwrap() / target.len() as f64
}

/// Stack `copies` independent copies of a dataset side by side: columns
/// `0..D` keep the original row order and every further copy applies its own
/// seeded row shuffle, so cross-copy dependencies vanish while each copy's
/// joint distribution is preserved.
pub fn stacked_copies(ds: &BinaryDataset, copies: usize, seed: u64) -> Result<BinaryDataset> {
    assert!(copies >= 1);
    let n = ds.n_samples();
    let mut columns: Vec<Vec<u8>> = Vec::with_capacity(copies * ds.n_dims());
    for c in 0..ds.n_dims() {
        columns.push(ds.column(c).to_vec());
    }
    for copy in 1..copies {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(copy as u64);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for c in 0..ds.n_dims() {
            let col = ds.column(c);
            columns.push(perm.iter().map(|&r| col[r]).collect());
        }
    }
    BinaryDataset::from_columns(columns)
}
