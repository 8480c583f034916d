//! Choosing per-dimension truncations from selection traces, and refitting
//! leaf values on pooled data with tree structures frozen.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::booster::{sigmoid, BoostConfig, ConditionalModel, SelectionTrace};
use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::network::ArnModel;
use crate::tree::{leaf_value, FitWeights, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionMethod {
    Individual,
    Common,
    LinearizedForward,
    LinearizedBackward,
}

impl SelectionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionMethod::Individual => "individual",
            SelectionMethod::Common => "common",
            SelectionMethod::LinearizedForward => "linearized-forward",
            SelectionMethod::LinearizedBackward => "linearized-backward",
        }
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(SelectionMethod::Individual),
            "common" => Ok(SelectionMethod::Common),
            "linearized-forward" => Ok(SelectionMethod::LinearizedForward),
            "linearized-backward" => Ok(SelectionMethod::LinearizedBackward),
            other => Err(Error::Config(format!(
                "unknown selection method {other:?}; expected individual, common, \
                 linearized-forward or linearized-backward"
            ))),
        }
    }
}

/// One activation in a linearized selection sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStep {
    pub dim: usize,
    /// Boosting round activated for that dimension (1-based).
    pub tree_index: usize,
    pub train_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    pub truncations: Vec<usize>,
    /// Summed validation log-likelihood of the selected joint model.
    pub valid_ll_at_choice: f64,
    /// Activation order for linearized methods, with per-step train deltas.
    pub linearization: Option<Vec<LinearStep>>,
}

/// Truncate each dimension independently at its best validation round;
/// ties break toward fewer trees.
pub fn select_individual(traces: &[SelectionTrace]) -> SelectionResult {
    let mut truncations = Vec::with_capacity(traces.len());
    let mut total = 0.0;
    for trace in traces {
        let (best_t, best_ll) = argmax_first(&trace.valid_ll);
        truncations.push(best_t);
        total += best_ll;
    }
    SelectionResult {
        method: SelectionMethod::Individual,
        truncations,
        valid_ll_at_choice: total,
        linearization: None,
    }
}

/// One common truncation for all dimensions, maximizing the summed
/// validation log-likelihood. Requires every dimension trained to the same
/// number of rounds.
pub fn select_common(traces: &[SelectionTrace]) -> Result<SelectionResult> {
    let rounds = traces[0].fitted_rounds();
    if traces.iter().any(|t| t.fitted_rounds() != rounds) {
        return Err(Error::Incompatible(
            "common selection requires all dimensions trained to the same number of rounds; \
             disable early exit"
                .into(),
        ));
    }
    let sums: Vec<f64> = (0..=rounds)
        .map(|t| traces.iter().map(|tr| tr.valid_ll[t]).sum())
        .collect();
    let (best_t, best_ll) = argmax_first(&sums);
    Ok(SelectionResult {
        method: SelectionMethod::Common,
        truncations: vec![best_t; traces.len()],
        valid_ll_at_choice: best_ll,
        linearization: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearizedDirection {
    Forward,
    Backward,
}

/// Greedy candidate in the linearization heaps: ordered by train delta with
/// ties broken toward the lower dimension index.
#[derive(Debug, Clone, Copy)]
struct HeapItem {
    delta: f64,
    dim: usize,
    tree_index: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // Max-heap pops the largest delta; on equal deltas the lower dim wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.delta
            .total_cmp(&other.delta)
            .then_with(|| other.dim.cmp(&self.dim))
    }
}

/// Order all trees into one sequence by train-likelihood increment (within a
/// dimension trees keep their boosting order) and truncate the sequence at
/// the step with the best validation log-likelihood; ties break toward the
/// shorter sequence.
pub fn select_linearized(
    traces: &[SelectionTrace],
    direction: LinearizedDirection,
) -> SelectionResult {
    let d = traces.len();
    let steps = match direction {
        LinearizedDirection::Forward => forward_order(traces),
        LinearizedDirection::Backward => backward_order(traces),
    };

    // Validation likelihood along the sequence: activating round t of dim d
    // moves that dimension's contribution from valid_ll[t-1] to valid_ll[t].
    let mut active = vec![0usize; d];
    let mut ll: f64 = traces.iter().map(|t| t.valid_ll[0]).sum();
    let mut best_ll = ll;
    let mut best_s = 0usize;
    for (s, step) in steps.iter().enumerate() {
        active[step.dim] += 1;
        debug_assert_eq!(active[step.dim], step.tree_index);
        ll += traces[step.dim].valid_delta(step.tree_index);
        if ll > best_ll {
            best_ll = ll;
            best_s = s + 1;
        }
    }

    let mut truncations = vec![0usize; d];
    for step in &steps[..best_s] {
        truncations[step.dim] += 1;
    }
    SelectionResult {
        method: match direction {
            LinearizedDirection::Forward => SelectionMethod::LinearizedForward,
            LinearizedDirection::Backward => SelectionMethod::LinearizedBackward,
        },
        truncations,
        valid_ll_at_choice: best_ll,
        linearization: Some(steps),
    }
}

/// Forward greedy: repeatedly activate the head-of-queue tree with the
/// largest train increment.
fn forward_order(traces: &[SelectionTrace]) -> Vec<LinearStep> {
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
    for (dim, trace) in traces.iter().enumerate() {
        if trace.fitted_rounds() >= 1 {
            heap.push(HeapItem {
                delta: trace.train_delta(1),
                dim,
                tree_index: 1,
            });
        }
    }
    let mut steps = Vec::with_capacity(traces.iter().map(|t| t.fitted_rounds()).sum());
    while let Some(item) = heap.pop() {
        steps.push(LinearStep {
            dim: item.dim,
            tree_index: item.tree_index,
            train_delta: item.delta,
        });
        let next = item.tree_index + 1;
        if next <= traces[item.dim].fitted_rounds() {
            heap.push(HeapItem {
                delta: traces[item.dim].train_delta(next),
                dim: item.dim,
                tree_index: next,
            });
        }
    }
    steps
}

/// Backward greedy: starting from the full model, repeatedly deactivate the
/// last active tree with the smallest train decrease. The implied activation
/// order is the reverse of the removal order.
fn backward_order(traces: &[SelectionTrace]) -> Vec<LinearStep> {
    // Min-heap via Reverse on (delta, dim): pop the smallest delta, on ties
    // the lower dimension index.
    #[derive(PartialEq)]
    struct MinItem(HeapItem);
    impl Eq for MinItem {}
    impl PartialOrd for MinItem {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for MinItem {
        fn cmp(&self, other: &Self) -> Ordering {
            other
                .0
                .delta
                .total_cmp(&self.0.delta)
                .then_with(|| other.0.dim.cmp(&self.0.dim))
        }
    }

    let mut heap: BinaryHeap<MinItem> = BinaryHeap::new();
    for (dim, trace) in traces.iter().enumerate() {
        let t = trace.fitted_rounds();
        if t >= 1 {
            heap.push(MinItem(HeapItem {
                delta: trace.train_delta(t),
                dim,
                tree_index: t,
            }));
        }
    }
    let mut removed = Vec::new();
    while let Some(MinItem(item)) = heap.pop() {
        removed.push(LinearStep {
            dim: item.dim,
            tree_index: item.tree_index,
            train_delta: item.delta,
        });
        if item.tree_index > 1 {
            heap.push(MinItem(HeapItem {
                delta: traces[item.dim].train_delta(item.tree_index - 1),
                dim: item.dim,
                tree_index: item.tree_index - 1,
            }));
        }
    }
    removed.reverse();
    removed
}

/// Ties in an argmax scan break toward the smaller index.
fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best_i = 0;
    let mut best = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    (best_i, best)
}

/// Recompute every leaf value on pooled data with tree structures and
/// truncations frozen. The boosting rounds are replayed sequentially because
/// the weights at round t depend on the pooled probabilities after round
/// t - 1. A leaf no pooled row reaches keeps a zero contribution.
pub fn refit_leaves(model: &ArnModel, pooled: &BinaryDataset, cfg: &BoostConfig) -> Result<ArnModel> {
    if pooled.n_dims() != model.n_dims() {
        return Err(Error::DimensionMismatch(format!(
            "pooled data has {} dimensions, model has {}",
            pooled.n_dims(),
            model.n_dims()
        )));
    }
    let ordering = model.ordering().to_vec();
    let refitted: Vec<ConditionalModel> = model
        .conditionals()
        .par_iter()
        .enumerate()
        .map(|(pos, cond)| refit_conditional(cond, pooled, &ordering, pos, cfg))
        .collect();
    let mut meta = model.meta().clone();
    meta.selection = format!("{}+refit", meta.selection);
    ArnModel::new(ordering, refitted, meta)
}

fn refit_conditional(
    cond: &ConditionalModel,
    pooled: &BinaryDataset,
    ordering: &[usize],
    pos: usize,
    cfg: &BoostConfig,
) -> ConditionalModel {
    let (preds, targets) = pooled.prefix_view_ordered(ordering, pos);
    let n = targets.len();
    let shrinkage = cond.shrinkage();
    let mut z = vec![0.0f64; n];
    let mut probs = vec![0.5f64; n];
    let mut new_trees = Vec::with_capacity(cond.fitted_rounds());
    for tree in cond.trees() {
        for (p, &zi) in probs.iter_mut().zip(&z) {
            *p = sigmoid(zi);
        }
        let fw = FitWeights::from_probabilities(targets, &probs, cfg.prob_clamp);
        let mut sums = vec![(0.0f64, 0.0f64); tree.nodes().len()];
        let mut leaf_of_row = Vec::with_capacity(n);
        for i in 0..n {
            let leaf = tree.leaf_index_at(&preds, i);
            leaf_of_row.push(leaf);
            sums[leaf].0 += fw.residuals[i];
            sums[leaf].1 += fw.weights[i];
        }
        let mut new_tree = tree.clone();
        for (idx, node) in tree.nodes().iter().enumerate() {
            if let Node::Leaf { .. } = node {
                let (s, w) = sums[idx];
                let gamma = if w > 0.0 { leaf_value(s, w, cfg.gamma_cap) } else { 0.0 };
                new_tree.set_leaf(idx, gamma);
            }
        }
        for (i, zi) in z.iter_mut().enumerate() {
            if let Node::Leaf { gamma } = new_tree.nodes()[leaf_of_row[i]] {
                *zi += shrinkage * gamma;
            }
        }
        new_trees.push(new_tree);
    }
    ConditionalModel::from_parts(pos, new_trees, shrinkage, cond.truncation())
}
