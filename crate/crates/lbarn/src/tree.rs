//! Regression-tree base learner for boosting, fit by greedy maximization of
//! the weighted least-squares objective, and the single probability
//! estimation tree used as a baseline.
//!
//! Predictors are binary, so each region admits at most one useful split per
//! variable and split evaluation is a single scan of each predictor column
//! with residual/weight accumulators (no sorting).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Any strictly positive gain is accepted; ties between (region, variable)
/// candidates break toward the lowest variable index, then lowest region id.
const GAIN_TOLERANCE: f64 = 0.0;

/// Per-sample pseudoresiduals `y - p` and curvature weights `p (1 - p)`,
/// computed from clamped probabilities so weights stay strictly positive.
#[derive(Debug, Clone)]
pub struct FitWeights {
    pub residuals: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FitWeights {
    /// Derive residuals and weights from per-sample probabilities, clamping
    /// each probability to `[prob_clamp, 1 - prob_clamp]` first.
    pub fn from_probabilities(targets: &[u8], probs: &[f64], prob_clamp: f64) -> Self {
        assert_eq!(targets.len(), probs.len());
        let mut residuals = Vec::with_capacity(targets.len());
        let mut weights = Vec::with_capacity(targets.len());
        for (&y, &p) in targets.iter().zip(probs) {
            let p = p.clamp(prob_clamp, 1.0 - prob_clamp);
            residuals.push(y as f64 - p);
            weights.push(p * (1.0 - p));
        }
        Self { residuals, weights }
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// Weighted least-squares objective of a region: `(sum of residuals)^2 /
/// (sum of weights)`. An empty region scores 0.
pub fn region_objective(residual_sum: f64, weight_sum: f64) -> f64 {
    if weight_sum <= 0.0 {
        0.0
    } else {
        residual_sum * residual_sum / weight_sum
    }
}

/// Newton-step leaf value, clamped to `[-gamma_cap, gamma_cap]`.
pub fn leaf_value(residual_sum: f64, weight_sum: f64, gamma_cap: f64) -> f64 {
    (residual_sum / weight_sum).clamp(-gamma_cap, gamma_cap)
}

/// Gain of splitting the sample set `rows` on a binary predictor column:
/// `obj(R & {x=0}) + obj(R & {x=1}) - obj(R)`.
pub fn split_gain(rows: &[u32], column: &[u8], fw: &FitWeights) -> f64 {
    let mut s = 0.0;
    let mut w = 0.0;
    let mut s1 = 0.0;
    let mut w1 = 0.0;
    for &r in rows {
        let r = r as usize;
        let bit = column[r] as f64;
        s += fw.residuals[r];
        w += fw.weights[r];
        s1 += fw.residuals[r] * bit;
        w1 += fw.weights[r] * bit;
    }
    region_objective(s - s1, w - w1) + region_objective(s1, w1) - region_objective(s, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Internal split on a predictor index: bit 0 routes left, bit 1 right.
    Split { var: usize, left: usize, right: usize },
    Leaf { gamma: f64 },
}

/// A fitted tree with nodes stored in pre-order (root at index 0) and
/// explicit child indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_leaves: usize,
    /// Objective improvement accrued per predictor index over all accepted
    /// splits of this tree.
    gain_per_var: BTreeMap<usize, f64>,
}

impl RegressionTree {
    pub fn single_leaf(gamma: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { gamma }],
            n_leaves: 1,
            gain_per_var: BTreeMap::new(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn gain_per_var(&self) -> &BTreeMap<usize, f64> {
        &self.gain_per_var
    }

    pub fn total_gain(&self) -> f64 {
        self.gain_per_var.values().sum()
    }

    /// Largest predictor index referenced by any split, if the tree splits.
    pub fn max_split_var(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { var, .. } => Some(*var),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Route a prefix through the splits and return the reached leaf value.
    pub fn predict(&self, x_prefix: &[u8]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { gamma } => return *gamma,
                Node::Split { var, left, right } => {
                    idx = if x_prefix[*var] == 1 { *right } else { *left };
                }
            }
        }
    }

    /// Index of the leaf node reached by a prefix.
    pub fn leaf_index(&self, x_prefix: &[u8]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { .. } => return idx,
                Node::Split { var, left, right } => {
                    idx = if x_prefix[*var] == 1 { *right } else { *left };
                }
            }
        }
    }

    /// [`Self::predict`] against column-major predictor storage: the prefix
    /// is `columns[var][row]` for each split variable.
    pub fn predict_at(&self, columns: &[&[u8]], row: usize) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { gamma } => return *gamma,
                Node::Split { var, left, right } => {
                    idx = if columns[*var][row] == 1 { *right } else { *left };
                }
            }
        }
    }

    /// [`Self::leaf_index`] against column-major predictor storage.
    pub fn leaf_index_at(&self, columns: &[&[u8]], row: usize) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { .. } => return idx,
                Node::Split { var, left, right } => {
                    idx = if columns[*var][row] == 1 { *right } else { *left };
                }
            }
        }
    }

    /// Replace the value of the leaf at node index `idx`.
    pub fn set_leaf(&mut self, idx: usize, gamma: f64) {
        match &mut self.nodes[idx] {
            Node::Leaf { gamma: g } => *g = gamma,
            Node::Split { .. } => panic!("node {idx} is not a leaf"),
        }
    }
}

struct GrowRegion {
    rows: Vec<u32>,
    sum_r: f64,
    sum_w: f64,
    path_vars: Vec<usize>,
    best: Option<(f64, usize)>,
}

enum GrowNode {
    Open(GrowRegion),
    Split { var: usize, left: usize, right: usize },
}

/// Fit a tree with at most `max_leaves` leaves to the given residuals and
/// weights. Growth is greedy over all (region, variable) candidates and stops
/// early when no candidate has positive gain or every candidate would leave a
/// child below `min_leaf_weight`. With zero predictor columns the result is a
/// single intercept leaf.
pub fn fit_tree(
    predictors: &[&[u8]],
    fw: &FitWeights,
    max_leaves: usize,
    min_leaf_weight: f64,
    gamma_cap: f64,
) -> RegressionTree {
    assert!(max_leaves >= 1);
    let n = fw.len();
    assert!(n > 0, "cannot fit a tree to zero samples");
    let rows: Vec<u32> = (0..n as u32).collect();
    let sum_r: f64 = fw.residuals.iter().sum();
    let sum_w: f64 = fw.weights.iter().sum();
    let obj = region_objective(sum_r, sum_w);

    let root = GrowRegion {
        best: best_split(&rows, predictors, fw, &[], sum_r, sum_w, obj, min_leaf_weight),
        rows,
        sum_r,
        sum_w,
        path_vars: Vec::new(),
    };
    let mut nodes: Vec<GrowNode> = vec![GrowNode::Open(root)];
    let mut open: Vec<usize> = vec![0];
    let mut gain_per_var: BTreeMap<usize, f64> = BTreeMap::new();
    let mut n_leaves = 1;

    while n_leaves < max_leaves {
        // Global best candidate: gain desc, then var asc, then region id asc.
        let mut pick: Option<(f64, usize, usize)> = None;
        for &id in &open {
            let GrowNode::Open(region) = &nodes[id] else { unreachable!() };
            if let Some((gain, var)) = region.best {
                let better = match pick {
                    None => true,
                    Some((pg, pv, _)) => gain > pg || (gain == pg && var < pv),
                };
                if better {
                    pick = Some((gain, var, id));
                }
            }
        }
        let Some((gain, var, id)) = pick else { break };

        let GrowNode::Open(region) = std::mem::replace(
            &mut nodes[id],
            GrowNode::Split { var, left: 0, right: 0 },
        ) else {
            unreachable!()
        };
        let column = predictors[var];
        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        let mut s1 = 0.0;
        let mut w1 = 0.0;
        for &r in &region.rows {
            if column[r as usize] == 1 {
                s1 += fw.residuals[r as usize];
                w1 += fw.weights[r as usize];
                right_rows.push(r);
            } else {
                left_rows.push(r);
            }
        }
        let mut child_path = region.path_vars.clone();
        child_path.push(var);
        let children = [
            (left_rows, region.sum_r - s1, region.sum_w - w1),
            (right_rows, s1, w1),
        ];
        let mut child_ids = [0usize; 2];
        for (slot, (rows, cr, cw)) in child_ids.iter_mut().zip(children) {
            let obj = region_objective(cr, cw);
            let child = GrowRegion {
                best: best_split(&rows, predictors, fw, &child_path, cr, cw, obj, min_leaf_weight),
                rows,
                sum_r: cr,
                sum_w: cw,
                path_vars: child_path.clone(),
            };
            *slot = nodes.len();
            nodes.push(GrowNode::Open(child));
        }
        nodes[id] = GrowNode::Split {
            var,
            left: child_ids[0],
            right: child_ids[1],
        };
        open.retain(|&x| x != id);
        open.extend_from_slice(&child_ids);
        *gain_per_var.entry(var).or_insert(0.0) += gain;
        n_leaves += 1;
    }

    let mut out = Vec::with_capacity(nodes.len());
    preorder(&nodes, 0, gamma_cap, &mut out);
    RegressionTree {
        nodes: out,
        n_leaves,
        gain_per_var,
    }
}

/// Best (gain, var) candidate for a region, or None when no variable yields
/// a strictly positive gain with both children at or above `min_leaf_weight`.
#[allow(clippy::too_many_arguments)]
fn best_split(
    rows: &[u32],
    predictors: &[&[u8]],
    fw: &FitWeights,
    path_vars: &[usize],
    sum_r: f64,
    sum_w: f64,
    obj: f64,
    min_leaf_weight: f64,
) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (var, column) in predictors.iter().enumerate() {
        if path_vars.contains(&var) {
            continue;
        }
        let mut s1 = 0.0;
        let mut w1 = 0.0;
        for &r in rows {
            let r = r as usize;
            let bit = column[r] as f64;
            s1 += fw.residuals[r] * bit;
            w1 += fw.weights[r] * bit;
        }
        let w0 = sum_w - w1;
        if w0 < min_leaf_weight || w1 < min_leaf_weight {
            continue;
        }
        let gain = region_objective(sum_r - s1, w0) + region_objective(s1, w1) - obj;
        if gain > GAIN_TOLERANCE && best.is_none_or(|(bg, _)| gain > bg) {
            best = Some((gain, var));
        }
    }
    best
}

fn preorder(nodes: &[GrowNode], id: usize, gamma_cap: f64, out: &mut Vec<Node>) -> usize {
    let my = out.len();
    match &nodes[id] {
        GrowNode::Open(region) => {
            out.push(Node::Leaf {
                gamma: leaf_value(region.sum_r, region.sum_w, gamma_cap),
            });
        }
        GrowNode::Split { var, left, right } => {
            out.push(Node::Split {
                var: *var,
                left: 0,
                right: 0,
            });
            let l = preorder(nodes, *left, gamma_cap, out);
            let r = preorder(nodes, *right, gamma_cap, out);
            out[my] = Node::Split {
                var: *var,
                left: l,
                right: r,
            };
        }
    }
    my
}

// ---------------------------------------------------------------------------
// Single probability estimation tree (baseline)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProbNode {
    Split { var: usize, left: usize, right: usize },
    Leaf { prob: f64 },
}

/// Classification-style tree with pseudocount-smoothed leaf probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTree {
    nodes: Vec<ProbNode>,
    n_leaves: usize,
}

impl ProbabilityTree {
    pub fn nodes(&self) -> &[ProbNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn predict_prob(&self, x_prefix: &[u8]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                ProbNode::Leaf { prob } => return *prob,
                ProbNode::Split { var, left, right } => {
                    idx = if x_prefix[*var] == 1 { *right } else { *left };
                }
            }
        }
    }

    /// Equivalent log-odds tree: a single-tree conditional becomes one
    /// unshrunken boosting stage with `gamma = ln(p / (1 - p))`. Smoothed
    /// probabilities are strictly inside (0, 1), so every value is finite.
    pub fn to_log_odds_tree(&self) -> RegressionTree {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                ProbNode::Split { var, left, right } => Node::Split {
                    var: *var,
                    left: *left,
                    right: *right,
                },
                ProbNode::Leaf { prob } => Node::Leaf {
                    gamma: (prob / (1.0 - prob)).ln(),
                },
            })
            .collect();
        RegressionTree {
            nodes,
            n_leaves: self.n_leaves,
            gain_per_var: BTreeMap::new(),
        }
    }
}

/// Smoothed Bernoulli estimate for a region with `c1` ones out of `count`.
pub fn smoothed_probability(c1: usize, count: usize, pseudocount: f64) -> f64 {
    (c1 as f64 + pseudocount) / (count as f64 + 2.0 * pseudocount)
}

fn region_nll(c1: usize, count: usize, pseudocount: f64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    let p = smoothed_probability(c1, count, pseudocount);
    let c0 = count - c1;
    -(c1 as f64 * p.ln() + c0 as f64 * (1.0 - p).ln())
}

struct ProbGrowNode {
    rows: Vec<u32>,
    c1: usize,
    count: usize,
    path_vars: Vec<usize>,
    best: Option<(f64, usize)>,
    /// Set once the node has been split: (split order starting at 1, var, left, right).
    split: Option<(usize, usize, usize, usize)>,
}

/// Full greedy growth record of a probability tree. Because greedy growth is
/// budget-agnostic, the tree for any smaller leaf budget is a prefix of the
/// recorded split sequence; this is what the baseline uses to pick the number
/// of leaves per dimension on validation data.
pub struct ProbTreeGrowth {
    nodes: Vec<ProbGrowNode>,
    n_splits: usize,
    pseudocount: f64,
}

/// Grow a probability tree greedily up to `max_leaves`, recording the split
/// order. The split criterion is the reduction in smoothed Bernoulli negative
/// log-likelihood; growth stops when no candidate reduction is positive.
pub fn grow_probability_tree(
    predictors: &[&[u8]],
    targets: &[u8],
    max_leaves: usize,
    pseudocount: f64,
) -> ProbTreeGrowth {
    assert!(max_leaves >= 1);
    assert!(pseudocount > 0.0);
    let n = targets.len();
    assert!(n > 0);
    let rows: Vec<u32> = (0..n as u32).collect();
    let c1 = targets.iter().map(|&y| y as usize).sum();
    let root = ProbGrowNode {
        best: best_prob_split(&rows, predictors, targets, &[], c1, n, pseudocount),
        rows,
        c1,
        count: n,
        path_vars: Vec::new(),
        split: None,
    };
    let mut nodes = vec![root];
    let mut open: Vec<usize> = vec![0];
    let mut n_splits = 0;
    let mut n_leaves = 1;

    while n_leaves < max_leaves {
        let mut pick: Option<(f64, usize, usize)> = None;
        for &id in &open {
            if let Some((red, var)) = nodes[id].best {
                let better = match pick {
                    None => true,
                    Some((pr, pv, _)) => red > pr || (red == pr && var < pv),
                };
                if better {
                    pick = Some((red, var, id));
                }
            }
        }
        let Some((_, var, id)) = pick else { break };

        let column = predictors[var];
        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        let mut c1_right = 0usize;
        for &r in &nodes[id].rows {
            if column[r as usize] == 1 {
                c1_right += targets[r as usize] as usize;
                right_rows.push(r);
            } else {
                left_rows.push(r);
            }
        }
        let mut child_path = nodes[id].path_vars.clone();
        child_path.push(var);
        let c1_left = nodes[id].c1 - c1_right;
        let children = [(left_rows, c1_left), (right_rows, c1_right)];
        let mut child_ids = [0usize; 2];
        for (slot, (rows, c1)) in child_ids.iter_mut().zip(children) {
            let count = rows.len();
            let child = ProbGrowNode {
                best: best_prob_split(&rows, predictors, targets, &child_path, c1, count, pseudocount),
                rows,
                c1,
                count,
                path_vars: child_path.clone(),
                split: None,
            };
            *slot = nodes.len();
            nodes.push(child);
        }
        n_splits += 1;
        nodes[id].split = Some((n_splits, var, child_ids[0], child_ids[1]));
        open.retain(|&x| x != id);
        open.extend_from_slice(&child_ids);
        n_leaves += 1;
    }

    ProbTreeGrowth {
        nodes,
        n_splits,
        pseudocount,
    }
}

fn best_prob_split(
    rows: &[u32],
    predictors: &[&[u8]],
    targets: &[u8],
    path_vars: &[usize],
    c1: usize,
    count: usize,
    pseudocount: f64,
) -> Option<(f64, usize)> {
    if count == 0 {
        return None;
    }
    let parent_nll = region_nll(c1, count, pseudocount);
    let mut best: Option<(f64, usize)> = None;
    for (var, column) in predictors.iter().enumerate() {
        if path_vars.contains(&var) {
            continue;
        }
        let mut n_right = 0usize;
        let mut c1_right = 0usize;
        for &r in rows {
            let bit = column[r as usize] as usize;
            n_right += bit;
            c1_right += bit * targets[r as usize] as usize;
        }
        let n_left = count - n_right;
        let c1_left = c1 - c1_right;
        let reduction = parent_nll
            - region_nll(c1_left, n_left, pseudocount)
            - region_nll(c1_right, n_right, pseudocount);
        if reduction > 0.0 && best.is_none_or(|(br, _)| reduction > br) {
            best = Some((reduction, var));
        }
    }
    best
}

impl ProbTreeGrowth {
    pub fn n_splits(&self) -> usize {
        self.n_splits
    }

    /// The greedy tree after the first `n_splits` splits (`n_splits + 1` leaves).
    pub fn prefix_tree(&self, n_splits: usize) -> ProbabilityTree {
        assert!(n_splits <= self.n_splits);
        let mut nodes = Vec::new();
        self.prefix_preorder(0, n_splits, &mut nodes);
        ProbabilityTree {
            n_leaves: n_splits + 1,
            nodes,
        }
    }

    fn prefix_preorder(&self, id: usize, n_splits: usize, out: &mut Vec<ProbNode>) -> usize {
        let my = out.len();
        let node = &self.nodes[id];
        match node.split {
            Some((order, var, left, right)) if order <= n_splits => {
                out.push(ProbNode::Split { var, left: 0, right: 0 });
                let l = self.prefix_preorder(left, n_splits, out);
                let r = self.prefix_preorder(right, n_splits, out);
                out[my] = ProbNode::Split { var, left: l, right: r };
            }
            _ => {
                out.push(ProbNode::Leaf {
                    prob: smoothed_probability(node.c1, node.count, self.pseudocount),
                });
            }
        }
        my
    }

    /// Log-likelihood of held-out data under every prefix tree: entry `j`
    /// is the summed log-likelihood of the tree with `j` splits. Computed in
    /// one pass per row by accumulating the change each split causes on the
    /// row's root-to-leaf path (split orders are strictly increasing along
    /// any path).
    pub fn prefix_log_likelihoods(&self, predictors: &[&[u8]], targets: &[u8]) -> Vec<f64> {
        let log_prob = |id: usize, y: u8| -> f64 {
            let node = &self.nodes[id];
            let p = smoothed_probability(node.c1, node.count, self.pseudocount);
            if y == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        };
        let mut base = 0.0;
        let mut deltas = vec![0.0; self.n_splits + 1];
        for (row, &y) in targets.iter().enumerate() {
            base += log_prob(0, y);
            let mut cur = 0usize;
            while let Some((order, var, left, right)) = self.nodes[cur].split {
                let next = if predictors[var][row] == 1 { right } else { left };
                deltas[order] += log_prob(next, y) - log_prob(cur, y);
                cur = next;
            }
        }
        let mut out = Vec::with_capacity(self.n_splits + 1);
        let mut acc = base;
        out.push(acc);
        for delta in &deltas[1..] {
            acc += delta;
            out.push(acc);
        }
        out
    }
}

/// Fit a probability estimation tree with at most `max_leaves` leaves.
pub fn fit_probability_tree(
    predictors: &[&[u8]],
    targets: &[u8],
    max_leaves: usize,
    pseudocount: f64,
) -> ProbabilityTree {
    let growth = grow_probability_tree(predictors, targets, max_leaves, pseudocount);
    growth.prefix_tree(growth.n_splits())
}
