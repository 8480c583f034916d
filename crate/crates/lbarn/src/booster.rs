//! Per-dimension LogitBoost driver.
//!
//! Each dimension is fit independently: starting from log-odds zero, every
//! round computes pseudoresiduals and curvature weights from the current
//! probabilities, fits one regression tree and adds its (shrunken)
//! contribution to the cached per-row log-odds. Train and validation
//! log-likelihoods are recorded after every round so model selection can
//! later truncate the staged sequence.

use serde::{Deserialize, Serialize};

use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::tree::{fit_tree, FitWeights, RegressionTree};

/// Early exit triggers when this many consecutive rounds produce less than
/// [`EARLY_EXIT_MIN_GAIN`] of total train log-likelihood improvement.
pub const EARLY_EXIT_WINDOW: usize = 25;
pub const EARLY_EXIT_MIN_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Maximum number of boosting rounds T.
    pub rounds: usize,
    /// Leaf budget J per tree.
    pub leaves: usize,
    /// Shrinkage factor applied to every tree's contribution.
    pub shrinkage: f64,
    /// Probabilities are clamped to `[prob_clamp, 1 - prob_clamp]` before
    /// residuals and weights are computed.
    pub prob_clamp: f64,
    /// Cap on the magnitude of Newton-step leaf values.
    pub gamma_cap: f64,
    /// Minimum sum of clamped weights allowed in a child region.
    pub min_leaf_weight: f64,
    /// Stop a dimension early once train likelihood stalls. Must be disabled
    /// for runs that need all dimensions trained to exactly `rounds` trees.
    pub early_exit: bool,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            rounds: 1000,
            leaves: 8,
            shrinkage: 0.02,
            prob_clamp: 1e-5,
            gamma_cap: 4.0,
            min_leaf_weight: 1e-4,
            early_exit: true,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.leaves < 1 {
            return Err(Error::Config("leaves must be at least 1".into()));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::Config(format!(
                "shrinkage must lie in (0, 1], got {}",
                self.shrinkage
            )));
        }
        if !(self.prob_clamp > 0.0 && self.prob_clamp < 0.5) {
            return Err(Error::Config(format!(
                "probability clamp must lie in (0, 0.5), got {}",
                self.prob_clamp
            )));
        }
        if self.gamma_cap <= 0.0 {
            return Err(Error::Config("gamma cap must be positive".into()));
        }
        if self.min_leaf_weight <= 0.0 {
            return Err(Error::Config("minimum leaf weight must be positive".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// `ln sigma(z)`, evaluated without overflow for large `|z|`.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

/// Log-probability of observing `bit` under log-odds `z`.
pub fn bernoulli_log_prob(z: f64, bit: u8) -> f64 {
    if bit == 1 {
        log_sigmoid(z)
    } else {
        log_sigmoid(-z)
    }
}

/// Staged conditional distribution for one position of the ordering: an
/// ordered list of trees whose shrunken sum is the log-odds of the target
/// bit given the permuted prefix. Leaf values are stored unshrunken; the
/// shrinkage is applied at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    /// Position in the model ordering (0-based); trees reference predictor
    /// indices strictly below this position.
    dim: usize,
    trees: Vec<RegressionTree>,
    shrinkage: f64,
    /// Number of active trees; rounds beyond it are kept but unused.
    truncation: usize,
}

impl ConditionalModel {
    pub fn from_parts(
        dim: usize,
        trees: Vec<RegressionTree>,
        shrinkage: f64,
        truncation: usize,
    ) -> Self {
        assert!(truncation <= trees.len());
        debug_assert!(trees
            .iter()
            .all(|t| t.max_split_var().is_none_or(|v| v < dim)));
        Self {
            dim,
            trees,
            shrinkage,
            truncation,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn fitted_rounds(&self) -> usize {
        self.trees.len()
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn set_truncation(&mut self, t: usize) {
        assert!(t <= self.trees.len());
        self.truncation = t;
    }

    /// Log-odds of the target bit after the first `t` trees.
    pub fn log_odds_at(&self, x_prefix: &[u8], t: usize) -> f64 {
        assert!(t <= self.trees.len(), "round {} beyond fitted {}", t, self.trees.len());
        let mut z = 0.0;
        for tree in &self.trees[..t] {
            z += self.shrinkage * tree.predict(x_prefix);
        }
        z
    }

    pub fn log_odds(&self, x_prefix: &[u8]) -> f64 {
        self.log_odds_at(x_prefix, self.truncation)
    }

    /// `ln P(x_d = bit | prefix)` after the first `t` trees.
    pub fn log_prob_at(&self, x_prefix: &[u8], bit: u8, t: usize) -> f64 {
        bernoulli_log_prob(self.log_odds_at(x_prefix, t), bit)
    }

    pub fn log_prob(&self, x_prefix: &[u8], bit: u8) -> f64 {
        self.log_prob_at(x_prefix, bit, self.truncation)
    }

    /// `P(x_d = 1 | prefix)` at the active truncation.
    pub fn prob(&self, x_prefix: &[u8]) -> f64 {
        sigmoid(self.log_odds(x_prefix))
    }
}

/// Per-round train and validation log-likelihood sums for one dimension.
/// Entry `t` is the summed log-likelihood after `t` rounds; entry 0 is the
/// base model, `N ln(1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub dim: usize,
    pub train_ll: Vec<f64>,
    pub valid_ll: Vec<f64>,
}

impl SelectionTrace {
    pub fn fitted_rounds(&self) -> usize {
        self.train_ll.len() - 1
    }

    /// Train log-likelihood increment of round `t` (1-based).
    pub fn train_delta(&self, t: usize) -> f64 {
        self.train_ll[t] - self.train_ll[t - 1]
    }

    /// Validation log-likelihood increment of round `t` (1-based).
    pub fn valid_delta(&self, t: usize) -> f64 {
        self.valid_ll[t] - self.valid_ll[t - 1]
    }
}

fn summed_log_likelihood(log_odds: &[f64], targets: &[u8]) -> f64 {
    log_odds
        .iter()
        .zip(targets)
        .map(|(&z, &y)| bernoulli_log_prob(z, y))
        .sum()
}

/// Shared boosting loop over column-major predictors. Returns the fitted
/// trees, the per-round train log-likelihood (length rounds+1) and, when a
/// validation set is supplied, the matching validation trace.
pub(crate) fn boost_core(
    predictors: &[&[u8]],
    targets: &[u8],
    valid: Option<(&[&[u8]], &[u8])>,
    cfg: &BoostConfig,
) -> (Vec<RegressionTree>, Vec<f64>, Vec<f64>) {
    let n = targets.len();
    assert!(n > 0, "cannot boost on an empty training set");
    let mut z_train = vec![0.0f64; n];
    let mut z_valid = valid.map(|(_, vy)| vec![0.0f64; vy.len()]);

    let mut train_ll = Vec::with_capacity(cfg.rounds + 1);
    train_ll.push(summed_log_likelihood(&z_train, targets));
    let mut valid_ll = Vec::new();
    if let (Some(zv), Some((_, vy))) = (&z_valid, valid) {
        valid_ll.push(summed_log_likelihood(zv, vy));
    }

    let mut trees = Vec::new();
    let mut probs = vec![0.5f64; n];
    for t in 1..=cfg.rounds {
        for (p, &z) in probs.iter_mut().zip(&z_train) {
            *p = sigmoid(z);
        }
        let fw = FitWeights::from_probabilities(targets, &probs, cfg.prob_clamp);
        let tree = fit_tree(predictors, &fw, cfg.leaves, cfg.min_leaf_weight, cfg.gamma_cap);
        for (i, z) in z_train.iter_mut().enumerate() {
            *z += cfg.shrinkage * tree.predict_at(predictors, i);
        }
        train_ll.push(summed_log_likelihood(&z_train, targets));
        if let (Some(zv), Some((vp, vy))) = (&mut z_valid, valid) {
            for (i, z) in zv.iter_mut().enumerate() {
                *z += cfg.shrinkage * tree.predict_at(vp, i);
            }
            valid_ll.push(summed_log_likelihood(zv, vy));
        }
        trees.push(tree);

        if cfg.early_exit && t >= EARLY_EXIT_WINDOW {
            let window_gain = train_ll[t] - train_ll[t - EARLY_EXIT_WINDOW];
            if window_gain < EARLY_EXIT_MIN_GAIN {
                break;
            }
        }
    }
    (trees, train_ll, valid_ll)
}

/// Boost one position of the ordering on a train/validation pair. Returns
/// the full (untruncated) conditional model and its selection trace.
pub fn boost_dimension(
    train: &BinaryDataset,
    valid: &BinaryDataset,
    ordering: &[usize],
    pos: usize,
    cfg: &BoostConfig,
) -> (ConditionalModel, SelectionTrace) {
    let (train_preds, train_y) = train.prefix_view_ordered(ordering, pos);
    let (valid_preds, valid_y) = valid.prefix_view_ordered(ordering, pos);
    let (trees, train_ll, valid_ll) =
        boost_core(&train_preds, train_y, Some((&valid_preds, valid_y)), cfg);
    let truncation = trees.len();
    (
        ConditionalModel::from_parts(pos, trees, cfg.shrinkage, truncation),
        SelectionTrace {
            dim: pos,
            train_ll,
            valid_ll,
        },
    )
}

pub const DERIVATIVE_CHECK_STEP: f64 = 1e-4;
pub const DERIVATIVE_CHECK_TOLERANCE: f64 = 1e-5;

/// Comparison of analytic Bernoulli log-likelihood derivatives against
/// central finite differences of `L` as a function of a uniform log-odds
/// offset.
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub analytic_first: f64,
    pub numeric_first: f64,
    pub analytic_second: f64,
    pub numeric_second: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Check `dL/df = sum(y - p)` and `d2L/df2 = -sum p (1 - p)` at round `t` of
/// a conditional model against finite differences with the given step.
pub fn newton_derivative_check(
    model: &ConditionalModel,
    predictors: &[&[u8]],
    targets: &[u8],
    t: usize,
    step: f64,
    tolerance: f64,
) -> DerivativeReport {
    let z: Vec<f64> = (0..targets.len())
        .map(|i| {
            let prefix: Vec<u8> = predictors.iter().map(|c| c[i]).collect();
            model.log_odds_at(&prefix, t)
        })
        .collect();
    derivative_check_at(&z, targets, step, tolerance)
}

/// Same check for explicit per-sample log-odds.
pub fn derivative_check_at(
    log_odds: &[f64],
    targets: &[u8],
    step: f64,
    tolerance: f64,
) -> DerivativeReport {
    let p: Vec<f64> = log_odds.iter().map(|&z| sigmoid(z)).collect();
    let analytic_first: f64 = targets
        .iter()
        .zip(&p)
        .map(|(&y, &p)| y as f64 - p)
        .sum();
    let analytic_second: f64 = -p.iter().map(|&p| p * (1.0 - p)).sum::<f64>();

    let shifted = |delta: f64| -> f64 {
        log_odds
            .iter()
            .zip(targets)
            .map(|(&z, &y)| bernoulli_log_prob(z + delta, y))
            .sum()
    };
    let l_plus = shifted(step);
    let l_zero = shifted(0.0);
    let l_minus = shifted(-step);
    let numeric_first = (l_plus - l_minus) / (2.0 * step);
    let numeric_second = (l_plus - 2.0 * l_zero + l_minus) / (step * step);

    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(1e-12);
    let max_rel_error = rel(analytic_first, numeric_first).max(rel(analytic_second, numeric_second));
    DerivativeReport {
        analytic_first,
        numeric_first,
        analytic_second,
        numeric_second,
        max_rel_error,
        tolerance,
        passed: max_rel_error < tolerance,
    }
}
