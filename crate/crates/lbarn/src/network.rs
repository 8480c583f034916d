//! Assembly of per-dimension conditionals into an exact joint distribution:
//! likelihood evaluation, ancestral sampling, prefix-conditional imputation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::booster::{BoostConfig, ConditionalModel};
use crate::data::BinaryDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Boosted,
    SingleTreeBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub kind: ModelKind,
    /// Hyperparameters the model was trained with.
    pub config: BoostConfig,
    /// Smoothing pseudocount (single-tree baseline only).
    pub pseudocount: Option<f64>,
    pub dataset: Option<String>,
    /// Selection method name, or "baseline" for single-tree networks.
    pub selection: String,
    /// Summed validation log-likelihood of the selected joint model.
    pub selection_valid_ll: Option<f64>,
    /// How the ordering was chosen (natural, explicit, entropy-...).
    pub ordering_mode: String,
    /// Seed for seeded steps (candidate subsampling in entropy orderings).
    pub seed: u64,
    pub tool_version: String,
}

impl ModelMeta {
    pub fn new(kind: ModelKind, config: BoostConfig, selection: impl Into<String>) -> Self {
        Self {
            kind,
            config,
            pseudocount: None,
            dataset: None,
            selection: selection.into(),
            selection_valid_ll: None,
            ordering_mode: "natural".to_string(),
            seed: 0,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// A joint distribution over binary vectors: a permutation of the original
/// columns plus one conditional model per position. Position `k` models
/// column `ordering[k]` given the permuted prefix. Datasets stay in original
/// column order and are permuted at access time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArnModel {
    ordering: Vec<usize>,
    conditionals: Vec<ConditionalModel>,
    meta: ModelMeta,
}

impl ArnModel {
    pub fn new(
        ordering: Vec<usize>,
        conditionals: Vec<ConditionalModel>,
        meta: ModelMeta,
    ) -> Result<Self> {
        let model = Self {
            ordering,
            conditionals,
            meta,
        };
        model.validate()?;
        Ok(model)
    }

    /// Structural invariants: the ordering is a permutation, every position
    /// has a conditional, truncations stay within fitted rounds and each
    /// tree only references predictors inside its prefix. Also run on models
    /// read back from disk.
    pub fn validate(&self) -> Result<()> {
        let d = self.ordering.len();
        if d == 0 {
            return Err(Error::Incompatible("model must cover at least one dimension".into()));
        }
        let mut seen = vec![false; d];
        for &c in &self.ordering {
            if c >= d || seen[c] {
                return Err(Error::Incompatible(format!(
                    "ordering is not a permutation of 0..{d}"
                )));
            }
            seen[c] = true;
        }
        if self.conditionals.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{} conditionals for {} dimensions",
                self.conditionals.len(),
                d
            )));
        }
        for (k, cond) in self.conditionals.iter().enumerate() {
            if cond.truncation() > cond.fitted_rounds() {
                return Err(Error::Internal(format!(
                    "position {k}: truncation beyond fitted rounds"
                )));
            }
            for tree in cond.trees() {
                if let Some(v) = tree.max_split_var() {
                    if v >= k {
                        return Err(Error::Internal(format!(
                            "position {k}: tree references predictor {v} outside its prefix"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_dims(&self) -> usize {
        self.ordering.len()
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn conditionals(&self) -> &[ConditionalModel] {
        &self.conditionals
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut ModelMeta {
        &mut self.meta
    }

    pub fn truncations(&self) -> Vec<usize> {
        self.conditionals.iter().map(|c| c.truncation()).collect()
    }

    pub fn set_truncations(&mut self, truncations: &[usize]) {
        assert_eq!(truncations.len(), self.conditionals.len());
        for (cond, &t) in self.conditionals.iter_mut().zip(truncations) {
            cond.set_truncation(t);
        }
    }

    /// Exact log-likelihood of one row: the sum of conditional log-probs
    /// along the ordering, each evaluated at its active truncation.
    pub fn joint_log_likelihood(&self, row: &[u8]) -> f64 {
        assert_eq!(
            row.len(),
            self.n_dims(),
            "row length {} does not match model dimension {}",
            row.len(),
            self.n_dims()
        );
        let mut prefix = Vec::with_capacity(self.n_dims());
        let mut total = 0.0;
        for (k, cond) in self.conditionals.iter().enumerate() {
            let bit = row[self.ordering[k]];
            total += cond.log_prob(&prefix, bit);
            prefix.push(bit);
        }
        total
    }

    /// Ancestral sampling: draw each position from its conditional given the
    /// already-drawn prefix. Deterministic given the seed and independent of
    /// any global RNG state; row `i` uses its own derived stream.
    pub fn sample(&self, seed: u64, count: usize) -> BinaryDataset {
        assert!(count >= 1);
        let rows: Vec<Vec<u8>> = (0..count)
            .map(|i| self.sample_row(&mut row_rng(seed, i)))
            .collect();
        BinaryDataset::from_rows(&rows).expect("sampled rows are well-formed")
    }

    fn sample_row(&self, rng: &mut ChaCha8Rng) -> Vec<u8> {
        let d = self.n_dims();
        let mut prefix = Vec::with_capacity(d);
        let mut row = vec![0u8; d];
        for (k, cond) in self.conditionals.iter().enumerate() {
            let p = cond.prob(&prefix);
            let bit = (rng.random::<f64>() < p) as u8;
            row[self.ordering[k]] = bit;
            prefix.push(bit);
        }
        row
    }

    /// Complete a partially observed vector. The observed positions must be
    /// exactly the first `m` positions of the model ordering for some `m`;
    /// the missing suffix is then sampled ancestrally conditioned on them.
    pub fn impute(
        &self,
        partial: &[Option<u8>],
        seed: u64,
        n_samples: usize,
    ) -> Result<Vec<Vec<u8>>> {
        if partial.len() != self.n_dims() {
            return Err(Error::DimensionMismatch(format!(
                "partial vector has {} entries, model has {} dimensions",
                partial.len(),
                self.n_dims()
            )));
        }
        let n_observed = partial.iter().filter(|v| v.is_some()).count();
        for (k, &col) in self.ordering.iter().enumerate() {
            let observed = partial[col].is_some();
            if observed != (k < n_observed) {
                return Err(Error::Incompatible(
                    "observed variables must occupy a prefix of the model ordering; \
                     train a model whose ordering lists the observed variables first \
                     (for example via an explicit ordering file)"
                        .into(),
                ));
            }
        }

        let mut observed_prefix = Vec::with_capacity(n_observed);
        for k in 0..n_observed {
            observed_prefix.push(partial[self.ordering[k]].unwrap());
        }

        let out = (0..n_samples)
            .map(|i| {
                let mut rng = row_rng(seed, i);
                let mut prefix = observed_prefix.clone();
                let mut row = vec![0u8; self.n_dims()];
                for (k, &col) in self.ordering.iter().enumerate() {
                    if k < n_observed {
                        row[col] = prefix[k];
                        continue;
                    }
                    let p = self.conditionals[k].prob(&prefix);
                    let bit = (rng.random::<f64>() < p) as u8;
                    row[col] = bit;
                    prefix.push(bit);
                }
                row
            })
            .collect();
        Ok(out)
    }

    /// Entry `k` is the average over the dataset of the summed log-probs of
    /// the first `k + 1` positions of the ordering; the last entry equals
    /// the average joint log-likelihood.
    pub fn cumulative_log_likelihood(&self, ds: &BinaryDataset) -> Vec<f64> {
        assert_eq!(ds.n_dims(), self.n_dims());
        let d = self.n_dims();
        let n = ds.n_samples();
        let mut sums = vec![0.0f64; d];
        let mut prefix = Vec::with_capacity(d);
        for r in 0..n {
            prefix.clear();
            let mut acc = 0.0;
            for (k, cond) in self.conditionals.iter().enumerate() {
                let bit = ds.get(r, self.ordering[k]);
                acc += cond.log_prob(&prefix, bit);
                sums[k] += acc;
                prefix.push(bit);
            }
        }
        sums.iter().map(|s| s / n as f64).collect()
    }

    /// Mean per-sample log-likelihood with its standard error
    /// (sample standard deviation over sqrt N).
    pub fn evaluate(&self, ds: &BinaryDataset) -> EvalSummary {
        let per_sample: Vec<f64> = (0..ds.n_samples())
            .map(|r| self.joint_log_likelihood(&ds.row(r)))
            .collect();
        EvalSummary::from_samples(per_sample)
    }
}

/// Independent RNG stream for one sampled row: same seed, per-row stream id.
fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64 + 1);
    rng
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub per_sample: Vec<f64>,
}

impl EvalSummary {
    pub fn from_samples(per_sample: Vec<f64>) -> Self {
        let n = per_sample.len();
        assert!(n > 0);
        let mean = per_sample.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = per_sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            n_samples: n,
            per_sample,
        }
    }
}
