//! Autoregressive density estimation for binary data with boosted-tree
//! conditionals.
//!
//! A joint distribution over `{0,1}^D` is factored into a product of
//! univariate conditionals along a variable ordering; each conditional is a
//! LogitBoost model (a staged sum of small regression trees on the preceding
//! bits). The crate covers dataset ingestion, per-dimension boosting, model
//! selection across the staged sequences, exact likelihood evaluation,
//! ancestral sampling and imputation, leaf refitting on pooled data,
//! split-gain variable importance, and conditional-entropy orderings.

pub mod analysis;
pub mod booster;
pub mod data;
pub mod error;
pub mod model_io;
pub mod network;
pub mod selection;
pub mod synth;
pub mod train;
pub mod tree;

pub use analysis::{
    entropy_ordering, stacked_copies, variable_importance, EntropyDirection, ImportanceReport,
    OrderingResult, ProbeConfig,
};
pub use booster::{
    boost_dimension, newton_derivative_check, BoostConfig, ConditionalModel, SelectionTrace,
};
pub use data::BinaryDataset;
pub use error::{Error, Result};
pub use model_io::{load_model, save_model, FORMAT_VERSION};
pub use network::{ArnModel, EvalSummary, ModelKind, ModelMeta};
pub use selection::{
    refit_leaves, select_common, select_individual, select_linearized, LinearizedDirection,
    SelectionMethod, SelectionResult,
};
pub use train::{
    train_arn, train_baseline, BaselineOptions, BaselineOutcome, OrderingChoice, TrainOptions,
    TrainOutcome, TrainReport,
};
