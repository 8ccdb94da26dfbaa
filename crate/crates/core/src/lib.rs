//! Engagement modeling for adaptive video streaming.
//!
//! Raw player event logs are cleaned and compressed into one record per
//! session; a boosted-tree "digital twin" is trained per user and its gain
//! importances become that user's sensitivity vector; a single model trained on
//! session features plus sensitivities predicts engagement, and a playback
//! simulator turns streaming-parameter changes into predicted engagement shifts.

// Range checks are negated comparisons on purpose so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engagement_model;
pub mod error;
pub mod event_store;
pub mod learner;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod synth_oracle;
pub mod twin_registry;
pub mod whatif;
pub mod workflow;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FeatureMatrix = learner::FeatureMatrix<f64>;
pub type TreeEnsemble = learner::TreeEnsemble<f64>;
pub type TreeNode = learner::TreeNode<f64>;
pub type GbdtConfig = learner::GbdtConfig<f64>;
pub type SearchSpace = learner::SearchSpace<f64>;
pub type HalvingConfig = learner::HalvingConfig<f64>;
pub type SearchOutcome = learner::SearchOutcome<f64>;
pub type RandomForest = learner::RandomForest<f64>;
pub type Metrics = learner::Metrics<f64>;

pub type FeatureMatrixF32 = learner::FeatureMatrix<f32>;
pub type TreeEnsembleF32 = learner::TreeEnsemble<f32>;
pub type GbdtConfigF32 = learner::GbdtConfig<f32>;
