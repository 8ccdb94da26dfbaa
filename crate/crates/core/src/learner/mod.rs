//! Tree-ensemble learning: regression trees, boosting, forests, importance
//! measures, rank statistics, successive-halving search and metrics. Every
//! numeric type here is generic over [`Scalar`](crate::scalar::Scalar).

pub mod forest;
pub mod gbdt;
pub mod halving;
pub mod importance;
pub mod matrix;
pub mod metrics;
pub mod model_io;
pub mod stats;
pub mod tree;

pub use forest::{fit_random_forest, ForestConfig, RandomForest};
pub use gbdt::{fit_gbdt, GbdtConfig, TreeEnsemble};
pub use halving::{halving_search, HalvingConfig, LeaderboardEntry, Rung, SearchOutcome, SearchSpace};
pub use importance::{gain_importance, permutation_importance, Regressor};
pub use matrix::FeatureMatrix;
pub use metrics::{metrics, Metrics};
pub use model_io::{ensemble_from_json, ensemble_to_json};
pub use stats::{pearson, skewness, spearman, weighted_skewness};
pub use tree::{fit_tree, Direction, TreeConfig, TreeNode};
