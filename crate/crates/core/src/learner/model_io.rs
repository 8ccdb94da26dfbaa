//! Versioned JSON documents for fitted ensembles.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::gbdt::TreeEnsemble;
use super::tree::TreeNode;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "digitwise.tree-ensemble";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument<T> {
    format: String,
    version: u32,
    base_score: T,
    learning_rate: T,
    feature_names: Vec<String>,
    trees: Vec<TreeNode<T>>,
}

pub fn ensemble_to_json<T: Scalar + Serialize>(ensemble: &TreeEnsemble<T>) -> Result<String> {
    let doc = ModelDocument {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        base_score: ensemble.base_score,
        learning_rate: ensemble.learning_rate,
        feature_names: ensemble.feature_names.clone(),
        trees: ensemble.trees.clone(),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn ensemble_from_json<T: Scalar + DeserializeOwned>(json: &str) -> Result<TreeEnsemble<T>> {
    let doc: ModelDocument<T> = serde_json::from_str(json)?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::schema(format!("expected format `{MODEL_FORMAT}`, found `{}`", doc.format)));
    }
    if doc.version != MODEL_VERSION {
        return Err(Error::schema(format!("unsupported model version {}", doc.version)));
    }
    let d = doc.feature_names.len();
    if let Some(bad) = doc.trees.iter().filter_map(TreeNode::max_feature_index).find(|&f| f >= d) {
        return Err(Error::schema(format!("tree splits on feature {bad} but only {d} are named")));
    }
    Ok(TreeEnsemble {
        base_score: doc.base_score,
        learning_rate: doc.learning_rate,
        feature_names: doc.feature_names,
        trees: doc.trees,
    })
}
