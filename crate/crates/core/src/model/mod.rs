//! Binary gender classifiers over feature matrices: a ridge-regularized
//! linear model and gradient-boosted trees, with stratified cross-validation,
//! the evaluation metrics (accuracy, precision_M, precision_F), the majority
//! baseline, a unigram text baseline, and JSON model serialization.
//!
//! Labels are 0 = Female, 1 = Male; Male is the positive class in confusion
//! counts. Prediction is a pure function of (model, row) and serialization
//! round-trips scores bit-exactly.

mod cv;
mod gbc;
mod ridge;
mod text;

pub use cv::{cross_validate, default_gbc_grid, default_ridge_grid, CvPoint, CvResult, TrainerSpec};
pub use gbc::{train_gbc, train_gbc_with_log, GbcHyper};
pub use ridge::train_ridge;
pub use text::{train_unigram_baseline, unigram_text_features};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_VERSION: &str = "emojistats-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    RidgeLinear,
    GradientBoostedTrees,
    UnigramLinear,
}

/// Hyper-parameters recorded alongside the trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HyperParams {
    Ridge { lambda: f64 },
    Gbc(GbcHyper),
}

/// One node of a regression tree, serialized as the array
/// `[feature_idx, threshold, left, right, leaf_value]`. Internal nodes have
/// `feature_idx >= 0` and child indices; leaves have `feature_idx = -1` and
/// carry the leaf value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode(pub i64, pub f64, pub i64, pub i64, pub f64);

impl TreeNode {
    pub fn leaf(value: f64) -> Self {
        TreeNode(-1, 0.0, -1, -1, value)
    }

    pub fn is_leaf(&self) -> bool {
        self.0 < 0
    }
}

/// Trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Trees {
        n_features: usize,
        init_score: f64,
        learning_rate: f64,
        trees: Vec<Vec<TreeNode>>,
    },
}

/// A serializable trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: String,
    pub kind: ModelKind,
    pub manifest_fingerprint: String,
    pub seed: u64,
    pub hyper: HyperParams,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match &self.params {
            ModelParams::Linear { weights, .. } => weights.len(),
            ModelParams::Trees { n_features, .. } => *n_features,
        }
    }

    /// Raw margin for one row: positive favors Male.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Linear { weights, bias } => {
                let mut s = *bias;
                for (w, x) in weights.iter().zip(row) {
                    s += w * x;
                }
                s
            }
            ModelParams::Trees {
                init_score,
                learning_rate,
                trees,
                ..
            } => {
                let mut s = *init_score;
                for tree in trees {
                    s += learning_rate * eval_tree(tree, row);
                }
                s
            }
        }
    }
}

pub(crate) fn eval_tree(tree: &[TreeNode], row: &[f64]) -> f64 {
    let mut idx = 0usize;
    loop {
        let node = tree[idx];
        if node.is_leaf() {
            return node.4;
        }
        idx = if row[node.0 as usize] <= node.1 {
            node.2 as usize
        } else {
            node.3 as usize
        };
    }
}

/// Predicts labels and margin scores for a feature matrix. The column count
/// must match the model's recorded feature dimension.
pub fn predict(model: &TrainedModel, x: &[Vec<f64>]) -> Result<(Vec<u8>, Vec<f64>)> {
    let expected = model.n_features();
    for (i, row) in x.iter().enumerate() {
        if row.len() != expected {
            return Err(Error::Argument(format!(
                "row {i} has {} columns, model expects {expected}",
                row.len()
            )));
        }
    }
    let scores: Vec<f64> = x.iter().map(|row| model.score_row(row)).collect();
    let labels = scores.iter().map(|&s| u8::from(s > 0.0)).collect();
    Ok((labels, scores))
}

/// Evaluation report with Male as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Proportion of true males among users predicted male; absent when no
    /// user was predicted male (see `notes`).
    pub precision_m: Option<f64>,
    /// Proportion of true females among users predicted female.
    pub precision_f: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Confusion-count evaluation of predicted vs true labels.
pub fn evaluate(pred: &[u8], truth: &[u8]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} predictions vs {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Argument("cannot evaluate an empty label set".into()));
    }
    if pred.iter().chain(truth).any(|&v| v > 1) {
        return Err(Error::Argument("labels must be 0 (F) or 1 (M)".into()));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut tn = 0u64;
    let mut fn_ = 0u64;
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fn_ += 1,
            _ => unreachable!(),
        }
    }
    let total = (tp + fp + tn + fn_) as f64;
    let mut notes = Vec::new();
    let precision_m = if tp + fp > 0 {
        Some(tp as f64 / (tp + fp) as f64)
    } else {
        notes.push("precision_m undefined: no user predicted male".to_string());
        None
    };
    let precision_f = if tn + fn_ > 0 {
        Some(tn as f64 / (tn + fn_) as f64)
    } else {
        notes.push("precision_f undefined: no user predicted female".to_string());
        None
    };
    Ok(Metrics {
        accuracy: (tp + tn) as f64 / total,
        precision_m,
        precision_f,
        tp,
        fp,
        tn,
        fn_,
        notes,
    })
}

/// The majority-class baseline: accuracy is the majority share, and the
/// precision columns carry the chance precision of each predicted class,
/// i.e. the class prevalences (this is how naive per-class precision behaves
/// under majority guessing, and it keeps the triple well-defined).
pub fn majority_baseline(truth: &[u8]) -> Result<Metrics> {
    if truth.is_empty() {
        return Err(Error::Argument("cannot compute baseline on empty labels".into()));
    }
    if truth.iter().any(|&v| v > 1) {
        return Err(Error::Argument("labels must be 0 (F) or 1 (M)".into()));
    }
    let male = truth.iter().filter(|&&v| v == 1).count() as u64;
    let female = truth.len() as u64 - male;
    let total = truth.len() as f64;
    let male_share = male as f64 / total;
    let female_share = female as f64 / total;
    let (tp, fp, tn, fn_, accuracy) = if male > female {
        (male, female, 0, 0, male_share)
    } else {
        (0, 0, female, male, female_share)
    };
    Ok(Metrics {
        accuracy,
        precision_m: Some(male_share),
        precision_f: Some(female_share),
        tp,
        fp,
        tn,
        fn_,
        notes: vec![],
    })
}

/// Writes the model as a single JSON document.
pub fn save_model<W: std::io::Write>(model: &TrainedModel, mut sink: W) -> Result<()> {
    let json = serde_json::to_string(model)?;
    sink.write_all(json.as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Reads a model back, checking the format version.
pub fn load_model<R: std::io::Read>(source: R) -> Result<TrainedModel> {
    let model: TrainedModel = serde_json::from_reader(source)?;
    if model.version != MODEL_VERSION {
        return Err(Error::Data(format!(
            "model version `{}` does not match `{MODEL_VERSION}`",
            model.version
        )));
    }
    Ok(model)
}

pub(crate) fn validate_training_input(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Argument(format!(
                "row {i} has {} columns, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("row {i} contains non-finite values")));
        }
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::Argument("labels must be 0 (F) or 1 (M)".into()));
    }
    let males = y.iter().filter(|&&v| v == 1).count();
    if males == 0 || males == y.len() {
        return Err(Error::Argument(
            "training requires both classes present".into(),
        ));
    }
    Ok(d)
}
