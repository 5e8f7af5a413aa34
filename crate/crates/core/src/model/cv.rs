//! Stratified k-fold cross-validation over a hyper-parameter grid,
//! optimizing mean fold accuracy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate, predict, train_gbc, train_ridge, GbcHyper, TrainedModel};
use crate::error::{Error, Result};

/// One trainable configuration in a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainerSpec {
    Ridge { lambda: f64 },
    Gbc(GbcHyper),
}

impl TrainerSpec {
    pub fn train(
        &self,
        x: &[Vec<f64>],
        y: &[u8],
        fingerprint: &str,
        seed: u64,
    ) -> Result<TrainedModel> {
        match self {
            TrainerSpec::Ridge { lambda } => train_ridge(x, y, *lambda, fingerprint, seed),
            TrainerSpec::Gbc(hyper) => train_gbc(x, y, hyper, fingerprint, seed),
        }
    }
}

/// Default grids. The ridge grid sweeps the regularization strength; the GBC
/// grid sweeps ensemble size, tree depth, and learning rate.
pub fn default_ridge_grid() -> Vec<TrainerSpec> {
    [0.01, 0.1, 1.0, 10.0]
        .into_iter()
        .map(|lambda| TrainerSpec::Ridge { lambda })
        .collect()
}

pub fn default_gbc_grid() -> Vec<TrainerSpec> {
    let mut grid = Vec::new();
    for n_trees in [50, 200] {
        for max_depth in [2, 3, 5] {
            for learning_rate in [0.05, 0.1, 0.3] {
                grid.push(TrainerSpec::Gbc(GbcHyper {
                    n_trees,
                    max_depth,
                    learning_rate,
                    min_leaf: 1,
                }));
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub spec: TrainerSpec,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: usize,
    pub seed: u64,
    pub grid: Vec<CvPoint>,
    /// The grid point with maximal mean accuracy; ties keep the earliest.
    pub chosen: TrainerSpec,
}

/// Deterministic stratified fold assignment: per class, indices are shuffled
/// by the seed and dealt round-robin, so every fold holds both classes
/// whenever each class has at least `folds` members.
fn stratified_folds(y: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut class0: Vec<usize> = Vec::new();
    let mut class1: Vec<usize> = Vec::new();
    for (i, &label) in y.iter().enumerate() {
        if label == 1 {
            class1.push(i);
        } else {
            class0.push(i);
        }
    }
    if class0.len() < folds || class1.len() < folds {
        return Err(Error::Argument(format!(
            "stratified {folds}-fold CV needs >= {folds} users per class (got {} / {})",
            class0.len(),
            class1.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    class0.shuffle(&mut rng);
    class1.shuffle(&mut rng);
    let mut fold_of = vec![0usize; y.len()];
    for (pos, &i) in class0.iter().chain(class1.iter()).enumerate() {
        fold_of[i] = pos % folds;
    }
    Ok(fold_of)
}

/// Evaluates every grid point with stratified k-fold CV and picks the one
/// with the best mean fold accuracy.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[u8],
    folds: usize,
    grid: &[TrainerSpec],
    seed: u64,
) -> Result<CvResult> {
    super::validate_training_input(x, y)?;
    if folds < 2 {
        return Err(Error::Argument("cross-validation needs >= 2 folds".into()));
    }
    if grid.is_empty() {
        return Err(Error::Argument("empty hyper-parameter grid".into()));
    }
    let fold_of = stratified_folds(y, folds, seed)?;

    let mut points = Vec::with_capacity(grid.len());
    for spec in grid {
        let mut acc_sum = 0.0;
        for fold in 0..folds {
            let mut train_x = Vec::new();
            let mut train_y = Vec::new();
            let mut test_x = Vec::new();
            let mut test_y = Vec::new();
            for i in 0..x.len() {
                if fold_of[i] == fold {
                    test_x.push(x[i].clone());
                    test_y.push(y[i]);
                } else {
                    train_x.push(x[i].clone());
                    train_y.push(y[i]);
                }
            }
            let model = spec.train(&train_x, &train_y, "cv", seed)?;
            let (pred, _) = predict(&model, &test_x)?;
            acc_sum += evaluate(&pred, &test_y)?.accuracy;
        }
        points.push(CvPoint {
            spec: *spec,
            mean_accuracy: acc_sum / folds as f64,
        });
    }

    let mut chosen = points[0].clone();
    for p in &points[1..] {
        if p.mean_accuracy > chosen.mean_accuracy {
            chosen = p.clone();
        }
    }
    Ok(CvResult {
        folds,
        seed,
        grid: points,
        chosen: chosen.spec,
    })
}
