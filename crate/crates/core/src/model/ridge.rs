//! Ridge-regularized least-squares classifier on +/-1-coded labels.
//!
//! Minimizes (1/n) * ||Xw + b - y~||^2 + lambda * ||w||^2 with the bias
//! unpenalized, where y~ maps {0, 1} to {-1, +1}. The data term is a mean,
//! so duplicating every row leaves the solution unchanged. Solved by the
//! normal equations on the bias-augmented system via Cholesky; prediction
//! thresholds the margin at 0.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{HyperParams, ModelKind, ModelParams, TrainedModel, MODEL_VERSION};
use crate::error::{Error, Result};

pub fn train_ridge(
    x: &[Vec<f64>],
    y: &[u8],
    lambda: f64,
    manifest_fingerprint: &str,
    seed: u64,
) -> Result<TrainedModel> {
    let d = super::validate_training_input(x, y)?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Argument(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    let n = x.len();

    // Augmented normal equations for the mean-loss objective:
    // [X^T X + n*lambda*I, X^T 1; 1^T X, n] [w; b] = [X^T y~; 1^T y~].
    let mut a = DMatrix::<f64>::zeros(d + 1, d + 1);
    let mut b = DVector::<f64>::zeros(d + 1);
    for (row, &label) in x.iter().zip(y) {
        let target = if label == 1 { 1.0 } else { -1.0 };
        for i in 0..d {
            for j in i..d {
                a[(i, j)] += row[i] * row[j];
            }
            a[(i, d)] += row[i];
            b[i] += row[i] * target;
        }
        b[d] += target;
    }
    for i in 0..d {
        a[(i, i)] += n as f64 * lambda;
        for j in i + 1..d {
            a[(j, i)] = a[(i, j)];
        }
        a[(d, i)] = a[(i, d)];
    }
    a[(d, d)] = n as f64;

    let solution = Cholesky::new(a)
        .ok_or_else(|| {
            Error::Numerical(
                "normal equations are singular; use lambda > 0 to regularize".into(),
            )
        })?
        .solve(&b);

    let weights: Vec<f64> = solution.as_slice()[..d].to_vec();
    let bias = solution[d];
    Ok(TrainedModel {
        version: MODEL_VERSION.into(),
        kind: ModelKind::RidgeLinear,
        manifest_fingerprint: manifest_fingerprint.into(),
        seed,
        hyper: HyperParams::Ridge { lambda },
        params: ModelParams::Linear { weights, bias },
    })
}
