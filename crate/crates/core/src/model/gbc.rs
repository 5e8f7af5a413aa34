//! Gradient-boosted depth-limited regression trees on the binomial log-loss.
//!
//! Stagewise boosting: each stage fits a tree to the current residuals
//! (y - sigmoid(F)) with exact greedy variance-reduction splits over sorted
//! feature values, then takes a Newton leaf step damped by the learning
//! rate. Everything is deterministic: features are scanned in ascending
//! index order and thresholds in ascending value order, with strictly-better
//! gain required to replace the incumbent, so ties resolve to the lowest
//! feature index and lowest threshold.
//!
//! Split decisions depend only on the ordering of feature values, so any
//! strictly monotone per-feature rescaling of X leaves the predicted labels
//! unchanged.

use serde::{Deserialize, Serialize};

use super::{eval_tree, HyperParams, ModelKind, ModelParams, TrainedModel, TreeNode, MODEL_VERSION};
use crate::error::{Error, Result};

/// Newton leaf steps are clamped to this magnitude so a nearly-pure leaf
/// cannot overshoot the loss minimum.
const LEAF_CLAMP: f64 = 4.0;
const HESS_EPS: f64 = 1e-12;
/// Residual impurity below count * this makes a node a leaf.
const PURITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbcHyper {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbcHyper {
    fn default() -> Self {
        GbcHyper {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 1,
        }
    }
}

impl GbcHyper {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Argument("n_trees must be >= 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Argument("max_depth must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Argument(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_leaf == 0 {
            return Err(Error::Argument("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// ln(1 + e^t), stable for large t.
fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t
    } else {
        t.exp().ln_1p()
    }
}

struct BuildNode {
    depth: usize,
    count: u32,
    sum_r: f64,
    sum_h: f64,
    sum_r2: f64,
    split: Option<(usize, f64)>,
    children: (usize, usize),
}

impl BuildNode {
    fn new(depth: usize) -> Self {
        BuildNode {
            depth,
            count: 0,
            sum_r: 0.0,
            sum_h: 0.0,
            sum_r2: 0.0,
            split: None,
            children: (0, 0),
        }
    }

    fn impurity(&self) -> f64 {
        self.sum_r2 - self.sum_r * self.sum_r / self.count as f64
    }

    fn leaf_value(&self) -> f64 {
        if self.sum_h < HESS_EPS {
            0.0
        } else {
            (self.sum_r / self.sum_h).clamp(-LEAF_CLAMP, LEAF_CLAMP)
        }
    }
}

struct SplitAcc {
    started: bool,
    last_value: f64,
    cum_count: u32,
    cum_r: f64,
}

/// Grows one regression tree on the residuals, level by level, using the
/// per-feature presorted sample order.
fn grow_tree(
    x: &[Vec<f64>],
    sorted_idx: &[Vec<u32>],
    residual: &[f64],
    hessian: &[f64],
    hyper: &GbcHyper,
) -> Vec<TreeNode> {
    let n = x.len();
    let d = sorted_idx.len();

    let mut nodes: Vec<BuildNode> = vec![BuildNode::new(0)];
    {
        let root = &mut nodes[0];
        root.count = n as u32;
        for i in 0..n {
            root.sum_r += residual[i];
            root.sum_h += hessian[i];
            root.sum_r2 += residual[i] * residual[i];
        }
    }
    let mut node_of: Vec<u32> = vec![0; n];

    let splittable = |node: &BuildNode, hyper: &GbcHyper| {
        node.depth < hyper.max_depth
            && node.count >= (2 * hyper.min_leaf) as u32
            && node.impurity() > PURITY_EPS * node.count as f64
    };

    let mut frontier: Vec<usize> = if splittable(&nodes[0], hyper) { vec![0] } else { vec![] };
    while !frontier.is_empty() {
        let mut node_slot: Vec<i32> = vec![-1; nodes.len()];
        for (slot, &nd) in frontier.iter().enumerate() {
            node_slot[nd] = slot as i32;
        }
        let mut bests: Vec<Option<(f64, usize, f64)>> = vec![None; frontier.len()];
        let mut accs: Vec<SplitAcc> = (0..frontier.len())
            .map(|_| SplitAcc {
                started: false,
                last_value: 0.0,
                cum_count: 0,
                cum_r: 0.0,
            })
            .collect();

        for f in 0..d {
            for acc in accs.iter_mut() {
                acc.started = false;
                acc.cum_count = 0;
                acc.cum_r = 0.0;
            }
            for &iu in &sorted_idx[f] {
                let i = iu as usize;
                let slot = node_slot[node_of[i] as usize];
                if slot < 0 {
                    continue;
                }
                let slot = slot as usize;
                let node = &nodes[frontier[slot]];
                let v = x[i][f];
                let acc = &mut accs[slot];
                if acc.started && v > acc.last_value {
                    let n_l = acc.cum_count;
                    let n_r = node.count - n_l;
                    if n_l >= hyper.min_leaf as u32 && n_r >= hyper.min_leaf as u32 {
                        let left = acc.cum_r;
                        let right = node.sum_r - left;
                        let gain = left * left / n_l as f64 + right * right / n_r as f64
                            - node.sum_r * node.sum_r / node.count as f64;
                        let better = match bests[slot] {
                            None => true,
                            Some((g, _, _)) => gain > g,
                        };
                        if better {
                            let mut thr = 0.5 * (acc.last_value + v);
                            if !(thr < v) {
                                thr = acc.last_value;
                            }
                            bests[slot] = Some((gain, f, thr));
                        }
                    }
                }
                acc.started = true;
                acc.last_value = v;
                acc.cum_count += 1;
                acc.cum_r += residual[i];
            }
        }

        // Materialize the chosen splits and their children.
        for (slot, &nd) in frontier.iter().enumerate() {
            if let Some((_, f, thr)) = bests[slot] {
                let depth = nodes[nd].depth + 1;
                let left = nodes.len();
                nodes.push(BuildNode::new(depth));
                let right = nodes.len();
                nodes.push(BuildNode::new(depth));
                nodes[nd].split = Some((f, thr));
                nodes[nd].children = (left, right);
            }
        }

        // Route samples to children and accumulate child statistics.
        for i in 0..n {
            let nd = node_of[i] as usize;
            if let Some((f, thr)) = nodes[nd].split {
                let (left, right) = nodes[nd].children;
                let child = if x[i][f] <= thr { left } else { right };
                node_of[i] = child as u32;
                let c = &mut nodes[child];
                c.count += 1;
                c.sum_r += residual[i];
                c.sum_h += hessian[i];
                c.sum_r2 += residual[i] * residual[i];
            }
        }

        let prev_frontier = std::mem::take(&mut frontier);
        for &nd in &prev_frontier {
            if nodes[nd].split.is_some() {
                let (left, right) = nodes[nd].children;
                if splittable(&nodes[left], hyper) {
                    frontier.push(left);
                }
                if splittable(&nodes[right], hyper) {
                    frontier.push(right);
                }
            }
        }
    }

    nodes
        .iter()
        .map(|node| match node.split {
            Some((f, thr)) => TreeNode(
                f as i64,
                thr,
                node.children.0 as i64,
                node.children.1 as i64,
                0.0,
            ),
            None => TreeNode::leaf(node.leaf_value()),
        })
        .collect()
}

/// Trains the boosted ensemble and returns the per-stage mean training
/// log-loss alongside the model.
pub fn train_gbc_with_log(
    x: &[Vec<f64>],
    y: &[u8],
    hyper: &GbcHyper,
    manifest_fingerprint: &str,
    seed: u64,
) -> Result<(TrainedModel, Vec<f64>)> {
    let d = super::validate_training_input(x, y)?;
    hyper.validate()?;
    let n = x.len();

    let p0 = y.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let init_score = (p0 / (1.0 - p0)).ln();
    let mut scores = vec![init_score; n];

    let mut sorted_idx: Vec<Vec<u32>> = Vec::with_capacity(d);
    for f in 0..d {
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_by(|&a, &b| {
            x[a as usize][f]
                .partial_cmp(&x[b as usize][f])
                .unwrap()
                .then(a.cmp(&b))
        });
        sorted_idx.push(idx);
    }

    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    let mut trees = Vec::with_capacity(hyper.n_trees);
    let mut stage_losses = Vec::with_capacity(hyper.n_trees);
    for _ in 0..hyper.n_trees {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            residual[i] = y[i] as f64 - p;
            hessian[i] = p * (1.0 - p);
        }
        let tree = grow_tree(x, &sorted_idx, &residual, &hessian, hyper);
        for i in 0..n {
            scores[i] += hyper.learning_rate * eval_tree(&tree, &x[i]);
        }
        let loss = (0..n)
            .map(|i| {
                let t = if y[i] == 1 { -scores[i] } else { scores[i] };
                softplus(t)
            })
            .sum::<f64>()
            / n as f64;
        if let Some(&prev) = stage_losses.last() {
            debug_assert!(
                loss <= prev + 1e-9,
                "training log-loss increased: {prev} -> {loss}"
            );
        }
        stage_losses.push(loss);
        trees.push(tree);
    }

    let model = TrainedModel {
        version: MODEL_VERSION.into(),
        kind: ModelKind::GradientBoostedTrees,
        manifest_fingerprint: manifest_fingerprint.into(),
        seed,
        hyper: HyperParams::Gbc(*hyper),
        params: ModelParams::Trees {
            n_features: d,
            init_score,
            learning_rate: hyper.learning_rate,
            trees,
        },
    };
    Ok((model, stage_losses))
}

pub fn train_gbc(
    x: &[Vec<f64>],
    y: &[u8],
    hyper: &GbcHyper,
    manifest_fingerprint: &str,
    seed: u64,
) -> Result<TrainedModel> {
    train_gbc_with_log(x, y, hyper, manifest_fingerprint, seed).map(|(model, _)| model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::predict;

    fn hyper(n_trees: usize, max_depth: usize, learning_rate: f64) -> GbcHyper {
        GbcHyper {
            n_trees,
            max_depth,
            learning_rate,
            min_leaf: 1,
        }
    }

    #[test]
    fn single_stump_separates_with_midpoint_threshold() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        let y = vec![0, 0, 1, 1];
        let model = train_gbc(&x, &y, &hyper(1, 1, 1.0), "fp", 0).unwrap();
        let ModelParams::Trees { trees, .. } = &model.params else {
            panic!();
        };
        assert_eq!(trees.len(), 1);
        let root = trees[0][0];
        assert_eq!(root.0, 0, "split feature");
        assert_eq!(root.1, 0.5, "midpoint threshold");
        let (labels, _) = predict(&model, &x).unwrap();
        assert_eq!(labels, y);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![0, 1, 1, 0];
        let model = train_gbc(&x, &y, &hyper(10, 2, 0.3), "fp", 0).unwrap();
        let (labels, _) = predict(&model, &x).unwrap();
        assert_eq!(labels, y, "depth-2 trees express XOR");

        // Depth-1 stumps cannot.
        let stumps = train_gbc(&x, &y, &hyper(10, 1, 0.3), "fp", 0).unwrap();
        let (labels, _) = predict(&stumps, &x).unwrap();
        assert_ne!(labels, y);
    }

    #[test]
    fn zero_trees_is_an_argument_error() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0, 1];
        assert!(train_gbc(&x, &y, &hyper(0, 1, 0.1), "fp", 0).is_err());
    }

    #[test]
    fn constant_features_give_bias_only_model() {
        let x = vec![vec![3.0, 3.0]; 6];
        let y = vec![0, 0, 0, 0, 1, 1];
        let model = train_gbc(&x, &y, &hyper(5, 3, 0.1), "fp", 0).unwrap();
        let ModelParams::Trees { trees, init_score, .. } = &model.params else {
            panic!();
        };
        for tree in trees {
            assert_eq!(tree.len(), 1);
            assert!(tree[0].is_leaf());
            // Sum of residuals around the mean is zero up to rounding.
            assert!(tree[0].4.abs() < 1e-12);
        }
        // p0 = 1/3: the bias predicts the majority class (Female).
        assert!(*init_score < 0.0);
        let (labels, _) = predict(&model, &x).unwrap();
        assert_eq!(labels, vec![0; 6]);
    }

    #[test]
    fn training_is_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 40;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] + r[1] > 0.0)).collect();
        if y.iter().all(|&v| v == y[0]) {
            return; // astronomically unlikely with this seed
        }
        let a = train_gbc(&x, &y, &hyper(20, 3, 0.2), "fp", 0).unwrap();
        let b = train_gbc(&x, &y, &hyper(20, 3, 0.2), "fp", 0).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn stage_losses_never_increase() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let n = rng.gen_range(10..50);
            let d = rng.gen_range(1..4);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            y[0] = 0;
            y[1] = 1;
            let (_, losses) =
                train_gbc_with_log(&x, &y, &hyper(30, 2, 0.5), "fp", 0).unwrap();
            for w in losses.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "loss increased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn monotone_feature_rescaling_preserves_labels() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let n = 30;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let mut y: Vec<u8> = x.iter().map(|r| u8::from(r[0] > 0.3)).collect();
        y[0] = 1 - y[0]; // some noise
        let rescaled: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![r[0].powi(3) * 2.0 + 1.0, r[1].exp()])
            .collect();
        let h = hyper(15, 3, 0.2);
        let (la, _) = predict(&train_gbc(&x, &y, &h, "fp", 0).unwrap(), &x).unwrap();
        let (lb, _) = predict(&train_gbc(&rescaled, &y, &h, "fp", 0).unwrap(), &rescaled).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let model = train_gbc(
            &x,
            &y,
            &GbcHyper {
                n_trees: 1,
                max_depth: 4,
                learning_rate: 1.0,
                min_leaf: 3,
            },
            "fp",
            0,
        )
        .unwrap();
        let ModelParams::Trees { trees, .. } = &model.params else {
            panic!();
        };
        // Count samples reaching each leaf; none may hold fewer than 3.
        let mut leaf_counts: std::collections::HashMap<usize, usize> = Default::default();
        for row in &x {
            let mut idx = 0usize;
            loop {
                let node = trees[0][idx];
                if node.is_leaf() {
                    *leaf_counts.entry(idx).or_insert(0) += 1;
                    break;
                }
                idx = if row[node.0 as usize] <= node.1 {
                    node.2 as usize
                } else {
                    node.3 as usize
                };
            }
        }
        for (_, c) in leaf_counts {
            assert!(c >= 3);
        }
    }
}
