//! Random forest regression: bagged binary trees with axis-aligned,
//! variance-minimizing splits over a random feature subset per node.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, validate_design, EstimatorError};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfrParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; defaults to ceil(d / 3).
    pub features_per_split: Option<usize>,
    /// Resample the training set with replacement per tree.
    pub bootstrap: bool,
}

impl Default for RfrParams {
    fn default() -> Self {
        RfrParams {
            trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub input_dim: usize,
    pub params: RfrParams,
    pub seed: u64,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Mean of the per-tree predictions.
    pub fn predict(&self, x: &[f64]) -> Result<f64, EstimatorError> {
        check_dim(self.input_dim, x.len())?;
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a RfrParams,
    features_per_split: usize,
    dim: usize,
    nodes: Vec<TreeNode>,
    scratch_features: Vec<usize>,
}

impl<'a> TreeBuilder<'a> {
    fn leaf(&mut self, indices: &[usize]) -> usize {
        let sum: f64 = indices.iter().map(|&i| self.y[i]).sum();
        self.nodes.push(TreeNode::Leaf {
            value: sum / indices.len() as f64,
            samples: indices.len(),
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, mut indices: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = indices.len();
        let min_leaf = self.params.min_samples_leaf;
        if depth >= self.params.max_depth || n < 2 * min_leaf {
            return self.leaf(&indices);
        }
        let sum: f64 = indices.iter().map(|&i| self.y[i]).sum();
        let sumsq: f64 = indices.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let sse = (sumsq - sum * sum / n as f64).max(0.0);
        if sse <= 1e-12 {
            return self.leaf(&indices);
        }

        // Candidate features for this node.
        let m = self.features_per_split.min(self.dim);
        let (candidates, _) = self.scratch_features.partial_shuffle(rng, m);
        let candidates: Vec<usize> = candidates.to_vec();

        let mut best: Option<(f64, usize, f64)> = None; // (child sse, feature, threshold)
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for &feature in &candidates {
            order.clear();
            order.extend_from_slice(&indices);
            order.sort_by(|&a, &b| {
                self.x[a][feature]
                    .partial_cmp(&self.x[b][feature])
                    .expect("finite feature values")
            });

            let mut left_sum = 0.0;
            let mut left_sumsq = 0.0;
            for p in 1..n {
                let yi = self.y[order[p - 1]];
                left_sum += yi;
                left_sumsq += yi * yi;
                if p < min_leaf || n - p < min_leaf {
                    continue;
                }
                let prev = self.x[order[p - 1]][feature];
                let next = self.x[order[p]][feature];
                if prev >= next {
                    continue;
                }
                let right_sum = sum - left_sum;
                let right_sumsq = sumsq - left_sumsq;
                let child_sse = (left_sumsq - left_sum * left_sum / p as f64).max(0.0)
                    + (right_sumsq - right_sum * right_sum / (n - p) as f64).max(0.0);
                if best.is_none_or(|(b, _, _)| child_sse < b) {
                    best = Some((child_sse, feature, 0.5 * (prev + next)));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return self.leaf(&indices);
        };

        let right: Vec<usize> = indices
            .iter()
            .copied()
            .filter(|&i| self.x[i][feature] > threshold)
            .collect();
        indices.retain(|&i| self.x[i][feature] <= threshold);

        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: 0.0,
            samples: 0,
        });
        let left_id = self.grow(indices, depth + 1, rng);
        let right_id = self.grow(right, depth + 1, rng);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left: left_id,
            right: right_id,
        };
        id
    }
}

/// Fit `params.trees` regression trees on bootstrap resamples. Per-tree
/// seeds are derived from `seed`, so the fit is reproducible and trees are
/// independent of each other.
pub fn fit_rfr(
    x: &[Vec<f64>],
    y: &[f64],
    params: &RfrParams,
    seed: u64,
) -> Result<ForestModel, EstimatorError> {
    let d = validate_design(x, y)?;
    let n = x.len();
    if params.trees == 0 {
        return Err(EstimatorError::InvalidHyperparameter(
            "forest needs at least one tree".into(),
        ));
    }
    if params.min_samples_leaf == 0 {
        return Err(EstimatorError::InvalidHyperparameter(
            "min_samples_leaf must be >= 1".into(),
        ));
    }
    if params.min_samples_leaf > n {
        return Err(EstimatorError::InvalidHyperparameter(format!(
            "min_samples_leaf ({}) exceeds the training size ({n})",
            params.min_samples_leaf
        )));
    }
    if let Some(m) = params.features_per_split {
        if m == 0 || m > d {
            return Err(EstimatorError::InvalidHyperparameter(format!(
                "features_per_split must lie in 1..={d}, got {m}"
            )));
        }
    }
    let features_per_split = params.features_per_split.unwrap_or(d.div_ceil(3));

    let mut trees = Vec::with_capacity(params.trees);
    for t in 0..params.trees {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let indices: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut builder = TreeBuilder {
            x,
            y,
            params,
            features_per_split,
            dim: d,
            nodes: Vec::new(),
            scratch_features: (0..d).collect(),
        };
        builder.grow(indices, 0, &mut rng);
        trees.push(Tree {
            nodes: builder.nodes,
        });
    }
    Ok(ForestModel {
        input_dim: d,
        params: *params,
        seed,
        trees,
    })
}
