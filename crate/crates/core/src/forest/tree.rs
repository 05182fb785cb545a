//! CART decision trees stored as a flat node arena.
//!
//! Every node records its cover (the training weight that reached it), which
//! path-dependent Tree SHAP needs. Samples with `x[feature] <= threshold`
//! go left.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ForestError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: f64,
    },
    Leaf {
        value: Vec<f64>,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }
}

/// A binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: Vec<f64>, cover: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value, cover }],
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Leaf output reached by `row`.
    pub fn predict(&self, row: &[f64]) -> &[f64] {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn n_outputs(&self) -> usize {
        self.nodes
            .iter()
            .find_map(|n| match n {
                Node::Leaf { value, .. } => Some(value.len()),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                _ => None,
            })
            .max()
    }

    pub fn uses_feature(&self, f: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { feature, .. } if *feature == f))
    }

    /// Cover-weighted mean leaf output, descending from the root with
    /// child-cover / parent-cover proportions.
    pub fn expected_value(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outputs()];
        fn go(t: &Tree, i: usize, w: f64, out: &mut [f64]) {
            match &t.nodes[i] {
                Node::Leaf { value, .. } => {
                    for (o, v) in out.iter_mut().zip(value) {
                        *o += w * v;
                    }
                }
                Node::Split { left, right, cover, .. } => {
                    go(t, *left, w * t.nodes[*left].cover() / cover, out);
                    go(t, *right, w * t.nodes[*right].cover() / cover, out);
                }
            }
        }
        go(self, 0, 1.0, &mut out);
        out
    }

    /// Checks structural invariants: child indices in range, finite
    /// thresholds, positive covers, uniform leaf width.
    pub fn validate(&self) -> Result<(), ForestError> {
        let width = self.n_outputs();
        for (i, n) in self.nodes.iter().enumerate() {
            if !(n.cover().is_finite() && n.cover() > 0.0) {
                return Err(ForestError::InvalidModel(format!("node {i} has cover {}", n.cover())));
            }
            match n {
                Node::Split {
                    threshold, left, right, ..
                } => {
                    if !threshold.is_finite() {
                        return Err(ForestError::InvalidModel(format!("node {i} threshold")));
                    }
                    if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(ForestError::InvalidModel(format!("node {i} children")));
                    }
                }
                Node::Leaf { value, .. } => {
                    if value.len() != width {
                        return Err(ForestError::InvalidModel(format!("leaf {i} width")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// How many features to consider at each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::Count(k) => k.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum training weight on each side of a split.
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

/// What a tree is fitted to.
pub(crate) enum Target<'a> {
    /// Gini splits, class-frequency leaves.
    Classes { y: &'a [usize], n_classes: usize },
    /// Variance-reduction splits on `residual`; leaves hold the damped
    /// Newton step `scale * sum(residual) / (sum(hessian) + l2)` at slot
    /// `output` of an `n_outputs`-wide vector.
    Gradient {
        residual: &'a [f64],
        hessian: &'a [f64],
        l2: f64,
        scale: f64,
        output: usize,
        n_outputs: usize,
    },
}

impl Target<'_> {
    fn stat_width(&self) -> usize {
        match self {
            Target::Classes { n_classes, .. } => *n_classes,
            // weighted residual sum, weighted residual square sum
            Target::Gradient { .. } => 2,
        }
    }

    fn accumulate(&self, i: usize, w: f64, stats: &mut [f64]) {
        match self {
            Target::Classes { y, .. } => stats[y[i]] += w,
            Target::Gradient { residual, .. } => {
                stats[0] += w * residual[i];
                stats[1] += w * residual[i] * residual[i];
            }
        }
    }

    /// Impurity times weight: Gini `W - sum c^2 / W` or SSE `Q - S^2 / W`.
    fn weighted_impurity(&self, stats: &[f64], w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match self {
            Target::Classes { .. } => w - stats.iter().map(|c| c * c).sum::<f64>() / w,
            Target::Gradient { .. } => (stats[1] - stats[0] * stats[0] / w).max(0.0),
        }
    }

    fn leaf_value(&self, samples: &[(usize, f64)], stats: &[f64], w: f64) -> Vec<f64> {
        match self {
            Target::Classes { .. } => stats.iter().map(|c| c / w).collect(),
            Target::Gradient {
                hessian,
                l2,
                scale,
                output,
                n_outputs,
                ..
            } => {
                let h: f64 = samples.iter().map(|&(i, sw)| sw * hessian[i]).sum();
                let mut v = vec![0.0; *n_outputs];
                v[*output] = scale * stats[0] / (h + l2);
                v
            }
        }
    }
}

struct Builder<'a, R> {
    x: &'a Matrix,
    target: Target<'a>,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

const MIN_GAIN: f64 = 1e-12;

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, samples: Vec<(usize, f64)>, depth: usize) -> usize {
        let mut stats = vec![0.0; self.target.stat_width()];
        let mut w = 0.0;
        for &(i, sw) in &samples {
            self.target.accumulate(i, sw, &mut stats);
            w += sw;
        }
        let id = self.nodes.len();
        let impurity = self.target.weighted_impurity(&stats, w);
        let min_leaf = self.params.min_samples_leaf.max(1) as f64;

        let split = if depth >= self.params.max_depth || w < 2.0 * min_leaf || impurity <= MIN_GAIN {
            None
        } else {
            self.best_split(&samples, &stats, w, impurity)
        };

        match split {
            None => {
                let value = self.target.leaf_value(&samples, &stats, w);
                self.nodes.push(Node::Leaf { value, cover: w });
                id
            }
            Some((feature, threshold)) => {
                self.nodes.push(Node::Leaf {
                    value: Vec::new(),
                    cover: w,
                });
                let (l, r): (Vec<_>, Vec<_>) = samples
                    .into_iter()
                    .partition(|&(i, _)| self.x.get(i, feature) <= threshold);
                let left = self.build(l, depth + 1);
                let right = self.build(r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    cover: w,
                };
                id
            }
        }
    }

    /// Scans features in a random order and stops after `max_features`
    /// non-constant ones have been evaluated.
    fn best_split(&mut self, samples: &[(usize, f64)], total: &[f64], w: f64, impurity: f64) -> Option<(usize, f64)> {
        let n_features = self.x.n_cols();
        let budget = self.params.max_features.resolve(n_features);
        let mut order: Vec<usize> = (0..n_features).collect();
        if budget < n_features {
            order.shuffle(self.rng);
        }
        let min_leaf = self.params.min_samples_leaf.max(1) as f64;
        let width = total.len();

        let mut best: Option<(f64, usize, f64)> = None;
        let mut evaluated = 0;
        let mut sorted: Vec<(f64, usize, f64)> = Vec::with_capacity(samples.len());
        let mut left = vec![0.0; width];
        let mut right = vec![0.0; width];
        for &f in &order {
            if evaluated >= budget {
                break;
            }
            sorted.clear();
            sorted.extend(samples.iter().map(|&(i, sw)| (self.x.get(i, f), i, sw)));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            evaluated += 1;

            left.iter_mut().for_each(|v| *v = 0.0);
            let mut wl = 0.0;
            for k in 0..sorted.len() - 1 {
                let (v, i, sw) = sorted[k];
                self.target.accumulate(i, sw, &mut left);
                wl += sw;
                let next = sorted[k + 1].0;
                if v == next {
                    continue;
                }
                let wr = w - wl;
                if wl < min_leaf || wr < min_leaf {
                    continue;
                }
                for j in 0..width {
                    right[j] = total[j] - left[j];
                }
                let gain =
                    impurity - self.target.weighted_impurity(&left, wl) - self.target.weighted_impurity(&right, wr);
                if gain > MIN_GAIN && best.is_none_or(|(g, _, _)| gain > g) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some((gain, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Fits one tree on weighted samples `(row index, weight)`.
pub(crate) fn fit_tree<R: Rng>(
    x: &Matrix,
    samples: Vec<(usize, f64)>,
    target: Target<'_>,
    params: TreeParams,
    rng: &mut R,
) -> Tree {
    let mut b = Builder {
        x,
        target,
        params,
        rng,
        nodes: Vec::new(),
    };
    b.build(samples, 0);
    Tree { nodes: b.nodes }
}

/// Fits a Gini classification tree on all rows with unit weights.
pub fn train_tree<R: Rng>(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: TreeParams,
    rng: &mut R,
) -> Result<Tree, ForestError> {
    super::check_training_data(x, y, n_classes)?;
    let samples = (0..x.n_rows()).map(|i| (i, 1.0)).collect();
    Ok(fit_tree(x, samples, Target::Classes { y, n_classes }, params, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn separable_points_give_a_stump() {
        // only feature 0 separates; feature 1 is noise
        let x = Matrix::from_rows(&[[0.1, 5.0], [0.2, 1.0], [0.8, 5.0], [0.9, 1.0]], 2);
        let y = [0, 0, 1, 1];
        let t = train_tree(&x, &y, 2, TreeParams::default(), &mut rng()).unwrap();
        assert_eq!(t.depth(), 1);
        match t.root() {
            Node::Split {
                feature,
                threshold,
                cover,
                ..
            } => {
                assert_eq!(*feature, 0);
                assert!((*threshold - 0.5).abs() < 1e-12);
                assert_eq!(*cover, 4.0);
            }
            _ => panic!("expected split"),
        }
        for i in 0..4 {
            let p = t.predict(x.row(i));
            assert_eq!(p[y[i]], 1.0);
        }
    }

    #[test]
    fn identical_labels_make_one_leaf() {
        let x = Matrix::from_rows(&[[0.1], [0.5], [0.9]], 1);
        let t = train_tree(&x, &[1, 1, 1], 3, TreeParams::default(), &mut rng()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[0.3]), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn constant_features_give_class_priors() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0], [1.0, 2.0]], 2);
        let t = train_tree(&x, &[0, 1, 1, 1], 2, TreeParams::default(), &mut rng()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[0.0, 0.0]), &[0.25, 0.75]);
    }

    #[test]
    fn respects_depth_and_leaf_limits() {
        let rows: Vec<[f64; 1]> = (0..64).map(|i| [i as f64]).collect();
        let y: Vec<usize> = (0..64).map(|i| (i / 3) % 2).collect();
        let x = Matrix::from_rows(&rows, 1);
        let p = TreeParams {
            max_depth: 3,
            min_samples_leaf: 5,
            max_features: MaxFeatures::All,
        };
        let t = train_tree(&x, &y, 2, p, &mut rng()).unwrap();
        assert!(t.depth() <= 3);
        for n in &t.nodes {
            assert!(n.cover() >= 5.0);
            if let Node::Split { left, right, cover, .. } = n {
                assert_eq!(t.nodes[*left].cover() + t.nodes[*right].cover(), *cover);
            }
        }
        t.validate().unwrap();
    }

    #[test]
    fn routing_and_expected_value() {
        let t = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                    cover: 10.0,
                },
                Node::Leaf {
                    value: vec![1.0, 0.0],
                    cover: 4.0,
                },
                Node::Leaf {
                    value: vec![0.0, 1.0],
                    cover: 6.0,
                },
            ],
        };
        assert_eq!(t.predict(&[0.2]), &[1.0, 0.0]);
        assert_eq!(t.predict(&[0.5]), &[1.0, 0.0]);
        assert_eq!(t.predict(&[0.7]), &[0.0, 1.0]);
        let e = t.expected_value();
        assert!((e[0] - 0.4).abs() < 1e-15 && (e[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sqrt_features_resolves() {
        assert_eq!(MaxFeatures::Sqrt.resolve(29), 5);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Count(100).resolve(3), 3);
    }
}
