//! Exact path-dependent Tree SHAP for trees with vector-valued leaves.

use super::ShapError;
use crate::forest::{Node, Tree};

#[derive(Debug, Clone, Copy)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
    let l = path.len();
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    });
    let lp1 = (l + 1) as f64;
    for i in (0..l).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / lp1;
        path[i].weight = zero * path[i].weight * (l - i) as f64 / lp1;
    }
}

fn unwind(path: &mut Vec<PathElem>, i: usize) {
    let l = path.len() - 1;
    let lp1 = (l + 1) as f64;
    let one = path[i].one;
    let zero = path[i].zero;
    let mut n = path[l].weight;
    for j in (0..l).rev() {
        if one != 0.0 {
            let t = path[j].weight;
            path[j].weight = n * lp1 / ((j + 1) as f64 * one);
            n = t - path[j].weight * zero * (l - j) as f64 / lp1;
        } else {
            path[j].weight = path[j].weight * lp1 / (zero * (l - j) as f64);
        }
    }
    for j in i..l {
        path[j].feature = path[j + 1].feature;
        path[j].zero = path[j + 1].zero;
        path[j].one = path[j + 1].one;
    }
    path.pop();
}

fn unwound_sum(path: &[PathElem], i: usize) -> f64 {
    let l = path.len() - 1;
    let lp1 = (l + 1) as f64;
    let one = path[i].one;
    let zero = path[i].zero;
    let mut n = path[l].weight;
    let mut total = 0.0;
    for j in (0..l).rev() {
        if one != 0.0 {
            let t = n * lp1 / ((j + 1) as f64 * one);
            total += t;
            n = path[j].weight - t * zero * (l - j) as f64 / lp1;
        } else {
            total += path[j].weight * lp1 / (zero * (l - j) as f64);
        }
    }
    total
}

struct Walk<'a> {
    tree: &'a Tree,
    row: &'a [f64],
    n_out: usize,
    phi: &'a mut [f64],
}

impl Walk<'_> {
    fn recurse(&mut self, node: usize, mut path: Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
        extend(&mut path, zero, one, feature);
        match &self.tree.nodes[node] {
            Node::Leaf { value, .. } => {
                for i in 1..path.len() {
                    let w = unwound_sum(&path, i);
                    let e = path[i];
                    let f = e.feature.expect("path element without feature");
                    let scale = w * (e.one - e.zero);
                    for (k, v) in value.iter().enumerate() {
                        self.phi[f * self.n_out + k] += scale * v;
                    }
                }
            }
            Node::Split {
                feature: d,
                threshold,
                left,
                right,
                cover,
            } => {
                let (hot, cold) = if self.row[*d] <= *threshold {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                let mut iz = 1.0;
                let mut io = 1.0;
                if let Some(k) = (1..path.len()).find(|&k| path[k].feature == Some(*d)) {
                    iz = path[k].zero;
                    io = path[k].one;
                    unwind(&mut path, k);
                }
                let hot_frac = self.tree.nodes[hot].cover() / cover;
                let cold_frac = self.tree.nodes[cold].cover() / cover;
                self.recurse(hot, path.clone(), iz * hot_frac, io, Some(*d));
                self.recurse(cold, path, iz * cold_frac, 0.0, Some(*d));
            }
        }
    }
}

fn check_cover(tree: &Tree) -> Result<(), ShapError> {
    for (i, n) in tree.nodes.iter().enumerate() {
        let c = n.cover();
        if !(c.is_finite() && c > 0.0) {
            return Err(ShapError::MissingCover { node: i });
        }
    }
    Ok(())
}

/// Attributions for every output of `tree`, laid out `[feature][output]`
/// in a flat vector of length `n_features * n_outputs`. Their sum per
/// output plus `tree.expected_value()` equals the leaf reached by `row`.
pub fn tree_shap(tree: &Tree, row: &[f64]) -> Result<Vec<f64>, ShapError> {
    let mut phi = vec![0.0; row.len() * tree.n_outputs()];
    tree_shap_into(tree, row, &mut phi)?;
    Ok(phi)
}

/// Accumulates attributions into `phi` (same layout as [`tree_shap`]).
pub fn tree_shap_into(tree: &Tree, row: &[f64], phi: &mut [f64]) -> Result<(), ShapError> {
    check_cover(tree)?;
    let n_out = tree.n_outputs();
    if let Some(m) = tree.max_feature_index() {
        if m >= row.len() {
            return Err(ShapError::SchemaMismatch {
                expected: m + 1,
                got: row.len(),
            });
        }
    }
    if phi.len() != row.len() * n_out {
        return Err(ShapError::SchemaMismatch {
            expected: row.len() * n_out,
            got: phi.len(),
        });
    }
    let mut walk = Walk { tree, row, n_out, phi };
    let depth = tree.depth();
    walk.recurse(0, Vec::with_capacity(depth + 2), 1.0, 1.0, None);
    Ok(())
}
